// Copyright 2026 The gaitswitch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The transition tensor: outcomes of switching from motion m at source
// phase bin phi to motion n with destination phase bin omega, aggregated
// per cell and scored by quality = stability * mean consolidated outcome.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gaitswitch/dynamics.hpp"
#include "gaitswitch/gait.hpp"
#include "gaitswitch/transition.hpp"

namespace gaitswitch {

inline constexpr int kTensorFormatVersion = 1;
inline constexpr double kDefaultBeta = 0.015;

struct TransitionIndex {
  MotionId m;
  int phi_bin = 0;
  MotionId n;
  int omega_bin = 0;
};

struct TensorCell {
  int samples = 0;
  int alive = 0;
  std::vector<double> gammas;  // one per sample; dead samples are 0
  // Channel means over alive samples; eta is 1 if any sample survived.
  TransitionOutcome mean_outcome;

  double MeanGamma() const;
  double AliveFraction() const;

  void Add(const TransitionOutcome& outcome, double min_effort);

  friend bool operator==(const TensorCell&, const TensorCell&) = default;
};

struct QualityQueryResult {
  int phi_bin = 0;
  int omega_bin = 0;
  double quality = 0.0;  // score under the query's mode
  double wait_time = 0.0;  // s
};

enum class ScoreMode { kQuality, kOutcome, kStability };

struct QueryOptions {
  double horizon = 1.0;        // cycles of the source motion
  double wait_discount = 0.0;  // lambda in exp(-lambda * wait)
  double min_quality = 0.0;    // scores at or below this are not viable
  ScoreMode mode = ScoreMode::kQuality;
};

struct PopulationParams {
  int bins = 20;
  int radius = 1;  // neighborhood half-width in bins
  int trials = 5;
  double noise = 0.02;  // relative apex height and speed perturbation
  std::uint64_t seed = 42;
  double beta = kDefaultBeta;
  double min_effort = kDefaultMinEffort;
  bool allow_self = false;
  MeasurementOptions measurement;

  friend bool operator==(const PopulationParams&,
                         const PopulationParams&) = default;
};

// Per-pair B x B grids, row-major by phi bin.
struct QualityGrid {
  MotionId m;
  MotionId n;
  int bins = 0;
  std::vector<double> quality;
  std::vector<double> stability;
  std::vector<double> mean_gamma;
  std::vector<double> alive_fraction;
};

using MotionPair = std::pair<MotionId, MotionId>;

class TransitionTensor {
 public:
  TransitionTensor() = default;
  // Gaits must have measured limit cycles.
  TransitionTensor(std::vector<GaitSpec> gaits, const SimConfig& cfg,
                   const PopulationParams& params, Terrain terrain = {});

  const std::vector<GaitSpec>& gaits() const { return gaits_; }
  std::vector<MotionId> vocabulary() const;
  const SimConfig& sim_config() const { return cfg_; }
  const PopulationParams& params() const { return params_; }
  const Terrain& terrain() const { return terrain_; }
  int bins() const { return params_.bins; }
  double delta() const;
  const std::string& config_hash() const { return config_hash_; }

  // Hash as stored (possibly loaded from a file).
  void set_config_hash(std::string hash) { config_hash_ = std::move(hash); }
  // Throws Error(kConfigHashMismatch) unless the stored hash equals the
  // digest of the embedded configuration.
  void VerifyConfigHash() const;
  // Throws Error(kConfigHashMismatch) unless cfg and gaits hash to the
  // stored digest.
  void CheckConfig(const SimConfig& cfg, std::span<const GaitSpec> gaits) const;

  // Adds a gait to the vocabulary; existing cells are untouched.
  void AddGait(const GaitSpec& gait);

  std::vector<MotionPair> pairs() const;
  bool HasPair(const MotionId& m, const MotionId& n) const;
  // Creates an empty B x B slice.
  std::vector<TensorCell>& AddPair(const MotionId& m, const MotionId& n);
  const std::vector<TensorCell>& Slice(const MotionId& m,
                                       const MotionId& n) const;
  std::vector<TensorCell>& MutableSlice(const MotionId& m, const MotionId& n);

  const TensorCell& cell(const TransitionIndex& w) const;

  double MeanGamma(const TransitionIndex& w) const;
  // Throws Error(kEmptyNeighborhood) if the neighborhood holds no samples.
  double Stability(const TransitionIndex& w) const;
  double Quality(const TransitionIndex& w) const;
  QualityGrid Grid(const MotionId& m, const MotionId& n) const;

  // Best (phi, omega) reachable from phase within the horizon.
  // Throws Error(kNoViableTransition) if no cell scores above min_quality,
  // Error(kConfigHashMismatch) if the stored hash is inconsistent.
  QualityQueryResult QueryBest(const MotionId& m, double phase,
                               const MotionId& n,
                               const QueryOptions& options = {}) const;

  friend bool operator==(const TransitionTensor&, const TransitionTensor&);

 private:
  int Index(int phi_bin, int omega_bin) const;
  void CheckIndex(const TransitionIndex& w) const;
  double SliceMaxMeanGamma(const std::vector<TensorCell>& slice) const;
  double StabilityIn(const std::vector<TensorCell>& slice, int phi_bin,
                     int omega_bin, double scale) const;

  std::vector<GaitSpec> gaits_;
  SimConfig cfg_;
  PopulationParams params_;
  Terrain terrain_;
  std::string config_hash_;
  std::map<MotionPair, std::vector<TensorCell>> slices_;
};

// Phase distance from phase to the center of bin, wrapped to [0, 1); zero
// for the bin that contains phase.
double BinWaitPhase(double phase, int bin, int bins);

// Hex SHA-256 of the canonical configuration document of cfg and gaits.
std::string ConfigHash(const SimConfig& cfg, std::span<const GaitSpec> gaits);

// All ordered pairs of distinct motions.
std::vector<MotionPair> AllPairs(std::span<const MotionId> motions);

// Runs every (cell, trial) of the requested pairs. The per-trial random
// stream depends only on (seed, m, n, phi, omega, trial), so the result is
// independent of the thread count and of the other pairs.
// Throws Error(kConfigMismatch) if a gait lacks a limit cycle.
// A thread count of 0 selects the hardware concurrency.
TransitionTensor Populate(std::span<const MotionPair> pairs,
                          std::vector<GaitSpec> gaits, const SimConfig& cfg,
                          const PopulationParams& params,
                          const Terrain& terrain = {}, int threads = 0);

// Populates the pairs of a tensor that are missing from it.
void PopulatePairs(TransitionTensor& tensor, std::span<const MotionPair> pairs,
                   int threads = 0);

// Adds gait to the vocabulary and populates every pair involving it.
void ExtendTensor(TransitionTensor& tensor, const GaitSpec& gait,
                  int threads = 0);

// Initial perturbation of one trial, as relative apex height and speed noise.
std::pair<double, double> TrialNoise(std::uint64_t seed,
                                     const TransitionIndex& w, int trial,
                                     double sigma);

void SaveTensor(const TransitionTensor& tensor, const std::string& path);
// Throws Error(kCorruptFile) or Error(kVersionMismatch).
TransitionTensor LoadTensor(const std::string& path);

std::string SerializeTensor(const TransitionTensor& tensor);
TransitionTensor ParseTensor(const std::string& text);

// Columns m,n,phiBin,omegaBin,Q,psi,meanGamma,aliveFrac.
std::string QualityCsv(const QualityGrid& grid);

}  // namespace gaitswitch
