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

#include "gaitswitch/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "gaitswitch/error.hpp"

namespace gaitswitch {
namespace {

int Wrap(int b, int bins) { return ((b % bins) + bins) % bins; }

double WrapPhase(double phase) {
  phase -= std::floor(phase);
  return phase >= 1.0 ? 0.0 : phase;
}

std::vector<int> NeighborBins(int center, int radius, int bins) {
  std::vector<int> out;
  for (int d = -radius; d <= radius; ++d) {
    const int b = Wrap(center + d, bins);
    if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  }
  return out;
}

}  // namespace

double TensorCell::MeanGamma() const {
  if (gammas.empty()) return 0.0;
  double sum = 0.0;
  for (double g : gammas) sum += g;
  return sum / static_cast<double>(gammas.size());
}

double TensorCell::AliveFraction() const {
  return samples > 0 ? static_cast<double>(alive) / samples : 0.0;
}

void TensorCell::Add(const TransitionOutcome& outcome, double min_effort) {
  ++samples;
  gammas.push_back(Consolidate(outcome, min_effort));
  if (outcome.eta == 0) return;
  ++alive;
  const double k = 1.0 / alive;
  mean_outcome.eta = 1;
  mean_outcome.duration += (outcome.duration - mean_outcome.duration) * k;
  mean_outcome.effort += (outcome.effort - mean_outcome.effort) * k;
  mean_outcome.accuracy += (outcome.accuracy - mean_outcome.accuracy) * k;
}

TransitionTensor::TransitionTensor(std::vector<GaitSpec> gaits,
                                   const SimConfig& cfg,
                                   const PopulationParams& params,
                                   Terrain terrain)
    : gaits_(std::move(gaits)),
      cfg_(cfg),
      params_(params),
      terrain_(std::move(terrain)) {
  if (params_.bins < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bin count must be positive");
  }
  if (params_.radius < 1) {
    throw Error(ErrorCode::kInvalidArgument, "neighborhood radius must be >= 1");
  }
  if (!(params_.beta > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must be positive");
  }
  if (!(params_.min_effort > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "minimum effort must be positive");
  }
  for (std::size_t i = 0; i < gaits_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (gaits_[i].id == gaits_[j].id) {
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate motion " + gaits_[i].id.name);
      }
    }
  }
  config_hash_ = ConfigHash(cfg_, gaits_);
}

std::vector<MotionId> TransitionTensor::vocabulary() const {
  std::vector<MotionId> out;
  for (const GaitSpec& g : gaits_) out.push_back(g.id);
  return out;
}

double TransitionTensor::delta() const {
  return static_cast<double>(params_.radius) / params_.bins;
}

void TransitionTensor::VerifyConfigHash() const {
  if (ConfigHash(cfg_, gaits_) != config_hash_) {
    throw Error(ErrorCode::kConfigHashMismatch,
                "stored configuration digest does not match the tensor's "
                "configuration");
  }
}

void TransitionTensor::CheckConfig(const SimConfig& cfg,
                                   std::span<const GaitSpec> gaits) const {
  if (ConfigHash(cfg, gaits) != config_hash_) {
    throw Error(ErrorCode::kConfigHashMismatch,
                "tensor was populated with a different configuration");
  }
}

void TransitionTensor::AddGait(const GaitSpec& gait) {
  if (FindGait(gaits_, gait.id)) {
    throw Error(ErrorCode::kInvalidArgument,
                "motion " + gait.id.name + " already in the vocabulary");
  }
  gaits_.push_back(gait);
  config_hash_ = ConfigHash(cfg_, gaits_);
}

std::vector<MotionPair> TransitionTensor::pairs() const {
  std::vector<MotionPair> out;
  for (const auto& [pair, slice] : slices_) out.push_back(pair);
  return out;
}

bool TransitionTensor::HasPair(const MotionId& m, const MotionId& n) const {
  return slices_.contains({m, n});
}

std::vector<TensorCell>& TransitionTensor::AddPair(const MotionId& m,
                                                   const MotionId& n) {
  if (!FindGait(gaits_, m) || !FindGait(gaits_, n)) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair " + m.name + "->" + n.name + " outside the vocabulary");
  }
  if (m == n && !params_.allow_self) {
    throw Error(ErrorCode::kInvalidArgument,
                "self-transition " + m.name + " not enabled");
  }
  auto& slice = slices_[{m, n}];
  slice.assign(static_cast<std::size_t>(params_.bins * params_.bins), {});
  return slice;
}

const std::vector<TensorCell>& TransitionTensor::Slice(const MotionId& m,
                                                       const MotionId& n) const {
  auto it = slices_.find({m, n});
  if (it == slices_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair " + m.name + "->" + n.name + " not populated");
  }
  return it->second;
}

std::vector<TensorCell>& TransitionTensor::MutableSlice(const MotionId& m,
                                                        const MotionId& n) {
  return const_cast<std::vector<TensorCell>&>(
      static_cast<const TransitionTensor*>(this)->Slice(m, n));
}

int TransitionTensor::Index(int phi_bin, int omega_bin) const {
  return phi_bin * params_.bins + omega_bin;
}

void TransitionTensor::CheckIndex(const TransitionIndex& w) const {
  if (w.phi_bin < 0 || w.phi_bin >= params_.bins || w.omega_bin < 0 ||
      w.omega_bin >= params_.bins) {
    throw Error(ErrorCode::kInvalidArgument, "bin out of range");
  }
}

const TensorCell& TransitionTensor::cell(const TransitionIndex& w) const {
  CheckIndex(w);
  return Slice(w.m, w.n)[static_cast<std::size_t>(Index(w.phi_bin, w.omega_bin))];
}

double TransitionTensor::MeanGamma(const TransitionIndex& w) const {
  return cell(w).MeanGamma();
}

double TransitionTensor::SliceMaxMeanGamma(
    const std::vector<TensorCell>& slice) const {
  double best = 0.0;
  for (const TensorCell& c : slice) best = std::max(best, c.MeanGamma());
  return best;
}

double TransitionTensor::StabilityIn(const std::vector<TensorCell>& slice,
                                     int phi_bin, int omega_bin,
                                     double scale) const {
  const int bins = params_.bins;
  const std::vector<int> phis = NeighborBins(phi_bin, params_.radius, bins);
  const std::vector<int> omegas = NeighborBins(omega_bin, params_.radius, bins);
  std::vector<double> values;
  int alive = 0;
  for (int p : phis) {
    for (int o : omegas) {
      const TensorCell& c = slice[static_cast<std::size_t>(Index(p, o))];
      alive += c.alive;
      values.insert(values.end(), c.gammas.begin(), c.gammas.end());
    }
  }
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyNeighborhood, "no samples near the cell");
  }
  const double norm = scale > 0.0 ? scale : 1.0;
  double mean = 0.0;
  for (double& v : values) {
    v /= norm;
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double zeta = 0.0;
  for (double v : values) zeta += (v - mean) * (v - mean);
  zeta /= static_cast<double>(values.size());
  const double alive_fraction =
      static_cast<double>(alive) / static_cast<double>(values.size());
  return alive_fraction * std::exp(-params_.beta * zeta);
}

double TransitionTensor::Stability(const TransitionIndex& w) const {
  CheckIndex(w);
  const auto& slice = Slice(w.m, w.n);
  return StabilityIn(slice, w.phi_bin, w.omega_bin, SliceMaxMeanGamma(slice));
}

double TransitionTensor::Quality(const TransitionIndex& w) const {
  const double psi = Stability(w);
  return psi * MeanGamma(w);
}

QualityGrid TransitionTensor::Grid(const MotionId& m, const MotionId& n) const {
  const auto& slice = Slice(m, n);
  const double scale = SliceMaxMeanGamma(slice);
  const int bins = params_.bins;
  QualityGrid grid;
  grid.m = m;
  grid.n = n;
  grid.bins = bins;
  const std::size_t cells = slice.size();
  grid.quality.resize(cells);
  grid.stability.resize(cells);
  grid.mean_gamma.resize(cells);
  grid.alive_fraction.resize(cells);
  for (int p = 0; p < bins; ++p) {
    for (int o = 0; o < bins; ++o) {
      const auto i = static_cast<std::size_t>(Index(p, o));
      const TensorCell& c = slice[i];
      grid.stability[i] = StabilityIn(slice, p, o, scale);
      grid.mean_gamma[i] = c.MeanGamma();
      grid.alive_fraction[i] = c.AliveFraction();
      grid.quality[i] = grid.stability[i] * grid.mean_gamma[i];
    }
  }
  return grid;
}

QualityQueryResult TransitionTensor::QueryBest(const MotionId& m, double phase,
                                               const MotionId& n,
                                               const QueryOptions& options) const {
  VerifyConfigHash();
  const GaitSpec& source = GetGait(gaits_, m);
  const QualityGrid grid = Grid(m, n);
  const int bins = params_.bins;
  const bool cyclic = !source.standing && source.nominal_cycle > 0.0;
  phase = cyclic ? WrapPhase(phase) : 0.0;
  const int current = std::min(static_cast<int>(phase * bins), bins - 1);

  bool found = false;
  QualityQueryResult best;
  for (int p = 0; p < bins; ++p) {
    if (!cyclic && p != current) continue;
    const double wait_phase = BinWaitPhase(phase, p, bins);
    if (wait_phase > options.horizon) continue;
    const double wait = wait_phase * (cyclic ? source.nominal_cycle : 0.0);
    const double discount =
        options.wait_discount > 0.0 ? std::exp(-options.wait_discount * wait) : 1.0;
    for (int o = 0; o < bins; ++o) {
      const auto i = static_cast<std::size_t>(p * bins + o);
      double score = 0.0;
      switch (options.mode) {
        case ScoreMode::kQuality:
          score = grid.quality[i];
          break;
        case ScoreMode::kOutcome:
          score = grid.mean_gamma[i];
          break;
        case ScoreMode::kStability:
          score = grid.stability[i];
          break;
      }
      score *= discount;
      const QualityQueryResult candidate{p, o, score, wait};
      const bool better =
          !found ||
          std::tie(best.quality, candidate.wait_time, candidate.omega_bin,
                   candidate.phi_bin) <
              std::tie(candidate.quality, best.wait_time, best.omega_bin,
                       best.phi_bin);
      if (better) {
        best = candidate;
        found = true;
      }
    }
  }
  if (!found || !(best.quality > options.min_quality)) {
    throw Error(ErrorCode::kNoViableTransition,
                "no transition " + m.name + "->" + n.name + " above quality " +
                    std::to_string(options.min_quality));
  }
  return best;
}

bool operator==(const TransitionTensor& a, const TransitionTensor& b) {
  return a.gaits_ == b.gaits_ && a.cfg_ == b.cfg_ && a.params_ == b.params_ &&
         a.terrain_ == b.terrain_ && a.config_hash_ == b.config_hash_ &&
         a.slices_ == b.slices_;
}

double BinWaitPhase(double phase, int bin, int bins) {
  phase = WrapPhase(phase);
  if (std::min(static_cast<int>(phase * bins), bins - 1) == bin) return 0.0;
  return WrapPhase((bin + 0.5) / bins - phase);
}

std::vector<MotionPair> AllPairs(std::span<const MotionId> motions) {
  std::vector<MotionPair> out;
  for (const MotionId& m : motions) {
    for (const MotionId& n : motions) {
      if (!(m == n)) out.emplace_back(m, n);
    }
  }
  return out;
}

}  // namespace gaitswitch
