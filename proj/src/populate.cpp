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

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "gaitswitch/error.hpp"
#include "gaitswitch/seeding.hpp"
#include "gaitswitch/tensor.hpp"

namespace gaitswitch {
namespace {

struct CellJob {
  const GaitSpec* source;
  const GaitSpec* dest;
  std::vector<TensorCell>* slice;
  int phi_bin;
  int omega_bin;
};

TensorCell RunCell(const CellJob& job, const TransitionTensor& tensor) {
  const PopulationParams& params = tensor.params();
  const int bins = params.bins;
  const TransitionIndex w{job.source->id, job.phi_bin, job.dest->id,
                          job.omega_bin};
  const double phi = (job.phi_bin + 0.5) / bins;
  const double omega = (job.omega_bin + 0.5) / bins;
  TensorCell cell;
  for (int trial = 0; trial < params.trials; ++trial) {
    const auto [dz, dv] = TrialNoise(params.seed, w, trial, params.noise);
    const SimState start = StateOnCycle(*job.source, phi, dz, dv,
                                        tensor.sim_config(), tensor.terrain(),
                                        nullptr);
    const TransitionOutcome outcome =
        RunSwitch(start, *job.dest, omega, tensor.sim_config(),
                  tensor.terrain(), params.measurement);
    cell.Add(outcome, params.min_effort);
  }
  return cell;
}

void RunJobs(const std::vector<CellJob>& jobs, const TransitionTensor& tensor,
             int threads) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  }
  threads = std::min<int>(threads, static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const CellJob& job = jobs[i];
        (*job.slice)[static_cast<std::size_t>(job.phi_bin * tensor.bins() +
                                              job.omega_bin)] =
            RunCell(job, tensor);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::pair<double, double> TrialNoise(std::uint64_t seed,
                                     const TransitionIndex& w, int trial,
                                     double sigma) {
  if (sigma == 0.0) return {0.0, 0.0};
  std::mt19937_64 rng(DeriveSeed(
      seed, {HashName(w.m.name), HashName(w.n.name),
             static_cast<std::uint64_t>(w.phi_bin),
             static_cast<std::uint64_t>(w.omega_bin),
             static_cast<std::uint64_t>(trial)}));
  std::normal_distribution<double> normal(0.0, sigma);
  const double dz = normal(rng);
  const double dv = normal(rng);
  return {dz, dv};
}

void PopulatePairs(TransitionTensor& tensor, std::span<const MotionPair> pairs,
                   int threads) {
  const PopulationParams& params = tensor.params();
  if (params.trials < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one trial per cell");
  }
  if (!(params.noise >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise must be non-negative");
  }
  for (const GaitSpec& g : tensor.gaits()) {
    if (!g.has_cycle) {
      throw Error(ErrorCode::kConfigMismatch,
                  "gait " + g.id.name + " has no measured limit cycle");
    }
  }
  std::vector<CellJob> jobs;
  for (const auto& [m, n] : pairs) {
    if (tensor.HasPair(m, n)) continue;
    std::vector<TensorCell>& slice = tensor.AddPair(m, n);
    const GaitSpec* source = &GetGait(tensor.gaits(), m);
    const GaitSpec* dest = &GetGait(tensor.gaits(), n);
    for (int p = 0; p < params.bins; ++p) {
      for (int o = 0; o < params.bins; ++o) {
        jobs.push_back({source, dest, &slice, p, o});
      }
    }
  }
  if (!jobs.empty()) RunJobs(jobs, tensor, threads);
}

TransitionTensor Populate(std::span<const MotionPair> pairs,
                          std::vector<GaitSpec> gaits, const SimConfig& cfg,
                          const PopulationParams& params,
                          const Terrain& terrain, int threads) {
  cfg.Validate();
  TransitionTensor tensor(std::move(gaits), cfg, params, terrain);
  PopulatePairs(tensor, pairs, threads);
  return tensor;
}

void ExtendTensor(TransitionTensor& tensor, const GaitSpec& gait,
                  int threads) {
  if (!gait.has_cycle) {
    throw Error(ErrorCode::kConfigMismatch,
                "gait " + gait.id.name + " has no measured limit cycle");
  }
  std::vector<MotionPair> pairs;
  for (const GaitSpec& g : tensor.gaits()) {
    pairs.emplace_back(g.id, gait.id);
    pairs.emplace_back(gait.id, g.id);
  }
  tensor.AddGait(gait);
  PopulatePairs(tensor, pairs, threads);
}

}  // namespace gaitswitch
