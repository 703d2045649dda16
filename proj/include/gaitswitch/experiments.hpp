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

// Paired evaluation of switching strategies and the gap-crossing scenario.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaitswitch/tensor.hpp"
#include "gaitswitch/unified.hpp"

namespace gaitswitch {

struct EvalOptions {
  int trials = 100;
  double noise = 0.02;
  std::uint64_t seed = 1;
  std::vector<MotionPair> pairs;  // empty: every populated pair
  QueryOptions query;
  double max_time = 20.0;  // s per episode
  int threads = 0;
};

struct PairStats {
  MotionId m;
  MotionId n;
  int trials = 0;
  int successes = 0;
  // Undefined (empty) when there are no trials or no successes.
  std::optional<double> success_rate;
  std::optional<double> mean_duration;
  std::optional<double> mean_effort;
  std::optional<double> mean_accuracy;

  friend bool operator==(const PairStats&, const PairStats&) = default;
};

struct EvalReport {
  SwitchStrategy strategy = SwitchStrategy::kTmt;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::vector<PairStats> pairs;

  const PairStats* Find(const MotionId& m, const MotionId& n) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Initial condition of one evaluation episode; depends only on
// (seed, m, n, trial), never on the strategy.
struct EpisodeStart {
  SimState state;
  ControllerClock clock;
  double phase = 0.0;
  double height_noise = 0.0;
  double speed_noise = 0.0;
};

EpisodeStart MakeEpisodeStart(const TransitionTensor& tensor, const MotionId& m,
                              const MotionId& n, int trial, std::uint64_t seed,
                              double noise);

struct EpisodeResult {
  bool planned = false;  // a plan was found
  bool switched = false;
  TransitionOutcome outcome;
};

EpisodeResult RunEpisode(const TransitionTensor& tensor, SwitchStrategy strategy,
                         const MotionId& m, const MotionId& n, int trial,
                         const EvalOptions& options);

EvalReport EvalPairwise(const TransitionTensor& tensor, SwitchStrategy strategy,
                        const EvalOptions& options);

// TMT, OutcomeOnly and StabilityOnly on identical trial sets.
std::vector<EvalReport> RunAblation(const TransitionTensor& tensor,
                                    const EvalOptions& options);

// Rows of several reports; columns
// strategy,seed,noise,m,n,trials,successes,success_rate,mean_duration,
// mean_effort,mean_accuracy.
std::string ReportsToCsv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> ReportsFromCsv(const std::string& csv);

struct TraceRow {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  ContactMode mode = ContactMode::kFlight;
  double foot_x = 0.0;
  MotionId active;
  double phase = 0.0;
};

struct GapScenarioOptions {
  SwitchStrategy strategy = SwitchStrategy::kTmt;
  double gap_start = 8.0;   // m
  double jump_lead = 2.5;   // request Jump this far before the gap, m
  double noise = 0.02;
  double max_time = 15.0;   // s
  QueryOptions query;
  bool record_trace = true;
};

struct GapScenarioResult {
  bool success = false;
  bool crossed = false;
  std::string failure;
  double gap_width = 0.0;
  std::vector<TraceRow> trace;
};

// Canter, Jump before the gap, Canter after it. Success means the character
// crossed the gap and the final Canter transition stabilized.
GapScenarioResult RunGapScenario(const TransitionTensor& tensor,
                                 double gap_width, std::uint64_t seed,
                                 const GapScenarioOptions& options = {});

std::string TraceToCsv(const std::vector<TraceRow>& trace);

}  // namespace gaitswitch
