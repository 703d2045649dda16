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

#include "gaitswitch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "gaitswitch/error.hpp"
#include "gaitswitch/seeding.hpp"

namespace gaitswitch {
namespace {

constexpr std::uint64_t kEpisodeTag = 0x65706973;  // "epis"
constexpr std::uint64_t kPlannerTag = 0x706c616e;  // "plan"
constexpr std::uint64_t kGapTag = 0x67617073;      // "gaps"

const char* kCsvHeader =
    "strategy,seed,noise,m,n,trials,successes,success_rate,mean_duration,"
    "mean_effort,mean_accuracy";

std::string Number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Optional(const std::optional<double>& v) {
  return v ? Number(*v) : std::string();
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bad number '" + s + "' in CSV");
  }
  return v;
}

std::optional<double> ParseOptional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return ParseDouble(s);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename Fn>
void ParallelFor(std::size_t count, int threads, Fn fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  }
  threads = static_cast<int>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = count;
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

void RequireCycles(const TransitionTensor& tensor) {
  for (const GaitSpec& g : tensor.gaits()) {
    if (!g.has_cycle) {
      throw Error(ErrorCode::kConfigMismatch,
                  "gait " + g.id.name + " has no measured limit cycle");
    }
  }
}

}  // namespace

const PairStats* EvalReport::Find(const MotionId& m, const MotionId& n) const {
  for (const PairStats& p : pairs) {
    if (p.m == m && p.n == n) return &p;
  }
  return nullptr;
}

EpisodeStart MakeEpisodeStart(const TransitionTensor& tensor, const MotionId& m,
                              const MotionId& n, int trial, std::uint64_t seed,
                              double noise) {
  const GaitSpec& source = GetGait(tensor.gaits(), m);
  std::mt19937_64 rng(DeriveSeed(seed, {kEpisodeTag, HashName(m.name),
                                        HashName(n.name),
                                        static_cast<std::uint64_t>(trial)}));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  EpisodeStart start;
  start.phase = uniform(rng);
  if (noise > 0.0) {
    std::normal_distribution<double> normal(0.0, noise);
    start.height_noise = normal(rng);
    start.speed_noise = normal(rng);
  }
  start.state = StateOnCycle(source, start.phase, start.height_noise,
                             start.speed_noise, tensor.sim_config(),
                             tensor.terrain(), &start.clock);
  return start;
}

EpisodeResult RunEpisode(const TransitionTensor& tensor, SwitchStrategy strategy,
                         const MotionId& m, const MotionId& n, int trial,
                         const EvalOptions& options) {
  EpisodeResult result;
  const EpisodeStart start =
      MakeEpisodeStart(tensor, m, n, trial, options.seed, options.noise);
  if (start.state.fallen) return result;
  UnifiedOptions uo;
  uo.strategy = strategy;
  uo.query = options.query;
  uo.seed = DeriveSeed(options.seed, {kPlannerTag, HashName(m.name),
                                      HashName(n.name),
                                      static_cast<std::uint64_t>(trial)});
  UnifiedController controller(tensor, m, uo);
  controller.Reset(m, start.clock);
  try {
    controller.RequestMotion(n);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoViableTransition) throw;
    return result;
  }
  result.planned = true;
  SimState state = start.state;
  const double t_end = state.t + options.max_time;
  while (state.t < t_end) {
    const TickResult tick = controller.Tick(state, tensor.terrain());
    result.switched = result.switched || tick.switched;
    if (tick.finished) {
      result.outcome = *tick.finished;
      return result;
    }
    if (tick.event.kind == EventKind::kFall) return result;
  }
  return result;
}

EvalReport EvalPairwise(const TransitionTensor& tensor, SwitchStrategy strategy,
                        const EvalOptions& options) {
  RequireCycles(tensor);
  if (options.trials < 0) {
    throw Error(ErrorCode::kInvalidArgument, "trial count must be >= 0");
  }
  const std::vector<MotionPair> pairs =
      options.pairs.empty() ? tensor.pairs() : options.pairs;
  for (const auto& [m, n] : pairs) tensor.Slice(m, n);

  const auto trials = static_cast<std::size_t>(options.trials);
  std::vector<EpisodeResult> results(pairs.size() * trials);
  ParallelFor(results.size(), options.threads, [&](std::size_t i) {
    const auto& [m, n] = pairs[i / trials];
    results[i] = RunEpisode(tensor, strategy, m, n,
                            static_cast<int>(i % trials), options);
  });

  EvalReport report;
  report.strategy = strategy;
  report.seed = options.seed;
  report.noise = options.noise;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    PairStats stats;
    stats.m = pairs[p].first;
    stats.n = pairs[p].second;
    stats.trials = options.trials;
    double duration = 0.0, effort = 0.0, accuracy = 0.0;
    for (std::size_t j = 0; j < trials; ++j) {
      const TransitionOutcome& o = results[p * trials + j].outcome;
      if (o.eta == 0) continue;
      ++stats.successes;
      duration += o.duration;
      effort += o.effort;
      accuracy += o.accuracy;
    }
    if (stats.trials > 0) {
      stats.success_rate = static_cast<double>(stats.successes) / stats.trials;
    }
    if (stats.successes > 0) {
      stats.mean_duration = duration / stats.successes;
      stats.mean_effort = effort / stats.successes;
      stats.mean_accuracy = accuracy / stats.successes;
    }
    report.pairs.push_back(stats);
  }
  return report;
}

std::vector<EvalReport> RunAblation(const TransitionTensor& tensor,
                                    const EvalOptions& options) {
  std::vector<EvalReport> out;
  for (SwitchStrategy s : {SwitchStrategy::kTmt, SwitchStrategy::kOutcomeOnly,
                           SwitchStrategy::kStabilityOnly}) {
    out.push_back(EvalPairwise(tensor, s, options));
  }
  return out;
}

std::string ReportsToCsv(const std::vector<EvalReport>& reports) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const EvalReport& r : reports) {
    for (const PairStats& p : r.pairs) {
      out += std::string(SwitchStrategyName(r.strategy)) + "," +
             std::to_string(r.seed) + "," + Number(r.noise) + "," + p.m.name +
             "," + p.n.name + "," + std::to_string(p.trials) + "," +
             std::to_string(p.successes) + "," + Optional(p.success_rate) +
             "," + Optional(p.mean_duration) + "," + Optional(p.mean_effort) +
             "," + Optional(p.mean_accuracy) + "\n";
    }
  }
  return out;
}

std::vector<EvalReport> ReportsFromCsv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::kInvalidArgument, "not an evaluation report CSV");
  }
  std::vector<EvalReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = SplitCsvLine(line);
    if (f.size() != 11) {
      throw Error(ErrorCode::kInvalidArgument, "bad report row: " + line);
    }
    const SwitchStrategy strategy = ParseSwitchStrategy(f[0]);
    const std::uint64_t seed = std::stoull(f[1]);
    const double noise = ParseDouble(f[2]);
    if (reports.empty() || reports.back().strategy != strategy ||
        reports.back().seed != seed || reports.back().noise != noise) {
      reports.push_back({strategy, seed, noise, {}});
    }
    PairStats p;
    p.m = MotionId{f[3]};
    p.n = MotionId{f[4]};
    p.trials = std::stoi(f[5]);
    p.successes = std::stoi(f[6]);
    p.success_rate = ParseOptional(f[7]);
    p.mean_duration = ParseOptional(f[8]);
    p.mean_effort = ParseOptional(f[9]);
    p.mean_accuracy = ParseOptional(f[10]);
    reports.back().pairs.push_back(p);
  }
  return reports;
}

GapScenarioResult RunGapScenario(const TransitionTensor& tensor,
                                 double gap_width, std::uint64_t seed,
                                 const GapScenarioOptions& options) {
  RequireCycles(tensor);
  const MotionId canter{"Canter"};
  const MotionId jump{"Jump"};
  const GaitSpec& canter_gait = GetGait(tensor.gaits(), canter);
  GetGait(tensor.gaits(), jump);
  if (gap_width < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "gap width must be >= 0");
  }

  GapScenarioResult result;
  result.gap_width = gap_width;
  const Terrain terrain =
      gap_width > 0.0 ? Terrain::WithGap(options.gap_start, gap_width) : Terrain();
  const double gap_end = options.gap_start + gap_width;

  // Seeds vary the start phase, the stride offset relative to the gap and
  // the apex perturbation.
  std::mt19937_64 rng(DeriveSeed(seed, {kGapTag}));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, options.noise > 0.0 ? options.noise : 1.0);
  const double phase = uniform(rng);
  const double offset = uniform(rng);
  const double dz = options.noise > 0.0 ? normal(rng) : 0.0;
  const double dv = options.noise > 0.0 ? normal(rng) : 0.0;

  ControllerClock clock;
  SimState state = StateOnCycle(canter_gait, phase, dz, dv, tensor.sim_config(),
                                Terrain(), &clock);
  state.x -= offset * canter_gait.nominal_apex.vx * canter_gait.nominal_cycle;
  if (state.mode == ContactMode::kStance) {
    state.foot_x -= offset * canter_gait.nominal_apex.vx * canter_gait.nominal_cycle;
  }

  UnifiedOptions uo;
  uo.strategy = options.strategy;
  uo.query = options.query;
  uo.seed = DeriveSeed(seed, {kGapTag, kPlannerTag});
  UnifiedController controller(tensor, canter, uo);
  controller.Reset(canter, clock);

  bool jump_requested = false;
  bool canter_requested = false;
  auto record = [&] {
    if (!options.record_trace) return;
    result.trace.push_back({state.t, state.x, state.z, state.vx, state.vz,
                            state.mode, state.foot_x, controller.state().active,
                            controller.state().clock.phase});
  };
  record();
  const double t_end = state.t + options.max_time;
  try {
    while (state.t < t_end) {
      const TickResult tick = controller.Tick(state, terrain);
      record();
      if (!jump_requested && state.x >= options.gap_start - options.jump_lead) {
        controller.RequestMotion(jump);
        jump_requested = true;
      }
      if (tick.event.kind == EventKind::kFall) {
        result.failure = state.x < gap_end && state.x > options.gap_start - 1.0
                             ? "fell into or short of the gap"
                             : "fell";
        return result;
      }
      if (tick.event.kind == EventKind::kTouchdown && state.foot_x > gap_end) {
        result.crossed = true;
      }
      if (result.crossed && !canter_requested) {
        controller.RequestMotion(canter);
        canter_requested = true;
      }
      if (canter_requested && tick.finished &&
          controller.state().active == canter) {
        result.success = tick.finished->eta == 1;
        if (!result.success) result.failure = "Canter did not re-stabilize";
        return result;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoViableTransition) throw;
    result.failure = e.what();
    return result;
  }
  result.failure = "timeout";
  return result;
}

std::string TraceToCsv(const std::vector<TraceRow>& trace) {
  std::string out = "t,x,z,vx,vz,mode,foot_x,active,phase\n";
  for (const TraceRow& r : trace) {
    out += Number(r.t) + "," + Number(r.x) + "," + Number(r.z) + "," +
           Number(r.vx) + "," + Number(r.vz) + "," +
           std::string(ContactModeName(r.mode)) + "," + Number(r.foot_x) + "," +
           r.active.name + "," + Number(r.phase) + "\n";
  }
  return out;
}

}  // namespace gaitswitch
