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

// gaitswitch command line: populate, extend, eval, ablate, scenario, query,
// export-q, cycles and serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gaitswitch/config.hpp"
#include "gaitswitch/error.hpp"
#include "gaitswitch/experiments.hpp"
#include "gaitswitch/gait.hpp"
#include "gaitswitch/steering.hpp"
#include "gaitswitch/tensor.hpp"

namespace {

using namespace gaitswitch;

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

MotionPair ParsePair(const std::string& s) {
  const auto parts = Split(s, ',');
  if (parts.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "pair must be 'From,To', got '" + s + "'");
  }
  return {MotionId{parts[0]}, MotionId{parts[1]}};
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  }
}

ScenarioConfig Config(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : LoadConfig(path);
}

std::vector<GaitSpec> Measured(const std::vector<GaitSpec>& gaits,
                               const SimConfig& cfg) {
  std::vector<GaitSpec> out;
  for (const GaitSpec& g : gaits) out.push_back(MeasureGait(g, cfg));
  return out;
}

// The tensor's motions as described by the configuration, in tensor order.
void CheckAgainst(const TransitionTensor& t, const ScenarioConfig& sc) {
  std::vector<GaitSpec> gaits;
  for (const MotionId& id : t.vocabulary()) gaits.push_back(GetGait(sc.gaits, id));
  t.CheckConfig(sc.sim, gaits);
}

void PrintStats(const EvalReport& r) {
  std::printf("%-14s", std::string(SwitchStrategyName(r.strategy)).c_str());
  for (const PairStats& p : r.pairs) {
    std::printf("  %s>%s %d/%d", p.m.name.c_str(), p.n.name.c_str(), p.successes, p.trials);
  }
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transition tensor tools for a simulated hopping character"};
  app.require_subcommand(1);

  // populate
  auto* populate = app.add_subcommand("populate", "Simulate every transition cell and save the tensor");
  int bins = 20, trials = 5, radius = 1, threads = 0;
  double noise = 0.02;
  std::uint64_t seed = 42;
  std::string out_path, config_path, motions = "Trot,Canter,Jump";
  populate->add_option("--bins", bins, "Phase bins per axis")->check(CLI::PositiveNumber);
  populate->add_option("--trials", trials, "Trials per cell")->check(CLI::PositiveNumber);
  populate->add_option("--noise", noise, "Relative apex noise")->check(CLI::NonNegativeNumber);
  populate->add_option("--seed", seed, "Base seed");
  populate->add_option("--radius", radius, "Stability neighborhood radius in bins")->check(CLI::NonNegativeNumber);
  populate->add_option("--motions", motions, "Comma-separated vocabulary");
  populate->add_option("--config", config_path, "Configuration JSON");
  populate->add_option("--threads", threads, "Worker threads (0: hardware)");
  populate->add_option("--out", out_path, "Output tensor file")->required();

  // extend
  auto* extend = app.add_subcommand("extend", "Add a motion to a populated tensor");
  std::string tensor_path, motion;
  extend->add_option("--tensor", tensor_path, "Input tensor")->required();
  extend->add_option("--motion", motion, "Motion to add")->required();
  extend->add_option("--config", config_path, "Configuration JSON holding the motion");
  extend->add_option("--threads", threads, "Worker threads (0: hardware)");
  extend->add_option("--out", out_path, "Output tensor file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Pairwise success of one switching strategy");
  std::string strategy = "TMT", csv_path, pairs_arg;
  int eval_trials = 100;
  std::uint64_t eval_seed = 1;
  eval->add_option("--tensor", tensor_path, "Tensor file")->required();
  eval->add_option("--strategy", strategy, "TMT, RandomPhase, Immediate, PoseDistance, OutcomeOnly, StabilityOnly");
  eval->add_option("--trials", eval_trials, "Trials per pair")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "Episode seed");
  eval->add_option("--noise", noise, "Relative start noise")->check(CLI::NonNegativeNumber);
  eval->add_option("--pairs", pairs_arg, "Pairs 'A,B;C,D' (default: all populated)");
  eval->add_option("--threads", threads, "Worker threads (0: hardware)");
  eval->add_option("--csv", csv_path, "CSV output ('-' for stdout)");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "TMT against OutcomeOnly and StabilityOnly");
  ablate->add_option("--tensor", tensor_path, "Tensor file")->required();
  ablate->add_option("--trials", eval_trials, "Trials per pair")->check(CLI::PositiveNumber);
  ablate->add_option("--seed", eval_seed, "Episode seed");
  ablate->add_option("--noise", noise, "Relative start noise")->check(CLI::NonNegativeNumber);
  ablate->add_option("--pairs", pairs_arg, "Pairs 'A,B;C,D' (default: all populated)");
  ablate->add_option("--threads", threads, "Worker threads (0: hardware)");
  ablate->add_option("--csv", csv_path, "CSV output ('-' for stdout)");

  // scenario
  auto* scenario = app.add_subcommand("scenario", "Canter, jump a gap, canter again");
  double gap = 0.5, lead = 2.5;
  std::uint64_t scenario_seed = 0;
  std::string trace_out;
  scenario->add_option("--tensor", tensor_path, "Tensor file")->required();
  scenario->add_option("--gap", gap, "Gap width, m")->check(CLI::NonNegativeNumber);
  scenario->add_option("--seed", scenario_seed, "Scenario seed");
  scenario->add_option("--strategy", strategy, "Switching strategy");
  scenario->add_option("--lead", lead, "Jump request distance before the gap, m");
  scenario->add_option("--trace-out", trace_out, "Trajectory CSV");

  // query
  auto* query = app.add_subcommand("query", "Best switching window for one request");
  std::string from, to;
  double phase = 0.0;
  int horizon = 1;
  query->add_option("--tensor", tensor_path, "Tensor file")->required();
  query->add_option("--from", from, "Active motion")->required();
  query->add_option("--phase", phase, "Current phase in [0, 1)")->required();
  query->add_option("--to", to, "Requested motion")->required();
  query->add_option("--horizon", horizon, "Look-ahead in cycles")->check(CLI::PositiveNumber);

  // export-q
  auto* export_q = app.add_subcommand("export-q", "Quality slice of one pair as CSV");
  std::string pair;
  export_q->add_option("--tensor", tensor_path, "Tensor file")->required();
  export_q->add_option("--pair", pair, "'From,To'")->required();
  export_q->add_option("--csv", csv_path, "CSV output ('-' for stdout)");

  // cycles
  auto* cycles = app.add_subcommand("cycles", "Measure the limit cycle of every gait");
  cycles->add_option("--config", config_path, "Configuration JSON");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the live steering service");
  int port = 8765;
  double timescale = 1.0;
  std::string initial = "Trot", bind = "127.0.0.1";
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--tensor", tensor_path, "Tensor file")->required();
  serve->add_option("--config", config_path, "Configuration JSON (terrain, hash check)");
  serve->add_option("--timescale", timescale, "Simulated seconds per second")->check(CLI::Range(0.01, 100.0));
  serve->add_option("--motion", initial, "Initial motion");
  serve->add_option("--bind", bind, "Bind address");

  CLI11_PARSE(app, argc, argv);

  auto eval_options = [&] {
    EvalOptions o;
    o.trials = eval_trials;
    o.seed = eval_seed;
    o.noise = noise;
    o.threads = threads;
    for (const std::string& p : Split(pairs_arg, ';')) o.pairs.push_back(ParsePair(p));
    return o;
  };

  try {
    if (*populate) {
      const ScenarioConfig sc = Config(config_path);
      std::vector<MotionId> vocab;
      for (const std::string& m : Split(motions, ',')) vocab.push_back({m});
      std::vector<GaitSpec> gaits;
      for (const MotionId& id : vocab) gaits.push_back(MeasureGait(GetGait(sc.gaits, id), sc.sim));
      PopulationParams params;
      params.bins = bins;
      params.trials = trials;
      params.noise = noise;
      params.seed = seed;
      params.radius = radius;
      const auto all = AllPairs(vocab);
      const TransitionTensor t = Populate(all, gaits, sc.sim, params, sc.terrain, threads);
      SaveTensor(t, out_path);
      std::printf("populated %zu pairs, %d bins, %d trials -> %s\n", all.size(), bins, trials, out_path.c_str());
    } else if (*extend) {
      TransitionTensor t = LoadTensor(tensor_path);
      const ScenarioConfig sc = Config(config_path);
      CheckAgainst(t, sc);
      ExtendTensor(t, MeasureGait(GetGait(sc.gaits, MotionId{motion}), t.sim_config()), threads);
      SaveTensor(t, out_path);
      std::printf("added %s -> %s\n", motion.c_str(), out_path.c_str());
    } else if (*eval) {
      const TransitionTensor t = LoadTensor(tensor_path);
      const EvalReport r = EvalPairwise(t, ParseSwitchStrategy(strategy), eval_options());
      if (!csv_path.empty()) WriteText(csv_path, ReportsToCsv({r}));
      if (csv_path != "-") PrintStats(r);
    } else if (*ablate) {
      const TransitionTensor t = LoadTensor(tensor_path);
      const auto reports = RunAblation(t, eval_options());
      if (!csv_path.empty()) WriteText(csv_path, ReportsToCsv(reports));
      if (csv_path != "-") for (const auto& r : reports) PrintStats(r);
    } else if (*scenario) {
      const TransitionTensor t = LoadTensor(tensor_path);
      GapScenarioOptions o;
      o.strategy = ParseSwitchStrategy(strategy);
      o.jump_lead = lead;
      o.record_trace = !trace_out.empty();
      const GapScenarioResult r = RunGapScenario(t, gap, scenario_seed, o);
      if (!trace_out.empty()) WriteText(trace_out, TraceToCsv(r.trace));
      std::printf("gap %.3f m seed %llu: %s%s%s\n", gap,
                  static_cast<unsigned long long>(scenario_seed),
                  r.success ? "success" : "failure", r.failure.empty() ? "" : ": ",
                  r.failure.c_str());
      return r.success ? 0 : 1;
    } else if (*query) {
      const TransitionTensor t = LoadTensor(tensor_path);
      QueryOptions o;
      o.horizon = horizon;
      const QualityQueryResult r = t.QueryBest(MotionId{from}, phase, MotionId{to}, o);
      std::printf("phi_bin=%d omega_bin=%d quality=%.9g wait=%.6g\n", r.phi_bin,
                  r.omega_bin, r.quality, r.wait_time);
    } else if (*export_q) {
      const TransitionTensor t = LoadTensor(tensor_path);
      const MotionPair p = ParsePair(pair);
      WriteText(csv_path, QualityCsv(t.Grid(p.first, p.second)));
    } else if (*cycles) {
      const ScenarioConfig sc = Config(config_path);
      for (const GaitSpec& g : Measured(sc.gaits, sc.sim)) {
        std::printf("%-8s T=%.4f s apex z=%.4f m vx=%.4f m/s touchdown=%.3f liftoff=%.3f\n",
                    g.id.name.c_str(), g.nominal_cycle, g.nominal_apex.z,
                    g.nominal_apex.vx, g.touchdown_phase, g.liftoff_phase);
      }
    } else if (*serve) {
      const TransitionTensor t = LoadTensor(tensor_path);
      Terrain terrain;
      if (!config_path.empty()) {
        const ScenarioConfig sc = LoadConfig(config_path);
        CheckAgainst(t, sc);
        terrain = sc.terrain;
      }
      SessionOptions so;
      so.timescale = timescale;
      SteeringSession session(t, terrain, MotionId{initial}, so);
      ServerOptions opts;
      opts.port = port;
      opts.bind_address = bind;
      SteeringServer server(session, opts);
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      server.Start();
      std::printf("serving on ws://%s:%d/ws\n", bind.c_str(), server.port());
      std::fflush(stdout);
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.Stop();
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
