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

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaitswitch/config.hpp"
#include "gaitswitch/error.hpp"
#include "gaitswitch/tensor.hpp"

namespace gaitswitch {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "gaitswitch-tensor";

[[noreturn]] void Corrupt(const std::string& what) {
  throw Error(ErrorCode::kCorruptFile, what);
}

std::string Hex(const unsigned char* data, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

json CellToJson(const TensorCell& c) {
  return json{{"samples", c.samples},
              {"alive", c.alive},
              {"gammas", c.gammas},
              {"duration", c.mean_outcome.duration},
              {"effort", c.mean_outcome.effort},
              {"accuracy", c.mean_outcome.accuracy}};
}

double FiniteNumber(const json& j) {
  if (!j.is_number()) Corrupt("expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Corrupt("non-finite value");
  return v;
}

TensorCell CellFromJson(const json& j) {
  if (!j.is_object()) Corrupt("cell must be an object");
  TensorCell c;
  c.samples = j.at("samples").get<int>();
  c.alive = j.at("alive").get<int>();
  for (const json& g : j.at("gammas")) c.gammas.push_back(FiniteNumber(g));
  c.mean_outcome.duration = FiniteNumber(j.at("duration"));
  c.mean_outcome.effort = FiniteNumber(j.at("effort"));
  c.mean_outcome.accuracy = FiniteNumber(j.at("accuracy"));
  c.mean_outcome.eta = c.alive > 0 ? 1 : 0;
  if (c.samples < 0 || c.alive < 0 || c.alive > c.samples ||
      c.gammas.size() != static_cast<std::size_t>(c.samples)) {
    Corrupt("inconsistent cell counts");
  }
  return c;
}

json HeaderToJson(const TransitionTensor& t) {
  const PopulationParams& p = t.params();
  json gaits = json::array();
  for (const GaitSpec& g : t.gaits()) gaits.push_back(GaitToJson(g, true));
  json vocabulary = json::array();
  for (const MotionId& id : t.vocabulary()) vocabulary.push_back(id.name);
  return json{
      {"vocabulary", vocabulary},
      {"bins", p.bins},
      {"radius", p.radius},
      {"delta", t.delta()},
      {"beta", p.beta},
      {"seed", p.seed},
      {"trials", p.trials},
      {"noise", p.noise},
      {"min_effort", p.min_effort},
      {"allow_self", p.allow_self},
      {"measurement",
       {{"max_duration", p.measurement.max_duration},
        {"reward_sigma", p.measurement.reward_sigma},
        {"eps_height", p.measurement.criteria.eps_height},
        {"eps_speed", p.measurement.criteria.eps_speed},
        {"apex_count", p.measurement.criteria.apex_count}}},
      {"config_hash", t.config_hash()},
      {"sim", SimConfigToJson(t.sim_config())},
      {"gaits", gaits},
      {"terrain", TerrainToJson(t.terrain())}};
}

std::string Indent(const std::string& text, const std::string& pad) {
  std::string out;
  for (char c : text) {
    out.push_back(c);
    if (c == '\n') out += pad;
  }
  return out;
}

TransitionTensor FromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("format") ||
      doc.at("format") != kFormatName) {
    Corrupt("not a tensor file");
  }
  const int version = doc.at("version").get<int>();
  if (version != kTensorFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "tensor format version " + std::to_string(version) +
                    ", expected " + std::to_string(kTensorFormatVersion));
  }
  const json& h = doc.at("header");
  PopulationParams p;
  p.bins = h.at("bins").get<int>();
  p.radius = h.at("radius").get<int>();
  p.beta = FiniteNumber(h.at("beta"));
  p.seed = h.at("seed").get<std::uint64_t>();
  p.trials = h.at("trials").get<int>();
  p.noise = FiniteNumber(h.at("noise"));
  p.min_effort = FiniteNumber(h.at("min_effort"));
  p.allow_self = h.at("allow_self").get<bool>();
  const json& m = h.at("measurement");
  p.measurement.max_duration = FiniteNumber(m.at("max_duration"));
  p.measurement.reward_sigma = FiniteNumber(m.at("reward_sigma"));
  p.measurement.criteria.eps_height = FiniteNumber(m.at("eps_height"));
  p.measurement.criteria.eps_speed = FiniteNumber(m.at("eps_speed"));
  p.measurement.criteria.apex_count = m.at("apex_count").get<int>();

  std::vector<GaitSpec> gaits;
  for (const json& g : h.at("gaits")) gaits.push_back(GaitFromJson(g));
  const auto vocabulary = h.at("vocabulary").get<std::vector<std::string>>();
  if (vocabulary.size() != gaits.size()) Corrupt("vocabulary/gait mismatch");
  for (std::size_t i = 0; i < gaits.size(); ++i) {
    if (gaits[i].id.name != vocabulary[i]) Corrupt("vocabulary/gait mismatch");
  }

  TransitionTensor t(std::move(gaits), SimConfigFromJson(h.at("sim")), p,
                     TerrainFromJson(h.at("terrain")));
  t.set_config_hash(h.at("config_hash").get<std::string>());

  const auto cells = static_cast<std::size_t>(p.bins * p.bins);
  for (const json& pair : doc.at("pairs")) {
    const MotionId from{pair.at("m").get<std::string>()};
    const MotionId to{pair.at("n").get<std::string>()};
    if (t.HasPair(from, to)) Corrupt("duplicate pair");
    const json& body = pair.at("cells");
    if (!body.is_array() || body.size() != cells) Corrupt("wrong cell count");
    std::vector<TensorCell>& slice = t.AddPair(from, to);
    for (std::size_t i = 0; i < cells; ++i) slice[i] = CellFromJson(body[i]);
  }
  return t;
}

void AppendNumber(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string ConfigHash(const SimConfig& cfg, std::span<const GaitSpec> gaits) {
  json g = json::array();
  for (const GaitSpec& gait : gaits) g.push_back(GaitToJson(gait, false));
  const std::string canonical =
      json{{"sim", SimConfigToJson(cfg)}, {"gaits", g}}.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len,
                 EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInvalidArgument, "SHA-256 unavailable");
  }
  return Hex(digest, len);
}

std::string SerializeTensor(const TransitionTensor& tensor) {
  std::string out = "{\n  \"format\": \"";
  out += kFormatName;
  out += "\",\n  \"version\": " + std::to_string(kTensorFormatVersion) + ",\n";
  out += "  \"header\": " + Indent(HeaderToJson(tensor).dump(2), "  ") + ",\n";
  out += "  \"pairs\": [";
  bool first = true;
  for (const auto& [m, n] : tensor.pairs()) {
    json cells = json::array();
    for (const TensorCell& c : tensor.Slice(m, n)) cells.push_back(CellToJson(c));
    out += first ? "\n    " : ",\n    ";
    out += json{{"m", m.name}, {"n", n.name}, {"cells", cells}}.dump();
    first = false;
  }
  out += "\n  ]\n}\n";
  return out;
}

TransitionTensor ParseTensor(const std::string& text) {
  try {
    return FromJson(json::parse(text));
  } catch (const json::exception& e) {
    Corrupt(std::string("malformed tensor document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVersionMismatch ||
        e.code() == ErrorCode::kCorruptFile) {
      throw;
    }
    Corrupt(e.what());
  }
}

void SaveTensor(const TransitionTensor& tensor, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << SerializeTensor(tensor);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "write failed: " + path);
}

TransitionTensor LoadTensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCorruptFile, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseTensor(buf.str());
}

std::string QualityCsv(const QualityGrid& grid) {
  std::string out = "m,n,phiBin,omegaBin,Q,psi,meanGamma,aliveFrac\n";
  for (int p = 0; p < grid.bins; ++p) {
    for (int o = 0; o < grid.bins; ++o) {
      const auto i = static_cast<std::size_t>(p * grid.bins + o);
      out += grid.m.name + "," + grid.n.name + "," + std::to_string(p) + "," +
             std::to_string(o);
      for (double v : {grid.quality[i], grid.stability[i], grid.mean_gamma[i],
                       grid.alive_fraction[i]}) {
        out.push_back(',');
        AppendNumber(out, v);
      }
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace gaitswitch
