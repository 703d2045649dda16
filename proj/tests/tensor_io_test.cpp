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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gaitswitch/error.hpp"
#include "gaitswitch/tensor.hpp"
#include "test_support.hpp"

namespace gaitswitch {
namespace {

using testing::RandomTensor;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         (name + "." + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
          ".json");
}

TEST(TensorIo, RandomRoundTripIsExact) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 25; ++i) {
    const TransitionTensor t = RandomTensor(rng, 2 + i % 5);
    const std::string text = SerializeTensor(t);
    const TransitionTensor back = ParseTensor(text);
    EXPECT_TRUE(back == t);
    EXPECT_EQ(SerializeTensor(back), text);
    EXPECT_NO_THROW(back.VerifyConfigHash());
  }
}

TEST(TensorIo, SaveAndLoadFile) {
  std::mt19937_64 rng(3);
  const TransitionTensor t = RandomTensor(rng, 4);
  const auto path = TempPath("tensor_io_save");
  SaveTensor(t, path.string());
  EXPECT_TRUE(LoadTensor(path.string()) == t);
  std::filesystem::remove(path);
  EXPECT_EQ(CodeOf([&] { LoadTensor(path.string()); }), ErrorCode::kCorruptFile);
}

TEST(TensorIo, OnePairPerLine) {
  std::mt19937_64 rng(5);
  const std::string text = SerializeTensor(RandomTensor(rng, 3));
  std::istringstream in(text);
  std::string line;
  int pair_lines = 0;
  while (std::getline(in, line)) {
    if (line.rfind("    {\"cells\"", 0) == 0) ++pair_lines;
  }
  EXPECT_EQ(pair_lines, 6);
}

TEST(TensorIo, TruncatedFileIsCorrupt) {
  std::mt19937_64 rng(1);
  const std::string text = SerializeTensor(RandomTensor(rng, 3));
  for (std::size_t cut : {std::size_t{0}, text.size() / 3, text.size() - 3}) {
    EXPECT_EQ(CodeOf([&] { ParseTensor(text.substr(0, cut)); }), ErrorCode::kCorruptFile);
  }
  EXPECT_EQ(CodeOf([] { ParseTensor("not json"); }), ErrorCode::kCorruptFile);
  EXPECT_EQ(CodeOf([] { ParseTensor("[]"); }), ErrorCode::kCorruptFile);
}

TEST(TensorIo, VersionIsChecked) {
  std::mt19937_64 rng(2);
  std::string text = SerializeTensor(RandomTensor(rng, 2));
  const std::string key = "\"version\": 1,";
  const auto at = text.find(key);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, key.size(), "\"version\": 99,");
  EXPECT_EQ(CodeOf([&] { ParseTensor(text); }), ErrorCode::kVersionMismatch);
}

TEST(TensorIo, WrongCellCountIsCorrupt) {
  std::mt19937_64 rng(4);
  std::string text = SerializeTensor(RandomTensor(rng, 2));
  // Drop the first cell of the first pair.
  const auto cells = text.find("\"cells\":[");
  ASSERT_NE(cells, std::string::npos);
  const auto begin = cells + 9;
  const auto end = text.find("},{", begin);
  ASSERT_NE(end, std::string::npos);
  text.erase(begin, end + 2 - begin);
  EXPECT_EQ(CodeOf([&] { ParseTensor(text); }), ErrorCode::kCorruptFile);
}

TEST(TensorIo, EditedHashLoadsButRefusesQueries) {
  std::mt19937_64 rng(6);
  const TransitionTensor t = RandomTensor(rng, 3);
  std::string text = SerializeTensor(t);
  const auto at = text.find(t.config_hash());
  ASSERT_NE(at, std::string::npos);
  text[at] = text[at] == '0' ? '1' : '0';
  const TransitionTensor edited = ParseTensor(text);
  EXPECT_EQ(CodeOf([&] { edited.QueryBest({"A"}, 0.1, {"B"}); }),
            ErrorCode::kConfigHashMismatch);
}

TEST(TensorIo, QualityCsvLayout) {
  std::mt19937_64 rng(8);
  const TransitionTensor t = RandomTensor(rng, 3);
  const std::string csv = QualityCsv(t.Grid({"A"}, {"C"}));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "m,n,phiBin,omegaBin,Q,psi,meanGamma,aliveFrac");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("A,C,", 0), 0u);
  }
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(csv, QualityCsv(ParseTensor(SerializeTensor(t)).Grid({"A"}, {"C"})));
}

}  // namespace
}  // namespace gaitswitch
