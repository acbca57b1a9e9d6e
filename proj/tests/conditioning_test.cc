// Copyright (c) 2026 The NFVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "gtest/gtest.h"
#include "nfvc/conditioning.h"
#include "nfvc/error.h"
#include "test_util.h"

namespace nfvc {
namespace {

std::vector<std::uint8_t> AllVoiced(std::size_t n) {
  return std::vector<std::uint8_t>(n, 1);
}

Utterance MakeUtterance() {
  Utterance u;
  u.id = "u";
  u.phonemes = {1, 2, 0};
  u.durations = {2, 3, 1};
  u.f0_hz = {100, 110, 0, 0, 120, 130};
  u.accent = 1;
  u.speaker = 4;
  return u;
}

TEST(NormalizeF0Test, ConstantContourIsZero) {
  std::vector<double> f0(5, 100.0);
  for (double v : NormalizeF0(f0, AllVoiced(5))) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(NormalizeF0Test, HandComputedTwoLevels) {
  std::vector<double> f0{100, 100, 200, 200};
  std::vector<double> out = NormalizeF0(f0, AllVoiced(4));
  const double h = std::log(2.0) / 2.0;
  EXPECT_NEAR(out[0], -h, 1e-12);
  EXPECT_NEAR(out[1], -h, 1e-12);
  EXPECT_NEAR(out[2], h, 1e-12);
  EXPECT_NEAR(out[3], h, 1e-12);
}

TEST(NormalizeF0Test, UnvoicedGapIsInterpolatedAndEdgesHeld) {
  const double a = std::log(100.0), b = std::log(400.0);
  std::vector<double> f0{0, 100, 0, 400, 0};
  std::vector<std::uint8_t> vuv{0, 1, 0, 1, 0};
  std::vector<double> out = NormalizeF0(f0, vuv);
  const double mid = (a + b) / 2.0;
  const double mean = (a + a + mid + b + b) / 5.0;
  EXPECT_NEAR(out[0], a - mean, 1e-12);
  EXPECT_NEAR(out[2], mid - mean, 1e-12);
  EXPECT_NEAR(out[4], b - mean, 1e-12);
}

TEST(NormalizeF0Test, VoicedMeanSwitch) {
  const double a = std::log(100.0), b = std::log(400.0);
  std::vector<double> f0{100, 0, 400};
  std::vector<std::uint8_t> vuv{1, 0, 1};
  std::vector<double> out = NormalizeF0(f0, vuv, F0MeanMode::kVoicedFrames);
  EXPECT_NEAR(out[0] + out[2], 0.0, 1e-12);
  EXPECT_NEAR(out[1], (a + b) / 2 - (a + b) / 2, 1e-12);
}

TEST(NormalizeF0Test, AllUnvoicedGivesZeros) {
  std::vector<double> f0(4, 0.0);
  std::vector<std::uint8_t> vuv(4, 0);
  for (double v : NormalizeF0(f0, vuv)) EXPECT_EQ(v, 0.0);
}

TEST(NormalizeF0Test, ConstantLogOffsetLeavesOutputUnchanged) {
  std::vector<double> f0{0, 120, 130, 0, 90, 150};
  std::vector<std::uint8_t> vuv{0, 1, 1, 0, 1, 1};
  std::vector<double> shifted = f0;
  for (double& v : shifted) v *= 1.7;
  std::vector<double> a = NormalizeF0(f0, vuv), b = NormalizeF0(shifted, vuv);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(NormalizeF0Test, VoicedFrameWithoutPitchIsRejected) {
  std::vector<double> f0{100, 0};
  EXPECT_THROW(NormalizeF0(f0, AllVoiced(2)), DataError);
}

TEST(UpsampleTest, RepeatsEachPhoneme) {
  EmbeddingTable table = EmbeddingTable::Random(4, 3, 1);
  std::vector<int> ph{1, 2}, dur{2, 3};
  Matrix frames = UpsamplePhonemes(ph, dur, table);
  ASSERT_EQ(frames.rows(), 5u);
  const int expected[] = {1, 1, 2, 2, 2};
  for (std::size_t r = 0; r < 5; ++r) {
    auto row = table.Row(expected[r]);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(frames(r, c), row[c]);
  }
}

TEST(UpsampleTest, SinglePhonemeSingleFrame) {
  EmbeddingTable table = EmbeddingTable::Random(4, 3, 1);
  std::vector<int> ph{3}, dur{1};
  Matrix frames = UpsamplePhonemes(ph, dur, table);
  ASSERT_EQ(frames.rows(), 1u);
  EXPECT_EQ(frames(0, 2), table.Row(3)[2]);
}

TEST(UpsampleTest, RejectsEmptyUnknownAndBadDurations) {
  EmbeddingTable table = EmbeddingTable::Random(4, 3, 1);
  EXPECT_THROW(UpsamplePhonemes({}, {}, table), DataError);
  std::vector<int> unknown{9}, one{1};
  EXPECT_THROW(UpsamplePhonemes(unknown, one, table), DataError);
  std::vector<int> ph{1}, zero{0};
  EXPECT_THROW(UpsamplePhonemes(ph, zero, table), DataError);
}

class ConditionSetTest : public ::testing::Test {
 protected:
  ConditionTables tables = ConditionTables::Make(4, 5, 2, 3, 7);
  SpeakerEmbedding a{{1.0, 0.0, 2.0}};
  SpeakerEmbedding b{{0.0, -1.0, 0.5}};
};

TEST_F(ConditionSetTest, DifferentSpeakersChangeOnlySpeaker) {
  Utterance u = MakeUtterance();
  ConditionSet ca = BuildConditionSet(u, tables, a, {});
  ConditionSet cb = BuildConditionSet(u, tables, b, {});
  EXPECT_NE(ca.speaker, cb.speaker);
  EXPECT_EQ(ca.f0_norm, cb.f0_norm);
  EXPECT_EQ(ca.vuv, cb.vuv);
  EXPECT_EQ(ca.phoneme_frames, cb.phoneme_frames);
  EXPECT_EQ(ca.accent, cb.accent);
}

TEST_F(ConditionSetTest, VuvFollowsPitchAndIsBinary) {
  ConditionSet c = BuildConditionSet(MakeUtterance(), tables, a, {});
  EXPECT_EQ(c.vuv, (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1}));
}

TEST_F(ConditionSetTest, WithoutF0UsesZeros) {
  ConditionOptions options;
  options.use_f0 = false;
  ConditionSet c = BuildConditionSet(MakeUtterance(), tables, a, options);
  for (double v : c.f0_norm) EXPECT_EQ(v, 0.0);
  for (auto v : c.vuv) EXPECT_EQ(v, 0);
}

TEST_F(ConditionSetTest, FrameLengthMismatchIsRejected) {
  Utterance u = MakeUtterance();
  u.f0_hz.pop_back();
  EXPECT_THROW(BuildConditionSet(u, tables, a, {}), DataError);
  Utterance v = MakeUtterance();
  v.mel = MelTensor(Matrix(4, 2));
  EXPECT_THROW(BuildConditionSet(v, tables, a, {}), DataError);
}

TEST_F(ConditionSetTest, SpeakerSources) {
  Utterance u = MakeUtterance();
  SpeakerTable table;
  table.Set(4, b, 0);
  EXPECT_EQ(BuildConditionSet(u, tables, LookupSpeaker{&table}, {}).speaker, b);
  u.speaker = 5;
  EXPECT_THROW(BuildConditionSet(u, tables, LookupSpeaker{&table}, {}),
               DataError);

  struct FixedEncoder : SpeakerEncoder {
    SpeakerEmbedding Encode(const MelTensor&) const override {
      return SpeakerEmbedding{{3.0, 3.0, 3.0}};
    }
    std::size_t dim() const override { return 3; }
  } encoder;
  u.mel = MelTensor(Matrix(6, 2));
  EXPECT_EQ(BuildConditionSet(u, tables, EncodeSpeaker{&encoder}, {}).speaker,
            (SpeakerEmbedding{{3.0, 3.0, 3.0}}));
}

TEST_F(ConditionSetTest, FrameMatrixLayout) {
  ConditionSet c = BuildConditionSet(MakeUtterance(), tables, a, {});
  Matrix m = FrameConditionMatrix(c);
  ASSERT_EQ(m.rows(), 6u);
  ASSERT_EQ(m.cols(), ConditionWidth(5, 3, 3));
  EXPECT_EQ(m.cols(), 5u + 1 + 1 + 3 + 3);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(m(r, k), c.phoneme_frames(r, k));
    EXPECT_EQ(m(r, 5), c.f0_norm[r]);
    EXPECT_EQ(m(r, 6), c.vuv[r]);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(m(r, 7 + k), a.values[k]);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(m(r, 10 + k), c.accent[k]);
  }
}

TEST_F(ConditionSetTest, ZeroConditionsGiveZeroMatrix) {
  ConditionSet c;
  c.speaker = SpeakerEmbedding{{0.0, 0.0}};
  c.f0_norm.assign(3, 0.0);
  c.vuv.assign(3, 0);
  c.phoneme_frames = Matrix(3, 4);
  c.accent.assign(2, 0.0);
  const Matrix m = FrameConditionMatrix(c);
  for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST_F(ConditionSetTest, PermutingPhonemesPermutesPhonemeRowsOnly) {
  Utterance u = MakeUtterance();
  u.durations = {1, 1, 1};
  u.f0_hz = {100, 0, 150};
  Utterance p = u;
  p.phonemes = {u.phonemes[2], u.phonemes[0], u.phonemes[1]};
  Matrix mu = FrameConditionMatrix(BuildConditionSet(u, tables, a, {}));
  Matrix mp = FrameConditionMatrix(BuildConditionSet(p, tables, a, {}));
  const std::size_t perm[] = {2, 0, 1};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < mu.cols(); ++k) {
      if (k < 5) {
        EXPECT_EQ(mp(r, k), mu(perm[r], k));
      } else {
        EXPECT_EQ(mp(r, k), mu(r, k));
      }
    }
  }
}

}  // namespace
}  // namespace nfvc
