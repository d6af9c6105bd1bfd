// Copyright 2026 The tinyattn Authors.
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

#include "tinyattn/fwsa.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace tinyattn {
namespace {

constexpr AttnDims kEeg{81, 32, 32, 8};
constexpr AttnDims kEcg{66, 16, 2, 8};
constexpr AttnDims kTr{5, 32, 32, 8};

TEST(FuseWeights, IdentityStaysIdentity) {
  const AttnDims d{2, 4, 4, 2};
  std::vector<double> wq(d.H * d.E * d.P, 0.0), wk = wq;
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t e = 0; e < d.E; ++e) {
      wq[(h * d.E + e) * d.P + e] = 1.0;
      wk[(h * d.E + e) * d.P + e] = 1.0;
    }
  const auto fused = fuse_weights(wq, wk, d);
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t e = 0; e < d.E; ++e)
      for (int64_t f = 0; f < d.E; ++f)
        EXPECT_DOUBLE_EQ(fused[(h * d.E + e) * d.E + f], e == f ? 1.0 : 0.0);
}

TEST(FuseWeights, MatchesBruteForcePerHead) {
  const AttnDims d{2, 4, 3, 2};
  testutil::Rng rng(21);
  std::vector<double> wq(d.H * d.E * d.P), wk(wq.size());
  for (auto& v : wq) v = rng.symmetric(1.0);
  for (auto& v : wk) v = rng.symmetric(1.0);
  const auto fused = fuse_weights(wq, wk, d);
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t e = 0; e < d.E; ++e)
      for (int64_t f = 0; f < d.E; ++f) {
        double acc = 0;
        for (int64_t p = 0; p < d.P; ++p)
          acc += wq[(h * d.E + e) * d.P + p] * wk[(h * d.E + f) * d.P + p];
        EXPECT_NEAR(fused[(h * d.E + e) * d.E + f], acc, 1e-12);
      }
}

TEST(FuseWeights, RankOneWhenPIsOne) {
  const AttnDims d{2, 3, 1, 1};
  std::vector<double> wq{1, 2, 3}, wk{4, 5, 6};
  const auto fused = fuse_weights(wq, wk, d);
  // Outer product: every 2x2 minor vanishes.
  for (int64_t e = 0; e < 2; ++e)
    for (int64_t f = 0; f < 2; ++f) {
      const double det = fused[e * 3 + f] * fused[(e + 1) * 3 + f + 1] -
                         fused[e * 3 + f + 1] * fused[(e + 1) * 3 + f];
      EXPECT_NEAR(det, 0.0, 1e-12);
    }
}

TEST(FuseWeights, ShapeMismatchRejected) {
  const AttnDims d{2, 4, 3, 2};
  std::vector<double> wq(d.H * d.E * d.P), wk(5);
  EXPECT_THROW(fuse_weights(wq, wk, d), ShapeError);
}

TEST(CountCoreOps, EegValues) {
  const auto [mhsa, fwsa] = count_core_ops(kEeg);
  EXPECT_EQ(mhsa, 3'006'720);
  EXPECT_EQ(fwsa, 2'343'168);
}

TEST(CountCoreOps, CrossoverNearE52) {
  const auto [m52, f52] = count_core_ops({32, 52, 32, 8});
  const auto [m51, f51] = count_core_ops({32, 51, 32, 8});
  EXPECT_LT(f51, m51);  // still beneficial at E=51
  EXPECT_GE(f52, m52);  // not at E=52
}

TEST(CountCoreOps, UnitDims) {
  const auto [mhsa, fwsa] = count_core_ops({1, 1, 1, 1});
  EXPECT_EQ(mhsa, 3);
  EXPECT_EQ(fwsa, 2);
}

TEST(CountBlockOps, EegReductionElevenPercent) {
  const auto [mhsa, fwsa] = count_block_ops(kEeg);
  EXPECT_EQ(mhsa, 6'013'440);
  EXPECT_EQ(fwsa, 5'349'888);
  const double red = 100.0 * (mhsa - fwsa) / static_cast<double>(mhsa);
  EXPECT_NEAR(red, 11.0, 0.3);
}

TEST(CountBlockOps, TrReductionTwentyThreePercent) {
  const auto [mhsa, fwsa] = count_block_ops(kTr);
  EXPECT_EQ(mhsa, 176'640);
  EXPECT_EQ(fwsa, 135'680);
  const double red = 100.0 * (mhsa - fwsa) / static_cast<double>(mhsa);
  EXPECT_NEAR(red, 23.2, 0.3);
}

TEST(CountBlockOps, SmallSequenceLimitApproachesThreeQuarters) {
  // With E = P and S -> 0 the ratio tends to 3/4.
  const AttnDims d{1, 64, 64, 8};
  const auto [mhsa, fwsa] = count_block_ops(d);
  EXPECT_NEAR(static_cast<double>(fwsa) / static_cast<double>(mhsa), 0.75, 0.01);
}

TEST(CountParams, EqualDimsGiveQuarterReduction) {
  const ParamCounts c = count_params(kEeg);  // E == P
  EXPECT_EQ(c.block_mhsa, 32'768);
  EXPECT_EQ(c.block_fwsa, 24'576);
  EXPECT_EQ(4 * c.block_fwsa, 3 * c.block_mhsa);  // exactly 0.75
}

TEST(CountParams, CoreCrossoverAtTwiceP) {
  const AttnDims d{16, 64, 32, 4};  // E == 2P
  const ParamCounts c = count_params(d);
  EXPECT_EQ(c.core_mhsa, c.core_fwsa);
}

TEST(FwsaBeneficial, OpFlagFlipsBetween51And52) {
  EXPECT_TRUE(fwsa_beneficial({32, 51, 32, 8}).first);
  EXPECT_FALSE(fwsa_beneficial({32, 52, 32, 8}).first);
}

TEST(FwsaBeneficial, ParamFlagFlipsBetween63And64) {
  EXPECT_TRUE(fwsa_beneficial({32, 63, 32, 8}).second);
  EXPECT_FALSE(fwsa_beneficial({32, 64, 32, 8}).second);
}

TEST(FwsaBeneficial, CubicDimsAlwaysOpBeneficial) {
  for (int64_t n : {2, 8, 32, 64}) {
    EXPECT_TRUE(fwsa_beneficial({n, n, n, 4}).first) << n;
  }
}

// The closed-form inequality agrees with the sign of the exact MAC counts
// over the whole grid.
TEST(FwsaBeneficial, ConsistentWithCoreCounts) {
  for (int64_t s = 1; s <= 64; ++s) {
    for (int64_t e = 1; e <= 64; e += 3) {
      for (int64_t p = 1; p <= 64; p += 3) {
        for (int64_t h : {1, 2, 4, 8}) {
          const AttnDims d{s, e, p, h};
          const auto [mhsa, fwsa] = count_core_ops(d);
          EXPECT_EQ(fwsa_beneficial(d).first, fwsa < mhsa)
              << "S=" << s << " E=" << e << " P=" << p << " H=" << h;
        }
      }
    }
  }
}

TEST(CostReport, EcgFlagsBothFalse) {
  const AttnCostReport r = attn_cost_report(kEcg);
  EXPECT_FALSE(r.op_beneficial);     // E=16 above the op threshold (~2.06)
  EXPECT_FALSE(r.param_beneficial);  // E=16 >= 2P=4
  EXPECT_GT(r.macs_block_fwsa, r.macs_block_mhsa);
}

TEST(FcStage, TableArithmetic) {
  EXPECT_EQ(fc_stage_macs(kEeg, 128), 2 * 81 * (128 * 32 + 2 * 128 + 32));
  EXPECT_EQ(fc_stage_params(kEeg, 128), 2 * 128 * 32);
}

}  // namespace
}  // namespace tinyattn
