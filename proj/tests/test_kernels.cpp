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

#include "tinyattn/kernels.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tinyattn/oracle.hpp"

namespace tinyattn {
namespace {

using testutil::Rng;

TEST(LinearIrl, IdentityProjection) {
  const AttnDims d{4, 6, 6, 3};
  Rng rng(1);
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  LinearWeights w;
  w.w = alloc_tensor({d.H, d.P, d.E}, Layout::HPE, 6);
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t p = 0; p < d.P; ++p) w.w.data[(h * d.P + p) * d.E + p] = 64;  // 1.0 at 2^-6
  w.rp = testutil::shift_rp(6);

  const QuantTensor out = linear_irl(x, w, d, 7);
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t s = 0; s < d.S; ++s)
      for (int64_t p = 0; p < d.P; ++p)
        EXPECT_EQ(out.data[(h * d.S + s) * d.P + p], x.data[s * d.E + p]);
}

TEST(LinearIrl, BitExactVsNaive) {
  Rng rng(2);
  const AttnDims d{4, 8, 8, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  EXPECT_EQ(linear_irl(x, w, d, 7).data, naive_linear_irl(x, w, d, 7).data);
}

TEST(LinearIrl, TrFormerOutputBuffer) {
  Rng rng(3);
  const AttnDims d{5, 32, 32, 8};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  const QuantTensor q = linear_irl(x, w, d, 7);
  EXPECT_EQ(q.elems(), 1280);
  EXPECT_EQ(q.layout, Layout::HSP);
}

TEST(LinearWrl, TransposeDuality) {
  Rng rng(4);
  const AttnDims d{3, 4, 5, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  const QuantTensor o_irl = linear_irl(x, w, d, 7);
  const QuantTensor o_wrl = linear_wrl(x, w, d, 7);
  for (int64_t h = 0; h < d.H; ++h)
    for (int64_t s = 0; s < d.S; ++s)
      for (int64_t p = 0; p < d.P; ++p)
        EXPECT_EQ(o_wrl.data[(h * d.P + p) * d.S + s], o_irl.data[(h * d.S + s) * d.P + p]);
}

TEST(LinearWrl, BitExactVsNaive) {
  Rng rng(5);
  const AttnDims d{3, 4, 5, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  EXPECT_EQ(linear_wrl(x, w, d, 7).data, naive_linear_wrl(x, w, d, 7).data);
}

TEST(LinearWrl, DegenerateSequenceMatchesIrlBytes) {
  Rng rng(6);
  const AttnDims d{1, 6, 4, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  EXPECT_EQ(linear_wrl(x, w, d, 7).data, linear_irl(x, w, d, 7).data);
}

TEST(MatmulSoftmax, ZeroQueryGivesUniformRows) {
  const AttnDims d{4, 4, 8, 2};
  Rng rng(7);
  const QuantTensor q = alloc_tensor({d.H, d.S, d.P}, Layout::HSP, 7);
  const QuantTensor k = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const QuantTensor a = matmul_softmax(q, k, testutil::shift_rp(2), d);
  for (int8_t v : a.data) EXPECT_EQ(v, 32);  // 2^7 / S with S = 4
}

TEST(MatmulSoftmax, BitExactVsNaive) {
  Rng rng(8);
  const AttnDims d{4, 4, 8, 2};
  const QuantTensor q = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const QuantTensor k = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const RequantParams rp = testutil::shift_rp(2);
  EXPECT_EQ(matmul_softmax(q, k, rp, d).data, naive_gemm1_softmax(q, k, rp, d).data);
}

TEST(MatmulSoftmax, SingletonRowSaturates) {
  Rng rng(9);
  const AttnDims d{1, 4, 3, 2};
  const QuantTensor q = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const QuantTensor k = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const QuantTensor a = matmul_softmax(q, k, testutil::shift_rp(1), d);
  for (int8_t v : a.data) EXPECT_EQ(v, 127);
}

TEST(MatmulM2, OneHotAttentionSelectsValueRows) {
  const AttnDims d{5, 4, 6, 2};
  Rng rng(10);
  QuantTensor a = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
  for (int64_t s = 0; s < d.S; ++s)
    for (int64_t h = 0; h < d.H; ++h) a.data[(s * d.H + h) * d.S + s] = 127;
  const QuantTensor v = testutil::random_tensor(rng, {d.H, d.P, d.S}, Layout::HPS, 7);
  const QuantTensor m1 = matmul_m2(a, v, testutil::shift_rp(7), d, 7);
  for (int64_t s = 0; s < d.S; ++s)
    for (int64_t h = 0; h < d.H; ++h)
      for (int64_t p = 0; p < d.P; ++p) {
        const int got = m1.data[s * d.H * d.P + h * d.P + p];
        const int want = v.data[(h * d.P + p) * d.S + s];
        EXPECT_NEAR(got, want, 1);
      }
}

TEST(MatmulM2, BitExactVsNaive) {
  Rng rng(11);
  const AttnDims d{4, 4, 8, 2};
  const QuantTensor a = testutil::random_tensor(rng, {d.S, d.H, d.S}, Layout::SHS, 7);
  const QuantTensor v = testutil::random_tensor(rng, {d.H, d.P, d.S}, Layout::HPS, 7);
  const RequantParams rp = testutil::shift_rp(7);
  EXPECT_EQ(matmul_m2(a, v, rp, d, 7).data, naive_gemm2(a, v, rp, d, 7).data);
}

TEST(MatmulM2, ScalarPath) {
  const AttnDims d{1, 1, 1, 1};
  QuantTensor a = alloc_tensor({1, 1, 1}, Layout::SHS, 7);
  a.data[0] = 127;
  QuantTensor v = alloc_tensor({1, 1, 1}, Layout::HPS, 7);
  v.data[0] = -50;
  const QuantTensor m1 = matmul_m2(a, v, testutil::shift_rp(7), d, 7);
  EXPECT_NEAR(m1.data[0], -50, 1);
}

TEST(LinearOut, IdentityPassthrough) {
  const AttnDims d{3, 6, 3, 2};  // H*P == E
  Rng rng(12);
  const QuantTensor m1 = testutil::random_tensor(rng, {d.S, d.H * d.P}, Layout::SE, 7);
  LinearWeights w;
  w.w = alloc_tensor({d.E, d.H, d.P}, Layout::EHP, 6);
  for (int64_t e = 0; e < d.E; ++e) w.w.data[e * d.H * d.P + e] = 64;
  w.rp = testutil::shift_rp(6);
  const QuantTensor out = linear_out(m1, w, d, 7);
  EXPECT_EQ(out.data, m1.data);
}

TEST(LinearOut, BitExactVsNaive) {
  Rng rng(13);
  const AttnDims d{5, 32, 32, 8};
  const QuantTensor m1 = testutil::random_tensor(rng, {d.S, d.H * d.P}, Layout::SE, 7);
  const LinearWeights w = testutil::random_out_weights(rng, d);
  EXPECT_EQ(linear_out(m1, w, d, 7).data, naive_linear_out(m1, w, d, 7).data);
}

TEST(LinearOut, BiasOnly) {
  const AttnDims d{2, 4, 3, 2};
  Rng rng(14);
  const QuantTensor m1 = alloc_tensor({d.S, d.H * d.P}, Layout::SE, 7);
  LinearWeights w = testutil::random_out_weights(rng, d);
  for (int64_t e = 0; e < d.E; ++e) w.rp.bias[e] = static_cast<int16_t>(100 * e - 150);
  const QuantTensor out = linear_out(m1, w, d, 7);
  for (int64_t s = 0; s < d.S; ++s)
    for (int64_t e = 0; e < d.E; ++e)
      EXPECT_EQ(out.data[s * d.E + e], requantize(w.rp.bias[e], w.rp));
}

TEST(FwsaFused, BitExactVsNaive) {
  Rng rng(15);
  const AttnDims d{4, 8, 8, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const FwsaWeights w = testutil::random_fwsa_weights(rng, d);
  EXPECT_EQ(fwsa_fused(x, w, d).data, naive_fwsa(x, w, d).data);
}

TEST(FwsaFused, ZeroInputGivesUniformAttention) {
  const AttnDims d{4, 6, 6, 2};
  Rng rng(16);
  const QuantTensor x = alloc_tensor({d.S, d.E}, Layout::SE, 7);
  const FwsaWeights w = testutil::random_fwsa_weights(rng, d);
  const QuantTensor a = fwsa_fused(x, w, d);
  for (int8_t v : a.data) EXPECT_EQ(v, 32);
}

// Any head/row partition of a kernel's parallel axis reproduces the full
// run bit-exactly (the worker contract).
TEST(Kernels, PartitionedExecutionMatchesFull) {
  Rng rng(17);
  const AttnDims d{6, 8, 5, 4};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights wq = testutil::random_proj_weights(rng, d);
  const QuantTensor full = linear_irl(x, wq, d, 7);

  QuantTensor sliced = alloc_tensor({d.H, d.S, d.P}, Layout::HSP, 7);
  for (int64_t h = 0; h < d.H; ++h) {
    linear_irl(x, wq, d, sliced, {h, h + 1}, full_range(d.S));
  }
  EXPECT_EQ(full.data, sliced.data);

  const QuantTensor k = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  const RequantParams rp = testutil::shift_rp(1);
  const QuantTensor a_full = matmul_softmax(full, k, rp, d);
  QuantTensor a_sliced = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
  matmul_softmax(full, k, rp, d, a_sliced, full_range(d.S), {0, 2});
  matmul_softmax(full, k, rp, d, a_sliced, full_range(d.S), {2, 4});
  EXPECT_EQ(a_full.data, a_sliced.data);
}

TEST(Kernels, ShapeMismatchRejected) {
  Rng rng(18);
  const AttnDims d{4, 8, 8, 2};
  const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
  const LinearWeights w = testutil::random_proj_weights(rng, d);
  const AttnDims wrong{4, 8, 4, 2};
  EXPECT_THROW(linear_irl(x, w, wrong, 7), ShapeError);
  const QuantTensor bad_a = testutil::random_tensor(rng, {d.S, d.H, d.S}, Layout::SHS, 7);
  const QuantTensor v_hsp = testutil::random_tensor(rng, {d.H, d.S, d.P}, Layout::HSP, 7);
  EXPECT_THROW(matmul_m2(bad_a, v_hsp, testutil::shift_rp(7), d, 7), ShapeError);
}

// Randomized sweep across non-multiple-of-unroll shapes; all six kernels
// against their naive references.
TEST(Kernels, RandomizedOracleSweep) {
  Rng rng(19);
  for (int trial = 0; trial < 150; ++trial) {
    const AttnDims d{rng.pick(1, 16), rng.pick(1, 16), rng.pick(1, 16), rng.pick(1, 4)};
    const QuantTensor x = testutil::random_tensor(rng, {d.S, d.E}, Layout::SE, 7);
    const LinearWeights wq = testutil::random_proj_weights(rng, d);
    const LinearWeights wv = testutil::random_proj_weights(rng, d);
    const LinearWeights wo = testutil::random_out_weights(rng, d);
    const FwsaWeights fw = testutil::random_fwsa_weights(rng, d);
    const RequantParams rp1 = testutil::shift_rp(static_cast<int>(rng.pick(0, 3)));
    const RequantParams rp2 = testutil::shift_rp(7);

    const QuantTensor q = linear_irl(x, wq, d, 7);
    ASSERT_EQ(q.data, naive_linear_irl(x, wq, d, 7).data);
    const QuantTensor v = linear_wrl(x, wv, d, 7);
    ASSERT_EQ(v.data, naive_linear_wrl(x, wv, d, 7).data);
    const QuantTensor a = matmul_softmax(q, q, rp1, d);
    ASSERT_EQ(a.data, naive_gemm1_softmax(q, q, rp1, d).data);
    const QuantTensor m1 = matmul_m2(a, v, rp2, d, 7);
    ASSERT_EQ(m1.data, naive_gemm2(a, v, rp2, d, 7).data);
    ASSERT_EQ(linear_out(m1, wo, d, 7).data, naive_linear_out(m1, wo, d, 7).data);
    ASSERT_EQ(fwsa_fused(x, fw, d).data, naive_fwsa(x, fw, d).data);
  }
}

}  // namespace
}  // namespace tinyattn
