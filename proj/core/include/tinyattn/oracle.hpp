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
//
// Reference implementations used as ground truth in equivalence testing.
// The float paths evaluate attention in plain double arithmetic with no
// fusion tricks. The naive integer kernels evaluate each operator in the
// mathematically obvious loop order; they share only the requantize and
// int_softmax primitives with the optimized kernels.

#ifndef TINYATTN_ORACLE_HPP
#define TINYATTN_ORACLE_HPP

#include <span>
#include <vector>

#include "tinyattn/kernels.hpp"
#include "tinyattn/tensor.hpp"

namespace tinyattn {

// Float weights are row-major doubles in logical orientation:
//   X (S,E); Wq/Wk/Wv (H,E,P); Wo (H*P, E); W* (H,E,E).

// Classical attention: per-head projections, Q K^T / sqrt(P), row softmax,
// x V, concatenation, output projection. Returns (S, E).
std::vector<double> float_mhsa(std::span<const double> x, std::span<const double> wq,
                               std::span<const double> wk, std::span<const double> wv,
                               std::span<const double> wo, const AttnDims& dims);

// Fused-weight attention: softmax(X W* X^T / sqrt(P)) with the V and output
// paths unchanged. Returns (S, E).
std::vector<double> float_fwsa(std::span<const double> x, std::span<const double> w_star,
                               std::span<const double> wv, std::span<const double> wo,
                               const AttnDims& dims);

// Attention maps only, (H, S, S), for argmax comparisons.
std::vector<double> float_attention_map(std::span<const double> x,
                                        std::span<const double> wq,
                                        std::span<const double> wk, const AttnDims& dims);

// Naive integer references, one per optimized kernel.
QuantTensor naive_linear_irl(const QuantTensor& x, const LinearWeights& w,
                             const AttnDims& dims, int out_exp);
QuantTensor naive_linear_wrl(const QuantTensor& x, const LinearWeights& w,
                             const AttnDims& dims, int out_exp);
QuantTensor naive_gemm1_softmax(const QuantTensor& q, const QuantTensor& k,
                                const RequantParams& rp, const AttnDims& dims);
QuantTensor naive_gemm2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
                        const AttnDims& dims, int out_exp);
QuantTensor naive_linear_out(const QuantTensor& m1, const LinearWeights& w,
                             const AttnDims& dims, int out_exp);
QuantTensor naive_fwsa(const QuantTensor& x, const FwsaWeights& w, const AttnDims& dims);

// Dispatching wrapper over the naive kernels.
enum class NaiveKind { IRL, WRL, Gemm1Softmax, Gemm2, Out, Fwsa };

struct NaiveInputs {
  const QuantTensor* x = nullptr;
  const QuantTensor* q = nullptr;
  const QuantTensor* k = nullptr;
  const QuantTensor* a = nullptr;
  const QuantTensor* v = nullptr;
  const QuantTensor* m1 = nullptr;
  const LinearWeights* w = nullptr;
  const FwsaWeights* fw = nullptr;
  const RequantParams* rp = nullptr;
  int out_exp = 7;
};

QuantTensor naive_int_kernel(NaiveKind kind, const NaiveInputs& in, const AttnDims& dims);

}  // namespace tinyattn

#endif  // TINYATTN_ORACLE_HPP
