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
// Integer-only approximations of softmax, GELU, and LayerNorm in the
// polynomial style introduced by I-BERT (Kim et al., 2021):
//   exp(p) ~ 0.3585 (p + 1.353)^2 + 0.344   on p in (-ln 2, 0],
//            extended by the range reduction exp(q) = 2^(-z) exp(p),
//   erf(x) ~ sign(x) [-0.2888 (min(|x|, 1.769) - 1.769)^2 + 1].
// The coefficients are external constants from that method, fixed here.

#ifndef TINYATTN_IBERT_HPP
#define TINYATTN_IBERT_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tinyattn/tensor.hpp"

namespace tinyattn {

// floor(sqrt(v)) by Newton iteration. v must be nonnegative.
int64_t isqrt(int64_t v);

// Nearest-integer division, ties away from zero. den must be positive.
int64_t div_round_nearest(int64_t num, int64_t den);

// v * 2^(-sh) rounded half up; negative sh shifts left.
int64_t shift_round(int64_t v, int sh);

// Fixed-point constants of the integer exp approximation at input scale
// 2^(-scale_exp). Only ratios of i_exp outputs are meaningful, which is all
// softmax needs.
struct IExpConsts {
  int64_t ln2_q;  // floor(ln2 * 2^n), >= 1
  int64_t b_q;    // floor(1.353 * 2^n)
  int64_t c_q;    // floor(0.344/0.3585 * 4^n)
};
IExpConsts iexp_consts(int scale_exp);

// Relative integer value of exp(q_tilde * 2^(-n)) for q_tilde <= 0.
int64_t iexp_poly(int64_t q_tilde, const IExpConsts& c);

// Row softmax over int32 logits at scale 2^(-in_exp), producing int8 at
// scale 2^(-7). Entries are round(128 * e_i / sum e) clamped to 127, so a
// row always sums to ~128 and equal logits of length n give round(128/n).
void int_softmax(std::span<const int32_t> logits, int in_exp, std::span<int8_t> out);
std::vector<int8_t> int_softmax(std::span<const int32_t> logits, int in_exp);

// Elementwise GELU on int8 at scale 2^(-scale_exp); output keeps the input
// scale, so the positive tail approaches the identity.
int8_t i_gelu_scalar(int8_t q, int scale_exp);
std::vector<int8_t> i_gelu(std::span<const int8_t> x, int scale_exp);
QuantTensor i_gelu(const QuantTensor& x);

// Affine parameters of the integer LayerNorm. gamma and beta are int16 at
// scales 2^(-gamma_exp) and 2^(-beta_exp).
struct LayerNormParams {
  std::vector<int16_t> gamma;
  std::vector<int16_t> beta;
  int gamma_exp = 8;
  int beta_exp = 7;
  int out_exp = 7;
};

// Row-wise integer LayerNorm: integer mean, variance with an epsilon floor
// of 1, Newton integer square root, then the gamma/beta affine and a final
// requantization to int8 at 2^(-out_exp). Rows must have >= 2 elements.
std::vector<int8_t> i_layernorm(std::span<const int8_t> row, const LayerNormParams& params);

}  // namespace tinyattn

#endif  // TINYATTN_IBERT_HPP
