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

#include "tinyattn/ibert.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "tinyattn/errors.hpp"

namespace tinyattn {

namespace {

constexpr double kErfA = 0.2888;   // |a| of the erf polynomial
constexpr double kErfB = 1.769;    // clip point of the erf polynomial
constexpr double kExpB = 1.353;
constexpr double kExpCOverA = 0.344 / 0.3585;

// Exponents beyond this keep the polynomial constants outside int64.
constexpr int kMaxScaleExp = 30;

int clamp_exp(int scale_exp) { return std::clamp(scale_exp, 0, kMaxScaleExp); }

int64_t clamp_i8(int64_t v) {
  return std::clamp<int64_t>(v, -128, 127);
}

__int128 div_round_nearest_wide(__int128 num, __int128 den) {
  if (num >= 0) return (num + den / 2) / den;
  return -((-num + den / 2) / den);
}

}  // namespace

int64_t isqrt(int64_t v) {
  if (v < 0) throw ValueError("isqrt of negative value");
  if (v < 2) return v;
  const auto uv = static_cast<uint64_t>(v);
  int64_t x = int64_t{1} << ((std::bit_width(uv) + 1) / 2);
  while (true) {
    const int64_t y = (x + v / x) >> 1;
    if (y >= x) return x;
    x = y;
  }
}

int64_t div_round_nearest(int64_t num, int64_t den) {
  if (num >= 0) return (num + den / 2) / den;
  return -((-num + den / 2) / den);
}

int64_t shift_round(int64_t v, int sh) {
  if (sh <= 0) return v << (-sh);
  return (v + (int64_t{1} << (sh - 1))) >> sh;
}

IExpConsts iexp_consts(int scale_exp) {
  const int n = clamp_exp(scale_exp);
  IExpConsts c;
  c.ln2_q = std::max<int64_t>(1, static_cast<int64_t>(std::floor(M_LN2 * std::exp2(n))));
  c.b_q = static_cast<int64_t>(std::floor(kExpB * std::exp2(n)));
  c.c_q = static_cast<int64_t>(std::floor(kExpCOverA * std::exp2(2 * n)));
  return c;
}

int64_t iexp_poly(int64_t q_tilde, const IExpConsts& c) {
  // Range reduction: q = -z*ln2 + p with p in (-ln2, 0], then the quadratic.
  const int64_t z = (-q_tilde) / c.ln2_q;
  const int64_t p = q_tilde + z * c.ln2_q;
  const int64_t t = p + c.b_q;
  const int64_t e = t * t + c.c_q;
  if (z >= 63) return 0;
  return e >> z;
}

void int_softmax(std::span<const int32_t> logits, int in_exp, std::span<int8_t> out) {
  const size_t n = logits.size();
  if (n == 0) return;
  if (out.size() != n) throw ShapeError("softmax output length mismatch");

  const IExpConsts consts = iexp_consts(in_exp);
  int64_t max_logit = logits[0];
  for (int32_t v : logits) max_logit = std::max<int64_t>(max_logit, v);

  std::vector<int64_t> e(n);
  __int128 sum = 0;
  for (size_t i = 0; i < n; ++i) {
    e[i] = iexp_poly(static_cast<int64_t>(logits[i]) - max_logit, consts);
    sum += e[i];
  }
  if (sum < 1) sum = 1;
  for (size_t i = 0; i < n; ++i) {
    const __int128 scaled = static_cast<__int128>(e[i]) * 128;
    out[i] = static_cast<int8_t>(clamp_i8(
        static_cast<int64_t>(div_round_nearest_wide(scaled, sum))));
  }
}

std::vector<int8_t> int_softmax(std::span<const int32_t> logits, int in_exp) {
  std::vector<int8_t> out(logits.size());
  int_softmax(logits, in_exp, out);
  return out;
}

int8_t i_gelu_scalar(int8_t q, int scale_exp) {
  const int n = clamp_exp(scale_exp);
  // GELU(x) = x * (erf(x / sqrt2) + 1) / 2. The erf argument shares the
  // integer representation of x: its scale is 2^(-n)/sqrt2.
  const int64_t t_clip = -static_cast<int64_t>(std::floor(-kErfB * std::sqrt(2.0) * std::exp2(n)));
  const int64_t c_one = static_cast<int64_t>(std::floor(std::exp2(2 * n) * 2.0 / kErfA));

  const int64_t qa = std::min<int64_t>(std::abs(static_cast<int64_t>(q)), t_clip);
  const int64_t u = t_clip - qa;
  const int64_t erf_mag = c_one - u * u;
  const int64_t erf_int = q < 0 ? -erf_mag : erf_mag;

  // q * (erf + one) carries scale 2^(-n) * |a|/2 * (2^(-n)/sqrt2)^2; the
  // factor below returns it to 2^(-n): 0.0722 * 2^18 = 18927.
  const __int128 g = static_cast<__int128>(q) * (erf_int + c_one);
  const __int128 num = g * 18927;
  const __int128 den = static_cast<__int128>(1) << (2 * n + 18);
  return static_cast<int8_t>(clamp_i8(
      static_cast<int64_t>(div_round_nearest_wide(num, den))));
}

std::vector<int8_t> i_gelu(std::span<const int8_t> x, int scale_exp) {
  std::vector<int8_t> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = i_gelu_scalar(x[i], scale_exp);
  return out;
}

QuantTensor i_gelu(const QuantTensor& x) {
  QuantTensor out = x;
  for (auto& v : out.data) v = i_gelu_scalar(v, x.scale_exp);
  return out;
}

std::vector<int8_t> i_layernorm(std::span<const int8_t> row, const LayerNormParams& params) {
  const size_t n = row.size();
  if (n < 2) throw ShapeError("layernorm rows need >= 2 elements");
  if (params.gamma.size() != n || params.beta.size() != n) {
    throw ShapeError("layernorm gamma/beta length mismatch");
  }

  int64_t sum = 0;
  for (int8_t v : row) sum += v;
  const int64_t mu = div_round_nearest(sum, static_cast<int64_t>(n));

  int64_t varsum = 0;
  for (int8_t v : row) {
    const int64_t d = v - mu;
    varsum += d * d;
  }
  varsum = std::max<int64_t>(varsum, 1);  // epsilon floor for constant rows
  const int64_t stddev = isqrt(varsum);

  // varsum aggregates n terms, so stddev = sqrt(n)*sigma; multiply the
  // normalized value by sqrt(n) in 8.8 fixed point to compensate.
  const int64_t sqrtn_q = isqrt(static_cast<int64_t>(n) << 16);
  constexpr int kNormExp = 12;

  std::vector<int8_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    const int64_t d = row[i] - mu;
    const int64_t t = div_round_nearest((d * sqrtn_q) << kNormExp, stddev << 8);
    const int sh = kNormExp + params.gamma_exp - params.beta_exp;
    if (sh < 0) throw ValueError("beta scale finer than gamma path");
    const int64_t acc = t * params.gamma[i] + (static_cast<int64_t>(params.beta[i]) << sh);
    out[i] = static_cast<int8_t>(clamp_i8(
        shift_round(acc, kNormExp + params.gamma_exp - params.out_exp)));
  }
  return out;
}

}  // namespace tinyattn
