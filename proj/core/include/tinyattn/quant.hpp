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

#ifndef TINYATTN_QUANT_HPP
#define TINYATTN_QUANT_HPP

#include <cmath>
#include <cstdint>
#include <span>

#include "tinyattn/tensor.hpp"

namespace tinyattn {

// Result of scanning a float tensor for a per-tensor power-of-two scale.
struct CalibrationStats {
  double max_abs = 0.0;
  int chosen_exp = 7;
};

// Shift-based reduction of an int32 accumulator to int8:
//   y = clamp(round_shift(acc * eps_mul, eps_div), -128, 127)
// where round_shift adds 2^(eps_div-1) before the arithmetic right shift
// (round half up). The multiply runs in 64-bit intermediate precision.
inline int8_t requantize(int32_t acc, const RequantParams& rp) {
  int64_t v = static_cast<int64_t>(acc) * static_cast<int64_t>(rp.eps_mul);
  if (rp.eps_div > 0) {
    v = (v + (int64_t{1} << (rp.eps_div - 1))) >> rp.eps_div;
  }
  const int64_t lo = -(int64_t{1} << (rp.bits - 1));
  const int64_t hi = (int64_t{1} << (rp.bits - 1)) - 1;
  if (v < lo) v = lo;
  if (v > hi) v = hi;
  return static_cast<int8_t>(v);
}

// Round-to-nearest-even quantization of a real value onto the int8 grid with
// scale 2^(-scale_exp). Throws ValueError on non-finite input.
int8_t quantize_float(double x, int scale_exp);

// Real value represented by a quantized element.
inline double dequantize(int8_t q, int scale_exp) {
  return static_cast<double>(q) * std::exp2(-scale_exp);
}

// Largest exponent n such that 127 * 2^(-n) still covers max|tensor|.
// An all-zero tensor maps to n = 7 by convention. Throws ValueError on an
// empty tensor.
CalibrationStats calibrate(std::span<const double> values);
CalibrationStats calibrate(std::span<const float> values);

// Requantization constants that take an accumulator of scale
// 2^(-in_exp - w_exp) to an int8 output of scale 2^(-out_exp). Prefers a
// pure shift; falls back to a power-of-two eps_mul when the output grid is
// finer than the accumulator grid. Throws ScaleOverflowError when eps_mul
// would exceed 16 bits (or the shift its encoding).
RequantParams derive_requant(int in_exp, int w_exp, int out_exp);

// Right-shift applied to first-GEMM logits to fold the 1/sqrt(d) attention
// temperature into the requantization step: round(log2(sqrt(P))).
int sqrt_d_shift(int64_t p_dim);

}  // namespace tinyattn

#endif  // TINYATTN_QUANT_HPP
