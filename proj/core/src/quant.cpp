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

#include "tinyattn/quant.hpp"

#include <cmath>

namespace tinyattn {

int8_t quantize_float(double x, int scale_exp) {
  if (!std::isfinite(x)) {
    throw ValueError("cannot quantize non-finite value");
  }
  const double scaled = x * std::exp2(scale_exp);
  double r = std::nearbyint(scaled);  // default FE_TONEAREST: half to even
  if (r < -128.0) r = -128.0;
  if (r > 127.0) r = 127.0;
  return static_cast<int8_t>(r);
}

namespace {

CalibrationStats calibrate_impl(double max_abs) {
  CalibrationStats stats;
  stats.max_abs = max_abs;
  if (max_abs == 0.0) {
    stats.chosen_exp = 7;
    return stats;
  }
  // Largest n with 127 * 2^(-n) >= max_abs. Start from the log2 estimate and
  // nudge, so FP rounding in the estimate cannot change the result.
  int n = static_cast<int>(std::floor(std::log2(127.0 / max_abs)));
  while (127.0 * std::exp2(-(n + 1)) >= max_abs) ++n;
  while (127.0 * std::exp2(-n) < max_abs) --n;
  stats.chosen_exp = n;
  return stats;
}

template <typename T>
CalibrationStats calibrate_span(std::span<const T> values) {
  if (values.empty()) {
    throw ValueError("cannot calibrate an empty tensor");
  }
  double max_abs = 0.0;
  for (T v : values) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw ValueError("cannot calibrate non-finite values");
    }
    max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
  }
  return calibrate_impl(max_abs);
}

}  // namespace

CalibrationStats calibrate(std::span<const double> values) { return calibrate_span(values); }
CalibrationStats calibrate(std::span<const float> values) { return calibrate_span(values); }

RequantParams derive_requant(int in_exp, int w_exp, int out_exp) {
  RequantParams rp;
  const int d = in_exp + w_exp - out_exp;
  if (d >= 0) {
    if (d >= 32) {
      throw ScaleOverflowError("eps_div " + std::to_string(d) + " exceeds shift encoding");
    }
    rp.eps_mul = 1;
    rp.eps_div = d;
  } else {
    const int up = -d;
    if (up >= 16) {
      throw ScaleOverflowError("eps_mul 2^" + std::to_string(up) + " exceeds 16 bits");
    }
    rp.eps_mul = static_cast<uint16_t>(1u << up);
    rp.eps_div = 0;
  }
  return rp;
}

int sqrt_d_shift(int64_t p_dim) {
  if (p_dim <= 1) return 0;
  return static_cast<int>(std::lround(0.5 * std::log2(static_cast<double>(p_dim))));
}

}  // namespace tinyattn
