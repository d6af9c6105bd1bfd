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

#include <cmath>
#include <tuple>

#include "tinyattn/errors.hpp"

namespace tinyattn {

std::vector<double> fuse_weights(std::span<const double> wq, std::span<const double> wk,
                                 const AttnDims& dims) {
  dims.validate();
  const int64_t H = dims.H, E = dims.E, P = dims.P;
  const size_t expect = static_cast<size_t>(H * E * P);
  if (wq.size() != expect || wk.size() != expect) {
    throw ShapeError("fuse_weights expects (H,E,P) inputs of " + std::to_string(expect) +
                     " elements");
  }
  std::vector<double> w_star(static_cast<size_t>(H * E * E), 0.0);
  for (int64_t h = 0; h < H; ++h) {
    const double* q = wq.data() + h * E * P;
    const double* k = wk.data() + h * E * P;
    double* o = w_star.data() + h * E * E;
    for (int64_t e = 0; e < E; ++e) {
      for (int64_t f = 0; f < E; ++f) {
        double acc = 0.0;
        for (int64_t p = 0; p < P; ++p) acc += q[e * P + p] * k[f * P + p];
        o[e * E + f] = acc;
      }
    }
  }
  return w_star;
}

std::pair<int64_t, int64_t> count_core_ops(const AttnDims& d) {
  d.validate();
  const int64_t mhsa = 2 * d.H * d.S * d.P * d.E + d.H * d.S * d.S * d.P;
  const int64_t fwsa = d.H * d.S * d.E * d.E + d.H * d.S * d.S * d.E;
  return {mhsa, fwsa};
}

std::pair<int64_t, int64_t> count_block_ops(const AttnDims& d) {
  d.validate();
  const int64_t mhsa = 2 * d.S * d.P * d.H * (2 * d.E + d.S);
  // Fused pair + V projection + second GEMM + output projection.
  const int64_t fwsa = d.H * d.S * d.E * d.E + d.H * d.S * d.S * d.E +
                       2 * d.S * d.P * d.H * d.E + d.H * d.S * d.S * d.P;
  return {mhsa, fwsa};
}

ParamCounts count_params(const AttnDims& d) {
  d.validate();
  ParamCounts c;
  c.core_mhsa = 2 * d.H * d.P * d.E;
  c.core_fwsa = d.H * d.E * d.E;
  c.block_mhsa = 4 * d.H * d.E * d.P;
  c.block_fwsa = d.H * d.E * d.E + 2 * d.H * d.E * d.P;
  return c;
}

std::pair<bool, bool> fwsa_beneficial(const AttnDims& d) {
  d.validate();
  const double s = static_cast<double>(d.S);
  const double p = static_cast<double>(d.P);
  const double threshold = p - s / 2.0 + std::sqrt(4.0 * p * p + s * s) / 2.0;
  const bool op_flag = static_cast<double>(d.E) < threshold;
  const bool param_flag = d.E < 2 * d.P;
  return {op_flag, param_flag};
}

AttnCostReport attn_cost_report(const AttnDims& d) {
  AttnCostReport r;
  std::tie(r.macs_mhsa, r.macs_fwsa) = count_core_ops(d);
  std::tie(r.macs_block_mhsa, r.macs_block_fwsa) = count_block_ops(d);
  const ParamCounts pc = count_params(d);
  r.params_mhsa = pc.core_mhsa;
  r.params_fwsa = pc.core_fwsa;
  r.params_block_mhsa = pc.block_mhsa;
  r.params_block_fwsa = pc.block_fwsa;
  std::tie(r.op_beneficial, r.param_beneficial) = fwsa_beneficial(d);
  return r;
}

int64_t fc_stage_macs(const AttnDims& d, int64_t f_width) {
  return 2 * d.S * (f_width * d.E + 2 * f_width + d.E);
}

int64_t fc_stage_params(const AttnDims& d, int64_t f_width) {
  return 2 * f_width * d.E;
}

}  // namespace tinyattn
