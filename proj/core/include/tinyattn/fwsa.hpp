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
// Offline fusion of the Q/K projection weights (W* = Wq Wk^T per head) and
// the analytic MAC/parameter model that decides when the fused form wins.

#ifndef TINYATTN_FWSA_HPP
#define TINYATTN_FWSA_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tinyattn/tensor.hpp"

namespace tinyattn {

// MAC and parameter comparison between the classical and fused-weight
// attention front ends (Q/K projections + first GEMM vs X W* X^T).
struct AttnCostReport {
  int64_t macs_mhsa = 0;
  int64_t macs_fwsa = 0;
  int64_t macs_block_mhsa = 0;
  int64_t macs_block_fwsa = 0;
  int64_t params_mhsa = 0;
  int64_t params_fwsa = 0;
  int64_t params_block_mhsa = 0;
  int64_t params_block_fwsa = 0;
  bool op_beneficial = false;
  bool param_beneficial = false;
};

// Per-head fusion W*[h] = Wq[h] * Wk[h]^T, computed in float before
// quantization. Inputs are row-major (H, E, P); output is (H, E, E).
std::vector<double> fuse_weights(std::span<const double> wq, std::span<const double> wk,
                                 const AttnDims& dims);

// Core MAC counts: 2HSPE + HS^2P (two projections + first GEMM) vs
// HSE^2 + HS^2E (fused pair).
std::pair<int64_t, int64_t> count_core_ops(const AttnDims& dims);

// Whole attention-stage MAC counts: 2SPH(2E + S) classical, and the fused
// pair plus the unchanged V projection, second GEMM, output projection.
std::pair<int64_t, int64_t> count_block_ops(const AttnDims& dims);

// Parameter counts, biases excluded.
struct ParamCounts {
  int64_t core_mhsa = 0;   // 2HPE
  int64_t core_fwsa = 0;   // HE^2
  int64_t block_mhsa = 0;  // 4HEP
  int64_t block_fwsa = 0;  // HE^2 + 2HEP
};
ParamCounts count_params(const AttnDims& dims);

// Benefit flags: ops iff E < P - S/2 + sqrt(4P^2 + S^2)/2, params iff E < 2P.
std::pair<bool, bool> fwsa_beneficial(const AttnDims& dims);

AttnCostReport attn_cost_report(const AttnDims& dims);

// Fully-connected stage bookkeeping (width F): 2S(FE + 2F + E) MACs, 2FE
// parameters. Reported alongside the attention stage, never executed here.
int64_t fc_stage_macs(const AttnDims& dims, int64_t f_width);
int64_t fc_stage_params(const AttnDims& dims, int64_t f_width);

}  // namespace tinyattn

#endif  // TINYATTN_FWSA_HPP
