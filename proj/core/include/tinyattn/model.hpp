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
// Self-describing textual model container. One field per line, hex-encoded
// blobs, every parse error reported with its line number. Small models and
// reviewability beat a binary graph format at this scale.

#ifndef TINYATTN_MODEL_HPP
#define TINYATTN_MODEL_HPP

#include <string>
#include <vector>

#include "tinyattn/block.hpp"
#include "tinyattn/planner.hpp"
#include "tinyattn/tensor.hpp"

namespace tinyattn {

// One quantized layer: packed int8 weights in kernel streaming order,
// the power-of-two scale, its requantization constants, and the optional
// int16 bias.
struct WeightSection {
  bool present = false;
  std::vector<int8_t> data;
  int scale_exp = 7;
  uint16_t eps_mul = 1;
  int eps_div = 0;
  std::vector<int16_t> bias;
};

struct ModelContainer {
  std::string name = "model";
  AttnDims dims;
  int64_t f_width = 0;  // fully-connected stage width, reporting only
  AttnFlavor flavor = AttnFlavor::MHSA;

  int x_exp = 7, q_exp = 7, k_exp = 7, v_exp = 7, m1_exp = 7, out_exp = 7, m2_exp = 7;
  uint16_t gemm1_mul = 1;
  int gemm1_div = 0;
  uint16_t gemm2_mul = 1;
  int gemm2_div = 0;

  WeightSection wq, wk, wv, wout, wstar;

  // Optional float weights for oracle runs and offline fusion, logical
  // row-major orientation: wq/wk/wv (H,E,P); wout (H*P, E).
  std::vector<float> fwq, fwk, fwv, fwout;

  void validate() const;
};

ModelContainer parse_model(const std::string& text);
std::string serialize_model(const ModelContainer& m);

// Platform description file: capacities, cores, and the accounting policy.
MemConfig parse_platform(const std::string& text);
std::string serialize_platform(const MemConfig& cfg);

// Executable block from a validated container.
AttnBlock to_block(const ModelContainer& m);

// Deterministic random model for the bundled shapes and tests. Weights are
// uniform in a fan-in-scaled range, activations assume |x| < 1 (exponent 7),
// requantization constants derived from the calibrated scales.
ModelContainer make_seeded_model(const AttnDims& dims, int64_t f_width, uint64_t seed,
                                 AttnFlavor flavor = AttnFlavor::MHSA,
                                 bool with_float = true);

// Offline fusion: quantize W* = Wq Wk^T from the float sections and emit an
// FWSA-flavored container. Q/K biases cannot fold through X^T and are
// dropped. Throws ValueError when the float sections are missing.
ModelContainer fuse_container(const ModelContainer& m);

// Deterministic int8 input at the model's x scale.
QuantTensor make_seeded_input(const AttnDims& dims, int x_exp, uint64_t seed);

}  // namespace tinyattn

#endif  // TINYATTN_MODEL_HPP
