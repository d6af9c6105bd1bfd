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

#ifndef TINYATTN_BLOCK_HPP
#define TINYATTN_BLOCK_HPP

#include "tinyattn/kernels.hpp"
#include "tinyattn/tensor.hpp"

namespace tinyattn {

// A quantized attention block: dims, flavor, packed weights, requantization
// constants, and the activation scale exponents of every tensor in the
// pipeline. This is the executable graph the executor and CLI operate on.
struct AttnBlock {
  AttnDims dims;
  AttnFlavor flavor = AttnFlavor::MHSA;

  int x_exp = 7;
  int q_exp = 7;
  int k_exp = 7;
  int v_exp = 7;
  int m1_exp = 7;
  int out_exp = 7;

  LinearWeights wq;  // MHSA only
  LinearWeights wk;  // MHSA only
  LinearWeights wv;
  LinearWeights wout;
  FwsaWeights fwsa;        // FWSA only
  RequantParams rp_gemm1;  // logit scaling before softmax (MHSA path)
  RequantParams rp_gemm2;

  void validate() const;
};

}  // namespace tinyattn

#endif  // TINYATTN_BLOCK_HPP
