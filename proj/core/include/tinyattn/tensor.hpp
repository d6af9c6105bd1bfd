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

#ifndef TINYATTN_TENSOR_HPP
#define TINYATTN_TENSOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tinyattn/errors.hpp"

namespace tinyattn {

// Axis order of a dense row-major int8 buffer. Activation layouts follow the
// attention dataflow (HSP for Q/K, HPS for V, SHS for the head-interleaved
// attention map); HPE and EHP are the packed weight orders the kernels stream.
enum class Layout {
  SE,          // (S, E) input activations
  HSP,         // (H, S, P) head-major, row per sequence position
  HPS,         // (H, P, S) head-major, transposed per head
  SHS,         // (S, H, S') attention map, heads interleaved in the row axis
  SS_per_head, // (H, S, S') attention map, one dense S x S slab per head
  SE_out,      // (S, E) block output
  HPE,         // (H, P, E) projection weights, contiguous in E
  EHP,         // (E, H, P) output-projection weights, contiguous in H*P
};

int layout_rank(Layout layout);
const char* layout_name(Layout layout);

// Dense quantized tensor: int8 payload plus the metadata needed to interpret
// it (axis extents in layout order and the power-of-two scale). The real
// value of an element q is q * 2^(-scale_exp).
struct QuantTensor {
  std::vector<int8_t> data;
  std::vector<int64_t> shape;  // extents in layout axis order
  Layout layout = Layout::SE;
  int scale_exp = 0;

  int64_t elems() const { return static_cast<int64_t>(data.size()); }
  int8_t at(std::span<const int64_t> coords) const;
  int8_t& at(std::span<const int64_t> coords);
};

// Zero-initialized tensor with the given metadata. Throws ShapeError on a
// rank mismatch or non-positive extent.
QuantTensor alloc_tensor(std::vector<int64_t> shape, Layout layout, int scale_exp);

// Row-major linear offset of `coords` under the tensor's layout.
// Throws BoundsError when a coordinate falls outside its extent.
int64_t linear_offset(const QuantTensor& t, std::span<const int64_t> coords);

// Element read at layout-ordered coordinates.
int8_t index(const QuantTensor& t, std::span<const int64_t> coords);

// The four attention hyperparameters. All tensor sizes in the block derive
// from these.
struct AttnDims {
  int64_t S = 0;  // sequence length
  int64_t E = 0;  // embedding dimension
  int64_t P = 0;  // projection dimension
  int64_t H = 0;  // head count

  void validate() const;
  bool operator==(const AttnDims&) const = default;
};

// Named tensors of the attention block, for byte accounting.
enum class TensorRole { X, Q, K, V, A, M1, Out, WQkvEach, WOut, WStar };

// Attention front-end variant: classical Q/K projections plus first GEMM,
// or the offline-fused X W* X^T form.
enum class AttnFlavor { MHSA, FWSA };

// Exact int8 byte size of `role` under `dims` (1 byte per element).
int64_t tensor_bytes(const AttnDims& dims, TensorRole role);

const char* role_name(TensorRole role);

// Per-tensor requantization constants: int32 accumulator -> int8 via
// y = clamp(round_shift(acc * eps_mul, eps_div)). The optional bias is a
// per-output-feature int16 addend applied before requantization.
struct RequantParams {
  uint16_t eps_mul = 1;
  int eps_div = 0;  // < 32
  std::vector<int16_t> bias;
  int bits = 8;
};

}  // namespace tinyattn

#endif  // TINYATTN_TENSOR_HPP
