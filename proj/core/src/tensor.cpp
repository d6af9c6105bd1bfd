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

#include "tinyattn/tensor.hpp"

namespace tinyattn {

int layout_rank(Layout layout) {
  switch (layout) {
    case Layout::SE:
    case Layout::SE_out:
      return 2;
    case Layout::HSP:
    case Layout::HPS:
    case Layout::SHS:
    case Layout::SS_per_head:
    case Layout::HPE:
    case Layout::EHP:
      return 3;
  }
  return 0;
}

const char* layout_name(Layout layout) {
  switch (layout) {
    case Layout::SE: return "SE";
    case Layout::HSP: return "HSP";
    case Layout::HPS: return "HPS";
    case Layout::SHS: return "SHS";
    case Layout::SS_per_head: return "SS_per_head";
    case Layout::SE_out: return "SE_out";
    case Layout::HPE: return "HPE";
    case Layout::EHP: return "EHP";
  }
  return "?";
}

QuantTensor alloc_tensor(std::vector<int64_t> shape, Layout layout, int scale_exp) {
  const int rank = layout_rank(layout);
  if (static_cast<int>(shape.size()) != rank) {
    throw ShapeError("layout " + std::string(layout_name(layout)) + " expects rank " +
                     std::to_string(rank) + ", got " + std::to_string(shape.size()));
  }
  int64_t n = 1;
  for (int64_t extent : shape) {
    if (extent <= 0) {
      throw ShapeError("non-positive extent " + std::to_string(extent));
    }
    n *= extent;
  }
  QuantTensor t;
  t.data.assign(static_cast<size_t>(n), 0);
  t.shape = std::move(shape);
  t.layout = layout;
  t.scale_exp = scale_exp;
  return t;
}

int64_t linear_offset(const QuantTensor& t, std::span<const int64_t> coords) {
  if (coords.size() != t.shape.size()) {
    throw BoundsError("coordinate rank " + std::to_string(coords.size()) +
                      " does not match tensor rank " + std::to_string(t.shape.size()));
  }
  int64_t off = 0;
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= t.shape[i]) {
      throw BoundsError("coordinate " + std::to_string(coords[i]) + " out of range [0, " +
                        std::to_string(t.shape[i]) + ") on axis " + std::to_string(i));
    }
    off = off * t.shape[i] + coords[i];
  }
  return off;
}

int8_t index(const QuantTensor& t, std::span<const int64_t> coords) {
  return t.data[static_cast<size_t>(linear_offset(t, coords))];
}

int8_t QuantTensor::at(std::span<const int64_t> coords) const {
  return data[static_cast<size_t>(linear_offset(*this, coords))];
}

int8_t& QuantTensor::at(std::span<const int64_t> coords) {
  return data[static_cast<size_t>(linear_offset(*this, coords))];
}

void AttnDims::validate() const {
  if (S < 1 || E < 1 || P < 1 || H < 1) {
    throw ShapeError("attention dims must all be >= 1, got S=" + std::to_string(S) +
                     " E=" + std::to_string(E) + " P=" + std::to_string(P) +
                     " H=" + std::to_string(H));
  }
}

int64_t tensor_bytes(const AttnDims& dims, TensorRole role) {
  dims.validate();
  switch (role) {
    case TensorRole::X:
    case TensorRole::Out:
      return dims.S * dims.E;
    case TensorRole::Q:
    case TensorRole::K:
    case TensorRole::V:
    case TensorRole::M1:
      return dims.H * dims.S * dims.P;
    case TensorRole::A:
      return dims.H * dims.S * dims.S;
    case TensorRole::WQkvEach:
      return dims.H * dims.E * dims.P;
    case TensorRole::WOut:
      return dims.H * dims.P * dims.E;
    case TensorRole::WStar:
      return dims.H * dims.E * dims.E;
  }
  throw ValueError("unknown tensor role");
}

const char* role_name(TensorRole role) {
  switch (role) {
    case TensorRole::X: return "X";
    case TensorRole::Q: return "Q";
    case TensorRole::K: return "K";
    case TensorRole::V: return "V";
    case TensorRole::A: return "A";
    case TensorRole::M1: return "M1";
    case TensorRole::Out: return "out";
    case TensorRole::WQkvEach: return "W_qkv";
    case TensorRole::WOut: return "W_out";
    case TensorRole::WStar: return "W_star";
  }
  return "?";
}

}  // namespace tinyattn
