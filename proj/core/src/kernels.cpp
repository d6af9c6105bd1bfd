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

#include "tinyattn/kernels.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "tinyattn/errors.hpp"

namespace tinyattn {

namespace {

void check_range(Range r, int64_t extent, const char* what) {
  if (r.begin < 0 || r.end > extent || r.begin > r.end) {
    throw BoundsError(std::string(what) + " range [" + std::to_string(r.begin) + ", " +
                      std::to_string(r.end) + ") outside extent " + std::to_string(extent));
  }
}

void check_layout(const QuantTensor& t, Layout layout, std::span<const int64_t> extents,
                  const char* what) {
  if (t.layout != layout) {
    throw ShapeError(std::string(what) + ": expected layout " + layout_name(layout) +
                     ", got " + layout_name(t.layout));
  }
  if (t.shape.size() != extents.size() ||
      !std::equal(extents.begin(), extents.end(), t.shape.begin())) {
    throw ShapeError(std::string(what) + ": extents do not match attention dims");
  }
}

int32_t bias_at(const RequantParams& rp, int64_t feature) {
  if (rp.bias.empty()) return 0;
  return rp.bias[static_cast<size_t>(feature)];
}

int32_t saturate_i32(int64_t v) {
  constexpr int64_t lo = std::numeric_limits<int32_t>::min();
  constexpr int64_t hi = std::numeric_limits<int32_t>::max();
  return static_cast<int32_t>(std::clamp(v, lo, hi));
}

}  // namespace

// Loop order H -> S -> P -> E. One X row (1 x E) meets a weight head
// (P x E rows) per S iteration; output lands in HSP so the first GEMM reads
// Q rows contiguously.
void linear_irl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range h, Range s) {
  dims.validate();
  const int64_t S = dims.S, E = dims.E, P = dims.P, H = dims.H;
  check_layout(x, Layout::SE, std::array<int64_t, 2>{S, E}, "linear_irl input");
  check_layout(w.w, Layout::HPE, std::array<int64_t, 3>{H, P, E}, "linear_irl weights");
  check_layout(out, Layout::HSP, std::array<int64_t, 3>{H, S, P}, "linear_irl output");
  check_range(h, H, "head");
  check_range(s, S, "row");
  if (!w.rp.bias.empty() && static_cast<int64_t>(w.rp.bias.size()) != H * P) {
    throw ShapeError("linear_irl bias length != H*P");
  }

  const int8_t* xd = x.data.data();
  const int8_t* wd = w.w.data.data();
  int8_t* od = out.data.data();

  for (int64_t hh = h.begin; hh < h.end; ++hh) {
    for (int64_t s0 = s.begin; s0 < s.end; s0 += 4) {
      const int sb = static_cast<int>(std::min<int64_t>(4, s.end - s0));
      for (int64_t p0 = 0; p0 < P; p0 += 2) {
        const int pb = static_cast<int>(std::min<int64_t>(2, P - p0));
        int32_t acc[4][2];
        for (int i = 0; i < sb; ++i)
          for (int j = 0; j < pb; ++j) acc[i][j] = bias_at(w.rp, hh * P + p0 + j);
        const int8_t* xr[4];
        for (int i = 0; i < sb; ++i) xr[i] = xd + (s0 + i) * E;
        const int8_t* wr[2];
        for (int j = 0; j < pb; ++j) wr[j] = wd + ((hh * P + p0 + j) * E);
        for (int64_t e = 0; e < E; ++e) {
          for (int i = 0; i < sb; ++i)
            for (int j = 0; j < pb; ++j)
              acc[i][j] += static_cast<int32_t>(xr[i][e]) * wr[j][e];
        }
        for (int i = 0; i < sb; ++i)
          for (int j = 0; j < pb; ++j)
            od[(hh * S + s0 + i) * P + p0 + j] = requantize(acc[i][j], w.rp);
      }
    }
  }
}

QuantTensor linear_irl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                       int out_exp) {
  QuantTensor out = alloc_tensor({dims.H, dims.S, dims.P}, Layout::HSP, out_exp);
  linear_irl(x, w, dims, out, full_range(dims.H), full_range(dims.S));
  return out;
}

// Loop order H -> P -> S -> E. One weight row (1 x E) sweeps the whole input
// per P iteration; output lands transposed per head (HPS) so the second GEMM
// streams V columns without a transpose: wrl(X, W^T) = irl(X, W^T)^T.
void linear_wrl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range h, Range p, Range s) {
  dims.validate();
  const int64_t S = dims.S, E = dims.E, P = dims.P, H = dims.H;
  check_layout(x, Layout::SE, std::array<int64_t, 2>{S, E}, "linear_wrl input");
  check_layout(w.w, Layout::HPE, std::array<int64_t, 3>{H, P, E}, "linear_wrl weights");
  check_layout(out, Layout::HPS, std::array<int64_t, 3>{H, P, S}, "linear_wrl output");
  check_range(h, H, "head");
  check_range(p, P, "feature");
  check_range(s, S, "row");
  if (!w.rp.bias.empty() && static_cast<int64_t>(w.rp.bias.size()) != H * P) {
    throw ShapeError("linear_wrl bias length != H*P");
  }

  const int8_t* xd = x.data.data();
  const int8_t* wd = w.w.data.data();
  int8_t* od = out.data.data();

  for (int64_t hh = h.begin; hh < h.end; ++hh) {
    for (int64_t p0 = p.begin; p0 < p.end; p0 += 2) {
      const int pb = static_cast<int>(std::min<int64_t>(2, p.end - p0));
      for (int64_t s0 = s.begin; s0 < s.end; s0 += 4) {
        const int sb = static_cast<int>(std::min<int64_t>(4, s.end - s0));
        int32_t acc[2][4];
        for (int j = 0; j < pb; ++j)
          for (int i = 0; i < sb; ++i) acc[j][i] = bias_at(w.rp, hh * P + p0 + j);
        const int8_t* xr[4];
        for (int i = 0; i < sb; ++i) xr[i] = xd + (s0 + i) * E;
        const int8_t* wr[2];
        for (int j = 0; j < pb; ++j) wr[j] = wd + ((hh * P + p0 + j) * E);
        for (int64_t e = 0; e < E; ++e) {
          for (int j = 0; j < pb; ++j)
            for (int i = 0; i < sb; ++i)
              acc[j][i] += static_cast<int32_t>(xr[i][e]) * wr[j][e];
        }
        for (int j = 0; j < pb; ++j)
          for (int i = 0; i < sb; ++i)
            od[(hh * P + p0 + j) * S + s0 + i] = requantize(acc[j][i], w.rp);
      }
    }
  }
}

QuantTensor linear_wrl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                       int out_exp) {
  QuantTensor out = alloc_tensor({dims.H, dims.P, dims.S}, Layout::HPS, out_exp);
  linear_wrl(x, w, dims, out, full_range(dims.H), full_range(dims.P), full_range(dims.S));
  return out;
}

// Loop order S -> E -> H*P. The reduction runs over the concatenated head
// axis of M1, which is contiguous by construction, so no concat happens.
void linear_out(const QuantTensor& m1, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range s, Range e) {
  dims.validate();
  const int64_t S = dims.S, E = dims.E, P = dims.P, H = dims.H;
  const int64_t HP = H * P;
  check_layout(m1, Layout::SE, std::array<int64_t, 2>{S, HP}, "linear_out input");
  check_layout(w.w, Layout::EHP, std::array<int64_t, 3>{E, H, P}, "linear_out weights");
  check_layout(out, Layout::SE_out, std::array<int64_t, 2>{S, E}, "linear_out output");
  check_range(s, S, "row");
  check_range(e, E, "feature");
  if (!w.rp.bias.empty() && static_cast<int64_t>(w.rp.bias.size()) != E) {
    throw ShapeError("linear_out bias length != E");
  }

  const int8_t* md = m1.data.data();
  const int8_t* wd = w.w.data.data();
  int8_t* od = out.data.data();

  for (int64_t s0 = s.begin; s0 < s.end; s0 += 4) {
    const int sb = static_cast<int>(std::min<int64_t>(4, s.end - s0));
    for (int64_t e0 = e.begin; e0 < e.end; e0 += 2) {
      const int eb = static_cast<int>(std::min<int64_t>(2, e.end - e0));
      int32_t acc[4][2];
      for (int i = 0; i < sb; ++i)
        for (int j = 0; j < eb; ++j) acc[i][j] = bias_at(w.rp, e0 + j);
      const int8_t* mr[4];
      for (int i = 0; i < sb; ++i) mr[i] = md + (s0 + i) * HP;
      const int8_t* wr[2];
      for (int j = 0; j < eb; ++j) wr[j] = wd + (e0 + j) * HP;
      for (int64_t r = 0; r < HP; ++r) {
        for (int i = 0; i < sb; ++i)
          for (int j = 0; j < eb; ++j)
            acc[i][j] += static_cast<int32_t>(mr[i][r]) * wr[j][r];
      }
      for (int i = 0; i < sb; ++i)
        for (int j = 0; j < eb; ++j)
          od[(s0 + i) * E + e0 + j] = requantize(acc[i][j], w.rp);
    }
  }
}

QuantTensor linear_out(const QuantTensor& m1, const LinearWeights& w, const AttnDims& dims,
                       int out_exp) {
  QuantTensor out = alloc_tensor({dims.S, dims.E}, Layout::SE_out, out_exp);
  linear_out(m1, w, dims, out, full_range(dims.S), full_range(dims.E));
  return out;
}

void attn_logits_row(const QuantTensor& q, const QuantTensor& k, const RequantParams& rp,
                     const AttnDims& dims, int64_t h, int64_t s, std::span<int32_t> row) {
  const int64_t S = dims.S, P = dims.P;
  if (static_cast<int64_t>(row.size()) != S) throw ShapeError("logit row length != S");
  const int8_t* qr = q.data.data() + (h * S + s) * P;
  const int8_t* kd = k.data.data() + h * S * P;

  for (int64_t sp0 = 0; sp0 < S; sp0 += 4) {
    const int nb = static_cast<int>(std::min<int64_t>(4, S - sp0));
    int32_t acc[4] = {0, 0, 0, 0};
    const int8_t* kr[4];
    for (int j = 0; j < nb; ++j) kr[j] = kd + (sp0 + j) * P;
    for (int64_t p = 0; p < P; ++p) {
      for (int j = 0; j < nb; ++j) acc[j] += static_cast<int32_t>(qr[p]) * kr[j][p];
    }
    for (int j = 0; j < nb; ++j) {
      const int64_t scaled =
          shift_round(static_cast<int64_t>(acc[j]) * rp.eps_mul, rp.eps_div);
      row[sp0 + j] = saturate_i32(scaled);
    }
  }
}

// Loop order S -> H -> S', reduction over P. Each H iteration finishes one
// row of A and immediately runs the integer softmax on it, writing SHS so
// heads interleave inside the row axis.
void matmul_softmax(const QuantTensor& q, const QuantTensor& k, const RequantParams& rp,
                    const AttnDims& dims, QuantTensor& a, Range s, Range h) {
  dims.validate();
  const int64_t S = dims.S, P = dims.P, H = dims.H;
  check_layout(q, Layout::HSP, std::array<int64_t, 3>{H, S, P}, "matmul_softmax Q");
  check_layout(k, Layout::HSP, std::array<int64_t, 3>{H, S, P}, "matmul_softmax K");
  check_layout(a, Layout::SHS, std::array<int64_t, 3>{S, H, S}, "matmul_softmax output");
  check_range(s, S, "row");
  check_range(h, H, "head");

  const int in_exp = q.scale_exp + k.scale_exp;
  std::vector<int32_t> row(static_cast<size_t>(S));
  for (int64_t ss = s.begin; ss < s.end; ++ss) {
    for (int64_t hh = h.begin; hh < h.end; ++hh) {
      attn_logits_row(q, k, rp, dims, hh, ss, row);
      int8_t* out_row = a.data.data() + (ss * H + hh) * S;
      int_softmax(row, in_exp, std::span<int8_t>(out_row, static_cast<size_t>(S)));
    }
  }
}

QuantTensor matmul_softmax(const QuantTensor& q, const QuantTensor& k,
                           const RequantParams& rp, const AttnDims& dims) {
  QuantTensor a = alloc_tensor({dims.S, dims.H, dims.S}, Layout::SHS, 7);
  matmul_softmax(q, k, rp, dims, a, full_range(dims.S), full_range(dims.H));
  return a;
}

void m2_output_row(std::span<const int8_t> a_row, const QuantTensor& v,
                   const RequantParams& rp, const AttnDims& dims, int64_t h, Range p,
                   std::span<int8_t> m1_row) {
  const int64_t S = dims.S, P = dims.P;
  if (static_cast<int64_t>(a_row.size()) != S) throw ShapeError("attention row length != S");
  if (static_cast<int64_t>(m1_row.size()) != p.size()) {
    throw ShapeError("m1 row slice length mismatch");
  }
  const int8_t* vd = v.data.data() + h * P * S;

  for (int64_t p0 = p.begin; p0 < p.end; p0 += 4) {
    const int nb = static_cast<int>(std::min<int64_t>(4, p.end - p0));
    int32_t acc[4] = {0, 0, 0, 0};
    const int8_t* vr[4];
    for (int j = 0; j < nb; ++j) vr[j] = vd + (p0 + j) * S;
    for (int64_t sp = 0; sp < S; ++sp) {
      for (int j = 0; j < nb; ++j) acc[j] += static_cast<int32_t>(a_row[sp]) * vr[j][sp];
    }
    for (int j = 0; j < nb; ++j) m1_row[p0 + j - p.begin] = requantize(acc[j], rp);
  }
}

// Loop order S -> H -> P, reduction over the innermost S' of A. Both A rows
// (SHS) and V rows (HPS) stream contiguously. M1 is written as (S, H*P).
void matmul_m2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
               const AttnDims& dims, QuantTensor& m1, Range s, Range h, Range p) {
  dims.validate();
  const int64_t S = dims.S, P = dims.P, H = dims.H;
  check_layout(a, Layout::SHS, std::array<int64_t, 3>{S, H, S}, "matmul_m2 A");
  check_layout(v, Layout::HPS, std::array<int64_t, 3>{H, P, S}, "matmul_m2 V");
  check_layout(m1, Layout::SE, std::array<int64_t, 2>{S, H * P}, "matmul_m2 output");
  check_range(s, S, "row");
  check_range(h, H, "head");
  check_range(p, P, "feature");

  for (int64_t ss = s.begin; ss < s.end; ++ss) {
    for (int64_t hh = h.begin; hh < h.end; ++hh) {
      const int8_t* a_row = a.data.data() + (ss * H + hh) * S;
      int8_t* m1_row = m1.data.data() + ss * H * P + hh * P + p.begin;
      m2_output_row(std::span<const int8_t>(a_row, static_cast<size_t>(S)), v, rp, dims, hh,
                    p, std::span<int8_t>(m1_row, static_cast<size_t>(p.size())));
    }
  }
}

QuantTensor matmul_m2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
                      const AttnDims& dims, int out_exp) {
  QuantTensor m1 = alloc_tensor({dims.S, dims.H * dims.P}, Layout::SE, out_exp);
  matmul_m2(a, v, rp, dims, m1, full_range(dims.S), full_range(dims.H), full_range(dims.P));
  return m1;
}

// Loop order H -> S -> E' -> E, the IRL discipline with the projection width
// replaced by E. Output layout is (H, S, E').
void fwsa_stage1(const QuantTensor& x, const FwsaWeights& w, const AttnDims& dims,
                 QuantTensor& m2, Range h, Range s) {
  dims.validate();
  const int64_t S = dims.S, E = dims.E, H = dims.H;
  check_layout(x, Layout::SE, std::array<int64_t, 2>{S, E}, "fwsa_stage1 input");
  check_layout(w.w_star, Layout::HPE, std::array<int64_t, 3>{H, E, E}, "fwsa_stage1 W*");
  check_layout(m2, Layout::HSP, std::array<int64_t, 3>{H, S, E}, "fwsa_stage1 output");
  check_range(h, H, "head");
  check_range(s, S, "row");

  const int8_t* xd = x.data.data();
  const int8_t* wd = w.w_star.data.data();
  int8_t* od = m2.data.data();

  for (int64_t hh = h.begin; hh < h.end; ++hh) {
    for (int64_t s0 = s.begin; s0 < s.end; s0 += 4) {
      const int sb = static_cast<int>(std::min<int64_t>(4, s.end - s0));
      for (int64_t f0 = 0; f0 < E; f0 += 2) {
        const int fb = static_cast<int>(std::min<int64_t>(2, E - f0));
        int32_t acc[4][2] = {};
        const int8_t* xr[4];
        for (int i = 0; i < sb; ++i) xr[i] = xd + (s0 + i) * E;
        const int8_t* wr[2];
        for (int j = 0; j < fb; ++j) wr[j] = wd + ((hh * E + f0 + j) * E);
        for (int64_t e = 0; e < E; ++e) {
          for (int i = 0; i < sb; ++i)
            for (int j = 0; j < fb; ++j)
              acc[i][j] += static_cast<int32_t>(xr[i][e]) * wr[j][e];
        }
        for (int i = 0; i < sb; ++i)
          for (int j = 0; j < fb; ++j)
            od[(hh * S + s0 + i) * E + f0 + j] = requantize(acc[i][j], w.rp_m2);
      }
    }
  }
}

void fwsa_logits_row(const QuantTensor& m2, const QuantTensor& x, const RequantParams& rp,
                     const AttnDims& dims, int64_t h, int64_t s, std::span<int32_t> row) {
  const int64_t S = dims.S, E = dims.E;
  if (static_cast<int64_t>(row.size()) != S) throw ShapeError("logit row length != S");
  const int8_t* mr = m2.data.data() + (h * S + s) * E;
  const int8_t* xd = x.data.data();

  for (int64_t sp0 = 0; sp0 < S; sp0 += 4) {
    const int nb = static_cast<int>(std::min<int64_t>(4, S - sp0));
    int32_t acc[4] = {0, 0, 0, 0};
    const int8_t* xr[4];
    for (int j = 0; j < nb; ++j) xr[j] = xd + (sp0 + j) * E;
    for (int64_t e = 0; e < E; ++e) {
      for (int j = 0; j < nb; ++j) acc[j] += static_cast<int32_t>(mr[e]) * xr[j][e];
    }
    for (int j = 0; j < nb; ++j) {
      const int64_t scaled =
          shift_round(static_cast<int64_t>(acc[j]) * rp.eps_mul, rp.eps_div);
      row[sp0 + j] = saturate_i32(scaled);
    }
  }
}

// Same S -> H -> S' ordering as matmul_softmax; the reduction dimension is E
// instead of P, against X itself rather than a K projection.
void fwsa_stage2(const QuantTensor& m2, const QuantTensor& x, const RequantParams& rp,
                 const AttnDims& dims, QuantTensor& a, Range s, Range h) {
  dims.validate();
  const int64_t S = dims.S, E = dims.E, H = dims.H;
  check_layout(m2, Layout::HSP, std::array<int64_t, 3>{H, S, E}, "fwsa_stage2 M2");
  check_layout(x, Layout::SE, std::array<int64_t, 2>{S, E}, "fwsa_stage2 X");
  check_layout(a, Layout::SHS, std::array<int64_t, 3>{S, H, S}, "fwsa_stage2 output");
  check_range(s, S, "row");
  check_range(h, H, "head");

  const int in_exp = m2.scale_exp + x.scale_exp;
  std::vector<int32_t> row(static_cast<size_t>(S));
  for (int64_t ss = s.begin; ss < s.end; ++ss) {
    for (int64_t hh = h.begin; hh < h.end; ++hh) {
      fwsa_logits_row(m2, x, rp, dims, hh, ss, row);
      int8_t* out_row = a.data.data() + (ss * H + hh) * S;
      int_softmax(row, in_exp, std::span<int8_t>(out_row, static_cast<size_t>(S)));
    }
  }
}

QuantTensor fwsa_fused(const QuantTensor& x, const FwsaWeights& w, const AttnDims& dims) {
  QuantTensor m2 = alloc_tensor({dims.H, dims.S, dims.E}, Layout::HSP, w.m2_exp);
  fwsa_stage1(x, w, dims, m2, full_range(dims.H), full_range(dims.S));
  QuantTensor a = alloc_tensor({dims.S, dims.H, dims.S}, Layout::SHS, 7);
  fwsa_stage2(m2, x, w.rp_logits, dims, a, full_range(dims.S), full_range(dims.H));
  return a;
}

}  // namespace tinyattn
