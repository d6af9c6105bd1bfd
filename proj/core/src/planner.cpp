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

#include "tinyattn/planner.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "tinyattn/errors.hpp"

namespace tinyattn {

void MemConfig::validate() const {
  if (l1_bytes <= 0 || l2_bytes <= 0) throw ValueError("memory capacities must be positive");
  if (l1_bytes >= l2_bytes) throw ValueError("l1_bytes must be smaller than l2_bytes");
  if (cores < 1) throw ValueError("cores must be >= 1");
  if (simd_width < 1) throw ValueError("simd_width must be >= 1");
}

const char* step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::LinearQ: return "linear_q";
    case StepKind::LinearK: return "linear_k";
    case StepKind::LinearV: return "linear_v";
    case StepKind::Gemm1Softmax: return "gemm1_softmax";
    case StepKind::Gemm2: return "gemm2";
    case StepKind::LinearOut: return "linear_out";
    case StepKind::FwsaStage1: return "fwsa_stage1";
    case StepKind::FwsaStage2: return "fwsa_stage2";
    case StepKind::FusedAttention: return "fused_attention";
  }
  return "?";
}

int64_t mem_dft(int64_t x, const AttnDims& dims) {
  dims.validate();
  if (x < 1 || x > dims.S) {
    throw PlanError("dft tile rows " + std::to_string(x) + " outside [1, " +
                    std::to_string(dims.S) + "]");
  }
  return (2 * dims.P + dims.S) * x + 2 * dims.P * dims.S;
}

std::optional<int64_t> choose_dft_x(const AttnDims& dims, const MemConfig& cfg) {
  dims.validate();
  cfg.validate();
  if (mem_dft(1, dims) > cfg.l1_bytes) return std::nullopt;
  // mem_dft is strictly increasing in x, so invert and clamp.
  const int64_t slope = 2 * dims.P + dims.S;
  int64_t x = std::min(dims.S, (cfg.l1_bytes - 2 * dims.P * dims.S) / slope);
  while (x < dims.S && mem_dft(x + 1, dims) <= cfg.l1_bytes) ++x;
  while (x > 1 && mem_dft(x, dims) > cfg.l1_bytes) --x;
  return x;
}

int64_t mem_dft_fwsa(int64_t x, const AttnDims& dims) {
  dims.validate();
  if (x < 1 || x > dims.S) {
    throw PlanError("dft tile rows " + std::to_string(x) + " outside [1, " +
                    std::to_string(dims.S) + "]");
  }
  // x rows of M2 (E each), the A slab, x output rows (P each), plus the
  // resident X and the V head.
  return (dims.E + dims.S + dims.P) * x + dims.S * dims.E + dims.P * dims.S;
}

std::optional<int64_t> choose_dft_x_fwsa(const AttnDims& dims, const MemConfig& cfg) {
  dims.validate();
  cfg.validate();
  if (mem_dft_fwsa(1, dims) > cfg.l1_bytes) return std::nullopt;
  int64_t x = 1;
  while (x < dims.S && mem_dft_fwsa(x + 1, dims) <= cfg.l1_bytes) ++x;
  return x;
}

// Bias bytes per output feature (int16).
static constexpr int64_t kBiasBytes = 2;

namespace tile_ws {

int64_t linear_tile(int64_t rows, int64_t cols, int64_t red, bool with_bias) {
  const int64_t bias = with_bias ? kBiasBytes * cols : 0;
  return 2 * (rows * red) + 2 * (cols * red + bias) + 2 * (rows * cols);
}

int64_t rowgemm_tile(int64_t rows, int64_t red_block, int64_t red, int64_t row_len,
                     int64_t resident_rows) {
  const int64_t stream = red_block == 0 ? resident_rows * red : 2 * (red_block * red);
  return stream + 2 * (rows * red) + 6 * (rows * row_len);
}

int64_t gemm2_tile(int64_t rows, int64_t cols_block, const AttnDims& d) {
  const int64_t vbytes = cols_block == 0 ? d.P * d.S : 2 * (cols_block * d.S);
  const int64_t out_cols = cols_block == 0 ? d.P : cols_block;
  return vbytes + 2 * (rows * d.S) + 2 * (rows * out_cols);
}

}  // namespace tile_ws

namespace {

struct TileChoice {
  int64_t rows = 1;
  int64_t cols = 0;
  int64_t red = 0;
  int64_t ws = 0;
};

int64_t largest_fit(int64_t hi, const std::function<int64_t(int64_t)>& ws, int64_t limit) {
  if (hi < 1 || ws(1) > limit) return 0;
  int64_t lo = 1;
  while (lo < hi) {
    const int64_t mid = lo + (hi - lo + 1) / 2;
    if (ws(mid) <= limit) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

int64_t linear_ws(int64_t r, int64_t c, int64_t red, bool has_bias) {
  return tile_ws::linear_tile(r, c, red, has_bias);
}

int64_t rowgemm_ws(int64_t x, int64_t z_rows, int64_t red, int64_t s_len, bool resident,
                   int64_t resident_rows) {
  return tile_ws::rowgemm_tile(x, resident ? 0 : z_rows, red, s_len, resident_rows);
}

int64_t gemm2_ws(int64_t x, int64_t z_cols, const AttnDims& d, bool resident) {
  return tile_ws::gemm2_tile(x, resident ? 0 : z_cols, d);
}

TileChoice choose_linear_tile(const AttnDims&, int64_t rows_total, int64_t cols_total,
                              int64_t red, bool has_bias, const MemConfig& cfg,
                              const char* what) {
  TileChoice tc;
  tc.cols = largest_fit(
      cols_total, [&](int64_t c) { return linear_ws(1, c, red, has_bias); }, cfg.l1_bytes);
  if (tc.cols == 0) {
    throw PlanError(std::string(what) + ": minimal tile exceeds L1 (" +
                    std::to_string(linear_ws(1, 1, red, has_bias)) + " > " +
                    std::to_string(cfg.l1_bytes) + " B)");
  }
  tc.rows = largest_fit(
      rows_total, [&](int64_t r) { return linear_ws(r, tc.cols, red, has_bias); },
      cfg.l1_bytes);
  tc.ws = linear_ws(tc.rows, tc.cols, red, has_bias);
  tc.red = 0;
  return tc;
}

TileChoice choose_rowgemm_tile(int64_t rows_total, int64_t red, int64_t s_len,
                               int64_t resident_rows, const MemConfig& cfg,
                               const char* what) {
  TileChoice tc;
  if (rowgemm_ws(1, 0, red, s_len, true, resident_rows) <= cfg.l1_bytes) {
    tc.red = 0;  // full operand resident: output-stationary over whole rows
    tc.rows = largest_fit(
        rows_total,
        [&](int64_t x) { return rowgemm_ws(x, 0, red, s_len, true, resident_rows); },
        cfg.l1_bytes);
    tc.ws = rowgemm_ws(tc.rows, 0, red, s_len, true, resident_rows);
    return tc;
  }
  tc.red = largest_fit(
      resident_rows, [&](int64_t z) { return rowgemm_ws(1, z, red, s_len, false, 0); },
      cfg.l1_bytes);
  if (tc.red == 0) {
    throw PlanError(std::string(what) + ": minimal tile exceeds L1");
  }
  tc.rows = largest_fit(
      rows_total,
      [&](int64_t x) { return rowgemm_ws(x, tc.red, red, s_len, false, 0); },
      cfg.l1_bytes);
  tc.ws = rowgemm_ws(tc.rows, tc.red, red, s_len, false, 0);
  return tc;
}

TileChoice choose_gemm2_tile(const AttnDims& d, const MemConfig& cfg) {
  TileChoice tc;
  if (gemm2_ws(1, 0, d, true) <= cfg.l1_bytes) {
    tc.red = 0;  // V head resident
    tc.rows = largest_fit(
        d.S, [&](int64_t x) { return gemm2_ws(x, 0, d, true); }, cfg.l1_bytes);
    tc.ws = gemm2_ws(tc.rows, 0, d, true);
    return tc;
  }
  tc.red = largest_fit(
      d.P, [&](int64_t z) { return gemm2_ws(1, z, d, false); }, cfg.l1_bytes);
  if (tc.red == 0) throw PlanError("gemm2: minimal tile exceeds L1");
  tc.rows = largest_fit(
      d.S, [&](int64_t x) { return gemm2_ws(x, tc.red, d, false); }, cfg.l1_bytes);
  tc.ws = gemm2_ws(tc.rows, tc.red, d, false);
  return tc;
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

struct Builder {
  const AttnDims& d;
  const MemConfig& cfg;
  TilingPlan plan;

  int add_buffer(const std::string& name, int64_t bytes, bool weight) {
    PlanBuffer b;
    b.id = static_cast<int>(plan.buffers.size());
    b.name = name;
    b.bytes = bytes;
    b.is_weight = weight;
    plan.buffers.push_back(b);
    return b.id;
  }

  int64_t bias_bytes(int64_t features) const {
    return cfg.count_biases ? kBiasBytes * features : 0;
  }

  PlanStep& add_step(StepKind kind, std::vector<int> inputs, int output,
                     std::vector<int> weights, std::vector<int> frees) {
    PlanStep s;
    s.kind = kind;
    s.label = step_kind_name(kind);
    s.inputs = std::move(inputs);
    s.output = output;
    s.weights = std::move(weights);
    s.frees = std::move(frees);
    plan.steps.push_back(std::move(s));
    return plan.steps.back();
  }

  // Q/K projection: H -> s-tiles -> p-blocks, X reused within a row sweep.
  void fill_irl(PlanStep& s, int64_t red, int64_t rows_total, int64_t cols_total,
                bool has_bias, const char* what) {
    const TileChoice tc = choose_linear_tile(d, rows_total, cols_total, red, has_bias, cfg, what);
    const int64_t n_rows = ceil_div(rows_total, tc.rows);
    s.tile_rows = tc.rows;
    s.tile_cols = tc.cols;
    s.tile_count = d.H * n_rows * ceil_div(cols_total, tc.cols);
    s.l1_working_set = tc.ws;
    s.bytes_in = d.H * rows_total * red +
                 d.H * n_rows * (cols_total * red + (has_bias ? bias_bytes(cols_total) : 0));
    s.bytes_out = d.H * rows_total * cols_total;
  }

  // V projection: H -> p-blocks -> s-tiles, weight rows reused across X.
  void fill_wrl(PlanStep& s) {
    const TileChoice tc = choose_linear_tile(d, d.P, d.S, d.E, true, cfg, "linear_v");
    const int64_t n_p = ceil_div(d.P, tc.rows);
    s.tile_rows = tc.rows;
    s.tile_cols = tc.cols;
    s.tile_count = d.H * n_p * ceil_div(d.S, tc.cols);
    s.l1_working_set = tc.ws;
    s.bytes_in = d.H * (d.P * d.E + bias_bytes(d.P)) + d.H * n_p * d.S * d.E;
    s.bytes_out = d.H * d.P * d.S;
  }

  void fill_gemm1(PlanStep& s) {
    const TileChoice tc = choose_rowgemm_tile(d.S, d.P, d.S, d.S, cfg, "gemm1_softmax");
    const int64_t n_s = ceil_div(d.S, tc.rows);
    s.tile_rows = tc.rows;
    s.tile_red = tc.red;
    s.tile_count = d.H * n_s;
    s.l1_working_set = tc.ws;
    const int64_t k_sweeps = (tc.red == 0) ? 1 : n_s;
    s.bytes_in = d.H * d.S * d.P + d.H * k_sweeps * d.S * d.P;
    s.bytes_out = d.H * d.S * d.S;
  }

  void fill_gemm2(PlanStep& s) {
    const TileChoice tc = choose_gemm2_tile(d, cfg);
    const int64_t n_s = ceil_div(d.S, tc.rows);
    const bool resident = tc.red == 0;
    s.tile_rows = tc.rows;
    s.tile_red = tc.red;
    s.tile_count = d.H * n_s * (resident ? 1 : ceil_div(d.P, tc.red));
    s.l1_working_set = tc.ws;
    const int64_t v_sweeps = resident ? 1 : n_s;
    s.bytes_in = d.H * d.S * d.S + d.H * v_sweeps * d.P * d.S;
    s.bytes_out = d.H * d.S * d.P;
  }

  void fill_out(PlanStep& s) {
    const int64_t hp = d.H * d.P;
    const TileChoice tc = choose_linear_tile(d, d.S, d.E, hp, true, cfg, "linear_out");
    const int64_t n_s = ceil_div(d.S, tc.rows);
    s.tile_rows = tc.rows;
    s.tile_cols = tc.cols;
    s.tile_count = n_s * ceil_div(d.E, tc.cols);
    s.l1_working_set = tc.ws;
    s.bytes_in = d.S * hp + n_s * (d.E * hp + bias_bytes(d.E));
    s.bytes_out = d.S * d.E;
  }

  void fill_fwsa2(PlanStep& s) {
    const TileChoice tc = choose_rowgemm_tile(d.S, d.E, d.S, d.S, cfg, "fwsa_stage2");
    const int64_t n_s = ceil_div(d.S, tc.rows);
    s.tile_rows = tc.rows;
    s.tile_red = tc.red;
    s.tile_count = d.H * n_s;
    s.l1_working_set = tc.ws;
    const int64_t x_sweeps = (tc.red == 0) ? 1 : n_s;
    s.bytes_in = d.H * d.S * d.E + d.H * x_sweeps * d.S * d.E;
    s.bytes_out = d.H * d.S * d.S;
  }

  void fill_fused(PlanStep& s, int64_t x, AttnFlavor flavor) {
    s.tile_rows = x;
    s.tile_count = d.H * ceil_div(d.S, x);
    if (flavor == AttnFlavor::MHSA) {
      s.l1_working_set = mem_dft(x, d);
      s.bytes_in = 3 * d.H * d.S * d.P;
    } else {
      s.l1_working_set = mem_dft_fwsa(x, d);
      s.bytes_in = d.H * (2 * d.S * d.E + d.P * d.S);
    }
    s.bytes_out = d.H * d.S * d.P;
  }
};

void check_l2(const TilingPlan& plan, const AttnDims& dims, const MemConfig& cfg) {
  const MemoryTimeline tl = memory_timeline(plan, dims, cfg);
  if (tl.peak > cfg.l2_bytes) {
    throw PlanError("plan peak " + std::to_string(tl.peak) + " B exceeds L2 capacity " +
                    std::to_string(cfg.l2_bytes) + " B");
  }
}

}  // namespace

TilingPlan plan_lwt(const AttnDims& d, const MemConfig& cfg, AttnFlavor flavor) {
  d.validate();
  cfg.validate();
  Builder b{d, cfg, {}};
  b.plan.mode = TilingMode::LWT;
  b.plan.flavor = flavor;

  const int x = b.add_buffer("X", tensor_bytes(d, TensorRole::X), false);
  const int wv = b.add_buffer("W_v", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
  const int wo = b.add_buffer("W_out", tensor_bytes(d, TensorRole::WOut) + b.bias_bytes(d.E), true);
  const int v = b.add_buffer("V", tensor_bytes(d, TensorRole::V), false);
  const int m1 = b.add_buffer("M1", tensor_bytes(d, TensorRole::M1), false);
  const int y = b.add_buffer("out", tensor_bytes(d, TensorRole::Out), false);
  const int a = b.add_buffer("A", tensor_bytes(d, TensorRole::A), false);

  if (flavor == AttnFlavor::MHSA) {
    const int wq = b.add_buffer("W_q", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
    const int wk = b.add_buffer("W_k", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
    const int q = b.add_buffer("Q", tensor_bytes(d, TensorRole::Q), false);
    const int k = b.add_buffer("K", tensor_bytes(d, TensorRole::K), false);

    b.fill_irl(b.add_step(StepKind::LinearQ, {x}, q, {wq}, {}), d.E, d.S, d.P, true, "linear_q");
    b.fill_irl(b.add_step(StepKind::LinearK, {x}, k, {wk}, {}), d.E, d.S, d.P, true, "linear_k");
    b.fill_gemm1(b.add_step(StepKind::Gemm1Softmax, {q, k}, a, {}, {q, k}));
    b.fill_wrl(b.add_step(StepKind::LinearV, {x}, v, {wv},
                          cfg.residual_live ? std::vector<int>{} : std::vector<int>{x}));
    b.fill_gemm2(b.add_step(StepKind::Gemm2, {a, v}, m1, {}, {a, v}));
    b.fill_out(b.add_step(StepKind::LinearOut, {m1}, y, {wo}, {m1}));
  } else {
    const int ws = b.add_buffer("W_star", tensor_bytes(d, TensorRole::WStar), true);
    const int m2 = b.add_buffer("M2", d.H * d.S * d.E, false);

    b.fill_irl(b.add_step(StepKind::FwsaStage1, {x}, m2, {ws}, {}), d.E, d.S, d.E, false,
               "fwsa_stage1");
    b.fill_fwsa2(b.add_step(StepKind::FwsaStage2, {m2, x}, a, {}, {m2}));
    b.fill_wrl(b.add_step(StepKind::LinearV, {x}, v, {wv},
                          cfg.residual_live ? std::vector<int>{} : std::vector<int>{x}));
    b.fill_gemm2(b.add_step(StepKind::Gemm2, {a, v}, m1, {}, {a, v}));
    b.fill_out(b.add_step(StepKind::LinearOut, {m1}, y, {wo}, {m1}));
  }

  check_l2(b.plan, d, cfg);
  return b.plan;
}

TilingPlan plan_dft(const AttnDims& d, const MemConfig& cfg, AttnFlavor flavor) {
  d.validate();
  cfg.validate();
  const auto x_opt =
      flavor == AttnFlavor::MHSA ? choose_dft_x(d, cfg) : choose_dft_x_fwsa(d, cfg);
  if (!x_opt) {
    throw PlanError("depth-first tile does not fit L1 even at x=1; use LWT fallback");
  }

  Builder b{d, cfg, {}};
  b.plan.mode = TilingMode::DFT;
  b.plan.flavor = flavor;
  b.plan.dft_x = *x_opt;

  const int x = b.add_buffer("X", tensor_bytes(d, TensorRole::X), false);
  const int wv = b.add_buffer("W_v", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
  const int wo = b.add_buffer("W_out", tensor_bytes(d, TensorRole::WOut) + b.bias_bytes(d.E), true);
  const int v = b.add_buffer("V", tensor_bytes(d, TensorRole::V), false);
  const int m1 = b.add_buffer("M1", tensor_bytes(d, TensorRole::M1), false);
  const int y = b.add_buffer("out", tensor_bytes(d, TensorRole::Out), false);

  if (flavor == AttnFlavor::MHSA) {
    const int wq = b.add_buffer("W_q", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
    const int wk = b.add_buffer("W_k", tensor_bytes(d, TensorRole::WQkvEach) + b.bias_bytes(d.H * d.P), true);
    const int q = b.add_buffer("Q", tensor_bytes(d, TensorRole::Q), false);
    const int k = b.add_buffer("K", tensor_bytes(d, TensorRole::K), false);

    b.fill_irl(b.add_step(StepKind::LinearQ, {x}, q, {wq}, {}), d.E, d.S, d.P, true, "linear_q");
    b.fill_irl(b.add_step(StepKind::LinearK, {x}, k, {wk}, {}), d.E, d.S, d.P, true, "linear_k");
    b.fill_wrl(b.add_step(StepKind::LinearV, {x}, v, {wv},
                          cfg.residual_live ? std::vector<int>{} : std::vector<int>{x}));
    PlanStep& fused = b.add_step(StepKind::FusedAttention, {q, k, v}, m1, {}, {k, v});
    fused.overlay = true;
    fused.overlay_input = q;
    b.fill_fused(fused, *x_opt, flavor);
    b.fill_out(b.add_step(StepKind::LinearOut, {m1}, y, {wo}, {m1}));
  } else {
    const int ws = b.add_buffer("W_star", tensor_bytes(d, TensorRole::WStar), true);
    const int m2 = b.add_buffer("M2", d.H * d.S * d.E, false);

    b.fill_irl(b.add_step(StepKind::FwsaStage1, {x}, m2, {ws}, {}), d.E, d.S, d.E, false,
               "fwsa_stage1");
    b.fill_wrl(b.add_step(StepKind::LinearV, {x}, v, {wv}, {}));
    PlanStep& fused = b.add_step(
        StepKind::FusedAttention, {m2, x, v}, m1, {},
        cfg.residual_live ? std::vector<int>{v} : std::vector<int>{v, x});
    fused.overlay = true;
    fused.overlay_input = m2;
    b.fill_fused(fused, *x_opt, flavor);
    b.fill_out(b.add_step(StepKind::LinearOut, {m1}, y, {wo}, {m1}));
  }

  check_l2(b.plan, d, cfg);
  return b.plan;
}

TilingPlan plan_auto(const AttnDims& dims, const MemConfig& cfg, AttnFlavor flavor,
                     std::string* rationale) {
  try {
    TilingPlan plan = plan_dft(dims, cfg, flavor);
    if (rationale) {
      *rationale = "dft feasible: x=" + std::to_string(plan.dft_x) + " rows per fused tile";
    }
    return plan;
  } catch (const PlanError& e) {
    if (rationale) {
      *rationale = std::string("lwt fallback: ") + e.what();
    }
    return plan_lwt(dims, cfg, flavor);
  }
}

namespace {

// Extra transient L2 bytes of an overlay step: the output grows tile by tile
// while the consumed input shrinks, input tile freed first.
int64_t overlay_extra(const PlanStep& s, const AttnDims& d, AttnFlavor flavor) {
  const int64_t in_row = flavor == AttnFlavor::MHSA ? d.P : d.E;
  const int64_t out_row = d.P;
  int64_t running = 0;
  int64_t worst = 0;
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s0 = 0; s0 < d.S; s0 += s.tile_rows) {
      const int64_t rows = std::min(s.tile_rows, d.S - s0);
      running -= rows * in_row;   // consumed tile freed
      running += rows * out_row;  // output tile allocated
      worst = std::max(worst, running);
    }
  }
  return std::max<int64_t>(0, worst);
}

}  // namespace

MemoryTimeline memory_timeline(const TilingPlan& plan, const AttnDims& dims,
                               const MemConfig& cfg) {
  MemoryTimeline tl;
  int64_t resident_weights = 0;
  for (const PlanBuffer& b : plan.buffers) {
    if (b.is_weight && cfg.weights_resident) resident_weights += b.bytes;
  }

  std::set<int> live;
  // The block input is in L2 before the first step runs.
  for (const PlanBuffer& b : plan.buffers) {
    if (!b.is_weight && b.name == "X") live.insert(b.id);
  }

  auto live_bytes = [&]() {
    int64_t sum = resident_weights;
    for (int id : live) sum += plan.buffer(id).bytes;
    return sum;
  };

  for (const PlanStep& s : plan.steps) {
    int64_t occ = live_bytes();
    if (!cfg.weights_resident) {
      for (int w : s.weights) occ += plan.buffer(w).bytes;
    }
    if (s.overlay) {
      occ += overlay_extra(s, dims, plan.flavor);
    } else if (s.output >= 0 && !live.contains(s.output)) {
      occ += plan.buffer(s.output).bytes;
    }
    tl.occupancy.push_back(occ);
    if (occ > tl.peak) {
      tl.peak = occ;
      tl.peak_step = static_cast<int>(tl.occupancy.size()) - 1;
    }
    if (s.output >= 0) live.insert(s.output);
    if (s.overlay && s.overlay_input >= 0) live.erase(s.overlay_input);
    for (int f : s.frees) live.erase(f);
  }
  return tl;
}

void validate_plan(const TilingPlan& plan, const AttnDims& dims, const MemConfig& cfg) {
  std::set<int> live;
  int64_t allocated = 0, freed = 0;
  int x_id = -1, final_out = -1;
  for (const PlanBuffer& b : plan.buffers) {
    if (!b.is_weight && b.name == "X") x_id = b.id;
  }
  if (x_id >= 0) live.insert(x_id);

  int idx = 0;
  for (const PlanStep& s : plan.steps) {
    for (int in : s.inputs) {
      if (!plan.buffer(in).is_weight && !live.contains(in)) {
        throw PlanError("step " + std::to_string(idx) + " reads buffer '" +
                        plan.buffer(in).name + "' before it is live");
      }
    }
    if (s.l1_working_set > cfg.l1_bytes) {
      throw PlanError("step " + std::to_string(idx) + " working set exceeds L1");
    }
    if (s.output >= 0) {
      live.insert(s.output);
      if (s.output != x_id) allocated += plan.buffer(s.output).bytes;
      final_out = s.output;
    }
    if (s.overlay && s.overlay_input >= 0) {
      if (!live.erase(s.overlay_input)) {
        throw PlanError("overlay input not live at step " + std::to_string(idx));
      }
      freed += plan.buffer(s.overlay_input).bytes;
    }
    for (int f : s.frees) {
      if (!live.erase(f)) {
        throw PlanError("step " + std::to_string(idx) + " frees non-live buffer '" +
                        plan.buffer(f).name + "'");
      }
      if (f != x_id) freed += plan.buffer(f).bytes;
    }
    ++idx;
  }
  // Conservation: every intermediate allocated during the plan is freed; only
  // the block input and final output may survive.
  for (int id : live) {
    if (id != x_id && id != final_out) {
      throw PlanError("buffer '" + plan.buffer(id).name + "' never freed");
    }
  }
  if (final_out >= 0) allocated -= plan.buffer(final_out).bytes;
  if (allocated != freed) {
    throw PlanError("allocated " + std::to_string(allocated) + " B != freed " +
                    std::to_string(freed) + " B across the plan");
  }
  (void)dims;
}

std::string format_schedule(const TilingPlan& plan, const AttnDims& dims,
                            const MemConfig& cfg) {
  const MemoryTimeline tl = memory_timeline(plan, dims, cfg);
  std::ostringstream os;
  os << "mode: " << (plan.mode == TilingMode::LWT ? "lwt" : "dft");
  if (plan.mode == TilingMode::DFT) os << " (x=" << plan.dft_x << ")";
  os << "  flavor: " << (plan.flavor == AttnFlavor::MHSA ? "mhsa" : "fwsa") << "\n";
  os << "step  kernel           tile(rows x cols)  tiles  bytes_in  bytes_out  l1_ws  l2_bytes\n";
  for (size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    char tile[40];
    std::snprintf(tile, sizeof(tile), "%lld x %lld", static_cast<long long>(s.tile_rows),
                  static_cast<long long>(s.tile_cols == 0 ? -1 : s.tile_cols));
    char line[200];
    std::snprintf(line, sizeof(line), "%4zu  %-15s  %-17s  %5lld  %8lld  %9lld  %5lld  %8lld\n",
                  i, step_kind_name(s.kind), tile, static_cast<long long>(s.tile_count),
                  static_cast<long long>(s.bytes_in), static_cast<long long>(s.bytes_out),
                  static_cast<long long>(s.l1_working_set),
                  static_cast<long long>(tl.occupancy[i]));
    os << line;
  }
  os << "l2 peak: " << tl.peak << " B at step " << tl.peak_step << "\n";
  return os.str();
}

}  // namespace tinyattn
