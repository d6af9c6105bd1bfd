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

#include "tinyattn/executor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include "tinyattn/errors.hpp"

namespace tinyattn {

void AttnBlock::validate() const {
  dims.validate();
  const int64_t E = dims.E, P = dims.P, H = dims.H;
  auto expect = [](const QuantTensor& t, Layout layout, std::initializer_list<int64_t> sh,
                   const char* what) {
    if (t.layout != layout || !std::equal(sh.begin(), sh.end(), t.shape.begin(),
                                          t.shape.end())) {
      throw ShapeError(std::string(what) + ": weight layout/extents mismatch");
    }
  };
  expect(wv.w, Layout::HPE, {H, P, E}, "W_v");
  expect(wout.w, Layout::EHP, {E, H, P}, "W_out");
  if (!wv.rp.bias.empty() && static_cast<int64_t>(wv.rp.bias.size()) != H * P) {
    throw ShapeError("W_v bias length != H*P");
  }
  if (!wout.rp.bias.empty() && static_cast<int64_t>(wout.rp.bias.size()) != E) {
    throw ShapeError("W_out bias length != E");
  }
  if (flavor == AttnFlavor::MHSA) {
    expect(wq.w, Layout::HPE, {H, P, E}, "W_q");
    expect(wk.w, Layout::HPE, {H, P, E}, "W_k");
  } else {
    expect(fwsa.w_star, Layout::HPE, {H, E, E}, "W_star");
  }
}

std::vector<int64_t> chunk_sizes(int64_t total, int workers) {
  if (workers < 1) throw ValueError("workers must be >= 1");
  const int64_t c = (total + workers - 1) / workers;
  std::vector<int64_t> sizes(static_cast<size_t>(workers));
  for (int i = 0; i < workers; ++i) {
    const int64_t b = std::min<int64_t>(c * i, total);
    const int64_t e = std::min<int64_t>(b + c, total);
    sizes[static_cast<size_t>(i)] = e - b;
  }
  return sizes;
}

namespace {

int64_t step_macs(StepKind kind, const AttnDims& d, AttnFlavor flavor) {
  switch (kind) {
    case StepKind::LinearQ:
    case StepKind::LinearK:
    case StepKind::LinearV:
      return d.H * d.S * d.P * d.E;
    case StepKind::Gemm1Softmax:
    case StepKind::Gemm2:
      return d.H * d.S * d.S * d.P;
    case StepKind::LinearOut:
      return d.S * d.E * d.H * d.P;
    case StepKind::FwsaStage1:
      return d.H * d.S * d.E * d.E;
    case StepKind::FwsaStage2:
      return d.H * d.S * d.S * d.E;
    case StepKind::FusedAttention:
      // logits GEMM + second GEMM
      return (flavor == AttnFlavor::MHSA ? d.H * d.S * d.S * d.P
                                         : d.H * d.S * d.S * d.E) +
             d.H * d.S * d.S * d.P;
  }
  return 0;
}

int64_t weight_bytes(const LinearWeights& w, bool count_biases) {
  return static_cast<int64_t>(w.w.data.size()) +
         (count_biases ? 2 * static_cast<int64_t>(w.rp.bias.size()) : 0);
}

void check_input(const AttnBlock& block, const QuantTensor& x) {
  if (x.layout != Layout::SE || x.shape != std::vector<int64_t>{block.dims.S, block.dims.E}) {
    throw ShapeError("block input must be SE with extents (S, E)");
  }
}

// L2 occupancy bookkeeping shared by the untiled and tiled paths.
class L2Sim {
 public:
  L2Sim(int64_t resident, int64_t limit) : resident_(resident), limit_(limit) {}

  void alloc(int64_t bytes) { live_ += bytes; }
  void free(int64_t bytes) { live_ -= bytes; }

  // Occupancy while a step producing `out_bytes` runs.
  int64_t step(int64_t transient) {
    const int64_t occ = resident_ + live_ + transient;
    peak_ = std::max(peak_, occ);
    if (occ > limit_) {
      throw CapacityError("L2 occupancy " + std::to_string(occ) + " B exceeds capacity " +
                          std::to_string(limit_) + " B");
    }
    return occ;
  }

  int64_t peak() const { return peak_; }

 private:
  int64_t resident_;
  int64_t limit_;
  int64_t live_ = 0;
  int64_t peak_ = 0;
};

}  // namespace

ExecResult run_untiled(const AttnBlock& block, const QuantTensor& x, const MemConfig& cfg) {
  block.validate();
  cfg.validate();
  check_input(block, x);
  const AttnDims& d = block.dims;

  ExecResult res;
  ExecStats& st = res.stats;
  auto record = [&](StepKind k) {
    st.macs[static_cast<size_t>(k)] += step_macs(k, d, block.flavor);
    ++st.steps;
  };

  int64_t wbytes = weight_bytes(block.wv, cfg.count_biases) +
                   weight_bytes(block.wout, cfg.count_biases);
  if (block.flavor == AttnFlavor::MHSA) {
    wbytes += weight_bytes(block.wq, cfg.count_biases) +
              weight_bytes(block.wk, cfg.count_biases);
  } else {
    wbytes += static_cast<int64_t>(block.fwsa.w_star.data.size());
  }
  L2Sim l2(wbytes, cfg.l2_bytes);
  l2.alloc(static_cast<int64_t>(x.data.size()));

  const int64_t x_bytes = static_cast<int64_t>(x.data.size());
  QuantTensor a;
  if (block.flavor == AttnFlavor::MHSA) {
    l2.step(tensor_bytes(d, TensorRole::Q));
    QuantTensor q = linear_irl(x, block.wq, d, block.q_exp);
    l2.alloc(static_cast<int64_t>(q.data.size()));
    record(StepKind::LinearQ);

    l2.step(tensor_bytes(d, TensorRole::K));
    QuantTensor k = linear_irl(x, block.wk, d, block.k_exp);
    l2.alloc(static_cast<int64_t>(k.data.size()));
    record(StepKind::LinearK);

    l2.step(tensor_bytes(d, TensorRole::A));
    a = matmul_softmax(q, k, block.rp_gemm1, d);
    l2.alloc(static_cast<int64_t>(a.data.size()));
    record(StepKind::Gemm1Softmax);
    l2.free(static_cast<int64_t>(q.data.size()) + static_cast<int64_t>(k.data.size()));
    q.data.clear();
    k.data.clear();
  } else {
    l2.step(d.H * d.S * d.E);
    QuantTensor m2 = alloc_tensor({d.H, d.S, d.E}, Layout::HSP, block.fwsa.m2_exp);
    fwsa_stage1(x, block.fwsa, d, m2, full_range(d.H), full_range(d.S));
    l2.alloc(static_cast<int64_t>(m2.data.size()));
    record(StepKind::FwsaStage1);

    l2.step(tensor_bytes(d, TensorRole::A));
    a = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
    fwsa_stage2(m2, x, block.fwsa.rp_logits, d, a, full_range(d.S), full_range(d.H));
    l2.alloc(static_cast<int64_t>(a.data.size()));
    record(StepKind::FwsaStage2);
    l2.free(static_cast<int64_t>(m2.data.size()));
  }

  l2.step(tensor_bytes(d, TensorRole::V));
  QuantTensor v = linear_wrl(x, block.wv, d, block.v_exp);
  l2.alloc(static_cast<int64_t>(v.data.size()));
  record(StepKind::LinearV);
  if (!cfg.residual_live) l2.free(x_bytes);

  l2.step(tensor_bytes(d, TensorRole::M1));
  QuantTensor m1 = matmul_m2(a, v, block.rp_gemm2, d, block.m1_exp);
  l2.alloc(static_cast<int64_t>(m1.data.size()));
  record(StepKind::Gemm2);
  l2.free(static_cast<int64_t>(a.data.size()) + static_cast<int64_t>(v.data.size()));
  a.data.clear();
  v.data.clear();

  l2.step(tensor_bytes(d, TensorRole::Out));
  res.out = linear_out(m1, block.wout, d, block.out_exp);
  record(StepKind::LinearOut);

  st.l2_peak = l2.peak();
  return res;
}

namespace {

struct TiledCtx {
  const TilingPlan& plan;
  const AttnBlock& block;
  const MemConfig& cfg;
  ExecStats& st;
  int step_index = 0;

  void check_l1(int64_t ws) {
    st.l1_peak = std::max(st.l1_peak, ws);
    if (ws > cfg.l1_bytes) {
      throw PlanError("working-set violation at step " + std::to_string(step_index) + ": " +
                      std::to_string(ws) + " B > L1 " + std::to_string(cfg.l1_bytes) + " B");
    }
  }

  // Transfer/L1 walk of a linear-style step (irl, wrl, fwsa_stage1,
  // linear_out). rows/cols swap roles between variants, the byte accounting
  // is symmetric. `per_head` distinguishes H-replicated layers from the
  // output projection.
  void walk_linear(const PlanStep& s, int64_t rows_total, int64_t cols_total, int64_t red,
                   bool has_bias, bool per_head, bool weight_reuse) {
    const int64_t heads = per_head ? block.dims.H : 1;
    const int64_t bias_b = (has_bias && cfg.count_biases) ? 2 * cols_total : 0;
    for (int64_t h = 0; h < heads; ++h) {
      if (weight_reuse) {
        // weight slices loaded once, input swept per block (WRL)
        for (int64_t r0 = 0; r0 < rows_total; r0 += s.tile_rows) {
          const int64_t rows = std::min(s.tile_rows, rows_total - r0);
          st.l2_to_l1 += rows * red + (bias_b * rows) / cols_total;
          for (int64_t c0 = 0; c0 < cols_total; c0 += s.tile_cols) {
            const int64_t cols = std::min(s.tile_cols, cols_total - c0);
            st.l2_to_l1 += cols * red;
            check_l1(tile_ws::linear_tile(rows, cols, red, has_bias));
            st.l1_to_l2 += rows * cols;
          }
        }
      } else {
        // input rows loaded once, weights swept per row tile (IRL)
        for (int64_t r0 = 0; r0 < rows_total; r0 += s.tile_rows) {
          const int64_t rows = std::min(s.tile_rows, rows_total - r0);
          st.l2_to_l1 += rows * red;
          for (int64_t c0 = 0; c0 < cols_total; c0 += s.tile_cols) {
            const int64_t cols = std::min(s.tile_cols, cols_total - c0);
            st.l2_to_l1 += cols * red + (bias_b * cols) / cols_total;
            check_l1(tile_ws::linear_tile(rows, cols, red, has_bias));
            st.l1_to_l2 += rows * cols;
          }
        }
      }
    }
  }

  void walk_rowgemm(const PlanStep& s, int64_t red, int64_t resident_rows) {
    const AttnDims& d = block.dims;
    for (int64_t h = 0; h < d.H; ++h) {
      if (s.tile_red == 0) st.l2_to_l1 += resident_rows * red;
      for (int64_t r0 = 0; r0 < d.S; r0 += s.tile_rows) {
        const int64_t rows = std::min(s.tile_rows, d.S - r0);
        st.l2_to_l1 += rows * red;
        if (s.tile_red != 0) st.l2_to_l1 += resident_rows * red;  // streamed sweep
        check_l1(tile_ws::rowgemm_tile(rows, s.tile_red, red, d.S, resident_rows));
        st.l1_to_l2 += rows * d.S;
      }
    }
  }

  void walk_gemm2(const PlanStep& s) {
    const AttnDims& d = block.dims;
    for (int64_t h = 0; h < d.H; ++h) {
      if (s.tile_red == 0) st.l2_to_l1 += d.P * d.S;
      for (int64_t r0 = 0; r0 < d.S; r0 += s.tile_rows) {
        const int64_t rows = std::min(s.tile_rows, d.S - r0);
        st.l2_to_l1 += rows * d.S;
        if (s.tile_red != 0) st.l2_to_l1 += d.P * d.S;
        check_l1(tile_ws::gemm2_tile(rows, s.tile_red, d));
        st.l1_to_l2 += rows * d.P;
      }
    }
  }
};

}  // namespace

ExecResult run_tiled(const TilingPlan& plan, const AttnBlock& block, const QuantTensor& x,
                     const MemConfig& cfg) {
  block.validate();
  cfg.validate();
  check_input(block, x);
  if (plan.flavor != block.flavor) {
    throw PlanError("plan flavor does not match block flavor");
  }
  const AttnDims& d = block.dims;

  ExecResult res;
  ExecStats& st = res.stats;
  TiledCtx ctx{plan, block, cfg, st};

  // Actual byte size per plan buffer id.
  std::map<int, int64_t> actual_bytes;
  int x_id = -1;
  int64_t resident = 0;
  for (const PlanBuffer& b : plan.buffers) {
    if (b.is_weight) {
      int64_t bytes = 0;
      if (b.name == "W_q") bytes = weight_bytes(block.wq, cfg.count_biases);
      else if (b.name == "W_k") bytes = weight_bytes(block.wk, cfg.count_biases);
      else if (b.name == "W_v") bytes = weight_bytes(block.wv, cfg.count_biases);
      else if (b.name == "W_out") bytes = weight_bytes(block.wout, cfg.count_biases);
      else if (b.name == "W_star") bytes = static_cast<int64_t>(block.fwsa.w_star.data.size());
      actual_bytes[b.id] = bytes;
      if (cfg.weights_resident) resident += bytes;
    } else if (b.name == "X") {
      x_id = b.id;
      actual_bytes[b.id] = static_cast<int64_t>(x.data.size());
    }
  }

  L2Sim l2(resident, cfg.l2_bytes);
  if (x_id >= 0) l2.alloc(actual_bytes[x_id]);

  std::map<std::string, QuantTensor> made;
  auto buf_name = [&](int id) { return plan.buffer(id).name; };

  std::vector<int32_t> logits(static_cast<size_t>(d.S));
  std::vector<int8_t> a_row(static_cast<size_t>(d.S));

  for (const PlanStep& s : plan.steps) {
    int64_t transient_weights = 0;
    if (!cfg.weights_resident) {
      for (int w : s.weights) transient_weights += actual_bytes[w];
    }

    QuantTensor produced;
    switch (s.kind) {
      case StepKind::LinearQ:
        produced = linear_irl(x, block.wq, d, block.q_exp);
        ctx.walk_linear(s, d.S, d.P, d.E, true, true, false);
        break;
      case StepKind::LinearK:
        produced = linear_irl(x, block.wk, d, block.k_exp);
        ctx.walk_linear(s, d.S, d.P, d.E, true, true, false);
        break;
      case StepKind::LinearV:
        produced = linear_wrl(x, block.wv, d, block.v_exp);
        ctx.walk_linear(s, d.P, d.S, d.E, true, true, true);
        break;
      case StepKind::Gemm1Softmax:
        produced = matmul_softmax(made.at("Q"), made.at("K"), block.rp_gemm1, d);
        ctx.walk_rowgemm(s, d.P, d.S);
        break;
      case StepKind::FwsaStage1:
        produced = alloc_tensor({d.H, d.S, d.E}, Layout::HSP, block.fwsa.m2_exp);
        fwsa_stage1(x, block.fwsa, d, produced, full_range(d.H), full_range(d.S));
        ctx.walk_linear(s, d.S, d.E, d.E, false, true, false);
        break;
      case StepKind::FwsaStage2:
        produced = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
        fwsa_stage2(made.at("M2"), x, block.fwsa.rp_logits, d, produced, full_range(d.S),
                    full_range(d.H));
        ctx.walk_rowgemm(s, d.E, d.S);
        break;
      case StepKind::Gemm2:
        produced = matmul_m2(made.at("A"), made.at("V"), block.rp_gemm2, d, block.m1_exp);
        ctx.walk_gemm2(s);
        break;
      case StepKind::LinearOut:
        produced = linear_out(made.at("M1"), block.wout, d, block.out_exp);
        ctx.walk_linear(s, d.S, d.E, d.H * d.P, true, false, false);
        break;
      case StepKind::FusedAttention: {
        produced = alloc_tensor({d.S, d.H * d.P}, Layout::SE, block.m1_exp);
        const bool mhsa = plan.flavor == AttnFlavor::MHSA;
        const QuantTensor& qm = mhsa ? made.at("Q") : made.at("M2");
        const QuantTensor& vv = made.at("V");
        const int in_exp = mhsa ? made.at("Q").scale_exp + made.at("K").scale_exp
                                : made.at("M2").scale_exp + x.scale_exp;
        const RequantParams& rp1 = mhsa ? block.rp_gemm1 : block.fwsa.rp_logits;
        for (int64_t h = 0; h < d.H; ++h) {
          st.l2_to_l1 += mhsa ? 2 * d.S * d.P  // K and V heads, once per head
                              : d.S * d.E + d.P * d.S;  // X and the V head
          for (int64_t s0 = 0; s0 < d.S; s0 += s.tile_rows) {
            const int64_t rows = std::min(s.tile_rows, d.S - s0);
            st.l2_to_l1 += rows * (mhsa ? d.P : d.E);
            ctx.check_l1(mhsa ? mem_dft(rows, d) : mem_dft_fwsa(rows, d));
            for (int64_t r = s0; r < s0 + rows; ++r) {
              if (mhsa) {
                attn_logits_row(qm, made.at("K"), rp1, d, h, r, logits);
              } else {
                fwsa_logits_row(qm, x, rp1, d, h, r, logits);
              }
              int_softmax(logits, in_exp, a_row);
              int8_t* m1_row = produced.data.data() + r * d.H * d.P + h * d.P;
              m2_output_row(a_row, vv, block.rp_gemm2, d, h, full_range(d.P),
                            std::span<int8_t>(m1_row, static_cast<size_t>(d.P)));
            }
            st.l1_to_l2 += rows * d.P;
          }
        }
        break;
      }
    }

    // L2 accounting for this step.
    int64_t transient = transient_weights;
    if (s.overlay) {
      const int64_t in_row = actual_bytes[s.overlay_input] / (d.H * d.S);
      int64_t running = 0, worst = 0;
      for (int64_t h = 0; h < d.H; ++h) {
        for (int64_t s0 = 0; s0 < d.S; s0 += s.tile_rows) {
          const int64_t rows = std::min(s.tile_rows, d.S - s0);
          running += rows * d.P - rows * in_row;
          worst = std::max(worst, running);
        }
      }
      transient += std::max<int64_t>(0, worst);
    } else if (s.output >= 0) {
      transient += static_cast<int64_t>(produced.data.size());
    }
    ctx.step_index = st.steps;
    l2.step(transient);

    if (s.output >= 0) {
      actual_bytes[s.output] = static_cast<int64_t>(produced.data.size());
      l2.alloc(actual_bytes[s.output]);
      made[buf_name(s.output)] = std::move(produced);
    }
    if (s.overlay && s.overlay_input >= 0) {
      l2.free(actual_bytes[s.overlay_input]);
      made.erase(buf_name(s.overlay_input));
    }
    for (int f : s.frees) {
      l2.free(actual_bytes[f]);
      if (f != x_id) made.erase(buf_name(f));
    }
    ++st.steps;
    st.macs[static_cast<size_t>(s.kind)] += step_macs(s.kind, d, plan.flavor);
  }

  st.l2_peak = l2.peak();
  res.out = std::move(made.at("out"));
  return res;
}

ExecResult run_parallel(const AttnBlock& block, const QuantTensor& x, int workers) {
  block.validate();
  check_input(block, x);
  if (workers < 1) throw ValueError("workers must be >= 1");
  const AttnDims& d = block.dims;

  ExecResult res;
  ExecStats& st = res.stats;
  st.worker_slices = chunk_sizes(d.H, workers);

  auto parallel_over = [&](int64_t total, const std::function<void(Range)>& fn) {
    const std::vector<int64_t> sizes = chunk_sizes(total, workers);
    std::vector<std::thread> threads;
    int64_t begin = 0;
    for (int64_t sz : sizes) {
      if (sz > 0) threads.emplace_back(fn, Range{begin, begin + sz});
      begin += sz;
    }
    for (auto& t : threads) t.join();
  };

  auto record = [&](StepKind k) {
    st.macs[static_cast<size_t>(k)] += step_macs(k, d, block.flavor);
    ++st.steps;
  };

  QuantTensor a = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
  if (block.flavor == AttnFlavor::MHSA) {
    QuantTensor q = alloc_tensor({d.H, d.S, d.P}, Layout::HSP, block.q_exp);
    parallel_over(d.H, [&](Range h) { linear_irl(x, block.wq, d, q, h, full_range(d.S)); });
    record(StepKind::LinearQ);

    QuantTensor k = alloc_tensor({d.H, d.S, d.P}, Layout::HSP, block.k_exp);
    parallel_over(d.H, [&](Range h) { linear_irl(x, block.wk, d, k, h, full_range(d.S)); });
    record(StepKind::LinearK);

    parallel_over(d.H, [&](Range h) {
      matmul_softmax(q, k, block.rp_gemm1, d, a, full_range(d.S), h);
    });
    record(StepKind::Gemm1Softmax);
  } else {
    QuantTensor m2 = alloc_tensor({d.H, d.S, d.E}, Layout::HSP, block.fwsa.m2_exp);
    parallel_over(d.H, [&](Range h) { fwsa_stage1(x, block.fwsa, d, m2, h, full_range(d.S)); });
    record(StepKind::FwsaStage1);

    parallel_over(d.H, [&](Range h) {
      fwsa_stage2(m2, x, block.fwsa.rp_logits, d, a, full_range(d.S), h);
    });
    record(StepKind::FwsaStage2);
  }

  QuantTensor v = alloc_tensor({d.H, d.P, d.S}, Layout::HPS, block.v_exp);
  parallel_over(d.H, [&](Range h) {
    linear_wrl(x, block.wv, d, v, h, full_range(d.P), full_range(d.S));
  });
  record(StepKind::LinearV);

  QuantTensor m1 = alloc_tensor({d.S, d.H * d.P}, Layout::SE, block.m1_exp);
  parallel_over(d.H, [&](Range h) {
    matmul_m2(a, v, block.rp_gemm2, d, m1, full_range(d.S), h, full_range(d.P));
  });
  record(StepKind::Gemm2);

  res.out = alloc_tensor({d.S, d.E}, Layout::SE_out, block.out_exp);
  // The reduction spans all heads here, so rows are the parallel axis.
  parallel_over(d.S, [&](Range srange) {
    linear_out(m1, block.wout, d, res.out, srange, full_range(d.E));
  });
  record(StepKind::LinearOut);

  return res;
}

double cost_estimate(const TilingPlan& plan, const AttnDims& d, const MemConfig& cfg) {
  cfg.validate();
  const double simd = static_cast<double>(cfg.simd_width);
  const double bytes_per_cycle = 4.0;

  auto derated = [&](int64_t macs, int64_t red) {
    if (macs == 0 || red <= 0) return 0.0;
    const double util = static_cast<double>(red) / (static_cast<double>(red) + 4.0);
    return static_cast<double>(macs) / (simd * util);
  };
  const double softmax_row_cost = 8.0 + 4.0 * static_cast<double>(d.S);

  double total = 0.0;
  for (const PlanStep& s : plan.steps) {
    double compute = 0.0;
    double softmax = 0.0;
    switch (s.kind) {
      case StepKind::LinearQ:
      case StepKind::LinearK:
      case StepKind::LinearV:
        compute = derated(d.H * d.S * d.P * d.E, d.E);
        break;
      case StepKind::Gemm1Softmax:
        compute = derated(d.H * d.S * d.S * d.P, d.P);
        softmax = static_cast<double>(d.H * d.S) * softmax_row_cost;
        break;
      case StepKind::Gemm2:
        compute = derated(d.H * d.S * d.S * d.P, d.S);
        break;
      case StepKind::LinearOut:
        compute = derated(d.S * d.E * d.H * d.P, d.H * d.P);
        break;
      case StepKind::FwsaStage1:
        compute = derated(d.H * d.S * d.E * d.E, d.E);
        break;
      case StepKind::FwsaStage2:
        compute = derated(d.H * d.S * d.S * d.E, d.E);
        softmax = static_cast<double>(d.H * d.S) * softmax_row_cost;
        break;
      case StepKind::FusedAttention: {
        const int64_t red1 = plan.flavor == AttnFlavor::MHSA ? d.P : d.E;
        compute = derated(d.H * d.S * d.S * red1, red1) +
                  derated(d.H * d.S * d.S * d.P, d.S);
        softmax = static_cast<double>(d.H * d.S) * softmax_row_cost;
        break;
      }
    }
    const double transfer =
        static_cast<double>(s.bytes_in + s.bytes_out) / bytes_per_cycle;
    total += compute + softmax + std::max(0.0, transfer - compute - softmax);
  }
  return total;
}

}  // namespace tinyattn
