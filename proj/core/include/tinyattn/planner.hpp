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
// Tiling plans for the attention block over a two-level software-managed
// memory. Layer-wise tiling (LWT) materializes every intermediate in L2 and
// tiles each layer independently; depth-first tiling (DFT) fuses the two
// GEMMs and the softmax so the attention map A only ever exists as x-row
// tiles in L1.

#ifndef TINYATTN_PLANNER_HPP
#define TINYATTN_PLANNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tinyattn/tensor.hpp"

namespace tinyattn {

// Two-level memory description plus the accounting policy knobs.
struct MemConfig {
  int64_t l1_bytes = 128'000;
  int64_t l2_bytes = 1'500'000;
  int cores = 8;
  int simd_width = 4;
  bool weights_resident = true;  // weights occupy L2 for the whole block
  bool residual_live = true;     // X stays live for the residual connection
  bool count_biases = false;     // include 16-bit bias bytes in L2 peaks

  void validate() const;
};

enum class TilingMode { LWT, DFT };

// Compute steps of the block. The fused step exists only in DFT plans.
enum class StepKind {
  LinearQ,
  LinearK,
  LinearV,
  Gemm1Softmax,
  Gemm2,
  LinearOut,
  FwsaStage1,
  FwsaStage2,
  FusedAttention,
};
constexpr int kNumStepKinds = 9;
const char* step_kind_name(StepKind kind);

struct PlanBuffer {
  int id = -1;
  std::string name;
  int64_t bytes = 0;
  bool is_weight = false;
};

// One schedule entry: which kernel runs, its tile shape, the L2 buffers it
// touches, and the transfers it causes. `frees` lists buffers dead after the
// step. An overlay step consumes `overlay_input` tile by tile, each freed
// before the matching output tile is written, so equal-size tiles keep L2
// occupancy flat.
struct PlanStep {
  StepKind kind = StepKind::LinearQ;
  std::string label;
  std::vector<int> inputs;
  int output = -1;
  std::vector<int> weights;
  std::vector<int> frees;

  int64_t tile_rows = 1;      // output rows per tile (x)
  int64_t tile_cols = 0;      // output feature block (0 = full width)
  int64_t tile_red = 0;       // streamed reduction-side block (0 = resident)
  int64_t tile_count = 1;
  int64_t l1_working_set = 0;
  int64_t bytes_in = 0;
  int64_t bytes_out = 0;

  bool overlay = false;
  int overlay_input = -1;
};

struct TilingPlan {
  TilingMode mode = TilingMode::LWT;
  AttnFlavor flavor = AttnFlavor::MHSA;
  int64_t dft_x = 0;  // rows of Q (or M2) per fused tile, DFT only
  std::vector<PlanBuffer> buffers;
  std::vector<PlanStep> steps;

  const PlanBuffer& buffer(int id) const { return buffers[static_cast<size_t>(id)]; }
};

// Max L2 occupancy while each step runs; the peak is the memory peak of the
// schedule.
struct MemoryTimeline {
  std::vector<int64_t> occupancy;
  int64_t peak = 0;
  int peak_step = -1;
};

// L1 bytes of the single-head fused tile: x rows of Q, the x by S slab of A,
// x output rows of M, and the K and V heads: (2P + S) x + 2PS.
// Throws PlanError when x is outside [1, S].
int64_t mem_dft(int64_t x, const AttnDims& dims);

// Largest x in [1, S] with mem_dft(x) <= l1_bytes; nullopt means even x = 1
// does not fit and the caller should fall back to LWT.
std::optional<int64_t> choose_dft_x(const AttnDims& dims, const MemConfig& cfg);

// L1 bytes of the fused-weight fused tile (M2 rows against X^T plus V).
int64_t mem_dft_fwsa(int64_t x, const AttnDims& dims);
std::optional<int64_t> choose_dft_x_fwsa(const AttnDims& dims, const MemConfig& cfg);

// Layer-wise plan. Step order keeps the V projection after the first GEMM.
// Throws PlanError when some layer's minimal tile exceeds L1 or the plan
// does not fit L2.
TilingPlan plan_lwt(const AttnDims& dims, const MemConfig& cfg,
                    AttnFlavor flavor = AttnFlavor::MHSA);

// Depth-first plan: Q, K, V first, then the fused GEMM-softmax-GEMM step
// (A never allocated in L2), then the output projection. Throws PlanError
// when DFT is infeasible; callers wanting the fallback use plan_auto.
TilingPlan plan_dft(const AttnDims& dims, const MemConfig& cfg,
                    AttnFlavor flavor = AttnFlavor::MHSA);

// DFT when feasible, LWT otherwise. `chosen` reports the picked mode.
TilingPlan plan_auto(const AttnDims& dims, const MemConfig& cfg, AttnFlavor flavor,
                     std::string* rationale = nullptr);

// Liveness-based L2 accounting: a tensor occupies L2 from its producing
// step through its last consuming step; weights are all-resident under
// cfg.weights_resident; X stays live throughout under cfg.residual_live.
MemoryTimeline memory_timeline(const TilingPlan& plan, const AttnDims& dims,
                               const MemConfig& cfg);

// Structural checks used by tests: every buffer allocated before first use,
// freed exactly once after last use, and per-step L1 within capacity.
void validate_plan(const TilingPlan& plan, const AttnDims& dims, const MemConfig& cfg);

// L1 bytes of one executed tile. Shared between the planner (tile choice)
// and the executor (per-tile capacity checks). Double buffers on streamed
// operands; 16-bit biases ride along with their weight slice.
namespace tile_ws {
// r output rows x c output features against a resident reduction of length
// `red`: 2 r*red (input rows) + 2 (c*red + bias) (weight slice) + 2 r*c.
int64_t linear_tile(int64_t rows, int64_t cols, int64_t red, bool with_bias);
// x row-GEMM rows with fused softmax: streamed operand rows of length `red`
// (red_block = 0 keeps all `resident_rows` resident single-buffered), int32
// logit staging plus int8 output rows of length row_len.
int64_t rowgemm_tile(int64_t rows, int64_t red_block, int64_t red, int64_t row_len,
                     int64_t resident_rows);
// x M1 rows against the V head (cols_block = 0 keeps the head resident).
int64_t gemm2_tile(int64_t rows, int64_t cols_block, const AttnDims& dims);
}  // namespace tile_ws

// Human-readable schedule listing for the CLI.
std::string format_schedule(const TilingPlan& plan, const AttnDims& dims,
                            const MemConfig& cfg);

}  // namespace tinyattn

#endif  // TINYATTN_PLANNER_HPP
