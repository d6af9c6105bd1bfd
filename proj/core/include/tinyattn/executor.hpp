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
// Deterministic execution of attention blocks over the simulated two-level
// memory: untiled reference runs, plan-driven tiled runs with transfer and
// occupancy counters, and multi-worker runs partitioned per the head-chunk
// rule. The simulator is functional-plus-counters; the separate cycle
// estimate is a trend model only and no correctness claim depends on it.

#ifndef TINYATTN_EXECUTOR_HPP
#define TINYATTN_EXECUTOR_HPP

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tinyattn/block.hpp"
#include "tinyattn/planner.hpp"

namespace tinyattn {

struct ExecStats {
  std::array<int64_t, kNumStepKinds> macs{};
  int64_t l2_to_l1 = 0;
  int64_t l1_to_l2 = 0;
  int64_t l1_peak = 0;
  int64_t l2_peak = 0;
  int steps = 0;
  std::vector<int64_t> worker_slices;  // head-slice sizes per worker

  int64_t total_macs() const {
    return std::accumulate(macs.begin(), macs.end(), int64_t{0});
  }
  int64_t macs_of(StepKind kind) const { return macs[static_cast<size_t>(kind)]; }
};

struct ExecResult {
  QuantTensor out;
  ExecStats stats;
};

// Direct kernel-by-kernel execution with every tensor materialized; the
// canonical output for equivalence checks. Throws CapacityError when the
// working set exceeds cfg.l2_bytes.
ExecResult run_untiled(const AttnBlock& block, const QuantTensor& x, const MemConfig& cfg);

// Plan-driven execution. Only planned buffers materialize (the fused DFT
// step works from x-row scratch tiles, never a full attention map), every
// simulated transfer is counted, and each tile's working set is checked
// against cfg.l1_bytes. Output is bit-identical to run_untiled.
ExecResult run_tiled(const TilingPlan& plan, const AttnBlock& block, const QuantTensor& x,
                     const MemConfig& cfg);

// Untiled execution across `workers` slices of the parallel axis (heads for
// projections and GEMMs, rows for the output projection). Slices write
// disjoint output ranges, so any interleaving is bit-identical to
// sequential execution.
ExecResult run_parallel(const AttnBlock& block, const QuantTensor& x, int workers);

// Head-chunk partition: C = ceil(total/workers), worker i takes
// [min(C*i, total), min(C*i + C, total)).
std::vector<int64_t> chunk_sizes(int64_t total, int workers);

// Analytic cycle estimate of a planned execution: MACs derated by SIMD
// utilization of the reduction length, softmax cost linear in S per row,
// and non-overlapped transfer cost. Trend model only.
double cost_estimate(const TilingPlan& plan, const AttnDims& dims, const MemConfig& cfg);

}  // namespace tinyattn

#endif  // TINYATTN_EXECUTOR_HPP
