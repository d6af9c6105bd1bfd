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
// Command layer behind the CLI: verify / plan / fuse / bench. Reports are
// deterministic "key = value" text, one fact per line.

#ifndef TINYATTN_COMMANDS_HPP
#define TINYATTN_COMMANDS_HPP

#include <cstdint>
#include <string>

#include "tinyattn/model.hpp"
#include "tinyattn/planner.hpp"

namespace tinyattn {

struct CommandOptions {
  std::string mode = "auto";  // lwt | dft | auto
  int workers = 1;
  uint64_t seed = 1;
};

struct CommandResult {
  int exit_code = 0;  // 0 pass, 1 verification failure; input errors throw
  std::string report;
};

// Full equivalence suite on one model: untiled vs naive oracle, LWT and DFT
// tiled vs untiled, parallel vs sequential, softmax row normalization.
CommandResult cmd_verify(const ModelContainer& m, const MemConfig& cfg,
                         const CommandOptions& opt);

// Schedule listing, per-step L2 timeline, the peak, and (mode=auto) the
// chosen mode with the fallback rationale.
CommandResult cmd_plan(const ModelContainer& m, const MemConfig& cfg,
                       const CommandOptions& opt);

// Offline weight fusion plus the analytic MAC/parameter comparison.
struct FuseOutput {
  CommandResult result;
  ModelContainer fused;
};
FuseOutput cmd_fuse(const ModelContainer& m, const CommandOptions& opt);

// Ablation-style comparison across {MHSA, FWSA} x {LWT, DFT}: MACs,
// transfer bytes, memory peaks, cycle estimates.
CommandResult cmd_bench(const ModelContainer& m, const MemConfig& cfg,
                        const CommandOptions& opt);

}  // namespace tinyattn

#endif  // TINYATTN_COMMANDS_HPP
