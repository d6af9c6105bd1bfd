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
// Int8 attention kernels. Each kernel fixes a loop order and output layout
// so the consumer streams its input sequentially, removing every transpose,
// reshape, and concatenation from the block:
//
//   linear_irl      H->S->P->E   X(SE) -> Q,K(HSP)     input-reuse
//   linear_wrl      H->P->S->E   X(SE) -> V(HPS)       weight-reuse
//   matmul_softmax  S->H->S'     Q,K(HSP) -> A(SHS)    reduction over P,
//                                softmax fused per produced row
//   matmul_m2       S->H->P      A(SHS), V(HPS) -> M1(S, H*P), reduction S'
//   linear_out      S->E->H*P    M1 -> out(SE), reduction over concatenated
//                                heads, no concat buffer
//   fwsa_stage1/2   H->S->E, S->H->S'  X,W* -> M2(HSE) -> A(SHS)
//
// Output blocks are produced 4 rows x 2 features per iteration with eight
// live accumulators and scalar remainder handling; accumulation is int32
// and saturates only at requantization.

#ifndef TINYATTN_KERNELS_HPP
#define TINYATTN_KERNELS_HPP

#include <cstdint>
#include <span>

#include "tinyattn/ibert.hpp"
#include "tinyattn/quant.hpp"
#include "tinyattn/tensor.hpp"

namespace tinyattn {

// Half-open index range over one kernel axis.
struct Range {
  int64_t begin = 0;
  int64_t end = 0;
  int64_t size() const { return end - begin; }
};
inline Range full_range(int64_t n) { return {0, n}; }

// Packed projection or output-projection weights plus their requantization.
// Projection weights are stored (H, P, E) row-contiguous in E; the output
// projection is stored (E, H, P) row-contiguous in H*P. Both match the
// streaming order of the kernel that consumes them.
struct LinearWeights {
  QuantTensor w;
  RequantParams rp;
};

// Fused Q/K weights W* = Wq Wk^T, per head (E x E), stored (H, E', E)
// contiguous in the reduction axis E.
struct FwsaWeights {
  QuantTensor w_star;
  RequantParams rp_m2;      // stage-1 requantization of the M2 intermediate
  RequantParams rp_logits;  // logit scaling before softmax (1/sqrt d fold)
  int m2_exp = 7;           // scale exponent of M2
};

// --- Linear projections -----------------------------------------------

// Q/K projection. out must be HSP (H, S, P); computes rows [h, s) in the
// given ranges for every p.
void linear_irl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range h, Range s);
QuantTensor linear_irl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                       int out_exp);

// V projection, per-head transposed output. out must be HPS (H, P, S).
void linear_wrl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range h, Range p, Range s);
QuantTensor linear_wrl(const QuantTensor& x, const LinearWeights& w, const AttnDims& dims,
                       int out_exp);

// Output projection over the concatenated (H*P) axis. m1 is (S, H*P) in SE
// layout; out must be SE_out (S, E).
void linear_out(const QuantTensor& m1, const LinearWeights& w, const AttnDims& dims,
                QuantTensor& out, Range s, Range e);
QuantTensor linear_out(const QuantTensor& m1, const LinearWeights& w, const AttnDims& dims,
                       int out_exp);

// --- Attention GEMMs ---------------------------------------------------

// One logit row: row[s'] = round_shift((sum_p Q[h,s,p] K[h,s',p]) * eps_mul,
// eps_div) for s' in [0, S). rp carries the folded attention temperature.
void attn_logits_row(const QuantTensor& q, const QuantTensor& k, const RequantParams& rp,
                     const AttnDims& dims, int64_t h, int64_t s, std::span<int32_t> row);

// Q K^T with fused row softmax. Q and K both HSP; K rows are streamed so the
// transpose never materializes. a must be SHS (S, H, S') at scale 2^(-7).
void matmul_softmax(const QuantTensor& q, const QuantTensor& k, const RequantParams& rp,
                    const AttnDims& dims, QuantTensor& a, Range s, Range h);
QuantTensor matmul_softmax(const QuantTensor& q, const QuantTensor& k,
                           const RequantParams& rp, const AttnDims& dims);

// One M1 output row slice for (s, h): m1_row[p] = requant(sum_s' a_row[s'] *
// V[h,p,s']). a_row is the S-long attention row at scale 2^(-7).
void m2_output_row(std::span<const int8_t> a_row, const QuantTensor& v,
                   const RequantParams& rp, const AttnDims& dims, int64_t h, Range p,
                   std::span<int8_t> m1_row);

// Attention-map x V. a is SHS, v is HPS; m1 is (S, H*P) in SE layout so the
// output projection reduces over contiguous memory.
void matmul_m2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
               const AttnDims& dims, QuantTensor& m1, Range s, Range h, Range p);
QuantTensor matmul_m2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
                      const AttnDims& dims, int out_exp);

// --- Fused-weight self-attention ---------------------------------------

// Stage 1: M2[h,s,e'] = requant(sum_e X[s,e] W*[h,e,e']). m2 must be HSP
// with extents (H, S, E).
void fwsa_stage1(const QuantTensor& x, const FwsaWeights& w, const AttnDims& dims,
                 QuantTensor& m2, Range h, Range s);

// Stage-2 logit row: row[s'] = round_shift over sum_e' M2[h,s,e'] X[s',e'].
void fwsa_logits_row(const QuantTensor& m2, const QuantTensor& x, const RequantParams& rp,
                     const AttnDims& dims, int64_t h, int64_t s, std::span<int32_t> row);

// Stage 2: logits against X^T with fused row softmax, emitting A in SHS.
void fwsa_stage2(const QuantTensor& m2, const QuantTensor& x, const RequantParams& rp,
                 const AttnDims& dims, QuantTensor& a, Range s, Range h);

// Both stages: A = softmax(X W* X^T) without the Q/K projections.
QuantTensor fwsa_fused(const QuantTensor& x, const FwsaWeights& w, const AttnDims& dims);

}  // namespace tinyattn

#endif  // TINYATTN_KERNELS_HPP
