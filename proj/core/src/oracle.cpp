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

#include "tinyattn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tinyattn/errors.hpp"
#include "tinyattn/quant.hpp"

namespace tinyattn {

namespace {

int32_t to_logit(int64_t v) {
  constexpr int64_t lo = std::numeric_limits<int32_t>::min();
  constexpr int64_t hi = std::numeric_limits<int32_t>::max();
  return static_cast<int32_t>(std::clamp(v, lo, hi));
}

void check_size(std::span<const double> v, int64_t expect, const char* what) {
  if (static_cast<int64_t>(v.size()) != expect) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expect) +
                     " elements, got " + std::to_string(v.size()));
  }
}

void softmax_row(double* row, int64_t n) {
  double mx = row[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (int64_t i = 0; i < n; ++i) row[i] /= sum;
}

// A (H,S,S) from already-projected per-head Q,K buffers of (S,P) each.
std::vector<double> attention_map_from_qk(const std::vector<double>& q,
                                          const std::vector<double>& k,
                                          const AttnDims& d) {
  const int64_t S = d.S, P = d.P, H = d.H;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(P));
  std::vector<double> a(static_cast<size_t>(H * S * S));
  for (int64_t h = 0; h < H; ++h) {
    for (int64_t s = 0; s < S; ++s) {
      double* row = a.data() + (h * S + s) * S;
      for (int64_t t = 0; t < S; ++t) {
        double acc = 0.0;
        for (int64_t p = 0; p < P; ++p) {
          acc += q[(h * S + s) * P + p] * k[(h * S + t) * P + p];
        }
        row[t] = acc * inv_sqrt_d;
      }
      softmax_row(row, S);
    }
  }
  return a;
}

// Per-head projection (S,P) stacked into (H,S,P); weights logical (H,E,P).
std::vector<double> project(std::span<const double> x, std::span<const double> w,
                            const AttnDims& d) {
  const int64_t S = d.S, E = d.E, P = d.P, H = d.H;
  std::vector<double> out(static_cast<size_t>(H * S * P));
  for (int64_t h = 0; h < H; ++h) {
    for (int64_t s = 0; s < S; ++s) {
      for (int64_t p = 0; p < P; ++p) {
        double acc = 0.0;
        for (int64_t e = 0; e < E; ++e) acc += x[s * E + e] * w[(h * E + e) * P + p];
        out[(h * S + s) * P + p] = acc;
      }
    }
  }
  return out;
}

std::vector<double> finish_attention(const std::vector<double>& a,
                                     const std::vector<double>& v,
                                     std::span<const double> wo, const AttnDims& d) {
  const int64_t S = d.S, E = d.E, P = d.P, H = d.H;
  const int64_t HP = H * P;
  std::vector<double> m1(static_cast<size_t>(S * HP));
  for (int64_t h = 0; h < H; ++h) {
    for (int64_t s = 0; s < S; ++s) {
      for (int64_t p = 0; p < P; ++p) {
        double acc = 0.0;
        for (int64_t t = 0; t < S; ++t) {
          acc += a[(h * S + s) * S + t] * v[(h * S + t) * P + p];
        }
        m1[s * HP + h * P + p] = acc;
      }
    }
  }
  std::vector<double> out(static_cast<size_t>(S * E));
  for (int64_t s = 0; s < S; ++s) {
    for (int64_t e = 0; e < E; ++e) {
      double acc = 0.0;
      for (int64_t r = 0; r < HP; ++r) acc += m1[s * HP + r] * wo[r * E + e];
      out[s * E + e] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> float_mhsa(std::span<const double> x, std::span<const double> wq,
                               std::span<const double> wk, std::span<const double> wv,
                               std::span<const double> wo, const AttnDims& d) {
  d.validate();
  check_size(x, d.S * d.E, "X");
  check_size(wq, d.H * d.E * d.P, "Wq");
  check_size(wk, d.H * d.E * d.P, "Wk");
  check_size(wv, d.H * d.E * d.P, "Wv");
  check_size(wo, d.H * d.P * d.E, "Wo");

  const std::vector<double> q = project(x, wq, d);
  const std::vector<double> k = project(x, wk, d);
  const std::vector<double> v = project(x, wv, d);
  const std::vector<double> a = attention_map_from_qk(q, k, d);
  return finish_attention(a, v, wo, d);
}

std::vector<double> float_fwsa(std::span<const double> x, std::span<const double> w_star,
                               std::span<const double> wv, std::span<const double> wo,
                               const AttnDims& d) {
  d.validate();
  check_size(x, d.S * d.E, "X");
  check_size(w_star, d.H * d.E * d.E, "W*");
  check_size(wv, d.H * d.E * d.P, "Wv");
  check_size(wo, d.H * d.P * d.E, "Wo");

  const int64_t S = d.S, E = d.E, H = d.H;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d.P));
  std::vector<double> a(static_cast<size_t>(H * S * S));
  for (int64_t h = 0; h < H; ++h) {
    // T = X W*[h], then logits = T X^T.
    std::vector<double> t(static_cast<size_t>(S * E));
    for (int64_t s = 0; s < S; ++s) {
      for (int64_t f = 0; f < E; ++f) {
        double acc = 0.0;
        for (int64_t e = 0; e < E; ++e) acc += x[s * E + e] * w_star[(h * E + e) * E + f];
        t[s * E + f] = acc;
      }
    }
    for (int64_t s = 0; s < S; ++s) {
      double* row = a.data() + (h * S + s) * S;
      for (int64_t u = 0; u < S; ++u) {
        double acc = 0.0;
        for (int64_t f = 0; f < E; ++f) acc += t[s * E + f] * x[u * E + f];
        row[u] = acc * inv_sqrt_d;
      }
      softmax_row(row, S);
    }
  }
  const std::vector<double> v = project(x, wv, d);
  return finish_attention(a, v, wo, d);
}

std::vector<double> float_attention_map(std::span<const double> x,
                                        std::span<const double> wq,
                                        std::span<const double> wk, const AttnDims& d) {
  d.validate();
  check_size(x, d.S * d.E, "X");
  check_size(wq, d.H * d.E * d.P, "Wq");
  check_size(wk, d.H * d.E * d.P, "Wk");
  const std::vector<double> q = project(x, wq, d);
  const std::vector<double> k = project(x, wk, d);
  return attention_map_from_qk(q, k, d);
}

// --- Naive integer kernels ----------------------------------------------
// Plain per-output-element loops over logical indices. Weight buffers keep
// the packed storage (H,P,E)/(E,H,P); the logical W[h][e][p] below reads
// through it explicitly.

QuantTensor naive_linear_irl(const QuantTensor& x, const LinearWeights& w,
                             const AttnDims& d, int out_exp) {
  d.validate();
  QuantTensor out = alloc_tensor({d.H, d.S, d.P}, Layout::HSP, out_exp);
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s = 0; s < d.S; ++s) {
      for (int64_t p = 0; p < d.P; ++p) {
        int32_t acc = w.rp.bias.empty() ? 0 : w.rp.bias[h * d.P + p];
        for (int64_t e = 0; e < d.E; ++e) {
          acc += static_cast<int32_t>(x.at(std::array<int64_t, 2>{s, e})) *
                 w.w.at(std::array<int64_t, 3>{h, p, e});
        }
        out.at(std::array<int64_t, 3>{h, s, p}) = requantize(acc, w.rp);
      }
    }
  }
  return out;
}

QuantTensor naive_linear_wrl(const QuantTensor& x, const LinearWeights& w,
                             const AttnDims& d, int out_exp) {
  d.validate();
  QuantTensor out = alloc_tensor({d.H, d.P, d.S}, Layout::HPS, out_exp);
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t p = 0; p < d.P; ++p) {
      for (int64_t s = 0; s < d.S; ++s) {
        int32_t acc = w.rp.bias.empty() ? 0 : w.rp.bias[h * d.P + p];
        for (int64_t e = 0; e < d.E; ++e) {
          acc += static_cast<int32_t>(x.at(std::array<int64_t, 2>{s, e})) *
                 w.w.at(std::array<int64_t, 3>{h, p, e});
        }
        out.at(std::array<int64_t, 3>{h, p, s}) = requantize(acc, w.rp);
      }
    }
  }
  return out;
}

QuantTensor naive_gemm1_softmax(const QuantTensor& q, const QuantTensor& k,
                                const RequantParams& rp, const AttnDims& d) {
  d.validate();
  QuantTensor a = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
  const int in_exp = q.scale_exp + k.scale_exp;
  std::vector<int32_t> row(static_cast<size_t>(d.S));
  std::vector<int8_t> soft(static_cast<size_t>(d.S));
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s = 0; s < d.S; ++s) {
      for (int64_t t = 0; t < d.S; ++t) {
        int32_t acc = 0;
        for (int64_t p = 0; p < d.P; ++p) {
          acc += static_cast<int32_t>(q.at(std::array<int64_t, 3>{h, s, p})) *
                 k.at(std::array<int64_t, 3>{h, t, p});
        }
        row[t] = to_logit(shift_round(static_cast<int64_t>(acc) * rp.eps_mul, rp.eps_div));
      }
      int_softmax(row, in_exp, soft);
      for (int64_t t = 0; t < d.S; ++t) {
        a.at(std::array<int64_t, 3>{s, h, t}) = soft[static_cast<size_t>(t)];
      }
    }
  }
  return a;
}

QuantTensor naive_gemm2(const QuantTensor& a, const QuantTensor& v, const RequantParams& rp,
                        const AttnDims& d, int out_exp) {
  d.validate();
  QuantTensor m1 = alloc_tensor({d.S, d.H * d.P}, Layout::SE, out_exp);
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s = 0; s < d.S; ++s) {
      for (int64_t p = 0; p < d.P; ++p) {
        int32_t acc = 0;
        for (int64_t t = 0; t < d.S; ++t) {
          acc += static_cast<int32_t>(a.at(std::array<int64_t, 3>{s, h, t})) *
                 v.at(std::array<int64_t, 3>{h, p, t});
        }
        m1.at(std::array<int64_t, 2>{s, h * d.P + p}) = requantize(acc, rp);
      }
    }
  }
  return m1;
}

QuantTensor naive_linear_out(const QuantTensor& m1, const LinearWeights& w,
                             const AttnDims& d, int out_exp) {
  d.validate();
  const int64_t HP = d.H * d.P;
  QuantTensor out = alloc_tensor({d.S, d.E}, Layout::SE_out, out_exp);
  for (int64_t s = 0; s < d.S; ++s) {
    for (int64_t e = 0; e < d.E; ++e) {
      int32_t acc = w.rp.bias.empty() ? 0 : w.rp.bias[e];
      for (int64_t r = 0; r < HP; ++r) {
        acc += static_cast<int32_t>(m1.at(std::array<int64_t, 2>{s, r})) *
               w.w.at(std::array<int64_t, 3>{e, r / d.P, r % d.P});
      }
      out.at(std::array<int64_t, 2>{s, e}) = requantize(acc, w.rp);
    }
  }
  return out;
}

QuantTensor naive_fwsa(const QuantTensor& x, const FwsaWeights& w, const AttnDims& d) {
  d.validate();
  QuantTensor m2 = alloc_tensor({d.H, d.S, d.E}, Layout::HSP, w.m2_exp);
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s = 0; s < d.S; ++s) {
      for (int64_t f = 0; f < d.E; ++f) {
        int32_t acc = 0;
        for (int64_t e = 0; e < d.E; ++e) {
          acc += static_cast<int32_t>(x.at(std::array<int64_t, 2>{s, e})) *
                 w.w_star.at(std::array<int64_t, 3>{h, f, e});
        }
        m2.at(std::array<int64_t, 3>{h, s, f}) = requantize(acc, w.rp_m2);
      }
    }
  }
  QuantTensor a = alloc_tensor({d.S, d.H, d.S}, Layout::SHS, 7);
  const int in_exp = m2.scale_exp + x.scale_exp;
  std::vector<int32_t> row(static_cast<size_t>(d.S));
  std::vector<int8_t> soft(static_cast<size_t>(d.S));
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t s = 0; s < d.S; ++s) {
      for (int64_t u = 0; u < d.S; ++u) {
        int32_t acc = 0;
        for (int64_t f = 0; f < d.E; ++f) {
          acc += static_cast<int32_t>(m2.at(std::array<int64_t, 3>{h, s, f})) *
                 x.at(std::array<int64_t, 2>{u, f});
        }
        row[u] = to_logit(
            shift_round(static_cast<int64_t>(acc) * w.rp_logits.eps_mul, w.rp_logits.eps_div));
      }
      int_softmax(row, in_exp, soft);
      for (int64_t u = 0; u < d.S; ++u) {
        a.at(std::array<int64_t, 3>{s, h, u}) = soft[static_cast<size_t>(u)];
      }
    }
  }
  return a;
}

QuantTensor naive_int_kernel(NaiveKind kind, const NaiveInputs& in, const AttnDims& dims) {
  switch (kind) {
    case NaiveKind::IRL:
      return naive_linear_irl(*in.x, *in.w, dims, in.out_exp);
    case NaiveKind::WRL:
      return naive_linear_wrl(*in.x, *in.w, dims, in.out_exp);
    case NaiveKind::Gemm1Softmax:
      return naive_gemm1_softmax(*in.q, *in.k, *in.rp, dims);
    case NaiveKind::Gemm2:
      return naive_gemm2(*in.a, *in.v, *in.rp, dims, in.out_exp);
    case NaiveKind::Out:
      return naive_linear_out(*in.m1, *in.w, dims, in.out_exp);
    case NaiveKind::Fwsa:
      return naive_fwsa(*in.x, *in.fw, dims);
  }
  throw ValueError("unknown naive kernel kind");
}

}  // namespace tinyattn
