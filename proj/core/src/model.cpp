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

#include "tinyattn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <span>
#include <sstream>

#include "tinyattn/errors.hpp"
#include "tinyattn/fwsa.hpp"
#include "tinyattn/quant.hpp"

namespace tinyattn {

namespace {

constexpr char kModelMagic[] = "tinyattn-model v1";
constexpr char kPlatformMagic[] = "tinyattn-platform v1";

char hex_digit(int v) { return "0123456789abcdef"[v & 0xf]; }

int hex_value(char c, int line) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw ParseError(std::string("invalid hex digit '") + c + "'", line);
}

std::string to_hex(const uint8_t* data, size_t n) {
  std::string out;
  out.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(hex_digit(data[i] >> 4));
    out.push_back(hex_digit(data[i] & 0xf));
  }
  return out;
}

std::vector<uint8_t> from_hex(const std::string& s, int line) {
  if (s.size() % 2 != 0) throw ParseError("odd hex blob length", line);
  std::vector<uint8_t> out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>(hex_value(s[2 * i], line) << 4 |
                                  hex_value(s[2 * i + 1], line));
  }
  return out;
}

std::string i8_hex(const std::vector<int8_t>& v) {
  return to_hex(reinterpret_cast<const uint8_t*>(v.data()), v.size());
}

std::string i16_hex(const std::vector<int16_t>& v) {
  std::string out;
  out.reserve(4 * v.size());
  for (int16_t x : v) {
    const auto u = static_cast<uint16_t>(x);
    out.push_back(hex_digit(u & 0xf));
    out.push_back(hex_digit((u >> 4) & 0xf));
    out.push_back(hex_digit((u >> 8) & 0xf));
    out.push_back(hex_digit((u >> 12) & 0xf));
  }
  return out;
}

std::vector<int16_t> i16_from_hex(const std::string& s, int line) {
  if (s.size() % 4 != 0) throw ParseError("int16 blob length not a multiple of 4", line);
  std::vector<int16_t> out(s.size() / 4);
  for (size_t i = 0; i < out.size(); ++i) {
    uint16_t u = 0;
    for (int j = 3; j >= 0; --j) u = static_cast<uint16_t>(u << 4 | hex_value(s[4 * i + j], line));
    out[i] = static_cast<int16_t>(u);
  }
  return out;
}

std::string f32_hex(const std::vector<float>& v) {
  std::string out;
  out.reserve(8 * v.size());
  for (float x : v) {
    uint32_t u;
    std::memcpy(&u, &x, 4);
    for (int j = 0; j < 8; ++j) out.push_back(hex_digit((u >> (4 * j)) & 0xf));
  }
  return out;
}

std::vector<float> f32_from_hex(const std::string& s, int line) {
  if (s.size() % 8 != 0) throw ParseError("f32 blob length not a multiple of 8", line);
  std::vector<float> out(s.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    uint32_t u = 0;
    for (int j = 7; j >= 0; --j) u = u << 4 | static_cast<uint32_t>(hex_value(s[8 * i + j], line));
    std::memcpy(&out[i], &u, 4);
  }
  return out;
}

// "key=value" token helpers over space-separated fields.
struct FieldMap {
  std::map<std::string, std::string> kv;
  int line;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing field '" + key + "'", line);
    return it->second;
  }
  int64_t get_int(const std::string& key) const {
    try {
      return std::stoll(get(key));
    } catch (const std::logic_error&) {
      throw ParseError("field '" + key + "' is not an integer", line);
    }
  }
};

FieldMap parse_fields(std::istringstream& rest, int line) {
  FieldMap f;
  f.line = line;
  std::string tok;
  while (rest >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok + "'", line);
    f.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return f;
}

WeightSection* section_by_name(ModelContainer& m, const std::string& name, int line) {
  if (name == "wq") return &m.wq;
  if (name == "wk") return &m.wk;
  if (name == "wv") return &m.wv;
  if (name == "wout") return &m.wout;
  if (name == "wstar") return &m.wstar;
  throw ParseError("unknown weight section '" + name + "'", line);
}

std::vector<float>* float_by_name(ModelContainer& m, const std::string& name, int line) {
  if (name == "wq") return &m.fwq;
  if (name == "wk") return &m.fwk;
  if (name == "wv") return &m.fwv;
  if (name == "wout") return &m.fwout;
  throw ParseError("unknown float section '" + name + "'", line);
}

int64_t expected_weight_len(const ModelContainer& m, const std::string& name) {
  const AttnDims& d = m.dims;
  if (name == "wq" || name == "wk" || name == "wv") return d.H * d.E * d.P;
  if (name == "wout") return d.H * d.P * d.E;
  return d.H * d.E * d.E;  // wstar
}

int64_t expected_bias_len(const ModelContainer& m, const std::string& name) {
  if (name == "wout") return m.dims.E;
  return m.dims.H * m.dims.P;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("expected boolean, got '" + v + "'", line);
}

}  // namespace

void ModelContainer::validate() const {
  dims.validate();
  if (f_width < 0) throw ValueError("f_width must be nonnegative");
  auto need = [&](const WeightSection& w, const char* name, int64_t len, int64_t bias_len) {
    if (!w.present) throw ValueError(std::string("model is missing weight section ") + name);
    if (static_cast<int64_t>(w.data.size()) != len) {
      throw ValueError(std::string("weight ") + name + " blob length " +
                       std::to_string(w.data.size()) + " != expected " + std::to_string(len));
    }
    if (!w.bias.empty() && static_cast<int64_t>(w.bias.size()) != bias_len) {
      throw ValueError(std::string("bias ") + name + " length mismatch");
    }
    if (w.eps_div < 0 || w.eps_div >= 32) {
      throw ValueError(std::string("weight ") + name + " eps_div out of range");
    }
  };
  need(wv, "wv", dims.H * dims.E * dims.P, dims.H * dims.P);
  need(wout, "wout", dims.H * dims.P * dims.E, dims.E);
  if (flavor == AttnFlavor::MHSA) {
    need(wq, "wq", dims.H * dims.E * dims.P, dims.H * dims.P);
    need(wk, "wk", dims.H * dims.E * dims.P, dims.H * dims.P);
  } else {
    if (!wstar.present) {
      throw ValueError("fwsa-flavored model requires a wstar section");
    }
    need(wstar, "wstar", dims.H * dims.E * dims.E, 0);
  }
  auto check_float = [&](const std::vector<float>& f, const char* name, int64_t len) {
    if (!f.empty() && static_cast<int64_t>(f.size()) != len) {
      throw ValueError(std::string("float section ") + name + " length mismatch");
    }
  };
  check_float(fwq, "wq", dims.H * dims.E * dims.P);
  check_float(fwk, "wk", dims.H * dims.E * dims.P);
  check_float(fwv, "wv", dims.H * dims.E * dims.P);
  check_float(fwout, "wout", dims.H * dims.P * dims.E);
}

ModelContainer parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  ModelContainer m;
  bool magic_seen = false;
  bool dims_seen = false;

  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    if (!magic_seen) {
      if (line != kModelMagic) throw ParseError("expected header '" + std::string(kModelMagic) + "'", ln);
      magic_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "name") {
      ls >> m.name;
    } else if (key == "dims") {
      FieldMap f = parse_fields(ls, ln);
      m.dims = AttnDims{f.get_int("S"), f.get_int("E"), f.get_int("P"), f.get_int("H")};
      m.f_width = f.kv.contains("F") ? f.get_int("F") : 0;
      try {
        m.dims.validate();
      } catch (const ShapeError& e) {
        throw ParseError(e.what(), ln);
      }
      dims_seen = true;
    } else if (key == "flavor") {
      std::string v;
      ls >> v;
      if (v == "mhsa") m.flavor = AttnFlavor::MHSA;
      else if (v == "fwsa") m.flavor = AttnFlavor::FWSA;
      else throw ParseError("unknown flavor '" + v + "'", ln);
    } else if (key == "act") {
      FieldMap f = parse_fields(ls, ln);
      m.x_exp = static_cast<int>(f.get_int("x"));
      m.q_exp = static_cast<int>(f.get_int("q"));
      m.k_exp = static_cast<int>(f.get_int("k"));
      m.v_exp = static_cast<int>(f.get_int("v"));
      m.m1_exp = static_cast<int>(f.get_int("m1"));
      m.out_exp = static_cast<int>(f.get_int("out"));
      if (f.kv.contains("m2")) m.m2_exp = static_cast<int>(f.get_int("m2"));
    } else if (key == "requant") {
      std::string which;
      ls >> which;
      FieldMap f = parse_fields(ls, ln);
      if (which == "gemm1") {
        m.gemm1_mul = static_cast<uint16_t>(f.get_int("mul"));
        m.gemm1_div = static_cast<int>(f.get_int("div"));
      } else if (which == "gemm2") {
        m.gemm2_mul = static_cast<uint16_t>(f.get_int("mul"));
        m.gemm2_div = static_cast<int>(f.get_int("div"));
      } else {
        throw ParseError("unknown requant target '" + which + "'", ln);
      }
    } else if (key == "weight") {
      if (!dims_seen) throw ParseError("weight section before dims", ln);
      std::string which;
      ls >> which;
      FieldMap f = parse_fields(ls, ln);
      WeightSection* w = section_by_name(m, which, ln);
      const std::vector<uint8_t> raw = from_hex(f.get("hex"), ln);
      const int64_t expect = expected_weight_len(m, which);
      if (static_cast<int64_t>(raw.size()) != expect) {
        throw ParseError("weight " + which + " blob has " + std::to_string(raw.size()) +
                         " bytes, dims require " + std::to_string(expect), ln);
      }
      w->present = true;
      w->data.assign(raw.begin(), raw.end());
      w->scale_exp = static_cast<int>(f.get_int("exp"));
      w->eps_mul = static_cast<uint16_t>(f.get_int("mul"));
      w->eps_div = static_cast<int>(f.get_int("div"));
    } else if (key == "bias") {
      if (!dims_seen) throw ParseError("bias section before dims", ln);
      std::string which;
      ls >> which;
      FieldMap f = parse_fields(ls, ln);
      WeightSection* w = section_by_name(m, which, ln);
      w->bias = i16_from_hex(f.get("hex"), ln);
      const int64_t expect = expected_bias_len(m, which);
      if (static_cast<int64_t>(w->bias.size()) != expect) {
        throw ParseError("bias " + which + " has " + std::to_string(w->bias.size()) +
                         " entries, dims require " + std::to_string(expect), ln);
      }
    } else if (key == "float") {
      if (!dims_seen) throw ParseError("float section before dims", ln);
      std::string which;
      ls >> which;
      FieldMap f = parse_fields(ls, ln);
      std::vector<float>* dst = float_by_name(m, which, ln);
      *dst = f32_from_hex(f.get("hex"), ln);
      int64_t expect = expected_weight_len(m, which);
      if (static_cast<int64_t>(dst->size()) != expect) {
        throw ParseError("float " + which + " has " + std::to_string(dst->size()) +
                         " values, dims require " + std::to_string(expect), ln);
      }
    } else if (key == "end") {
      break;
    } else {
      throw ParseError("unknown key '" + key + "'", ln);
    }
  }
  if (!magic_seen) throw ParseError("empty model file", 1);
  if (!dims_seen) throw ParseError("model has no dims line", ln);
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ParseError(e.what(), ln);
  }
  return m;
}

std::string serialize_model(const ModelContainer& m) {
  m.validate();
  std::ostringstream os;
  os << kModelMagic << "\n";
  os << "name " << m.name << "\n";
  os << "dims S=" << m.dims.S << " E=" << m.dims.E << " P=" << m.dims.P << " H=" << m.dims.H;
  if (m.f_width > 0) os << " F=" << m.f_width;
  os << "\n";
  os << "flavor " << (m.flavor == AttnFlavor::MHSA ? "mhsa" : "fwsa") << "\n";
  os << "act x=" << m.x_exp << " q=" << m.q_exp << " k=" << m.k_exp << " v=" << m.v_exp
     << " m1=" << m.m1_exp << " out=" << m.out_exp << " m2=" << m.m2_exp << "\n";
  os << "requant gemm1 mul=" << m.gemm1_mul << " div=" << m.gemm1_div << "\n";
  os << "requant gemm2 mul=" << m.gemm2_mul << " div=" << m.gemm2_div << "\n";
  auto emit = [&](const WeightSection& w, const char* name) {
    if (!w.present) return;
    os << "weight " << name << " exp=" << w.scale_exp << " mul=" << w.eps_mul
       << " div=" << w.eps_div << " hex=" << i8_hex(w.data) << "\n";
    if (!w.bias.empty()) os << "bias " << name << " hex=" << i16_hex(w.bias) << "\n";
  };
  emit(m.wq, "wq");
  emit(m.wk, "wk");
  emit(m.wv, "wv");
  emit(m.wout, "wout");
  emit(m.wstar, "wstar");
  auto emitf = [&](const std::vector<float>& f, const char* name) {
    if (f.empty()) return;
    os << "float " << name << " hex=" << f32_hex(f) << "\n";
  };
  emitf(m.fwq, "wq");
  emitf(m.fwk, "wk");
  emitf(m.fwv, "wv");
  emitf(m.fwout, "wout");
  os << "end\n";
  return os.str();
}

MemConfig parse_platform(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  MemConfig cfg;
  bool magic_seen = false;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    if (!magic_seen) {
      if (line != kPlatformMagic) {
        throw ParseError("expected header '" + std::string(kPlatformMagic) + "'", ln);
      }
      magic_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (value.empty()) throw ParseError("missing value for '" + key + "'", ln);
    try {
      if (key == "l1_bytes") cfg.l1_bytes = std::stoll(value);
      else if (key == "l2_bytes") cfg.l2_bytes = std::stoll(value);
      else if (key == "cores") cfg.cores = std::stoi(value);
      else if (key == "simd_width") cfg.simd_width = std::stoi(value);
      else if (key == "weights_resident") cfg.weights_resident = parse_bool(value, ln);
      else if (key == "residual_live") cfg.residual_live = parse_bool(value, ln);
      else if (key == "count_biases") cfg.count_biases = parse_bool(value, ln);
      else throw ParseError("unknown key '" + key + "'", ln);
    } catch (const std::logic_error&) {
      throw ParseError("invalid value '" + value + "' for '" + key + "'", ln);
    }
  }
  if (!magic_seen) throw ParseError("empty platform file", 1);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ParseError(e.what(), ln);
  }
  return cfg;
}

std::string serialize_platform(const MemConfig& cfg) {
  std::ostringstream os;
  os << kPlatformMagic << "\n";
  os << "l1_bytes " << cfg.l1_bytes << "\n";
  os << "l2_bytes " << cfg.l2_bytes << "\n";
  os << "cores " << cfg.cores << "\n";
  os << "simd_width " << cfg.simd_width << "\n";
  os << "weights_resident " << (cfg.weights_resident ? "true" : "false") << "\n";
  os << "residual_live " << (cfg.residual_live ? "true" : "false") << "\n";
  os << "count_biases " << (cfg.count_biases ? "true" : "false") << "\n";
  return os.str();
}

AttnBlock to_block(const ModelContainer& m) {
  m.validate();
  const AttnDims& d = m.dims;
  AttnBlock b;
  b.dims = d;
  b.flavor = m.flavor;
  b.x_exp = m.x_exp;
  b.q_exp = m.q_exp;
  b.k_exp = m.k_exp;
  b.v_exp = m.v_exp;
  b.m1_exp = m.m1_exp;
  b.out_exp = m.out_exp;

  auto pack = [](const WeightSection& w, std::vector<int64_t> shape, Layout layout) {
    LinearWeights lw;
    lw.w = alloc_tensor(std::move(shape), layout, w.scale_exp);
    lw.w.data = w.data;
    lw.rp.eps_mul = w.eps_mul;
    lw.rp.eps_div = w.eps_div;
    lw.rp.bias = w.bias;
    return lw;
  };
  b.wv = pack(m.wv, {d.H, d.P, d.E}, Layout::HPE);
  b.wout = pack(m.wout, {d.E, d.H, d.P}, Layout::EHP);
  if (m.flavor == AttnFlavor::MHSA) {
    b.wq = pack(m.wq, {d.H, d.P, d.E}, Layout::HPE);
    b.wk = pack(m.wk, {d.H, d.P, d.E}, Layout::HPE);
  } else {
    b.fwsa.w_star = alloc_tensor({d.H, d.E, d.E}, Layout::HPE, m.wstar.scale_exp);
    b.fwsa.w_star.data = m.wstar.data;
    b.fwsa.rp_m2.eps_mul = m.wstar.eps_mul;
    b.fwsa.rp_m2.eps_div = m.wstar.eps_div;
    b.fwsa.rp_logits.eps_mul = m.gemm1_mul;
    b.fwsa.rp_logits.eps_div = m.gemm1_div;
    b.fwsa.m2_exp = m.m2_exp;
  }
  b.rp_gemm1.eps_mul = m.gemm1_mul;
  b.rp_gemm1.eps_div = m.gemm1_div;
  b.rp_gemm2.eps_mul = m.gemm2_mul;
  b.rp_gemm2.eps_div = m.gemm2_div;
  return b;
}

namespace {

// Deterministic uniform doubles in [0,1) from raw mt19937_64 words; the
// standard distributions are implementation-defined, so avoid them.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double symmetric(double range) { return (uniform() * 2.0 - 1.0) * range; }

 private:
  std::mt19937_64 gen_;
};

std::vector<float> random_weights(SeededRng& rng, int64_t n, double range) {
  std::vector<float> w(static_cast<size_t>(n));
  for (auto& v : w) v = static_cast<float>(rng.symmetric(range));
  return w;
}

// Quantize a logical (H,E,P) float weight into the packed (H,P,E) kernel
// order; returns the chosen exponent.
int quantize_projection(const std::vector<float>& f, const AttnDims& d,
                        std::vector<int8_t>* out) {
  const CalibrationStats cal = calibrate(std::span<const float>(f));
  out->assign(f.size(), 0);
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t e = 0; e < d.E; ++e) {
      for (int64_t p = 0; p < d.P; ++p) {
        (*out)[(h * d.P + p) * d.E + e] =
            quantize_float(f[(h * d.E + e) * d.P + p], cal.chosen_exp);
      }
    }
  }
  return cal.chosen_exp;
}

int quantize_out_proj(const std::vector<float>& f, const AttnDims& d,
                      std::vector<int8_t>* out) {
  const CalibrationStats cal = calibrate(std::span<const float>(f));
  const int64_t hp = d.H * d.P;
  out->assign(f.size(), 0);
  for (int64_t r = 0; r < hp; ++r) {
    for (int64_t e = 0; e < d.E; ++e) {
      (*out)[e * hp + r] = quantize_float(f[r * d.E + e], cal.chosen_exp);
    }
  }
  return cal.chosen_exp;
}

std::vector<int16_t> quantize_bias(const std::vector<double>& bias, int acc_exp) {
  std::vector<int16_t> out(bias.size());
  for (size_t i = 0; i < bias.size(); ++i) {
    const double scaled = std::nearbyint(bias[i] * std::exp2(acc_exp));
    out[i] = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
  }
  return out;
}

}  // namespace

ModelContainer make_seeded_model(const AttnDims& dims, int64_t f_width, uint64_t seed,
                                 AttnFlavor flavor, bool with_float) {
  dims.validate();
  SeededRng rng(seed);
  ModelContainer m;
  m.dims = dims;
  m.f_width = f_width;
  m.flavor = AttnFlavor::MHSA;  // built classical first, fused below if asked
  m.x_exp = 7;
  m.q_exp = m.k_exp = m.v_exp = m.m1_exp = m.out_exp = m.m2_exp = 7;

  const double proj_range = 1.0 / std::sqrt(static_cast<double>(dims.E));
  const double out_range = 1.0 / std::sqrt(static_cast<double>(dims.H * dims.P));

  m.fwq = random_weights(rng, dims.H * dims.E * dims.P, proj_range);
  m.fwk = random_weights(rng, dims.H * dims.E * dims.P, proj_range);
  m.fwv = random_weights(rng, dims.H * dims.E * dims.P, proj_range);
  m.fwout = random_weights(rng, dims.H * dims.P * dims.E, out_range);

  auto fill_proj = [&](WeightSection& w, const std::vector<float>& f, int out_exp) {
    w.present = true;
    w.scale_exp = quantize_projection(f, dims, &w.data);
    const RequantParams rp = derive_requant(m.x_exp, w.scale_exp, out_exp);
    w.eps_mul = rp.eps_mul;
    w.eps_div = rp.eps_div;
    std::vector<double> bias(static_cast<size_t>(dims.H * dims.P));
    for (auto& v : bias) v = rng.symmetric(0.05);
    w.bias = quantize_bias(bias, m.x_exp + w.scale_exp);
  };
  fill_proj(m.wq, m.fwq, m.q_exp);
  fill_proj(m.wk, m.fwk, m.k_exp);
  fill_proj(m.wv, m.fwv, m.v_exp);

  m.wout.present = true;
  m.wout.scale_exp = quantize_out_proj(m.fwout, dims, &m.wout.data);
  {
    const RequantParams rp = derive_requant(m.m1_exp, m.wout.scale_exp, m.out_exp);
    m.wout.eps_mul = rp.eps_mul;
    m.wout.eps_div = rp.eps_div;
    std::vector<double> bias(static_cast<size_t>(dims.E));
    for (auto& v : bias) v = rng.symmetric(0.05);
    m.wout.bias = quantize_bias(bias, m.m1_exp + m.wout.scale_exp);
  }

  m.gemm1_mul = 1;
  m.gemm1_div = sqrt_d_shift(dims.P);
  {
    const RequantParams rp = derive_requant(7, m.v_exp, m.m1_exp);
    m.gemm2_mul = rp.eps_mul;
    m.gemm2_div = rp.eps_div;
  }

  if (flavor == AttnFlavor::FWSA) {
    m = fuse_container(m);
  }
  if (!with_float) {
    m.fwq.clear();
    m.fwk.clear();
    m.fwv.clear();
    m.fwout.clear();
  }
  return m;
}

ModelContainer fuse_container(const ModelContainer& m) {
  m.validate();
  if (m.fwq.empty() || m.fwk.empty()) {
    throw ValueError("offline fusion needs the float wq and wk sections");
  }
  const AttnDims& d = m.dims;
  std::vector<double> wq(m.fwq.begin(), m.fwq.end());
  std::vector<double> wk(m.fwk.begin(), m.fwk.end());
  const std::vector<double> fused = fuse_weights(wq, wk, d);

  ModelContainer out = m;
  out.name = m.name + "-fwsa";
  out.flavor = AttnFlavor::FWSA;
  out.wq = WeightSection{};
  out.wk = WeightSection{};

  const CalibrationStats cal = calibrate(std::span<const double>(fused));
  out.wstar.present = true;
  out.wstar.scale_exp = cal.chosen_exp;
  out.wstar.data.assign(fused.size(), 0);
  // Packed (H, E', E): reduction axis contiguous.
  for (int64_t h = 0; h < d.H; ++h) {
    for (int64_t e = 0; e < d.E; ++e) {
      for (int64_t f = 0; f < d.E; ++f) {
        out.wstar.data[(h * d.E + f) * d.E + e] =
            quantize_float(fused[(h * d.E + e) * d.E + f], cal.chosen_exp);
      }
    }
  }
  const RequantParams rp = derive_requant(m.x_exp, cal.chosen_exp, m.m2_exp);
  out.wstar.eps_mul = rp.eps_mul;
  out.wstar.eps_div = rp.eps_div;
  out.wstar.bias.clear();  // K-side bias cannot fold through X^T; dropped
  return out;
}

QuantTensor make_seeded_input(const AttnDims& dims, int x_exp, uint64_t seed) {
  SeededRng rng(seed ^ 0x9e3779b97f4a7c15ull);
  QuantTensor x = alloc_tensor({dims.S, dims.E}, Layout::SE, x_exp);
  for (auto& v : x.data) v = quantize_float(rng.symmetric(0.95), x_exp);
  return x;
}

}  // namespace tinyattn
