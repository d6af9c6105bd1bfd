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
// Generates the bundled example containers: seeded random weights on the
// three reference attention shapes, plus a default platform file.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tinyattn/model.hpp"

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate example model containers"};
  std::string out_dir = "models";
  uint64_t seed = 1001;
  std::vector<int64_t> dims_opt;
  std::string name = "custom";
  int64_t f_width = 0;
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--dims", dims_opt, "custom shape S E P H (skips the bundled set)")
      ->expected(4);
  app.add_option("--name", name, "name for the custom model");
  app.add_option("--fc-width", f_width, "fully-connected stage width for the custom model");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    if (!dims_opt.empty()) {
      const tinyattn::AttnDims d{dims_opt[0], dims_opt[1], dims_opt[2], dims_opt[3]};
      tinyattn::ModelContainer m = tinyattn::make_seeded_model(d, f_width, seed);
      m.name = name;
      write_file(dir / (name + ".model"), tinyattn::serialize_model(m));
      std::cout << "wrote " << (dir / (name + ".model")).string() << "\n";
      return 0;
    }

    struct Shape {
      const char* name;
      tinyattn::AttnDims dims;
      int64_t f;
      uint64_t seed;
    };
    const Shape shapes[] = {
        {"eeg", {81, 32, 32, 8}, 128, seed},
        {"ecg", {66, 16, 2, 8}, 64, seed + 1},
        {"tr", {5, 32, 32, 8}, 128, seed + 2},
    };
    for (const Shape& s : shapes) {
      tinyattn::ModelContainer m = tinyattn::make_seeded_model(s.dims, s.f, s.seed);
      m.name = s.name;
      write_file(dir / (std::string(s.name) + ".model"), tinyattn::serialize_model(m));
      std::cout << "wrote " << (dir / (std::string(s.name) + ".model")).string() << "\n";
    }
    write_file(dir / "gap9.platform", tinyattn::serialize_platform(tinyattn::MemConfig{}));
    std::cout << "wrote " << (dir / "gap9.platform").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
