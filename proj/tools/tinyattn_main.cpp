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

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tinyattn/commands.hpp"
#include "tinyattn/errors.hpp"
#include "tinyattn/model.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tinyattn::ValueError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tinyattn::ValueError("cannot write file: " + path);
  out << text;
}

// "weights_resident=true,residual_live=false,count_biases=true"
void apply_policy(tinyattn::MemConfig& cfg, const std::string& policy) {
  std::istringstream ss(policy);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw tinyattn::ValueError("policy entries must be key=bool, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    bool flag;
    if (value == "true" || value == "1") flag = true;
    else if (value == "false" || value == "0") flag = false;
    else throw tinyattn::ValueError("policy value must be boolean, got '" + value + "'");
    if (key == "weights_resident") cfg.weights_resident = flag;
    else if (key == "residual_live") cfg.residual_live = flag;
    else if (key == "count_biases") cfg.count_biases = flag;
    else throw tinyattn::ValueError("unknown policy key '" + key + "'");
  }
}

void emit_report(const std::string& report, const std::string& report_path) {
  std::cout << report;
  if (!report_path.empty()) write_file(report_path, report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinyattn: int8 tiny-transformer attention engine"};
  app.require_subcommand(1);

  std::string model_path, platform_path, report_path, policy, out_path;
  tinyattn::CommandOptions opt;

  auto add_common = [&](CLI::App* cmd, bool with_platform) {
    cmd->add_option("--model", model_path, "model container path")->required();
    if (with_platform) {
      cmd->add_option("--platform", platform_path, "platform config path");
      cmd->add_option("--policy", policy,
                      "override policy flags, e.g. weights_resident=true,residual_live=false");
    }
    cmd->add_option("--workers", opt.workers, "worker count for parallel runs");
    cmd->add_option("--seed", opt.seed, "seed for generated inputs");
    cmd->add_option("--report", report_path, "also write the report to this path");
  };

  CLI::App* verify = app.add_subcommand("verify", "run the oracle-equivalence suite");
  add_common(verify, true);

  CLI::App* plan = app.add_subcommand("plan", "emit the tiling schedule and memory timeline");
  add_common(plan, true);
  plan->add_option("--mode", opt.mode, "lwt | dft | auto")->default_val("auto");

  CLI::App* fuse = app.add_subcommand("fuse", "fuse Q/K weights offline into W*");
  add_common(fuse, false);
  fuse->add_option("--out", out_path, "path for the fused model container");

  CLI::App* bench = app.add_subcommand("bench", "compare {mhsa,fwsa} x {lwt,dft}");
  add_common(bench, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const tinyattn::ModelContainer model = tinyattn::parse_model(read_file(model_path));
    tinyattn::MemConfig cfg;
    if (!platform_path.empty()) cfg = tinyattn::parse_platform(read_file(platform_path));
    if (!policy.empty()) apply_policy(cfg, policy);

    tinyattn::CommandResult result;
    if (verify->parsed()) {
      result = tinyattn::cmd_verify(model, cfg, opt);
    } else if (plan->parsed()) {
      result = tinyattn::cmd_plan(model, cfg, opt);
    } else if (fuse->parsed()) {
      tinyattn::FuseOutput fo = tinyattn::cmd_fuse(model, opt);
      const std::string path = out_path.empty() ? model_path + ".fwsa" : out_path;
      write_file(path, tinyattn::serialize_model(fo.fused));
      fo.result.report += "fuse.written = " + path + "\n";
      result = fo.result;
    } else {
      result = tinyattn::cmd_bench(model, cfg, opt);
    }
    emit_report(result.report, report_path);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
