// Copyright 2026 The spice-pce Authors.
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

// Command-line front end over the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spice/spice.h"

namespace {

enum class KeyType { String, Path, Integer, Number, Boolean, List };

struct Key {
  const char* name;
  KeyType type;
  const char* help;
};

const std::vector<Key> kKeys = {
    {"case", KeyType::Path, "case file (MATPOWER .m or JSON)"},
    {"name", KeyType::String, "output file stem (default: command name)"},
    {"n_areas", KeyType::Integer, "number of load areas"},
    {"epsilon", KeyType::Number, "relative load fluctuation"},
    {"distribution", KeyType::String, "uniform | gaussian"},
    {"evaluation_distribution", KeyType::String, "distribution of evaluation draws (default: distribution)"},
    {"seed", KeyType::Integer, "sampling seed"},
    {"samples", KeyType::Integer, "number of draws"},
    {"c_off", KeyType::Number, "sparsity cutoff"},
    {"truncate_quartic", KeyType::Boolean, "drop degree-2 x degree-2 residual terms"},
    {"degree", KeyType::Integer, "PCE degree, 1 or 2"},
    {"monitor", KeyType::List, "comma list of voltage,flow,current,generator"},
    {"output_dir", KeyType::Path, "output directory"},
    {"threads", KeyType::Integer, "worker threads, 0 = all cores"},
    {"quantiles", KeyType::List, "comma list of quantile levels"},
    {"delta", KeyType::Number, "chance-constraint violation probability"},
    {"max_outer_iterations", KeyType::Integer, "CC-OPF iteration cap"},
    {"validation_samples", KeyType::Integer, "CC-OPF Monte-Carlo validation draws"},
    {"validation_seed", KeyType::Integer, "CC-OPF validation seed"},
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::json flag_value(const Key& key, const std::string& raw) {
  switch (key.type) {
    case KeyType::String:
    case KeyType::Path:
      return raw;
    case KeyType::Boolean:
      if (raw == "true" || raw == "1" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "off") return false;
      throw ConfigError(std::string("--") + key.name + " expects true or false");
    case KeyType::List: {
      nlohmann::json arr = nlohmann::json::array();
      for (const std::string& item : split_list(raw)) {
        if (std::string(key.name) == "quantiles") {
          try {
            arr.push_back(std::stod(item));
          } catch (const std::exception&) {
            throw ConfigError("--quantiles expects numbers");
          }
        } else {
          arr.push_back(item);
        }
      }
      return arr;
    }
    case KeyType::Integer:
    case KeyType::Number: {
      nlohmann::json v = nlohmann::json::parse(raw, nullptr, false);
      if (!v.is_number() || (key.type == KeyType::Integer && !v.is_number_integer()))
        throw ConfigError(std::string("--") + key.name + " expects a number, got '" + raw + "'");
      return v;
    }
  }
  return nullptr;
}

// Config file (paths relative to its directory) overlaid with flags.
std::string build_config(const std::string& config_path, const std::map<std::string, std::string>& flags) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
    cfg = nlohmann::json::parse(in, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) throw ConfigError("config file '" + config_path + "' is not a JSON object");
    const std::filesystem::path base = std::filesystem::path(config_path).parent_path();
    for (const Key& k : kKeys)
      if (k.type == KeyType::Path && cfg.contains(k.name) && cfg[k.name].is_string()) {
        const std::filesystem::path p = cfg[k.name].get<std::string>();
        if (p.is_relative()) cfg[k.name] = (base / p).lexically_normal().string();
      }
  }
  for (const Key& k : kKeys) {
    auto it = flags.find(k.name);
    if (it != flags.end()) cfg[k.name] = flag_value(k, it->second);
  }
  return cfg.dump();
}

int report_failure(spice_status s) {
  std::cerr << "error (" << spice_status_name(s) << "): " << spice_last_error() << '\n';
  return spice_exit_code(s);
}

int print_and_free(char* text) {
  if (text) {
    std::cout << text << '\n';
    spice_string_free(text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial chaos uncertainty quantification for AC power flow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spice_version());

  struct RunCommand {
    CLI::App* app = nullptr;
    std::string config;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, RunCommand> runs;
  const std::vector<std::pair<std::string, std::string>> run_commands = {
      {"spice", "sparse iterative degree-2 PCE: coefficients and UQ report"},
      {"pce-full", "square untruncated Galerkin PCE: coefficients and UQ report"},
      {"mc", "Monte-Carlo power flow baseline report"},
      {"ccopf", "iterative chance-constrained OPF certificate"},
      {"partition", "dump the load-area assignment"},
  };
  for (const auto& [name, help] : run_commands) {
    RunCommand& rc = runs[name];
    rc.app = app.add_subcommand(name, help);
    rc.app->add_option("--config,-c", rc.config, "JSON run config")->check(CLI::ExistingFile);
    for (const Key& k : kKeys) rc.app->add_option(std::string("--") + k.name, rc.values[k.name], k.help);
  }

  std::string report_a, report_b, compare_out;
  CLI::App* compare = app.add_subcommand("compare", "average and maximum TV distance between two reports");
  compare->add_option("report_a", report_a, "reference report")->required();
  compare->add_option("report_b", report_b, "report to compare")->required();
  compare->add_option("--output,-o", compare_out, "write the table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (compare->parsed()) {
    char* table = nullptr;
    const spice_status s =
        spice_compare_reports(report_a.c_str(), report_b.c_str(), compare_out.empty() ? nullptr : compare_out.c_str(),
                              &table);
    if (s != SPICE_OK) return report_failure(s);
    return print_and_free(table);
  }

  for (auto& [name, rc] : runs) {
    if (!rc.app->parsed()) continue;
    std::map<std::string, std::string> flags;
    for (const Key& k : kKeys)
      if (rc.app->count(std::string("--") + k.name) > 0) flags[k.name] = rc.values[k.name];
    std::string config;
    try {
      config = build_config(rc.config, flags);
    } catch (const ConfigError& e) {
      std::cerr << "error (config): " << e.what() << '\n';
      return 2;
    }
    char* summary = nullptr;
    const spice_status s = spice_run_command(name.c_str(), config.c_str(), &summary);
    print_and_free(summary);
    if (s != SPICE_OK) return report_failure(s);
    return 0;
  }
  return 2;
}
