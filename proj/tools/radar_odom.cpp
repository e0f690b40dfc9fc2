// Copyright 2026 The radar_odom Authors
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

// radar_odom run | eval | synth | planarity
//
// Every setting key doubles as a flag (--icp.max_iterations 30). Precedence,
// lowest first: built-in defaults, --config file, --set key=value, flags.

#include "radar_odom/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <memory>

namespace {

using radar_odom::Settings;

struct Subcommand {
  CLI::App *app = nullptr;
  Settings settings;
  std::string config;
  std::vector<std::string> overrides;
  std::map<std::string, std::pair<CLI::Option *, std::string>> flags;
  int (*run)(const Settings &, std::ostream &, std::ostream &) = nullptr;

  // Resolves the layered settings; throws InputError on bad keys.
  Settings resolve() const {
    Settings s = settings;
    if (!config.empty()) s.merge_file(config);
    for (const auto &o : overrides) s.assign(o, "--set");
    for (const auto &[key, flag] : flags)
      if (flag.first->count() > 0) s.set(key, flag.second);
    return s;
  }
};

std::unique_ptr<Subcommand> add(CLI::App &root, const std::string &name, const std::string &help, Settings defaults,
                                int (*run)(const Settings &, std::ostream &, std::ostream &)) {
  auto sub = std::make_unique<Subcommand>();
  sub->app = root.add_subcommand(name, help);
  sub->settings = std::move(defaults);
  sub->run = run;
  sub->app->add_option("--config", sub->config, "key=value config file (a manifest.txt works)");
  sub->app->add_option("--set", sub->overrides, "override one setting, key=value (repeatable)");
  for (const auto &[key, value] : sub->settings.values()) {
    auto &slot = sub->flags[key];
    slot.first = sub->app->add_option("--" + key, slot.second, value.empty() ? "(required)" : "default: " + value);
  }
  return sub;
}

}  // namespace

int main(int argc, char **argv) {
  using namespace radar_odom;
  CLI::App app{"Spinning-radar odometry with optional IMU preintegration"};
  app.set_version_flag("--version", std::string("radar_odom ") + kVersion);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Subcommand>> subs;
  subs.push_back(add(app, "run", "run the odometry over a scan directory", run_defaults(), cmd_run));
  subs.push_back(add(app, "eval", "score an estimated trajectory against ground truth", eval_defaults(), cmd_eval));
  subs.push_back(add(app, "synth", "render a built-in synthetic scenario", synth_defaults(), cmd_synth));
  subs.push_back(add(app, "planarity", "SE(2) overlap of a trajectory's relative motions", planarity_defaults(),
                     cmd_planarity));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  for (const auto &sub : subs) {
    if (!sub->app->parsed()) continue;
    Settings s;
    try {
      s = sub->resolve();
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInput;
    }
    return sub->run(s, std::cout, std::cerr);
  }
  return kExitInput;
}
