// bdc: experiment driver. Values resolve as defaults < --config file < BDC_OUT_DIR (out
// only) < command-line flags.
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "bdc/config.hpp"
#include "bdc/error.hpp"
#include "bdc/experiments.hpp"

namespace {

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block difference-of-convex optimization toolkit"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  std::map<std::string, std::unique_ptr<Subcommand>> subs;
  for (const auto& name : bdc::command_names()) {
    auto sub = std::make_unique<Subcommand>();
    sub->app = app.add_subcommand(name);
    sub->app->add_option("--config", sub->config_file, "key=value configuration file");
    for (const auto& option : bdc::command_options(name)) {
      std::string help = option.help + " [default: " + (option.default_value.empty() ? "none" : option.default_value) + "]";
      if (option.flag) {
        sub->options[option.name] = sub->app->add_flag("--" + option.name, help);
      } else {
        sub->options[option.name] = sub->app->add_option("--" + option.name, sub->values[option.name], help);
      }
    }
    subs[name] = std::move(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::cerr << "FAIL reason=usage detail=\"" << e.what() << "\"\n";
      return 2;
    }
    return app.exit(e);
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->app->parsed()) continue;
    bdc::Config cfg;
    try {
      if (!sub->config_file.empty()) cfg = bdc::Config::load(sub->config_file);
    } catch (const bdc::UsageError& e) {
      std::cerr << "FAIL reason=usage detail=\"" << e.what() << "\"\n";
      return 2;
    }
    if (const char* env = std::getenv("BDC_OUT_DIR"); env != nullptr && *env != '\0') cfg.set("out", env);
    for (const auto& [key, opt] : sub->options) {
      if (opt->count() == 0) continue;
      const bool is_flag = sub->values.find(key) == sub->values.end();
      cfg.set(key, is_flag ? "true" : sub->values.at(key));
    }
    return bdc::run_command(name, cfg, std::cout, std::cerr);
  }
  return 2;
}
