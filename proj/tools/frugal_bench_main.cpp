#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frugal/bench.hpp"
#include "frugal/error.hpp"
#include "frugal/plugin.hpp"

int main(int argc, char** argv) {
  CLI::App app{"frugal-bench: generalizability testing for causal regression models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed_override = -1;
  int workers = 0;
  std::string models_filter;

  auto* run = app.add_subcommand("run", "run an experiment configuration");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed_override, "master seed (overrides config)");
  run->add_option("--workers", workers, "worker threads (0 = auto)");
  run->add_option("--models", models_filter, "comma-separated model names to run");

  auto* validate = app.add_subcommand("validate", "validate a configuration and exit");
  validate->add_option("config", config_path, "experiment config JSON")->required();

  auto* plugin_test = app.add_subcommand("plugin-test", "exercise a plugin over the wire protocol");
  double plugin_timeout = 300.0;
  std::vector<std::string> plugin_cmd;
  plugin_test->add_option("--timeout", plugin_timeout, "per-message timeout in seconds");
  plugin_test->add_option("command", plugin_cmd, "plugin command line")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto cfg = frugal::load_config(config_path);
      std::printf("config OK: %zu model(s), %zu iteration(s), mode %s\n", cfg.models.size(),
                  cfg.iterations,
                  cfg.mode == frugal::ExperimentConfig::Mode::synthetic ? "synthetic"
                                                                        : "semi_synthetic");
      return 0;
    }
    if (run->parsed()) {
      auto cfg = frugal::load_config(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      if (workers > 0) cfg.workers = workers;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (!models_filter.empty()) {
        std::vector<frugal::ModelEntry> kept;
        std::string name;
        std::vector<std::string> wanted;
        for (char c : models_filter + ",") {
          if (c == ',') {
            if (!name.empty()) wanted.push_back(name);
            name.clear();
          } else {
            name += c;
          }
        }
        for (const auto& e : cfg.models) {
          for (const auto& w : wanted) {
            if (e.spec.name() == w) {
              kept.push_back(e);
              break;
            }
          }
        }
        if (kept.empty()) throw frugal::ConfigError("--models matched no configured model");
        cfg.models = std::move(kept);
      }
      const auto out = frugal::run_experiment(cfg);
      frugal::write_outputs(out, cfg.output_dir);
      std::fputs(out.summary_text.c_str(), stdout);
      std::printf("wrote %s/results.csv (%zu rows)\n", cfg.output_dir.c_str(),
                  out.table.rows.size());
      std::size_t errors = 0;
      for (const auto& r : out.table.rows) errors += r.error.empty() ? 0 : 1;
      return errors == out.table.rows.size() && !out.table.rows.empty() ? 1 : 0;
    }
    if (plugin_test->parsed()) {
      frugal::ModelSpec spec;
      spec.kind = frugal::ModelKind::plugin;
      spec.plugin_command = plugin_cmd;
      spec.plugin_timeout_s = plugin_timeout;
      const auto transcript = frugal::plugin_roundtrip(spec);
      std::fputs(frugal::transcript_text(transcript).c_str(), stdout);
      std::printf("plugin-test OK (%zu messages)\n", transcript.size());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
