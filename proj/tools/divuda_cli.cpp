// divuda: command-line front end for scenario generation, training, evaluation
// and sweeps. Exit codes: 0 success, 2 configuration error, 1 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "divuda/analysis.hpp"
#include "divuda/csv.hpp"
#include "divuda/errors.hpp"
#include "divuda/evaluate.hpp"
#include "divuda/experiment.hpp"

namespace fs = std::filesystem;
using namespace divuda;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::string model;
};

KeyValueConfig load_config(const Options& o) {
  KeyValueConfig cfg = o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
  if (!o.variant.empty()) cfg.set("experiment.variant", o.variant);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  return cfg;
}

// --out wins, then DIVUDA_OUT, then output.dir from the config.
fs::path output_dir(const Options& o, const KeyValueConfig& cfg) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("DIVUDA_OUT"); env != nullptr && *env != '\0') return env;
  return cfg.get_or("output.dir", "out");
}

std::uint64_t run_seed(const Options& o, const KeyValueConfig& cfg) {
  return o.seed ? *o.seed : cfg.get_size("seed", 0);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

int cmd_gen_data(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  ScenarioSpec spec = scenario_from_config(cfg);
  spec.seed = run_seed(o, cfg);
  const DomainPair data = generate_scenario(spec);
  const fs::path dir = output_dir(o, cfg);
  fs::create_directories(dir);
  write_csv_dataset(dir / "source.csv", data.source);
  write_csv_dataset(dir / "target.csv", data.target);
  std::cout << "wrote " << data.source.size() << " source and " << data.target.size()
            << " target samples to " << dir.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const KeyValueConfig cfg = load_config(o);
  const RunSettings settings = run_settings_from_config(cfg);
  const fs::path dir = output_dir(o, cfg);
  const RunResult result = run_point(settings, run_seed(o, cfg));
  write_run_artifacts(result, dir);
  std::cout << "target averaged accuracy " << result.target_report.averaged_accuracy << "\n";
  if (result.source_report)
    std::cout << "source averaged accuracy " << result.source_report->averaged_accuracy << "\n";
  std::cout << "artifacts in " << dir.string() << "\n";
  return 0;
}

struct LoadedRun {
  RunSettings settings;
  TwinModel model;
  DomainPair data;
  double delta;
};

LoadedRun load_for_eval(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const KeyValueConfig cfg = load_config(o);
  RunSettings settings = run_settings_from_config(cfg);
  TwinModel model = load_checkpoint(o.model);
  ScenarioSpec spec = settings.scenario;
  spec.seed = run_seed(o, cfg);
  DomainPair data = generate_scenario(spec);
  const std::size_t k = spec.classes.source_classes().size();
  if (model.arch().num_classes != k)
    throw ConfigError("checkpoint has " + std::to_string(model.arch().num_classes) +
                      " outputs, scenario has " + std::to_string(k) + " source classes");
  const double delta = *settings.train.hyper.resolved(k).delta;
  return {std::move(settings), std::move(model), std::move(data), delta};
}

int cmd_eval(const Options& o) {
  LoadedRun run = load_for_eval(o);
  const KeyValueConfig cfg = load_config(o);
  const fs::path dir = output_dir(o, cfg);
  fs::create_directories(dir);
  const auto& classes = run.settings.scenario.classes;
  const EvalReport target = evaluate_target(run.model, classes, run.data.target, run.delta);
  write_file(dir / "eval_target.json", eval_report_to_json(target));
  write_file(dir / "density.csv",
             density_to_csv(divergence_density(run.model, classes, run.data.target,
                                               run.settings.density_bins)));
  std::cout << "target averaged accuracy " << target.averaged_accuracy << "\n";
  if (run.settings.source_eval) {
    const EvalReport source =
        evaluate_source(run.model, classes, run.data.source, run.delta, run_seed(o, cfg));
    write_file(dir / "eval_source.json", eval_report_to_json(source));
    std::cout << "source averaged accuracy " << source.averaged_accuracy << "\n";
  }
  return 0;
}

int cmd_grid(const Options& o) {
  LoadedRun run = load_for_eval(o);
  const KeyValueConfig cfg = load_config(o);
  const fs::path dir = output_dir(o, cfg);
  fs::create_directories(dir);
  const auto rows =
      decision_grid(run.model, LabelSpace(run.settings.scenario.classes.source_classes()),
                    run.settings.grid_bounds, run.settings.grid_resolution, run.delta);
  write_file(dir / "grid.csv", grid_to_csv(rows));
  std::cout << "wrote " << rows.size() << " grid rows to " << (dir / "grid.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  KeyValueConfig cfg = load_config(o);
  if (o.seed) cfg.set("experiment.seeds", std::to_string(*o.seed));
  ExperimentConfig exp = ExperimentConfig::from_config(cfg);
  exp.out_dir = output_dir(o, cfg);
  const auto runs = run_experiment(exp);
  for (const auto& r : runs) {
    std::cout << r.dir << "  variant=" << r.variant << "  target_acc=" << r.target_accuracy
              << "  unknown_rate=" << r.unknown_rate << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-optimization training for noisy universal domain adaptation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Key-value configuration file");
    sub->add_option("--seed", o.seed, "Run seed (data, initialization, batches, dropout)");
    sub->add_option("--out", o.out, "Output directory (overrides DIVUDA_OUT and output.dir)");
    sub->add_option("--variant", o.variant, "Objective variant, e.g. full, source_only");
  };
  CLI::App* gen = app.add_subcommand("gen-data", "Generate source/target CSV datasets");
  CLI::App* tr = app.add_subcommand("train", "Train one model and evaluate it");
  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the scenario");
  CLI::App* gr = app.add_subcommand("grid", "Export the decision grid of a checkpoint");
  CLI::App* sw = app.add_subcommand("sweep", "Run every sweep point and seed of a config");
  for (CLI::App* sub : {gen, tr, ev, gr, sw}) add_common(sub);
  for (CLI::App* sub : {ev, gr}) sub->add_option("--model", o.model, "Checkpoint (model.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (gr->parsed()) return cmd_grid(o);
    if (sw->parsed()) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
