#include "divuda/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "divuda/csv.hpp"
#include "divuda/errors.hpp"

namespace divuda {

namespace fs = std::filesystem;

const std::vector<std::string>& recognized_keys() {
  static const std::vector<std::string> keys = {
      "classes.common", "classes.source_private", "classes.target_private",
      "classes.target_private_count", "noise.kind", "noise.rate", "blobs.centers", "blobs.std",
      "samples_per_class", "seed", "data.source_csv", "data.target_csv", "train.lambda",
      "train.alpha", "train.delta", "train.margin", "train.n_repeat", "train.batch_size",
      "train.lr", "train.momentum", "train.weight_decay", "train.iterations", "train.eval_every",
      "model.hidden", "model.mode", "model.dropout_rate", "experiment.variant",
      "experiment.seeds", "experiment.source_eval", "experiment.grid", "grid.resolution",
      "grid.bounds", "density.bins", "output.dir",
  };
  return keys;
}

namespace {

bool is_recognized(const std::string& key) {
  const auto& keys = recognized_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::kNone;
  if (s == "pair") return NoiseKind::kPair;
  if (s == "symmetric") return NoiseKind::kSymmetric;
  throw ConfigError("noise.kind must be none, pair or symmetric, got '" + s + "'");
}

// "0: -2 2; 1: 2 2" -> {0: [-2, 2], 1: [2, 2]}
std::map<ClassId, std::vector<double>> parse_centers(const std::string& text) {
  std::map<ClassId, std::vector<double>> out;
  std::istringstream entries(text);
  std::string entry;
  while (std::getline(entries, entry, ';')) {
    if (entry.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = entry.find(':');
    if (colon == std::string::npos)
      throw ConfigError("blobs.centers: expected 'class: x y ...', got '" + entry + "'");
    ClassId c = 0;
    std::vector<double> coords;
    try {
      c = std::stoi(entry.substr(0, colon));
      std::istringstream nums(entry.substr(colon + 1));
      std::string tok;
      while (nums >> tok) coords.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("blobs.centers: cannot parse '" + entry + "'");
    }
    if (coords.empty()) throw ConfigError("blobs.centers: class " + std::to_string(c) + " has no coordinates");
    if (!out.emplace(c, std::move(coords)).second)
      throw ConfigError("blobs.centers: class " + std::to_string(c) + " given twice");
  }
  return out;
}

std::string variant_dir_label(const KeyValueConfig& cfg) { return cfg.get_or("experiment.variant", "full"); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

ScenarioSpec scenario_from_config(const KeyValueConfig& cfg) {
  ScenarioSpec spec = toy_scenario();
  if (cfg.has("classes.common")) spec.classes.common = cfg.get_int_list("classes.common");
  if (cfg.has("classes.source_private"))
    spec.classes.source_private = cfg.get_int_list("classes.source_private");
  if (cfg.has("classes.target_private"))
    spec.classes.target_private = cfg.get_int_list("classes.target_private");
  if (cfg.has("classes.target_private_count")) {
    std::set<ClassId> pool(spec.classes.source_private.begin(), spec.classes.source_private.end());
    pool.insert(spec.classes.target_private.begin(), spec.classes.target_private.end());
    const std::size_t k = cfg.get_size("classes.target_private_count", 0);
    if (k > pool.size())
      throw ConfigError("classes.target_private_count exceeds the " + std::to_string(pool.size()) +
                        " non-common classes");
    const std::vector<ClassId> sorted(pool.begin(), pool.end());
    spec.classes.source_private.assign(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(k));
    spec.classes.target_private.assign(sorted.end() - static_cast<std::ptrdiff_t>(k), sorted.end());
  }
  if (cfg.has("noise.kind")) spec.noise.kind = parse_noise_kind(cfg.get("noise.kind"));
  spec.noise.rate = cfg.get_double("noise.rate", spec.noise.rate);
  if (spec.noise.kind == NoiseKind::kNone) spec.noise.rate = 0.0;
  if (cfg.has("blobs.centers")) {
    spec.centers = parse_centers(cfg.get("blobs.centers"));
    spec.feature_dim = spec.centers.begin()->second.size();
  }
  spec.blob_std = cfg.get_double("blobs.std", spec.blob_std);
  spec.samples_per_class = cfg.get_size("samples_per_class", spec.samples_per_class);
  spec.seed = cfg.get_size("seed", spec.seed);
  spec.validate();
  return spec;
}

RunSettings run_settings_from_config(const KeyValueConfig& cfg) {
  for (const auto& [key, value] : cfg.entries()) {
    if (!is_recognized(key) && key.rfind("sweep.", 0) != 0)
      throw ConfigError("unrecognized key '" + key + "'");
  }
  RunSettings s;
  s.scenario = scenario_from_config(cfg);
  if (cfg.has("data.source_csv")) s.source_csv = cfg.get("data.source_csv");
  if (cfg.has("data.target_csv")) s.target_csv = cfg.get("data.target_csv");
  if (s.source_csv.has_value() != s.target_csv.has_value())
    throw ConfigError("data.source_csv and data.target_csv must be given together");

  Hyperparams& h = s.train.hyper;
  h.lambda = cfg.get_double("train.lambda", h.lambda);
  // Discard fraction defaults to the configured noise rate when the noise is known.
  const bool noise_known = !s.source_csv && s.scenario.noise.kind != NoiseKind::kNone;
  h.alpha = cfg.get_double("train.alpha", noise_known ? s.scenario.noise.rate : 0.2);
  h.delta = cfg.get_optional_double("train.delta");
  h.margin = cfg.get_double("train.margin", h.margin);
  h.n_repeat = cfg.get_size("train.n_repeat", h.n_repeat);
  h.batch_size = cfg.get_size("train.batch_size", h.batch_size);
  h.sgd.lr = cfg.get_double("train.lr", h.sgd.lr);
  h.sgd.momentum = cfg.get_double("train.momentum", h.sgd.momentum);
  h.sgd.weight_decay = cfg.get_double("train.weight_decay", h.sgd.weight_decay);
  try {
    h.resolved(s.scenario.classes.source_classes().size());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  s.train.iterations = cfg.get_size("train.iterations", s.train.iterations);
  s.train.eval_every = cfg.get_size("train.eval_every", 500);

  s.train.hidden = cfg.get_size("model.hidden", s.train.hidden);
  const std::string mode = cfg.get_or("model.mode", "twin");
  if (mode != "twin" && mode != "dropout")
    throw ConfigError("model.mode must be twin or dropout, got '" + mode + "'");
  s.train.mode = mode == "twin" ? HeadMode::kTwin : HeadMode::kDropout;
  s.train.dropout_rate = cfg.get_double("model.dropout_rate", s.train.dropout_rate);
  if (!(s.train.dropout_rate >= 0.0 && s.train.dropout_rate < 1.0))
    throw ConfigError("model.dropout_rate must lie in [0, 1)");
  if (s.train.hidden == 0) throw ConfigError("model.hidden must be positive");

  try {
    s.train.variant = parse_variant(cfg.get_or("experiment.variant", "full"));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  s.source_eval = cfg.get_bool("experiment.source_eval", false);
  s.grid = cfg.get_bool("experiment.grid", false);
  s.grid_resolution = cfg.get_size("grid.resolution", s.grid_resolution);
  if (cfg.has("grid.bounds")) {
    const auto b = cfg.get_double_list("grid.bounds");
    if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3]))
      throw ConfigError("grid.bounds must be x_min, x_max, y_min, y_max");
    s.grid_bounds = {b[0], b[1], b[2], b[3]};
  }
  if (s.grid && s.grid_resolution < 2) throw ConfigError("grid.resolution must be at least 2");
  s.density_bins = cfg.get_size("density.bins", s.density_bins);
  if (s.density_bins == 0) throw ConfigError("density.bins must be positive");
  return s;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& cfg) {
  ExperimentConfig e;
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("sweep.", 0) == 0) {
      const std::string target = key.substr(6);
      if (!is_recognized(target) || target == "experiment.seeds" || target == "output.dir")
        throw ConfigError("sweep axis '" + target + "' is not a sweepable key");
      SweepAxis axis{target, split_list(value)};
      if (axis.values.empty()) throw ConfigError("sweep axis '" + target + "' has no values");
      e.axes.push_back(std::move(axis));
    } else {
      e.base.set(key, value);
    }
  }
  if (cfg.has("experiment.seeds")) {
    for (const auto& s : cfg.get_list("experiment.seeds")) {
      try {
        e.seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw ConfigError("experiment.seeds: bad seed '" + s + "'");
      }
    }
  } else {
    e.seeds.push_back(cfg.get_size("seed", 0));
  }
  if (e.seeds.empty()) throw ConfigError("experiment.seeds is empty");
  e.out_dir = cfg.get_or("output.dir", "out");
  // Validate every point up front so that no run starts from a broken config.
  for (const auto& point : e.points()) run_settings_from_config(point);
  return e;
}

std::vector<KeyValueConfig> ExperimentConfig::points() const {
  std::vector<KeyValueConfig> out{base};
  for (const auto& axis : axes) {
    std::vector<KeyValueConfig> next;
    for (const auto& cfg : out) {
      for (const auto& v : axis.values) {
        KeyValueConfig c = cfg;
        c.set(axis.key, v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

RunResult run_point(const RunSettings& settings, std::uint64_t seed) {
  ScenarioSpec scenario = settings.scenario;
  scenario.seed = seed;
  DomainPair data;
  if (settings.source_csv) {
    std::vector<ClassId> allowed = scenario.classes.source_classes();
    for (ClassId c : scenario.classes.target_private) allowed.push_back(c);
    const CsvSchema schema{std::nullopt, allowed};
    data.source = load_csv_dataset(*settings.source_csv, schema);
    data.target = load_csv_dataset(*settings.target_csv, schema);
    const LabelSpace labels(scenario.classes.source_classes());
    for (const auto& s : data.source.samples) {
      if (!s.observed_label) throw DataError("source CSV row without a label");
      labels.index_of(*s.observed_label);
    }
  } else {
    data = generate_scenario(scenario);
  }

  Dataset source_test;
  if (settings.source_eval) {
    SourceSplit split = split_source(data.source, seed);
    data.source = std::move(split.train);
    source_test = std::move(split.test);
  }

  TrainConfig tc = settings.train;
  tc.seed = seed;
  const double delta = *tc.hyper.resolved(scenario.classes.source_classes().size()).delta;
  const ClassPartition& classes = scenario.classes;
  const Dataset& target = data.target;
  EvalHook hook = [&](TwinModel& model, StepTrace& row) {
    const EvalReport r = evaluate_target(model, classes, target, delta);
    row.eval_target_accuracy = r.averaged_accuracy;
    if (auto it = r.per_class_accuracy.find(kUnknown); it != r.per_class_accuracy.end())
      row.eval_unknown_rate = it->second;
  };
  TrainResult trained = train(data, classes, tc, hook);

  RunResult out{std::move(trained.model), std::move(trained.log), {}, std::nullopt, {}, {}, delta};
  out.target_report = evaluate_target(out.model, classes, data.target, delta);
  if (settings.source_eval)
    out.source_report = evaluate_source_test(out.model, classes, source_test, delta);
  out.density = divergence_density(out.model, classes, data.target, settings.density_bins);
  if (settings.grid)
    out.grid = decision_grid(out.model, LabelSpace(classes.source_classes()), settings.grid_bounds,
                             settings.grid_resolution, delta);
  return out;
}

void write_run_artifacts(const RunResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "model.json", save_checkpoint_json(result.model) + "\n");
  write_text(dir / "trainlog.csv", result.log.to_csv());
  write_text(dir / "eval_target.json", eval_report_to_json(result.target_report));
  if (result.source_report)
    write_text(dir / "eval_source.json", eval_report_to_json(*result.source_report));
  write_text(dir / "density.csv", density_to_csv(result.density));
  if (!result.grid.empty()) write_text(dir / "grid.csv", grid_to_csv(result.grid));
}

namespace {

struct RunJob {
  std::size_t point;
  std::uint64_t seed;
  fs::path dir;
  std::string rel_dir;
};

std::string point_dir(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "point_%03zu", i);
  return buf;
}

RunSummary execute(const RunJob& job, const KeyValueConfig& point_cfg) {
  const RunSettings settings = run_settings_from_config(point_cfg);
  const RunResult result = run_point(settings, job.seed);
  write_run_artifacts(result, job.dir);
  RunSummary s;
  s.point = job.point;
  s.seed = job.seed;
  s.variant = variant_dir_label(point_cfg);
  s.dir = job.rel_dir;
  s.target_accuracy = result.target_report.averaged_accuracy;
  if (auto it = result.target_report.per_class_accuracy.find(kUnknown);
      it != result.target_report.per_class_accuracy.end())
    s.unknown_rate = it->second;
  if (result.source_report) s.source_accuracy = result.source_report->averaged_accuracy;
  s.mean_jd_common = result.density.mean_common;
  s.mean_jd_private = result.density.mean_private;
  return s;
}

std::string manifest_json(const ExperimentConfig& config, const std::vector<KeyValueConfig>& points,
                          const std::vector<RunSummary>& runs) {
  nlohmann::ordered_json j;
  j["format"] = "divuda-experiment";
  j["version"] = 1;
  j["schemas"] = {{"trainlog_csv", 1}, {"eval_report_json", 1}, {"density_csv", 1},
                  {"grid_csv", 1}, {"checkpoint_json", 1}};
  KeyValueConfig full = config.base;
  for (const auto& axis : config.axes) {
    std::string joined;
    for (const auto& v : axis.values) joined += (joined.empty() ? "" : ", ") + v;
    full.set("sweep." + axis.key, joined);
  }
  j["config_hash"] = fnv1a_hex(full.canonical());
  j["seeds"] = config.seeds;
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    nlohmann::ordered_json p;
    p["dir"] = point_dir(i);
    nlohmann::ordered_json overrides = nlohmann::ordered_json::object();
    for (const auto& axis : config.axes) overrides[axis.key] = points[i].get(axis.key);
    p["overrides"] = overrides;
    pts.push_back(p);
  }
  j["points"] = pts;
  auto rs = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json o;
    o["dir"] = r.dir;
    o["point"] = r.point;
    o["seed"] = r.seed;
    o["variant"] = r.variant;
    o["target_averaged_accuracy"] = r.target_accuracy;
    o["unknown_rate"] = r.unknown_rate;
    if (r.source_accuracy) o["source_averaged_accuracy"] = *r.source_accuracy;
    o["mean_jd_common"] = r.mean_jd_common;
    o["mean_jd_private"] = r.mean_jd_private;
    rs.push_back(o);
  }
  j["runs"] = rs;
  return j.dump(2) + "\n";
}

std::string summary_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream out;
  out << "point,seed,variant,target_accuracy,unknown_rate,source_accuracy,mean_jd_common,"
         "mean_jd_private\n";
  for (const auto& r : runs) {
    out << r.point << ',' << r.seed << ',' << r.variant << ',' << format_double(r.target_accuracy)
        << ',' << format_double(r.unknown_rate) << ',';
    if (r.source_accuracy) out << format_double(*r.source_accuracy);
    out << ',' << format_double(r.mean_jd_common) << ',' << format_double(r.mean_jd_private)
        << '\n';
  }
  return out.str();
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& config, Execution execution) {
  const auto points = config.points();
  std::vector<RunJob> jobs;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::uint64_t seed : config.seeds) {
      const std::string rel = point_dir(p) + "/seed_" + std::to_string(seed);
      jobs.push_back({p, seed, config.out_dir / rel, rel});
    }
  }

  const bool created_root = !fs::exists(config.out_dir);
  std::vector<fs::path> created;
  auto cleanup = [&] {
    std::error_code ec;
    if (created_root) {
      fs::remove_all(config.out_dir, ec);
      return;
    }
    for (const auto& p : created) fs::remove_all(p, ec);
  };

  std::vector<RunSummary> summaries(jobs.size());
  try {
    fs::create_directories(config.out_dir);
    for (std::size_t p = 0; p < points.size(); ++p) {
      const fs::path dir = config.out_dir / point_dir(p);
      if (!fs::exists(dir)) created.push_back(dir);
    }
    for (const char* name : {"manifest.json", "summary.csv"})
      if (!fs::exists(config.out_dir / name)) created.push_back(config.out_dir / name);

    std::exception_ptr first_error;
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
    if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
          const auto& job = jobs[static_cast<std::size_t>(i)];
          summaries[static_cast<std::size_t>(i)] = execute(job, points[job.point]);
        } catch (...) {
#pragma omp critical(divuda_run_error)
          if (!first_error) first_error = std::current_exception();
        }
      }
    } else {
      for (std::ptrdiff_t i = 0; i < n && !first_error; ++i) {
        try {
          const auto& job = jobs[static_cast<std::size_t>(i)];
          summaries[static_cast<std::size_t>(i)] = execute(job, points[job.point]);
        } catch (...) {
          first_error = std::current_exception();
        }
      }
    }
    if (first_error) std::rethrow_exception(first_error);

    write_text(config.out_dir / "manifest.json", manifest_json(config, points, summaries));
    write_text(config.out_dir / "summary.csv", summary_csv(summaries));
  } catch (...) {
    cleanup();
    throw;
  }
  return summaries;
}

}  // namespace divuda
