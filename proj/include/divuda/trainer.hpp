#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "divuda/batches.hpp"
#include "divuda/dataset.hpp"
#include "divuda/divergence.hpp"
#include "divuda/model.hpp"

namespace divuda {

/// What happened during one paired mini-batch. Losses of skipped steps stay empty.
struct StepTrace {
  std::size_t iteration = 0;
  std::optional<double> loss_s;          // A-1: mean L_s over D_s'
  std::optional<double> loss_t;          // A-2: L_t over D_t
  std::optional<double> loss_b;          // B: L_s(D_s') - mean crs(D_t)
  std::vector<std::optional<double>> loss_c;  // C: mean crs(D_t') per repeat
  std::size_t n_selected_source = 0;     // |D_s'| in A-1
  std::optional<std::size_t> n_selected_target;  // |D_t'| at the first C repeat
  std::vector<std::size_t> source_selection;      // dataset rows of D_s' in A-1
  std::vector<std::size_t> target_selection;      // dataset rows of D_t' at the first C repeat
  // Fraction of D_s' whose observed label equals the hidden true label.
  std::optional<double> selected_clean_fraction;
  // Filled by the periodic evaluation hook.
  std::optional<double> eval_target_accuracy;
  std::optional<double> eval_unknown_rate;

  std::optional<double> loss_c_mean() const;
};

struct TrainLog {
  std::vector<StepTrace> rows;

  // Columns: iteration, loss_s, loss_t, loss_b, loss_c_mean, n_selected_source,
  // n_selected_target, selected_clean_fraction, eval_target_accuracy, eval_unknown_rate.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainConfig {
  Hyperparams hyper;
  Variant variant = Variant::kFull;
  std::size_t iterations = 3000;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  HeadMode mode = HeadMode::kTwin;
  double dropout_rate = 0.5;
  // Evaluation hook cadence in iterations; 0 disables it.
  std::size_t eval_every = 0;
};

/// Owns the model and runs the A-1 / A-2 / B / C updates with per-group routing:
/// A touches G, F1, F2; B only F1, F2; C only G.
class Trainer {
 public:
  // `hyper` must already be resolved (delta set).
  Trainer(TwinModel model, Hyperparams hyper, Variant variant, std::uint64_t seed);

  // A-1 then A-2 (each skipped where the variant disables it).
  void step_a(const Batch& source, const Batch& target, StepTrace& trace);
  // Selected-source update of G, F1, F2.
  void step_a1(const Batch& source, StepTrace& trace);
  // Target separation update of G, F1, F2.
  void step_a2(const Batch& target, StepTrace& trace);
  // Classifier-only update. `target` may be null, leaving pure descent on L_s(D_s').
  void step_b(const Batch& source, const Batch* target, StepTrace& trace);
  // n generator-only updates on D_t', recomputed from current outputs at each repeat.
  void step_c(const Batch& target, StepTrace& trace);
  // Full A -> B -> C sequence for one paired batch.
  StepTrace step(const Batch& source, const Batch& target);

  TwinModel& model() noexcept { return model_; }
  const TwinModel& model() const noexcept { return model_; }
  const Hyperparams& hyper() const noexcept { return hyper_; }
  const ObjectiveConfig& objective() const noexcept { return objective_; }
  std::size_t iteration() const noexcept { return iteration_; }

  // Optional: ground-truth lookup for selection precision logging.
  void set_source_truth(const Dataset* source) { source_truth_ = source; }

 private:
  ProbPair forward(Graph& g, const Matrix& x);
  // Per-sample L_s node and the selected rows (local batch indices).
  std::pair<Var, std::vector<std::size_t>> selected_source_loss(const ProbPair& pair,
                                                                const Batch& source);
  void update_all();
  void update_classifiers();
  void update_generator();

  TwinModel model_;
  Hyperparams hyper_;
  Variant variant_;
  ObjectiveConfig objective_;
  Rng dropout_rng_;
  std::size_t iteration_ = 0;
  const Dataset* source_truth_ = nullptr;
};

struct TrainResult {
  TwinModel model;
  TrainLog log;
};

using EvalHook = std::function<void(TwinModel& model, StepTrace& row)>;

// Paired independent source/target streams of equal batch size for cfg.iterations
// steps. Deterministic in cfg.seed. Source samples must carry observed labels in C_s.
TrainResult train(const DomainPair& data, const ClassPartition& classes, const TrainConfig& cfg,
                  const EvalHook& hook = {});

}  // namespace divuda
