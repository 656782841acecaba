#include "divuda/trainer.hpp"

#include "divuda/errors.hpp"

namespace divuda {

Trainer::Trainer(TwinModel model, Hyperparams hyper, Variant variant, std::uint64_t seed)
    : model_(std::move(model)),
      hyper_(std::move(hyper)),
      variant_(variant),
      objective_(variant_losses(variant)),
      dropout_rng_(make_rng(seed, streams::kDropout)) {
  if (!hyper_.delta) throw ParameterError("Trainer needs resolved hyperparameters (delta unset)");
  hyper_.validate();
}

ProbPair Trainer::forward(Graph& g, const Matrix& x) { return model_.forward(g, x, dropout_rng_); }

std::pair<Var, std::vector<std::size_t>> Trainer::selected_source_loss(const ProbPair& pair,
                                                                       const Batch& source) {
  const double lambda = objective_.source_divergence ? hyper_.lambda : 0.0;
  Var per_sample = source_loss(pair, source.labels, lambda);
  const double alpha = objective_.select_source ? hyper_.alpha : 0.0;
  const auto losses = column_values(per_sample);
  return {per_sample, small_loss_select(losses, alpha)};
}

void Trainer::update_all() {
  sgd_step(model_.generator(), hyper_.sgd);
  sgd_step(model_.head1(), hyper_.sgd);
  sgd_step(model_.head2(), hyper_.sgd);
}

void Trainer::update_classifiers() {
  model_.generator().zero_grad();
  sgd_step(model_.head1(), hyper_.sgd);
  sgd_step(model_.head2(), hyper_.sgd);
}

void Trainer::update_generator() {
  model_.head1().zero_grad();
  model_.head2().zero_grad();
  sgd_step(model_.generator(), hyper_.sgd);
}

void Trainer::step_a(const Batch& source, const Batch& target, StepTrace& trace) {
  if (source.features.rows() == 0 || target.features.rows() == 0)
    throw ContractError("step_a needs non-empty batches");
  step_a1(source, trace);
  if (objective_.target_separation()) step_a2(target, trace);
}

void Trainer::step_a1(const Batch& source, StepTrace& trace) {
  Graph g;
  const ProbPair pair = forward(g, source.features);
  auto [per_sample, selected] = selected_source_loss(pair, source);
  Var loss = mean(gather_rows(per_sample, selected));
  g.backward(loss);
  update_all();

  trace.loss_s = loss.scalar();
  trace.n_selected_source = selected.size();
  trace.source_selection.clear();
  std::size_t clean = 0;
  bool have_truth = source_truth_ != nullptr;
  for (std::size_t local : selected) {
    const std::size_t row = source.indices.at(local);
    trace.source_selection.push_back(row);
    if (have_truth) {
      const auto& s = source_truth_->samples.at(row);
      if (!s.true_label) have_truth = false;
      else if (s.observed_label == s.true_label) ++clean;
    }
  }
  if (have_truth && !selected.empty())
    trace.selected_clean_fraction = static_cast<double>(clean) / static_cast<double>(selected.size());
}

void Trainer::step_a2(const Batch& target, StepTrace& trace) {
  Graph g;
  const ProbPair pair = forward(g, target.features);
  Var loss = separation_loss(pair, *hyper_.delta, hyper_.margin, objective_.sep_crs_weight,
                             objective_.sep_ent_weight);
  g.backward(loss);
  update_all();
  trace.loss_t = loss.scalar();
}

void Trainer::step_b(const Batch& source, const Batch* target, StepTrace& trace) {
  Graph g;
  const ProbPair src = forward(g, source.features);
  auto [per_sample, selected] = selected_source_loss(src, source);
  Var objective = mean(gather_rows(per_sample, selected));
  if (target != nullptr && target->features.rows() > 0) {
    const ProbPair tgt = forward(g, target->features);
    objective = objective - mean(crs_ent(tgt).first);
  }
  g.backward(objective);
  update_classifiers();
  trace.loss_b = objective.scalar();
}

void Trainer::step_c(const Batch& target, StepTrace& trace) {
  trace.loss_c.clear();
  for (std::size_t r = 0; r < hyper_.n_repeat; ++r) {
    Graph g;
    const ProbPair pair = forward(g, target.features);
    Var crs = crs_ent(pair).first;
    const auto common = select_target_common(column_values(crs), *hyper_.delta, hyper_.margin);
    if (r == 0) {
      trace.n_selected_target = common.size();
      trace.target_selection.clear();
      for (std::size_t local : common) trace.target_selection.push_back(target.indices.at(local));
    }
    if (common.empty()) {
      trace.loss_c.emplace_back();
      continue;
    }
    Var loss = mean(gather_rows(crs, common));
    g.backward(loss);
    update_generator();
    trace.loss_c.emplace_back(loss.scalar());
  }
}

StepTrace Trainer::step(const Batch& source, const Batch& target) {
  StepTrace trace;
  trace.iteration = ++iteration_;
  step_a(source, target, trace);
  if (objective_.minimax) {
    step_b(source, &target, trace);
    step_c(target, trace);
  }
  return trace;
}

std::optional<double> StepTrace::loss_c_mean() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& v : loss_c) {
    if (v) {
      total += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

TrainResult train(const DomainPair& data, const ClassPartition& classes, const TrainConfig& cfg,
                  const EvalHook& hook) {
  classes.validate();
  const LabelSpace labels(classes.source_classes());
  if (data.source.empty() || data.target.empty()) throw DataError("training needs source and target samples");
  if (data.source.feature_dim != data.target.feature_dim)
    throw DataError("source and target feature dimensions differ");

  Architecture arch;
  arch.input_dim = data.source.feature_dim;
  arch.hidden = cfg.hidden;
  arch.num_classes = labels.size();
  arch.mode = cfg.mode;
  arch.dropout_rate = cfg.dropout_rate;

  Trainer trainer(TwinModel::init(arch, cfg.seed), cfg.hyper.resolved(labels.size()), cfg.variant,
                  cfg.seed);
  trainer.set_source_truth(&data.source);

  BatchStream source_stream(data.source.size(), cfg.hyper.batch_size,
                            mix_seed(cfg.seed, streams::kSourceBatches));
  BatchStream target_stream(data.target.size(), cfg.hyper.batch_size,
                            mix_seed(cfg.seed, streams::kTargetBatches));

  TrainLog log;
  log.rows.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Batch source = make_batch(data.source, source_stream.next(), &labels);
    const Batch target = make_batch(data.target, target_stream.next(), nullptr);
    StepTrace trace = trainer.step(source, target);
    if (hook && cfg.eval_every > 0 &&
        (trace.iteration % cfg.eval_every == 0 || trace.iteration == cfg.iterations))
      hook(trainer.model(), trace);
    log.rows.push_back(std::move(trace));
  }
  return {std::move(trainer.model()), std::move(log)};
}

}  // namespace divuda
