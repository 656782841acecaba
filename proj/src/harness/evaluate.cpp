#include "divuda/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "divuda/divergence.hpp"
#include "divuda/errors.hpp"
#include "divuda/rng.hpp"

namespace divuda {

namespace {

constexpr std::size_t kPredictChunk = 4096;

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string class_key(ClassId c) { return c == kUnknown ? "unknown" : std::to_string(c); }

ClassId parse_class_key(const std::string& s) {
  if (s == "unknown") return kUnknown;
  return std::stoi(s);
}

}  // namespace

std::vector<Prediction> predict(TwinModel& model, const LabelSpace& labels, const Matrix& x,
                                double delta, std::uint64_t eval_seed) {
  if (x.cols() != model.arch().input_dim) throw DimensionError("predict: feature width mismatch");
  Rng rng = make_rng(eval_seed, streams::kEvalDropout);
  std::vector<Prediction> out;
  out.reserve(x.rows());
  for (std::size_t start = 0; start < x.rows(); start += kPredictChunk) {
    const std::size_t n = std::min(kPredictChunk, x.rows() - start);
    Matrix chunk(n, x.cols());
    std::copy(x.data() + start * x.cols(), x.data() + (start + n) * x.cols(), chunk.data());

    Graph g;
    const ProbPair pair = model.forward(g, chunk, rng);
    const DivergenceTerms t = divergence_terms(pair);
    const Matrix& p1 = pair.p1.value();
    const Matrix& p2 = pair.p2.value();
    for (std::size_t r = 0; r < n; ++r) {
      Prediction p;
      p.crs_value = t.crs.value()(r, 0);
      p.jd_value = p.crs_value + t.ent.value()(r, 0);
      p.mean_probs.resize(p1.cols());
      for (std::size_t c = 0; c < p1.cols(); ++c) p.mean_probs[c] = 0.5 * (p1(r, c) + p2(r, c));
      p.head1_argmax = argmax(p1.row(r));
      p.head2_argmax = argmax(p2.row(r));
      p.class_or_unknown =
          p.crs_value > delta ? kUnknown : labels.class_at(argmax(p.mean_probs));
      out.push_back(std::move(p));
    }
  }
  return out;
}

EvalReport score_predictions(const std::vector<ClassId>& truth,
                             const std::vector<ClassId>& predicted) {
  if (truth.empty()) throw DataError("cannot evaluate an empty dataset");
  if (truth.size() != predicted.size()) throw DimensionError("truth/prediction length mismatch");
  EvalReport r;
  r.n_samples = truth.size();
  std::map<ClassId, std::size_t> correct;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.per_class_total[truth[i]];
    ++r.confusion[truth[i]][predicted[i]];
    if (truth[i] == predicted[i]) ++correct[truth[i]];
  }
  double total = 0.0;
  for (const auto& [c, n] : r.per_class_total) {
    const double acc = static_cast<double>(correct[c]) / static_cast<double>(n);
    r.per_class_accuracy[c] = acc;
    total += acc;
  }
  r.averaged_accuracy = total / static_cast<double>(r.per_class_total.size());
  return r;
}

EvalReport evaluate_target(TwinModel& model, const ClassPartition& classes, const Dataset& target,
                           double delta) {
  if (target.empty()) throw DataError("cannot evaluate an empty dataset");
  const LabelSpace labels(classes.source_classes());
  std::vector<ClassId> truth;
  truth.reserve(target.size());
  for (const auto& s : target.samples) {
    if (!s.true_label) throw DataError("target sample without a true label");
    truth.push_back(classes.is_target_private(*s.true_label) ? kUnknown : *s.true_label);
  }
  const auto preds = predict(model, labels, target.features(), delta);
  std::vector<ClassId> predicted;
  predicted.reserve(preds.size());
  for (const auto& p : preds) predicted.push_back(p.class_or_unknown);
  return score_predictions(truth, predicted);
}

SourceSplit split_source(const Dataset& source, std::uint64_t split_seed) {
  const std::size_t n = source.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(split_seed, streams::kSourceSplit);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {source.subset(train), source.subset(test)};
}

EvalReport evaluate_source_test(TwinModel& model, const ClassPartition& classes,
                                const Dataset& test, double delta) {
  if (test.empty()) throw DataError("cannot evaluate an empty dataset");
  const LabelSpace labels(classes.source_classes());
  std::vector<ClassId> truth;
  for (const auto& s : test.samples) {
    if (!s.true_label) throw DataError("source sample without a true label");
    truth.push_back(*s.true_label);
  }
  const auto preds = predict(model, labels, test.features(), delta);
  std::vector<ClassId> predicted;
  for (const auto& p : preds) predicted.push_back(p.class_or_unknown);
  return score_predictions(truth, predicted);
}

EvalReport evaluate_source(TwinModel& model, const ClassPartition& classes, const Dataset& source,
                           double delta, std::uint64_t split_seed) {
  return evaluate_source_test(model, classes, split_source(source, split_seed).test, delta);
}

std::string eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["n_samples"] = r.n_samples;
  j["averaged_accuracy"] = r.averaged_accuracy;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& [c, acc] : r.per_class_accuracy) {
    nlohmann::ordered_json row;
    row["class"] = class_key(c);
    row["accuracy"] = acc;
    row["total"] = r.per_class_total.at(c);
    nlohmann::ordered_json conf = nlohmann::ordered_json::object();
    for (const auto& [pred, n] : r.confusion.at(c)) conf[class_key(pred)] = n;
    row["predicted"] = conf;
    classes.push_back(row);
  }
  j["classes"] = classes;
  return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw ConfigError("unsupported eval report version");
    EvalReport r;
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.averaged_accuracy = j.at("averaged_accuracy").get<double>();
    for (const auto& row : j.at("classes")) {
      const ClassId c = parse_class_key(row.at("class").get<std::string>());
      r.per_class_accuracy[c] = row.at("accuracy").get<double>();
      r.per_class_total[c] = row.at("total").get<std::size_t>();
      auto& conf = r.confusion[c];
      for (const auto& [k, v] : row.at("predicted").items())
        conf[parse_class_key(k)] = v.get<std::size_t>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed eval report: ") + e.what());
  }
}

}  // namespace divuda
