#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "divuda/dataset.hpp"
#include "divuda/model.hpp"

namespace divuda {

// Sentinel class id for "unknown" (target-private) predictions.
inline constexpr ClassId kUnknown = -1;
// Fixed seed for the two dropout passes used at evaluation time.
inline constexpr std::uint64_t kEvalSeed = 0x5eed;

struct Prediction {
  ClassId class_or_unknown = kUnknown;  // kUnknown iff crs_value > delta
  double crs_value = 0.0;
  std::vector<double> mean_probs;       // (p1 + p2) / 2
  std::size_t head1_argmax = 0;         // output indices
  std::size_t head2_argmax = 0;
  double jd_value = 0.0;
};

// Unknown iff crs > delta (strict); otherwise argmax of the averaged heads.
// Dropout models use two masked passes drawn from `eval_seed`.
std::vector<Prediction> predict(TwinModel& model, const LabelSpace& labels, const Matrix& x,
                                double delta, std::uint64_t eval_seed = kEvalSeed);

struct EvalReport {
  // Scored true classes, ascending; kUnknown (if present) first.
  std::map<ClassId, double> per_class_accuracy;
  std::map<ClassId, std::size_t> per_class_total;
  double averaged_accuracy = 0.0;
  // confusion[true][predicted] counts.
  std::map<ClassId, std::map<ClassId, std::size_t>> confusion;
  std::size_t n_samples = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Scores (truth, prediction) pairs: per-class accuracy for every class present in
// `truth`, unweighted mean over those classes. Throws DataError when empty.
EvalReport score_predictions(const std::vector<ClassId>& truth,
                             const std::vector<ClassId>& predicted);

// Target-private samples are scored against kUnknown; mean over the |C|+1 classes
// present. Throws DataError on an empty dataset or missing true labels.
EvalReport evaluate_target(TwinModel& model, const ClassPartition& classes, const Dataset& target,
                           double delta);

struct SourceSplit {
  Dataset train;
  Dataset test;
};
// Deterministic 80/20 split; test size = round(0.2 n).
SourceSplit split_source(const Dataset& source, std::uint64_t split_seed);

// Scores the clean 20% of a split with the same unknown-rejection rule.
EvalReport evaluate_source(TwinModel& model, const ClassPartition& classes, const Dataset& source,
                           double delta, std::uint64_t split_seed);
EvalReport evaluate_source_test(TwinModel& model, const ClassPartition& classes,
                                const Dataset& test, double delta);

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);

}  // namespace divuda
