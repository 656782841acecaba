#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "divuda/matrix.hpp"

namespace divuda {

using ClassId = int;

enum class Domain { kSource, kTarget };

struct LabeledSample {
  std::vector<double> features;
  // Label seen by the trainer; empty for target samples.
  std::optional<ClassId> observed_label;
  // Ground truth, for evaluation only.
  std::optional<ClassId> true_label;
  Domain domain = Domain::kSource;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<LabeledSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  Matrix features() const;
  Matrix features(std::span<const std::size_t> rows) const;
  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Partition of class ids into common (C), source-private and target-private sets.
struct ClassPartition {
  std::vector<ClassId> common;
  std::vector<ClassId> source_private;
  std::vector<ClassId> target_private;

  // Throws ConfigError unless the three sets are pairwise disjoint and C_s is non-empty.
  void validate() const;
  // Sorted C ∪ C̄_s; position in this list is the network output index.
  std::vector<ClassId> source_classes() const;
  // Sorted C ∪ C̄_t.
  std::vector<ClassId> target_classes() const;
  bool is_common(ClassId c) const;
  bool is_source_private(ClassId c) const;
  bool is_target_private(ClassId c) const;
};

/// Bijection between source class ids and output columns.
class LabelSpace {
 public:
  explicit LabelSpace(std::vector<ClassId> source_classes);

  std::size_t size() const noexcept { return classes_.size(); }
  ClassId class_at(std::size_t index) const { return classes_.at(index); }
  // Throws DataError for ids outside C_s.
  std::size_t index_of(ClassId c) const;
  bool contains(ClassId c) const;
  const std::vector<ClassId>& classes() const noexcept { return classes_; }

 private:
  std::vector<ClassId> classes_;
};

enum class NoiseKind { kNone, kPair, kSymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double rate = 0.0;
};

// Row-stochastic noise transition matrix Q over K classes.
//   symmetric: Q[i][i] = 1 - rate, Q[i][j] = rate / (K - 1)
//   pair:      Q[i][i] = 1 - rate, Q[i][(i + 1) mod K] = rate
// Throws ParameterError for rate outside [0, 1) or K < 2.
Matrix build_noise_matrix(NoiseKind kind, double rate, std::size_t num_classes);

struct ScenarioSpec {
  ClassPartition classes;
  std::map<ClassId, std::vector<double>> centers;
  double blob_std = 0.5;
  std::size_t samples_per_class = 300;
  std::size_t feature_dim = 2;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  void validate() const;
};

// Three source classes {0, 1, 2} with 2 source-private, target classes {0, 1, 3}
// with 3 far from every source blob; symmetric 20% label noise.
ScenarioSpec toy_scenario();

struct DomainPair {
  Dataset source;
  Dataset target;
};

// Isotropic Gaussian blobs: source covers C_s, target covers C_t, each class
// contributing samples_per_class rows in ascending class order. Labels are clean.
DomainPair make_blobs(const ScenarioSpec& spec);

// Resamples each observed label from row Q[true_label]. Features and true labels
// are untouched. Throws DataError if a true label is outside `labels`.
Dataset apply_label_noise(const Dataset& dataset, const NoiseSpec& noise, const LabelSpace& labels,
                          std::uint64_t seed);

// make_blobs followed by apply_label_noise on the source side.
DomainPair generate_scenario(const ScenarioSpec& spec);

}  // namespace divuda
