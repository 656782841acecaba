#include <string>

#include "divuda/dataset.hpp"
#include "divuda/errors.hpp"
#include "divuda/rng.hpp"

namespace divuda {

Matrix build_noise_matrix(NoiseKind kind, double rate, std::size_t num_classes) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ParameterError("noise rate must lie in [0, 1), got " + std::to_string(rate));
  if (num_classes < 2) throw ParameterError("noise matrix needs at least 2 classes");

  const std::size_t k = num_classes;
  Matrix q(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    switch (kind) {
      case NoiseKind::kNone:
        q(i, i) = 1.0;
        break;
      case NoiseKind::kSymmetric:
        for (std::size_t j = 0; j < k; ++j)
          q(i, j) = i == j ? 1.0 - rate : rate / static_cast<double>(k - 1);
        break;
      case NoiseKind::kPair:
        q(i, i) = 1.0 - rate;
        q(i, (i + 1) % k) += rate;
        break;
    }
  }
  return q;
}

Dataset apply_label_noise(const Dataset& dataset, const NoiseSpec& noise, const LabelSpace& labels,
                          std::uint64_t seed) {
  const Matrix q = labels.size() >= 2 ? build_noise_matrix(noise.kind, noise.rate, labels.size())
                                      : Matrix::identity(labels.size());
  Rng rng = make_rng(seed, streams::kLabelNoise);
  Dataset out = dataset;
  for (auto& s : out.samples) {
    if (!s.true_label) throw DataError("label noise needs ground-truth labels");
    const std::size_t row = labels.index_of(*s.true_label);
    // One draw per sample even at zero noise keeps the stream aligned across rates.
    const double u = uniform01(rng);
    std::size_t pick = row;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      cumulative += q(row, j);
      if (u < cumulative) {
        pick = j;
        break;
      }
    }
    s.observed_label = labels.class_at(pick);
  }
  return out;
}

}  // namespace divuda
