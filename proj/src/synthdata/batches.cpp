#include "divuda/batches.hpp"

#include <algorithm>
#include <numeric>

#include "divuda/errors.hpp"
#include "divuda/rng.hpp"

namespace divuda {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw ParameterError("batch size must be at least 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, epoch);
  // Fisher-Yates with our own uniform draw so the permutation does not depend
  // on the standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
  if (n == 0) throw DataError("cannot stream batches from an empty dataset");
  current_ = epoch_batches(n_, batch_size_, seed_, epoch_);
}

std::vector<std::size_t> BatchStream::next() {
  if (cursor_ == current_.size()) {
    ++epoch_;
    cursor_ = 0;
    current_ = epoch_batches(n_, batch_size_, seed_, epoch_);
  }
  return current_[cursor_++];
}

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& rows,
                 const LabelSpace* labels) {
  Batch b;
  b.features = data.features(rows);
  b.indices = rows;
  if (labels != nullptr) {
    b.labels = Matrix(rows.size(), labels->size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& s = data.samples[rows[r]];
      if (!s.observed_label) throw DataError("source sample without an observed label");
      b.labels(r, labels->index_of(*s.observed_label)) = 1.0;
    }
  }
  return b;
}

}  // namespace divuda
