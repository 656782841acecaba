#pragma once

#include <cstdint>
#include <vector>

#include "divuda/dataset.hpp"
#include "divuda/matrix.hpp"

namespace divuda {

struct Batch {
  Matrix features;             // N x d
  Matrix labels;               // N x |C_s| one-hot of observed labels; empty for target batches
  std::vector<std::size_t> indices;  // dataset rows
};

// Index batches for one epoch: a seeded permutation of [0, n) cut into chunks of
// batch_size (last chunk may be shorter). Throws ParameterError if batch_size == 0.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch);

/// Endless stream of index batches that reshuffles at every epoch boundary.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::vector<std::size_t>> current_;
};

// Gathers rows into a Batch. With `labels`, every sample must carry an observed label.
Batch make_batch(const Dataset& data, const std::vector<std::size_t>& rows,
                 const LabelSpace* labels);

}  // namespace divuda
