#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "divuda/graph.hpp"
#include "divuda/rng.hpp"

namespace divuda {

enum class HeadMode { kTwin, kDropout };

struct Architecture {
  std::size_t input_dim = 2;
  std::size_t hidden = 64;
  std::size_t num_classes = 3;
  HeadMode mode = HeadMode::kTwin;
  double dropout_rate = 0.5;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Pair of row-stochastic class-probability matrices, one per classifier view.
struct ProbPair {
  Var p1;
  Var p2;
};

/// Shared generator G (three FC+ReLU layers, d -> h -> h -> h) feeding either two
/// independent linear heads F1, F2 or, in dropout mode, one head F evaluated twice
/// under independent dropout masks.
class TwinModel {
 public:
  // Scaled-uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)); G, F1 and F2 each
  // draw from their own sub-stream of `seed`. Throws ConfigError on zero widths.
  static TwinModel init(const Architecture& arch, std::uint64_t seed);

  const Architecture& arch() const noexcept { return arch_; }
  HeadMode mode() const noexcept { return arch_.mode; }

  ParamSet& generator() noexcept { return generator_; }
  ParamSet& head1() noexcept { return head1_; }
  // Empty in dropout mode.
  ParamSet& head2() noexcept { return head2_; }
  const ParamSet& generator() const noexcept { return generator_; }
  const ParamSet& head1() const noexcept { return head1_; }
  const ParamSet& head2() const noexcept { return head2_; }

  Var generate(Graph& g, const Matrix& x);
  Var head_logits(Graph& g, ParamSet& head, Var features);

  // Twin mode only: p_k = softmax(F_k(G(x))).
  ProbPair forward_twin(Graph& g, const Matrix& x);
  // Dropout mode only: two passes through F with masks drawn from `rng`.
  ProbPair forward_dropout(Graph& g, const Matrix& x, Rng& rng);
  // Dispatches on mode; `rng` is only consumed in dropout mode.
  ProbPair forward(Graph& g, const Matrix& x, Rng& rng);

  // Deterministic head logits (no dropout), used for dropout calibration checks.
  Matrix deterministic_logits(const Matrix& x);

 private:
  explicit TwinModel(const Architecture& arch) : arch_(arch) {}
  friend TwinModel load_checkpoint_json(const std::string&);

  Architecture arch_;
  ParamSet generator_;
  ParamSet head1_;
  ParamSet head2_;
};

// Inverted-dropout mask: entries 0 with probability `rate`, else 1 / (1 - rate).
// Throws ParameterError for rate outside [0, 1).
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

// Checkpoint: versioned JSON with architecture and flat parameter arrays.
// Doubles are written in shortest round-trip form, so load(save(m)) is bit-exact.
std::string save_checkpoint_json(const TwinModel& model);
TwinModel load_checkpoint_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const TwinModel& model);
TwinModel load_checkpoint(const std::filesystem::path& path);

}  // namespace divuda
