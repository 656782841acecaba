#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divuda/graph.hpp"
#include "divuda/model.hpp"
#include "divuda/optim.hpp"

namespace divuda {

/// Per-sample divergence quantities as N x 1 graph nodes.
///   crs  = H(p1, p2) + H(p2, p1)
///   ent  = H(p1) + H(p2)
///   skld = KL(p1 || p2) + KL(p2 || p1), computed directly as sum_k (p1 - p2)(log p1 - log p2)
struct DivergenceTerms {
  Var skld;
  Var crs;
  Var ent;
};

DivergenceTerms divergence_terms(const ProbPair& pair);

Var symmetric_kl(const ProbPair& pair);
// {crs, ent}
std::pair<Var, Var> crs_ent(const ProbPair& pair);
// Joint divergence crs + ent.
Var joint_divergence(const ProbPair& pair);
// -log p1[y] - log p2[y]. Throws ContractError unless every label row is one-hot.
Var supervised_loss(const ProbPair& pair, const Matrix& one_hot);
// supervised + lambda * skld
Var source_loss(const ProbPair& pair, const Matrix& one_hot, double lambda);

// Plain per-sample values, for logging and analysis.
struct PerSampleLosses {
  std::vector<double> skld;
  std::vector<double> crs;
  std::vector<double> ent;
  std::vector<double> jd;
  std::vector<double> sup;  // empty when no labels were given
};
PerSampleLosses per_sample_losses(const ProbPair& pair, const Matrix* one_hot = nullptr);

// ceil((1 - alpha) * n), guarded against round-off just above an integer.
std::size_t kept_count(std::size_t n, double alpha);

// Indices of the kept_count(n, alpha) smallest losses, ties to the lower index,
// returned in ascending index order. Throws ParameterError for alpha outside [0, 1).
std::vector<std::size_t> small_loss_select(std::span<const double> losses, double alpha);

// { i : crs[i] < delta - margin }, ascending.
std::vector<std::size_t> select_target_common(std::span<const double> crs, double delta,
                                              double margin);

// Mean over the batch of dead_zone_abs(crs) * crs_weight + dead_zone_abs(ent) * ent_weight.
// With unit weights this is the separation loss L_t.
Var separation_loss(const ProbPair& pair, double delta, double margin, double crs_weight = 1.0,
                    double ent_weight = 1.0);

enum class Variant {
  kFull,
  kSourceOnly,
  kNoSelect,
  kNoSep,
  kKlSep,
  kNoDiv,
  kNoCrs,
  kNoEnt,
  kNoMinimax,
};

/// Which pieces of the training objective are active.
struct ObjectiveConfig {
  bool source_divergence = true;  // lambda * SKLD inside L_s
  bool select_source = true;      // small-loss selection of D_s'
  double sep_crs_weight = 1.0;    // weight of the crs term of L_t
  double sep_ent_weight = 1.0;    // weight of the ent term of L_t (-1 for the KL variant)
  bool minimax = true;            // Steps B and C

  bool target_separation() const { return sep_crs_weight != 0.0 || sep_ent_weight != 0.0; }
};

ObjectiveConfig variant_losses(Variant v);
// Throws ParameterError for unknown names.
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
std::vector<Variant> all_variants();

struct Hyperparams {
  double lambda = 0.1;
  double alpha = 0.2;
  // Unset means log|C_s|.
  std::optional<double> delta;
  double margin = 1.0;
  std::size_t n_repeat = 4;
  std::size_t batch_size = 64;
  SgdConfig sgd;

  // Fills delta = log(num_classes) when unset; throws ParameterError on invalid ranges.
  Hyperparams resolved(std::size_t num_classes) const;
  void validate() const;
};

}  // namespace divuda
