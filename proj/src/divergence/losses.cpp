#include <cmath>

#include "divuda/divergence.hpp"
#include "divuda/errors.hpp"

namespace divuda {

DivergenceTerms divergence_terms(const ProbPair& pair) {
  require_same_shape(pair.p1.value(), pair.p2.value(), "divergence_terms");
  Var lp1 = log_clamped(pair.p1);
  Var lp2 = log_clamped(pair.p2);
  Var crs = scale(row_sum(pair.p1 * lp2 + pair.p2 * lp1), -1.0);
  Var ent = scale(row_sum(pair.p1 * lp1 + pair.p2 * lp2), -1.0);
  Var skld = row_sum((pair.p1 - pair.p2) * (lp1 - lp2));
  return {skld, crs, ent};
}

Var symmetric_kl(const ProbPair& pair) {
  require_same_shape(pair.p1.value(), pair.p2.value(), "symmetric_kl");
  Var lp1 = log_clamped(pair.p1);
  Var lp2 = log_clamped(pair.p2);
  return row_sum((pair.p1 - pair.p2) * (lp1 - lp2));
}

std::pair<Var, Var> crs_ent(const ProbPair& pair) {
  const DivergenceTerms t = divergence_terms(pair);
  return {t.crs, t.ent};
}

Var joint_divergence(const ProbPair& pair) {
  const auto [crs, ent] = crs_ent(pair);
  return crs + ent;
}

namespace {

void require_one_hot(const Matrix& labels, const Matrix& probs) {
  require_same_shape(labels, probs, "supervised_loss labels");
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    std::size_t ones = 0;
    for (double v : labels.row(r)) {
      if (v == 1.0) ++ones;
      else if (v != 0.0) throw ContractError("label row " + std::to_string(r) + " is not one-hot");
    }
    if (ones != 1) throw ContractError("label row " + std::to_string(r) + " is not one-hot");
  }
}

}  // namespace

Var supervised_loss(const ProbPair& pair, const Matrix& one_hot) {
  require_one_hot(one_hot, pair.p1.value());
  Var y = pair.p1.graph->constant(one_hot);
  return scale(row_sum(y * (log_clamped(pair.p1) + log_clamped(pair.p2))), -1.0);
}

Var source_loss(const ProbPair& pair, const Matrix& one_hot, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  Var sup = supervised_loss(pair, one_hot);
  if (lambda == 0.0) return sup;
  return sup + scale(symmetric_kl(pair), lambda);
}

PerSampleLosses per_sample_losses(const ProbPair& pair, const Matrix* one_hot) {
  const DivergenceTerms t = divergence_terms(pair);
  PerSampleLosses out;
  out.skld = column_values(t.skld);
  out.crs = column_values(t.crs);
  out.ent = column_values(t.ent);
  out.jd.resize(out.crs.size());
  for (std::size_t i = 0; i < out.jd.size(); ++i) out.jd[i] = out.crs[i] + out.ent[i];
  if (one_hot != nullptr) out.sup = column_values(supervised_loss(pair, *one_hot));
  return out;
}

Var separation_loss(const ProbPair& pair, double delta, double margin, double crs_weight,
                    double ent_weight) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (!(margin >= 0.0)) throw ParameterError("margin must be non-negative");
  const DivergenceTerms t = divergence_terms(pair);
  Var crs_term = scale(mean(dead_zone_abs(t.crs, delta, margin)), crs_weight);
  Var ent_term = scale(mean(dead_zone_abs(t.ent, delta, margin)), ent_weight);
  return crs_term + ent_term;
}

}  // namespace divuda
