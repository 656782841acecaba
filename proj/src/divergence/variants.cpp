#include <cmath>

#include "divuda/divergence.hpp"
#include "divuda/errors.hpp"

namespace divuda {

ObjectiveConfig variant_losses(Variant v) {
  ObjectiveConfig c;
  switch (v) {
    case Variant::kFull:
      break;
    case Variant::kSourceOnly:
      c.source_divergence = false;
      c.select_source = false;
      c.sep_crs_weight = 0.0;
      c.sep_ent_weight = 0.0;
      c.minimax = false;
      break;
    case Variant::kNoSelect:
      c.select_source = false;
      break;
    case Variant::kNoSep:
      c.sep_crs_weight = 0.0;
      c.sep_ent_weight = 0.0;
      break;
    case Variant::kKlSep:
      c.sep_ent_weight = -1.0;
      break;
    case Variant::kNoDiv:
      c.source_divergence = false;
      break;
    case Variant::kNoCrs:
      c.sep_crs_weight = 0.0;
      break;
    case Variant::kNoEnt:
      c.sep_ent_weight = 0.0;
      break;
    case Variant::kNoMinimax:
      c.minimax = false;
      break;
  }
  return c;
}

namespace {

struct VariantName {
  Variant v;
  const char* name;
};

constexpr VariantName kNames[] = {
    {Variant::kFull, "full"},           {Variant::kSourceOnly, "source_only"},
    {Variant::kNoSelect, "no_select"},  {Variant::kNoSep, "no_sep"},
    {Variant::kKlSep, "kl_sep"},        {Variant::kNoDiv, "no_div"},
    {Variant::kNoCrs, "no_crs"},        {Variant::kNoEnt, "no_ent"},
    {Variant::kNoMinimax, "no_minimax"},
};

}  // namespace

Variant parse_variant(const std::string& name) {
  for (const auto& e : kNames)
    if (name == e.name) return e.v;
  throw ParameterError("unknown variant '" + name + "'");
}

std::string variant_name(Variant v) {
  for (const auto& e : kNames)
    if (e.v == v) return e.name;
  return "?";
}

std::vector<Variant> all_variants() {
  std::vector<Variant> out;
  for (const auto& e : kNames) out.push_back(e.v);
  return out;
}

void Hyperparams::validate() const {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
  if (!(margin >= 0.0)) throw ParameterError("margin must be non-negative");
  if (n_repeat < 1) throw ParameterError("n_repeat must be at least 1");
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (delta && !(*delta > 0.0)) throw ParameterError("delta must be positive");
  if (!(sgd.lr > 0.0)) throw ParameterError("learning rate must be positive");
}

Hyperparams Hyperparams::resolved(std::size_t num_classes) const {
  Hyperparams h = *this;
  if (!h.delta) h.delta = std::log(static_cast<double>(num_classes));
  h.validate();
  return h;
}

}  // namespace divuda
