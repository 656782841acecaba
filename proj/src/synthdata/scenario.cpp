#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "divuda/dataset.hpp"
#include "divuda/errors.hpp"
#include "divuda/rng.hpp"

namespace divuda {

Matrix Dataset::features() const {
  Matrix m(samples.size(), feature_dim);
  for (std::size_t r = 0; r < samples.size(); ++r)
    std::copy(samples[r].features.begin(), samples[r].features.end(), m.row(r).begin());
  return m;
}

Matrix Dataset::features(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), feature_dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = samples.at(rows[r]).features;
    std::copy(f.begin(), f.end(), m.row(r).begin());
  }
  return m;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out{feature_dim, {}};
  out.samples.reserve(rows.size());
  for (std::size_t r : rows) out.samples.push_back(samples.at(r));
  return out;
}

namespace {

bool contains(const std::vector<ClassId>& v, ClassId c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

std::vector<ClassId> sorted_union(const std::vector<ClassId>& a, const std::vector<ClassId>& b) {
  std::set<ClassId> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

}  // namespace

void ClassPartition::validate() const {
  std::set<ClassId> seen;
  for (const auto* set : {&common, &source_private, &target_private}) {
    for (ClassId c : *set) {
      if (c < 0) throw ConfigError("class ids must be non-negative, got " + std::to_string(c));
      if (!seen.insert(c).second)
        throw ConfigError("class " + std::to_string(c) + " appears in more than one class set");
    }
  }
  if (common.empty() && source_private.empty()) throw ConfigError("source label set is empty");
}

std::vector<ClassId> ClassPartition::source_classes() const {
  return sorted_union(common, source_private);
}
std::vector<ClassId> ClassPartition::target_classes() const {
  return sorted_union(common, target_private);
}
bool ClassPartition::is_common(ClassId c) const { return contains(common, c); }
bool ClassPartition::is_source_private(ClassId c) const { return contains(source_private, c); }
bool ClassPartition::is_target_private(ClassId c) const { return contains(target_private, c); }

LabelSpace::LabelSpace(std::vector<ClassId> source_classes) : classes_(std::move(source_classes)) {
  std::sort(classes_.begin(), classes_.end());
  if (std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end())
    throw ConfigError("duplicate class id in label space");
}

std::size_t LabelSpace::index_of(ClassId c) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), c);
  if (it == classes_.end() || *it != c)
    throw DataError("label " + std::to_string(c) + " is not a source class");
  return static_cast<std::size_t>(it - classes_.begin());
}

bool LabelSpace::contains(ClassId c) const {
  return std::binary_search(classes_.begin(), classes_.end(), c);
}

void ScenarioSpec::validate() const {
  classes.validate();
  if (samples_per_class < 1) throw ConfigError("samples_per_class must be at least 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be at least 1");
  if (!(blob_std > 0.0)) throw ConfigError("blobs.std must be positive");
  if (!(noise.rate >= 0.0 && noise.rate < 1.0)) throw ConfigError("noise.rate must lie in [0, 1)");
  for (ClassId c : sorted_union(classes.source_classes(), classes.target_classes())) {
    auto it = centers.find(c);
    if (it == centers.end()) throw ConfigError("missing blob center for class " + std::to_string(c));
    if (it->second.size() != feature_dim)
      throw ConfigError("blob center for class " + std::to_string(c) + " has wrong dimension");
  }
}

ScenarioSpec toy_scenario() {
  ScenarioSpec spec;
  spec.classes.common = {0, 1};
  spec.classes.source_private = {2};
  spec.classes.target_private = {3};
  spec.centers = {{0, {-2.0, 2.0}}, {1, {2.0, 2.0}}, {2, {0.0, -2.0}}, {3, {5.0, -5.0}}};
  spec.blob_std = 0.5;
  spec.samples_per_class = 300;
  spec.feature_dim = 2;
  spec.noise = {NoiseKind::kSymmetric, 0.2};
  spec.seed = 0;
  return spec;
}

namespace {

Dataset sample_blobs(const ScenarioSpec& spec, const std::vector<ClassId>& classes, Domain domain,
                     Rng rng) {
  std::normal_distribution<double> gauss(0.0, spec.blob_std);
  Dataset out{spec.feature_dim, {}};
  out.samples.reserve(classes.size() * spec.samples_per_class);
  for (ClassId c : classes) {
    const auto& center = spec.centers.at(c);
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      LabeledSample s;
      s.features.resize(spec.feature_dim);
      for (std::size_t d = 0; d < spec.feature_dim; ++d) s.features[d] = center[d] + gauss(rng);
      s.true_label = c;
      if (domain == Domain::kSource) s.observed_label = c;
      s.domain = domain;
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

DomainPair make_blobs(const ScenarioSpec& spec) {
  spec.validate();
  return {sample_blobs(spec, spec.classes.source_classes(), Domain::kSource,
                       make_rng(spec.seed, streams::kSourceBlobs)),
          sample_blobs(spec, spec.classes.target_classes(), Domain::kTarget,
                       make_rng(spec.seed, streams::kTargetBlobs))};
}

DomainPair generate_scenario(const ScenarioSpec& spec) {
  DomainPair data = make_blobs(spec);
  const LabelSpace labels(spec.classes.source_classes());
  data.source = apply_label_noise(data.source, spec.noise, labels, spec.seed);
  return data;
}

}  // namespace divuda
