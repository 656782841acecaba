#include "divuda/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "divuda/csv.hpp"
#include "divuda/errors.hpp"

namespace divuda {

DensityHistograms histogram_split(const std::vector<double>& jd,
                                  const std::vector<bool>& is_private, std::size_t bins) {
  if (bins == 0) throw ParameterError("density needs at least one bin");
  if (jd.size() != is_private.size()) throw DimensionError("histogram_split: length mismatch");
  DensityHistograms h;
  double hi = 0.0;
  for (double v : jd) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    h.edges[b] = hi * static_cast<double>(b) / static_cast<double>(bins);
  h.common.assign(bins, 0.0);
  h.private_.assign(bins, 0.0);

  double sum_common = 0.0;
  double sum_private = 0.0;
  for (std::size_t i = 0; i < jd.size(); ++i) {
    const double v = std::max(jd[i], 0.0);
    auto b = static_cast<std::size_t>(v / hi * static_cast<double>(bins));
    b = std::min(b, bins - 1);
    if (is_private[i]) {
      h.private_[b] += 1.0;
      sum_private += jd[i];
      ++h.n_private;
    } else {
      h.common[b] += 1.0;
      sum_common += jd[i];
      ++h.n_common;
    }
  }
  if (h.n_common > 0) {
    for (double& m : h.common) m /= static_cast<double>(h.n_common);
    h.mean_common = sum_common / static_cast<double>(h.n_common);
  }
  if (h.n_private > 0) {
    for (double& m : h.private_) m /= static_cast<double>(h.n_private);
    h.mean_private = sum_private / static_cast<double>(h.n_private);
  }
  return h;
}

DensityHistograms divergence_density(TwinModel& model, const ClassPartition& classes,
                                     const Dataset& target, std::size_t bins) {
  const LabelSpace labels(classes.source_classes());
  std::vector<bool> is_private;
  is_private.reserve(target.size());
  for (const auto& s : target.samples) {
    if (!s.true_label) throw DataError("target sample without a true label");
    is_private.push_back(classes.is_target_private(*s.true_label));
  }
  std::vector<double> jd;
  jd.reserve(target.size());
  // delta is irrelevant here; only the divergence values are used.
  for (const auto& p : predict(model, labels, target.features(), 1.0)) jd.push_back(p.jd_value);
  return histogram_split(jd, is_private, bins);
}

std::string density_to_csv(const DensityHistograms& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,common,private\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ','
        << format_double(h.common[b]) << ',' << format_double(h.private_[b]) << '\n';
  }
  return out.str();
}

namespace {

double cell_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "'", line);
  return v;
}

ClassId cell_class(const std::string& s, std::size_t line) {
  ClassId v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad class id '" + s + "'", line);
  return v;
}

template <typename F>
void for_each_row(const std::string& text, std::size_t columns, F f) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns) throw ParseError("wrong cell count", line_no);
    f(cells, line_no);
  }
}

}  // namespace

DensityHistograms density_from_csv(const std::string& text) {
  DensityHistograms h;
  for_each_row(text, 4, [&](const std::vector<std::string>& c, std::size_t line) {
    if (h.edges.empty()) h.edges.push_back(cell_double(c[0], line));
    h.edges.push_back(cell_double(c[1], line));
    h.common.push_back(cell_double(c[2], line));
    h.private_.push_back(cell_double(c[3], line));
  });
  return h;
}

std::vector<GridRow> decision_grid(TwinModel& model, const LabelSpace& labels,
                                   const GridBounds& bounds, std::size_t resolution,
                                   double delta) {
  if (model.arch().input_dim != 2)
    throw UnsupportedError("decision grid requires 2-D features");
  if (resolution < 2) throw ParameterError("grid resolution must be at least 2");
  Matrix pts(resolution * resolution, 2);
  const double dx = (bounds.x_max - bounds.x_min) / static_cast<double>(resolution - 1);
  const double dy = (bounds.y_max - bounds.y_min) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      pts(i * resolution + j, 0) = bounds.x_min + dx * static_cast<double>(i);
      pts(i * resolution + j, 1) = bounds.y_min + dy * static_cast<double>(j);
    }
  }
  const auto preds = predict(model, labels, pts, delta);
  std::vector<GridRow> rows;
  rows.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& p = preds[k];
    GridRow r;
    r.x = pts(k, 0);
    r.y = pts(k, 1);
    r.pred1 = labels.class_at(p.head1_argmax);
    r.pred2 = labels.class_at(p.head2_argmax);
    r.pred_mean = labels.class_at(static_cast<std::size_t>(
        std::max_element(p.mean_probs.begin(), p.mean_probs.end()) - p.mean_probs.begin()));
    r.crs = p.crs_value;
    r.unknown = p.class_or_unknown == kUnknown;
    rows.push_back(r);
  }
  return rows;
}

std::string grid_to_csv(const std::vector<GridRow>& rows) {
  std::ostringstream out;
  out << "x,y,pred1,pred2,pred_mean,crs,unknown\n";
  for (const auto& r : rows) {
    out << format_double(r.x) << ',' << format_double(r.y) << ',' << r.pred1 << ',' << r.pred2
        << ',' << r.pred_mean << ',' << format_double(r.crs) << ',' << (r.unknown ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<GridRow> grid_from_csv(const std::string& text) {
  std::vector<GridRow> rows;
  for_each_row(text, 7, [&](const std::vector<std::string>& c, std::size_t line) {
    GridRow r;
    r.x = cell_double(c[0], line);
    r.y = cell_double(c[1], line);
    r.pred1 = cell_class(c[2], line);
    r.pred2 = cell_class(c[3], line);
    r.pred_mean = cell_class(c[4], line);
    r.crs = cell_double(c[5], line);
    if (c[6] != "0" && c[6] != "1") throw ParseError("unknown flag must be 0 or 1", line);
    r.unknown = c[6] == "1";
    rows.push_back(r);
  });
  return rows;
}

}  // namespace divuda
