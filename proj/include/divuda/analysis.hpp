#pragma once

#include <string>
#include <vector>

#include "divuda/dataset.hpp"
#include "divuda/evaluate.hpp"
#include "divuda/model.hpp"

namespace divuda {

/// Normalized histograms of per-sample joint divergence for target-common and
/// target-private samples over shared bins [0, max jd].
struct DensityHistograms {
  std::vector<double> edges;    // bins + 1
  std::vector<double> common;   // mass per bin; sums to 1 unless n_common == 0
  std::vector<double> private_;
  std::size_t n_common = 0;
  std::size_t n_private = 0;
  double mean_common = 0.0;
  double mean_private = 0.0;

  friend bool operator==(const DensityHistograms&, const DensityHistograms&) = default;
};

DensityHistograms divergence_density(TwinModel& model, const ClassPartition& classes,
                                     const Dataset& target, std::size_t bins);
// Histograms from precomputed values (is_private[i] splits the samples).
DensityHistograms histogram_split(const std::vector<double>& jd,
                                  const std::vector<bool>& is_private, std::size_t bins);

// Columns: bin_lo,bin_hi,common,private
std::string density_to_csv(const DensityHistograms& h);
DensityHistograms density_from_csv(const std::string& text);

struct GridBounds {
  double x_min = -6.0;
  double x_max = 8.0;
  double y_min = -8.0;
  double y_max = 6.0;
};

struct GridRow {
  double x = 0.0;
  double y = 0.0;
  ClassId pred1 = 0;
  ClassId pred2 = 0;
  ClassId pred_mean = 0;
  double crs = 0.0;
  bool unknown = false;

  friend bool operator==(const GridRow&, const GridRow&) = default;
};

// resolution x resolution points including both bounds, x-major.
// Throws UnsupportedError unless the model takes 2-D input.
std::vector<GridRow> decision_grid(TwinModel& model, const LabelSpace& labels,
                                   const GridBounds& bounds, std::size_t resolution, double delta);

// Columns: x,y,pred1,pred2,pred_mean,crs,unknown
std::string grid_to_csv(const std::vector<GridRow>& rows);
std::vector<GridRow> grid_from_csv(const std::string& text);

}  // namespace divuda
