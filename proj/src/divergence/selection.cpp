#include <algorithm>
#include <cmath>
#include <numeric>

#include "divuda/divergence.hpp"
#include "divuda/errors.hpp"

namespace divuda {

std::size_t kept_count(std::size_t n, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0, 1)");
  const double exact = (1.0 - alpha) * static_cast<double>(n);
  const auto kept = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(kept, n);
}

std::vector<std::size_t> small_loss_select(std::span<const double> losses, double alpha) {
  const std::size_t keep = kept_count(losses.size(), alpha);
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> select_target_common(std::span<const double> crs, double delta,
                                              double margin) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < crs.size(); ++i)
    if (crs[i] < delta - margin) out.push_back(i);
  return out;
}

}  // namespace divuda
