#include "divuda/optim.hpp"

namespace divuda {

void sgd_step(ParamSet& params, double lr, double momentum, double weight_decay) {
  for (auto& p : params) {
    auto w = p.value.values();
    auto g = p.grad.values();
    auto v = p.velocity.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] + g[i] + weight_decay * w[i];
      w[i] -= lr * v[i];
      g[i] = 0.0;
    }
  }
}

}  // namespace divuda
