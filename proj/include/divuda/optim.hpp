#pragma once

#include "divuda/graph.hpp"

namespace divuda {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
// Gradients are zeroed afterwards.
void sgd_step(ParamSet& params, double lr, double momentum, double weight_decay);
inline void sgd_step(ParamSet& params, const SgdConfig& cfg) {
  sgd_step(params, cfg.lr, cfg.momentum, cfg.weight_decay);
}

}  // namespace divuda
