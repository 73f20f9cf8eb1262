#pragma once

#include <Eigen/Dense>

#include "skewvar/model.hpp"
#include "skewvar/rng.hpp"

namespace skewvar {

struct SimResult {
  Dataset data;
  StatePath states;
};

// Generates data exactly from the model equations, returning the ground-truth
// state path for recovery tests. Initial Y lags default to zero; initial
// states sit at the transition equation's fixed point.
SimResult simulate_dgp(const ModelSpec& spec, const ParameterDraw& true_params, int T,
                       RngHandle& rng, const Eigen::MatrixXd* init_y = nullptr,
                       Quarter start = Quarter{1900, 1});

}  // namespace skewvar
