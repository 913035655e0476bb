#pragma once

#include <vector>

#include "dcsjced/msgcore.hpp"
#include "dcsjced/types.hpp"

namespace dcsjced {

struct SmoothedMoments {
  Eigen::MatrixXd s_marginal;  // L x K, E[s_i[k] | y]
  Eigen::MatrixXd s_pair;      // L x (K-1), E[s_i[k-1] s_i[k] | y]
  MatrixXc theta_mean;         // L x K
  Eigen::MatrixXd theta_var;   // L x K
  MatrixXc theta_cross;        // L x (K-1), E[theta_i[k]^* theta_i[k-1] | y]

  int taps() const { return static_cast<int>(s_marginal.rows()); }
  int frames() const { return static_cast<int>(s_marginal.cols()); }
};

// Smoothed marginals and pairwise moments of the support and amplitude
// chains, from a fresh forward-backward pass that uses each frame's final
// out-stage messages as local evidence.  Requires that both propagation
// directions have produced out messages (throws otherwise).
SmoothedMoments collect_moments(const std::vector<FrameMessages>& msgs, const HyperParams& hyper);

// Table III M-steps: lambda (normalized posterior mean), p01, rho (full
// Gauss-Markov M-step), zeta, varrho (positive root of the stationarity
// quadratic).  Outputs projected onto the valid ranges.
HyperParams em_update(const SmoothedMoments& moments, const HyperParams& hyper);

}  // namespace dcsjced
