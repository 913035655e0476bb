#pragma once

#include <string>

#include "dcsjced/rng.hpp"
#include "dcsjced/types.hpp"

namespace dcsjced {

// First-order Markov support chains, rows independent; column 0 drawn from
// the stationary Bernoulli(lambda).
Eigen::ArrayXXi sample_support_chain(const HyperParams& hyper, int taps, int frames,
                                     RngStream& rng);

// Gauss-Markov amplitude: theta[0] ~ CN(zeta, sigma^2),
// theta[k] = (1-varrho)(theta[k-1]-zeta) + varrho*w[k] + zeta, w ~ CN(0, rho).
MatrixXc sample_amplitude_process(const HyperParams& hyper, int taps, int frames, RngStream& rng);

ChannelTrack compose_channel(const Eigen::ArrayXXi& support, const MatrixXc& amplitude);

ChannelTrack sample_channel_track(const HyperParams& hyper, int taps, int frames, RngStream& rng);

// y_n = sum_l x_{n-l+1} h_l + w_n, x at nonpositive index treated as zero,
// w ~ CN(0, noise_var).  noise_var is the total complex variance.
ArrayXc apply_channel(const ArrayXc& frame, const ArrayXc& cir, Real noise_var, RngStream& rng);

// CIR trace file: one frame per line, 2L whitespace-separated reals
// (re1 im1 re2 im2 ...), '#' comments ignored.
ChannelTrack import_cir_trace(const std::string& path);
void export_cir_trace(const std::string& path, const ChannelTrack& track);

}  // namespace dcsjced
