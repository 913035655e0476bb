#pragma once

#include "dcsjced/turbo.hpp"
#include "dcsjced/types.hpp"

namespace dcsjced {

struct LmmseEstimate {
  ArrayXc h_hat;
  MatrixXc cov;  // error covariance of the regularized solve
};

// Ridge-regularized least squares on the pilot-only observation window
// (samples whose convolution support is pilot or preceding guard).
LmmseEstimate lmmse_channel_estimate(const ArrayXc& y, const ArrayXr& pilot, int channel_len,
                                     Real noise_var);

// Sliding-window time-varying MMSE equalizer with prior-mean cancellation
// (classic turbo-MMSE construction).  Returns the equivalent AWGN
// observation r and variance per data symbol.
struct MmseSoftOutput {
  ArrayXc r;
  ArrayXr var;
};
MmseSoftOutput mmse_equalize_frame(const ArrayXc& y, const ArrayXc& h, const ArrayXc& x_prior_mean,
                                   const ArrayXr& x_prior_var, int data_begin, int data_len,
                                   const MmseConfig& cfg, Real noise_var);

// extrinsic LLRs for one frame (LMMSE channel estimate + MMSE turbo pass)
ArrayXr mmse_turbo_equalize(const ArrayXc& y, const ArrayXc& h_hat,
                            const Eigen::MatrixXd& bit_llrs, const ArrayXr& pilot,
                            const FrameConfig& fc, const SymbolAlphabet& alphabet,
                            const MmseConfig& cfg, Real noise_var);

// Full CE-based MMSE turbo receiver over a group of frames.
EqualizerOutput run_mmse_turbo(const TurboInputs& in, const MmseConfig& cfg, Real noise_var);

// Single-frame JCED baseline: each frame is processed as its own K=1 group
// (identical code path to run_dcs_jced); the next frame's channel init is
// warm-started from this frame's posterior mean.
EqualizerOutput jced_single_frame(const TurboInputs& in, const TurboConfig& cfg,
                                  const HyperParams& hyper, Real noise_var, RngStream& init_rng);

}  // namespace dcsjced
