#pragma once

#include <vector>

#include "dcsjced/fec.hpp"
#include "dcsjced/msgcore.hpp"
#include "dcsjced/rng.hpp"
#include "dcsjced/types.hpp"

namespace dcsjced {

struct TurboInputs {
  std::vector<ArrayXc> received;               // K frames of length M
  ArrayXr pilot;                               // N_p pilot symbols
  const LdpcCode* code = nullptr;              // nullable: equalize-only run
  std::vector<std::vector<int>> interleavers;  // per frame, over coded bits
  SymbolAlphabet alphabet;
  FrameConfig frame_cfg;
  // optional warm start for the first frame's q-hat (JCED fairness rule)
  const ArrayXc* q_warm_start = nullptr;
};

// Extrinsic LLR per coded bit of one frame (Eq. 54 with the Gaussian
// exponent negated); the bit's own prior is excluded from its extrinsic.
ArrayXr extrinsic_llr(const ArrayXc& r_hat, const ArrayXr& r_var,
                      const Eigen::MatrixXd& bit_llrs, const SymbolAlphabet& alphabet);

// normalized per-symbol prior pmf from a priori bit LLRs
Eigen::MatrixXd apriori_symbol_probs(const Eigen::MatrixXd& bit_llrs,
                                     const SymbolAlphabet& alphabet);

// Runs the full joint estimation/equalization/decoding loop over a group of
// K frames: per turbo iteration, alternating forward/backward propagation
// sweeps, EM tuning (when both directions ran), extrinsic LLRs, LDPC
// decoding, and a priori feedback.
EqualizerOutput run_dcs_jced(const TurboInputs& in, const TurboConfig& cfg, HyperParams hyper,
                             Real noise_var, RngStream& init_rng);

}  // namespace dcsjced
