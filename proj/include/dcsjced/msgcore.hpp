#pragma once

#include "dcsjced/types.hpp"

namespace dcsjced {

// log CN(0 | m, v) for a circularly symmetric complex Gaussian
inline Real log_cn0(Complex m, Real v) { return -std::log(M_PI * v) - std::norm(m) / v; }

// truncated linear convolution: out[n] = sum_k a[k] b[n-k], n = 0..len-1
template <typename A, typename B>
auto conv_trunc(const A& a, const B& b, int len) {
  using Out = std::conditional_t<std::is_same_v<typename A::Scalar, Complex> ||
                                     std::is_same_v<typename B::Scalar, Complex>,
                                 ArrayXc, ArrayXr>;
  Out out = Out::Zero(len);
  const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  for (int k = 0; k < na; ++k) {
    const int hi = std::min(len - k, nb);
    for (int j = 0; j < hi; ++j) out(k + j) += a(k) * b(j);
  }
  return out;
}

// cross-correlation at nonnegative lags: out[i] = sum_m w[m] g[m-i], i = 0..nlags-1
template <typename W, typename G>
auto xcorr_lags(const W& w, const G& g, int nlags) {
  using Out = std::conditional_t<std::is_same_v<typename W::Scalar, Complex> ||
                                     std::is_same_v<typename G::Scalar, Complex>,
                                 ArrayXc, ArrayXr>;
  Out out = Out::Zero(nlags);
  const int nw = static_cast<int>(w.size()), ng = static_cast<int>(g.size());
  for (int i = 0; i < nlags; ++i) {
    const int mhi = std::min(nw, ng + i);
    typename Out::Scalar acc{};
    for (int m = i; m < mhi; ++m) acc += w(m) * g(m - i);
    out(i) = acc;
  }
  return out;
}

// Cross-frame and local-prior message set of one frame (all length L).
struct FrameMessages {
  ArrayXr fwd_support;   // lambda ->
  ArrayXr bwd_support;   // lambda <-
  ArrayXc fwd_amp_mean;  // eta ->
  ArrayXr fwd_amp_var;   // kappa ->  (+inf = uninformative)
  ArrayXc bwd_amp_mean;  // eta <-
  ArrayXr bwd_amp_var;   // kappa <-
  ArrayXr prior_support;  // pi ->
  ArrayXc prior_amp_mean; // xi ->
  ArrayXr prior_amp_var;  // psi ->
  ArrayXr out_support;   // pi <-
  ArrayXc out_amp_mean;  // xi <-
  ArrayXr out_amp_var;   // psi <-

  static FrameMessages init(const HyperParams& hyper, int taps);
};

struct LocalPrior {
  ArrayXr support;   // pi ->
  ArrayXc amp_mean;  // xi ->
  ArrayXr amp_var;   // psi ->
};

struct PosteriorChannel {
  ArrayXr pi;
  ArrayXc gamma;
  ArrayXr nu;
};

// Within-stage working state of one frame.  s_hat/p_hat live in the signal
// domain in time mode and in the DFT domain in frequency mode.
struct BiGampState {
  ArrayXc q_hat;  // extrinsic channel mean (L)
  ArrayXr q_var;
  ArrayXc r_hat;  // extrinsic symbol mean (M); pilot/guard entries pinned
  ArrayXr r_var;
  ArrayXc h_hat;  // posterior channel (L)
  ArrayXr h_var;
  ArrayXc x_hat;  // posterior symbols (M)
  ArrayXr x_var;
  ArrayXc s_hat;  // Taylor term (M)
  ArrayXc p_hat;  // damping memory (M)
  ArrayXr p_var;
  bool has_posterior = false;
  bool has_p = false;

  static BiGampState init(const ArrayXr& pilot, const FrameConfig& cfg, const ArrayXc& q_init,
                          Real q_var_init);
};

// ---- the four stages ----

LocalPrior into_stage(const FrameMessages& msgs);

// step I, channel side (Eq. 18-23 with the Bernoulli-Gaussian second moment)
PosteriorChannel channel_posterior(const LocalPrior& prior, const ArrayXc& q_hat,
                                   const ArrayXr& q_var, ArrayXc* h_hat, ArrayXr* h_var);

// step I, symbol side; symbol_log_prior is n_data x |alphabet|
void symbol_posterior(const ArrayXc& r_hat, const ArrayXr& r_var,
                      const Eigen::MatrixXd& symbol_log_prior, const SymbolAlphabet& alphabet,
                      ArrayXc* x_hat, ArrayXr* x_var);

struct ZConditional {
  ArrayXc z_full;  // \hat z^{(*,*)}
  ArrayXr v_bar;
  ArrayXr v_p;
  ArrayXc p_hat;
};
ZConditional z_conditional(const ArrayXc& h_hat, const ArrayXr& h_var, const ArrayXc& x_hat,
                           const ArrayXr& x_var, const ArrayXc& s_hat);

void z_posterior(const ArrayXc& p_hat, const ArrayXr& v_p, const ArrayXc& y, Real noise_var,
                 ArrayXc* z_hat, ArrayXr* z_var);

void s_update(const ArrayXc& z_hat, const ArrayXr& z_var, const ArrayXc& p_hat,
              const ArrayXr& v_p, ArrayXc* s_hat, ArrayXr* s_var);

struct ExtrinsicUpdate {
  ArrayXc q_hat;
  ArrayXr q_var;
  ArrayXc r_hat;
  ArrayXr r_var;
};
ExtrinsicUpdate extrinsic_update(const ArrayXc& h_hat, const ArrayXr& h_var, const ArrayXc& x_hat,
                                 const ArrayXr& x_var, const ArrayXc& s_hat,
                                 const ArrayXr& s_var);

struct WithinResult {
  int iterations = 0;
  bool diverged = false;
};

// Runs inner BiGAMP iterations (steps I-V) in the requested domain, mutating
// the state.  Stops on the relative z-change breakout or on divergence
// (best-so-far state is restored and the flag set).
WithinResult within_stage(BiGampState& st, const LocalPrior& prior, const ArrayXc& y,
                          Real noise_var, const Eigen::MatrixXd& symbol_log_prior,
                          const SymbolAlphabet& alphabet, const FrameConfig& cfg,
                          const TurboConfig& tcfg);

// message f -> (s, theta): support per Eq. 45, amplitude via the
// Gaussian-mixture collapse (Table II, epsilon = kTaylorEps)
void out_stage(const LocalPrior& prior, const ArrayXc& q_hat, const ArrayXr& q_var,
               ArrayXr* out_support, ArrayXc* out_amp_mean, ArrayXr* out_amp_var);

struct AcrossMessages {
  ArrayXr support;   // lambda
  ArrayXc amp_mean;  // eta
  ArrayXr amp_var;   // kappa
};

// messages passed from frame k to frame k+1
AcrossMessages across_forward(const FrameMessages& msgs, const HyperParams& hyper);
// messages passed from frame k+1 back to frame k
AcrossMessages across_backward(const FrameMessages& msgs, const HyperParams& hyper);

// per-symbol log prior from a priori bit LLRs (n_data x Q, L = ln p0/p1)
Eigen::MatrixXd symbol_log_prior_from_llrs(const Eigen::MatrixXd& bit_llrs,
                                           const SymbolAlphabet& alphabet);

}  // namespace dcsjced
