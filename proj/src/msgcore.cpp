#include "dcsjced/msgcore.hpp"

#include <unsupported/Eigen/FFT>

namespace dcsjced {

FrameMessages FrameMessages::init(const HyperParams& hyper, int taps) {
  FrameMessages m;
  m.fwd_support = ArrayXr::Constant(taps, hyper.lambda);
  m.bwd_support = ArrayXr::Constant(taps, 0.5);
  m.fwd_amp_mean = ArrayXc::Constant(taps, hyper.zeta);
  m.fwd_amp_var = ArrayXr::Constant(taps, hyper.sigma_sq());
  m.bwd_amp_mean = ArrayXc::Zero(taps);
  m.bwd_amp_var = ArrayXr::Constant(taps, kInfVar);
  m.prior_support = ArrayXr::Constant(taps, hyper.lambda);
  m.prior_amp_mean = ArrayXc::Constant(taps, hyper.zeta);
  m.prior_amp_var = ArrayXr::Constant(taps, hyper.sigma_sq());
  m.out_support = ArrayXr::Constant(taps, 0.5);
  m.out_amp_mean = ArrayXc::Zero(taps);
  m.out_amp_var = ArrayXr::Constant(taps, kInfVar);
  return m;
}

BiGampState BiGampState::init(const ArrayXr& pilot, const FrameConfig& cfg, const ArrayXc& q_init,
                              Real q_var_init) {
  const int M = cfg.frame_len();
  BiGampState st;
  st.q_hat = q_init;
  st.q_var = ArrayXr::Constant(cfg.channel_len, q_var_init);
  st.r_hat = ArrayXc::Zero(M);
  st.r_var = ArrayXr::Constant(M, kPinVar);
  st.r_hat.head(cfg.n_pilot) = pilot.cast<Complex>();
  st.r_var.segment(cfg.n_pilot, cfg.n_data).setConstant(1.0);
  st.h_hat = ArrayXc::Zero(cfg.channel_len);
  st.h_var = ArrayXr::Zero(cfg.channel_len);
  st.x_hat = ArrayXc::Zero(M);
  st.x_var = ArrayXr::Zero(M);
  st.s_hat = ArrayXc::Zero(M);
  st.p_hat = ArrayXc::Zero(M);
  st.p_var = ArrayXr::Zero(M);
  return st;
}

LocalPrior into_stage(const FrameMessages& msgs) {
  const int L = static_cast<int>(msgs.fwd_support.size());
  LocalPrior p;
  p.support.resize(L);
  p.amp_mean.resize(L);
  p.amp_var.resize(L);
  for (int i = 0; i < L; ++i) {
    const Real lf = clamp_prob(msgs.fwd_support(i));
    const Real lb = clamp_prob(msgs.bwd_support(i));
    p.support(i) = clamp_prob(lb * lf / ((1 - lb) * (1 - lf) + lb * lf));
    const Real kf = msgs.fwd_amp_var(i);
    const Real kb = msgs.bwd_amp_var(i);
    if (std::isinf(kb)) {  // uninformative backward message
      p.amp_var(i) = kf;
      p.amp_mean(i) = msgs.fwd_amp_mean(i);
    } else if (std::isinf(kf)) {
      p.amp_var(i) = kb;
      p.amp_mean(i) = msgs.bwd_amp_mean(i);
    } else {
      const Real v = 1.0 / (1.0 / kb + 1.0 / kf);
      p.amp_var(i) = std::max(v, kVarFloor);
      p.amp_mean(i) = v * (msgs.bwd_amp_mean(i) / kb + msgs.fwd_amp_mean(i) / kf);
    }
  }
  return p;
}

PosteriorChannel channel_posterior(const LocalPrior& prior, const ArrayXc& q_hat,
                                   const ArrayXr& q_var, ArrayXc* h_hat, ArrayXr* h_var) {
  const int L = static_cast<int>(q_hat.size());
  PosteriorChannel post;
  post.pi.resize(L);
  post.gamma.resize(L);
  post.nu.resize(L);
  h_hat->resize(L);
  h_var->resize(L);
  for (int i = 0; i < L; ++i) {
    const Real qv = q_var(i);
    const Real pv = prior.amp_var(i);
    const Real nu = 1.0 / (1.0 / qv + 1.0 / pv);
    const Complex gamma = nu * (q_hat(i) / qv + prior.amp_mean(i) / pv);
    const Real pf = clamp_prob(prior.support(i));
    // odds of support off vs on, in the log domain
    const Real log_off = std::log1p(-pf) + log_cn0(q_hat(i), qv);
    const Real log_on = std::log(pf) + log_cn0(q_hat(i) - prior.amp_mean(i), qv + pv);
    const Real d = std::min(std::max(log_off - log_on, -700.0), 700.0);
    const Real pi = 1.0 / (1.0 + std::exp(d));
    post.pi(i) = pi;
    post.gamma(i) = gamma;
    post.nu(i) = std::max(nu, kVarFloor);
    (*h_hat)(i) = pi * gamma;
    const Real second = pi * (std::norm(gamma) + nu);  // Bernoulli-Gaussian second moment
    (*h_var)(i) = std::max(second - std::norm((*h_hat)(i)), kVarFloor);
  }
  return post;
}

void symbol_posterior(const ArrayXc& r_hat, const ArrayXr& r_var,
                      const Eigen::MatrixXd& symbol_log_prior, const SymbolAlphabet& alphabet,
                      ArrayXc* x_hat, ArrayXr* x_var) {
  const int n = static_cast<int>(r_hat.size());
  const int A = alphabet.size();
  x_hat->resize(n);
  x_var->resize(n);
  for (int j = 0; j < n; ++j) {
    Real lmax = -std::numeric_limits<Real>::infinity();
    Eigen::ArrayXd logp(A);
    for (int a = 0; a < A; ++a) {
      logp(a) = symbol_log_prior(j, a) - std::norm(alphabet.points(a) - r_hat(j)) / r_var(j);
      lmax = std::max(lmax, logp(a));
    }
    const Eigen::ArrayXd pmf = (logp - lmax).exp();
    const Real z = pmf.sum();
    Complex mean{0, 0};
    for (int a = 0; a < A; ++a) mean += pmf(a) * alphabet.points(a);
    mean /= z;
    Real var = 0;
    for (int a = 0; a < A; ++a) var += pmf(a) * std::norm(alphabet.points(a) - mean);
    (*x_hat)(j) = mean;
    (*x_var)(j) = std::max(var / z, kVarFloor);
  }
}

ZConditional z_conditional(const ArrayXc& h_hat, const ArrayXr& h_var, const ArrayXc& x_hat,
                           const ArrayXr& x_var, const ArrayXc& s_hat) {
  const int M = static_cast<int>(x_hat.size());
  ZConditional out;
  out.z_full = conv_trunc(h_hat, x_hat, M);
  out.v_bar = conv_trunc(h_var, x_hat.abs2().eval(), M) + conv_trunc(h_hat.abs2().eval(), x_var, M);
  out.v_p = (out.v_bar + conv_trunc(h_var, x_var, M)).max(kVarFloor);
  out.p_hat = out.z_full - s_hat * out.v_bar.cast<Complex>();
  return out;
}

void z_posterior(const ArrayXc& p_hat, const ArrayXr& v_p, const ArrayXc& y, Real noise_var,
                 ArrayXc* z_hat, ArrayXr* z_var) {
  const ArrayXr mz = 1.0 / (1.0 / v_p + 1.0 / noise_var);
  *z_hat = mz.cast<Complex>() * (y / noise_var + p_hat / v_p.cast<Complex>());
  *z_var = mz;
}

void s_update(const ArrayXc& z_hat, const ArrayXr& z_var, const ArrayXc& p_hat,
              const ArrayXr& v_p, ArrayXc* s_hat, ArrayXr* s_var) {
  *s_hat = (z_hat - p_hat) / v_p.cast<Complex>();
  *s_var = ((1.0 - z_var / v_p) / v_p).max(0.0);
}

ExtrinsicUpdate extrinsic_update(const ArrayXc& h_hat, const ArrayXr& h_var, const ArrayXc& x_hat,
                                 const ArrayXr& x_var, const ArrayXc& s_hat,
                                 const ArrayXr& s_var) {
  const int L = static_cast<int>(h_hat.size());
  const int M = static_cast<int>(x_hat.size());
  ExtrinsicUpdate out;
  const ArrayXr xabs2 = x_hat.abs2();
  const ArrayXr habs2 = h_hat.abs2();
  out.q_var = (1.0 / xcorr_lags(s_var, xabs2, L).max(1e-300)).min(1e12);
  const ArrayXc qcorr = xcorr_lags(s_hat, x_hat.conjugate().eval(), L);
  const ArrayXr ons_h = xcorr_lags(s_var, x_var, L);
  out.q_hat = h_hat + out.q_var.cast<Complex>() * qcorr -
              (out.q_var * ons_h).cast<Complex>() * h_hat;
  out.r_var = (1.0 / xcorr_lags(s_var, habs2, M).max(1e-300)).min(1e12);
  const ArrayXc rcorr = xcorr_lags(s_hat, h_hat.conjugate().eval(), M);
  const ArrayXr ons_x = xcorr_lags(s_var, h_var, M);
  out.r_hat = x_hat + out.r_var.cast<Complex>() * rcorr -
              (out.r_var * ons_x).cast<Complex>() * x_hat;
  return out;
}

Eigen::MatrixXd symbol_log_prior_from_llrs(const Eigen::MatrixXd& bit_llrs,
                                           const SymbolAlphabet& alphabet) {
  const int n = static_cast<int>(bit_llrs.rows());
  const int Q = alphabet.bits();
  const int A = alphabet.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, A);
  for (int a = 0; a < A; ++a) {
    for (int q = 0; q < Q; ++q) {
      const Real sign = alphabet.bit_labels(a, q) == 0 ? 1.0 : -1.0;
      for (int j = 0; j < n; ++j) {
        const Real l = clamp_llr(bit_llrs(j, q));
        // log p(c = chi) = -log(1 + exp(-sign * L))
        const Real t = -sign * l;
        out(j, a) += -(t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)));
      }
    }
  }
  return out;
}

namespace {

struct Snapshot {
  ArrayXc q_hat, r_hat, h_hat, x_hat, s_hat;
  ArrayXr q_var, r_var, h_var, x_var;
};

Snapshot take(const BiGampState& st) {
  return {st.q_hat, st.r_hat, st.h_hat, st.x_hat, st.s_hat,
          st.q_var, st.r_var, st.h_var, st.x_var};
}

void restore(BiGampState& st, const Snapshot& s) {
  st.q_hat = s.q_hat;
  st.r_hat = s.r_hat;
  st.h_hat = s.h_hat;
  st.x_hat = s.x_hat;
  st.s_hat = s.s_hat;
  st.q_var = s.q_var;
  st.r_var = s.r_var;
  st.h_var = s.h_var;
  st.x_var = s.x_var;
}

// forward DFT scaled so that dft_m(z) = (F x / sqrtM) .* (F h / sqrtM) for
// z = circular conv of x and h
ArrayXc fft_forward(Eigen::FFT<Real>& fft, const ArrayXc& in, int n, Real scale) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  v.head(in.size()) = in.matrix();
  Eigen::VectorXcd out(n);
  fft.fwd(out, v);
  return out.array() * scale;
}

ArrayXc fft_inverse(Eigen::FFT<Real>& fft, const ArrayXc& in, Real scale) {
  Eigen::VectorXcd v = in.matrix();
  Eigen::VectorXcd out(v.size());
  fft.inv(out, v);
  return out.array() * scale;
}

}  // namespace

WithinResult within_stage(BiGampState& st, const LocalPrior& prior, const ArrayXc& y,
                          Real noise_var, const Eigen::MatrixXd& symbol_log_prior,
                          const SymbolAlphabet& alphabet, const FrameConfig& cfg,
                          const TurboConfig& tcfg) {
  const int M = cfg.frame_len();
  const int L = cfg.channel_len;
  const int d0 = cfg.n_pilot;
  const int nd = cfg.n_data;
  const bool fd = tcfg.domain == Domain::kFrequency;
  const Real beta = tcfg.damping;

  // the Taylor term restarts with each visit; damping memory likewise
  st.s_hat.setZero();
  st.has_p = false;

  Eigen::FFT<Real> fft;
  const Real sqm = std::sqrt(static_cast<Real>(M));
  ArrayXc y_obs = y;
  Real obs_noise = noise_var;
  if (fd) {
    y_obs = fft_forward(fft, y, M, 1.0 / M);  // y_bar = F y / M
    obs_noise = noise_var / M;
  }
  const Real yref = y_obs.abs2().sum();

  WithinResult res;
  Snapshot best;
  Real best_resid = std::numeric_limits<Real>::infinity();
  bool have_best = false;
  ArrayXc z_prev;
  bool have_prev = false;

  for (int t = 0; t < tcfg.t_inner; ++t) {
    res.iterations = t + 1;
    // ---- step I ----
    ArrayXc h_new;
    ArrayXr hvar_new;
    channel_posterior(prior, st.q_hat, st.q_var, &h_new, &hvar_new);
    ArrayXc xd;
    ArrayXr xdv;
    symbol_posterior(st.r_hat.segment(d0, nd), st.r_var.segment(d0, nd), symbol_log_prior,
                     alphabet, &xd, &xdv);
    ArrayXc x_new = st.r_hat;  // pilot/guard copy through their pinned means
    ArrayXr xvar_new = ArrayXr::Zero(M);
    x_new.segment(d0, nd) = xd;
    x_new.tail(cfg.n_guard).setZero();
    xvar_new.segment(d0, nd) = xdv;
    if (beta < 1.0 && st.has_posterior) {
      st.h_hat = beta * h_new + (1 - beta) * st.h_hat;
      st.h_var = beta * hvar_new + (1 - beta) * st.h_var;
      st.x_hat = beta * x_new + (1 - beta) * st.x_hat;
      st.x_var = beta * xvar_new + (1 - beta) * st.x_var;
    } else {
      st.h_hat = h_new;
      st.h_var = hvar_new;
      st.x_hat = x_new;
      st.x_var = xvar_new;
    }
    st.has_posterior = true;

    // ---- step II ----
    ArrayXc p_hat, z_cur;
    ArrayXr v_p;
    ArrayXc Hbar, Xbar;
    Real sum_hv = 0, sum_xv = 0;
    if (!fd) {
      ZConditional zc = z_conditional(st.h_hat, st.h_var, st.x_hat, st.x_var, st.s_hat);
      p_hat = zc.p_hat;
      v_p = zc.v_p;
      z_cur = zc.z_full;
    } else {
      Hbar = fft_forward(fft, st.h_hat, M, 1.0 / sqm);
      Xbar = fft_forward(fft, st.x_hat, M, 1.0 / sqm);
      sum_hv = st.h_var.sum();
      sum_xv = st.x_var.sum();
      const ArrayXr vbar = (sum_xv / M) * Hbar.abs2() + (sum_hv / M) * Xbar.abs2();
      v_p = (vbar + (sum_xv / M) * (sum_hv / M)).max(kVarFloor);
      z_cur = Xbar * Hbar;
      p_hat = z_cur - st.s_hat * vbar.cast<Complex>();
    }
    if (beta < 1.0 && st.has_p) {
      p_hat = beta * p_hat + (1 - beta) * st.p_hat;
      v_p = beta * v_p + (1 - beta) * st.p_var;
    }
    st.p_hat = p_hat;
    st.p_var = v_p;
    st.has_p = true;

    // ---- step III ----
    ArrayXc z_hat;
    ArrayXr z_var;
    z_posterior(p_hat, v_p, y_obs, obs_noise, &z_hat, &z_var);

    // ---- step IV ----
    ArrayXc s_hat;
    ArrayXr s_var;
    s_update(z_hat, z_var, p_hat, v_p, &s_hat, &s_var);
    st.s_hat = s_hat;

    // ---- step V ----
    ArrayXc q_hat, r_hat;
    ArrayXr q_var, r_var;
    if (!fd) {
      ExtrinsicUpdate ext = extrinsic_update(st.h_hat, st.h_var, st.x_hat, st.x_var, s_hat, s_var);
      q_hat = ext.q_hat;
      q_var = ext.q_var;
      r_hat = ext.r_hat;
      r_var = ext.r_var;
    } else {
      const Real sum_sv = s_var.sum();
      const Real qv = std::min(M / std::max((s_var * Xbar.abs2()).sum(), 1e-300), 1e12);
      const Real rv = std::min(M / std::max((s_var * Hbar.abs2()).sum(), 1e-300), 1e12);
      const ArrayXc qc = fft_inverse(fft, (Xbar.conjugate() * s_hat).eval(), sqm);
      q_hat = st.h_hat + qv * qc.head(L) - (qv * (sum_sv / M) * (sum_xv / M)) * st.h_hat;
      q_var = ArrayXr::Constant(L, qv);
      const ArrayXc rc = fft_inverse(fft, (Hbar.conjugate() * s_hat).eval(), sqm);
      r_hat = st.x_hat + rv * rc - (rv * (sum_sv / M) * (sum_hv / M)) * st.x_hat;
      r_var = ArrayXr::Constant(M, rv);
    }

    // divergence guard (vp overflow, runaway residual or channel norm, NaN)
    const Real resid = (y_obs - z_cur).abs2().sum();
    const bool bad = !std::isfinite(resid) || v_p.maxCoeff() > 1e9 ||
                     !q_hat.allFinite() || !r_hat.allFinite() ||
                     resid > std::max(100.0 * best_resid, 10.0 * yref) ||
                     st.h_hat.abs2().sum() > std::max(1.0, 10.0 * yref);
    if (bad) {
      if (have_best) restore(st, best);
      res.diverged = true;
      break;
    }

    st.q_hat = q_hat;
    st.q_var = q_var.max(kVarFloor);
    st.r_hat.segment(d0, nd) = r_hat.segment(d0, nd);
    st.r_var.segment(d0, nd) = r_var.segment(d0, nd).max(kVarFloor);

    if (resid < best_resid) {
      best_resid = resid;
      best = take(st);
      have_best = true;
    }
    if (have_prev) {
      const Real n0 = std::sqrt(z_prev.abs2().sum());
      if (n0 > 0 && std::sqrt((z_cur - z_prev).abs2().sum()) / n0 < tcfg.breakout_tol) break;
    }
    z_prev = z_cur;
    have_prev = true;
  }
  return res;
}

void out_stage(const LocalPrior& prior, const ArrayXc& q_hat, const ArrayXr& q_var,
               ArrayXr* out_support, ArrayXc* out_amp_mean, ArrayXr* out_amp_var) {
  const int L = static_cast<int>(q_hat.size());
  out_support->resize(L);
  out_amp_mean->resize(L);
  out_amp_var->resize(L);
  const Real eps = kTaylorEps;
  for (int i = 0; i < L; ++i) {
    const Real qv = q_var(i);
    // support message, Eq. 45 evaluated in the log domain
    const Real l1 = log_cn0(q_hat(i) - prior.amp_mean(i), qv + prior.amp_var(i));
    const Real l0 = log_cn0(q_hat(i), qv);
    const Real dd = std::min(std::max(l0 - l1, -700.0), 700.0);
    (*out_support)(i) = clamp_prob(1.0 / (1.0 + std::exp(dd)));

    // amplitude message: Gaussian-mixture collapse, rows A1-A10.
    // Every term is divided by e^b so the evaluation stays finite for any b.
    const Real pf = clamp_prob(prior.support(i));
    const Real om = eps * eps * pf / (1.0 - pf + eps * eps * pf);
    const Real a = eps * eps * (1.0 - om);
    const Real ab = om;
    const Real b = (eps * eps / qv) * std::norm((1.0 - 1.0 / eps) * q_hat(i));
    const Real sr = -(2.0 * eps * eps / qv) * (1.0 - 1.0 / eps) * q_hat(i).real();
    const Real si = -(2.0 * eps * eps / qv) * (1.0 - 1.0 / eps) * q_hat(i).imag();
    const Real enb = std::exp(-std::min(b, 700.0));
    const Real num = a * a * enb * enb + a * ab * enb + ab * ab;
    const Real den = eps * eps * a * a * enb * enb +
                     a * ab * enb * (eps * eps + 1.0 - 0.5 * qv * sr * sr) + ab * ab;
    const Real psi = std::max(num * qv / den, kVarFloor);
    const Real fr = (-a * enb * sr) / (a * enb + ab);
    const Real fi = (-a * enb * si) / (a * enb + ab);
    (*out_amp_var)(i) = psi;
    (*out_amp_mean)(i) =
        Complex(q_hat(i).real() - 0.5 * psi * fr, q_hat(i).imag() - 0.5 * psi * fi);
  }
}

AcrossMessages across_forward(const FrameMessages& msgs, const HyperParams& hyper) {
  const int L = static_cast<int>(msgs.fwd_support.size());
  AcrossMessages out;
  out.support.resize(L);
  out.amp_mean.resize(L);
  out.amp_var.resize(L);
  const Real p01 = hyper.p01, p11 = hyper.p11();
  for (int i = 0; i < L; ++i) {
    const Real lf = clamp_prob(msgs.fwd_support(i));
    const Real po = clamp_prob(msgs.out_support(i));
    const Real den = (1 - po) * (1 - lf) + po * lf;
    out.support(i) = clamp_prob((p11 * po * lf + p01 * (1 - po) * (1 - lf)) / den);

    const Real kf = msgs.fwd_amp_var(i);
    const Real ps = msgs.out_amp_var(i);
    Real C;
    Complex c;
    if (std::isinf(kf)) {
      C = ps;
      c = msgs.out_amp_mean(i);
    } else if (std::isinf(ps)) {
      C = kf;
      c = msgs.fwd_amp_mean(i);
    } else {
      C = kf * ps / (kf + ps);
      c = (msgs.fwd_amp_mean(i) * ps + msgs.out_amp_mean(i) * kf) / (kf + ps);
    }
    out.amp_mean(i) = (1.0 - hyper.varrho) * c + hyper.varrho * hyper.zeta;
    out.amp_var(i) = std::max((1.0 - hyper.varrho) * (1.0 - hyper.varrho) * C +
                                  hyper.varrho * hyper.varrho * hyper.rho,
                              kVarFloor);
  }
  return out;
}

AcrossMessages across_backward(const FrameMessages& msgs, const HyperParams& hyper) {
  const int L = static_cast<int>(msgs.fwd_support.size());
  AcrossMessages out;
  out.support.resize(L);
  out.amp_mean.resize(L);
  out.amp_var.resize(L);
  const Real p01 = hyper.p01, p11 = hyper.p11();
  const Real p10 = hyper.p10(), p00 = hyper.p00();
  const Real vr = hyper.varrho;
  for (int i = 0; i < L; ++i) {
    const Real po = clamp_prob(msgs.out_support(i));
    const Real lb = clamp_prob(msgs.bwd_support(i));
    const Real tau = po * lb / (po * lb + (1 - po) * (1 - lb));
    const Real on = p11 * tau + p01 * (1 - tau);   // s[k] = 1
    const Real off = p10 * tau + p00 * (1 - tau);  // s[k] = 0
    out.support(i) = clamp_prob(on / (on + off));

    const Real ps = msgs.out_amp_var(i);
    const Real kb = msgs.bwd_amp_var(i);
    Real C;
    Complex c;
    if (std::isinf(kb)) {
      C = ps;
      c = msgs.out_amp_mean(i);
    } else if (std::isinf(ps)) {
      C = kb;
      c = msgs.bwd_amp_mean(i);
    } else {
      C = ps * kb / (ps + kb);
      c = (msgs.out_amp_mean(i) * kb + msgs.bwd_amp_mean(i) * ps) / (ps + kb);
    }
    if (vr >= 1.0 || std::isinf(C)) {  // no information survives the transition
      out.amp_mean(i) = Complex(0, 0);
      out.amp_var(i) = kInfVar;
    } else {
      out.amp_mean(i) = (c - vr * hyper.zeta) / (1.0 - vr);
      out.amp_var(i) = std::max((C + vr * vr * hyper.rho) / ((1.0 - vr) * (1.0 - vr)), kVarFloor);
    }
  }
  return out;
}

}  // namespace dcsjced
