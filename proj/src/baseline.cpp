#include "dcsjced/baseline.hpp"

#include "dcsjced/modem.hpp"

namespace dcsjced {

LmmseEstimate lmmse_channel_estimate(const ArrayXc& y, const ArrayXr& pilot, int channel_len,
                                     Real noise_var) {
  const int np = static_cast<int>(pilot.size());
  const int L = channel_len;
  if (np < L) throw std::invalid_argument("lmmse: pilot span shorter than channel");
  MatrixXc P = MatrixXc::Zero(np, L);
  for (int n = 0; n < np; ++n)
    for (int l = 0; l <= std::min(L - 1, n); ++l) P(n, l) = Complex(pilot(n - l), 0.0);
  MatrixXc A = P.adjoint() * P;
  A.diagonal().array() += noise_var;
  const Eigen::LDLT<MatrixXc> ldlt(A);
  LmmseEstimate est;
  est.h_hat = ldlt.solve(P.adjoint() * y.head(np).matrix()).array();
  est.cov = noise_var * ldlt.solve(MatrixXc::Identity(L, L));
  return est;
}

MmseSoftOutput mmse_equalize_frame(const ArrayXc& y, const ArrayXc& h, const ArrayXc& x_prior_mean,
                                   const ArrayXr& x_prior_var, int data_begin, int data_len,
                                   const MmseConfig& cfg, Real noise_var) {
  const int M = static_cast<int>(y.size());
  const int L = static_cast<int>(h.size());
  MmseSoftOutput out;
  out.r.resize(data_len);
  out.var.resize(data_len);
  for (int t = 0; t < data_len; ++t) {
    const int n = data_begin + t;
    const int lo = std::max(0, n - cfg.n2);
    const int hi = std::min(M - 1, n + cfg.n1);
    const int W = hi - lo + 1;
    const int xlo = std::max(0, lo - (L - 1));
    const int Xn = hi - xlo + 1;
    MatrixXc H = MatrixXc::Zero(W, Xn);
    for (int w = 0; w < W; ++w) {
      for (int l = 0; l < L; ++l) {
        const int j = lo + w - l;
        if (j >= xlo && j <= hi) H(w, j - xlo) = h(l);
      }
    }
    Eigen::VectorXcd xb(Xn);
    Eigen::VectorXd xv(Xn);
    for (int j = 0; j < Xn; ++j) {
      xb(j) = x_prior_mean(xlo + j);
      xv(j) = x_prior_var(xlo + j);
    }
    const int tgt = n - xlo;
    xb(tgt) = Complex(0, 0);
    xv(tgt) = 1.0;
    MatrixXc Sig = H * xv.asDiagonal() * H.adjoint();
    Sig.diagonal().array() += noise_var;
    const Eigen::VectorXcd hcol = H.col(tgt);
    const Eigen::VectorXcd f = Sig.ldlt().solve(hcol);
    const Complex z = f.dot(y.segment(lo, W).matrix() - H * xb);  // f^H (y - H xbar)
    Real g = f.dot(hcol).real();
    g = std::min(std::max(g, 1e-12), 1.0 - 1e-9);
    out.r(t) = z / g;
    out.var(t) = (1.0 - g) / g;
  }
  return out;
}

ArrayXr mmse_turbo_equalize(const ArrayXc& y, const ArrayXc& h_hat,
                            const Eigen::MatrixXd& bit_llrs, const ArrayXr& pilot,
                            const FrameConfig& fc, const SymbolAlphabet& alphabet,
                            const MmseConfig& cfg, Real noise_var) {
  const int M = fc.frame_len();
  ArrayXc xbar = ArrayXc::Zero(M);
  ArrayXr xvar = ArrayXr::Zero(M);
  xbar.head(fc.n_pilot) = pilot.cast<Complex>();
  // soft symbol priors on the data span
  const Eigen::MatrixXd pmf = apriori_symbol_probs(bit_llrs, alphabet);
  for (int j = 0; j < fc.n_data; ++j) {
    Complex m{0, 0};
    for (int a = 0; a < alphabet.size(); ++a) m += pmf(j, a) * alphabet.points(a);
    Real v = 0;
    for (int a = 0; a < alphabet.size(); ++a)
      v += pmf(j, a) * std::norm(alphabet.points(a) - m);
    xbar(fc.n_pilot + j) = m;
    xvar(fc.n_pilot + j) = v;
  }
  const MmseSoftOutput soft =
      mmse_equalize_frame(y, h_hat, xbar, xvar, fc.n_pilot, fc.n_data, cfg, noise_var);
  return extrinsic_llr(soft.r, soft.var, bit_llrs, alphabet);
}

EqualizerOutput run_mmse_turbo(const TurboInputs& in, const MmseConfig& cfg, Real noise_var) {
  const int K = static_cast<int>(in.received.size());
  const FrameConfig& fc = in.frame_cfg;
  const int Q = fc.bits_per_symbol;
  EqualizerOutput out;
  out.diag.resize(K);
  out.info_bits_per_iter.assign(cfg.t_turbo, std::vector<ArrayXi>(K));
  out.h_hat_per_iter.assign(cfg.t_turbo, std::vector<ArrayXc>(K));
  for (int k = 0; k < K; ++k) {
    const LmmseEstimate est =
        lmmse_channel_estimate(in.received[k], in.pilot, fc.channel_len, noise_var);
    Eigen::MatrixXd bit_llrs = Eigen::MatrixXd::Zero(fc.n_data, Q);
    ArrayXr lext;
    for (int t = 0; t < cfg.t_turbo; ++t) {
      lext = mmse_turbo_equalize(in.received[k], est.h_hat, bit_llrs, in.pilot, fc, in.alphabet,
                                 cfg, noise_var);
      const ArrayXr chan_llr = deinterleave(lext, in.interleavers[k]);
      const DecodeResult dec = in.code->decode_spa(chan_llr, 50);
      const ArrayXr fed = interleave(dec.extrinsic, in.interleavers[k]);
      for (int j = 0; j < fc.n_data; ++j)
        for (int q = 0; q < Q; ++q) bit_llrs(j, q) = clamp_llr(fed(j * Q + q));
      out.info_bits_per_iter[t][k] = in.code->extract_info(dec.hard_bits);
      out.h_hat_per_iter[t][k] = est.h_hat;
      if (t == cfg.t_turbo - 1) {
        out.info_bits.push_back(out.info_bits_per_iter[t][k]);
        out.extrinsic_llrs.push_back(lext);
        out.h_hat.push_back(est.h_hat);
        out.h_var.push_back(est.cov.diagonal().real().array());
      }
    }
  }
  return out;
}

EqualizerOutput jced_single_frame(const TurboInputs& in, const TurboConfig& cfg,
                                  const HyperParams& hyper, Real noise_var, RngStream& init_rng) {
  const int K = static_cast<int>(in.received.size());
  EqualizerOutput out;
  out.diag.resize(K);
  out.info_bits_per_iter.assign(cfg.t_turbo, std::vector<ArrayXi>(K));
  out.h_hat_per_iter.assign(cfg.t_turbo, std::vector<ArrayXc>(K));
  ArrayXc warm;
  for (int k = 0; k < K; ++k) {
    TurboInputs one;
    one.received = {in.received[k]};
    one.pilot = in.pilot;
    one.code = in.code;
    one.interleavers = {in.interleavers[k]};
    one.alphabet = in.alphabet;
    one.frame_cfg = in.frame_cfg;
    one.q_warm_start = (k > 0) ? &warm : nullptr;
    EqualizerOutput r = run_dcs_jced(one, cfg, hyper, noise_var, init_rng);
    warm = r.h_hat[0];  // a posteriori channel mean initializes the next frame
    out.info_bits.push_back(r.info_bits[0]);
    out.extrinsic_llrs.push_back(r.extrinsic_llrs[0]);
    out.h_hat.push_back(r.h_hat[0]);
    out.h_var.push_back(r.h_var[0]);
    out.diag[k] = r.diag[0];
    for (int t = 0; t < cfg.t_turbo; ++t) {
      out.info_bits_per_iter[t][k] = r.info_bits_per_iter[t][0];
      out.h_hat_per_iter[t][k] = r.h_hat_per_iter[t][0];
    }
  }
  return out;
}

}  // namespace dcsjced
