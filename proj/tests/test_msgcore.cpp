#include <doctest.h>

#include "dcsjced/channel.hpp"
#include "dcsjced/modem.hpp"
#include "dcsjced/msgcore.hpp"
#include "dcsjced/rng.hpp"
#include "oracles.hpp"

#include <unsupported/Eigen/FFT>

using namespace dcsjced;

namespace {

ArrayXc cvec(RngStream& rng, int n, Real scale = 1.0) {
  ArrayXc v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_cgauss(scale * scale * 2.0);
  return v;
}

ArrayXr rvec(RngStream& rng, int n, Real lo, Real hi) {
  ArrayXr v(n);
  for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * rng.next_double();
  return v;
}

}  // namespace

TEST_CASE("into stage: sentinels reduce to the forward messages") {
  HyperParams h;
  FrameMessages m = FrameMessages::init(h, 4);
  m.fwd_support.setConstant(0.37);
  m.fwd_amp_mean.setConstant(Complex(0.5, -0.25));
  m.fwd_amp_var.setConstant(0.01);
  const LocalPrior p = into_stage(m);
  for (int i = 0; i < 4; ++i) {
    CHECK(p.support(i) == doctest::Approx(0.37));
    CHECK(p.amp_mean(i) == Complex(0.5, -0.25));
    CHECK(p.amp_var(i) == doctest::Approx(0.01));
  }
}

TEST_CASE("into stage: symmetric supports combine to one half") {
  HyperParams h;
  FrameMessages m = FrameMessages::init(h, 1);
  m.fwd_support.setConstant(0.5);
  m.bwd_support.setConstant(0.5);
  const LocalPrior p = into_stage(m);
  CHECK(p.support(0) == doctest::Approx(0.5));
}

TEST_CASE("into stage: equal-variance gaussian product is the midpoint") {
  HyperParams h;
  FrameMessages m = FrameMessages::init(h, 1);
  m.fwd_amp_mean.setConstant(Complex(0, 0));
  m.fwd_amp_var.setConstant(0.4);
  m.bwd_amp_mean.setConstant(Complex(2, 0));
  m.bwd_amp_var.setConstant(0.4);
  const LocalPrior p = into_stage(m);
  CHECK(p.amp_mean(0).real() == doctest::Approx(1.0));
  CHECK(p.amp_var(0) == doctest::Approx(0.2));
}

TEST_CASE("channel posterior limits") {
  LocalPrior prior;
  prior.support = ArrayXr::Constant(1, kProbClamp);  // pi -> 0
  prior.amp_mean = ArrayXc::Constant(1, Complex(1, 0));
  prior.amp_var = ArrayXr::Constant(1, 0.5);
  ArrayXc h_hat;
  ArrayXr h_var;
  ArrayXc q = ArrayXc::Constant(1, Complex(0.2, 0.1));
  ArrayXr qv = ArrayXr::Constant(1, 0.5);
  channel_posterior(prior, q, qv, &h_hat, &h_var);
  CHECK(std::abs(h_hat(0)) < 1e-6);
  CHECK(h_var(0) < 1e-6);

  prior.support.setConstant(1.0 - kProbClamp);
  const PosteriorChannel post = channel_posterior(prior, q, qv, &h_hat, &h_var);
  CHECK(post.nu(0) == doctest::Approx(0.25));
  CHECK(post.gamma(0).real() == doctest::Approx((0.2 + 1.0) / 2));

  // huge extrinsic variance keeps the prior support
  prior.support.setConstant(0.3);
  ArrayXr big = ArrayXr::Constant(1, 1e12);
  const PosteriorChannel post2 = channel_posterior(prior, q, big, &h_hat, &h_var);
  CHECK(post2.pi(0) == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("channel posterior second moment matches the mixture moments") {
  // posterior is (1-pi) delta + pi CN(gamma, nu); check mean/variance algebra
  RngStream rng(3, "t");
  for (int t = 0; t < 200; ++t) {
    LocalPrior prior;
    prior.support = ArrayXr::Constant(1, 0.05 + 0.9 * rng.next_double());
    prior.amp_mean = cvec(rng, 1);
    prior.amp_var = rvec(rng, 1, 0.1, 2.0);
    const ArrayXc q = cvec(rng, 1);
    const ArrayXr qv = rvec(rng, 1, 0.1, 2.0);
    ArrayXc h_hat;
    ArrayXr h_var;
    const PosteriorChannel post = channel_posterior(prior, q, qv, &h_hat, &h_var);
    const Real pi = post.pi(0);
    const Complex g = post.gamma(0);
    const Real nu = post.nu(0);
    // direct mixture moments
    const Complex mean = pi * g;
    const Real var = pi * (std::norm(g) + nu) - std::norm(mean);
    CHECK(std::abs(h_hat(0) - mean) < 1e-12);
    CHECK(h_var(0) == doctest::Approx(var).epsilon(1e-10));
  }
}

TEST_CASE("symbol posterior limits") {
  const SymbolAlphabet a = SymbolAlphabet::qpsk_gray();
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Zero(1, 4);
  ArrayXc xh;
  ArrayXr xv;

  symbol_posterior(ArrayXc::Constant(1, a.points(0)), ArrayXr::Constant(1, 1e-8), uniform, a, &xh,
                   &xv);
  CHECK(std::abs(xh(0) - a.points(0)) < 1e-6);
  CHECK(xv(0) < 1e-6);

  symbol_posterior(ArrayXc::Constant(1, Complex(5, 5)), ArrayXr::Constant(1, 1e9), uniform, a,
                   &xh, &xv);
  CHECK(std::abs(xh(0)) < 1e-6);
  CHECK(xv(0) == doctest::Approx(1.0).epsilon(1e-6));

  // overwhelming prior on point 0 wins over the observation
  Eigen::MatrixXd strong = Eigen::MatrixXd::Constant(1, 4, -1e3);
  strong(0, 0) = 0.0;
  symbol_posterior(ArrayXc::Constant(1, a.points(3)), ArrayXr::Constant(1, 1.0), strong, a, &xh,
                   &xv);
  CHECK(std::abs(xh(0) - a.points(0)) < 1e-6);
}

TEST_CASE("z conditional limits") {
  RngStream rng(4, "t");
  const int M = 6, L = 2;
  const ArrayXc h = cvec(rng, L);
  const ArrayXc x = cvec(rng, M);
  ZConditional zc = z_conditional(h, ArrayXr::Zero(L), x, ArrayXr::Zero(M), ArrayXc::Zero(M));
  CHECK((zc.p_hat - conv_trunc(h, x, M)).abs().maxCoeff() < 1e-14);
  CHECK(zc.v_p.maxCoeff() == doctest::Approx(kVarFloor));

  // scalar perfectly-known channel h = [1]
  ArrayXc h1 = ArrayXc::Constant(1, Complex(1, 0));
  const ArrayXr xv = rvec(rng, M, 0.1, 1.0);
  ZConditional zs = z_conditional(h1, ArrayXr::Zero(1), x, xv, ArrayXc::Zero(M));
  CHECK((zs.p_hat - x).abs().maxCoeff() < 1e-14);
  CHECK((zs.v_p - xv).abs().maxCoeff() < 1e-12);
}

TEST_CASE("z posterior precision weighting") {
  RngStream rng(5, "t");
  const int M = 8;
  const ArrayXc p = cvec(rng, M);
  const ArrayXc y = cvec(rng, M);
  const ArrayXr vp = rvec(rng, M, 0.2, 1.0);
  ArrayXc zh;
  ArrayXr zv;
  z_posterior(p, vp, y, 1e15, &zh, &zv);
  CHECK((zh - p).abs().maxCoeff() < 1e-6);
  z_posterior(p, ArrayXr::Constant(M, 1e15), y, 0.3, &zh, &zv);
  CHECK((zh - y).abs().maxCoeff() < 1e-6);
  CHECK(zv(0) == doctest::Approx(0.3).epsilon(1e-6));
  z_posterior(p, ArrayXr::Constant(M, 0.4), y, 0.4, &zh, &zv);
  CHECK((zh - (y + p) / 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("s update identities and positivity") {
  RngStream rng(6, "t");
  const int M = 8;
  const ArrayXc p = cvec(rng, M);
  const ArrayXr vp = rvec(rng, M, 0.2, 1.0);
  ArrayXc sh;
  ArrayXr sv;
  s_update(p, vp * 0.5, p, vp, &sh, &sv);
  CHECK(sh.abs().maxCoeff() == doctest::Approx(0.0));
  s_update(p, vp, p, vp, &sh, &sv);
  CHECK(sv.abs().maxCoeff() == doctest::Approx(0.0));
  for (int t = 0; t < 10000; ++t) {
    const ArrayXc zh = cvec(rng, 1);
    const ArrayXr zv = rvec(rng, 1, 0.0, 2.0);
    const ArrayXc ph = cvec(rng, 1);
    const ArrayXr vp1 = rvec(rng, 1, kVarFloor, 2.0);
    s_update(zh, zv.min(vp1), ph, vp1, &sh, &sv);
    CHECK(sv(0) >= 0.0);
  }
}

TEST_CASE("extrinsic update fixed point at zero Taylor term") {
  RngStream rng(7, "t");
  const int L = 3, M = 6;
  const ArrayXc h = cvec(rng, L);
  const ArrayXc x = cvec(rng, M);
  const ExtrinsicUpdate e = extrinsic_update(h, rvec(rng, L, 0.1, 1.0), x, rvec(rng, M, 0.1, 1.0),
                                             ArrayXc::Zero(M), ArrayXr::Zero(M));
  CHECK((e.q_hat - h).abs().maxCoeff() < 1e-12);
  CHECK((e.r_hat - x).abs().maxCoeff() < 1e-12);
}

TEST_CASE("bilinear core matches the selection-matrix brute force") {
  RngStream rng(8, "t");
  for (int trial = 0; trial < 25; ++trial) {
    const int L = 1 + rng.next_below(3);
    const int M = L + rng.next_below(7 - L);
    const ArrayXc h = cvec(rng, L), x = cvec(rng, M), s = cvec(rng, M);
    const ArrayXr hv = rvec(rng, L, 0.1, 1.1), xv = rvec(rng, M, 0.1, 1.1),
                  sv = rvec(rng, M, 0.1, 1.1);
    const auto brute = oracles::brute_bilinear(h, hv, x, xv, s, sv);
    const ZConditional zc = z_conditional(h, hv, x, xv, s);
    const ExtrinsicUpdate ex = extrinsic_update(h, hv, x, xv, s, sv);
    auto rel = [](const auto& a, const auto& b) {
      return ((a - b).abs() / b.abs().max(1e-30)).maxCoeff();
    };
    CHECK(rel(zc.z_full, brute.z_full) < 1e-10);
    CHECK(rel(zc.p_hat, brute.p_hat) < 1e-10);
    CHECK(rel(zc.v_p.template cast<Complex>().eval(), brute.v_p.template cast<Complex>().eval()) <
          1e-10);
    CHECK(rel(ex.q_hat, brute.q_hat) < 1e-10);
    CHECK(rel(ex.r_hat, brute.r_hat) < 1e-10);
    CHECK(rel(ex.q_var.template cast<Complex>().eval(),
              brute.q_var.template cast<Complex>().eval()) < 1e-10);
    CHECK(rel(ex.r_var.template cast<Complex>().eval(),
              brute.r_var.template cast<Complex>().eval()) < 1e-10);
  }
}

TEST_CASE("out stage support message at the symmetric point") {
  LocalPrior prior;
  prior.support = ArrayXr::Constant(1, 0.5);
  prior.amp_mean = ArrayXc::Zero(1);
  prior.amp_var = ArrayXr::Constant(1, 0.7);
  ArrayXr po, pv;
  ArrayXc pm;
  out_stage(prior, ArrayXc::Zero(1), ArrayXr::Constant(1, 0.7), &po, &pm, &pv);
  // CN(0|0, 2v) / (CN(0|0, 2v) + CN(0|0, v)) = (1/2)/(1/2 + 1) = 1/3
  CHECK(po(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("out stage amplitude collapse degenerates to the extrinsic at pi -> 1") {
  LocalPrior prior;
  prior.support = ArrayXr::Constant(1, 1.0 - 1e-13);
  prior.amp_mean = ArrayXc::Constant(1, Complex(0.3, 0.4));
  prior.amp_var = ArrayXr::Constant(1, 0.5);
  ArrayXr po, pv;
  ArrayXc pm;
  const Complex q(0.8, -0.2);
  out_stage(prior, ArrayXc::Constant(1, q), ArrayXr::Constant(1, 0.25), &po, &pm, &pv);
  CHECK(std::abs(pm(0) - q) < 1e-6);
  CHECK(pv(0) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("out stage amplitude collapse matches a finite-difference Laplace fit") {
  // the collapse is the 2nd-order fit of ln[(1-pi) CN(eps t|q,v) + pi CN(t|q,v)]
  // around t = q; reproduce it numerically
  RngStream rng(9, "t");
  const Real eps = kTaylorEps;
  for (int trial = 0; trial < 400; ++trial) {
    const Real pi_f = 0.02 + 0.96 * rng.next_double();
    const Real qv = std::pow(10.0, -3.0 + 3.0 * rng.next_double());
    const Complex q = cvec(rng, 1)(0) * std::sqrt(qv) * (0.2 + 3.0 * rng.next_double());
    LocalPrior prior;
    prior.support = ArrayXr::Constant(1, pi_f);
    prior.amp_mean = ArrayXc::Zero(1);
    prior.amp_var = ArrayXr::Constant(1, 1.0);
    ArrayXr po, pv;
    ArrayXc pm;
    out_stage(prior, ArrayXc::Constant(1, q), ArrayXr::Constant(1, qv), &po, &pm, &pv);

    auto logm = [&](Complex t) {
      const Real l0 = std::log1p(-pi_f) - std::norm(eps * t - q) / qv;
      const Real l1 = std::log(pi_f) - std::norm(t - q) / qv;
      const Real mx = std::max(l0, l1);
      return mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
    };
    const Real hstep = std::sqrt(qv) * 1e-3;
    const Real f0 = logm(q);
    const Real fr1 = logm(q + hstep), fr2 = logm(q - hstep);
    const Real fi1 = logm(q + Complex(0, hstep)), fi2 = logm(q - Complex(0, hstep));
    const Real d2r = (fr1 - 2 * f0 + fr2) / (hstep * hstep);
    const Real d2i = (fi1 - 2 * f0 + fi2) / (hstep * hstep);
    const Real dr = (fr1 - fr2) / (2 * hstep);
    const Real di = (fi1 - fi2) / (2 * hstep);
    // gaussian exp(-|t-m|^2/v): d2 per real axis = -2/v, gradient at q gives the shift
    const Real v_fit = -2.0 / (0.5 * (d2r + d2i));
    const Complex m_fit = q + 0.5 * v_fit * Complex(dr, di);
    CHECK(pv(0) == doctest::Approx(v_fit).epsilon(2e-2));
    CHECK(std::abs(pm(0) - m_fit) < 2e-2 * std::sqrt(qv) + 1e-9);
  }
}

TEST_CASE("across forward reaches the driving process at full innovation") {
  HyperParams h;
  h.varrho = 1.0;
  h.rho = 0.9;
  h.zeta = Complex(0.1, -0.2);
  FrameMessages m = FrameMessages::init(h, 1);
  m.out_support.setConstant(0.7);
  m.out_amp_mean.setConstant(Complex(3, 3));
  m.out_amp_var.setConstant(0.4);
  const AcrossMessages a = across_forward(m, h);
  CHECK(std::abs(a.amp_mean(0) - h.zeta) < 1e-12);
  CHECK(a.amp_var(0) == doctest::Approx(0.9));
}

TEST_CASE("across forward support simplifies at uninformative out message") {
  HyperParams h;  // lambda = .2, p01 = .01
  FrameMessages m = FrameMessages::init(h, 1);
  m.fwd_support.setConstant(0.2);
  m.out_support.setConstant(0.5);
  const AcrossMessages a = across_forward(m, h);
  CHECK(a.support(0) == doctest::Approx(h.p11() * 0.2 + h.p01 * 0.8).epsilon(1e-9));
}

TEST_CASE("across backward sentinels and the static-chain copy") {
  HyperParams h;
  h.varrho = 0.3;
  FrameMessages m = FrameMessages::init(h, 1);
  // uninformative inputs: pi<- = 1/2, psi<- = inf, lambda<- = 1/2, kappa<- = inf
  m.out_support.setConstant(0.5);
  m.out_amp_var.setConstant(kInfVar);
  const AcrossMessages a = across_backward(m, h);
  CHECK(a.support(0) == doctest::Approx(0.5));
  CHECK(std::isinf(a.amp_var(0)));

  // varrho = 0: message copies through the transition
  HyperParams h0;
  h0.varrho = 1e-30;  // the formula's varrho -> 0 limit
  FrameMessages m0 = FrameMessages::init(h0, 1);
  m0.out_amp_mean.setConstant(Complex(0.5, 0.5));
  m0.out_amp_var.setConstant(0.3);
  const AcrossMessages a0 = across_backward(m0, h0);
  CHECK(std::abs(a0.amp_mean(0) - Complex(0.5, 0.5)) < 1e-9);
  CHECK(a0.amp_var(0) == doctest::Approx(0.3).epsilon(1e-6));

  HyperParams h1;
  h1.varrho = 1.0;
  const AcrossMessages a1 = across_backward(m0, h1);
  CHECK(std::isinf(a1.amp_var(0)));
}

TEST_CASE("within stage fixed point at zero noise with the truth supplied") {
  RngStream rng(10, "t");
  FrameConfig fc;
  fc.n_pilot = 15;
  fc.n_data = 16;
  fc.n_guard = 4;
  fc.n_info_bits = 16;
  fc.channel_len = 4;
  const SymbolAlphabet a = SymbolAlphabet::qpsk_gray();
  const ArrayXr pilot = generate_m_sequence(4, default_m_taps(4));
  ArrayXi bits(32);
  for (int i = 0; i < 32; ++i) bits(i) = static_cast<int>(rng.next_u64() & 1);
  const ArrayXc xs = map_symbols(bits, a);
  const Frame frame = assemble_frame(pilot, xs, fc);
  ArrayXc h_true(4);
  h_true << Complex(0.9, 0.1), Complex(0, 0), Complex(-0.3, 0.2), Complex(0.1, -0.4);
  RngStream quiet(0, "q");
  const ArrayXc y = apply_channel(frame.symbols, h_true, 0.0, quiet);

  BiGampState st = BiGampState::init(pilot, fc, h_true, 1e-12);
  st.r_hat = frame.symbols;
  st.r_var.setConstant(1e-12);
  LocalPrior prior;
  prior.support = ArrayXr::Constant(4, 1.0 - kProbClamp);
  prior.amp_mean = h_true;
  prior.amp_var = ArrayXr::Constant(4, 1e-10);
  TurboConfig tc;
  tc.t_inner = 1;
  tc.breakout_tol = 1e-30;
  const Eigen::MatrixXd logp = Eigen::MatrixXd::Zero(fc.n_data, 4);
  within_stage(st, prior, y, 1e-12, logp, a, fc, tc);
  CHECK((st.h_hat - h_true).abs().maxCoeff() < 1e-8);
  CHECK((st.x_hat.segment(fc.n_pilot, fc.n_data) - xs).abs().maxCoeff() < 1e-8);
}

TEST_CASE("frequency-domain step II matches time domain for L = 1 impulse data") {
  // x = scaled unit impulse makes |F x| flat, where the averaged-variance FD
  // forms coincide with the time-domain ones exactly
  const int M = 16;
  FrameConfig fc;
  fc.n_pilot = 3;
  fc.n_data = 9;
  fc.n_guard = 4;
  fc.n_info_bits = 9;
  fc.channel_len = 1;
  RngStream rng(11, "t");
  ArrayXc h = ArrayXc::Constant(1, Complex(0.7, -0.4));
  ArrayXc x = ArrayXc::Zero(M);
  x(0) = Complex(1.3, 0.2);
  const Real hv = 0.3, xv = 0.25;

  // time domain
  const ZConditional td =
      z_conditional(h, ArrayXr::Constant(1, hv), x, ArrayXr::Constant(M, xv), ArrayXc::Zero(M));
  // frequency domain per the appendix forms
  Eigen::FFT<Real> fft;
  Eigen::VectorXcd vin = Eigen::VectorXcd::Zero(M);
  vin.head(1) = h.matrix();
  Eigen::VectorXcd Hbar(M), Xbar(M);
  fft.fwd(Hbar, vin);
  Eigen::VectorXcd vx = x.matrix();
  fft.fwd(Xbar, vx);
  const ArrayXc Hb = Hbar.array() / std::sqrt(Real(M));
  const ArrayXc Xb = Xbar.array() / std::sqrt(Real(M));
  const ArrayXr vbar = (M * xv / M) * Hb.abs2() + (hv / M) * Xb.abs2();
  const ArrayXr vp_fd = vbar + (M * xv / M) * (hv / M);
  const ArrayXc p_fd = Xb * Hb;

  // transform the TD result: z_bar = fft(p)/M, v_bar = mean(v)/M
  Eigen::VectorXcd tdp = td.p_hat.matrix();
  Eigen::VectorXcd tdf(M);
  fft.fwd(tdf, tdp);
  CHECK((tdf.array() / Real(M) - p_fd).abs().maxCoeff() < 1e-12);
  CHECK(std::abs(td.v_p.mean() / M - vp_fd(3)) < 1e-12);
  for (int f = 1; f < M; ++f) CHECK(vp_fd(f) == doctest::Approx(vp_fd(0)).epsilon(1e-12));
}

TEST_CASE("guard padding makes circular convolution equal linear convolution") {
  RngStream rng(12, "t");
  const int M = 24, L = 5;
  ArrayXc x = cvec(rng, M);
  x.tail(L - 1).setZero();  // guard
  const ArrayXc h = cvec(rng, L);
  const ArrayXc lin = conv_trunc(h, x, M);
  Eigen::FFT<Real> fft;
  Eigen::VectorXcd hx = Eigen::VectorXcd::Zero(M);
  hx.head(L) = h.matrix();
  Eigen::VectorXcd H(M), X(M), Zf(M), z(M);
  fft.fwd(H, hx);
  Eigen::VectorXcd xm = x.matrix();
  fft.fwd(X, xm);
  Zf = H.cwiseProduct(X);
  fft.inv(z, Zf);
  CHECK((z.array() - lin).abs().maxCoeff() < 1e-10);
}
