#include "dcsjced/emtune.hpp"

#include <cmath>
#include <stdexcept>

namespace dcsjced {

namespace {

Real comb(Real p, Real q) {
  p = clamp_prob(p);
  q = clamp_prob(q);
  return p * q / (p * q + (1 - p) * (1 - q));
}

// product of two Gaussians given with +inf-variance sentinels
void gprod(Complex m1, Real v1, Complex m2, Real v2, Complex* m, Real* v) {
  const Real i1 = std::isinf(v1) ? 0.0 : 1.0 / v1;
  const Real i2 = std::isinf(v2) ? 0.0 : 1.0 / v2;
  const Real prec = i1 + i2;
  if (prec <= 0) {
    *m = Complex(0, 0);
    *v = kInfVar;
    return;
  }
  *v = 1.0 / prec;
  *m = (*v) * ((std::isinf(v1) ? Complex(0, 0) : m1 * i1) +
               (std::isinf(v2) ? Complex(0, 0) : m2 * i2));
}

}  // namespace

SmoothedMoments collect_moments(const std::vector<FrameMessages>& msgs,
                                const HyperParams& hyper) {
  const int K = static_cast<int>(msgs.size());
  if (K == 0) throw std::invalid_argument("collect_moments: no frames");
  const int L = static_cast<int>(msgs[0].fwd_support.size());
  for (const auto& m : msgs)
    if (!m.out_amp_var.isFinite().any())
      throw std::logic_error("collect_moments: out messages missing (run both propagations first)");

  // fresh chain messages from the final local evidence
  std::vector<FrameMessages> chain(msgs);
  chain[0].fwd_support.setConstant(hyper.lambda);
  chain[0].fwd_amp_mean.setConstant(hyper.zeta);
  chain[0].fwd_amp_var.setConstant(hyper.sigma_sq());
  chain[K - 1].bwd_support.setConstant(0.5);
  chain[K - 1].bwd_amp_mean.setZero();
  chain[K - 1].bwd_amp_var.setConstant(kInfVar);
  for (int k = 0; k + 1 < K; ++k) {
    const AcrossMessages fwd = across_forward(chain[k], hyper);
    chain[k + 1].fwd_support = fwd.support;
    chain[k + 1].fwd_amp_mean = fwd.amp_mean;
    chain[k + 1].fwd_amp_var = fwd.amp_var;
  }
  for (int k = K - 1; k > 0; --k) {
    const AcrossMessages bwd = across_backward(chain[k], hyper);
    chain[k - 1].bwd_support = bwd.support;
    chain[k - 1].bwd_amp_mean = bwd.amp_mean;
    chain[k - 1].bwd_amp_var = bwd.amp_var;
  }

  SmoothedMoments mm;
  mm.s_marginal.resize(L, K);
  mm.s_pair.resize(L, std::max(K - 1, 0));
  mm.theta_mean.resize(L, K);
  mm.theta_var.resize(L, K);
  mm.theta_cross.resize(L, std::max(K - 1, 0));

  const Real p01 = hyper.p01, p11 = hyper.p11(), p10 = hyper.p10(), p00 = hyper.p00();
  const Real vr = hyper.varrho;
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < K; ++k) {
      const auto& c = chain[k];
      mm.s_marginal(i, k) = comb(comb(c.fwd_support(i), c.out_support(i)), c.bwd_support(i));
      Complex m1;
      Real v1;
      gprod(c.fwd_amp_mean(i), c.fwd_amp_var(i), c.out_amp_mean(i), c.out_amp_var(i), &m1, &v1);
      Complex ms;
      Real vs;
      gprod(m1, v1, c.bwd_amp_mean(i), c.bwd_amp_var(i), &ms, &vs);
      mm.theta_mean(i, k) = ms;
      mm.theta_var(i, k) = std::isinf(vs) ? hyper.sigma_sq() : vs;
    }
    for (int k = 1; k < K; ++k) {
      const auto& cm = chain[k - 1];
      const auto& ck = chain[k];
      // support pair: alpha(k-1) combines forward message and local evidence,
      // beta(k) combines local evidence and backward message
      const Real a1 = comb(cm.fwd_support(i), cm.out_support(i));
      const Real b1 = comb(ck.out_support(i), ck.bwd_support(i));
      const Real j11 = a1 * p11 * b1;
      const Real j10 = a1 * p01 * (1 - b1);
      const Real j01 = (1 - a1) * p10 * b1;
      const Real j00 = (1 - a1) * p00 * (1 - b1);
      mm.s_pair(i, k - 1) = j11 / (j11 + j10 + j01 + j00);

      // amplitude pair via a scalar Kalman step through the transition
      Complex ma;
      Real Va;
      gprod(cm.fwd_amp_mean(i), cm.fwd_amp_var(i), cm.out_amp_mean(i), cm.out_amp_var(i), &ma,
            &Va);
      Complex mb;
      Real Vb;
      gprod(ck.out_amp_mean(i), ck.out_amp_var(i), ck.bwd_amp_mean(i), ck.bwd_amp_var(i), &mb,
            &Vb);
      if (std::isinf(Va)) Va = hyper.sigma_sq();
      if (std::isinf(Vb)) {
        // no evidence on theta[k]; pair moment from the smoothed (k-1) marginal
        const Complex mA = mm.theta_mean(i, k - 1);
        const Real VA = mm.theta_var(i, k - 1);
        const Complex mB = (1 - vr) * (mA - hyper.zeta) + hyper.zeta;
        mm.theta_cross(i, k - 1) = std::conj(mB) * mA + (1 - vr) * VA;
        continue;
      }
      const Real P = (1 - vr) * (1 - vr) * Va + vr * vr * hyper.rho;
      const Complex mpred = (1 - vr) * (ma - hyper.zeta) + hyper.zeta;
      const Complex mB = mpred + (P / (P + Vb)) * (mb - mpred);
      const Complex mA = ma + ((1 - vr) * Va / (P + Vb)) * (mb - mpred);
      const Real cov = (1 - vr) * Va * Vb / (P + Vb);
      mm.theta_cross(i, k - 1) = std::conj(mB) * mA + cov;
      // keep the smoothed marginals consistent with the pairwise pass
      mm.theta_mean(i, k - 1) = mA;
      mm.theta_var(i, k - 1) = std::max(Va - (1 - vr) * (1 - vr) * Va * Va / (P + Vb), 0.0);
      if (k == K - 1) {
        mm.theta_mean(i, k) = mB;
        mm.theta_var(i, k) = std::max(P * Vb / (P + Vb), 0.0);
      }
    }
  }
  return mm;
}

HyperParams em_update(const SmoothedMoments& m, const HyperParams& hyper) {
  const int L = m.taps();
  const int K = m.frames();
  HyperParams out = hyper;

  // lambda: posterior mean of the first-frame support
  out.lambda = m.s_marginal.col(0).mean();

  if (K > 1) {
    Real num = 0, den = 0;
    for (int i = 0; i < L; ++i) {
      for (int k = 1; k < K; ++k) {
        num += m.s_marginal(i, k - 1) - m.s_pair(i, k - 1);
        den += m.s_marginal(i, k - 1);
      }
    }
    if (den > 1e-12) out.p01 = num / den;
  }

  // zeta
  const Real vr = hyper.varrho;
  const Real rho = hyper.rho;
  const Real sig2 = hyper.sigma_sq();
  {
    Complex acc{0, 0};
    for (int i = 0; i < L; ++i) {
      for (int k = 1; k < K; ++k)
        acc += (m.theta_mean(i, k) - (1 - vr) * m.theta_mean(i, k - 1)) / (vr * rho);
      acc += m.theta_mean(i, 0) / sig2;
    }
    out.zeta = acc / (L * ((K - 1) / rho + 1.0 / sig2));
  }

  if (K > 1) {
    const Complex z = out.zeta;
    Real q_acc = 0;  // E|theta[k]-z - (1-vr)(theta[k-1]-z)|^2 summed
    Real b_acc = 0, c_acc = 0;
    for (int i = 0; i < L; ++i) {
      for (int k = 1; k < K; ++k) {
        const Complex mk = m.theta_mean(i, k);
        const Complex mp = m.theta_mean(i, k - 1);
        const Real vk = m.theta_var(i, k);
        const Real vp = m.theta_var(i, k - 1);
        const Complex cross = m.theta_cross(i, k - 1);  // E[theta_k^* theta_{k-1}]
        const Real A = vk + std::norm(mk - z);
        const Real C = vp + std::norm(mp - z);
        const Real B = (cross - std::conj(mk) * z - std::conj(z) * mp).real() + std::norm(z);
        q_acc += A - 2 * (1 - vr) * B + (1 - vr) * (1 - vr) * C;
        b_acc += cross.real() - ((mk - mp) * std::conj(z)).real() - vp - std::norm(mp);
        c_acc += vk + std::norm(mk) + vp + std::norm(mp) - 2 * cross.real();
      }
    }
    const Real N = static_cast<Real>(L) * (K - 1);
    out.rho = q_acc / (vr * vr * N);
    const Real b = (2.0 / rho) * b_acc;
    const Real c = (2.0 / rho) * c_acc;
    const Real disc = b * b + 8 * N * c;
    if (disc >= 0) out.varrho = (b + std::sqrt(disc)) / (4 * N);
    // negative discriminant: keep the previous varrho
  }

  out.project();
  return out;
}

}  // namespace dcsjced
