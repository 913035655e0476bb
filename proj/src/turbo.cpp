#include "dcsjced/turbo.hpp"

#include <future>

#include "dcsjced/emtune.hpp"
#include "dcsjced/modem.hpp"

namespace dcsjced {

ArrayXr extrinsic_llr(const ArrayXc& r_hat, const ArrayXr& r_var,
                      const Eigen::MatrixXd& bit_llrs, const SymbolAlphabet& alphabet) {
  const int n = static_cast<int>(r_hat.size());
  const int Q = alphabet.bits();
  const int A = alphabet.size();
  ArrayXr out(n * Q);
  // per-bit log p(c = chi) for both chi values
  for (int j = 0; j < n; ++j) {
    Eigen::ArrayXd logp_bit0(Q);  // log p(c_q = 0)
    Eigen::ArrayXd logp_bit1(Q);
    for (int q = 0; q < Q; ++q) {
      const Real l = clamp_llr(bit_llrs(j, q));
      logp_bit0(q) = -(l < 0 ? -l + std::log1p(std::exp(l)) : std::log1p(std::exp(-l)));
      logp_bit1(q) = -(l > 0 ? l + std::log1p(std::exp(-l)) : std::log1p(std::exp(l)));
    }
    Eigen::ArrayXd metric(A);
    for (int a = 0; a < A; ++a) {
      Real m = -std::norm(alphabet.points(a) - r_hat(j)) / r_var(j);
      for (int q = 0; q < Q; ++q)
        m += alphabet.bit_labels(a, q) == 0 ? logp_bit0(q) : logp_bit1(q);
      metric(a) = m;
    }
    for (int q = 0; q < Q; ++q) {
      Real m0 = -std::numeric_limits<Real>::infinity();
      Real m1 = m0;
      Eigen::ArrayXd t(A);
      for (int a = 0; a < A; ++a) {
        // exclude the bit's own prior from its extrinsic
        t(a) = metric(a) - (alphabet.bit_labels(a, q) == 0 ? logp_bit0(q) : logp_bit1(q));
        if (alphabet.bit_labels(a, q) == 0)
          m0 = std::max(m0, t(a));
        else
          m1 = std::max(m1, t(a));
      }
      Real s0 = 0, s1 = 0;
      for (int a = 0; a < A; ++a) {
        if (alphabet.bit_labels(a, q) == 0)
          s0 += std::exp(t(a) - m0);
        else
          s1 += std::exp(t(a) - m1);
      }
      out(j * Q + q) = clamp_llr((m0 + std::log(s0)) - (m1 + std::log(s1)));
    }
  }
  return out;
}

Eigen::MatrixXd apriori_symbol_probs(const Eigen::MatrixXd& bit_llrs,
                                     const SymbolAlphabet& alphabet) {
  Eigen::MatrixXd logp = symbol_log_prior_from_llrs(bit_llrs, alphabet);
  for (int j = 0; j < logp.rows(); ++j) {
    const Real mx = logp.row(j).maxCoeff();
    Eigen::ArrayXd p = (logp.row(j).array() - mx).exp();
    logp.row(j) = (p / p.sum()).matrix();
  }
  return logp;
}

namespace {

struct FrameSlot {
  BiGampState state;
  FrameMessages msgs;
  LocalPrior prior;
  Eigen::MatrixXd bit_llrs;  // n_data x Q, a priori from the decoder
  bool has_back_msgs = false;
};

}  // namespace

EqualizerOutput run_dcs_jced(const TurboInputs& in, const TurboConfig& cfg, HyperParams hyper,
                             Real noise_var, RngStream& init_rng) {
  cfg.validate();
  in.frame_cfg.validate();
  hyper.validate();
  const int K = static_cast<int>(in.received.size());
  if (K < 1) throw std::invalid_argument("run_dcs_jced: no frames");
  const FrameConfig& fc = in.frame_cfg;
  const int L = fc.channel_len;
  const int Q = fc.bits_per_symbol;

  std::vector<FrameSlot> slots(K);
  for (int k = 0; k < K; ++k) {
    ArrayXc q0(L);
    for (int i = 0; i < L; ++i) q0(i) = init_rng.next_cgauss(1.0);
    if (k == 0 && in.q_warm_start) q0 = *in.q_warm_start;
    slots[k].state = BiGampState::init(in.pilot, fc, q0, hyper.rho);
    slots[k].msgs = FrameMessages::init(hyper, L);
    slots[k].bit_llrs = Eigen::MatrixXd::Zero(fc.n_data, Q);
  }

  EqualizerOutput out;
  out.diag.resize(K);
  out.info_bits_per_iter.clear();
  out.h_hat_per_iter.clear();

  auto process_frame = [&](int k) {
    FrameSlot& fs = slots[k];
    fs.prior = into_stage(fs.msgs);
    fs.msgs.prior_support = fs.prior.support;
    fs.msgs.prior_amp_mean = fs.prior.amp_mean;
    fs.msgs.prior_amp_var = fs.prior.amp_var;
    const Eigen::MatrixXd logp = symbol_log_prior_from_llrs(fs.bit_llrs, in.alphabet);
    const BiGampState before = fs.state;
    const WithinResult wr = within_stage(fs.state, fs.prior, in.received[k], noise_var, logp,
                                         in.alphabet, fc, cfg);
    out.diag[k].inner_used.push_back(wr.iterations);
    if (wr.diverged) {
      ++out.diag[k].divergences;
      fs.state = before;  // fall back to the previous iterate
      if (!fs.state.has_posterior) {
        fs.state.h_hat = fs.prior.support.cast<Complex>() * fs.prior.amp_mean;
        fs.state.h_var = (fs.prior.support * (fs.prior.amp_mean.abs2() + fs.prior.amp_var) -
                          fs.state.h_hat.abs2())
                             .max(kVarFloor);
        fs.state.has_posterior = true;
      }
    }
    out_stage(fs.prior, fs.state.q_hat, fs.state.q_var, &fs.msgs.out_support,
              &fs.msgs.out_amp_mean, &fs.msgs.out_amp_var);
  };

  const bool parallel = cfg.schedule == Schedule::kParallel && K > 1;
  auto run_frames = [&](bool forward) {
    if (parallel) {
      std::vector<std::future<void>> tasks;
      tasks.reserve(K);
      for (int k = 0; k < K; ++k)
        tasks.push_back(std::async(std::launch::async, [&, k] { process_frame(k); }));
      for (auto& t : tasks) t.get();
      if (forward) {
        for (int k = 0; k + 1 < K; ++k) {
          const AcrossMessages a = across_forward(slots[k].msgs, hyper);
          slots[k + 1].msgs.fwd_support = a.support;
          slots[k + 1].msgs.fwd_amp_mean = a.amp_mean;
          slots[k + 1].msgs.fwd_amp_var = a.amp_var;
        }
      } else {
        for (int k = K - 1; k > 0; --k) {
          const AcrossMessages a = across_backward(slots[k].msgs, hyper);
          slots[k - 1].msgs.bwd_support = a.support;
          slots[k - 1].msgs.bwd_amp_mean = a.amp_mean;
          slots[k - 1].msgs.bwd_amp_var = a.amp_var;
        }
      }
    } else if (forward) {
      for (int k = 0; k < K; ++k) {
        process_frame(k);
        if (k + 1 < K) {
          const AcrossMessages a = across_forward(slots[k].msgs, hyper);
          slots[k + 1].msgs.fwd_support = a.support;
          slots[k + 1].msgs.fwd_amp_mean = a.amp_mean;
          slots[k + 1].msgs.fwd_amp_var = a.amp_var;
        }
      }
    } else {
      for (int k = K - 1; k >= 0; --k) {
        process_frame(k);
        if (k > 0) {
          const AcrossMessages a = across_backward(slots[k].msgs, hyper);
          slots[k - 1].msgs.bwd_support = a.support;
          slots[k - 1].msgs.bwd_amp_mean = a.amp_mean;
          slots[k - 1].msgs.bwd_amp_var = a.amp_var;
        }
      }
    }
  };

  for (int t = 0; t < cfg.t_turbo; ++t) {
    // propagation sweeps, alternating forward then backward
    const int sweeps = std::max(cfg.t_fp, cfg.t_bp);
    for (int s = 0; s < sweeps; ++s) {
      if (s < cfg.t_fp) run_frames(true);
      if (s < cfg.t_bp) run_frames(false);
    }

    // EM tuning: only when both propagation directions have run
    if (cfg.t_fp >= 1 && cfg.t_bp >= 1) {
      std::vector<FrameMessages> all;
      all.reserve(K);
      for (const auto& fs : slots) all.push_back(fs.msgs);
      const SmoothedMoments moments = collect_moments(all, hyper);
      hyper = em_update(moments, hyper);
      // frame 0's forward message is the stationary prior; refresh it
      slots[0].msgs.fwd_support.setConstant(hyper.lambda);
      slots[0].msgs.fwd_amp_mean.setConstant(hyper.zeta);
      slots[0].msgs.fwd_amp_var.setConstant(hyper.sigma_sq());
    }

    // decoding
    std::vector<ArrayXi> iter_bits(K);
    std::vector<ArrayXc> iter_h(K);
    for (int k = 0; k < K; ++k) {
      FrameSlot& fs = slots[k];
      const ArrayXc r = fs.state.r_hat.segment(fc.n_pilot, fc.n_data);
      const ArrayXr rv = fs.state.r_var.segment(fc.n_pilot, fc.n_data);
      const ArrayXr lext = extrinsic_llr(r, rv, fs.bit_llrs, in.alphabet);
      if (in.code) {
        const ArrayXr chan_llr = deinterleave(lext, in.interleavers[k]);
        const DecodeResult dec = in.code->decode_spa(chan_llr, 50);
        const ArrayXr fed = interleave(dec.extrinsic, in.interleavers[k]);
        for (int j = 0; j < fc.n_data; ++j)
          for (int q = 0; q < Q; ++q) fs.bit_llrs(j, q) = clamp_llr(fed(j * Q + q));
        iter_bits[k] = in.code->extract_info(dec.hard_bits);
      } else {
        iter_bits[k] = ArrayXi::Zero(0);
      }
      iter_h[k] = fs.state.h_hat;
      if (t == cfg.t_turbo - 1) {
        out.extrinsic_llrs.push_back(lext);
        out.h_hat.push_back(fs.state.h_hat);
        out.h_var.push_back(fs.state.h_var);
        out.info_bits.push_back(iter_bits[k]);
      }
    }
    out.info_bits_per_iter.push_back(std::move(iter_bits));
    out.h_hat_per_iter.push_back(std::move(iter_h));
  }
  return out;
}

}  // namespace dcsjced
