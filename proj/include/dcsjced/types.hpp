#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dcsjced {

using Real = double;
using Complex = std::complex<double>;
using ArrayXr = Eigen::ArrayXd;
using ArrayXc = Eigen::ArrayXcd;
using ArrayXi = Eigen::ArrayXi;
using MatrixXc = Eigen::MatrixXcd;
using MatrixXr = Eigen::MatrixXd;

// Numerical conditioning constants shared across the message-passing core.
inline constexpr Real kVarFloor = 1e-12;   // variance clamp floor
inline constexpr Real kLlrClamp = 30.0;    // LLR saturation magnitude
inline constexpr Real kPinVar = 1e-10;     // pilot/guard pinned variance
inline constexpr Real kTaylorEps = 1e-7;   // Gaussian-mixture collapse epsilon
inline constexpr Real kProbClamp = 1e-12;  // Bernoulli message clamp
inline constexpr Real kInfVar = std::numeric_limits<Real>::infinity();

inline Real clamp_prob(Real p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}
inline Real clamp_llr(Real l) { return std::min(std::max(l, -kLlrClamp), kLlrClamp); }

struct FrameConfig {
  int n_pilot = 63;
  int n_data = 130;
  int n_guard = 25;
  int n_info_bits = 130;
  Real code_rate = 0.5;
  int bits_per_symbol = 2;
  int channel_len = 25;

  int frame_len() const { return n_pilot + n_data + n_guard; }
  int n_coded_bits() const { return n_data * bits_per_symbol; }

  void validate() const {
    if (n_pilot < 0 || n_data < 0 || n_guard < 0 || channel_len < 1)
      throw std::invalid_argument("FrameConfig: negative sizes");
    if (n_guard < channel_len - 1)
      throw std::invalid_argument("FrameConfig: guard shorter than channel_len-1");
    if (static_cast<long>(n_data) * bits_per_symbol !=
        static_cast<long>(std::lround(n_info_bits / code_rate)))
      throw std::invalid_argument("FrameConfig: n_data*Q != n_info_bits/R");
  }
};

struct SymbolAlphabet {
  ArrayXc points;                 // 2^Q constellation values, unit average energy
  Eigen::MatrixXi bit_labels;     // (2^Q) x Q, bit q of point n

  int size() const { return static_cast<int>(points.size()); }
  int bits() const { return static_cast<int>(bit_labels.cols()); }

  // Gray-labelled QPSK, points (+-1 +-j)/sqrt(2); bit value 0 maps to +.
  static SymbolAlphabet qpsk_gray();

  void validate() const;
};

struct Frame {
  ArrayXc symbols;  // [pilot | data | guard]
  int n_pilot = 0;
  int n_data = 0;
  int n_guard = 0;

  int size() const { return static_cast<int>(symbols.size()); }
  auto pilot() const { return symbols.head(n_pilot); }
  auto data() const { return symbols.segment(n_pilot, n_data); }
  auto guard() const { return symbols.tail(n_guard); }
};

// Channel prior vector q = [p01, lambda, zeta, varrho, rho].
struct HyperParams {
  Real p01 = 0.01;
  Real lambda = 0.2;
  Complex zeta{0.0, 0.0};
  Real varrho = 0.005;
  Real rho = 1.0;

  Real sigma_sq() const { return varrho * rho / (2.0 - varrho); }
  Real p10() const { return lambda * p01 / (1.0 - lambda); }
  Real p11() const { return 1.0 - p01; }
  Real p00() const { return 1.0 - p10(); }

  void validate() const {
    if (p01 < 0 || p01 > 1 || lambda < 0 || lambda > 1)
      throw std::invalid_argument("HyperParams: probability out of [0,1]");
    if (varrho < 0 || varrho > 1) throw std::invalid_argument("HyperParams: varrho out of [0,1]");
    if (rho <= 0) throw std::invalid_argument("HyperParams: rho <= 0");
    if (p10() > 1) throw std::invalid_argument("HyperParams: implied p10 > 1");
  }

  // Projection used by the EM updates.
  void project() {
    lambda = std::min(std::max(lambda, 1e-4), 1.0 - 1e-4);
    p01 = std::min(std::max(p01, 1e-4), 1.0 - 1e-4);
    varrho = std::min(std::max(varrho, 1e-4), 1.0);
    rho = std::max(rho, 1e-8);
    if (p10() > 1.0) p01 = (1.0 - lambda) / lambda;  // keep the steady state feasible
  }
};

struct ChannelState {
  ArrayXi support;    // s in {0,1}^L
  ArrayXc amplitude;  // theta
  ArrayXc cir;        // h = s .* theta

  static ChannelState compose(const ArrayXi& s, const ArrayXc& theta) {
    ChannelState st;
    st.support = s;
    st.amplitude = theta;
    st.cir = s.cast<Real>().cast<Complex>() * theta;
    return st;
  }
};

struct ChannelTrack {
  std::vector<ChannelState> frames;
  std::optional<HyperParams> hyper;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int taps() const { return frames.empty() ? 0 : static_cast<int>(frames[0].cir.size()); }
};

enum class Domain { kTime, kFrequency };
enum class Schedule { kSerial, kParallel };

struct TurboConfig {
  int t_turbo = 3;
  int t_fp = 2;
  int t_bp = 2;
  int t_inner = 25;
  Real breakout_tol = 1e-4;
  Domain domain = Domain::kTime;
  Schedule schedule = Schedule::kSerial;
  Real damping = 1.0;

  void validate() const {
    if (t_turbo < 1 || t_fp < 1 || t_inner < 1 || t_bp < 0)
      throw std::invalid_argument("TurboConfig: iteration counts out of range");
    if (breakout_tol <= 0) throw std::invalid_argument("TurboConfig: breakout_tol <= 0");
    if (damping <= 0 || damping > 1) throw std::invalid_argument("TurboConfig: damping out of (0,1]");
  }
};

struct MmseConfig {
  int n1 = 15;  // non-causal taps
  int n2 = 20;  // causal taps
  int t_turbo = 3;
};

struct FrameDiagnostics {
  std::vector<Real> nmse;      // per turbo iteration, filled by the caller when truth is known
  std::vector<int> inner_used; // inner iterations spent per within-stage visit
  int divergences = 0;
};

struct EqualizerOutput {
  // hard information bits per frame, from the final decoder pass
  std::vector<ArrayXi> info_bits;
  // per turbo iteration x frame: hard info bits (for per-iteration BER)
  std::vector<std::vector<ArrayXi>> info_bits_per_iter;
  // equalizer extrinsic LLRs per frame (coded-bit order, interleaved domain)
  std::vector<ArrayXr> extrinsic_llrs;
  // channel posterior per frame and turbo iteration
  std::vector<std::vector<ArrayXc>> h_hat_per_iter;  // [iter][frame]
  std::vector<ArrayXc> h_hat;                        // final
  std::vector<ArrayXr> h_var;
  std::vector<FrameDiagnostics> diag;
};

}  // namespace dcsjced
