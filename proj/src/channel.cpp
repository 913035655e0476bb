#include "dcsjced/channel.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcsjced {

Eigen::ArrayXXi sample_support_chain(const HyperParams& hyper, int taps, int frames,
                                     RngStream& rng) {
  hyper.validate();
  Eigen::ArrayXXi s(taps, frames);
  const Real p01 = hyper.p01;
  const Real p10 = hyper.p10();
  for (int i = 0; i < taps; ++i) s(i, 0) = rng.next_double() < hyper.lambda ? 1 : 0;
  for (int k = 1; k < frames; ++k) {
    for (int i = 0; i < taps; ++i) {
      const Real u = rng.next_double();
      s(i, k) = s(i, k - 1) ? (u < p01 ? 0 : 1) : (u < p10 ? 1 : 0);
    }
  }
  return s;
}

MatrixXc sample_amplitude_process(const HyperParams& hyper, int taps, int frames, RngStream& rng) {
  hyper.validate();
  MatrixXc th(taps, frames);
  const Real sig2 = hyper.sigma_sq();
  for (int i = 0; i < taps; ++i) th(i, 0) = hyper.zeta + rng.next_cgauss(sig2);
  for (int k = 1; k < frames; ++k) {
    for (int i = 0; i < taps; ++i) {
      const Complex w = rng.next_cgauss(hyper.rho);
      th(i, k) = (1.0 - hyper.varrho) * (th(i, k - 1) - hyper.zeta) + hyper.varrho * w + hyper.zeta;
    }
  }
  return th;
}

ChannelTrack compose_channel(const Eigen::ArrayXXi& support, const MatrixXc& amplitude) {
  if (support.rows() != amplitude.rows() || support.cols() != amplitude.cols())
    throw std::invalid_argument("compose_channel: shape mismatch");
  ChannelTrack track;
  const int taps = static_cast<int>(support.rows());
  const int frames = static_cast<int>(support.cols());
  track.frames.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    ArrayXi s(taps);
    ArrayXc th(taps);
    for (int i = 0; i < taps; ++i) {
      s(i) = support(i, k);
      th(i) = amplitude(i, k);
    }
    track.frames.push_back(ChannelState::compose(s, th));
  }
  return track;
}

ChannelTrack sample_channel_track(const HyperParams& hyper, int taps, int frames, RngStream& rng) {
  auto s = sample_support_chain(hyper, taps, frames, rng);
  auto th = sample_amplitude_process(hyper, taps, frames, rng);
  auto track = compose_channel(s, th);
  track.hyper = hyper;
  return track;
}

ArrayXc apply_channel(const ArrayXc& frame, const ArrayXc& cir, Real noise_var, RngStream& rng) {
  const int M = static_cast<int>(frame.size());
  const int L = static_cast<int>(cir.size());
  if (L > M) throw std::invalid_argument("apply_channel: channel longer than frame");
  ArrayXc y = ArrayXc::Zero(M);
  for (int n = 0; n < M; ++n) {
    Complex acc{0.0, 0.0};
    const int lmax = std::min(L - 1, n);
    for (int l = 0; l <= lmax; ++l) acc += frame(n - l) * cir(l);
    y(n) = acc;
  }
  if (noise_var > 0)
    for (int n = 0; n < M; ++n) y(n) += rng.next_cgauss(noise_var);
  return y;
}

ChannelTrack import_cir_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("import_cir_trace: cannot open " + path);
  ChannelTrack track;
  std::string line;
  int lineno = 0;
  int taps = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<Real> vals;
    Real v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof())
      throw std::runtime_error("import_cir_trace: parse error at line " + std::to_string(lineno));
    if (vals.empty() || vals.size() % 2 != 0)
      throw std::runtime_error("import_cir_trace: odd value count at line " +
                               std::to_string(lineno));
    const int L = static_cast<int>(vals.size() / 2);
    if (taps < 0) taps = L;
    if (L != taps)
      throw std::runtime_error("import_cir_trace: inconsistent tap count at line " +
                               std::to_string(lineno));
    ChannelState st;
    st.cir.resize(L);
    st.support.resize(L);
    st.amplitude.resize(L);
    for (int i = 0; i < L; ++i) {
      st.cir(i) = Complex(vals[2 * i], vals[2 * i + 1]);
      st.support(i) = st.cir(i) != Complex(0, 0) ? 1 : 0;
      st.amplitude(i) = st.cir(i);
    }
    track.frames.push_back(std::move(st));
  }
  if (track.frames.empty()) throw std::runtime_error("import_cir_trace: empty file " + path);
  return track;
}

void export_cir_trace(const std::string& path, const ChannelTrack& track) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_cir_trace: cannot open " + path);
  os.precision(17);
  os << "# cir trace: one frame per line, re im pairs\n";
  for (const auto& st : track.frames) {
    for (int i = 0; i < st.cir.size(); ++i) {
      if (i) os << ' ';
      os << st.cir(i).real() << ' ' << st.cir(i).imag();
    }
    os << '\n';
  }
}

}  // namespace dcsjced
