#include "dcsjced/modem.hpp"

#include <stdexcept>

namespace dcsjced {

SymbolAlphabet SymbolAlphabet::qpsk_gray() {
  SymbolAlphabet a;
  a.points.resize(4);
  a.bit_labels.resize(4, 2);
  const Real s = 1.0 / std::sqrt(2.0);
  int n = 0;
  for (int b0 = 0; b0 < 2; ++b0) {
    for (int b1 = 0; b1 < 2; ++b1) {
      a.points(n) = Complex((1 - 2 * b0) * s, (1 - 2 * b1) * s);
      a.bit_labels(n, 0) = b0;
      a.bit_labels(n, 1) = b1;
      ++n;
    }
  }
  return a;
}

void SymbolAlphabet::validate() const {
  const Real energy = points.abs2().mean();
  if (std::abs(energy - 1.0) > 1e-9)
    throw std::invalid_argument("SymbolAlphabet: average energy != 1");
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      if ((bit_labels.row(i).array() == bit_labels.row(j).array()).all())
        throw std::invalid_argument("SymbolAlphabet: duplicate bit label");
}

ArrayXr generate_m_sequence(int degree, const std::vector<int>& taps, uint64_t seed_state) {
  if (degree < 2 || degree > 24) throw std::invalid_argument("m-sequence: degree out of range");
  const uint64_t mask = (1ull << degree) - 1;
  uint64_t state = seed_state & mask;
  if (state == 0) throw std::invalid_argument("m-sequence: zero seed state");
  for (int t : taps)
    if (t < 1 || t > degree) throw std::invalid_argument("m-sequence: tap out of range");

  const int n = static_cast<int>(mask);
  ArrayXr out(n);
  const uint64_t start = state;
  for (int i = 0; i < n; ++i) {
    out(i) = (state & 1) ? -1.0 : 1.0;  // bit 1 -> -1
    uint64_t fb = 0;
    for (int t : taps) fb ^= (state >> (t - 1)) & 1;
    state = (state >> 1) | (fb << (degree - 1));
    if (state == start && i + 1 < n)
      throw std::invalid_argument("m-sequence: taps are not primitive (short period)");
  }
  if (state != start) throw std::invalid_argument("m-sequence: taps are not primitive");
  return out;
}

// The register recurrence is a_{n+d} = sum_{t in taps} a_{n+t-1}, so the taps
// encode the polynomial x^d + sum x^(t-1); stage 1 supplies the constant term.
std::vector<int> default_m_taps(int degree) {
  switch (degree) {
    case 3: return {2, 1};   // x^3+x+1
    case 4: return {2, 1};   // x^4+x+1
    case 5: return {3, 1};   // x^5+x^2+1
    case 6: return {2, 1};   // x^6+x+1
    case 7: return {4, 1};   // x^7+x^3+1
    case 8: return {5, 4, 3, 1};
    case 9: return {5, 1};   // x^9+x^4+1
    case 10: return {4, 1};  // x^10+x^3+1
    default: throw std::invalid_argument("no default taps for this degree");
  }
}

std::vector<int> make_interleaver(int n, RngStream& rng) { return rng.permutation(n); }

namespace {
template <typename A>
A apply_perm(const A& in, const std::vector<int>& perm, bool inverse) {
  if (static_cast<int>(perm.size()) != in.size())
    throw std::invalid_argument("interleave: length mismatch");
  A out(in.size());
  for (int i = 0; i < in.size(); ++i) {
    if (inverse)
      out(perm[i]) = in(i);
    else
      out(i) = in(perm[i]);
  }
  return out;
}
}  // namespace

ArrayXi interleave(const ArrayXi& bits, const std::vector<int>& perm) {
  return apply_perm(bits, perm, false);
}
ArrayXr interleave(const ArrayXr& values, const std::vector<int>& perm) {
  return apply_perm(values, perm, false);
}
ArrayXi deinterleave(const ArrayXi& bits, const std::vector<int>& perm) {
  return apply_perm(bits, perm, true);
}
ArrayXr deinterleave(const ArrayXr& values, const std::vector<int>& perm) {
  return apply_perm(values, perm, true);
}

ArrayXc map_symbols(const ArrayXi& coded_bits, const SymbolAlphabet& alphabet) {
  const int q = alphabet.bits();
  if (coded_bits.size() % q != 0)
    throw std::invalid_argument("map_symbols: bit count not divisible by Q");
  const int n_sym = static_cast<int>(coded_bits.size()) / q;
  // label -> point index
  std::vector<int> lut(1 << q, -1);
  for (int n = 0; n < alphabet.size(); ++n) {
    int label = 0;
    for (int b = 0; b < q; ++b) label = (label << 1) | alphabet.bit_labels(n, b);
    lut[label] = n;
  }
  ArrayXc out(n_sym);
  for (int j = 0; j < n_sym; ++j) {
    int label = 0;
    for (int b = 0; b < q; ++b) label = (label << 1) | coded_bits(j * q + b);
    out(j) = alphabet.points(lut[label]);
  }
  return out;
}

ArrayXi hard_demap(const ArrayXc& symbols, const SymbolAlphabet& alphabet) {
  const int q = alphabet.bits();
  ArrayXi out(symbols.size() * q);
  for (int j = 0; j < symbols.size(); ++j) {
    int best = 0;
    Real bd = std::norm(symbols(j) - alphabet.points(0));
    for (int n = 1; n < alphabet.size(); ++n) {
      const Real d = std::norm(symbols(j) - alphabet.points(n));
      if (d < bd) {
        bd = d;
        best = n;
      }
    }
    for (int b = 0; b < q; ++b) out(j * q + b) = alphabet.bit_labels(best, b);
  }
  return out;
}

Frame assemble_frame(const ArrayXr& pilot, const ArrayXc& data_symbols, const FrameConfig& cfg) {
  if (pilot.size() != cfg.n_pilot || data_symbols.size() != cfg.n_data)
    throw std::invalid_argument("assemble_frame: length mismatch");
  Frame f;
  f.n_pilot = cfg.n_pilot;
  f.n_data = cfg.n_data;
  f.n_guard = cfg.n_guard;
  f.symbols.resize(cfg.frame_len());
  f.symbols.head(cfg.n_pilot) = pilot.cast<Complex>();
  f.symbols.segment(cfg.n_pilot, cfg.n_data) = data_symbols;
  f.symbols.tail(cfg.n_guard).setZero();
  return f;
}

}  // namespace dcsjced
