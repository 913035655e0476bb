#include <doctest.h>

#include <sstream>

#include "dcsjced/fec.hpp"
#include "dcsjced/rng.hpp"

using namespace dcsjced;

namespace {

ArrayXi random_bits(int n, uint64_t seed) {
  RngStream rng(seed, "bits");
  ArrayXi b(n);
  for (int i = 0; i < n; ++i) b(i) = static_cast<int>(rng.next_u64() & 1);
  return b;
}

// independent GF(2) syndrome check from the exported listing
bool gf2_syndrome_ok(const LdpcCode& code, const ArrayXi& c) {
  std::ostringstream os;
  code.export_parity(os);
  std::istringstream is(os.str());
  std::vector<int> acc(code.n_check(), 0);
  int r, col;
  while (is >> r >> col) acc[r] ^= c(col);
  for (int v : acc)
    if (v) return false;
  return true;
}

}  // namespace

TEST_CASE("code build at the experiment size") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  CHECK(code.n_info() == 130);
  CHECK(code.n_code() == 260);
  // column degree 3, row degree 6 on average
  int edges = 0;
  for (const auto& rc : code.rows()) edges += static_cast<int>(rc.size());
  CHECK(edges == 3 * 260);
  // no 4-cycles: any two rows share at most one column
  for (int r1 = 0; r1 < code.n_check(); ++r1) {
    for (int r2 = r1 + 1; r2 < code.n_check(); ++r2) {
      int shared = 0;
      for (int c1 : code.rows()[r1])
        for (int c2 : code.rows()[r2])
          if (c1 == c2) ++shared;
      CHECK(shared <= 1);
    }
  }
}

TEST_CASE("encode satisfies the parity checks") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  for (uint64_t s = 0; s < 5; ++s) {
    const ArrayXi u = random_bits(130, s);
    const ArrayXi c = code.encode(u);
    CHECK(gf2_syndrome_ok(code, c));
    CHECK((code.extract_info(c) == u).all());
  }
  CHECK((code.encode(ArrayXi::Zero(130)) == 0).all());
  CHECK((code.encode(random_bits(130, 1)) == code.encode(random_bits(130, 1))).all());
}

TEST_CASE("same seed rebuilds the same parity matrix") {
  const LdpcCode a = LdpcCode::build(130, 260, 77);
  const LdpcCode b = LdpcCode::build(130, 260, 77);
  std::ostringstream sa, sb;
  a.export_parity(sa);
  b.export_parity(sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("decoder fixes the noiseless and near-noiseless cases") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  const ArrayXi u = random_bits(130, 9);
  const ArrayXi c = code.encode(u);
  ArrayXr llr(260);
  for (int i = 0; i < 260; ++i) llr(i) = c(i) ? -20.0 : 20.0;
  const DecodeResult res = code.decode_spa(llr, 50);
  CHECK(res.converged);
  CHECK((res.hard_bits == c).all());
}

TEST_CASE("single weak wrong bit is corrected (toy code, ML cross-check)") {
  const LdpcCode code = LdpcCode::build(4, 8, 3);
  // enumerate the 16 codewords for exact ML
  std::vector<ArrayXi> words;
  for (int v = 0; v < 16; ++v) {
    ArrayXi u(4);
    for (int i = 0; i < 4; ++i) u(i) = (v >> i) & 1;
    words.push_back(code.encode(u));
  }
  RngStream rng(2, "test");
  for (int trial = 0; trial < 50; ++trial) {
    const ArrayXi& c = words[rng.next_below(16)];
    ArrayXr llr(8);
    for (int i = 0; i < 8; ++i) llr(i) = c(i) ? -15.0 : 15.0;
    const int flip = rng.next_below(8);
    llr(flip) = c(flip) ? 2.0 : -2.0;  // weak and wrong
    const DecodeResult res = code.decode_spa(llr, 50);
    // exact ML decision
    int best = 0;
    Real bm = -1e300;
    for (int w = 0; w < 16; ++w) {
      Real m = 0;
      for (int i = 0; i < 8; ++i) m += (words[w](i) ? -1 : 1) * llr(i);
      if (m > bm) {
        bm = m;
        best = w;
      }
    }
    CHECK((res.hard_bits == words[best]).all());
    CHECK((res.hard_bits == c).all());
  }
}

TEST_CASE("all-zero llr input gives all-zero extrinsic at iteration 1") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  const DecodeResult res = code.decode_spa(ArrayXr::Zero(260), 1);
  CHECK(res.extrinsic.abs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("extrinsic excludes the bit's own input at iteration 1") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  RngStream rng(4, "test");
  ArrayXr llr(260);
  for (int i = 0; i < 260; ++i) llr(i) = 4.0 * rng.next_gauss();
  const DecodeResult a = code.decode_spa(llr, 1);
  for (int i : {0, 17, 259}) {
    ArrayXr mod = llr;
    mod(i) = 0.0;
    const DecodeResult b = code.decode_spa(mod, 1);
    CHECK(a.extrinsic(i) == doctest::Approx(b.extrinsic(i)).epsilon(1e-12));
  }
}

TEST_CASE("post-decoding BER beats raw BER on a binary-input AWGN channel") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  RngStream rng(11, "test");
  const Real sigma = 0.7;  // Eb/N0 ~ 4.1 dB at rate 1/2
  long raw = 0, post = 0, bits = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ArrayXi u = random_bits(130, 100 + trial);
    const ArrayXi c = code.encode(u);
    ArrayXr llr(260);
    for (int i = 0; i < 260; ++i) {
      const Real x = c(i) ? -1.0 : 1.0;
      const Real y = x + sigma * rng.next_gauss();
      raw += (y < 0) != (x < 0);
      llr(i) = 2.0 * y / (sigma * sigma);
    }
    const DecodeResult res = code.decode_spa(llr, 50);
    post += (code.extract_info(res.hard_bits) != u).count();
    bits += 130;
  }
  CHECK(post * 2 < raw);  // decoded errors are on info bits only; raw over all coded bits
  CHECK(post < bits / 50);
}

TEST_CASE("export/import round trip") {
  const LdpcCode code = LdpcCode::build(130, 260, 5);
  std::ostringstream os;
  code.export_parity(os);
  std::istringstream is(os.str());
  const LdpcCode back = LdpcCode::import_parity(is, 130);
  const ArrayXi u = random_bits(130, 21);
  CHECK(back.syndrome_ok(code.encode(u)));
  std::istringstream empty("");
  CHECK_THROWS(LdpcCode::import_parity(empty, 130));
}
