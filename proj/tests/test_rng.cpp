#include <doctest.h>

#include "dcsjced/rng.hpp"

using namespace dcsjced;

TEST_CASE("streams are deterministic and keyed") {
  RngStream a(42, "noise", 3), b(42, "noise", 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(42, "noise", 4), d(42, "bits", 3), e(43, "noise", 3);
  RngStream a2(42, "noise", 3);
  CHECK(a2.next_u64() != c.next_u64());
  CHECK(a2.next_u64() != d.next_u64());
  CHECK(a2.next_u64() != e.next_u64());
}

TEST_CASE("uniform and gaussian moments") {
  RngStream rng(7, "test");
  const int n = 200000;
  double su = 0, sg = 0, sg2 = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.next_double();
    const double g = rng.next_gauss();
    sg += g;
    sg2 += g * g;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sg / n) < 0.01);
  CHECK(sg2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("complex gaussian variance convention splits evenly") {
  RngStream rng(7, "test");
  const int n = 100000;
  double vr = 0, vi = 0;
  for (int i = 0; i < n; ++i) {
    const Complex z = rng.next_cgauss(2.0);
    vr += z.real() * z.real();
    vi += z.imag() * z.imag();
  }
  CHECK(vr / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(vi / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("permutation is a bijection") {
  RngStream rng(1, "perm");
  const auto p = rng.permutation(257);
  std::vector<char> seen(257, 0);
  for (int v : p) {
    CHECK(v >= 0);
    CHECK(v < 257);
    CHECK(!seen[v]);
    seen[v] = 1;
  }
}
