#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vcpcfg/kernels.hpp"

using namespace vcpcfg::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-6, std::fabs(a) + std::fabs(b));
}

}  // namespace

TEST_CASE("scalar reference kernels: hand values") {
  const auto& k = scalar_ops();
  std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0}, out(3);
  CHECK(k.dot(a.data(), b.data(), 3) == doctest::Approx(12.0));
  k.add(a.data(), b.data(), out.data(), 3);
  CHECK(out[1] == doctest::Approx(-3.0));
  k.sub(a.data(), b.data(), out.data(), 3);
  CHECK(out[0] == doctest::Approx(-3.0));
  k.mul(a.data(), b.data(), out.data(), 3);
  CHECK(out[2] == doctest::Approx(18.0));
  out = {1.0, 1.0, 1.0};
  k.axpy(2.0, a.data(), out.data(), 3);
  CHECK(out[2] == doctest::Approx(7.0));
  k.scale(a.data(), -1.5, out.data(), 3);
  CHECK(out[1] == doctest::Approx(-3.0));
  CHECK(k.sum(a.data(), 3) == doctest::Approx(6.0));
  CHECK(k.max(b.data(), 3) == doctest::Approx(6.0));
}

TEST_CASE("matvec against hand computation") {
  const auto& k = scalar_ops();
  // 2x3 matrix times length-3 vector.
  std::vector<double> m{1, 2, 3, 4, 5, 6}, x{1, 0, -1}, out(2);
  matvec(k, m.data(), x.data(), out.data(), 2, 3);
  CHECK(out[0] == doctest::Approx(-2.0));
  CHECK(out[1] == doctest::Approx(-2.0));
}

TEST_CASE("active backend matches scalar reference on random data") {
  const auto& ref = scalar_ops();
  const auto& act = active();
  std::mt19937_64 rng(2024);
  // Sizes straddle the SIMD width, including ragged tails.
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 64u, 257u}) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    CHECK(rel_err(ref.dot(a.data(), b.data(), n),
                  act.dot(a.data(), b.data(), n)) < 1e-12);
    CHECK(rel_err(ref.sum(a.data(), n), act.sum(a.data(), n)) < 1e-12);
    CHECK(ref.max(a.data(), n) == act.max(a.data(), n));
    std::vector<double> o1(n), o2(n);
    ref.add(a.data(), b.data(), o1.data(), n);
    act.add(a.data(), b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
    ref.mul(a.data(), b.data(), o1.data(), n);
    act.mul(a.data(), b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
    o1 = b;
    o2 = b;
    ref.axpy(0.37, a.data(), o1.data(), n);
    act.axpy(0.37, a.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_err(o1[i], o2[i]) < 1e-12);
  }
}

TEST_CASE("avx2 backend (when present) matches scalar matvec") {
  if (!avx2_available()) return;
  const auto& ref = scalar_ops();
  const auto& vec = avx2_ops();
  std::mt19937_64 rng(7);
  for (std::size_t rows : {1u, 3u, 8u}) {
    for (std::size_t cols : {1u, 5u, 16u, 33u}) {
      auto m = random_vec(rows * cols, rng);
      auto x = random_vec(cols, rng);
      std::vector<double> o1(rows), o2(rows);
      matvec(ref, m.data(), x.data(), o1.data(), rows, cols);
      matvec(vec, m.data(), x.data(), o2.data(), rows, cols);
      for (std::size_t r = 0; r < rows; ++r) CHECK(rel_err(o1[r], o2[r]) < 1e-12);
    }
  }
}
