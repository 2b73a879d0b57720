#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rpde/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace rpde;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("serial and parallel elementwise kernels are bit-identical") {
  const std::size_t n = 10000;
  auto x = random_vec(n, 1);
  auto y1 = random_vec(n, 2);
  auto y2 = y1;
  kern::serial::axpy(0.37, x, y1);
  kern::par::axpy(0.37, x, y2);
  CHECK(y1 == y2);

  std::vector<double> o1(n), o2(n);
  kern::serial::add_scaled(x, -2.5, y1, o1);
  kern::par::add_scaled(x, -2.5, y2, o2);
  CHECK(o1 == o2);

  kern::serial::hadamard(x, y1, o1);
  kern::par::hadamard(x, y2, o2);
  CHECK(o1 == o2);
}

TEST_CASE("blocked reductions are bit-identical across backends") {
  for (std::size_t n : {1u, 100u, 4096u, 4097u, 100000u}) {
    auto x = random_vec(n, 3);
    auto y = random_vec(n, 4);
    CHECK(kern::serial::block_sum(x) == kern::par::block_sum(x));
    CHECK(kern::serial::dot(x, y) == kern::par::dot(x, y));
    CHECK(kern::serial::max_abs(x) == kern::par::max_abs(x));
  }
}

#ifdef _OPENMP
TEST_CASE("reductions do not depend on the thread count") {
  const auto x = random_vec(200000, 5);
  omp_set_num_threads(1);
  const double s1 = kern::par::block_sum(x);
  const double d1 = kern::par::dot(x, x);
  omp_set_num_threads(2);
  const double s2 = kern::par::block_sum(x);
  const double d2 = kern::par::dot(x, x);
  CHECK(s1 == s2);
  CHECK(d1 == d2);
}
#endif

TEST_CASE("stencil kernels match between backends") {
  const std::size_t n0 = 37, n1 = 29;
  auto x = random_vec(n0 * n1, 7);
  std::vector<double> a(n0 * n1), b(n0 * n1);
  for (int axis = 0; axis < 2; ++axis) {
    kern::serial::diff1_periodic(x, a, n0, n1, axis, 0.01);
    kern::par::diff1_periodic(x, b, n0, n1, axis, 0.01);
    CHECK(a == b);
    kern::serial::diff2_periodic(x, a, n0, n1, axis, 0.01);
    kern::par::diff2_periodic(x, b, n0, n1, axis, 0.01);
    CHECK(a == b);
    kern::serial::diff1_dirichlet(x, a, n0, n1, axis, 0.01);
    kern::par::diff1_dirichlet(x, b, n0, n1, axis, 0.01);
    CHECK(a == b);
    kern::serial::diff2_dirichlet(x, a, n0, n1, axis, 0.01);
    kern::par::diff2_dirichlet(x, b, n0, n1, axis, 0.01);
    CHECK(a == b);
  }
}

TEST_CASE("cg solves a synthetic SPD system to tight tolerance") {
  // 1-d shifted laplacian (I + L) with periodic wrap
  const std::size_t n = 128;
  auto matvec = [n](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) {
      const double left = in[(i + n - 1) % n];
      const double right = in[(i + 1) % n];
      out[i] = in[i] + (2.0 * in[i] - left - right) * 30.0;
    }
  };
  auto b = random_vec(n, 11);
  std::vector<double> x(n, 0.0);
  auto res = kern::cg_solve(matvec, b, std::span<double>(x), 1e-13, 2000);
  CHECK(res.converged);
  std::vector<double> ax(n);
  matvec(x, std::span<double>(ax));
  double err = 0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(ax[i] - b[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("first difference is exact on linear periodic-free data") {
  // dirichlet variant: f(x) = 3x on a line, one-sided rows included
  const std::size_t n = 16;
  std::vector<double> x(n), out(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 3.0 * static_cast<double>(i);
  kern::diff1(x, out, n, 1, 0, 1.0, /*periodic=*/false);
  for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(3.0));
}
