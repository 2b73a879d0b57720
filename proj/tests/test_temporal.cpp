#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rpde/paths.hpp"
#include "rpde/temporal.hpp"

using namespace rpde;

namespace {

// brute-force q-variation: enumerate every partition of a small grid window
double pvar_brute(const ScalarTwoParam& g, double alpha, int lo, int hi) {
  const double q = 1.0 / alpha;
  const int interior = hi - lo - 1;
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << interior); ++mask) {
    std::vector<int> pts{lo};
    for (int b = 0; b < interior; ++b)
      if (mask & (1u << b)) pts.push_back(lo + 1 + b);
    pts.push_back(hi);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      acc += std::pow(g.norm_at(pts[k], pts[k + 1]), q);
    best = std::max(best, acc);
  }
  return std::pow(best, alpha);
}

std::vector<double> random_path(const TimeGrid& tg, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(tg.size()));
  for (auto& v : p) v = u(rng);
  return p;
}

}  // namespace

TEST_CASE("delta1 produces plain increments") {
  TimeGrid tg({0.0, 0.5, 1.0});
  auto g = delta1<double>(tg, {0.0, 1.0, 0.0}, abs_norm);
  CHECK(g.at(0, 1) == 1.0);
  CHECK(g.at(1, 2) == -1.0);
  CHECK(g.at(0, 2) == 0.0);
  CHECK(g.at(1, 1) == 0.0);

  auto c = delta1<double>(tg, {2.0, 2.0, 2.0}, abs_norm);
  for (auto [key, v] : c.entries()) CHECK(v == 0.0);

  TimeGrid tg2 = TimeGrid::uniform(2.0, 7);
  std::vector<double> linear(tg2.times().begin(), tg2.times().end());
  auto lin = delta1<double>(tg2, linear, abs_norm);
  for (int i = 0; i < tg2.size(); ++i)
    for (int j = i + 1; j < tg2.size(); ++j)
      CHECK(lin.at(i, j) == doctest::Approx(tg2.t(j) - tg2.t(i)));
}

TEST_CASE("delta1 rejects length mismatch") {
  TimeGrid tg({0.0, 1.0});
  CHECK_THROWS_AS(delta1<double>(tg, {1.0, 2.0, 3.0}, abs_norm),
                  ValidationError);
}

TEST_CASE("delta2 annihilates delta1") {
  TimeGrid tg = TimeGrid::uniform(1.0, 9);
  for (unsigned seed : {1u, 2u, 3u}) {
    auto g = delta1<double>(tg, random_path(tg, seed), abs_norm);
    for (auto& [key, v] : delta2(g)) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("delta2 of the Young germ and of a constant field") {
  TimeGrid tg = TimeGrid::uniform(1.0, 6);
  auto z = random_path(tg, 5);
  ScalarTwoParam g(tg, abs_norm);
  for (int i = 0; i < tg.size(); ++i)
    for (int j = i + 1; j < tg.size(); ++j)
      g.set(i, j, z[static_cast<std::size_t>(i)] *
                      (z[static_cast<std::size_t>(j)] -
                       z[static_cast<std::size_t>(i)]));
  for (int i = 0; i < tg.size(); ++i)
    for (int k = i; k < tg.size(); ++k)
      for (int j = k; j < tg.size(); ++j) {
        const double expect = -(z[static_cast<std::size_t>(k)] -
                                z[static_cast<std::size_t>(i)]) *
                              (z[static_cast<std::size_t>(j)] -
                               z[static_cast<std::size_t>(k)]);
        CHECK(delta2_at(g, i, k, j) == doctest::Approx(expect).epsilon(1e-12));
      }

  ScalarTwoParam cf(tg, abs_norm);
  for (int i = 0; i < tg.size(); ++i)
    for (int j = i + 1; j < tg.size(); ++j) cf.set(i, j, 0.7);
  for (int i = 0; i < tg.size(); ++i)
    for (int k = i + 1; k < tg.size(); ++k)
      for (int j = k + 1; j < tg.size(); ++j)
        CHECK(delta2_at(cf, i, k, j) == doctest::Approx(-0.7));
}

TEST_CASE("pvar_norm matches hand values and the brute-force oracle") {
  TimeGrid tg({0.0, 0.5, 1.0});
  auto zig = delta1<double>(tg, {0.0, 1.0, 0.0}, abs_norm);
  CHECK(pvar_norm(zig, 1.0, {0, 2}) == doctest::Approx(2.0));
  CHECK(pvar_norm(zig, 0.5, {0, 2}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(pvar_brute(zig, 0.5, 0, 2) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  TimeGrid tgl = TimeGrid::uniform(1.0, 8);
  std::vector<double> lin(tgl.times().begin(), tgl.times().end());
  auto dlin = delta1<double>(tgl, lin, abs_norm);
  CHECK(pvar_norm(dlin, 1.0, {0, 8}) == doctest::Approx(1.0));

  // random fields: DP equals exhaustive enumeration
  TimeGrid tgr = TimeGrid::uniform(1.0, 7);
  for (unsigned seed : {11u, 12u, 13u}) {
    auto g = delta1<double>(tgr, random_path(tgr, seed), abs_norm);
    for (double alpha : {1.0, 0.5, 0.3}) {
      CHECK(pvar_norm(g, alpha, {0, 7}) ==
            doctest::Approx(pvar_brute(g, alpha, 0, 7)).epsilon(1e-12));
    }
  }
}

TEST_CASE("pvar_norm rejects bad exponents and is window-monotone") {
  TimeGrid tg = TimeGrid::uniform(1.0, 8);
  auto g = delta1<double>(tg, random_path(tg, 21), abs_norm);
  CHECK_THROWS_AS(pvar_norm(g, 0.0, {0, 8}), ValidationError);
  CHECK_THROWS_AS(pvar_norm(g, 1.5, {0, 8}), ValidationError);
  for (double alpha : {1.0, 0.5}) {
    double prev = 0.0;
    for (int hi = 1; hi <= 8; ++hi) {
      const double v = pvar_norm(g, alpha, {0, hi});
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("pvar-derived controls are superadditive") {
  TimeGrid tg = TimeGrid::uniform(1.0, 10);
  for (unsigned seed : {31u, 32u}) {
    auto g = delta1<double>(tg, random_path(tg, seed), abs_norm);
    for (double alpha : {1.0, 0.5}) {
      auto rep = control_check(fitted_control(g, alpha), tg, 1e-12);
      CHECK(rep.is_control);
      // and the fitted control reproduces the norm
      CHECK(std::pow(fitted_control(g, alpha)(0, 10), alpha) ==
            doctest::Approx(pvar_norm(g, alpha, {0, 10})).epsilon(1e-12));
    }
  }
}

TEST_CASE("control_check classifies the standard examples") {
  TimeGrid tg = TimeGrid::uniform(1.0, 8);
  CHECK(control_check(ControlFn::power_gap(tg, 1.0, 1.0), tg, 1e-12)
            .is_control);
  CHECK(control_check(ControlFn::power_gap(tg, 1.0, 2.0), tg, 1e-12)
            .is_control);
  auto rep = control_check(ControlFn::power_gap(tg, 1.0, 0.5), tg, 1e-12);
  CHECK_FALSE(rep.is_control);
  CHECK(rep.defect > 0.1);
}

TEST_CASE("holder_fit recovers synthetic exponents") {
  TimeGrid tg = TimeGrid::uniform(1.0, 32);
  for (double beta : {1.0, 2.0, 0.7}) {
    ScalarTwoParam g(tg, abs_norm);
    for (auto [i, j] : dyadic_pairs(0, 32))
      g.set(i, j, 1.7 * std::pow(tg.t(j) - tg.t(i), beta));
    auto fit = holder_fit(g, {0, 32});
    CHECK(fit.exponent == doctest::Approx(beta).epsilon(1e-6));
    CHECK(fit.r2 > 0.999999);
  }
}

TEST_CASE("holder_fit needs four gap sizes") {
  TimeGrid tg = TimeGrid::uniform(1.0, 4);  // gaps 1,2,4 only
  ScalarTwoParam g(tg, abs_norm);
  for (auto [i, j] : dyadic_pairs(0, 4)) g.set(i, j, tg.t(j) - tg.t(i));
  CHECK_THROWS_AS(holder_fit(g, {0, 4}), InsufficientDataError);
}

TEST_CASE("holder_fit on brownian increments sits near one half") {
  TimeGrid tg = TimeGrid::uniform(1.0, 256);
  std::vector<double> slopes;
  for (int seed = 1; seed <= 100; ++seed) {
    PathRecipe rec;
    rec.kind = PathKind::bm;
    rec.seed = static_cast<std::uint64_t>(seed);
    MultiPath w = sample(rec, tg);
    auto g = delta1<double>(tg, w.values[0], abs_norm);
    slopes.push_back(holder_fit(g, {0, 256}).exponent);
  }
  std::sort(slopes.begin(), slopes.end());
  const double median = slopes[slopes.size() / 2];
  CHECK(median == doctest::Approx(0.5).epsilon(0.2));
  CHECK(std::abs(median - 0.5) < 0.1);
}

TEST_CASE("roughness_ratio: linear path is flat, zero path vanishes") {
  TimeGrid tg = TimeGrid::uniform(1.0, 64);
  std::vector<double> lin(tg.times().begin(), tg.times().end());
  auto ratios = roughness_ratio(tg, lin, 0.5, 48);
  for (double r : ratios) CHECK(r == doctest::Approx(1.0).epsilon(0.05));

  std::vector<double> zero(static_cast<std::size_t>(tg.size()), 0.0);
  for (double r : roughness_ratio(tg, zero, 0.5, 48)) CHECK(r == 0.0);

  CHECK_THROWS_AS(roughness_ratio(tg, lin, 0.5, 0), InsufficientDataError);
}

TEST_CASE("roughness_ratio flags brownian paths as rough") {
  TimeGrid tg = TimeGrid::uniform(1.0, 256);
  std::vector<double> maxima;
  for (int seed = 1; seed <= 100; ++seed) {
    PathRecipe rec;
    rec.kind = PathKind::bm;
    rec.seed = static_cast<std::uint64_t>(seed);
    MultiPath w = sample(rec, tg);
    auto ratios = roughness_ratio(tg, w.values[0], 0.5, 200);
    maxima.push_back(*std::max_element(ratios.begin(), ratios.end()));
  }
  std::sort(maxima.begin(), maxima.end());
  CHECK(maxima[maxima.size() / 2] > 2.0);
}
