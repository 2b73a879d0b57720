#include "rpde/paths.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rpde {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double u64_to_unit(std::uint64_t x) {
  // (0,1): top 53 bits, shifted off zero
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// In-place iterative radix-2 FFT; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2 * kPi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& z : a) z /= static_cast<double>(n);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// fractional Gaussian noise autocovariance at unit spacing
double fgn_gamma(double h2, long long k) {
  const double ak = std::abs(static_cast<double>(k));
  return 0.5 * (std::pow(ak + 1.0, h2) - 2.0 * std::pow(ak, h2) +
                std::pow(std::abs(ak - 1.0), h2));
}

// exact fBm increments on a uniform mesh via circulant embedding
// (Davies-Harte); dense Cholesky fallback when the embedding is not
// nonnegative.
std::vector<double> fbm_increments(std::uint64_t seed, int channel, double hurst,
                                   int n, double dt) {
  const double h2 = 2.0 * hurst;
  const std::size_t m = next_pow2(static_cast<std::size_t>(n)) * 2;
  std::vector<std::complex<double>> c(m, 0.0);
  for (std::size_t k = 0; k <= m / 2; ++k)
    c[k] = fgn_gamma(h2, static_cast<long long>(k));
  for (std::size_t k = m / 2 + 1; k < m; ++k)
    c[k] = fgn_gamma(h2, static_cast<long long>(m - k));
  fft_pow2(c, false);
  double min_eig = 0.0;
  for (const auto& z : c) min_eig = std::min(min_eig, z.real());

  std::vector<double> incr(static_cast<std::size_t>(n));
  if (min_eig >= -1e-9) {
    std::vector<std::complex<double>> w(m);
    // hermitian-symmetric gaussian spectrum -> real output
    w[0] = std::sqrt(std::max(0.0, c[0].real())) *
           gaussian_at(seed, static_cast<std::uint64_t>(channel), 100, 0);
    w[m / 2] = std::sqrt(std::max(0.0, c[m / 2].real())) *
               gaussian_at(seed, static_cast<std::uint64_t>(channel), 100, 1);
    for (std::size_t k = 1; k < m / 2; ++k) {
      const double lk = std::sqrt(std::max(0.0, c[k].real()) / 2.0);
      const double g1 = gaussian_at(seed, static_cast<std::uint64_t>(channel),
                                    101, static_cast<std::uint64_t>(k));
      const double g2 = gaussian_at(seed, static_cast<std::uint64_t>(channel),
                                    102, static_cast<std::uint64_t>(k));
      w[k] = std::complex<double>(lk * g1, lk * g2);
      w[m - k] = std::conj(w[k]);
    }
    fft_pow2(w, false);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < n; ++i)
      incr[static_cast<std::size_t>(i)] =
          w[static_cast<std::size_t>(i)].real() * scale;
  } else {
    // dense Cholesky of the fGn covariance (rare pathological n/H combos)
    std::fprintf(stderr,
                 "[paths] circulant embedding not nonnegative (min eig %g); "
                 "falling back to dense Cholesky\n",
                 min_eig);
    std::vector<double> chol(static_cast<std::size_t>(n) *
                             static_cast<std::size_t>(n));
    auto at = [&](int r, int cc) -> double& {
      return chol[static_cast<std::size_t>(r) * n + cc];
    };
    for (int r = 0; r < n; ++r) {
      for (int cc = 0; cc <= r; ++cc) {
        double s = fgn_gamma(h2, r - cc);
        for (int k = 0; k < cc; ++k) s -= at(r, k) * at(cc, k);
        if (r == cc)
          at(r, r) = std::sqrt(std::max(1e-300, s));
        else
          at(r, cc) = s / at(cc, cc);
      }
    }
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int cc = 0; cc <= r; ++cc)
        s += at(r, cc) * gaussian_at(seed, static_cast<std::uint64_t>(channel),
                                     100, static_cast<std::uint64_t>(cc));
      incr[static_cast<std::size_t>(r)] = s;
    }
  }
  const double sdt = std::pow(dt, hurst);
  for (auto& v : incr) v *= sdt;
  return incr;
}

}  // namespace

double gaussian_at(std::uint64_t seed, std::uint64_t channel,
                   std::uint64_t stream, std::uint64_t index) {
  // Box-Muller on two decorrelated splitmix streams
  const std::uint64_t key =
      splitmix64(seed ^ splitmix64(channel ^ splitmix64(stream)));
  const std::uint64_t a = splitmix64(key + 2 * index);
  const std::uint64_t b = splitmix64(key + 2 * index + 1);
  const double u1 = u64_to_unit(a);
  const double u2 = u64_to_unit(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
}

MultiPath sample(const PathRecipe& recipe, const TimeGrid& grid) {
  MultiPath out;
  out.grid = grid;
  out.channels = recipe.channels;
  out.values.assign(static_cast<std::size_t>(recipe.channels),
                    std::vector<double>(static_cast<std::size_t>(grid.size()),
                                        0.0));
  const int n = grid.size();
  switch (recipe.kind) {
    case PathKind::deterministic: {
      if (static_cast<int>(recipe.expressions.size()) != recipe.channels)
        throw ValidationError("sample: expression count != channels");
      for (int c = 0; c < recipe.channels; ++c)
        for (int i = 0; i < n; ++i)
          out.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
              recipe.expressions[static_cast<std::size_t>(c)](grid.t(i));
      break;
    }
    case PathKind::bm: {
      for (int c = 0; c < recipe.channels; ++c) {
        double z = 0.0;
        for (int i = 1; i < n; ++i) {
          const double sd = std::sqrt(grid.dt(i - 1));
          // stream 0 = base level increments
          z += sd * gaussian_at(recipe.seed, static_cast<std::uint64_t>(c), 0,
                                static_cast<std::uint64_t>(i - 1));
          out.values[static_cast<std::size_t>(c)]
                    [static_cast<std::size_t>(i)] = z;
        }
      }
      break;
    }
    case PathKind::fbm: {
      if (!(recipe.hurst > 1.0 / 3.0 && recipe.hurst < 1.0))
        throw ValidationError("sample: hurst must lie in (1/3, 1)");
      // uniform mesh required for the circulant synthesis
      const double dt0 = grid.dt(0);
      for (int i = 1; i < grid.intervals(); ++i)
        if (std::abs(grid.dt(i) - dt0) > 1e-12 * dt0)
          throw ValidationError("sample: fbm needs a uniform grid");
      for (int c = 0; c < recipe.channels; ++c) {
        auto incr = fbm_increments(recipe.seed, c, recipe.hurst, n - 1, dt0);
        double z = 0.0;
        for (int i = 1; i < n; ++i) {
          z += incr[static_cast<std::size_t>(i - 1)];
          out.values[static_cast<std::size_t>(c)]
                    [static_cast<std::size_t>(i)] = z;
        }
      }
      break;
    }
  }
  return out;
}

MultiPath refine(const MultiPath& path, const PathRecipe& recipe, int level) {
  if (level < 0) throw ValidationError("refine: negative level");
  if (level > 12) throw GuardError("refine: level > 12 exceeds memory guard");
  if (level == 0) return path;

  MultiPath out;
  out.grid = path.grid.refine_dyadic(level);
  out.channels = path.channels;
  const int sub = 1 << level;
  const int nf = out.grid.size();
  out.values.assign(static_cast<std::size_t>(path.channels),
                    std::vector<double>(static_cast<std::size_t>(nf), 0.0));

  switch (recipe.kind) {
    case PathKind::deterministic: {
      // piecewise-linear semantics: interpolate the sampled polygon
      for (int c = 0; c < path.channels; ++c) {
        for (int i = 0; i < path.grid.intervals(); ++i) {
          const double zl = path.at(c, i), zr = path.at(c, i + 1);
          for (int k = 0; k < sub; ++k)
            out.values[static_cast<std::size_t>(c)]
                      [static_cast<std::size_t>(i * sub + k)] =
                zl + (zr - zl) * k / sub;
        }
        out.values[static_cast<std::size_t>(c)].back() =
            path.values[static_cast<std::size_t>(c)].back();
      }
      break;
    }
    case PathKind::bm: {
      // midpoint bridge insertion level by level; original nodes untouched
      for (int c = 0; c < path.channels; ++c) {
        std::vector<double> cur = path.values[static_cast<std::size_t>(c)];
        std::vector<double> ts = path.grid.times();
        for (int lev = 1; lev <= level; ++lev) {
          std::vector<double> nxt(cur.size() * 2 - 1);
          std::vector<double> nts(cur.size() * 2 - 1);
          for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
            const double dt = ts[i + 1] - ts[i];
            nxt[2 * i] = cur[i];
            nts[2 * i] = ts[i];
            const double mean = 0.5 * (cur[i] + cur[i + 1]);
            const double sd = 0.5 * std::sqrt(dt);
            // stream = refinement level, index = interval id at that level
            nxt[2 * i + 1] =
                mean + sd * gaussian_at(recipe.seed,
                                        static_cast<std::uint64_t>(c),
                                        static_cast<std::uint64_t>(lev),
                                        static_cast<std::uint64_t>(i));
            nts[2 * i + 1] = 0.5 * (ts[i] + ts[i + 1]);
          }
          nxt.back() = cur.back();
          nts.back() = ts.back();
          cur = std::move(nxt);
          ts = std::move(nts);
        }
        out.values[static_cast<std::size_t>(c)] = cur;
      }
      break;
    }
    case PathKind::fbm: {
      // conditional gaussian synthesis given the existing nodes: exact but
      // dense; intended for desk-scale refinement only
      const int n_old = path.grid.size();
      const int n_new = nf;
      for (int c = 0; c < path.channels; ++c) {
        // covariance of fBm values: r(s,t) = 1/2 (s^2H + t^2H - |t-s|^2H)
        auto cov = [&](double s, double t) {
          const double h2 = 2 * recipe.hurst;
          return 0.5 * (std::pow(s, h2) + std::pow(t, h2) -
                        std::pow(std::abs(t - s), h2));
        };
        // Build joint covariance over old nodes (excluding t=0) and the new
        // interior nodes, condition via Cholesky of the old block.
        std::vector<double> told, tnew;
        std::vector<int> new_ids;
        for (int i = 1; i < n_old; ++i) told.push_back(path.grid.t(i));
        for (int i = 1; i < n_new; ++i)
          if (i % sub != 0) {
            tnew.push_back(out.grid.t(i));
            new_ids.push_back(i);
          }
        const int no = static_cast<int>(told.size());
        const int nn = static_cast<int>(tnew.size());
        std::vector<double> koo(static_cast<std::size_t>(no) * no);
        for (int r = 0; r < no; ++r)
          for (int s = 0; s < no; ++s)
            koo[static_cast<std::size_t>(r) * no + s] =
                cov(told[static_cast<std::size_t>(r)],
                    told[static_cast<std::size_t>(s)]);
        // cholesky
        for (int r = 0; r < no; ++r) {
          for (int s = 0; s <= r; ++s) {
            double acc = koo[static_cast<std::size_t>(r) * no + s];
            for (int k = 0; k < s; ++k)
              acc -= koo[static_cast<std::size_t>(r) * no + k] *
                     koo[static_cast<std::size_t>(s) * no + k];
            koo[static_cast<std::size_t>(r) * no + s] =
                (r == s) ? std::sqrt(std::max(1e-300, acc))
                         : acc / koo[static_cast<std::size_t>(s) * no + s];
          }
          for (int s = r + 1; s < no; ++s)
            koo[static_cast<std::size_t>(r) * no + s] = 0.0;
        }
        auto solve_chol = [&](std::vector<double>& b) {
          for (int r = 0; r < no; ++r) {
            for (int k = 0; k < r; ++k)
              b[static_cast<std::size_t>(r)] -=
                  koo[static_cast<std::size_t>(r) * no + k] *
                  b[static_cast<std::size_t>(k)];
            b[static_cast<std::size_t>(r)] /=
                koo[static_cast<std::size_t>(r) * no + r];
          }
          for (int r = no - 1; r >= 0; --r) {
            for (int k = r + 1; k < no; ++k)
              b[static_cast<std::size_t>(r)] -=
                  koo[static_cast<std::size_t>(k) * no + r] *
                  b[static_cast<std::size_t>(k)];
            b[static_cast<std::size_t>(r)] /=
                koo[static_cast<std::size_t>(r) * no + r];
          }
        };
        // mean = K_no K_oo^{-1} z_old ; cov = K_nn - K_no K_oo^{-1} K_on
        std::vector<double> zold(static_cast<std::size_t>(no));
        for (int i = 0; i < no; ++i)
          zold[static_cast<std::size_t>(i)] = path.at(c, i + 1);
        std::vector<double> w = zold;
        solve_chol(w);  // w = K_oo^{-1} z_old
        std::vector<double> kno(static_cast<std::size_t>(nn) * no);
        for (int r = 0; r < nn; ++r)
          for (int s = 0; s < no; ++s)
            kno[static_cast<std::size_t>(r) * no + s] =
                cov(tnew[static_cast<std::size_t>(r)],
                    told[static_cast<std::size_t>(s)]);
        std::vector<double> mean(static_cast<std::size_t>(nn), 0.0);
        for (int r = 0; r < nn; ++r)
          for (int s = 0; s < no; ++s)
            mean[static_cast<std::size_t>(r)] +=
                kno[static_cast<std::size_t>(r) * no + s] *
                w[static_cast<std::size_t>(s)];
        // conditional covariance, then its Cholesky
        std::vector<double> knn(static_cast<std::size_t>(nn) * nn);
        std::vector<double> tmp(static_cast<std::size_t>(no));
        for (int r = 0; r < nn; ++r) {
          for (int s = 0; s < no; ++s)
            tmp[static_cast<std::size_t>(s)] =
                kno[static_cast<std::size_t>(r) * no + s];
          solve_chol(tmp);
          for (int s2 = 0; s2 < nn; ++s2) {
            double acc = cov(tnew[static_cast<std::size_t>(r)],
                             tnew[static_cast<std::size_t>(s2)]);
            for (int k = 0; k < no; ++k)
              acc -= tmp[static_cast<std::size_t>(k)] *
                     kno[static_cast<std::size_t>(s2) * no + k];
            knn[static_cast<std::size_t>(r) * nn + s2] = acc;
          }
        }
        for (int r = 0; r < nn; ++r) {
          for (int s = 0; s <= r; ++s) {
            double acc = knn[static_cast<std::size_t>(r) * nn + s];
            for (int k = 0; k < s; ++k)
              acc -= knn[static_cast<std::size_t>(r) * nn + k] *
                     knn[static_cast<std::size_t>(s) * nn + k];
            knn[static_cast<std::size_t>(r) * nn + s] =
                (r == s) ? std::sqrt(std::max(0.0, acc))
                         : (knn[static_cast<std::size_t>(s) * nn + s] > 0
                                ? acc / knn[static_cast<std::size_t>(s) * nn + s]
                                : 0.0);
          }
        }
        std::vector<double> g(static_cast<std::size_t>(nn));
        for (int r = 0; r < nn; ++r)
          g[static_cast<std::size_t>(r)] = gaussian_at(
              recipe.seed, static_cast<std::uint64_t>(c),
              200 + static_cast<std::uint64_t>(level),
              static_cast<std::uint64_t>(r));
        // write original nodes bit-exactly, then the conditional draws
        for (int i = 0; i < n_old; ++i)
          out.values[static_cast<std::size_t>(c)]
                    [static_cast<std::size_t>(i * sub)] = path.at(c, i);
        for (int r = 0; r < nn; ++r) {
          double v = mean[static_cast<std::size_t>(r)];
          for (int k = 0; k <= r; ++k)
            v += knn[static_cast<std::size_t>(r) * nn + k] *
                 g[static_cast<std::size_t>(k)];
          out.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(
              new_ids[static_cast<std::size_t>(r)])] = v;
        }
      }
      break;
    }
  }
  return out;
}

std::vector<double> ScalarRoughPath::level1(int i, int j) const {
  std::vector<double> acc(static_cast<std::size_t>(channels), 0.0);
  for (int k = i; k < j; ++k)
    for (int c = 0; c < channels; ++c)
      acc[static_cast<std::size_t>(c)] +=
          z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
  return acc;
}

std::vector<double> ScalarRoughPath::level2(int i, int j) const {
  const int m = channels;
  std::vector<double> acc(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> z1acc(static_cast<std::size_t>(m), 0.0);
  for (int k = i; k < j; ++k) {
    const auto& dz = z1[static_cast<std::size_t>(k)];
    const auto& dz2 = z2[static_cast<std::size_t>(k)];
    // chen: z2(i,k+1) = z2(i,k) + z2(k,k+1) + z1(i,k) (x) z1(k,k+1)
    for (int mu = 0; mu < m; ++mu)
      for (int nu = 0; nu < m; ++nu)
        acc[static_cast<std::size_t>(mu) * m + nu] +=
            dz2[static_cast<std::size_t>(mu) * m + nu] +
            z1acc[static_cast<std::size_t>(mu)] *
                dz[static_cast<std::size_t>(nu)];
    for (int mu = 0; mu < m; ++mu)
      z1acc[static_cast<std::size_t>(mu)] += dz[static_cast<std::size_t>(mu)];
  }
  return acc;
}

double ScalarRoughPath::chen_assoc_defect() const {
  double worst = 0.0;
  const int n = grid.size();
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      for (int j = k + 1; j < n; ++j) {
        auto direct = level2(i, j);
        auto a = level2(i, k);
        auto b = level2(k, j);
        auto za = level1(i, k);
        auto zb = level1(k, j);
        for (int mu = 0; mu < channels; ++mu)
          for (int nu = 0; nu < channels; ++nu) {
            const std::size_t id =
                static_cast<std::size_t>(mu) * channels + nu;
            const double comp = a[id] + b[id] +
                                za[static_cast<std::size_t>(mu)] *
                                    zb[static_cast<std::size_t>(nu)];
            worst = std::max(worst, std::abs(direct[id] - comp));
          }
      }
    }
  }
  return worst;
}

double ScalarRoughPath::geometricity_defect() const {
  double worst = 0.0;
  for (int k = 0; k < intervals(); ++k) {
    for (int mu = 0; mu < channels; ++mu)
      for (int nu = 0; nu < channels; ++nu) {
        const double sym =
            0.5 * (z2[static_cast<std::size_t>(k)]
                     [static_cast<std::size_t>(mu) * channels + nu] +
                   z2[static_cast<std::size_t>(k)]
                     [static_cast<std::size_t>(nu) * channels + mu]);
        const double half =
            0.5 * z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(mu)] *
            z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(nu)];
        worst = std::max(worst, std::abs(sym - half));
      }
  }
  return worst;
}

ScalarRoughPath pl_level2(const MultiPath& path) {
  ScalarRoughPath rp;
  rp.grid = path.grid;
  rp.channels = path.channels;
  const int m = path.channels;
  rp.z1.assign(static_cast<std::size_t>(path.grid.intervals()),
               std::vector<double>(static_cast<std::size_t>(m), 0.0));
  rp.z2.assign(static_cast<std::size_t>(path.grid.intervals()),
               std::vector<double>(static_cast<std::size_t>(m) * m, 0.0));
  for (int k = 0; k < path.grid.intervals(); ++k) {
    for (int c = 0; c < m; ++c)
      rp.z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] =
          path.at(c, k + 1) - path.at(c, k);
    for (int mu = 0; mu < m; ++mu)
      for (int nu = 0; nu < m; ++nu)
        rp.z2[static_cast<std::size_t>(k)]
             [static_cast<std::size_t>(mu) * m + nu] =
            0.5 * rp.z1[static_cast<std::size_t>(k)]
                       [static_cast<std::size_t>(mu)] *
            rp.z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(nu)];
  }
  return rp;
}

ScalarRoughPath coarsen(const ScalarRoughPath& rp, const TimeGrid& coarse) {
  // locate coarse nodes on the fine grid
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(coarse.size()));
  int j = 0;
  for (int i = 0; i < coarse.size(); ++i) {
    while (j < rp.grid.size() &&
           rp.grid.t(j) < coarse.t(i) - 1e-12 * (1 + std::abs(coarse.t(i))))
      ++j;
    if (j >= rp.grid.size() ||
        std::abs(rp.grid.t(j) - coarse.t(i)) >
            1e-12 * (1 + std::abs(coarse.t(i))))
      throw ValidationError("coarsen: coarse grid is not a subgrid");
    idx.push_back(j);
  }
  ScalarRoughPath out;
  out.grid = coarse;
  out.channels = rp.channels;
  for (int i = 0; i + 1 < coarse.size(); ++i) {
    out.z1.push_back(rp.level1(idx[static_cast<std::size_t>(i)],
                               idx[static_cast<std::size_t>(i + 1)]));
    out.z2.push_back(rp.level2(idx[static_cast<std::size_t>(i)],
                               idx[static_cast<std::size_t>(i + 1)]));
  }
  return out;
}

void write_path_csv(const std::string& file, const MultiPath& path) {
  std::ofstream os(file);
  if (!os) throw ValidationError("write_path_csv: cannot open " + file);
  os << "t";
  for (int c = 0; c < path.channels; ++c) os << ",channel_" << c;
  os << "\n";
  char buf[64];
  for (int i = 0; i < path.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", path.grid.t(i));
    os << buf;
    for (int c = 0; c < path.channels; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", path.at(c, i));
      os << "," << buf;
    }
    os << "\n";
  }
}

MultiPath read_path_csv(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("read_path_csv: cannot open " + file);
  std::string line;
  if (!std::getline(is, line))
    throw ValidationError("read_path_csv: empty file");
  int channels = -1;
  std::vector<double> ts;
  std::vector<std::vector<double>> vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (channels < 0) {
      channels = static_cast<int>(row.size()) - 1;
      vals.assign(static_cast<std::size_t>(channels), {});
    }
    if (static_cast<int>(row.size()) != channels + 1)
      throw ValidationError("read_path_csv: ragged row");
    ts.push_back(row[0]);
    for (int c = 0; c < channels; ++c)
      vals[static_cast<std::size_t>(c)].push_back(
          row[static_cast<std::size_t>(c) + 1]);
  }
  MultiPath mp;
  mp.grid = TimeGrid(std::move(ts));
  mp.channels = channels;
  mp.values = std::move(vals);
  return mp;
}

}  // namespace rpde
