#include "rpde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace rpde::kern {

namespace {

Backend g_backend = [] {
#ifdef _OPENMP
  if (const char* env = std::getenv("RPDE_BACKEND")) {
    if (std::strcmp(env, "serial") == 0) return Backend::serial;
  }
  return Backend::parallel;
#else
  return Backend::serial;
#endif
}();

// index helpers for axis-strided structured sweeps; n0 is the slow axis.
inline std::size_t stride_of(std::size_t /*n0*/, std::size_t n1, int axis) {
  return axis == 0 ? n1 : 1;
}
inline std::size_t count_of(std::size_t n0, std::size_t n1, int axis) {
  return axis == 0 ? n0 : n1;
}

template <class F>
void sweep_lines(std::size_t n0, std::size_t n1, int axis, const F& line) {
  // iterate over all 1-d lines along `axis`
  const std::size_t nline = axis == 0 ? n1 : n0;
  const std::size_t line_stride = axis == 0 ? 1 : n1;
  for (std::size_t l = 0; l < nline; ++l) line(l * line_stride);
}

inline void d1_line_periodic(const double* x, double* out, std::size_t n,
                             std::size_t s, double inv2h) {
  if (n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i * s] = 0.0;
    return;
  }
  out[0] = (x[s] - x[(n - 1) * s]) * inv2h;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * s] = (x[(i + 1) * s] - x[(i - 1) * s]) * inv2h;
  out[(n - 1) * s] = (x[0] - x[(n - 2) * s]) * inv2h;
}

inline void d2_line_periodic(const double* x, double* out, std::size_t n,
                             std::size_t s, double invh2) {
  if (n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i * s] = 0.0;
    return;
  }
  out[0] = (x[s] - 2 * x[0] + x[(n - 1) * s]) * invh2;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * s] = (x[(i + 1) * s] - 2 * x[i * s] + x[(i - 1) * s]) * invh2;
  out[(n - 1) * s] = (x[0] - 2 * x[(n - 1) * s] + x[(n - 2) * s]) * invh2;
}

// Dirichlet: the array is a function vanishing at (and outside) the boundary
// nodes; interior uses central stencils against stored neighbor values, the
// boundary rows use one-sided second-order formulas.
inline void d1_line_dirichlet(const double* x, double* out, std::size_t n,
                              std::size_t s, double inv2h) {
  if (n < 3) {
    for (std::size_t i = 0; i < n; ++i) out[i * s] = 0.0;
    return;
  }
  out[0] = (-3 * x[0] + 4 * x[s] - x[2 * s]) * inv2h;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * s] = (x[(i + 1) * s] - x[(i - 1) * s]) * inv2h;
  out[(n - 1) * s] =
      (3 * x[(n - 1) * s] - 4 * x[(n - 2) * s] + x[(n - 3) * s]) * inv2h;
}

inline void d2_line_dirichlet(const double* x, double* out, std::size_t n,
                              std::size_t s, double invh2) {
  if (n < 4) {
    for (std::size_t i = 0; i < n; ++i) out[i * s] = 0.0;
    return;
  }
  out[0] = (2 * x[0] - 5 * x[s] + 4 * x[2 * s] - x[3 * s]) * invh2;
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * s] = (x[(i + 1) * s] - 2 * x[i * s] + x[(i - 1) * s]) * invh2;
  out[(n - 1) * s] = (2 * x[(n - 1) * s] - 5 * x[(n - 2) * s] +
                      4 * x[(n - 3) * s] - x[(n - 4) * s]) *
                     invh2;
}

double blocked_sum_range(const double* x, std::size_t n,
                         std::vector<double>& partial, bool parallel) {
  const std::size_t nblocks = (n + reduce_block - 1) / reduce_block;
  partial.assign(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long long bi = 0; bi < static_cast<long long>(nblocks); ++bi) {
    const std::size_t lo = static_cast<std::size_t>(bi) * reduce_block;
    const std::size_t hi = std::min(lo + reduce_block, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    partial[static_cast<std::size_t>(bi)] = s;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

double blocked_dot_range(const double* x, const double* y, std::size_t n,
                         std::vector<double>& partial, bool parallel) {
  const std::size_t nblocks = (n + reduce_block - 1) / reduce_block;
  partial.assign(nblocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long long bi = 0; bi < static_cast<long long>(nblocks); ++bi) {
    const std::size_t lo = static_cast<std::size_t>(bi) * reduce_block;
    const std::size_t hi = std::min(lo + reduce_block, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
    partial[static_cast<std::size_t>(bi)] = s;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace

Backend backend() noexcept { return g_backend; }
void set_backend(Backend b) noexcept {
#ifndef _OPENMP
  (void)b;
  g_backend = Backend::serial;
#else
  g_backend = b;
#endif
}

namespace serial {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}
void scale(std::span<double> x, double a) {
  for (double& v : x) v *= a;
}
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
}
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
}
double block_sum(std::span<const double> x) {
  std::vector<double> partial;
  return blocked_sum_range(x.data(), x.size(), partial, false);
}
double dot(std::span<const double> x, std::span<const double> y) {
  std::vector<double> partial;
  return blocked_dot_range(x.data(), y.data(), x.size(), partial, false);
}
double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

void diff1_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  sweep_lines(n0, n1, axis, [&](std::size_t base) {
    d1_line_periodic(x.data() + base, out.data() + base, n, s, 0.5 / h);
  });
}
void diff2_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  sweep_lines(n0, n1, axis, [&](std::size_t base) {
    d2_line_periodic(x.data() + base, out.data() + base, n, s, 1.0 / (h * h));
  });
}
void diff1_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  sweep_lines(n0, n1, axis, [&](std::size_t base) {
    d1_line_dirichlet(x.data() + base, out.data() + base, n, s, 0.5 / h);
  });
}
void diff2_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  sweep_lines(n0, n1, axis, [&](std::size_t base) {
    d2_line_dirichlet(x.data() + base, out.data() + base, n, s, 1.0 / (h * h));
  });
}

}  // namespace serial

namespace par {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const long long n = static_cast<long long>(x.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) y[i] += a * x[i];
}
void scale(std::span<double> x, double a) {
  const long long n = static_cast<long long>(x.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) x[i] *= a;
}
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out) {
  const long long n = static_cast<long long>(x.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out) {
  const long long n = static_cast<long long>(x.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) out[i] = x[i] * y[i];
}
double block_sum(std::span<const double> x) {
  std::vector<double> partial;
  return blocked_sum_range(x.data(), x.size(), partial, true);
}
double dot(std::span<const double> x, std::span<const double> y) {
  std::vector<double> partial;
  return blocked_dot_range(x.data(), y.data(), x.size(), partial, true);
}
double max_abs(std::span<const double> x) {
  const long long n = static_cast<long long>(x.size());
  double m = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (long long i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void diff1_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  const long long nline = static_cast<long long>(axis == 0 ? n1 : n0);
  const std::size_t line_stride = axis == 0 ? 1 : n1;
  const double inv2h = 0.5 / h;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long l = 0; l < nline; ++l)
    d1_line_periodic(x.data() + l * line_stride, out.data() + l * line_stride,
                     n, s, inv2h);
}
void diff2_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  const long long nline = static_cast<long long>(axis == 0 ? n1 : n0);
  const std::size_t line_stride = axis == 0 ? 1 : n1;
  const double invh2 = 1.0 / (h * h);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long l = 0; l < nline; ++l)
    d2_line_periodic(x.data() + l * line_stride, out.data() + l * line_stride,
                     n, s, invh2);
}
void diff1_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  const long long nline = static_cast<long long>(axis == 0 ? n1 : n0);
  const std::size_t line_stride = axis == 0 ? 1 : n1;
  const double inv2h = 0.5 / h;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long l = 0; l < nline; ++l)
    d1_line_dirichlet(x.data() + l * line_stride, out.data() + l * line_stride,
                      n, s, inv2h);
}
void diff2_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h) {
  const std::size_t s = stride_of(n0, n1, axis), n = count_of(n0, n1, axis);
  const long long nline = static_cast<long long>(axis == 0 ? n1 : n0);
  const std::size_t line_stride = axis == 0 ? 1 : n1;
  const double invh2 = 1.0 / (h * h);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long l = 0; l < nline; ++l)
    d2_line_dirichlet(x.data() + l * line_stride, out.data() + l * line_stride,
                      n, s, invh2);
}

}  // namespace par

#define RPDE_DISPATCH(fn, ...)                                 \
  ((g_backend == Backend::parallel) ? par::fn(__VA_ARGS__) \
                                    : serial::fn(__VA_ARGS__))

void axpy(double a, std::span<const double> x, std::span<double> y) {
  RPDE_DISPATCH(axpy, a, x, y);
}
void scale(std::span<double> x, double a) { RPDE_DISPATCH(scale, x, a); }
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out) {
  RPDE_DISPATCH(add_scaled, x, a, y, out);
}
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out) {
  RPDE_DISPATCH(hadamard, x, y, out);
}
double block_sum(std::span<const double> x) {
  return RPDE_DISPATCH(block_sum, x);
}
double dot(std::span<const double> x, std::span<const double> y) {
  return RPDE_DISPATCH(dot, x, y);
}
double max_abs(std::span<const double> x) {
  return RPDE_DISPATCH(max_abs, x);
}
void diff1(std::span<const double> x, std::span<double> out, std::size_t n0,
           std::size_t n1, int axis, double h, bool periodic) {
  if (periodic)
    RPDE_DISPATCH(diff1_periodic, x, out, n0, n1, axis, h);
  else
    RPDE_DISPATCH(diff1_dirichlet, x, out, n0, n1, axis, h);
}
void diff2(std::span<const double> x, std::span<double> out, std::size_t n0,
           std::size_t n1, int axis, double h, bool periodic) {
  if (periodic)
    RPDE_DISPATCH(diff2_periodic, x, out, n0, n1, axis, h);
  else
    RPDE_DISPATCH(diff2_dirichlet, x, out, n0, n1, axis, h);
}

#undef RPDE_DISPATCH

}  // namespace rpde::kern
