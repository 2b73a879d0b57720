#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Low-level data-parallel kernels over node arrays.
//
// Every kernel exists in two variants: a plain serial loop (namespace
// `serial`) and an OpenMP one (namespace `par`). The parallel variants are
// value-deterministic for any thread count: elementwise maps write disjoint
// slots, and reductions accumulate fixed-size blocks whose partial sums are
// combined in index order. `serial` and `par` therefore produce bit-identical
// results, which the kernel tests assert and the benchmark relies on.

namespace rpde::kern {

enum class Backend { serial, parallel };

Backend backend() noexcept;
void set_backend(Backend b) noexcept;

// Block length for deterministic reductions. Fixed; not tied to thread count.
inline constexpr std::size_t reduce_block = 4096;

namespace serial {

void axpy(double a, std::span<const double> x, std::span<double> y);           // y += a*x
void scale(std::span<double> x, double a);                                     // x *= a
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out);                                        // out = x + a*y
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out);                                          // out = x.*y
double block_sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);

// Periodic central differences on a structured grid, axis-strided:
// first[i] = (x[i+s] - x[i-s]) / (2h), second[i] = (x[i+s] - 2x[i] + x[i-s]) / h^2.
void diff1_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h);
void diff2_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h);
void diff1_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h);
void diff2_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h);

}  // namespace serial

namespace par {

void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double a);
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out);
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out);
double block_sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);

void diff1_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h);
void diff2_periodic(std::span<const double> x, std::span<double> out,
                    std::size_t n0, std::size_t n1, int axis, double h);
void diff1_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h);
void diff2_dirichlet(std::span<const double> x, std::span<double> out,
                     std::size_t n0, std::size_t n1, int axis, double h);

}  // namespace par

// Dispatched entry points used by the field layer.
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double a);
void add_scaled(std::span<const double> x, double a, std::span<const double> y,
                std::span<double> out);
void hadamard(std::span<const double> x, std::span<const double> y,
              std::span<double> out);
double block_sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);
void diff1(std::span<const double> x, std::span<double> out, std::size_t n0,
           std::size_t n1, int axis, double h, bool periodic);
void diff2(std::span<const double> x, std::span<double> out, std::size_t n0,
           std::size_t n1, int axis, double h, bool periodic);

// Conjugate gradient for an SPD operator given as a matvec callback.
// All inner products use the deterministic blocked sum.
struct CgResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

template <class MatVec>
CgResult cg_solve(const MatVec& apply, std::span<const double> b,
                  std::span<double> x, double rel_tol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), p(n), ap(n);
  apply(x, std::span<double>(ap));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  p.assign(r.begin(), r.end());
  const double b2 = dot(b, b);
  const double stop2 = rel_tol * rel_tol * (b2 > 0 ? b2 : 1.0);
  double r2 = dot(r, r);
  CgResult res;
  while (res.iterations < max_iter && r2 > stop2) {
    apply(std::span<const double>(p), std::span<double>(ap));
    const double pap = dot(p, ap);
    if (pap <= 0) break;  // not SPD or breakdown
    const double alpha = r2 / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, std::span<double>(r));
    const double r2n = dot(r, r);
    const double beta = r2n / r2;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    r2 = r2n;
    ++res.iterations;
  }
  res.residual = std::sqrt(r2 / (b2 > 0 ? b2 : 1.0));
  res.converged = r2 <= stop2;
  return res;
}

}  // namespace rpde::kern
