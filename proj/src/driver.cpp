#include "rpde/driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rpde {

namespace {

// (X_new . grad) applied to each component of a coefficient bundle
std::vector<ScalarField> advect(const std::vector<ScalarField>& x_new,
                                const std::vector<ScalarField>& target) {
  std::vector<ScalarField> out;
  out.reserve(target.size());
  for (const auto& comp : target) {
    ScalarField acc(comp.grid());
    for (int mu = 0; mu < comp.grid().dim(); ++mu)
      acc += pointwise(x_new[static_cast<std::size_t>(mu)],
                       derivative(comp, mu));
    out.push_back(std::move(acc));
  }
  return out;
}

ScalarField advect_scalar(const std::vector<ScalarField>& x_new,
                          const ScalarField& target) {
  ScalarField acc(target.grid());
  for (int mu = 0; mu < target.grid().dim(); ++mu)
    acc += pointwise(x_new[static_cast<std::size_t>(mu)],
                     derivative(target, mu));
  return acc;
}

SecondOrderOp level2_from(const DriverLevels& lv, const SpatialGrid& g) {
  SecondOrderOp op = SecondOrderOp::zero(g);
  const int d = g.dim();
  // 1/2 X (x) X packed upper triangle
  if (d == 1) {
    op.xx[0] = pointwise(lv.x[0], lv.x[0]);
    op.xx[0] *= 0.5;
  } else {
    op.xx[0] = pointwise(lv.x[0], lv.x[0]);
    op.xx[0] *= 0.5;
    op.xx[1] = pointwise(lv.x[0], lv.x[1]);
    op.xx[1] *= 0.5;
    op.xx[2] = pointwise(lv.x[1], lv.x[1]);
    op.xx[2] *= 0.5;
  }
  if (!lv.kxx.empty())
    for (std::size_t k = 0; k < op.xx.size(); ++k) op.xx[k] += lv.kxx[k];
  for (int a = 0; a < d; ++a) {
    op.y[static_cast<std::size_t>(a)] = lv.l[static_cast<std::size_t>(a)];
    op.y[static_cast<std::size_t>(a)] +=
        pointwise(lv.x0, lv.x[static_cast<std::size_t>(a)]);
  }
  op.z = lv.l0;
  ScalarField x0sq = pointwise(lv.x0, lv.x0);
  x0sq *= 0.5;
  op.z += x0sq;
  return op;
}

}  // namespace

bool DifferentialRoughDriver::is_zero_order_free() const {
  for (const auto& f : x0_)
    if (f.max_norm() > 1e-14) return false;
  for (const auto& f : l0_)
    if (f.max_norm() > 1e-14) return false;
  return true;
}

DriverLevels DifferentialRoughDriver::levels(IndexPair pair) const {
  auto [i, j] = pair;
  if (i < 0 || j >= grid_.size() || i > j)
    throw ValidationError("driver levels: pair outside grid");
  if (i == j) {
    DriverLevels lv;
    for (int a = 0; a < spatial_.dim(); ++a) lv.x.emplace_back(spatial_);
    lv.x0 = ScalarField(spatial_);
    lv.l = lv.x;
    lv.l0 = lv.x0;
    if (!kxx_.empty())
      lv.kxx.assign(spatial_.dim() == 1 ? 1 : 3, ScalarField(spatial_));
    return lv;
  }
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->map.find(pair);
    if (it != cache_->map.end()) return it->second;
  }
  DriverLevels lv;
  lv.x = x_[static_cast<std::size_t>(i)];
  lv.x0 = x0_[static_cast<std::size_t>(i)];
  lv.l = l_[static_cast<std::size_t>(i)];
  lv.l0 = l0_[static_cast<std::size_t>(i)];
  if (!kxx_.empty()) lv.kxx = kxx_[static_cast<std::size_t>(i)];
  for (int k = i + 1; k < j; ++k) {
    const auto& xk = x_[static_cast<std::size_t>(k)];
    // generalized Chen: L(i,k+1) = L(i,k) + L(k,k+1) + (X_{k,k+1}.grad) X(i,k)
    auto cross = advect(xk, lv.x);
    for (std::size_t a = 0; a < lv.l.size(); ++a) {
      lv.l[a] += l_[static_cast<std::size_t>(k)][a];
      lv.l[a] += cross[a];
    }
    lv.l0 += l0_[static_cast<std::size_t>(k)];
    lv.l0 += advect_scalar(xk, lv.x0);
    for (std::size_t a = 0; a < lv.x.size(); ++a) lv.x[a] += xk[a];
    lv.x0 += x0_[static_cast<std::size_t>(k)];
    if (!kxx_.empty())
      for (std::size_t a = 0; a < lv.kxx.size(); ++a)
        lv.kxx[a] += kxx_[static_cast<std::size_t>(k)][a];
  }
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->map.emplace(pair, lv);
  }
  return lv;
}

FirstOrderOp DifferentialRoughDriver::level1_op(IndexPair pair) const {
  DriverLevels lv = levels(pair);
  FirstOrderOp op;
  op.sigma = std::move(lv.x);
  op.c = std::move(lv.x0);
  return op;
}

SecondOrderOp DifferentialRoughDriver::level2_op(IndexPair pair) const {
  return level2_from(levels(pair), spatial_);
}

DriverLevels DifferentialRoughDriver::direct_levels(IndexPair pair) const {
  if (!source_) return levels(pair);
  auto [i, j] = pair;
  const int stride = (source_->samples() - 1) / grid_.intervals();
  const int lo = i * stride, hi = j * stride;
  DriverLevels lv;
  const int d = spatial_.dim();
  for (int a = 0; a < d; ++a) {
    lv.x.push_back(source_->sigma[static_cast<std::size_t>(hi)]
                                 [static_cast<std::size_t>(a)]);
    lv.x[static_cast<std::size_t>(a)] -=
        source_->sigma[static_cast<std::size_t>(lo)][static_cast<std::size_t>(a)];
  }
  lv.x0 = source_->c[static_cast<std::size_t>(hi)];
  lv.x0 -= source_->c[static_cast<std::size_t>(lo)];
  lv.x0 *= source_x0_scale_;

  for (int a = 0; a < d; ++a) lv.l.emplace_back(spatial_);
  lv.l0 = ScalarField(spatial_);
  // midpoint rule: int dX^mu d_mu (X^j_{lo,.}) over fine segments
  for (int k = lo; k < hi; ++k) {
    std::vector<ScalarField> dx;
    for (int mu = 0; mu < d; ++mu) {
      ScalarField inc = source_->sigma[static_cast<std::size_t>(k + 1)]
                                      [static_cast<std::size_t>(mu)];
      inc -= source_->sigma[static_cast<std::size_t>(k)]
                           [static_cast<std::size_t>(mu)];
      dx.push_back(std::move(inc));
    }
    for (int comp = 0; comp < d; ++comp) {
      ScalarField mid = source_->sigma[static_cast<std::size_t>(k)]
                                      [static_cast<std::size_t>(comp)];
      mid += source_->sigma[static_cast<std::size_t>(k + 1)]
                           [static_cast<std::size_t>(comp)];
      mid *= 0.5;
      mid -= source_->sigma[static_cast<std::size_t>(lo)]
                           [static_cast<std::size_t>(comp)];
      for (int mu = 0; mu < d; ++mu)
        lv.l[static_cast<std::size_t>(comp)] +=
            pointwise(dx[static_cast<std::size_t>(mu)], derivative(mid, mu));
    }
    ScalarField mid0 = source_->c[static_cast<std::size_t>(k)];
    mid0 += source_->c[static_cast<std::size_t>(k + 1)];
    mid0 *= 0.5;
    mid0 -= source_->c[static_cast<std::size_t>(lo)];
    mid0 *= source_x0_scale_;
    for (int mu = 0; mu < d; ++mu)
      lv.l0 += pointwise(dx[static_cast<std::size_t>(mu)],
                         derivative(mid0, mu));
  }
  return lv;
}

void DifferentialRoughDriver::perturb_l(int k, int component, double c) {
  ScalarField bump(spatial_, c);
  if (component < spatial_.dim())
    l_[static_cast<std::size_t>(k)][static_cast<std::size_t>(component)] +=
        bump;
  else
    l0_[static_cast<std::size_t>(k)] += bump;
  std::lock_guard<std::mutex> lock(cache_->mutex);
  cache_->map.clear();
}

struct DifferentialRoughDriver::Builder {
  static DifferentialRoughDriver make(
      TimeGrid grid, SpatialGrid spatial, double alpha, bool geometric,
      std::vector<std::vector<ScalarField>> x, std::vector<ScalarField> x0,
      std::vector<std::vector<ScalarField>> l, std::vector<ScalarField> l0,
      std::vector<std::vector<ScalarField>> kxx,
      std::shared_ptr<const CoefficientPath> source, double x0_scale) {
    DifferentialRoughDriver d;
    d.grid_ = std::move(grid);
    d.spatial_ = std::move(spatial);
    d.alpha_ = alpha;
    d.geometric_flag_ = geometric;
    d.x_ = std::move(x);
    d.x0_ = std::move(x0);
    d.l_ = std::move(l);
    d.l0_ = std::move(l0);
    d.kxx_ = std::move(kxx);
    d.source_ = std::move(source);
    d.source_x0_scale_ = x0_scale;
    return d;
  }
  static DifferentialRoughDriver copy_scaled_zero_order(
      const DifferentialRoughDriver& d, double p) {
    DifferentialRoughDriver out;
    out.grid_ = d.grid_;
    out.spatial_ = d.spatial_;
    out.alpha_ = d.alpha_;
    out.geometric_flag_ = d.geometric_flag_;
    out.x_ = d.x_;
    out.x0_ = d.x0_;
    out.l_ = d.l_;
    out.l0_ = d.l0_;
    out.kxx_ = d.kxx_;
    out.source_ = d.source_;
    out.source_x0_scale_ = d.source_x0_scale_ * p;
    for (auto& f : out.x0_) f *= p;
    for (auto& f : out.l0_) f *= p;
    return out;
  }
};

DifferentialRoughDriver canonical_lift(const CoefficientPath& path,
                                       int quad_refine, double alpha) {
  if (quad_refine < 1)
    throw ValidationError("canonical_lift: quad_refine must be >= 1");
  const int fine_intervals = path.samples() - 1;
  if (fine_intervals % quad_refine != 0)
    throw ValidationError(
        "canonical_lift: path sampling is not a quad_refine multiple of a "
        "driver grid");
  const int n_int = fine_intervals / quad_refine;
  std::vector<double> coarse_times;
  for (int k = 0; k <= n_int; ++k)
    coarse_times.push_back(path.grid.t(k * quad_refine));
  TimeGrid grid(std::move(coarse_times));

  auto src = std::make_shared<CoefficientPath>(path);
  DifferentialRoughDriver seed = DifferentialRoughDriver::Builder::make(
      grid, path.spatial, alpha, true, {}, {}, {}, {}, {}, src, 1.0);

  std::vector<std::vector<ScalarField>> x, l;
  std::vector<ScalarField> x0, l0;
  for (int k = 0; k < n_int; ++k) {
    DriverLevels lv = seed.direct_levels({k, k + 1});
    x.push_back(std::move(lv.x));
    x0.push_back(std::move(lv.x0));
    l.push_back(std::move(lv.l));
    l0.push_back(std::move(lv.l0));
  }
  return DifferentialRoughDriver::Builder::make(
      grid, path.spatial, alpha, true, std::move(x), std::move(x0),
      std::move(l), std::move(l0), {}, src, 1.0);
}

DifferentialRoughDriver from_rough_path(const ScalarRoughPath& z,
                                        const std::vector<FirstOrderOp>& chans,
                                        double alpha) {
  const int m = z.channels;
  if (static_cast<int>(chans.size()) != m)
    throw ValidationError("from_rough_path: channel count mismatch");
  const SpatialGrid& g = chans[0].grid();
  const int d = g.dim();
  const int n_int = z.intervals();

  const bool geometric = z.geometricity_defect() <= 1e-12;

  // cache pair compositions D^nu o D^mu once
  std::vector<SecondOrderOp> comp;
  comp.reserve(static_cast<std::size_t>(m) * m);
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu)
      comp.push_back(compose_first(chans[static_cast<std::size_t>(nu)],
                                   chans[static_cast<std::size_t>(mu)]));

  std::vector<std::vector<ScalarField>> x, l, kxx;
  std::vector<ScalarField> x0, l0;
  for (int k = 0; k < n_int; ++k) {
    // level 1
    std::vector<ScalarField> xk;
    for (int a = 0; a < d; ++a) {
      ScalarField acc(g);
      for (int mu = 0; mu < m; ++mu) {
        ScalarField t = chans[static_cast<std::size_t>(mu)]
                            .sigma[static_cast<std::size_t>(a)];
        t *= z.z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(mu)];
        acc += t;
      }
      xk.push_back(std::move(acc));
    }
    ScalarField x0k(g);
    for (int mu = 0; mu < m; ++mu) {
      ScalarField t = chans[static_cast<std::size_t>(mu)].c;
      t *= z.z1[static_cast<std::size_t>(k)][static_cast<std::size_t>(mu)];
      x0k += t;
    }
    // level 2 total
    SecondOrderOp total = SecondOrderOp::zero(g);
    for (int mu = 0; mu < m; ++mu)
      for (int nu = 0; nu < m; ++nu) {
        SecondOrderOp t =
            comp[static_cast<std::size_t>(mu) * m + nu];
        t *= z.z2[static_cast<std::size_t>(k)]
                 [static_cast<std::size_t>(mu) * m + nu];
        total += t;
      }
    // decompose into (L, L0, K)
    std::vector<ScalarField> lk;
    for (int a = 0; a < d; ++a) {
      ScalarField t = total.y[static_cast<std::size_t>(a)];
      t -= pointwise(x0k, xk[static_cast<std::size_t>(a)]);
      lk.push_back(std::move(t));
    }
    ScalarField l0k = total.z;
    {
      ScalarField half = pointwise(x0k, x0k);
      half *= 0.5;
      l0k -= half;
    }
    std::vector<ScalarField> kk;
    if (d == 1) {
      ScalarField t = pointwise(xk[0], xk[0]);
      t *= 0.5;
      ScalarField kfield = total.xx[0];
      kfield -= t;
      kk.push_back(std::move(kfield));
    } else {
      const int pairs[3][2] = {{0, 0}, {0, 1}, {1, 1}};
      for (int pi = 0; pi < 3; ++pi) {
        ScalarField t = pointwise(xk[static_cast<std::size_t>(pairs[pi][0])],
                                  xk[static_cast<std::size_t>(pairs[pi][1])]);
        t *= 0.5;
        ScalarField kfield = total.xx[static_cast<std::size_t>(pi)];
        kfield -= t;
        kk.push_back(std::move(kfield));
      }
    }
    x.push_back(std::move(xk));
    x0.push_back(std::move(x0k));
    l.push_back(std::move(lk));
    l0.push_back(std::move(l0k));
    kxx.push_back(std::move(kk));
  }
  return DifferentialRoughDriver::Builder::make(
      z.grid, g, alpha, geometric, std::move(x), std::move(x0), std::move(l),
      std::move(l0), std::move(kxx), nullptr, 1.0);
}

ChenDefect chen_defect(const DifferentialRoughDriver& d) {
  if (d.grid().size() < 3)
    throw ValidationError("chen_defect: need >= 3 grid points");
  ChenDefect out;
  const auto probes = probe_suite(d.spatial());
  const int n = d.grid().size();

  std::vector<std::tuple<int, int, int>> triples;
  if (n <= 20) {
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k)
        for (int j = k + 1; j < n; ++j) triples.emplace_back(i, k, j);
  } else {
    for (int i = 0; i + 2 < n; ++i) triples.emplace_back(i, i + 1, i + 2);
    for (auto [i, j] : dyadic_pairs(0, n - 1))
      if (j - i >= 2) triples.emplace_back(i, (i + j) / 2, j);
  }

  std::map<IndexPair, DriverLevels> direct_cache;
  auto direct = [&](int i, int j) -> const DriverLevels& {
    auto it = direct_cache.find({i, j});
    if (it == direct_cache.end())
      it = direct_cache.emplace(IndexPair{i, j}, d.direct_levels({i, j})).first;
    return it->second;
  };

  for (auto [i, k, j] : triples) {
    const DriverLevels& whole = direct(i, j);
    const DriverLevels a = d.levels({i, k});
    const DriverLevels b = d.levels({k, j});
    // coefficient defect of the generalized Chen relation
    auto cross = advect(b.x, a.x);
    for (std::size_t c = 0; c < whole.l.size(); ++c) {
      ScalarField diff = whole.l[c];
      diff -= a.l[c];
      diff -= b.l[c];
      diff -= cross[c];
      out.coeff_defect = std::max(out.coeff_defect, diff.max_norm());
    }
    {
      ScalarField diff = whole.l0;
      diff -= a.l0;
      diff -= b.l0;
      diff -= advect_scalar(b.x, a.x0);
      out.coeff_defect = std::max(out.coeff_defect, diff.max_norm());
    }
    // operator defect: delta B^2 vs B^1_{theta t} o B^1_{s theta}
    SecondOrderOp lhs = level2_from(whole, d.spatial());
    {
      SecondOrderOp t = d.level2_op({i, k});
      t *= -1.0;
      lhs += t;
      t = d.level2_op({k, j});
      t *= -1.0;
      lhs += t;
    }
    FirstOrderOp b1a;
    b1a.sigma = a.x;
    b1a.c = a.x0;
    FirstOrderOp b1b;
    b1b.sigma = b.x;
    b1b.c = b.x0;
    SecondOrderOp rhs = compose_first(b1b, b1a);
    rhs *= -1.0;
    lhs += rhs;
    for (const auto& phi : probes) {
      const double pn = phi.l2_norm();
      if (pn <= 0) continue;
      out.op_defect =
          std::max(out.op_defect, apply_second(lhs, phi).l2_norm() / pn);
    }
  }
  return out;
}

SecondOrderOp bracket_op(const DifferentialRoughDriver& d, IndexPair pair) {
  SecondOrderOp full = d.level2_op(pair);
  FirstOrderOp b1 = d.level1_op(pair);
  SecondOrderOp half = compose_first(b1, b1);
  half *= -0.5;
  full += half;
  return full;
}

BracketFamily bracket(const DifferentialRoughDriver& d) {
  BracketFamily fam;
  for (int k = 0; k < d.grid().intervals(); ++k) {
    SecondOrderOp op = bracket_op(d, {k, k + 1});
    for (const auto& f : op.xx)
      fam.order_defect = std::max(fam.order_defect, f.max_norm());
    FirstOrderOp fo;
    fo.sigma = op.y;
    fo.c = op.z;
    fam.adjacent.push_back(std::move(fo));
  }
  return fam;
}

DifferentialRoughDriver shift(const DifferentialRoughDriver& d, double p) {
  if (p < 1.0) throw ValidationError("shift: p must be >= 1");
  return DifferentialRoughDriver::Builder::copy_scaled_zero_order(d, p);
}

ProductField ProductField::outer(const ScalarField& u, const ScalarField& v) {
  ProductField w;
  w.base = u.grid();
  const std::size_t n = u.size();
  w.values.resize(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) w.values[a * n + b] = u[a] * v[b];
  return w;
}
double ProductField::l2_norm() const {
  const double cv = base.cell_volume();
  return std::sqrt(cv * cv * kern::dot(values, values));
}
ProductField& ProductField::operator+=(const ProductField& o) {
  kern::axpy(1.0, o.values, values);
  return *this;
}
ProductField& ProductField::operator-=(const ProductField& o) {
  kern::axpy(-1.0, o.values, values);
  return *this;
}
ProductField& ProductField::operator*=(double s) {
  kern::scale(values, s);
  return *this;
}

namespace {

template <class Op>
ProductField apply_factor(const Op& op, const ProductField& w, bool left,
                          const auto& apply_fn) {
  const std::size_t n = w.base.nodes();
  ProductField out;
  out.base = w.base;
  out.values.assign(n * n, 0.0);
  ScalarField slice(w.base);
  for (std::size_t fixed = 0; fixed < n; ++fixed) {
    for (std::size_t v = 0; v < n; ++v)
      slice[v] = left ? w.values[v * n + fixed] : w.values[fixed * n + v];
    ScalarField res = apply_fn(op, slice);
    for (std::size_t v = 0; v < n; ++v) {
      if (left)
        out.values[v * n + fixed] = res[v];
      else
        out.values[fixed * n + v] = res[v];
    }
  }
  return out;
}

}  // namespace

ProductField TensorizedDriver::gamma1(IndexPair pair,
                                      const ProductField& w) const {
  FirstOrderOp b1 = driver->level1_op(pair);
  ProductField out = apply_factor(b1, w, true, [](const FirstOrderOp& op,
                                                  const ScalarField& u) {
    return apply_first(op, u);
  });
  out += apply_factor(b1, w, false,
                      [](const FirstOrderOp& op, const ScalarField& u) {
                        return apply_first(op, u);
                      });
  return out;
}

ProductField TensorizedDriver::gamma2(IndexPair pair,
                                      const ProductField& w) const {
  FirstOrderOp b1 = driver->level1_op(pair);
  SecondOrderOp b2 = driver->level2_op(pair);
  auto ap1 = [](const FirstOrderOp& op, const ScalarField& u) {
    return apply_first(op, u);
  };
  auto ap2 = [](const SecondOrderOp& op, const ScalarField& u) {
    return apply_second(op, u);
  };
  ProductField out = apply_factor(b2, w, true, ap2);
  out += apply_factor(b2, w, false, ap2);
  ProductField mixed = apply_factor(b1, w, true, ap1);
  out += apply_factor(b1, mixed, false, ap1);
  return out;
}

TensorizedDriver tensorize(const DifferentialRoughDriver& d) {
  const std::size_t n = d.spatial().nodes();
  if (n * n > 1000000)
    throw GuardError("tensorize: product grid exceeds the 10^6-node guard");
  return TensorizedDriver{&d};
}

double rho_alpha(const DifferentialRoughDriver& a,
                 const DifferentialRoughDriver& b, double alpha) {
  if (!(a.grid() == b.grid()) || !(a.spatial() == b.spatial()))
    throw ValidationError("rho_alpha: drivers live on different grids");
  const auto probes = probe_suite(a.spatial());
  const int n = a.grid().size();

  // sup-over-time operator norm of the level-1 path difference
  double sup_path = 0.0;
  for (int t = 1; t < n; ++t) {
    FirstOrderOp diff = a.level1_op({0, t});
    FirstOrderOp bt = b.level1_op({0, t});
    bt *= -1.0;
    diff += bt;
    sup_path = std::max(
        sup_path, probe_op_norm(
                      [&](const ScalarField& u) { return apply_first(diff, u); },
                      probes));
  }

  ScalarTwoParam lvl1(a.grid(), abs_norm), lvl2(a.grid(), abs_norm);
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    FirstOrderOp d1 = a.level1_op({i, j});
    {
      FirstOrderOp t = b.level1_op({i, j});
      t *= -1.0;
      d1 += t;
    }
    lvl1.set(i, j,
             probe_op_norm(
                 [&](const ScalarField& u) { return apply_first(d1, u); },
                 probes));
    SecondOrderOp d2 = a.level2_op({i, j});
    {
      SecondOrderOp t = b.level2_op({i, j});
      t *= -1.0;
      d2 += t;
    }
    lvl2.set(i, j,
             probe_op_norm(
                 [&](const ScalarField& u) { return apply_second(d2, u); },
                 probes));
  }
  return sup_path + pvar_norm(lvl1, alpha, {0, n - 1}) +
         pvar_norm(lvl2, std::min(1.0, 2 * alpha), {0, n - 1});
}

ControlFn driver_control(const DifferentialRoughDriver& d) {
  const auto probes = probe_suite(d.spatial());
  const int n = d.grid().size();
  ScalarTwoParam lvl1(d.grid(), abs_norm);
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    FirstOrderOp op = d.level1_op({i, j});
    lvl1.set(i, j,
             probe_op_norm(
                 [&](const ScalarField& u) { return apply_first(op, u); },
                 probes));
  }
  return fitted_control(lvl1, d.alpha());
}

CoefficientPath read_coeff_csv(const std::string& file, const SpatialGrid& g) {
  std::ifstream is(file);
  if (!is) throw ValidationError("read_coeff_csv: cannot open " + file);
  std::string line;
  if (!std::getline(is, line))
    throw ValidationError("read_coeff_csv: empty file");
  // rows: t, channel, v_0, ..., v_{nodes-1}; channel d is the zero-order one
  std::map<double, std::map<int, std::vector<double>>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 2 + g.nodes())
      throw ValidationError("read_coeff_csv: line " + std::to_string(lineno) +
                            ": expected " + std::to_string(2 + g.nodes()) +
                            " columns");
    const int channel = static_cast<int>(vals[1]);
    if (channel < 0 || channel > g.dim())
      throw ValidationError("read_coeff_csv: line " + std::to_string(lineno) +
                            ": channel out of range");
    rows[vals[0]][channel] =
        std::vector<double>(vals.begin() + 2, vals.end());
  }
  CoefficientPath path;
  path.spatial = g;
  std::vector<double> times;
  for (auto& [t, by_chan] : rows) {
    times.push_back(t);
    std::vector<ScalarField> sig;
    for (int a = 0; a < g.dim(); ++a) {
      auto it = by_chan.find(a);
      if (it == by_chan.end())
        throw ValidationError("read_coeff_csv: missing channel " +
                              std::to_string(a) + " at t=" + std::to_string(t));
      sig.emplace_back(g, it->second);
    }
    path.sigma.push_back(std::move(sig));
    auto it0 = by_chan.find(g.dim());
    path.c.push_back(it0 == by_chan.end() ? ScalarField(g)
                                          : ScalarField(g, it0->second));
  }
  path.grid = TimeGrid(std::move(times));
  return path;
}

}  // namespace rpde
