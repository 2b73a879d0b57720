#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rpde/temporal.hpp"

// Driver-path generators: Brownian motion, fractional Brownian motion with
// H > 1/3 (circulant embedding, dense fallback), deterministic expressions,
// dyadic refinement, and exact level-2 for piecewise-linear paths.
//
// All generators are pure functions of (recipe, grid): a fixed seed
// reproduces identical bytes. Gaussians come from a counter-based generator
// keyed on (seed, channel, stream, index), so refinement never perturbs
// already-sampled nodes.

namespace rpde {

enum class PathKind { bm, fbm, deterministic };

struct PathRecipe {
  PathKind kind = PathKind::bm;
  double hurst = 0.5;          // fbm only, in (1/3, 1)
  int channels = 1;
  std::uint64_t seed = 1;
  int samples_per_interval = 1;
  // deterministic expression per channel, evaluated at grid times
  std::vector<std::function<double(double)>> expressions;
};

struct MultiPath {
  TimeGrid grid;
  int channels = 1;
  // values[c][i] = Z^c(t_i); Z(0) = 0 for stochastic kinds
  std::vector<std::vector<double>> values;

  int samples() const { return grid.size(); }
  double at(int channel, int i) const {
    return values[static_cast<std::size_t>(channel)]
                 [static_cast<std::size_t>(i)];
  }
};

MultiPath sample(const PathRecipe& recipe, const TimeGrid& grid);

// Path on the 2^level-finer grid, consistent with the original at shared
// nodes (bit-equal). Brownian bridges for bm, conditional synthesis for fbm,
// piecewise-linear interpolation for deterministic data.
MultiPath refine(const MultiPath& path, const PathRecipe& recipe, int level);

// Level-2 data of a rough path on adjacent intervals of its grid.
struct ScalarRoughPath {
  TimeGrid grid;
  int channels = 1;
  // z1[k] : m-vector increment over [t_k, t_{k+1}]
  // z2[k] : m*m matrix, row-major, convention z2[mu][nu] with
  //         delta z2_{s theta t} = z1_{s theta}^mu z1_{theta t}^nu
  std::vector<std::vector<double>> z1;
  std::vector<std::vector<double>> z2;

  int intervals() const { return grid.intervals(); }
  // reconstruction on an arbitrary grid pair by Chen composition
  std::vector<double> level1(int i, int j) const;
  std::vector<double> level2(int i, int j) const;
  // max associativity defect of the reconstruction over probe triples
  double chen_assoc_defect() const;
  // || sym z2 - z1 (x) z1 / 2 ||_max over adjacent intervals
  double geometricity_defect() const;
};

// Exact level-2 of the piecewise-linear interpolant: on one segment
// z2 = (1/2) dz (x) dz, across segments composed by Chen.
ScalarRoughPath pl_level2(const MultiPath& path);

// Chen-coarsen a rough path onto a subgrid of its own grid.
ScalarRoughPath coarsen(const ScalarRoughPath& rp, const TimeGrid& coarse);

// Deterministic Gaussian stream: standard normal keyed by
// (seed, channel, stream, index). splitmix64 bits + Box-Muller.
double gaussian_at(std::uint64_t seed, std::uint64_t channel,
                   std::uint64_t stream, std::uint64_t index);

// CSV path import/export (columns: t, channel_0..channel_{m-1}).
void write_path_csv(const std::string& file, const MultiPath& path);
MultiPath read_path_csv(const std::string& file);

}  // namespace rpde
