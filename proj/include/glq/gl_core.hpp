#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glq/manifolds.hpp"

namespace glq::gl {

using manifolds::EmbeddedManifold;
using manifolds::Potential;

// Axis-aligned box centered at the origin, uniform spacing h on every axis.
// counts = cells per axis; nodes per axis = counts + 1.
struct Domain {
  int dim = 0;
  std::array<double, 3> extent{};  // full side lengths
  std::array<int, 3> counts{};
  double h = 0.0;

  static Domain box(int dim, std::array<double, 3> extent, std::array<int, 3> counts);

  int nodes(int axis) const { return counts[axis] + 1; }
  std::int64_t node_count() const;
  std::int64_t cell_count() const;
  double coord(int axis, int idx) const { return -0.5 * extent[axis] + h * idx; }

  std::int64_t node_index(int i, int j, int k = 0) const;
  std::int64_t cell_index(int i, int j, int k = 0) const;
  bool boundary_node(int i, int j, int k = 0) const;
  // Center of cell (i,j,k).
  std::array<double, 3> cell_center(int i, int j, int k = 0) const;
};

// Discrete map u: nodes -> R^m with core radius eps. Values row-major,
// components innermost.
struct GridField {
  Domain domain;
  int m = 0;
  double eps = 0.0;
  Potential potential;  // carries the manifold
  std::vector<double> values;

  const EmbeddedManifold& manifold() const { return potential.manifold(); }
  double* at(std::int64_t node) { return values.data() + node * m; }
  const double* at(std::int64_t node) const { return values.data() + node * m; }
  void validate() const;
};

GridField make_field(const Domain& domain, const Potential& potential, double eps);

// Descriptor of the generating singular set and class of a boundary datum.
struct BCDescriptor {
  // "axis-degree": n=3, S1 target, degree around `axis`; Sigma = the two
  //   points where the axis meets the boundary.
  // "axis-rp2": n=3, RP2 target, nontrivial line defect along `axis`.
  // "points-2d": n=2, S1 target, degree map with optional boundary points
  //   where the datum dips through the ambient space.
  // "constant": base-point datum.
  std::string pattern = "constant";
  int axis = 2;
  int degree = 0;
  std::vector<std::array<double, 3>> sigma_points;  // 2D pinch points (z=0)
};

struct DirichletBC {
  BCDescriptor desc;
  std::vector<double> values;  // full node array; only boundary entries used

  void apply(GridField& field) const;  // copies boundary values into field
};

// Boundary data realizing the requested singular pattern; on N wherever
// dist(x, Sigma) >= eps, radially interpolated through the ambient space
// (factor min(dist/eps, 1)) inside.
DirichletBC boundary_vortex_data(const Domain& domain, const BCDescriptor& desc, double eps,
                                 const EmbeddedManifold& manifold);

// sup |g| and the smallest C0 with |grad_tangential g| <= C0 / max(dist, eps),
// sampled on boundary nodes with one-sided tangential differences.
struct BCReport {
  double sup_norm = 0.0;
  double C0 = 0.0;
  bool on_manifold_outside_eps = true;
};
BCReport boundary_data_report(const DirichletBC& bc, const Domain& domain, double eps,
                              const EmbeddedManifold& manifold);

// E_eps(g, boundary of the box): (n-1)-dimensional trapezoidal quadrature of
// e_eps over the boundary faces.
double boundary_energy(const DirichletBC& bc, const Domain& domain, double eps,
                       const Potential& potential);

struct EnergyBreakdown {
  double total = 0.0;
  double dirichlet = 0.0;
  double potential = 0.0;
  std::vector<double> cell_density;  // e_eps per cell (not premultiplied by h^n)
};

// E_eps(u) = h^n sum_cells [ 1/2 |grad_h u|^2 + f(u)/eps^2 ], forward
// differences averaged over the parallel edges of each cell, f averaged over
// the cell corners.
EnergyBreakdown energy(const GridField& field, bool with_density = true);
double total_energy(const GridField& field);

// Per-cell average forward-difference gradient, m values per axis per cell;
// layout [cell][axis][component].
std::vector<double> cell_gradients(const GridField& field);

struct ElResidual {
  std::vector<double> node_norm;  // |Delta_h u - eps^-2 Df(u)| per node, 0 on the boundary
  double sup = 0.0;
};
ElResidual el_residual(const GridField& field);

enum class StepRule { Fixed, Adaptive };

struct SolverConfig {
  long max_iter = 20000;
  double tolerance = 1e-2;  // sup-norm of the pinned-gradient (EL residual)
  StepRule rule = StepRule::Fixed;
  double step_scale = 1.0;  // multiplies the stability-bound step
  int trace_every = 100;
  std::uint64_t seed = 0;   // used only by perturbation tests built on top
};

struct TraceSample {
  long iteration;
  double energy;
  double grad_sup;
};

struct MinimizeResult {
  GridField field;
  std::vector<TraceSample> trace;
  bool converged = false;
  long iterations = 0;
  double final_energy = 0.0;
  double final_grad_sup = 0.0;
};

// Projected gradient descent on the discrete energy with the boundary layer
// pinned to bc. Energy is non-increasing; NaN/Inf raises DivergenceError
// with the iteration index.
MinimizeResult minimize(GridField field, const DirichletBC& bc, const SolverConfig& config);

// Harmonic-like initialization: coordinate-wise discrete Laplace solve of the
// boundary data (conjugate gradients), then a blend toward the nearest-point
// projection where the field is within reach.
GridField harmonic_extension_init(const Domain& domain, const DirichletBC& bc,
                                  const Potential& potential, double eps);

// w(rho, theta) = min(rho/eps, 1) * (cos d theta, sin d theta) sampled on the
// grid; energy <= pi d^2 log(1/eps) + C.
GridField degree_ansatz_2d(int degree, double eps, const Domain& domain,
                           const Potential& potential);

// Energy restricted to cells whose centers lie in the closed ball.
double ball_energy(const GridField& field, const std::array<double, 3>& center, double r);

}  // namespace glq::gl
