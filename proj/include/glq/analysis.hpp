#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "glq/gl_core.hpp"
#include "glq/homotopy.hpp"

namespace glq::analysis {

using gl::Domain;
using gl::GridField;

// Normalized energy measure mu_eps: per-cell mass e_eps(u) h^n / |log eps|.
struct EnergyMeasure {
  Domain domain;
  double eps = 0.0;
  std::vector<double> cell_mass;
  double total = 0.0;

  // Mass of cells whose centers lie in the closed ball.
  double ball_mass(const std::array<double, 3>& center, double r) const;
  // Mass of cells whose centers lie in the closed axis-aligned box.
  double box_mass(const std::array<double, 3>& lo, const std::array<double, 3>& hi) const;
};

EnergyMeasure energy_measure(const GridField& field);

// r^{2-n} E_eps(u, B_r(x)) over a radii list, with a monotonicity verdict.
struct MonotonicityProfile {
  std::vector<double> radii;
  std::vector<double> values;
  double worst_violation = 0.0;  // max over consecutive pairs of (v_i - v_{i+1})+
  bool nondecreasing = true;
  bool advisory = false;  // set when the field is not a converged critical point
};

MonotonicityProfile monotonicity_profile(const GridField& field, const std::array<double, 3>& x,
                                         std::vector<double> radii,
                                         double residual_threshold = -1.0);

// Residual of the Pohozaev identity on the cell-union approximation of
// B_r(x): boundary terms by face quadrature.
struct PohozaevResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual_abs = 0.0;
  double residual_rel = 0.0;  // relative to E_eps(ball)
};

PohozaevResult pohozaev_residual(const GridField& field, const std::array<double, 3>& x,
                                 double r);

// Compactly supported test vector field phi(x) = direction * bump(x),
// bump = prod_a (1 - ((x_a - c_a)/w_a)^2)^2 inside the support box.
struct TestField {
  std::array<double, 3> center{};
  std::array<double, 3> width{};     // support half-widths
  std::array<double, 3> direction{}; // constant direction; rotational when spin != 0
  int spin = 0;  // 1: phi = bump * (-(y-cy), x-cx, 0) style rotation in the xy-plane

  void eval(int dim, const std::array<double, 3>& x, std::array<double, 3>* phi,
            std::array<std::array<double, 3>, 3>* dphi) const;  // dphi[j][k] = d_k phi_j
};

// Built-in test fields for a domain (centered bump per direction + one
// rotational field), all supported strictly inside the box.
std::vector<TestField> standard_test_fields(const Domain& domain);

// Discrete stationarity pairing  sum_cells h^n A^eps_jk(cell) d_k phi_j(center),
// A^eps = (e_eps delta_jk - d_j u : d_k u)/|log eps|. Zero to quadrature order
// for critical points. Throws InterfaceError if phi is not compactly
// supported inside the domain.
double stationarity_residual(const GridField& field, const TestField& phi);

// Per-cell stress tensor A^eps (row-major n x n per cell).
std::vector<double> stress_tensor(const GridField& field);

// One fitted line segment per flagged cluster (n=3).
struct Segment {
  std::array<double, 3> a{};
  std::array<double, 3> b{};
  std::array<double, 3> direction{};
  int cluster = 0;
  int points = 0;
};

// Prop 4.1 as an extraction criterion, evaluated on every cell center whose
// probe ball fits in the domain:
//   smallness test fails at x  <=>  E_eps(u, B_r(x)) > eta r^{n-2} log(r/eps).
// The singular point list additionally keeps only transverse ridge cells
// (ball energy locally maximal), which localizes the estimate to O(h)
// instead of O(r). Every listed point fails the smallness test.
struct SingularSetEstimate {
  double eta = 0.0;
  double r = 0.0;
  std::vector<std::array<double, 3>> points;  // flagged cell centers (sharp)
  std::vector<int> cluster;                   // per point, 26-connectivity labels
  std::vector<Segment> segments;              // n=3 only
  std::int64_t smallness_failed = 0;          // raw count of failing cells
  std::int64_t evaluated_cells = 0;
  // Dichotomy side: over cells PASSING the smallness test,
  //   fitted_C = max E_eps(u, B_{r/2}(x)) / r^{n-2}  (Prop 4.1 conclusion).
  double fitted_C = 0.0;
};

SingularSetEstimate extract_singular_set(const GridField& field, double eta, double r);

// Theta_r = mu(closed B_r(x)) / (omega_{n-2} r^{n-2}), omega_1 = 2, omega_2 = pi.
double density_at(const EnergyMeasure& measure, const std::array<double, 3>& x, double r);

struct DensityProfile {
  std::vector<double> radii;
  std::vector<double> values;
  bool nondecreasing = true;  // advisory at finite eps
  double worst_violation = 0.0;
};

DensityProfile density_profile(const EnergyMeasure& measure, const std::array<double, 3>& x,
                               std::vector<double> radii);

// Admissible density values: |sigma|_* from a NormTable, or the circle
// closed form pi(0), pi(1), ..., pi(max_degree).
struct NormSource {
  std::vector<double> values;
  std::vector<std::string> labels;

  static NormSource circle(int max_degree = 4);
  static NormSource from_table(const homotopy::NormTable& table,
                               const homotopy::ClassAlgebra& alg);
};

struct QuantizationRecord {
  std::array<double, 3> probe{};
  double theta = 0.0;
  double nearest = 0.0;
  std::string nearest_label;
  double gap_rel = 0.0;
  bool pass = false;
};

// Nearest admissible value per probe density; gap relative to
// max(nearest, smallest nonzero admissible value). Never asserts the eps->0
// limit; finite-eps proximity against `tolerance`.
std::vector<QuantizationRecord> quantization_report(
    const std::vector<std::pair<std::array<double, 3>, double>>& densities,
    const NormSource& source, double tolerance);

// Line energy of u restricted to the circle of radius r about `center`
// (2D): tangential derivative by centered differences of bilinear samples.
// Realizes E_eps(u, boundary of B_r) for the lower-bound diagnostics.
double circle_energy_2d(const GridField& field, const std::array<double, 3>& center, double r,
                        int samples = 720);

}  // namespace glq::analysis
