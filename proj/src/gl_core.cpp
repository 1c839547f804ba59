#include "glq/gl_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "glq/errors.hpp"
#include "glq/parallel.hpp"

namespace glq::gl {

namespace {
constexpr double kPi = std::numbers::pi;

inline double sqr(double x) { return x * x; }

inline double dist2m(const double* a, const double* b, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += sqr(a[i] - b[i]);
  return s;
}
}  // namespace

Domain Domain::box(int dim, std::array<double, 3> extent, std::array<int, 3> counts) {
  if (dim != 2 && dim != 3) throw ConfigError("domain dimension must be 2 or 3");
  Domain d;
  d.dim = dim;
  d.extent = extent;
  d.counts = counts;
  for (int a = dim; a < 3; ++a) {
    d.extent[a] = 0.0;
    d.counts[a] = 0;
  }
  for (int a = 0; a < dim; ++a) {
    if (counts[a] < 16) throw ConfigError("grid counts must be >= 16 on every axis");
    if (!(extent[a] > 0.0)) throw ConfigError("box extents must be positive");
  }
  d.h = d.extent[0] / d.counts[0];
  for (int a = 1; a < dim; ++a) {
    const double ha = d.extent[a] / d.counts[a];
    if (std::abs(ha - d.h) > 1e-9 * d.h)
      throw ConfigError("grid spacing must be uniform across axes");
  }
  return d;
}

std::int64_t Domain::node_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim; ++a) n *= nodes(a);
  return n;
}

std::int64_t Domain::cell_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim; ++a) n *= counts[a];
  return n;
}

std::int64_t Domain::node_index(int i, int j, int k) const {
  if (dim == 2) return static_cast<std::int64_t>(i) * nodes(1) + j;
  return (static_cast<std::int64_t>(i) * nodes(1) + j) * nodes(2) + k;
}

std::int64_t Domain::cell_index(int i, int j, int k) const {
  if (dim == 2) return static_cast<std::int64_t>(i) * counts[1] + j;
  return (static_cast<std::int64_t>(i) * counts[1] + j) * counts[2] + k;
}

bool Domain::boundary_node(int i, int j, int k) const {
  if (i == 0 || i == counts[0]) return true;
  if (j == 0 || j == counts[1]) return true;
  if (dim == 3 && (k == 0 || k == counts[2])) return true;
  return false;
}

std::array<double, 3> Domain::cell_center(int i, int j, int k) const {
  std::array<double, 3> c{};
  c[0] = coord(0, i) + 0.5 * h;
  c[1] = coord(1, j) + 0.5 * h;
  if (dim == 3) c[2] = coord(2, k) + 0.5 * h;
  return c;
}

void GridField::validate() const {
  if (m != manifold().ambient_dim()) throw ConfigError("field components do not match manifold");
  if (values.size() != static_cast<std::size_t>(domain.node_count()) * m)
    throw ConfigError("field value array has wrong size");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  double ext_min = std::numeric_limits<double>::infinity();
  for (int a = 0; a < domain.dim; ++a) ext_min = std::min(ext_min, domain.extent[a]);
  if (!(eps < ext_min)) throw ConfigError("eps must be smaller than the box extent");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("field contains non-finite values");
}

GridField make_field(const Domain& domain, const Potential& potential, double eps) {
  GridField f{domain, potential.manifold().ambient_dim(), eps, potential, {}};
  f.values.assign(static_cast<std::size_t>(domain.node_count()) * f.m, 0.0);
  return f;
}

void DirichletBC::apply(GridField& field) const {
  const Domain& d = field.domain;
  if (values.size() != field.values.size())
    throw ConfigError("boundary data does not match the field layout");
  const int n2 = d.dim == 3 ? d.nodes(2) : 1;
  for (int i = 0; i < d.nodes(0); ++i)
    for (int j = 0; j < d.nodes(1); ++j)
      for (int k = 0; k < n2; ++k) {
        if (!d.boundary_node(i, j, k)) continue;
        const std::int64_t v = d.node_index(i, j, k);
        std::memcpy(field.at(v), values.data() + v * field.m,
                    sizeof(double) * static_cast<std::size_t>(field.m));
      }
}

namespace {

// e_eps over one cell; also writes the per-axis averaged difference vectors
// when `grads` is non-null (layout [axis][component]).
template <int DIM>
double cell_energy_impl(const GridField& f, int i, int j, int k, double* grads) {
  const Domain& d = f.domain;
  const int m = f.m;
  const double inv_h2 = 1.0 / (d.h * d.h);
  const double* c[8];
  if constexpr (DIM == 2) {
    c[0] = f.at(d.node_index(i, j));
    c[1] = f.at(d.node_index(i + 1, j));
    c[2] = f.at(d.node_index(i, j + 1));
    c[3] = f.at(d.node_index(i + 1, j + 1));
  } else {
    c[0] = f.at(d.node_index(i, j, k));
    c[1] = f.at(d.node_index(i + 1, j, k));
    c[2] = f.at(d.node_index(i, j + 1, k));
    c[3] = f.at(d.node_index(i + 1, j + 1, k));
    c[4] = f.at(d.node_index(i, j, k + 1));
    c[5] = f.at(d.node_index(i + 1, j, k + 1));
    c[6] = f.at(d.node_index(i, j + 1, k + 1));
    c[7] = f.at(d.node_index(i + 1, j + 1, k + 1));
  }
  double dir = 0.0;
  if constexpr (DIM == 2) {
    dir += 0.5 * (dist2m(c[1], c[0], m) + dist2m(c[3], c[2], m)) * inv_h2;  // x
    dir += 0.5 * (dist2m(c[2], c[0], m) + dist2m(c[3], c[1], m)) * inv_h2;  // y
    if (grads) {
      for (int q = 0; q < m; ++q) {
        grads[q] = 0.5 * ((c[1][q] - c[0][q]) + (c[3][q] - c[2][q])) / d.h;
        grads[m + q] = 0.5 * ((c[2][q] - c[0][q]) + (c[3][q] - c[1][q])) / d.h;
      }
    }
  } else {
    const int ex[4][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
    const int ey[4][2] = {{0, 2}, {1, 3}, {4, 6}, {5, 7}};
    const int ez[4][2] = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
    const int(*edges[3])[2] = {ex, ey, ez};
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int e = 0; e < 4; ++e) s += dist2m(c[edges[a][e][1]], c[edges[a][e][0]], m);
      dir += 0.25 * s * inv_h2;
      if (grads) {
        for (int q = 0; q < m; ++q) {
          double g = 0.0;
          for (int e = 0; e < 4; ++e) g += c[edges[a][e][1]][q] - c[edges[a][e][0]][q];
          grads[a * m + q] = 0.25 * g / d.h;
        }
      }
    }
  }
  double pot = 0.0;
  const int ncorner = DIM == 2 ? 4 : 8;
  for (int q = 0; q < ncorner; ++q)
    pot += f.potential.eval(std::span<const double>(c[q], static_cast<std::size_t>(m)));
  pot /= ncorner;
  return 0.5 * dir + pot / (f.eps * f.eps);
}

double cell_energy(const GridField& f, int i, int j, int k, double* grads = nullptr) {
  return f.domain.dim == 2 ? cell_energy_impl<2>(f, i, j, k, grads)
                           : cell_energy_impl<3>(f, i, j, k, grads);
}

// Dirichlet part (already 1/2-weighted) of one cell, node potentials taken
// from a precomputed per-node cache.
template <int DIM>
void cell_parts(const GridField& f, int i, int j, int k, const double* node_pot, double* dir_out,
                double* pot_out) {
  const Domain& d = f.domain;
  const int m = f.m;
  const double inv_h2 = 1.0 / (d.h * d.h);
  std::int64_t n[8];
  if constexpr (DIM == 2) {
    n[0] = d.node_index(i, j);
    n[1] = d.node_index(i + 1, j);
    n[2] = d.node_index(i, j + 1);
    n[3] = d.node_index(i + 1, j + 1);
  } else {
    n[0] = d.node_index(i, j, k);
    n[1] = d.node_index(i + 1, j, k);
    n[2] = d.node_index(i, j + 1, k);
    n[3] = d.node_index(i + 1, j + 1, k);
    n[4] = d.node_index(i, j, k + 1);
    n[5] = d.node_index(i + 1, j, k + 1);
    n[6] = d.node_index(i, j + 1, k + 1);
    n[7] = d.node_index(i + 1, j + 1, k + 1);
  }
  double dir = 0.0;
  if constexpr (DIM == 2) {
    dir += 0.5 * (dist2m(f.at(n[1]), f.at(n[0]), m) + dist2m(f.at(n[3]), f.at(n[2]), m));
    dir += 0.5 * (dist2m(f.at(n[2]), f.at(n[0]), m) + dist2m(f.at(n[3]), f.at(n[1]), m));
  } else {
    const int ex[4][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
    const int ey[4][2] = {{0, 2}, {1, 3}, {4, 6}, {5, 7}};
    const int ez[4][2] = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
    const int(*edges[3])[2] = {ex, ey, ez};
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int e = 0; e < 4; ++e) s += dist2m(f.at(n[edges[a][e][1]]), f.at(n[edges[a][e][0]]), m);
      dir += 0.25 * s;
    }
  }
  const int ncorner = DIM == 2 ? 4 : 8;
  double pot = 0.0;
  for (int q = 0; q < ncorner; ++q) pot += node_pot[n[q]];
  *dir_out = 0.5 * dir * inv_h2;
  *pot_out = pot / ncorner;
}

}  // namespace

EnergyBreakdown energy(const GridField& field, bool with_density) {
  field.validate();
  const Domain& d = field.domain;
  const double hn = std::pow(d.h, d.dim);
  const double inv_eps2 = 1.0 / (field.eps * field.eps);
  const int nj = d.counts[1];
  const int nk = d.dim == 3 ? d.counts[2] : 1;

  std::vector<double> node_pot(static_cast<std::size_t>(d.node_count()));
  par::for_index(d.node_count(), [&](std::int64_t v) {
    node_pot[v] = field.potential.eval(
        std::span<const double>(field.at(v), static_cast<std::size_t>(field.m)));
  });

  const std::int64_t ncells = d.cell_count();
  std::vector<double> dir(static_cast<std::size_t>(ncells));
  std::vector<double> pot(static_cast<std::size_t>(ncells));
  par::for_index(d.counts[0], [&](std::int64_t i) {
    for (int j = 0; j < nj; ++j)
      for (int k = 0; k < nk; ++k) {
        const std::int64_t cell = d.cell_index(static_cast<int>(i), j, k);
        if (d.dim == 2)
          cell_parts<2>(field, static_cast<int>(i), j, k, node_pot.data(), &dir[cell],
                        &pot[cell]);
        else
          cell_parts<3>(field, static_cast<int>(i), j, k, node_pot.data(), &dir[cell],
                        &pot[cell]);
      }
  });

  EnergyBreakdown out;
  const std::int64_t cells_per_slab = std::max<std::int64_t>(1, nj * nk);
  const std::int64_t nslabs = d.counts[0];
  out.dirichlet = hn * par::sum_slabs(nslabs, [&](std::int64_t s) {
    double acc = 0.0;
    for (std::int64_t c = s * cells_per_slab; c < (s + 1) * cells_per_slab; ++c) acc += dir[c];
    return acc;
  });
  out.potential = hn * inv_eps2 * par::sum_slabs(nslabs, [&](std::int64_t s) {
    double acc = 0.0;
    for (std::int64_t c = s * cells_per_slab; c < (s + 1) * cells_per_slab; ++c) acc += pot[c];
    return acc;
  });
  out.total = out.dirichlet + out.potential;
  if (with_density) {
    out.cell_density.resize(static_cast<std::size_t>(ncells));
    par::for_index(ncells, [&](std::int64_t c) {
      out.cell_density[c] = dir[c] + pot[c] * inv_eps2;
    });
  }
  return out;
}

double total_energy(const GridField& field) { return energy(field, false).total; }

std::vector<double> cell_gradients(const GridField& field) {
  field.validate();
  const Domain& d = field.domain;
  std::vector<double> out(static_cast<std::size_t>(d.cell_count()) * d.dim * field.m);
  const int nj = d.counts[1];
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  par::for_index(d.counts[0], [&](std::int64_t i) {
    for (int j = 0; j < nj; ++j)
      for (int k = 0; k < nk; ++k) {
        const std::int64_t cell = d.cell_index(static_cast<int>(i), j, k);
        cell_energy(field, static_cast<int>(i), j, k,
                    out.data() + cell * d.dim * field.m);
      }
  });
  return out;
}

namespace {

// Scaled gradient of the discrete energy at interior nodes:
//   g = -(Delta_h u - eps^-2 Df(u)),
// which is h^-n times the true gradient there. Returns the sup of |g|.
double scaled_gradient(const GridField& f, std::vector<double>& g) {
  const Domain& d = f.domain;
  const int m = f.m;
  const double inv_h2 = 1.0 / (d.h * d.h);
  const double inv_eps2 = 1.0 / (f.eps * f.eps);
  const bool quartic =
      f.potential.kind() == manifolds::PotentialKind::GlQuartic;
  const int n1 = d.nodes(1);
  const int n2 = d.dim == 3 ? d.nodes(2) : 1;
  std::fill(g.begin(), g.end(), 0.0);

  return par::max_slabs(d.counts[0] - 1, [&](std::int64_t ii) {
    const int i = static_cast<int>(ii) + 1;
    double worst = 0.0;
    double df[8];
    for (int j = 1; j < d.counts[1]; ++j) {
      const int kmax = d.dim == 3 ? d.counts[2] : 1;
      for (int k = (d.dim == 3 ? 1 : 0); k < kmax; ++k) {
        const std::int64_t v = d.node_index(i, j, k);
        const double* u = f.at(v);
        double* gv = g.data() + v * m;
        // (2n+1)-point Laplacian.
        const double* xl = f.at(d.node_index(i - 1, j, k));
        const double* xr = f.at(d.node_index(i + 1, j, k));
        const double* yl = f.at(d.node_index(i, j - 1, k));
        const double* yr = f.at(d.node_index(i, j + 1, k));
        const double* zl = d.dim == 3 ? f.at(d.node_index(i, j, k - 1)) : nullptr;
        const double* zr = d.dim == 3 ? f.at(d.node_index(i, j, k + 1)) : nullptr;
        if (quartic) {
          double n2u = 0.0;
          for (int q = 0; q < m; ++q) n2u += u[q] * u[q];
          const double c = 2.0 * (n2u - 1.0);
          for (int q = 0; q < m; ++q) df[q] = c * u[q];
        } else {
          f.potential.grad(std::span<const double>(u, static_cast<std::size_t>(m)),
                           std::span<double>(df, static_cast<std::size_t>(m)));
        }
        double norm2 = 0.0;
        for (int q = 0; q < m; ++q) {
          double lap = xl[q] + xr[q] + yl[q] + yr[q] - 2.0 * d.dim * u[q];
          if (d.dim == 3) lap += zl[q] + zr[q];
          const double val = -(lap * inv_h2 - df[q] * inv_eps2);
          gv[q] = val;
          norm2 += val * val;
        }
        worst = std::max(worst, norm2);
      }
    }
    return std::sqrt(worst);
  });
}

}  // namespace

ElResidual el_residual(const GridField& field) {
  field.validate();
  std::vector<double> g(field.values.size());
  ElResidual out;
  out.sup = scaled_gradient(field, g);
  out.node_norm.assign(static_cast<std::size_t>(field.domain.node_count()), 0.0);
  par::for_index(field.domain.node_count(), [&](std::int64_t v) {
    double s = 0.0;
    for (int q = 0; q < field.m; ++q) s += sqr(g[v * field.m + q]);
    out.node_norm[v] = std::sqrt(s);
  });
  return out;
}

MinimizeResult minimize(GridField field, const DirichletBC& bc, const SolverConfig& config) {
  field.validate();
  bc.apply(field);
  const Domain& d = field.domain;
  const int m = field.m;
  if (!(config.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");

  const double Kf = field.potential.curvature_bound();
  const double h2 = d.h * d.h;
  double tau = config.step_scale * h2 / (4.0 * d.dim + Kf * h2 / (field.eps * field.eps));

  std::vector<double> g(field.values.size());
  std::vector<TraceSample> trace;
  bool converged = false;
  double last_energy = total_energy(field);
  double grad_sup = scaled_gradient(field, g);
  trace.push_back({0, last_energy, grad_sup});
  GridField snapshot = field;  // restore point for the adaptive rule

  long it = 0;
  for (; it < config.max_iter; ++it) {
    if (grad_sup <= config.tolerance) {
      converged = true;
      break;
    }
    if (!std::isfinite(grad_sup))
      throw DivergenceError("non-finite gradient during minimization", it);
    // Descent step; g vanishes on the pinned boundary layer.
    par::for_index(static_cast<std::int64_t>(field.values.size()), [&](std::int64_t idx) {
      field.values[idx] -= tau * g[idx];
    });
    grad_sup = scaled_gradient(field, g);
    const bool at_trace = ((it + 1) % config.trace_every == 0) || it + 1 == config.max_iter;
    if (at_trace || grad_sup <= config.tolerance) {
      const double e = total_energy(field);
      if (!std::isfinite(e)) throw DivergenceError("non-finite energy during minimization", it);
      if (e > last_energy + 1e-12 * std::max(1.0, std::abs(last_energy))) {
        if (config.rule == StepRule::Adaptive) {
          field = snapshot;
          tau *= 0.5;
          grad_sup = scaled_gradient(field, g);
          continue;
        }
        throw DivergenceError("energy increased under the fixed-step rule", it);
      }
      last_energy = e;
      if (config.rule == StepRule::Adaptive) snapshot = field;
      trace.push_back({it + 1, e, grad_sup});
    }
  }
  const double final_energy = total_energy(field);
  if (trace.back().iteration != it) trace.push_back({it, final_energy, grad_sup});
  return MinimizeResult{std::move(field), std::move(trace), converged, it, final_energy,
                        grad_sup};
}

GridField harmonic_extension_init(const Domain& domain, const DirichletBC& bc,
                                  const Potential& potential, double eps) {
  GridField f = make_field(domain, potential, eps);
  bc.apply(f);
  const int m = f.m;
  const std::int64_t nn = domain.node_count();
  const int n2 = domain.dim == 3 ? domain.nodes(2) : 1;

  // Interior mask and node list.
  std::vector<std::int64_t> interior;
  interior.reserve(static_cast<std::size_t>(nn));
  std::vector<std::uint8_t> is_interior(static_cast<std::size_t>(nn), 0);
  for (int i = 0; i < domain.nodes(0); ++i)
    for (int j = 0; j < domain.nodes(1); ++j)
      for (int k = 0; k < n2; ++k)
        if (!domain.boundary_node(i, j, k)) {
          is_interior[domain.node_index(i, j, k)] = 1;
          interior.push_back(domain.node_index(i, j, k));
        }

  // Componentwise CG for -Delta_h x = 0 with Dirichlet data folded into b.
  const auto neighbors = [&](std::int64_t v, std::int64_t* nb) {
    const int n1 = domain.nodes(1);
    if (domain.dim == 2) {
      const int i = static_cast<int>(v / n1), j = static_cast<int>(v % n1);
      nb[0] = domain.node_index(i - 1, j);
      nb[1] = domain.node_index(i + 1, j);
      nb[2] = domain.node_index(i, j - 1);
      nb[3] = domain.node_index(i, j + 1);
      return 4;
    }
    const int nz = domain.nodes(2);
    const int k = static_cast<int>(v % nz);
    const std::int64_t r = v / nz;
    const int j = static_cast<int>(r % n1), i = static_cast<int>(r / n1);
    nb[0] = domain.node_index(i - 1, j, k);
    nb[1] = domain.node_index(i + 1, j, k);
    nb[2] = domain.node_index(i, j - 1, k);
    nb[3] = domain.node_index(i, j + 1, k);
    nb[4] = domain.node_index(i, j, k - 1);
    nb[5] = domain.node_index(i, j, k + 1);
    return 6;
  };

  const std::int64_t ni = static_cast<std::int64_t>(interior.size());
  std::vector<double> x(ni), b(ni), r(ni), p(ni), Ap(ni);
  const int deg = 2 * domain.dim;
  // Map node -> interior slot for the adjacency product.
  std::vector<std::int64_t> slot(static_cast<std::size_t>(nn), -1);
  for (std::int64_t q = 0; q < ni; ++q) slot[interior[q]] = q;
  for (int c = 0; c < m; ++c) {
    // b_v = sum of boundary-neighbor values; A = deg I - adjacency (interior).
    par::for_index(ni, [&](std::int64_t q) {
      std::int64_t nb[6];
      const int nnb = neighbors(interior[q], nb);
      double s = 0.0;
      for (int t = 0; t < nnb; ++t)
        if (!is_interior[nb[t]]) s += f.values[nb[t] * m + c];
      b[q] = s;
      x[q] = 0.0;
    });

    auto apply_A = [&](const std::vector<double>& in, std::vector<double>& out) {
      par::for_index(ni, [&](std::int64_t q) {
        std::int64_t nb[6];
        const int nnb = neighbors(interior[q], nb);
        double s = deg * in[q];
        for (int t = 0; t < nnb; ++t) {
          const std::int64_t w = slot[nb[t]];
          if (w >= 0) s -= in[w];
        }
        out[q] = s;
      });
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& bb) {
      const std::int64_t slabs = std::max<std::int64_t>(1, ni / 4096);
      return par::sum_slabs(slabs, [&](std::int64_t s) {
        const std::int64_t lo = s * ni / slabs, hi = (s + 1) * ni / slabs;
        double acc = 0.0;
        for (std::int64_t q = lo; q < hi; ++q) acc += a[q] * bb[q];
        return acc;
      });
    };

    r = b;
    p = r;
    double rr = dot(r, r);
    const double rr0 = std::max(rr, 1e-300);
    const long max_cg = 4 * std::max({domain.nodes(0), domain.nodes(1), n2});
    for (long cg = 0; cg < max_cg && rr > 1e-16 * rr0; ++cg) {
      apply_A(p, Ap);
      const double alpha = rr / std::max(dot(p, Ap), 1e-300);
      par::for_index(ni, [&](std::int64_t q) {
        x[q] += alpha * p[q];
        r[q] -= alpha * Ap[q];
      });
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      par::for_index(ni, [&](std::int64_t q) { p[q] = r[q] + beta * p[q]; });
    }
    par::for_index(ni, [&](std::int64_t q) { f.values[interior[q] * m + c] = x[q]; });
  }

  // Ambient blend toward the manifold where within reach.
  const double reach = f.manifold().reach();
  par::for_index(nn, [&](std::int64_t v) {
    double* u = f.at(v);
    const double dN =
        f.manifold().distance(std::span<const double>(u, static_cast<std::size_t>(m)));
    if (dN >= reach) return;
    const double w = std::clamp(1.0 - dN / reach, 0.0, 1.0);
    double proj[8];
    f.manifold().project(std::span<const double>(u, static_cast<std::size_t>(m)),
                         std::span<double>(proj, static_cast<std::size_t>(m)));
    for (int q = 0; q < m; ++q) u[q] = (1.0 - w) * u[q] + w * proj[q];
  });
  bc.apply(f);
  return f;
}

namespace {

void require_pattern(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("unsupported boundary pattern: " + what);
}

}  // namespace

DirichletBC boundary_vortex_data(const Domain& domain, const BCDescriptor& desc, double eps,
                                 const EmbeddedManifold& manifold) {
  DirichletBC bc;
  bc.desc = desc;
  const int m = manifold.ambient_dim();
  bc.values.assign(static_cast<std::size_t>(domain.node_count()) * m, 0.0);
  const int n2 = domain.dim == 3 ? domain.nodes(2) : 1;

  const auto eta = [&](double rho) { return std::min(rho / eps, 1.0); };

  if (desc.pattern == "constant") {
    std::array<double, 8> base{};
    manifold.base_point(std::span<double>(base.data(), static_cast<std::size_t>(m)));
    for (int i = 0; i < domain.nodes(0); ++i)
      for (int j = 0; j < domain.nodes(1); ++j)
        for (int k = 0; k < n2; ++k) {
          if (!domain.boundary_node(i, j, k)) continue;
          double* g = bc.values.data() + domain.node_index(i, j, k) * m;
          for (int q = 0; q < m; ++q) g[q] = base[q];
        }
    return bc;
  }

  if (desc.pattern == "points-2d") {
    require_pattern(domain.dim == 2 && manifold.id() == manifolds::ManifoldId::CircleS1,
                    "points-2d needs a 2D domain and the circle target");
    for (int i = 0; i < domain.nodes(0); ++i)
      for (int j = 0; j < domain.nodes(1); ++j) {
        if (!domain.boundary_node(i, j)) continue;
        const double x = domain.coord(0, i), y = domain.coord(1, j);
        const double theta = std::atan2(y, x);
        double scale = 1.0;
        for (const auto& p : desc.sigma_points) {
          const double dd = std::hypot(x - p[0], y - p[1]);
          scale = std::min(scale, eta(dd));
        }
        double* g = bc.values.data() + domain.node_index(i, j) * m;
        g[0] = scale * std::cos(desc.degree * theta);
        g[1] = scale * std::sin(desc.degree * theta);
      }
    return bc;
  }

  if (desc.pattern == "axis-degree" || desc.pattern == "axis-rp2") {
    require_pattern(domain.dim == 3, desc.pattern + " needs a 3D domain");
    require_pattern(desc.axis >= 0 && desc.axis < 3, "axis out of range");
    const bool rp2 = desc.pattern == "axis-rp2";
    require_pattern(rp2 ? manifold.id() == manifolds::ManifoldId::ProjectiveRP2
                        : manifold.id() == manifolds::ManifoldId::CircleS1,
                    desc.pattern + ": manifold mismatch");
    const int a0 = (desc.axis + 1) % 3, a1 = (desc.axis + 2) % 3;
    for (int i = 0; i < domain.nodes(0); ++i)
      for (int j = 0; j < domain.nodes(1); ++j)
        for (int k = 0; k < n2; ++k) {
          if (!domain.boundary_node(i, j, k)) continue;
          const std::array<double, 3> x = {domain.coord(0, i), domain.coord(1, j),
                                           domain.coord(2, k)};
          const double u = x[a0], v = x[a1];
          const double rho = std::hypot(u, v);
          const double theta = std::atan2(v, u);
          double* g = bc.values.data() + domain.node_index(i, j, k) * m;
          if (!rp2) {
            g[0] = eta(rho) * std::cos(desc.degree * theta);
            g[1] = eta(rho) * std::sin(desc.degree * theta);
          } else {
            const std::array<double, 3> n = {std::cos(theta / 2.0), std::sin(theta / 2.0), 0.0};
            std::array<double, 5> q;
            manifold.qvec_from_director(n, q);
            const double s = eta(rho);
            for (int t = 0; t < 5; ++t) g[t] = s * q[t];
          }
        }
    return bc;
  }

  throw ConfigError("unsupported boundary pattern: " + desc.pattern);
}

namespace {

// Distance from a boundary node to the generating singular set.
double dist_to_sigma(const Domain& domain, const BCDescriptor& desc,
                     const std::array<double, 3>& x) {
  double diam = 0.0;
  for (int a = 0; a < domain.dim; ++a) diam += sqr(domain.extent[a]);
  diam = std::sqrt(diam);
  if (desc.pattern == "constant") return diam;
  if (desc.pattern == "points-2d") {
    double best = diam;
    for (const auto& p : desc.sigma_points) best = std::min(best, std::hypot(x[0] - p[0], x[1] - p[1]));
    return best;
  }
  // axis patterns: Sigma = the two points where the axis meets the boundary.
  const double half = 0.5 * domain.extent[desc.axis];
  const int a0 = (desc.axis + 1) % 3, a1 = (desc.axis + 2) % 3;
  const double rho2 = sqr(x[a0]) + sqr(x[a1]);
  const double d1 = std::sqrt(rho2 + sqr(x[desc.axis] - half));
  const double d2 = std::sqrt(rho2 + sqr(x[desc.axis] + half));
  return std::min(d1, d2);
}

}  // namespace

BCReport boundary_data_report(const DirichletBC& bc, const Domain& domain, double eps,
                              const EmbeddedManifold& manifold) {
  BCReport rep;
  const int m = manifold.ambient_dim();
  const int n2 = domain.dim == 3 ? domain.nodes(2) : 1;
  for (int i = 0; i < domain.nodes(0); ++i)
    for (int j = 0; j < domain.nodes(1); ++j)
      for (int k = 0; k < n2; ++k) {
        if (!domain.boundary_node(i, j, k)) continue;
        const double* g = bc.values.data() + domain.node_index(i, j, k) * m;
        double norm = 0.0;
        for (int q = 0; q < m; ++q) norm += sqr(g[q]);
        rep.sup_norm = std::max(rep.sup_norm, std::sqrt(norm));
        const std::array<double, 3> x = {domain.coord(0, i), domain.coord(1, j),
                                         domain.dim == 3 ? domain.coord(2, k) : 0.0};
        // Tangential gradient by one-sided differences between boundary nodes.
        double grad2 = 0.0;
        const int idx[3] = {i, j, k};
        for (int a = 0; a < domain.dim; ++a) {
          int nb[3] = {i, j, k};
          nb[a] = idx[a] + 1 <= domain.counts[a] ? idx[a] + 1 : idx[a] - 1;
          if (!domain.boundary_node(nb[0], nb[1], nb[2])) continue;  // normal direction
          const double* gn = bc.values.data() + domain.node_index(nb[0], nb[1], nb[2]) * m;
          double s = 0.0;
          for (int q = 0; q < m; ++q) s += sqr(gn[q] - g[q]);
          grad2 += s / sqr(domain.h);
        }
        const double dS = dist_to_sigma(domain, bc.desc, x);
        rep.C0 = std::max(rep.C0, std::sqrt(grad2) * std::max(dS, eps));
        if (dS >= eps) {
          const double dN =
              manifold.distance(std::span<const double>(g, static_cast<std::size_t>(m)));
          if (dN > 1e-9) rep.on_manifold_outside_eps = false;
        }
      }
  return rep;
}

double boundary_energy(const DirichletBC& bc, const Domain& domain, double eps,
                       const Potential& potential) {
  const int m = potential.manifold().ambient_dim();
  const double inv_h2 = 1.0 / sqr(domain.h);
  const double inv_eps2 = 1.0 / sqr(eps);
  double total = 0.0;
  auto node_val = [&](int i, int j, int k) {
    return bc.values.data() + domain.node_index(i, j, k) * m;
  };

  if (domain.dim == 2) {
    // Four edges; 1D trapezoidal cells.
    const int NX = domain.counts[0], NY = domain.counts[1];
    auto run_edge = [&](int fixed_axis, int fixed_idx) {
      const int n = fixed_axis == 0 ? NY : NX;
      double e = 0.0;
      for (int t = 0; t < n; ++t) {
        const double* a = fixed_axis == 0 ? node_val(fixed_idx, t, 0) : node_val(t, fixed_idx, 0);
        const double* b =
            fixed_axis == 0 ? node_val(fixed_idx, t + 1, 0) : node_val(t + 1, fixed_idx, 0);
        const double diff = dist2m(a, b, m);
        double pot = 0.5 * (potential.eval(std::span<const double>(a, m)) +
                            potential.eval(std::span<const double>(b, m)));
        e += 0.5 * diff * inv_h2 + pot * inv_eps2;
      }
      return e * domain.h;
    };
    total = run_edge(0, 0) + run_edge(0, NX) + run_edge(1, 0) + run_edge(1, NY);
    return total;
  }

  // dim == 3: six faces, 2D trapezoidal cells on each.
  auto face_energy = [&](int normal_axis, int fixed_idx) {
    const int a0 = (normal_axis + 1) % 3, a1 = (normal_axis + 2) % 3;
    const int N0 = domain.counts[a0], N1 = domain.counts[a1];
    auto at = [&](int s, int t) {
      int ijk[3];
      ijk[normal_axis] = fixed_idx;
      ijk[a0] = s;
      ijk[a1] = t;
      return node_val(ijk[0], ijk[1], ijk[2]);
    };
    double e = 0.0;
    for (int s = 0; s < N0; ++s)
      for (int t = 0; t < N1; ++t) {
        const double* c00 = at(s, t);
        const double* c10 = at(s + 1, t);
        const double* c01 = at(s, t + 1);
        const double* c11 = at(s + 1, t + 1);
        const double gx = 0.5 * (dist2m(c10, c00, m) + dist2m(c11, c01, m)) * inv_h2;
        const double gy = 0.5 * (dist2m(c01, c00, m) + dist2m(c11, c10, m)) * inv_h2;
        const double pot = 0.25 * (potential.eval(std::span<const double>(c00, m)) +
                                   potential.eval(std::span<const double>(c10, m)) +
                                   potential.eval(std::span<const double>(c01, m)) +
                                   potential.eval(std::span<const double>(c11, m)));
        e += 0.5 * (gx + gy) + pot * inv_eps2;
      }
    return e * sqr(domain.h);
  };
  for (int a = 0; a < 3; ++a) {
    total += face_energy(a, 0);
    total += face_energy(a, domain.counts[a]);
  }
  return total;
}

GridField degree_ansatz_2d(int degree, double eps, const Domain& domain,
                           const Potential& potential) {
  if (domain.dim != 2) throw ConfigError("degree_ansatz_2d needs a 2D domain");
  if (potential.manifold().id() != manifolds::ManifoldId::CircleS1)
    throw ConfigError("degree_ansatz_2d needs the circle target");
  if (!(eps < 0.5)) throw ConfigError("degree_ansatz_2d needs eps < 1/2");
  GridField f = make_field(domain, potential, eps);
  for (int i = 0; i < domain.nodes(0); ++i)
    for (int j = 0; j < domain.nodes(1); ++j) {
      const double x = domain.coord(0, i), y = domain.coord(1, j);
      const double rho = std::hypot(x, y);
      double* u = f.at(domain.node_index(i, j));
      if (rho == 0.0) {
        u[0] = u[1] = 0.0;
        continue;
      }
      const double theta = std::atan2(y, x);
      const double s = std::min(rho / eps, 1.0);
      u[0] = s * std::cos(degree * theta);
      u[1] = s * std::sin(degree * theta);
    }
  return f;
}

double ball_energy(const GridField& field, const std::array<double, 3>& center, double r) {
  const Domain& d = field.domain;
  const double hn = std::pow(d.h, d.dim);
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  const double r2 = r * r;
  return hn * par::sum_slabs(d.counts[0], [&](std::int64_t i) {
    double s = 0.0;
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        const auto c = d.cell_center(static_cast<int>(i), j, k);
        double dd = sqr(c[0] - center[0]) + sqr(c[1] - center[1]);
        if (d.dim == 3) dd += sqr(c[2] - center[2]);
        if (dd <= r2) s += cell_energy(field, static_cast<int>(i), j, k);
      }
    return s;
  });
}

}  // namespace glq::gl
