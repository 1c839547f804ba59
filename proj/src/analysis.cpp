#include "glq/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "glq/errors.hpp"
#include "glq/parallel.hpp"

namespace glq::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

inline double sqr(double x) { return x * x; }

double dist_to_boundary(const Domain& d, const std::array<double, 3>& x) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < d.dim; ++a) best = std::min(best, 0.5 * d.extent[a] - std::abs(x[a]));
  return best;
}

double omega(int k) {
  // H^k(B_1^k): omega_0 = 1 (a point), omega_1 = 2, omega_2 = pi.
  switch (k) {
    case 0: return 1.0;
    case 1: return 2.0;
    case 2: return kPi;
    default: throw GeometryError("omega_{n-2} defined for n in {2,3,4} only");
  }
}

}  // namespace

double EnergyMeasure::ball_mass(const std::array<double, 3>& center, double r) const {
  const Domain& d = domain;
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  const double r2 = r * r;
  return par::sum_slabs(d.counts[0], [&](std::int64_t i) {
    double s = 0.0;
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        const auto c = d.cell_center(static_cast<int>(i), j, k);
        double dd = sqr(c[0] - center[0]) + sqr(c[1] - center[1]);
        if (d.dim == 3) dd += sqr(c[2] - center[2]);
        if (dd <= r2) s += cell_mass[d.cell_index(static_cast<int>(i), j, k)];
      }
    return s;
  });
}

double EnergyMeasure::box_mass(const std::array<double, 3>& lo,
                               const std::array<double, 3>& hi) const {
  const Domain& d = domain;
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  double s = 0.0;
  for (int i = 0; i < d.counts[0]; ++i)
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        const auto c = d.cell_center(i, j, k);
        bool in = true;
        for (int a = 0; a < d.dim; ++a) in = in && c[a] >= lo[a] && c[a] <= hi[a];
        if (in) s += cell_mass[d.cell_index(i, j, k)];
      }
  return s;
}

EnergyMeasure energy_measure(const GridField& field) {
  const auto breakdown = gl::energy(field);
  EnergyMeasure mu;
  mu.domain = field.domain;
  mu.eps = field.eps;
  const double hn = std::pow(field.domain.h, field.domain.dim);
  const double inv_log = 1.0 / std::log(1.0 / field.eps);
  mu.cell_mass.resize(breakdown.cell_density.size());
  par::for_index(static_cast<std::int64_t>(mu.cell_mass.size()), [&](std::int64_t c) {
    mu.cell_mass[c] = breakdown.cell_density[c] * hn * inv_log;
  });
  mu.total = breakdown.total * inv_log;
  return mu;
}

MonotonicityProfile monotonicity_profile(const GridField& field, const std::array<double, 3>& x,
                                         std::vector<double> radii, double residual_threshold) {
  if (radii.empty()) throw GeometryError("monotonicity_profile needs at least one radius");
  std::sort(radii.begin(), radii.end());
  const double db = dist_to_boundary(field.domain, x);
  if (radii.back() > db)
    throw GeometryError("profile radius " + std::to_string(radii.back()) +
                        " exceeds the distance " + std::to_string(db) + " to the boundary");
  MonotonicityProfile out;
  out.radii = radii;
  for (double r : radii) {
    const double e = gl::ball_energy(field, x, r);
    out.values.push_back(std::pow(r, 2 - field.domain.dim) * e);
  }
  for (std::size_t i = 0; i + 1 < out.values.size(); ++i) {
    const double drop = out.values[i] - out.values[i + 1];
    if (drop > out.worst_violation) out.worst_violation = drop;
  }
  out.nondecreasing = out.worst_violation <= 0.0;
  if (residual_threshold > 0.0) {
    const auto res = gl::el_residual(field);
    out.advisory = res.sup > residual_threshold;
  }
  return out;
}

namespace {

// Face-averaged cell data for the Pohozaev boundary quadrature.
struct CellData {
  std::vector<double> density;    // e_eps per cell
  std::vector<double> dirichlet;  // 1/2 |grad u|^2 per cell
  std::vector<double> potc;       // corner-averaged f per cell
  std::vector<double> grads;      // [cell][axis][comp]
};

CellData collect_cell_data(const GridField& f) {
  CellData out;
  auto breakdown = gl::energy(f);
  out.density = std::move(breakdown.cell_density);
  out.grads = gl::cell_gradients(f);
  const double inv_eps2 = 1.0 / (f.eps * f.eps);
  const Domain& d = f.domain;
  out.dirichlet.resize(out.density.size());
  out.potc.resize(out.density.size());
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  std::vector<double> node_pot(static_cast<std::size_t>(d.node_count()));
  par::for_index(d.node_count(), [&](std::int64_t v) {
    node_pot[v] = f.potential.eval(
        std::span<const double>(f.at(v), static_cast<std::size_t>(f.m)));
  });
  par::for_index(d.counts[0], [&](std::int64_t ii) {
    const int i = static_cast<int>(ii);
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        const std::int64_t cell = d.cell_index(i, j, k);
        double pot = 0.0;
        int n = 0;
        for (int di = 0; di <= 1; ++di)
          for (int dj = 0; dj <= 1; ++dj)
            for (int dk = 0; dk <= (d.dim == 3 ? 1 : 0); ++dk) {
              pot += node_pot[d.node_index(i + di, j + dj, k + (d.dim == 3 ? dk : 0))];
              ++n;
            }
        out.potc[cell] = pot / n;
        out.dirichlet[cell] = out.density[cell] - out.potc[cell] * inv_eps2;
      }
  });
  return out;
}

}  // namespace

PohozaevResult pohozaev_residual(const GridField& field, const std::array<double, 3>& x,
                                 double r) {
  const Domain& d = field.domain;
  if (r + d.h > dist_to_boundary(d, x))
    throw GeometryError("pohozaev ball (plus one cell) must fit inside the domain");
  const CellData data = collect_cell_data(field);
  const double hn = std::pow(d.h, d.dim);
  const double hf = std::pow(d.h, d.dim - 1);
  const double inv_eps2 = 1.0 / (field.eps * field.eps);
  const int n = d.dim;
  const int m = field.m;
  const int nk = d.dim == 3 ? d.counts[2] : 1;
  const double r2 = r * r;

  auto in_ball = [&](int i, int j, int k) {
    const auto c = d.cell_center(i, j, k);
    double dd = sqr(c[0] - x[0]) + sqr(c[1] - x[1]);
    if (n == 3) dd += sqr(c[2] - x[2]);
    return dd <= r2;
  };

  double lhs = 0.0, rhs = 0.0, ball_e = 0.0;
  for (int i = 0; i < d.counts[0]; ++i)
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        if (!in_ball(i, j, k)) continue;
        const std::int64_t cell = d.cell_index(i, j, k);
        lhs += hn * ((n - 2) * data.dirichlet[cell] + n * data.potc[cell] * inv_eps2);
        ball_e += hn * data.density[cell];
        // Boundary faces: neighbor cell outside the ball.
        const int idx[3] = {i, j, k};
        for (int a = 0; a < n; ++a)
          for (int s = -1; s <= 1; s += 2) {
            int nb[3] = {i, j, k};
            nb[a] = idx[a] + s;
            if (nb[a] < 0 || nb[a] >= d.counts[a])
              throw GeometryError("pohozaev ball touches the domain boundary");
            if (in_ball(nb[0], nb[1], nb[2])) continue;
            const std::int64_t ncell = d.cell_index(nb[0], nb[1], nb[2]);
            // Face center and averaged data.
            auto c0 = d.cell_center(i, j, k);
            c0[a] += 0.5 * s * d.h;
            const double e_face = 0.5 * (data.density[cell] + data.density[ncell]);
            double gface[3][8];
            for (int b = 0; b < n; ++b)
              for (int q = 0; q < m; ++q)
                gface[b][q] = 0.5 * (data.grads[(cell * n + b) * m + q] +
                                     data.grads[(ncell * n + b) * m + q]);
            std::array<double, 3> yx{};
            for (int b = 0; b < n; ++b) yx[b] = c0[b] - x[b];
            const double yxnu = yx[a] * s;  // (y - x) . nu
            // |d_nu u|^2 and the tangential coupling term.
            double dnu2 = 0.0;
            for (int q = 0; q < m; ++q) dnu2 += sqr(gface[a][q]);
            // P(y-x) = tangential part: zero out the normal component.
            double coupling = 0.0;
            for (int q = 0; q < m; ++q) {
              double tang = 0.0;
              for (int b = 0; b < n; ++b)
                if (b != a) tang += yx[b] * gface[b][q];
              coupling += (s * gface[a][q]) * tang;
            }
            rhs += hf * (yxnu * e_face - yxnu * dnu2 - coupling);
          }
      }
  PohozaevResult out;
  out.lhs = lhs;
  out.rhs = rhs;
  out.residual_abs = std::abs(lhs - rhs);
  out.residual_rel = out.residual_abs / std::max(ball_e, 1e-300);
  return out;
}

void TestField::eval(int dim, const std::array<double, 3>& x, std::array<double, 3>* phi,
                     std::array<std::array<double, 3>, 3>* dphi) const {
  // bump_a(t) = (1 - t^2)^2 on |t| < 1.
  double b[3] = {1.0, 1.0, 1.0}, db[3] = {0.0, 0.0, 0.0};
  bool inside = true;
  for (int a = 0; a < dim; ++a) {
    const double t = (x[a] - center[a]) / width[a];
    if (std::abs(t) >= 1.0) {
      inside = false;
      break;
    }
    const double u = 1.0 - t * t;
    b[a] = u * u;
    db[a] = -4.0 * t * u / width[a];
  }
  for (auto& row : *dphi) row = {0.0, 0.0, 0.0};
  *phi = {0.0, 0.0, 0.0};
  if (!inside) return;
  double bump = 1.0, dbump[3];
  for (int a = 0; a < dim; ++a) bump *= b[a];
  for (int a = 0; a < dim; ++a) {
    dbump[a] = db[a];
    for (int c = 0; c < dim; ++c)
      if (c != a) dbump[a] *= b[c];
  }
  if (spin == 0) {
    for (int jj = 0; jj < dim; ++jj) {
      (*phi)[jj] = direction[jj] * bump;
      for (int kk = 0; kk < dim; ++kk) (*dphi)[jj][kk] = direction[jj] * dbump[kk];
    }
  } else {
    // Rotational field in the xy-plane: v = (-(y-cy), x-cx, 0).
    const double vx = -(x[1] - center[1]);
    const double vy = x[0] - center[0];
    (*phi)[0] = vx * bump;
    (*phi)[1] = vy * bump;
    (*dphi)[0][0] = vx * dbump[0];
    (*dphi)[0][1] = -bump + vx * dbump[1];
    (*dphi)[1][0] = bump + vy * dbump[0];
    (*dphi)[1][1] = vy * dbump[1];
    if (dim == 3) {
      (*dphi)[0][2] = vx * dbump[2];
      (*dphi)[1][2] = vy * dbump[2];
    }
  }
}

std::vector<TestField> standard_test_fields(const Domain& domain) {
  std::vector<TestField> out;
  std::array<double, 3> w{};
  for (int a = 0; a < domain.dim; ++a) w[a] = 0.35 * domain.extent[a];
  for (int a = 0; a < domain.dim; ++a) {
    TestField f;
    f.center = {0.0, 0.0, 0.0};
    f.width = w;
    f.direction = {0.0, 0.0, 0.0};
    f.direction[a] = 1.0;
    out.push_back(f);
  }
  TestField rot;
  rot.center = {0.0, 0.0, 0.0};
  rot.width = w;
  rot.spin = 1;
  out.push_back(rot);
  // An off-center bump probing a region away from the middle.
  TestField off;
  off.center = {0.25 * domain.extent[0], 0.2 * domain.extent[1], 0.0};
  off.width = {0.2 * domain.extent[0], 0.2 * domain.extent[1], 0.2 * domain.extent[2]};
  off.direction = {1.0, 0.0, 0.0};
  out.push_back(off);
  return out;
}

double stationarity_residual(const GridField& field, const TestField& phi) {
  const Domain& d = field.domain;
  for (int a = 0; a < d.dim; ++a) {
    if (!(phi.width[a] > 0.0)) throw InterfaceError("test field width must be positive");
    if (std::abs(phi.center[a]) + phi.width[a] >= 0.5 * d.extent[a])
      throw InterfaceError("test field must be compactly supported inside the domain");
  }
  const CellData data = collect_cell_data(field);
  const double hn = std::pow(d.h, d.dim);
  const double inv_log = 1.0 / std::log(1.0 / field.eps);
  const int n = d.dim;
  const int m = field.m;
  const int nk = n == 3 ? d.counts[2] : 1;

  return hn * par::sum_slabs(d.counts[0], [&](std::int64_t ii) {
    const int i = static_cast<int>(ii);
    double acc = 0.0;
    std::array<double, 3> phiv{};
    std::array<std::array<double, 3>, 3> dphi{};
    for (int j = 0; j < d.counts[1]; ++j)
      for (int k = 0; k < nk; ++k) {
        const auto c = d.cell_center(i, j, k);
        phi.eval(n, c, &phiv, &dphi);
        bool zero = true;
        for (int jj = 0; jj < n && zero; ++jj)
          for (int kk = 0; kk < n; ++kk)
            if (dphi[jj][kk] != 0.0) {
              zero = false;
              break;
            }
        if (zero) continue;
        const std::int64_t cell = d.cell_index(i, j, k);
        const double e = data.density[cell];
        for (int jj = 0; jj < n; ++jj)
          for (int kk = 0; kk < n; ++kk) {
            double gjk = 0.0;
            for (int q = 0; q < m; ++q)
              gjk += data.grads[(cell * n + jj) * m + q] * data.grads[(cell * n + kk) * m + q];
            const double A = (e * (jj == kk ? 1.0 : 0.0) - gjk) * inv_log;
            acc += A * dphi[jj][kk];
          }
      }
    return acc;
  });
}

std::vector<double> stress_tensor(const GridField& field) {
  const Domain& d = field.domain;
  const CellData data = collect_cell_data(field);
  const double inv_log = 1.0 / std::log(1.0 / field.eps);
  const int n = d.dim;
  const int m = field.m;
  std::vector<double> out(static_cast<std::size_t>(d.cell_count()) * n * n);
  par::for_index(d.cell_count(), [&](std::int64_t cell) {
    for (int jj = 0; jj < n; ++jj)
      for (int kk = 0; kk < n; ++kk) {
        double gjk = 0.0;
        for (int q = 0; q < m; ++q)
          gjk += data.grads[(cell * n + jj) * m + q] * data.grads[(cell * n + kk) * m + q];
        out[(cell * n + jj) * n + kk] =
            (data.density[cell] * (jj == kk ? 1.0 : 0.0) - gjk) * inv_log;
      }
  });
  return out;
}

SingularSetEstimate extract_singular_set(const GridField& field, double eta, double r) {
  const Domain& d = field.domain;
  if (!(eta > 0.0)) throw ConfigError("extraction threshold eta must be positive");
  if (!(field.eps <= r / 4.0 + 1e-12))
    throw ConfigError("extraction needs eps <= r/4 (probe radius too small)");
  const int n = d.dim;
  const double hn = std::pow(d.h, n);
  const auto breakdown = gl::energy(field);
  const auto& e = breakdown.cell_density;

  const int R = static_cast<int>(std::floor(r / d.h + 1e-9));
  const double R2 = sqr(r / d.h);
  const int Rh = static_cast<int>(std::floor(0.5 * r / d.h + 1e-9));
  const double Rh2 = sqr(0.5 * r / d.h);
  const int NX = d.counts[0], NY = d.counts[1], NZ = n == 3 ? d.counts[2] : 1;

  // Ball sums over cell centers; offsets are exact integer displacements.
  std::vector<double> ball(static_cast<std::size_t>(d.cell_count()), -1.0);
  std::vector<double> half(static_cast<std::size_t>(d.cell_count()), -1.0);

  if (n == 3) {
    // Prefix sums along z, then per-(di,dj) interval lookups.
    std::vector<double> prefix(static_cast<std::size_t>(NX) * NY * (NZ + 1), 0.0);
    par::for_index(static_cast<std::int64_t>(NX) * NY, [&](std::int64_t ij) {
      const int i = static_cast<int>(ij / NY), j = static_cast<int>(ij % NY);
      double acc = 0.0;
      for (int k = 0; k < NZ; ++k) {
        prefix[(ij) * (NZ + 1) + k] = acc;
        acc += e[d.cell_index(i, j, k)];
      }
      prefix[ij * (NZ + 1) + NZ] = acc;
    });
    auto run_radius = [&](int Rint, double Rsq, std::vector<double>& out_sum) {
      std::vector<std::array<int, 3>> pairs;  // (di, dj, dkmax)
      for (int di = -Rint; di <= Rint; ++di)
        for (int dj = -Rint; dj <= Rint; ++dj) {
          const double rem = Rsq - di * di - dj * dj;
          if (rem < 0) continue;
          pairs.push_back({di, dj, static_cast<int>(std::floor(std::sqrt(rem) + 1e-9))});
        }
      par::for_index(NX, [&](std::int64_t ii) {
        const int i = static_cast<int>(ii);
        if (i < Rint || i >= NX - Rint) return;
        for (int j = Rint; j < NY - Rint; ++j)
          for (int k = Rint; k < NZ - Rint; ++k) {
            double s = 0.0;
            for (const auto& p : pairs) {
              const std::int64_t ij = static_cast<std::int64_t>(i + p[0]) * NY + (j + p[1]);
              s += prefix[ij * (NZ + 1) + (k + p[2] + 1)] - prefix[ij * (NZ + 1) + (k - p[2])];
            }
            out_sum[d.cell_index(i, j, k)] = s * hn;
          }
      });
    };
    run_radius(R, R2, ball);
    run_radius(Rh, Rh2, half);
  } else {
    std::vector<std::array<int, 2>> offs, offs_h;
    for (int di = -R; di <= R; ++di)
      for (int dj = -R; dj <= R; ++dj)
        if (di * di + dj * dj <= R2) offs.push_back({di, dj});
    for (int di = -Rh; di <= Rh; ++di)
      for (int dj = -Rh; dj <= Rh; ++dj)
        if (di * di + dj * dj <= Rh2) offs_h.push_back({di, dj});
    par::for_index(NX, [&](std::int64_t ii) {
      const int i = static_cast<int>(ii);
      if (i < R || i >= NX - R) return;
      for (int j = R; j < NY - R; ++j) {
        double s = 0.0;
        for (const auto& o : offs) s += e[d.cell_index(i + o[0], j + o[1])];
        ball[d.cell_index(i, j)] = s * hn;
        double sh = 0.0;
        for (const auto& o : offs_h) sh += e[d.cell_index(i + o[0], j + o[1])];
        half[d.cell_index(i, j)] = sh * hn;
      }
    });
  }

  SingularSetEstimate est;
  est.eta = eta;
  est.r = r;
  const double threshold = eta * std::pow(r, n - 2) * std::log(r / field.eps);

  // Raw smallness test + dichotomy constant over passing cells.
  double fitted_C = 0.0;
  std::vector<std::uint8_t> fails(static_cast<std::size_t>(d.cell_count()), 0);
  for (int i = 0; i < NX; ++i)
    for (int j = 0; j < NY; ++j)
      for (int k = 0; k < NZ; ++k) {
        const std::int64_t cell = d.cell_index(i, j, k);
        if (ball[cell] < 0) continue;  // probe ball does not fit
        ++est.evaluated_cells;
        if (ball[cell] > threshold) {
          fails[cell] = 1;
          ++est.smallness_failed;
        } else {
          fitted_C = std::max(fitted_C, half[cell] / std::pow(r, n - 2));
        }
      }
  est.fitted_C = fitted_C;

  // Ridge sharpening: keep failing cells whose ball energy is a local max.
  std::vector<std::int64_t> flagged;
  for (int i = 0; i < NX; ++i)
    for (int j = 0; j < NY; ++j)
      for (int k = 0; k < NZ; ++k) {
        const std::int64_t cell = d.cell_index(i, j, k);
        if (!fails[cell]) continue;
        bool ridge = true;
        for (int di = -1; di <= 1 && ridge; ++di)
          for (int dj = -1; dj <= 1 && ridge; ++dj)
            for (int dk = (n == 3 ? -1 : 0); dk <= (n == 3 ? 1 : 0); ++dk) {
              if (di == 0 && dj == 0 && dk == 0) continue;
              const int ni = i + di, nj = j + dj, nk2 = k + dk;
              if (ni < 0 || ni >= NX || nj < 0 || nj >= NY || nk2 < 0 || nk2 >= NZ) continue;
              const double bn = ball[d.cell_index(ni, nj, nk2)];
              if (bn < 0) continue;
              if (ball[cell] < bn * (1.0 - 1e-9)) {
                ridge = false;
                break;
              }
            }
        if (ridge) flagged.push_back(cell);
      }

  // Cluster flagged cells by 26/8-connectivity.
  std::vector<int> labels(flagged.size(), -1);
  {
    // cell -> position in `flagged`
    std::vector<std::int64_t> where(static_cast<std::size_t>(d.cell_count()), -1);
    for (std::size_t t = 0; t < flagged.size(); ++t) where[flagged[t]] = static_cast<std::int64_t>(t);
    auto decode = [&](std::int64_t cell, int* i, int* j, int* k) {
      if (n == 2) {
        *i = static_cast<int>(cell / NY);
        *j = static_cast<int>(cell % NY);
        *k = 0;
      } else {
        *k = static_cast<int>(cell % NZ);
        const std::int64_t rjk = cell / NZ;
        *j = static_cast<int>(rjk % NY);
        *i = static_cast<int>(rjk / NY);
      }
    };
    int next = 0;
    for (std::size_t t = 0; t < flagged.size(); ++t) {
      if (labels[t] >= 0) continue;
      labels[t] = next;
      std::deque<std::int64_t> queue{static_cast<std::int64_t>(t)};
      while (!queue.empty()) {
        const std::int64_t cur = queue.front();
        queue.pop_front();
        int ci, cj, ck;
        decode(flagged[cur], &ci, &cj, &ck);
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = (n == 3 ? -1 : 0); dk <= (n == 3 ? 1 : 0); ++dk) {
              const int ni = ci + di, nj = cj + dj, nk2 = ck + dk;
              if (ni < 0 || ni >= NX || nj < 0 || nj >= NY || nk2 < 0 || nk2 >= NZ) continue;
              const std::int64_t w = where[d.cell_index(ni, nj, nk2)];
              if (w >= 0 && labels[w] < 0) {
                labels[w] = next;
                queue.push_back(w);
              }
            }
      }
      ++next;
    }
    // Segments: PCA line fit per cluster (n=3).
    if (n == 3 && next > 0) {
      for (int cl = 0; cl < next; ++cl) {
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        int count = 0;
        for (std::size_t t = 0; t < flagged.size(); ++t) {
          if (labels[t] != cl) continue;
          int ci, cj, ck;
          decode(flagged[t], &ci, &cj, &ck);
          const auto c = d.cell_center(ci, cj, ck);
          mean += Eigen::Vector3d(c[0], c[1], c[2]);
          ++count;
        }
        mean /= count;
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (std::size_t t = 0; t < flagged.size(); ++t) {
          if (labels[t] != cl) continue;
          int ci, cj, ck;
          decode(flagged[t], &ci, &cj, &ck);
          const auto c = d.cell_center(ci, cj, ck);
          const Eigen::Vector3d v = Eigen::Vector3d(c[0], c[1], c[2]) - mean;
          cov += v * v.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        Eigen::Vector3d dir = es.eigenvectors().col(2);
        if (count == 1) dir = Eigen::Vector3d(0, 0, 1);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t t = 0; t < flagged.size(); ++t) {
          if (labels[t] != cl) continue;
          int ci, cj, ck;
          decode(flagged[t], &ci, &cj, &ck);
          const auto c = d.cell_center(ci, cj, ck);
          const double proj = dir.dot(Eigen::Vector3d(c[0], c[1], c[2]) - mean);
          lo = std::min(lo, proj);
          hi = std::max(hi, proj);
        }
        Segment seg;
        seg.cluster = cl;
        seg.points = count;
        for (int a = 0; a < 3; ++a) {
          seg.a[a] = mean(a) + lo * dir(a);
          seg.b[a] = mean(a) + hi * dir(a);
          seg.direction[a] = dir(a);
        }
        est.segments.push_back(seg);
      }
    }
  }

  est.points.reserve(flagged.size());
  est.cluster = labels;
  for (std::size_t t = 0; t < flagged.size(); ++t) {
    int ci, cj, ck;
    if (n == 2) {
      ci = static_cast<int>(flagged[t] / NY);
      cj = static_cast<int>(flagged[t] % NY);
      ck = 0;
    } else {
      ck = static_cast<int>(flagged[t] % NZ);
      const std::int64_t rjk = flagged[t] / NZ;
      cj = static_cast<int>(rjk % NY);
      ci = static_cast<int>(rjk / NY);
    }
    est.points.push_back(d.cell_center(ci, cj, ck));
  }
  return est;
}

double density_at(const EnergyMeasure& measure, const std::array<double, 3>& x, double r) {
  if (r > dist_to_boundary(measure.domain, x))
    throw GeometryError("density ball exceeds the distance to the boundary");
  return measure.ball_mass(x, r) / (omega(measure.domain.dim - 2) *
                                    std::pow(r, measure.domain.dim - 2));
}

DensityProfile density_profile(const EnergyMeasure& measure, const std::array<double, 3>& x,
                               std::vector<double> radii) {
  std::sort(radii.begin(), radii.end());
  DensityProfile out;
  out.radii = radii;
  for (double r : radii) out.values.push_back(density_at(measure, x, r));
  for (std::size_t i = 0; i + 1 < out.values.size(); ++i)
    out.worst_violation =
        std::max(out.worst_violation, out.values[i] - out.values[i + 1]);
  out.nondecreasing = out.worst_violation <= 0.0;
  return out;
}

NormSource NormSource::circle(int max_degree) {
  NormSource src;
  for (int dd = 0; dd <= max_degree; ++dd) {
    src.values.push_back(homotopy::circle_norm(dd));
    src.labels.push_back("d=" + std::to_string(dd));
  }
  return src;
}

NormSource NormSource::from_table(const homotopy::NormTable& table,
                                  const homotopy::ClassAlgebra& alg) {
  NormSource src;
  for (int c = 0; c < alg.num_classes(); ++c) {
    src.values.push_back(table.norms[c]);
    src.labels.push_back(alg.class_label(c));
  }
  return src;
}

std::vector<QuantizationRecord> quantization_report(
    const std::vector<std::pair<std::array<double, 3>, double>>& densities,
    const NormSource& source, double tolerance) {
  if (source.values.empty()) throw ConfigError("quantization needs a nonempty norm source");
  double floor = std::numeric_limits<double>::infinity();
  for (double v : source.values)
    if (v > 0) floor = std::min(floor, v);
  if (!std::isfinite(floor)) floor = 1.0;
  std::vector<QuantizationRecord> out;
  for (const auto& [probe, theta] : densities) {
    QuantizationRecord rec;
    rec.probe = probe;
    rec.theta = theta;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < source.values.size(); ++i) {
      const double gap = std::abs(theta - source.values[i]);
      if (gap < best) {
        best = gap;
        rec.nearest = source.values[i];
        rec.nearest_label = source.labels[i];
      }
    }
    rec.gap_rel = best / std::max(rec.nearest, floor);
    rec.pass = rec.gap_rel <= tolerance;
    out.push_back(rec);
  }
  return out;
}

double circle_energy_2d(const GridField& field, const std::array<double, 3>& center, double r,
                        int samples) {
  const Domain& d = field.domain;
  if (d.dim != 2) throw GeometryError("circle_energy_2d needs a 2D field");
  if (r > dist_to_boundary(d, center)) throw GeometryError("circle exceeds the domain");
  const int m = field.m;
  auto interp = [&](double px, double py, double* out) {
    const double gx = (px + 0.5 * d.extent[0]) / d.h;
    const double gy = (py + 0.5 * d.extent[1]) / d.h;
    const int i = std::clamp(static_cast<int>(std::floor(gx)), 0, d.counts[0] - 1);
    const int j = std::clamp(static_cast<int>(std::floor(gy)), 0, d.counts[1] - 1);
    const double fx = gx - i, fy = gy - j;
    const double* c00 = field.at(d.node_index(i, j));
    const double* c10 = field.at(d.node_index(i + 1, j));
    const double* c01 = field.at(d.node_index(i, j + 1));
    const double* c11 = field.at(d.node_index(i + 1, j + 1));
    for (int q = 0; q < m; ++q)
      out[q] = (1 - fx) * (1 - fy) * c00[q] + fx * (1 - fy) * c10[q] +
               (1 - fx) * fy * c01[q] + fx * fy * c11[q];
  };
  const double dtheta = 2.0 * kPi / samples;
  std::vector<double> vals(static_cast<std::size_t>(samples) * m);
  for (int k = 0; k < samples; ++k) {
    const double t = k * dtheta;
    interp(center[0] + r * std::cos(t), center[1] + r * std::sin(t),
           vals.data() + static_cast<std::size_t>(k) * m);
  }
  double total = 0.0;
  const double ds = r * dtheta;
  for (int k = 0; k < samples; ++k) {
    const double* prev = vals.data() + static_cast<std::size_t>((k + samples - 1) % samples) * m;
    const double* next = vals.data() + static_cast<std::size_t>((k + 1) % samples) * m;
    const double* cur = vals.data() + static_cast<std::size_t>(k) * m;
    double du2 = 0.0;
    for (int q = 0; q < m; ++q) du2 += sqr((next[q] - prev[q]) / (2.0 * ds));
    total += (0.5 * du2 +
              field.potential.eval(std::span<const double>(cur, static_cast<std::size_t>(m))) /
                  (field.eps * field.eps)) *
             ds;
  }
  return total;
}

}  // namespace glq::analysis
