#include "glq/manifolds.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "glq/errors.hpp"

namespace glq::manifolds {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt6 = 2.44948974278317809820;

double norm(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s);
}

// Orthonormal basis of symmetric traceless 3x3 matrices (Frobenius inner
// product): q1..q3 off-diagonal, q4..q5 diagonal.
Eigen::Matrix3d matrix_from_qvec(std::span<const double> q) {
  Eigen::Matrix3d A;
  const double a = q[0] / kSqrt2, b = q[1] / kSqrt2, c = q[2] / kSqrt2;
  const double d = q[3] / kSqrt2, e = q[4] / kSqrt6;
  A << d + e, a, b,
       a, -d + e, c,
       b, c, -2.0 * e;
  return A;
}

void qvec_from_matrix(const Eigen::Matrix3d& A, std::span<double> q) {
  q[0] = kSqrt2 * A(0, 1);
  q[1] = kSqrt2 * A(0, 2);
  q[2] = kSqrt2 * A(1, 2);
  q[3] = (A(0, 0) - A(1, 1)) / kSqrt2;
  q[4] = -kSqrt6 * A(2, 2) / 2.0;
}

}  // namespace

EmbeddedManifold EmbeddedManifold::circle() {
  EmbeddedManifold m;
  m.id_ = ManifoldId::CircleS1;
  m.pi1_ = Pi1::Integers;
  m.ambient_dim_ = 2;
  m.reach_ = 0.5;
  m.scale_ = 1.0;
  m.bound_ = 1.0;
  return m;
}

EmbeddedManifold EmbeddedManifold::sphere() {
  EmbeddedManifold m;
  m.id_ = ManifoldId::SphereS2;
  m.pi1_ = Pi1::Trivial;
  m.ambient_dim_ = 3;
  m.reach_ = 0.5;
  m.scale_ = 1.0;
  m.bound_ = 1.0;
  return m;
}

EmbeddedManifold EmbeddedManifold::rp2_qtensor(double embedding_scale) {
  if (embedding_scale <= 0.0) throw ConfigError("RP2 embedding scale must be positive");
  EmbeddedManifold m;
  m.id_ = ManifoldId::ProjectiveRP2;
  m.pi1_ = Pi1::FiniteZ2;
  m.ambient_dim_ = 5;
  m.reach_ = 0.3 * embedding_scale;
  m.scale_ = embedding_scale;
  m.bound_ = embedding_scale * std::sqrt(2.0 / 3.0);
  return m;
}

EmbeddedManifold EmbeddedManifold::by_name(const std::string& id) {
  if (id == "circle-S1") return circle();
  if (id == "sphere-S2") return sphere();
  if (id == "projective-RP2-qtensor") return rp2_qtensor();
  throw ConfigError("unknown manifold id: " + id);
}

std::string EmbeddedManifold::name() const {
  switch (id_) {
    case ManifoldId::CircleS1: return "circle-S1";
    case ManifoldId::SphereS2: return "sphere-S2";
    case ManifoldId::ProjectiveRP2: return "projective-RP2-qtensor";
  }
  return "?";
}

double EmbeddedManifold::distance(std::span<const double> y) const {
  switch (id_) {
    case ManifoldId::CircleS1:
    case ManifoldId::SphereS2:
      return std::abs(norm(y) - 1.0);
    case ManifoldId::ProjectiveRP2: {
      // |A - Q(n1)|_F^2 = |A|^2 - 2 s lambda1 + (2/3) s^2.
      const Eigen::Matrix3d A = matrix_from_qvec(y);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
      const double lambda1 = es.eigenvalues()(2);
      double n2 = 0.0;
      for (double v : y) n2 += v * v;
      const double d2 = n2 - 2.0 * scale_ * lambda1 + (2.0 / 3.0) * scale_ * scale_;
      return std::sqrt(std::max(0.0, d2));
    }
  }
  return 0.0;
}

void EmbeddedManifold::project(std::span<const double> y, std::span<double> out) const {
  const double d = distance(y);
  if (!(d < reach_))
    throw ReachError("point at distance " + std::to_string(d) + " exceeds projection reach " +
                     std::to_string(reach_) + " of " + name());
  switch (id_) {
    case ManifoldId::CircleS1:
    case ManifoldId::SphereS2: {
      const double r = norm(y);
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] / r;
      return;
    }
    case ManifoldId::ProjectiveRP2: {
      std::array<double, 3> n;
      double gap = 0.0;
      director_from_qvec(y, n, &gap);
      if (gap < 1e-12)
        throw ReachError("degenerate leading eigenvalue: point outside RP2 projection reach");
      qvec_from_director(n, out);
      return;
    }
  }
}

void EmbeddedManifold::base_point(std::span<double> out) const {
  switch (id_) {
    case ManifoldId::CircleS1:
      out[0] = 1.0; out[1] = 0.0;
      return;
    case ManifoldId::SphereS2:
      out[0] = 0.0; out[1] = 0.0; out[2] = 1.0;
      return;
    case ManifoldId::ProjectiveRP2: {
      const std::array<double, 3> n = {0.0, 0.0, 1.0};
      qvec_from_director(n, out);
      return;
    }
  }
}

void EmbeddedManifold::random_point(std::mt19937_64& rng, std::span<double> out) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (id_) {
    case ManifoldId::CircleS1: {
      std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
      const double t = unif(rng);
      out[0] = std::cos(t); out[1] = std::sin(t);
      return;
    }
    case ManifoldId::SphereS2: {
      double v[3], r = 0.0;
      do {
        for (double& x : v) x = gauss(rng);
        r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      } while (r < 1e-8);
      for (int i = 0; i < 3; ++i) out[i] = v[i] / r;
      return;
    }
    case ManifoldId::ProjectiveRP2: {
      std::array<double, 3> n;
      double r = 0.0;
      do {
        for (double& x : n) x = gauss(rng);
        r = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      } while (r < 1e-8);
      for (double& x : n) x /= r;
      qvec_from_director(n, out);
      return;
    }
  }
}

void EmbeddedManifold::qvec_from_director(std::span<const double, 3> n,
                                          std::span<double> out) const {
  if (id_ != ManifoldId::ProjectiveRP2) throw ConfigError("qvec_from_director: not RP2");
  Eigen::Vector3d v(n[0], n[1], n[2]);
  Eigen::Matrix3d Q = scale_ * (v * v.transpose() - Eigen::Matrix3d::Identity() / 3.0);
  qvec_from_matrix(Q, out);
}

void EmbeddedManifold::director_from_qvec(std::span<const double> q, std::span<double, 3> n,
                                          double* gap) const {
  if (id_ != ManifoldId::ProjectiveRP2) throw ConfigError("director_from_qvec: not RP2");
  const Eigen::Matrix3d A = matrix_from_qvec(q);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
  const auto& vals = es.eigenvalues();
  if (gap) *gap = vals(2) - vals(1);
  Eigen::Vector3d v = es.eigenvectors().col(2);
  // Deterministic sign: largest-magnitude component positive.
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v(i)) > std::abs(v(k))) k = i;
  if (v(k) < 0) v = -v;
  n[0] = v(0); n[1] = v(1); n[2] = v(2);
}

Potential::Potential(PotentialKind kind, EmbeddedManifold manifold, double cap)
    : kind_(kind), manifold_(std::move(manifold)), cap_(cap) {}

Potential Potential::gl_quartic(const EmbeddedManifold& manifold) {
  if (manifold.id() == ManifoldId::ProjectiveRP2)
    throw ConfigError("gl-quartic vanishes on a sphere, not on RP2; use canonical-dist2");
  return Potential(PotentialKind::GlQuartic, manifold, 0.0);
}

Potential Potential::canonical_dist2(const EmbeddedManifold& manifold, double cap_value) {
  const double d2 = manifold.reach() * manifold.reach();
  if (cap_value <= 0.0) cap_value = d2;
  if (cap_value < d2 / 4.0)
    throw ConfigError("cap_value below the linear range d^2/4 breaks monotonicity");
  return Potential(PotentialKind::CanonicalDist2, manifold, cap_value);
}

Potential Potential::by_name(const std::string& kind, const EmbeddedManifold& manifold) {
  if (kind == "gl-quartic") return gl_quartic(manifold);
  if (kind == "canonical-dist2") return canonical_dist2(manifold);
  throw ConfigError("unknown potential kind: " + kind);
}

Potential Potential::zero(const EmbeddedManifold& manifold) {
  Potential p(PotentialKind::CanonicalDist2, manifold, 1.0);
  p.zero_ = true;
  return p;
}

std::string Potential::kind_name() const {
  if (zero_) return "zero";
  return kind_ == PotentialKind::GlQuartic ? "gl-quartic" : "canonical-dist2";
}

namespace {

// C^1 monotone blend phi on [a, b]: phi(a)=a, phi'(a)=1, phi(b)=cap, phi'(b)=0.
struct Blend {
  double a, b, cap;
  double value(double t) const {
    if (t <= a) return t;
    if (t >= b) return cap;
    const double s = (t - a) / (b - a);
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    return h00 * a + h10 * (b - a) + h01 * cap;
  }
  double deriv(double t) const {
    if (t <= a) return 1.0;
    if (t >= b) return 0.0;
    const double s = (t - a) / (b - a);
    const double dh00 = 6 * s * (s - 1);
    const double dh10 = (1 - s) * (1 - 3 * s);
    const double dh01 = 6 * s * (1 - s);
    return (dh00 * a + dh10 * (b - a) + dh01 * cap) / (b - a);
  }
};

}  // namespace

double Potential::eval(std::span<const double> y) const {
  if (zero_) return 0.0;
  if (kind_ == PotentialKind::GlQuartic) {
    double n2 = 0.0;
    for (double v : y) n2 += v * v;
    const double t = n2 - 1.0;
    return 0.5 * t * t;
  }
  const double d = manifold_.distance(y);
  const double reach2 = manifold_.reach() * manifold_.reach();
  const Blend blend{reach2 / 4.0, reach2, cap_};
  return blend.value(d * d);
}

void Potential::grad(std::span<const double> y, std::span<double> out) const {
  if (zero_) {
    for (auto& v : out) v = 0.0;
    return;
  }
  if (kind_ == PotentialKind::GlQuartic) {
    double n2 = 0.0;
    for (double v : y) n2 += v * v;
    const double c = 2.0 * (n2 - 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = c * y[i];
    return;
  }
  const double d = manifold_.distance(y);
  const double reach2 = manifold_.reach() * manifold_.reach();
  const Blend blend{reach2 / 4.0, reach2, cap_};
  const double t = d * d;
  if (t >= reach2) {  // plateau: no projection needed
    for (auto& v : out) v = 0.0;
    return;
  }
  // grad dist^2 = 2 (y - Pi(y)) inside the reach.
  std::array<double, 8> proj{};
  manifold_.project(y, std::span<double>(proj.data(), y.size()));
  const double dphi = blend.deriv(t);
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = dphi * 2.0 * (y[i] - proj[i]);
}

double Potential::curvature_bound() const {
  if (zero_) return 0.0;
  if (kind_ == PotentialKind::GlQuartic) {
    // |D^2 f| = |2(|u|^2-1) I + 4 u x u| on |u| <= bound + 1.
    const double R = manifold_.ambient_bound() + 1.0;
    return 2.0 * std::abs(R * R - 1.0) + 4.0 * R * R;
  }
  // Linear region: D^2(dist^2) ~ 2 plus curvature of N; the blend derivative
  // is <= ~1.5. Conservative flat bound.
  return 8.0;
}

NondegeneracyReport check_nondegeneracy(const EmbeddedManifold& manifold,
                                        const Potential& potential, double delta,
                                        int sample_count, std::uint64_t seed) {
  NondegeneracyReport rep;
  if (!(delta > 0.0) || delta >= manifold.reach())
    throw ConfigError("check_nondegeneracy needs 0 < delta < reach");
  const int m = manifold.ambient_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double max_seg = 0.0;

  std::array<double, 8> p{}, y{}, proj{}, df{}, seg{};
  const auto pspan = std::span<double>(p.data(), m);
  int accepted = 0;
  long attempts = 0;
  while (accepted < sample_count && attempts < 100L * sample_count) {
    ++attempts;
    manifold.random_point(rng, pspan);
    double dir[8], nrm = 0.0;
    for (int i = 0; i < m; ++i) {
      dir[i] = gauss(rng);
      nrm += dir[i] * dir[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) continue;
    const double t = delta * unif(rng);
    for (int i = 0; i < m; ++i) y[i] = p[i] + t * dir[i] / nrm;
    const auto yspan = std::span<const double>(y.data(), m);
    const double d = manifold.distance(yspan);
    if (d <= 1e-8 || d >= delta) continue;
    ++accepted;
    manifold.project(yspan, std::span<double>(proj.data(), m));
    potential.grad(yspan, std::span<double>(df.data(), m));
    const double f = potential.eval(yspan);
    double dfdot = 0.0;
    for (int i = 0; i < m; ++i) dfdot += df[i] * (y[i] - proj[i]);
    const double d2 = d * d;
    const double r1 = dfdot / d2;
    const double r2 = f / d2;
    min_ratio = std::min({min_ratio, r1, r2});
    max_ratio = std::max({max_ratio, r1, r2});
    if (min_ratio <= 0.0 && rep.violation.empty()) {
      rep.violation = "non-degeneracy (H4) fails: Df.(y-Pi(y)) or f not bounded below by m d^2";
      for (int i = 0; i < m; ++i) rep.witness[i] = y[i];
    }
    // Segment bound f(t y + (1-t) Pi(y)) <= M_f t^2 f(y).
    if (f > 1e-14) {
      for (int k = 1; k <= 8; ++k) {
        const double tt = k / 8.0;
        for (int i = 0; i < m; ++i) seg[i] = proj[i] + tt * (y[i] - proj[i]);
        const double fs = potential.eval(std::span<const double>(seg.data(), m));
        max_seg = std::max(max_seg, fs / (tt * tt * f));
      }
    }
  }
  if (accepted == 0) throw ConfigError("check_nondegeneracy: no tube samples accepted");

  // f = 0 exactly on N (sampled).
  for (int k = 0; k < 64; ++k) {
    manifold.random_point(rng, pspan);
    if (potential.eval(std::span<const double>(p.data(), m)) > 1e-12) {
      rep.violation = "f does not vanish on N";
      for (int i = 0; i < m; ++i) rep.witness[i] = p[i];
      break;
    }
  }

  // (H3): f bounded away from 0 on large spheres.
  const double R = 10.0 * (manifold.ambient_bound() + 1.0);
  double inf_far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 256; ++k) {
    double dir[8], nrm = 0.0;
    for (int i = 0; i < m; ++i) {
      dir[i] = gauss(rng);
      nrm += dir[i] * dir[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) { --k; continue; }
    for (int i = 0; i < m; ++i) y[i] = R * dir[i] / nrm;
    inf_far = std::min(inf_far, potential.eval(std::span<const double>(y.data(), m)));
  }
  rep.inf_at_infinity = inf_far;
  if (rep.violation.empty() && !(inf_far > 0.0))
    rep.violation = "(H3) fails: f vanishes at infinity";

  rep.m_f = min_ratio;
  rep.M_f = std::max(max_ratio, max_seg);
  rep.delta_f = delta;
  rep.ok = rep.violation.empty() && min_ratio > 0.0;
  return rep;
}

void populate_constants(Potential& potential, const NondegeneracyReport& report) {
  potential.constants = PotentialConstants{report.m_f, report.M_f, report.delta_f};
}

}  // namespace glq::manifolds
