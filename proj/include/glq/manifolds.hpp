#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>

namespace glq::manifolds {

enum class ManifoldId { CircleS1, SphereS2, ProjectiveRP2 };
enum class Pi1 { Trivial, Integers, FiniteZ2 };

// A built-in vacuum manifold N embedded in R^m with a closed-form nearest
// point projection. RP2 is embedded as uniaxial Q-tensors
// Q = s(n x n - I/3) identified with R^5 through an orthonormal basis of
// symmetric traceless 3x3 matrices, so Frobenius distance = Euclidean
// distance. With s = 1/sqrt(2) the embedding is isometric to the round RP2
// of radius 1 (|dQ| = |dn|).
class EmbeddedManifold {
 public:
  static EmbeddedManifold circle();
  static EmbeddedManifold sphere();
  static EmbeddedManifold rp2_qtensor(double embedding_scale = kDefaultRP2Scale);
  // From a spec id: "circle-S1", "sphere-S2", "projective-RP2-qtensor".
  static EmbeddedManifold by_name(const std::string& id);

  static constexpr double kDefaultRP2Scale = 0.70710678118654752440;  // 1/sqrt(2)

  ManifoldId id() const { return id_; }
  Pi1 pi1() const { return pi1_; }
  int ambient_dim() const { return ambient_dim_; }
  double reach() const { return reach_; }           // delta_N
  double embedding_scale() const { return scale_; }
  double ambient_bound() const { return bound_; }   // sup |y| over N
  std::string name() const;

  // Nearest-point projection. Throws ReachError when dist(y, N) >= reach.
  void project(std::span<const double> y, std::span<double> out) const;
  // dist(y, N); defined for every ambient y (the built-ins have closed
  // forms), not just inside the reach.
  double distance(std::span<const double> y) const;
  // A fixed base point on N (used for constant boundary data).
  void base_point(std::span<double> out) const;
  // Uniform-ish random point on N, for sampling oracles.
  void random_point(std::mt19937_64& rng, std::span<double> out) const;

  // RP2 helpers (throw for other manifolds).
  // 5-vector from a unit director n.
  void qvec_from_director(std::span<const double, 3> n, std::span<double> out) const;
  // Leading-eigenvector director of the symmetric traceless matrix behind a
  // 5-vector; `gap` receives lambda1 - lambda2.
  void director_from_qvec(std::span<const double> q, std::span<double, 3> n, double* gap) const;

 private:
  ManifoldId id_;
  Pi1 pi1_;
  int ambient_dim_;
  double reach_;
  double scale_;
  double bound_;
};

enum class PotentialKind { GlQuartic, CanonicalDist2 };

// Empirical non-degeneracy constants (estimates, not certified bounds).
struct PotentialConstants {
  double m_f = 0.0;
  double M_f = 0.0;
  double delta_f = 0.0;
};

// A potential f >= 0 vanishing exactly on N.
//  gl-quartic:     f(u) = 1/2 (|u|^2 - 1)^2, for S1/S2 only.
//  canonical-dist2: f(y) = phi(dist^2(y,N)) with phi(t) = t for t <= d^2/4,
//                   blended C^1-monotonically to cap_value for t >= d^2,
//                   d = reach. Admissible for every built-in.
class Potential {
 public:
  static Potential gl_quartic(const EmbeddedManifold& manifold);
  static Potential canonical_dist2(const EmbeddedManifold& manifold, double cap_value = -1.0);
  static Potential by_name(const std::string& kind, const EmbeddedManifold& manifold);
  // Zero potential; inadmissible by construction, used as a negative control.
  static Potential zero(const EmbeddedManifold& manifold);

  double eval(std::span<const double> y) const;
  void grad(std::span<const double> y, std::span<double> out) const;

  PotentialKind kind() const { return kind_; }
  std::string kind_name() const;
  const EmbeddedManifold& manifold() const { return manifold_; }
  double cap_value() const { return cap_; }
  // Upper bound for |D^2 f| on the working range |y| <= ambient_bound + 1,
  // used by the solver step rule.
  double curvature_bound() const;

  std::optional<PotentialConstants> constants;  // populated by check_nondegeneracy

 private:
  Potential(PotentialKind kind, EmbeddedManifold manifold, double cap);
  PotentialKind kind_;
  EmbeddedManifold manifold_;
  double cap_;
  bool zero_ = false;
};

// Sampled verification of the non-degeneracy bounds
//   m_f d^2 <= Df(y).(y - Pi(y)) <= M_f d^2,   m_f d^2 <= f(y) <= M_f d^2,
//   f(t y + (1-t) Pi(y)) <= M_f t^2 f(y),
// over the delta-tube, plus the behaviour at infinity (H3) and f|_N = 0.
struct NondegeneracyReport {
  bool ok = false;
  double m_f = 0.0;      // tightest empirical lower ratio
  double M_f = 0.0;      // tightest empirical upper ratio (incl. segment bound)
  double delta_f = 0.0;  // tube radius the estimates are valid for
  double inf_at_infinity = 0.0;
  std::string violation;           // empty when ok
  std::array<double, 8> witness{}; // offending point when not ok
};

NondegeneracyReport check_nondegeneracy(const EmbeddedManifold& manifold,
                                        const Potential& potential, double delta,
                                        int sample_count, std::uint64_t seed = 12345);

// Copies the report constants into the potential.
void populate_constants(Potential& potential, const NondegeneracyReport& report);

}  // namespace glq::manifolds
