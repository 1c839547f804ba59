#pragma once

#include <cstdint>
#include <vector>

#include "glq/manifolds.hpp"

namespace glq::loops {

using manifolds::EmbeddedManifold;

// A discrete loop in N: K ambient points, point k at theta_k = 2 pi k / K.
// Class-safe when every point is within the projection reach of N and
// consecutive gaps (cyclically) stay below the reach.
struct LoopSamples {
  EmbeddedManifold manifold;
  int K = 0;
  std::vector<double> points;  // K * m, row-major

  int m() const { return manifold.ambient_dim(); }
  double* point(int k) { return points.data() + static_cast<std::size_t>(k) * m(); }
  const double* point(int k) const { return points.data() + static_cast<std::size_t>(k) * m(); }
  void validate() const;  // throws ClassSafetyError
};

// Trapezoidal first-difference Dirichlet energy:
//   1/2 sum_k |p_{k+1} - p_k|^2 / dtheta, dtheta = 2 pi / K.
double loop_energy(const LoopSamples& loop);

struct RelaxConfig {
  int max_steps = 200000;
  double step_size = -1.0;     // default dtheta^2 / 2
  double energy_tol = 1e-10;   // stop when the per-step decrease falls below
  int class_check_every = 100; // 0 disables the conservation check
};

struct RelaxResult {
  double energy = 0.0;
  LoopSamples loop;
  int steps = 0;
  bool converged = false;
};

// Fixed-step projected gradient descent on loop_energy: ambient gradient
// step, then nearest-point projection of every sample. Energy is
// non-increasing (1e-12 relative slack enforced); the homotopy class is
// re-detected periodically and a change raises ClassSafetyError.
RelaxResult relax_geodesic(LoopSamples loop, const RelaxConfig& config = {});

struct LoopClass {
  enum class Kind { Degree, Binary, Trivial } kind = Kind::Trivial;
  int degree = 0;        // S1
  bool nontrivial = false;  // RP2
  bool operator==(const LoopClass&) const = default;
};

// S1: winding number from accumulated angle increments. RP2: lift to S2 by
// sign-propagating the leading eigenvector; nontrivial iff the lift closes
// on the antipode. S2: always trivial.
LoopClass detect_class(const LoopSamples& loop);

// Sample builders.
LoopSamples circle_loop(int degree, int K, double noise = 0.0, std::uint64_t seed = 1);
// Latitude circle on S2 at height z0 (|z0|<1), optionally perturbed.
LoopSamples sphere_loop(int K, double z0 = 0.3, double noise = 0.0, std::uint64_t seed = 1);
// RP2 loop: nontrivial = director half-turn n(theta/2); trivial = small
// contractible director wobble. Optionally perturbed in the ambient space.
LoopSamples rp2_loop(bool nontrivial, int K, double scale = EmbeddedManifold::kDefaultRP2Scale,
                     double noise = 0.0, std::uint64_t seed = 1);

}  // namespace glq::loops
