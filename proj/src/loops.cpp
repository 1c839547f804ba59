#include "glq/loops.hpp"

#include <cmath>
#include <numbers>

#include "glq/errors.hpp"

namespace glq::loops {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double gap2(const LoopSamples& loop, int k) {
  const int kn = (k + 1) % loop.K;
  const double* a = loop.point(k);
  const double* b = loop.point(kn);
  double s = 0.0;
  for (int i = 0; i < loop.m(); ++i) s += (b[i] - a[i]) * (b[i] - a[i]);
  return s;
}
}  // namespace

void LoopSamples::validate() const {
  if (K < 8) throw ClassSafetyError("loop needs at least 8 samples");
  if (points.size() != static_cast<std::size_t>(K) * m())
    throw ClassSafetyError("loop sample array has wrong size");
  const double reach = manifold.reach();
  for (int k = 0; k < K; ++k) {
    const double d =
        manifold.distance(std::span<const double>(point(k), static_cast<std::size_t>(m())));
    if (!(d < reach))
      throw ClassSafetyError("loop sample " + std::to_string(k) +
                             " outside the projection reach (dist=" + std::to_string(d) + ")");
  }
  for (int k = 0; k < K; ++k) {
    if (!(std::sqrt(gap2(*this, k)) < reach))
      throw ClassSafetyError("consecutive gap at sample " + std::to_string(k) +
                             " exceeds the class-safe bound");
  }
}

double loop_energy(const LoopSamples& loop) {
  loop.validate();
  const double dtheta = kTwoPi / loop.K;
  double e = 0.0;
  for (int k = 0; k < loop.K; ++k) e += gap2(loop, k);
  return 0.5 * e / dtheta;
}

LoopClass detect_class(const LoopSamples& loop) {
  loop.validate();
  LoopClass cls;
  switch (loop.manifold.id()) {
    case manifolds::ManifoldId::SphereS2:
      cls.kind = LoopClass::Kind::Trivial;
      return cls;
    case manifolds::ManifoldId::CircleS1: {
      double total = 0.0;
      for (int k = 0; k < loop.K; ++k) {
        const double* a = loop.point(k);
        const double* b = loop.point((k + 1) % loop.K);
        const double ta = std::atan2(a[1], a[0]);
        const double tb = std::atan2(b[1], b[0]);
        double d = tb - ta;
        while (d > std::numbers::pi) d -= kTwoPi;
        while (d < -std::numbers::pi) d += kTwoPi;
        total += d;
      }
      const double w = total / kTwoPi;
      const int deg = static_cast<int>(std::lround(w));
      if (std::abs(w - deg) > 0.1)
        throw ClassSafetyError("winding number not integral: " + std::to_string(w));
      cls.kind = LoopClass::Kind::Degree;
      cls.degree = deg;
      return cls;
    }
    case manifolds::ManifoldId::ProjectiveRP2: {
      // Propagate a continuous unit eigenvector along the samples.
      std::array<double, 3> n_prev, n_cur;
      double gap = 0.0;
      loop.manifold.director_from_qvec(
          std::span<const double>(loop.point(0), 5), n_prev, &gap);
      double sign = 1.0;
      for (int k = 1; k <= loop.K; ++k) {
        loop.manifold.director_from_qvec(
            std::span<const double>(loop.point(k % loop.K), 5), n_cur, &gap);
        const double dot =
            n_prev[0] * n_cur[0] + n_prev[1] * n_cur[1] + n_prev[2] * n_cur[2];
        if (std::abs(dot) < 0.1)
          throw ClassSafetyError("ambiguous director lift at sample " + std::to_string(k));
        if (dot < 0) {
          sign = -sign;
          for (double& v : n_cur) v = -v;
        }
        n_prev = n_cur;
      }
      // The deterministic eigenvector at sample 0 is recomputed at k=K, so
      // sign < 0 means the lift closed on the antipode.
      cls.kind = LoopClass::Kind::Binary;
      cls.nontrivial = sign < 0;
      return cls;
    }
  }
  return cls;
}

RelaxResult relax_geodesic(LoopSamples loop, const RelaxConfig& config) {
  loop.validate();
  const double dtheta = kTwoPi / loop.K;
  double step = config.step_size > 0 ? config.step_size : dtheta * dtheta / 2.0;
  if (step > dtheta * dtheta / 2.0 + 1e-15)
    throw ClassSafetyError("relax step size exceeds the stability bound dtheta^2/2");

  const int m = loop.m();
  const LoopClass cls0 = detect_class(loop);
  std::vector<double> grad(loop.points.size());
  std::vector<double> next(loop.points.size());
  double energy = loop_energy(loop);

  RelaxResult res;
  res.converged = false;
  int it = 0;
  for (; it < config.max_steps; ++it) {
    // dE/dp_k = (2 p_k - p_{k-1} - p_{k+1}) / dtheta.
    for (int k = 0; k < loop.K; ++k) {
      const double* p = loop.point(k);
      const double* pm = loop.point((k + loop.K - 1) % loop.K);
      const double* pp = loop.point((k + 1) % loop.K);
      for (int i = 0; i < m; ++i)
        grad[static_cast<std::size_t>(k) * m + i] = (2.0 * p[i] - pm[i] - pp[i]) / dtheta;
    }
    for (int k = 0; k < loop.K; ++k) {
      double cand[8];
      const double* p = loop.point(k);
      for (int i = 0; i < m; ++i)
        cand[i] = p[i] - step * grad[static_cast<std::size_t>(k) * m + i];
      try {
        loop.manifold.project(std::span<const double>(cand, static_cast<std::size_t>(m)),
                              std::span<double>(next.data() + static_cast<std::size_t>(k) * m,
                                                static_cast<std::size_t>(m)));
      } catch (const ReachError&) {
        throw ClassSafetyError("projection reach exceeded during relaxation (step " +
                               std::to_string(it) + "): step size too large");
      }
    }
    loop.points.swap(next);
    const double e_new = loop_energy(loop);
    if (e_new > energy + 1e-12 * std::max(1.0, energy))
      throw ClassSafetyError("loop energy increased during relaxation: step size too large");
    const double drop = energy - e_new;
    energy = e_new;
    if (config.class_check_every > 0 && (it + 1) % config.class_check_every == 0) {
      if (!(detect_class(loop) == cls0))
        throw ClassSafetyError("homotopy class changed during relaxation");
    }
    if (drop < config.energy_tol) {
      res.converged = true;
      ++it;
      break;
    }
  }
  if (!(detect_class(loop) == cls0))
    throw ClassSafetyError("homotopy class changed during relaxation");
  res.energy = energy;
  res.loop = std::move(loop);
  res.steps = it;
  return res;
}

LoopSamples circle_loop(int degree, int K, double noise, std::uint64_t seed) {
  LoopSamples loop{manifolds::EmbeddedManifold::circle(), K, {}};
  loop.points.resize(static_cast<std::size_t>(K) * 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < K; ++k) {
    const double theta = kTwoPi * k / K;
    double a = degree * theta + noise * unif(rng);
    loop.points[2 * k] = std::cos(a);
    loop.points[2 * k + 1] = std::sin(a);
  }
  return loop;
}

LoopSamples sphere_loop(int K, double z0, double noise, std::uint64_t seed) {
  LoopSamples loop{manifolds::EmbeddedManifold::sphere(), K, {}};
  loop.points.resize(static_cast<std::size_t>(K) * 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double r = std::sqrt(1.0 - z0 * z0);
  for (int k = 0; k < K; ++k) {
    const double theta = kTwoPi * k / K;
    double p[3] = {r * std::cos(theta), r * std::sin(theta), z0};
    for (double& v : p) v += noise * unif(rng);
    const double nn = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    for (int i = 0; i < 3; ++i) loop.points[3 * k + i] = p[i] / nn;
  }
  return loop;
}

LoopSamples rp2_loop(bool nontrivial, int K, double scale, double noise, std::uint64_t seed) {
  auto manifold = manifolds::EmbeddedManifold::rp2_qtensor(scale);
  LoopSamples loop{manifold, K, {}};
  loop.points.resize(static_cast<std::size_t>(K) * 5);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < K; ++k) {
    const double theta = kTwoPi * k / K;
    std::array<double, 3> n;
    if (nontrivial) {
      // Half-turn of the director: closes in RP2, lifts to the antipode.
      n = {std::cos(theta / 2.0), std::sin(theta / 2.0), 0.0};
    } else {
      // Small contractible wobble around e3.
      const double a = 0.3 * std::cos(theta), b = 0.3 * std::sin(theta);
      const double nn = std::sqrt(a * a + b * b + 1.0);
      n = {a / nn, b / nn, 1.0 / nn};
    }
    std::array<double, 5> q;
    manifold.qvec_from_director(n, q);
    for (int i = 0; i < 5; ++i) q[i] += noise * unif(rng);
    if (noise > 0) {
      std::array<double, 5> proj;
      manifold.project(q, proj);
      q = proj;
    }
    for (int i = 0; i < 5; ++i) loop.points[5 * k + i] = q[i];
  }
  return loop;
}

}  // namespace glq::loops
