#include "glq/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "glq/errors.hpp"

namespace glq::homotopy {

namespace {

std::string elem_name(const FiniteGroup& g, int e) {
  if (e >= 0 && e < static_cast<int>(g.labels.size()) && !g.labels[e].empty()) return g.labels[e];
  return "#" + std::to_string(e);
}

}  // namespace

FiniteGroup FiniteGroup::from_table(int order, std::vector<int> mul,
                                    std::vector<std::string> labels, bool validate) {
  if (order <= 0) throw StructuralError("group order must be positive");
  if (mul.size() != static_cast<std::size_t>(order) * order)
    throw StructuralError("multiplication table has wrong size");
  for (int v : mul)
    if (v < 0 || v >= order) throw StructuralError("table entry out of range");
  FiniteGroup g;
  g.order = order;
  g.mul = std::move(mul);
  g.labels = std::move(labels);
  if (g.labels.empty()) {
    g.labels.resize(order);
    for (int e = 0; e < order; ++e) g.labels[e] = "g" + std::to_string(e);
  }
  if (static_cast<int>(g.labels.size()) != order)
    throw StructuralError("label list size does not match order");

  // Identity: the unique e with e*a == a*e == a for all a.
  g.identity = -1;
  for (int e = 0; e < order; ++e) {
    bool is_id = true;
    for (int a = 0; a < order && is_id; ++a)
      is_id = (g.times(e, a) == a) && (g.times(a, e) == a);
    if (is_id) {
      g.identity = e;
      break;
    }
  }
  if (g.identity < 0) throw StructuralError("table has no identity element");

  g.inverse.assign(order, -1);
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      if (g.times(a, b) == g.identity && g.times(b, a) == g.identity) {
        g.inverse[a] = b;
        break;
      }
    }
    if (g.inverse[a] < 0)
      throw StructuralError("element " + elem_name(g, a) + " has no two-sided inverse");
  }

  if (validate) g.check_axioms();
  return g;
}

void FiniteGroup::check_axioms() const {
  for (int a = 0; a < order; ++a)
    for (int b = 0; b < order; ++b)
      for (int c = 0; c < order; ++c) {
        if (times(times(a, b), c) != times(a, times(b, c))) {
          std::ostringstream os;
          os << "multiplication table is not associative: (" << elem_name(*this, a) << "*"
             << elem_name(*this, b) << ")*" << elem_name(*this, c) << " != " << elem_name(*this, a)
             << "*(" << elem_name(*this, b) << "*" << elem_name(*this, c) << ")";
          throw StructuralError(os.str());
        }
      }
  for (int a = 0; a < order; ++a) {
    if (times(identity, a) != a || times(a, identity) != a)
      throw StructuralError("identity axiom fails at " + elem_name(*this, a));
    if (times(a, inverse[a]) != identity || times(inverse[a], a) != identity)
      throw StructuralError("inverse axiom fails at " + elem_name(*this, a));
  }
}

FiniteGroup FiniteGroup::cyclic(int k) {
  if (k <= 0) throw StructuralError("cyclic group needs k >= 1");
  std::vector<int> mul(static_cast<std::size_t>(k) * k);
  std::vector<std::string> labels(k);
  for (int a = 0; a < k; ++a) {
    labels[a] = std::to_string(a);
    for (int b = 0; b < k; ++b) mul[static_cast<std::size_t>(a) * k + b] = (a + b) % k;
  }
  return from_table(k, std::move(mul), std::move(labels));
}

FiniteGroup FiniteGroup::dihedral(int k) {
  if (k < 2) throw StructuralError("dihedral group needs k >= 2");
  const int n = 2 * k;
  // Elements 0..k-1: rotations r^a. Elements k..2k-1: reflections s r^a.
  auto idx = [k](bool refl, int a) { return (refl ? k : 0) + ((a % k) + k) % k; };
  std::vector<int> mul(static_cast<std::size_t>(n) * n);
  std::vector<std::string> labels(n);
  for (int a = 0; a < k; ++a) {
    labels[a] = "r" + std::to_string(a);
    labels[k + a] = "sr" + std::to_string(a);
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const bool rx = x >= k, ry = y >= k;
      const int ax = x % k, ay = y % k;
      // (s^i r^a)(s^j r^b) = s^(i+j) r^(b +/- a): r^a s = s r^{-a}.
      int e;
      if (!rx && !ry) e = idx(false, ax + ay);
      else if (!rx && ry) e = idx(true, ay - ax);
      else if (rx && !ry) e = idx(true, ax + ay);
      else e = idx(false, ay - ax);
      mul[static_cast<std::size_t>(x) * n + y] = e;
    }
  return from_table(n, std::move(mul), std::move(labels));
}

FiniteGroup FiniteGroup::quaternion8() {
  // 0:1 1:-1 2:i 3:-i 4:j 5:-j 6:k 7:-k
  std::vector<std::string> labels = {"1", "-1", "i", "-i", "j", "-j", "k", "-k"};
  auto neg = [](int e) { return e ^ 1; };
  std::vector<int> mul(64, -1);
  auto set = [&](int a, int b, int c) { mul[static_cast<std::size_t>(a) * 8 + b] = c; };
  // Base products of {1,i,j,k} (indices 0,2,4,6) by the quaternion relations.
  const int I = 2, J = 4, K = 6;
  int base[4][4];
  const int units[4] = {0, I, J, K};
  auto bidx = [&](int u) { return u == 0 ? 0 : (u == I ? 1 : (u == J ? 2 : 3)); };
  base[0][0] = 0;  base[0][1] = I;       base[0][2] = J;       base[0][3] = K;
  base[1][0] = I;  base[1][1] = neg(0);  base[1][2] = K;       base[1][3] = neg(J);
  base[2][0] = J;  base[2][1] = neg(K);  base[2][2] = neg(0);  base[2][3] = I;
  base[3][0] = K;  base[3][1] = J;       base[3][2] = neg(I);  base[3][3] = neg(0);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int ua = a & ~1, ub = b & ~1;  // strip sign
      int prod = base[bidx(ua)][bidx(ub)];
      if ((a & 1) != 0) prod = neg(prod);
      if ((b & 1) != 0) prod = neg(prod);
      set(a, b, prod);
    }
  return from_table(8, std::move(mul), std::move(labels));
}

namespace {

// Orbit computation without axiom checking; used by the diagnostic path on
// deliberately broken tables.
std::vector<FreeHomotopyClass> compute_orbits(const FiniteGroup& group) {
  const int n = group.order;
  std::vector<int> orbit_of(n, -1);
  std::vector<std::vector<int>> orbits;
  for (int g = 0; g < n; ++g) {
    if (orbit_of[g] >= 0) continue;
    std::set<int> orbit;
    for (int a = 0; a < n; ++a) orbit.insert(group.times(group.times(a, g), group.inverse[a]));
    const int id = static_cast<int>(orbits.size());
    std::vector<int> members(orbit.begin(), orbit.end());
    for (int e : members) orbit_of[e] = id;
    orbits.push_back(std::move(members));
  }
  // Sort by smallest member, then move the identity's class to the front.
  std::sort(orbits.begin(), orbits.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    if (std::binary_search(orbits[i].begin(), orbits[i].end(), group.identity)) {
      std::rotate(orbits.begin(), orbits.begin() + i, orbits.begin() + i + 1);
      break;
    }
  }
  std::vector<FreeHomotopyClass> out(orbits.size());
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    out[i].class_id = static_cast<int>(i);
    out[i].members = std::move(orbits[i]);
  }
  return out;
}

}  // namespace

std::vector<FreeHomotopyClass> conjugacy_classes(const FiniteGroup& group) {
  group.check_axioms();
  return compute_orbits(group);
}

ClassAlgebra ClassAlgebra::build(FiniteGroup group, bool validate) {
  ClassAlgebra alg;
  alg.classes = validate ? conjugacy_classes(group) : compute_orbits(group);
  alg.group = std::move(group);
  alg.class_of.assign(alg.group.order, -1);
  for (const auto& cls : alg.classes)
    for (int e : cls.members) alg.class_of[e] = cls.class_id;
  alg.trivial_class = alg.class_of[alg.group.identity];
  return alg;
}

int ClassAlgebra::inverse_class(int c) const {
  if (c < 0 || c >= num_classes()) throw StructuralError("class id out of range");
  return class_of[group.inverse[classes[c].members.front()]];
}

std::string ClassAlgebra::class_label(int c) const {
  if (c < 0 || c >= num_classes()) throw StructuralError("class id out of range");
  std::string s = "{";
  for (std::size_t i = 0; i < classes[c].members.size(); ++i) {
    if (i) s += ",";
    s += group.labels[classes[c].members[i]];
  }
  return s + "}";
}

std::vector<int> class_add(int a, int b, const ClassAlgebra& alg) {
  if (a < 0 || a >= alg.num_classes() || b < 0 || b >= alg.num_classes())
    throw StructuralError("class id out of range in class_add");
  std::set<int> out;
  for (int x : alg.classes[a].members)
    for (int y : alg.classes[b].members) out.insert(alg.class_of[alg.group.times(x, y)]);
  return {out.begin(), out.end()};
}

std::vector<int> class_add(const FreeHomotopyClass& a, const FreeHomotopyClass& b,
                           const ClassAlgebra& alg) {
  auto check = [&](const FreeHomotopyClass& c) {
    if (c.class_id < 0 || c.class_id >= alg.num_classes() ||
        alg.classes[c.class_id].members != c.members)
      throw StructuralError("class does not belong to this group");
  };
  check(a);
  check(b);
  return class_add(a.class_id, b.class_id, alg);
}

void EminTable::validate(const ClassAlgebra& alg) const {
  if (static_cast<int>(values.size()) != alg.num_classes())
    throw ValidationError("EminTable size does not match class count");
  for (int c = 0; c < alg.num_classes(); ++c) {
    const double v = values[c];
    if (!(v >= 0.0)) throw ValidationError("negative E_min entry at class " + alg.class_label(c));
    if (c == alg.trivial_class && v != 0.0)
      throw ValidationError("E_min of the trivial class must be 0");
    if (c != alg.trivial_class && v <= 0.0)
      throw ValidationError("E_min must be positive off the trivial class (class " +
                            alg.class_label(c) + ")");
    const double w = values[alg.inverse_class(c)];
    if (std::abs(v - w) > 1e-6 * std::max(1.0, std::abs(v)))
      throw ValidationError("E_min must agree with the inverse-orientation class (class " +
                            alg.class_label(c) + ")");
  }
}

NormTable norm_star(const EminTable& emin, const ClassAlgebra& alg) {
  emin.validate(alg);
  const int n = alg.num_classes();
  NormTable table;
  table.norms = emin.values;
  table.norms[alg.trivial_class] = 0.0;
  // Relax cost(sigma) <- cost(sigma') + E_min(tau) whenever sigma in sigma'+tau.
  // Nonnegative weights: stabilizes in at most n sweeps.
  bool changed = true;
  int sweeps = 0;
  while (changed) {
    if (++sweeps > n + 1)
      throw ValidationError("norm relaxation did not stabilize (negative cycle?)");
    changed = false;
    for (int sp = 0; sp < n; ++sp)
      for (int tau = 0; tau < n; ++tau) {
        const double cand = table.norms[sp] + emin.values[tau];
        for (int sigma : class_add(sp, tau, alg)) {
          if (cand < table.norms[sigma] - 1e-15) {
            table.norms[sigma] = cand;
            changed = true;
          }
        }
      }
  }
  table.gap = std::numeric_limits<double>::infinity();
  for (int c = 0; c < n; ++c)
    if (c != alg.trivial_class) table.gap = std::min(table.gap, table.norms[c]);
  if (n == 1) table.gap = 0.0;  // trivial group: no nontrivial class
  return table;
}

SumPropertyReport verify_sum_properties(const ClassAlgebra& alg) {
  SumPropertyReport rep;
  try {
    alg.group.check_axioms();
    rep.axioms_ok = true;
  } catch (const StructuralError& e) {
    rep.violations.push_back(e.what());
  }
  const int n = alg.num_classes();
  const int triv = alg.trivial_class;

  rep.identity_ok = true;
  for (int a = 0; a < n; ++a) {
    const auto sum = class_add(triv, a, alg);
    if (sum.size() != 1 || sum[0] != a) {
      rep.identity_ok = false;
      rep.violations.push_back("identity property fails: 0 + " + alg.class_label(a) +
                               " != {" + alg.class_label(a) + "}");
    }
  }

  rep.inverse_ok = true;
  for (int a = 0; a < n; ++a) {
    bool found = false;
    for (int b = 0; b < n && !found; ++b) {
      const auto sum = class_add(a, b, alg);
      found = std::binary_search(sum.begin(), sum.end(), triv);
    }
    if (!found) {
      rep.inverse_ok = false;
      rep.violations.push_back("no inverse class for " + alg.class_label(a));
    }
  }

  auto sum_with_set = [&](const std::vector<int>& s, int c) {
    std::set<int> out;
    for (int sigma : s)
      for (int t : class_add(sigma, c, alg)) out.insert(t);
    return std::vector<int>(out.begin(), out.end());
  };
  auto set_sum_with = [&](int c, const std::vector<int>& s) {
    std::set<int> out;
    for (int sigma : s)
      for (int t : class_add(c, sigma, alg)) out.insert(t);
    return std::vector<int>(out.begin(), out.end());
  };

  rep.associativity_ok = true;
  for (int a = 0; a < n && rep.associativity_ok; ++a)
    for (int b = 0; b < n && rep.associativity_ok; ++b)
      for (int c = 0; c < n; ++c) {
        const auto lhs = sum_with_set(class_add(a, b, alg), c);
        const auto rhs = set_sum_with(a, class_add(b, c, alg));
        if (lhs != rhs) {
          rep.associativity_ok = false;
          rep.violations.push_back("associativity fails at (" + alg.class_label(a) + ", " +
                                   alg.class_label(b) + ", " + alg.class_label(c) + ")");
          break;
        }
      }

  rep.commutativity_ok = true;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (class_add(a, b, alg) != class_add(b, a, alg)) {
        rep.commutativity_ok = false;
        rep.violations.push_back("commutativity fails at (" + alg.class_label(a) + ", " +
                                 alg.class_label(b) + ")");
      }
    }
  return rep;
}

}  // namespace glq::homotopy
