#pragma once

#include <string>
#include <vector>

namespace glq::homotopy {

// A finite group given by an explicit multiplication table. Element indices
// are 0..order-1; mul is row-major, mul[a*order+b] = index of a*b.
struct FiniteGroup {
  int order = 0;
  std::vector<int> mul;
  std::vector<std::string> labels;
  int identity = -1;            // derived
  std::vector<int> inverse;     // derived

  int times(int a, int b) const { return mul[static_cast<std::size_t>(a) * order + b]; }

  // Builds identity/inverse tables and, unless validate==false, checks the
  // group axioms. Associativity is checked by a full triple loop; a failing
  // triple is named in the error message.
  static FiniteGroup from_table(int order, std::vector<int> mul,
                                std::vector<std::string> labels = {}, bool validate = true);

  static FiniteGroup cyclic(int k);       // Z/k
  static FiniteGroup dihedral(int k);     // D_k, order 2k (rotations then reflections)
  static FiniteGroup quaternion8();       // Q8: 1,-1,i,-i,j,-j,k,-k

  void check_axioms() const;  // throws StructuralError naming a failing triple
};

// One free homotopy class = one conjugacy orbit. Members are sorted.
struct FreeHomotopyClass {
  int class_id = -1;
  std::vector<int> members;
};

// Conjugacy classes of `group`: identity's class first, the rest ordered by
// smallest member index. Deterministic.
std::vector<FreeHomotopyClass> conjugacy_classes(const FiniteGroup& group);

// Group + classes + element->class lookup, the working representation for
// the class sum and the norm.
struct ClassAlgebra {
  FiniteGroup group;
  std::vector<FreeHomotopyClass> classes;
  std::vector<int> class_of;  // element index -> class id
  int trivial_class = 0;

  // With validate==false the axiom check is skipped so diagnostics can run
  // on deliberately broken tables.
  static ClassAlgebra build(FiniteGroup group, bool validate = true);

  int num_classes() const { return static_cast<int>(classes.size()); }
  // Class of inverses of class c.
  int inverse_class(int c) const;
  std::string class_label(int c) const;  // "{a,b,...}" from group labels
};

// The multivalued sum: { class(xy) : x in a, y in b }, sorted, deduplicated.
std::vector<int> class_add(int a, int b, const ClassAlgebra& alg);

// Object-level variant; classes must belong to `alg` (same id and members),
// otherwise a StructuralError is thrown.
std::vector<int> class_add(const FreeHomotopyClass& a, const FreeHomotopyClass& b,
                           const ClassAlgebra& alg);

// Per-class least loop energies E_min. Entry for the trivial class is 0.
struct EminTable {
  std::vector<double> values;

  // Throws ValidationError on: negative entry, nonzero trivial entry,
  // zero nontrivial entry, or asymmetry value(c) != value(-c) beyond 1e-6.
  void validate(const ClassAlgebra& alg) const;
};

// |sigma|_* per class plus the gap c0 = min over nontrivial norms.
struct NormTable {
  std::vector<double> norms;
  double gap = 0.0;
};

// Least total E_min over decompositions sigma in sigma_1 + ... + sigma_k,
// computed by shortest-path relaxation over classes (E_min >= 0 guarantees
// termination).
NormTable norm_star(const EminTable& emin, const ClassAlgebra& alg);

// Exhaustive check of the sum properties (i) identity, (ii) inverses,
// (iii) associativity of the set-valued sum, (iv) commutativity.
// Group axioms are re-checked first; any breach is reported, not thrown.
struct SumPropertyReport {
  bool axioms_ok = false;
  bool identity_ok = false;
  bool inverse_ok = false;
  bool associativity_ok = false;
  bool commutativity_ok = false;
  std::vector<std::string> violations;
  bool all_ok() const {
    return axioms_ok && identity_ok && inverse_ok && associativity_ok && commutativity_ok;
  }
};

SumPropertyReport verify_sum_properties(const ClassAlgebra& alg);

// Closed forms for the circle target (pi_1 = Z), kept outside ClassAlgebra:
// the table machinery rejects infinite groups.
inline double circle_emin(int degree) {
  const double pi = 3.14159265358979323846;
  return pi * degree * degree;
}
inline double circle_norm(int degree) {
  const double pi = 3.14159265358979323846;
  return pi * (degree < 0 ? -degree : degree);
}

}  // namespace glq::homotopy
