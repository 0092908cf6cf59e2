#pragma once

// Named groups and the inclusions C[H] <= C[G] and M x| H <= M x| G with
// their trace-preserving expectations.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fdindex/expectation.hpp"

namespace fdindex {

namespace presets {

inline PermGroup trivial(int degree) { return closure(degree, std::vector<Perm>{}); }

inline PermGroup cyclic(int n) {
  std::vector<int> im(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) im[static_cast<std::size_t>(i)] = (i + 1) % n;
  std::vector<Perm> gens{Perm(std::move(im))};
  return closure(n, gens);
}

inline PermGroup symmetric(int n) {
  if (n < 2) return trivial(std::max(n, 1));
  std::vector<Perm> gens{parse_cycles("(1 2)", n), cyclic(n).generators().front()};
  return closure(n, gens);
}

/// Symmetries of the square on points 1..4: r = (1 2 3 4), s = (1 3).
inline Perm d4_rotation() { return parse_cycles("(1 2 3 4)", 4); }
inline Perm d4_reflection() { return parse_cycles("(1 3)", 4); }

inline PermGroup dihedral4() {
  std::vector<Perm> gens{d4_rotation(), d4_reflection()};
  return closure(4, gens);
}

/// The normal Klein four-subgroup of S4.
inline PermGroup klein_four() {
  std::vector<Perm> gens{parse_cycles("(1 2)(3 4)", 4), parse_cycles("(1 3)(2 4)", 4)};
  return closure(4, gens);
}

}  // namespace presets

/// ([K cap L : H] - 1) / (sqrt([K : H] - 1) sqrt([L : H] - 1)).
inline double group_angle_cos(const PermGroup& h, const PermGroup& k, const PermGroup& l) {
  const double kl = static_cast<double>(index(intersect(k, l), h));
  const double kh = static_cast<double>(index(k, h));
  const double lh = static_cast<double>(index(l, h));
  if (kh <= 1.0 || lh <= 1.0) throw DegenerateAngleError("closed form needs K, L != H");
  return (kl - 1.0) / (std::sqrt(kh - 1.0) * std::sqrt(lh - 1.0));
}

/// X[H] <= X[G] for a group-graded algebra X (group algebra or crossed
/// product), optionally tensored by M_k. `subalgebra(K)` realizes X[K].
struct GroupInclusion {
  PermGroup g;
  PermGroup h;
  int tensor_factor = 1;
  std::function<StarAlgebra(const PermGroup&)> subalgebra;
  CondExpectation expectation;

  CompatibleIntermediate intermediate(const PermGroup& k, const Tolerances& tol = {}) const {
    if (!h.is_subgroup_of(k) || !k.is_subgroup_of(g))
      throw ContainmentError("intermediate subgroup must satisfy H <= K <= G");
    return make_compatible(expectation, subalgebra(k), tol);
  }

  /// Intermediate subgroups strictly between H and G.
  std::vector<PermGroup> proper_intermediates(std::size_t max_order = 48) const {
    std::vector<PermGroup> out;
    for (auto& m : intermediate_subgroups(g, h, max_order))
      if (m != h && m != g) out.push_back(std::move(m));
    return out;
  }
};

namespace detail {

inline GroupInclusion finish_inclusion(PermGroup g, PermGroup h, int k,
                                       std::function<StarAlgebra(const PermGroup&)> sub,
                                       const Tolerances& tol) {
  if (k < 1) throw ArgumentError("tensor factor must be positive");
  if (!h.is_subgroup_of(g)) throw ContainmentError("H is not a subgroup of G");
  if (k > 1)
    sub = [inner = std::move(sub), k, tol](const PermGroup& x) {
      return tensor_by_factor(inner(x), k, tol);
    };
  GroupInclusion gi{std::move(g), std::move(h), k, std::move(sub), {}};
  Inclusion inc(gi.subalgebra(gi.g), gi.subalgebra(gi.h), tol);
  gi.expectation = CondExpectation::trace_preserving(inc, tol);
  return gi;
}

}  // namespace detail

inline GroupInclusion group_inclusion(const PermGroup& g, const PermGroup& h,
                                      const Tolerances& tol = {}, int tensor_factor = 1) {
  GroupAlgebra ga = group_algebra(g, tol);
  return detail::finish_inclusion(
      g, h, tensor_factor,
      [ga, tol](const PermGroup& k) { return group_subalgebra(ga, k, tol); }, tol);
}

inline GroupInclusion crossed_inclusion(const CrossedProduct& cp, const PermGroup& h,
                                        const Tolerances& tol = {}, int tensor_factor = 1) {
  return detail::finish_inclusion(
      cp.action.group(), h, tensor_factor,
      [cp, tol](const PermGroup& k) { return cp.subalgebra(k, tol); }, tol);
}

}  // namespace fdindex
