// Shared helpers for the unit and acceptance suites: scenario lookup and
// small brute-force oracles that avoid the library code paths under test.
#pragma once

#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "fdindex/fdindex.hpp"

namespace fdtest {

using namespace fdindex;

inline std::string scenario_dir() {
  const char* env = std::getenv("FDINDEX_SCENARIOS");
  return env ? env : "scenarios";
}

inline std::string scenario(const std::string& name) {
  return scenario_dir() + "/" + name + ".json";
}

/// Largest singular value by power iteration on m* m.
inline double power_norm(const Matrix& m, int iters = 500) {
  Vector v = Vector::Ones(m.cols()) + Vector::LinSpaced(m.cols(), 0.1, 0.9);
  double est = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector w = m.adjoint() * (m * v);
    double nv = w.norm();
    if (nv == 0.0) return 0.0;
    v = w / nv;
    est = std::sqrt(nv);
  }
  return est;
}

/// Group generated by `gens`, by repeated products until nothing new appears.
inline std::set<std::vector<int>> brute_closure(int degree, const std::vector<std::vector<int>>& gens) {
  std::vector<int> id(static_cast<std::size_t>(degree));
  for (int i = 0; i < degree; ++i) id[static_cast<std::size_t>(i)] = i;
  std::set<std::vector<int>> found{id};
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::vector<int>> snapshot(found.begin(), found.end());
    for (const auto& a : snapshot)
      for (const auto& g : gens) {
        std::vector<int> c(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) c[i] = g[static_cast<std::size_t>(a[i])];
        if (found.insert(c).second) grew = true;
      }
  }
  return found;
}

/// [K cap L : H] etc. straight from element lists.
inline std::size_t brute_index(const PermGroup& big, const PermGroup& small) {
  return big.order() / small.order();
}

inline double closed_form_cos(const PermGroup& h, const PermGroup& k, const PermGroup& l) {
  std::vector<Perm> common;
  for (const auto& x : k.elements())
    if (l.contains(x)) common.push_back(x);
  const double kl = static_cast<double>(common.size() / h.order());
  const double kh = static_cast<double>(brute_index(k, h));
  const double lh = static_cast<double>(brute_index(l, h));
  return (kl - 1.0) / (std::sqrt(kh - 1.0) * std::sqrt(lh - 1.0));
}

inline PermGroup cycles_group(int degree, std::vector<std::string> cycles) {
  return group_from_cycles(degree, cycles);
}

}  // namespace fdtest
