#pragma once

// Finite permutation groups stored as explicit, canonically sorted element
// lists. Points are 0-based internally; cycle notation is 1-based.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <deque>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdindex/errors.hpp"

namespace fdindex {

class Perm {
 public:
  Perm() = default;

  /// Throws ArgumentError unless `images` is a bijection of {0..n-1}.
  explicit Perm(std::vector<int> images) : images_(std::move(images)) {
    std::vector<bool> seen(images_.size(), false);
    for (int v : images_) {
      if (v < 0 || static_cast<std::size_t>(v) >= images_.size() || seen[v])
        throw ArgumentError("permutation images are not a bijection");
      seen[v] = true;
    }
  }

  static Perm identity(int degree) {
    std::vector<int> im(static_cast<std::size_t>(degree));
    std::iota(im.begin(), im.end(), 0);
    return Perm(std::move(im));
  }

  int degree() const { return static_cast<int>(images_.size()); }
  int operator()(int point) const { return images_[static_cast<std::size_t>(point)]; }
  const std::vector<int>& images() const { return images_; }

  /// Composition: (g * h)(x) = g(h(x)).
  Perm operator*(const Perm& rhs) const {
    if (rhs.degree() != degree())
      throw ArgumentError("composing permutations of different degree");
    std::vector<int> im(images_.size());
    for (std::size_t i = 0; i < im.size(); ++i) im[i] = images_[rhs.images_[i]];
    Perm out;
    out.images_ = std::move(im);
    return out;
  }

  Perm inverse() const {
    std::vector<int> im(images_.size());
    for (std::size_t i = 0; i < im.size(); ++i) im[images_[i]] = static_cast<int>(i);
    Perm out;
    out.images_ = std::move(im);
    return out;
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < images_.size(); ++i)
      if (images_[i] != static_cast<int>(i)) return false;
    return true;
  }

  auto operator<=>(const Perm&) const = default;

  /// Disjoint-cycle notation with 1-based points; "()" for the identity.
  std::string to_cycles() const {
    std::string out;
    std::vector<bool> done(images_.size(), false);
    for (std::size_t start = 0; start < images_.size(); ++start) {
      if (done[start] || images_[start] == static_cast<int>(start)) continue;
      out += '(';
      std::size_t p = start;
      bool first = true;
      while (!done[p]) {
        done[p] = true;
        if (!first) out += ' ';
        out += std::to_string(p + 1);
        first = false;
        p = static_cast<std::size_t>(images_[p]);
      }
      out += ')';
    }
    return out.empty() ? "()" : out;
  }

 private:
  std::vector<int> images_;
};

/// Parses disjoint-cycle notation such as "(1 2 3)(4 5)" (commas also accepted
/// as separators). Cycles are composed right to left, so non-disjoint input
/// is accepted too. Throws ParseError carrying the offending offset.
inline Perm parse_cycles(std::string_view text, int degree) {
  std::vector<int> im(static_cast<std::size_t>(degree));
  std::iota(im.begin(), im.end(), 0);
  Perm acc(im);
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  if (i == text.size()) return acc;
  while (i < text.size()) {
    if (text[i] != '(') throw ParseError("expected '('", i);
    ++i;
    std::vector<int> cycle;
    for (;;) {
      while (i < text.size() &&
             (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ','))
        ++i;
      if (i == text.size()) throw ParseError("unterminated cycle", i);
      if (text[i] == ')') {
        ++i;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(text[i])))
        throw ParseError(std::string("unexpected character '") + text[i] + "'", i);
      std::size_t start = i;
      long value = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        if (value > 1'000'000) throw ParseError("point out of range", start);
        ++i;
      }
      if (value < 1 || value > degree)
        throw ParseError("point " + std::to_string(value) + " outside 1.." +
                             std::to_string(degree),
                         start);
      int p = static_cast<int>(value - 1);
      if (std::find(cycle.begin(), cycle.end(), p) != cycle.end())
        throw ParseError("repeated point in cycle", start);
      cycle.push_back(p);
    }
    if (cycle.empty()) {
      skip_ws();
      continue;
    }
    std::vector<int> c(static_cast<std::size_t>(degree));
    std::iota(c.begin(), c.end(), 0);
    for (std::size_t k = 0; k < cycle.size(); ++k)
      c[static_cast<std::size_t>(cycle[k])] = cycle[(k + 1) % cycle.size()];
    acc = acc * Perm(std::move(c));
    skip_ws();
  }
  return acc;
}

class PermGroup {
 public:
  PermGroup() = default;

  int degree() const { return degree_; }
  std::size_t order() const { return elements_.size(); }
  const std::vector<Perm>& elements() const { return elements_; }

  bool contains(const Perm& p) const {
    return std::binary_search(elements_.begin(), elements_.end(), p);
  }

  /// Position of `p` in the canonical element order.
  std::size_t index_of(const Perm& p) const {
    auto it = std::lower_bound(elements_.begin(), elements_.end(), p);
    if (it == elements_.end() || *it != p)
      throw ContainmentError("element not in group: " + p.to_cycles());
    return static_cast<std::size_t>(it - elements_.begin());
  }

  bool is_subgroup_of(const PermGroup& g) const {
    if (g.degree_ != degree_) return false;
    return std::includes(g.elements_.begin(), g.elements_.end(), elements_.begin(),
                         elements_.end());
  }

  /// A small generating set: elements taken in canonical order whenever they
  /// enlarge the subgroup generated so far.
  std::vector<Perm> generators() const;

  /// Short human-readable label listing a generating set.
  std::string label() const {
    std::string out = "<";
    auto gens = generators();
    for (std::size_t i = 0; i < gens.size(); ++i) {
      if (i) out += ", ";
      out += gens[i].to_cycles();
    }
    return out + ">";
  }

  bool operator==(const PermGroup& o) const {
    return degree_ == o.degree_ && elements_ == o.elements_;
  }
  auto operator<=>(const PermGroup& o) const {
    if (auto c = elements_.size() <=> o.elements_.size(); c != 0) return c;
    return elements_ <=> o.elements_;
  }

  /// Builds from an element list, checking identity, closure and inverses.
  static PermGroup from_elements(int degree, std::vector<Perm> elements) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    PermGroup g;
    g.degree_ = degree;
    g.elements_ = std::move(elements);
    for (const auto& p : g.elements_)
      if (p.degree() != degree) throw ArgumentError("element degree mismatch");
    if (!g.contains(Perm::identity(degree)))
      throw ArgumentError("element list lacks the identity");
    for (const auto& a : g.elements_) {
      if (!g.contains(a.inverse())) throw ArgumentError("element list not closed under inverse");
      for (const auto& b : g.elements_)
        if (!g.contains(a * b)) throw ArgumentError("element list not closed under composition");
    }
    return g;
  }

 private:
  friend PermGroup closure(int degree, std::span<const Perm> generators);
  int degree_ = 0;
  std::vector<Perm> elements_;
};

/// Smallest group containing `generators`, by orbit closure of the identity
/// under left multiplication.
inline PermGroup closure(int degree, std::span<const Perm> generators) {
  if (degree < 1) throw ArgumentError("group degree must be positive");
  for (const auto& g : generators)
    if (g.degree() != degree)
      throw ArgumentError("generator " + g.to_cycles() + " does not act on " +
                          std::to_string(degree) + " points");
  std::set<Perm> seen;
  std::deque<Perm> queue;
  Perm id = Perm::identity(degree);
  seen.insert(id);
  queue.push_back(id);
  while (!queue.empty()) {
    Perm x = queue.front();
    queue.pop_front();
    for (const auto& g : generators) {
      Perm y = g * x;
      if (seen.insert(y).second) queue.push_back(std::move(y));
    }
  }
  PermGroup out;
  out.degree_ = degree;
  out.elements_.assign(seen.begin(), seen.end());
  return out;
}

inline std::vector<Perm> PermGroup::generators() const {
  std::vector<Perm> gens;
  PermGroup current = closure(degree_, gens);
  for (const auto& p : elements_) {
    if (current.contains(p)) continue;
    gens.push_back(p);
    current = closure(degree_, gens);
    if (current.order() == order()) break;
  }
  return gens;
}

/// [G : H].
inline std::size_t index(const PermGroup& g, const PermGroup& h) {
  if (!h.is_subgroup_of(g)) throw ContainmentError("index: H is not a subgroup of G");
  if (g.order() % h.order() != 0)
    throw InvariantError("index: |H| does not divide |G|");
  return g.order() / h.order();
}

inline PermGroup intersect(const PermGroup& k, const PermGroup& l) {
  if (k.degree() != l.degree()) throw ArgumentError("intersect: degree mismatch");
  std::vector<Perm> common;
  std::set_intersection(k.elements().begin(), k.elements().end(), l.elements().begin(),
                        l.elements().end(), std::back_inserter(common));
  return closure(k.degree(), common);
}

/// Every subgroup M with H <= M <= G, endpoints included, in canonical
/// (order, elements) order. Each subgroup is reached from H by adjoining one
/// element of G at a time; already-seen subgroups are not expanded again.
inline std::vector<PermGroup> intermediate_subgroups(const PermGroup& g, const PermGroup& h,
                                                     std::size_t max_order = 48) {
  if (g.order() > max_order)
    throw SizeError("group order " + std::to_string(g.order()) + " exceeds bound " +
                    std::to_string(max_order));
  if (!h.is_subgroup_of(g)) throw ContainmentError("H is not a subgroup of G");
  std::set<PermGroup> found{h};
  std::deque<PermGroup> queue{h};
  while (!queue.empty()) {
    PermGroup m = queue.front();
    queue.pop_front();
    std::vector<Perm> gens = m.generators();
    for (const auto& x : g.elements()) {
      if (m.contains(x)) continue;
      gens.push_back(x);
      PermGroup bigger = closure(g.degree(), gens);
      gens.pop_back();
      if (found.insert(bigger).second) queue.push_back(std::move(bigger));
    }
  }
  return {found.begin(), found.end()};
}

/// Parses a list of cycle strings and closes them into a group.
inline PermGroup group_from_cycles(int degree, std::span<const std::string> cycles) {
  std::vector<Perm> gens;
  gens.reserve(cycles.size());
  for (const auto& c : cycles) gens.push_back(parse_cycles(c, degree));
  return closure(degree, gens);
}

}  // namespace fdindex
