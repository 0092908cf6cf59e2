#pragma once

// Scenario files: JSON descriptions of an inclusion B <= A with its
// expectation and up to two intermediates. See docs/scenario_schema.md.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fdindex/fdindex.hpp"
#include "json.hpp"

namespace fdindex::cli {

using json = nlohmann::json;

/// Scenario rejected before any computation (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

enum class ScenarioKind { group, crossed_product, fixed_point, custom_matrix };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::group: return "group";
    case ScenarioKind::crossed_product: return "crossed_product";
    case ScenarioKind::fixed_point: return "fixed_point";
    case ScenarioKind::custom_matrix: return "custom_matrix";
  }
  return "?";
}

struct Options {
  std::uint64_t seed = 0;
  int tensor_factor = 1;
  int indp_trials = 8;
  Tolerances tol;
};

/// Parsed but not yet computed scenario.
struct Scenario {
  json source;
  std::string name;
  ScenarioKind kind = ScenarioKind::group;
  Options options;

  // group data (group, crossed_product, fixed_point)
  int degree = 0;
  std::optional<PermGroup> g, h, k, l;

  // acted-on algebra and action (crossed_product, fixed_point)
  std::optional<StarAlgebra> acted;
  std::vector<Perm> action_generators;
  std::vector<Matrix> action_unitaries;

  // explicit algebras (custom_matrix; fixed_point intermediates)
  int ambient_dim = 0;
  std::vector<Matrix> algebra_generators, subalgebra_generators;
  std::optional<std::vector<Matrix>> p_generators, q_generators;

  bool has_group_oracle() const {
    return kind == ScenarioKind::group || kind == ScenarioKind::crossed_product;
  }
  bool has_pair() const { return (k && l) || (p_generators && q_generators); }
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline Complex parse_entry(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ValidationError(where + ": entries must be numbers or [re, im] pairs");
}

}  // namespace detail

/// A matrix given as rows of entries, {"perm": cycles}, {"unit": [i, j]}
/// (1-based), {"diag": [...]} or {"identity": true}.
inline Matrix parse_matrix(const json& j, int n, const std::string& where) {
  if (j.is_object()) {
    if (j.contains("perm")) {
      if (!j["perm"].is_string()) throw ValidationError(where + ": 'perm' must be a string");
      Perm p = parse_cycles(j["perm"].get<std::string>(), n);
      Matrix m = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) m(p(i), i) = 1.0;
      return m;
    }
    if (j.contains("unit")) {
      const json& u = j["unit"];
      if (!u.is_array() || u.size() != 2 || !u[0].is_number_integer() || !u[1].is_number_integer())
        throw ValidationError(where + ": 'unit' must be [row, col]");
      int r = u[0].get<int>(), c = u[1].get<int>();
      if (r < 1 || r > n || c < 1 || c > n)
        throw ValidationError(where + ": matrix unit index outside 1.." + std::to_string(n));
      return matrix_unit(n, r - 1, c - 1);
    }
    if (j.contains("diag")) {
      const json& d = j["diag"];
      if (!d.is_array() || d.size() != static_cast<std::size_t>(n))
        throw ValidationError(where + ": 'diag' must have " + std::to_string(n) + " entries");
      Matrix m = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) m(i, i) = detail::parse_entry(d[static_cast<std::size_t>(i)], where);
      return m;
    }
    if (j.contains("identity")) return identity(n);
    throw ValidationError(where + ": unknown matrix form");
  }
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n))
    throw ValidationError(where + ": expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
      throw ValidationError(where + ": row " + std::to_string(r + 1) + " must have " +
                            std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c)
      m(r, c) = detail::parse_entry(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

inline std::vector<Matrix> parse_matrices(const json& j, int n, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected a list of matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_matrix(j[i], n, where + "[" + std::to_string(i) + "]"));
  return out;
}

inline PermGroup parse_group(const json& j, int degree, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected a list of cycle strings");
  std::vector<Perm> gens;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ValidationError(where + ": generators must be strings");
    try {
      gens.push_back(parse_cycles(j[i].get<std::string>(), degree));
    } catch (const ParseError& err) {
      throw ParseError(where + "[" + std::to_string(i) + "]: " + err.detail(), err.position());
    }
  }
  return closure(degree, gens);
}

inline Options parse_options(const json& j) {
  Options o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ValidationError("options must be an object");
  if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tensor_factor")) o.tensor_factor = j["tensor_factor"].get<int>();
  if (j.contains("indp_trials")) o.indp_trials = j["indp_trials"].get<int>();
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (t.contains("eq_tol")) o.tol.eq_tol = t["eq_tol"].get<double>();
    if (t.contains("rank_tol")) o.tol.rank_tol = t["rank_tol"].get<double>();
    if (t.contains("angle_tol")) o.tol.angle_tol = t["angle_tol"].get<double>();
  }
  if (o.tensor_factor < 1 || o.tensor_factor > 4)
    throw ValidationError("tensor_factor must lie in 1..4");
  if (o.indp_trials < 1) throw ValidationError("indp_trials must be positive");
  return o;
}

/// Parses and checks structure, dimensions and subgroup containments.
/// Everything thrown here maps to exit code 2.
inline Scenario parse_scenario(const json& j) {
  Scenario s;
  s.source = j;
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  s.name = j.value("name", std::string("unnamed"));
  const std::string kind = detail::require(j, "kind", "scenario").get<std::string>();
  if (kind == "group") s.kind = ScenarioKind::group;
  else if (kind == "crossed_product") s.kind = ScenarioKind::crossed_product;
  else if (kind == "fixed_point") s.kind = ScenarioKind::fixed_point;
  else if (kind == "custom_matrix") s.kind = ScenarioKind::custom_matrix;
  else throw ValidationError("unknown scenario kind '" + kind + "'");
  s.options = parse_options(j.value("options", json()));

  if (s.kind != ScenarioKind::custom_matrix) {
    const json& gj = detail::require(j, "group", "scenario");
    s.degree = detail::require(gj, "degree", "group").get<int>();
    if (s.degree < 1 || s.degree > 8) throw ValidationError("group degree must lie in 1..8");
    s.g = parse_group(detail::require(gj, "G", "group"), s.degree, "group.G");
    if (gj.contains("H")) s.h = parse_group(gj["H"], s.degree, "group.H");
    if (gj.contains("K")) s.k = parse_group(gj["K"], s.degree, "group.K");
    if (gj.contains("L")) s.l = parse_group(gj["L"], s.degree, "group.L");
    if (s.kind == ScenarioKind::fixed_point) {
      // A^G <= A^K <= A: subgroups K, L sit above the trivial group
      if (s.h) throw ValidationError("fixed_point scenarios take no H");
    } else {
      if (!s.h) s.h = presets::trivial(s.degree);
    }
    const PermGroup bottom = s.h ? *s.h : presets::trivial(s.degree);
    if (!bottom.is_subgroup_of(*s.g)) throw ContainmentError("group.H is not contained in G");
    for (const auto& [label, sub] : {std::pair{"K", &s.k}, std::pair{"L", &s.l}}) {
      if (!*sub) continue;
      if (!(*sub)->is_subgroup_of(*s.g))
        throw ContainmentError(std::string("group.") + label + " is not contained in G");
      if (!bottom.is_subgroup_of(**sub))
        throw ContainmentError(std::string("group.") + label + " does not contain H");
    }
  }

  if (s.kind == ScenarioKind::crossed_product || s.kind == ScenarioKind::fixed_point) {
    const json& aj = detail::require(j, "acted", "scenario");
    s.ambient_dim = detail::require(aj, "ambient_dim", "acted").get<int>();
    if (s.ambient_dim < 1 || s.ambient_dim > 16) throw ValidationError("acted.ambient_dim must lie in 1..16");
    auto gens = parse_matrices(detail::require(aj, "generators", "acted"), s.ambient_dim,
                               "acted.generators");
    s.acted = from_generators(s.ambient_dim, gens, s.options.tol);
    const json& act = detail::require(j, "action", "scenario");
    if (!act.is_array()) throw ValidationError("action must be a list");
    for (std::size_t i = 0; i < act.size(); ++i) {
      const std::string where = "action[" + std::to_string(i) + "]";
      s.action_generators.push_back(
          parse_cycles(detail::require(act[i], "perm", where).get<std::string>(), s.degree));
      s.action_unitaries.push_back(
          parse_matrix(detail::require(act[i], "unitary", where), s.ambient_dim, where));
    }
    if (closure(s.degree, s.action_generators) != *s.g)
      throw ValidationError("action generators must generate group.G");
  }

  if (s.kind == ScenarioKind::custom_matrix) {
    const json& aj = detail::require(j, "algebra", "scenario");
    s.ambient_dim = detail::require(aj, "ambient_dim", "algebra").get<int>();
    if (s.ambient_dim < 1 || s.ambient_dim > 16) throw ValidationError("algebra.ambient_dim must lie in 1..16");
    s.algebra_generators =
        parse_matrices(detail::require(aj, "generators", "algebra"), s.ambient_dim, "algebra.generators");
    const json& bj = detail::require(j, "subalgebra", "scenario");
    s.subalgebra_generators = parse_matrices(detail::require(bj, "generators", "subalgebra"),
                                             s.ambient_dim, "subalgebra.generators");
  }
  if (j.contains("intermediates")) {
    if (s.kind == ScenarioKind::group || s.kind == ScenarioKind::crossed_product)
      throw ValidationError("group scenarios name intermediates through group.K and group.L");
    const json& ij = j["intermediates"];
    if (ij.contains("P"))
      s.p_generators = parse_matrices(detail::require(ij["P"], "generators", "intermediates.P"),
                                      s.ambient_dim, "intermediates.P.generators");
    if (ij.contains("Q"))
      s.q_generators = parse_matrices(detail::require(ij["Q"], "generators", "intermediates.Q"),
                                      s.ambient_dim, "intermediates.Q.generators");
  }
  return s;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read scenario file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("invalid JSON: ") + err.what(), err.byte);
  }
}

/// The computational setup: E: A -> B and the named intermediates.
struct Setup {
  CondExpectation expectation;
  std::optional<GroupInclusion> groups;         // group and crossed_product kinds
  std::optional<StarAlgebra> fixed_source;      // fixed_point: A before tensoring
  std::optional<GroupAction> action;            // fixed_point: action on A (tensored)
  std::optional<CompatibleIntermediate> p, q;
};

namespace detail {

inline StarAlgebra tensored(const StarAlgebra& a, int k, const Tolerances& tol) {
  return k == 1 ? a : tensor_by_factor(a, k, tol);
}

}  // namespace detail

inline StarAlgebra intermediate_from_generators(const StarAlgebra& a, const StarAlgebra& b,
                                                const std::vector<Matrix>& gens, int k,
                                                const Tolerances& tol) {
  std::vector<Matrix> all(b.basis());
  for (const auto& x : gens) all.push_back(k == 1 ? x : tensor_element(x, k));
  StarAlgebra p = from_generators(a.ambient_dim(), all, tol);
  return p;
}

/// Builds the expectation and intermediates. Library errors propagate
/// (exit code 3).
inline Setup build_setup(const Scenario& s) {
  const Tolerances& tol = s.options.tol;
  const int k = s.options.tensor_factor;
  Setup out;
  switch (s.kind) {
    case ScenarioKind::group:
      out.groups = group_inclusion(*s.g, *s.h, tol, k);
      break;
    case ScenarioKind::crossed_product: {
      GroupAction act =
          GroupAction::from_generators(s.degree, s.action_generators, s.action_unitaries, tol);
      out.groups = crossed_inclusion(crossed_product(*s.acted, act, tol), *s.h, tol, k);
      break;
    }
    case ScenarioKind::fixed_point: {
      GroupAction act =
          GroupAction::from_generators(s.degree, s.action_generators, s.action_unitaries, tol);
      if (k > 1) {
        std::vector<Matrix> u;
        for (const auto& x : act.unitaries()) u.push_back(tensor_element(x, k));
        act = GroupAction(act.group(), std::move(u), tol);
      }
      StarAlgebra a = detail::tensored(*s.acted, k, tol);
      FixedPoint fp = fixed_point(a, act, tol);
      out.expectation = fp.expectation;
      out.fixed_source = a;
      out.action = act;
      break;
    }
    case ScenarioKind::custom_matrix: {
      StarAlgebra a =
          detail::tensored(from_generators(s.ambient_dim, s.algebra_generators, tol), k, tol);
      StarAlgebra b =
          detail::tensored(from_generators(s.ambient_dim, s.subalgebra_generators, tol), k, tol);
      out.expectation = CondExpectation::trace_preserving(Inclusion(a, b, tol), tol);
      break;
    }
  }
  if (out.groups) {
    out.expectation = out.groups->expectation;
    if (s.k) out.p = out.groups->intermediate(*s.k, tol);
    if (s.l) out.q = out.groups->intermediate(*s.l, tol);
  } else if (s.kind == ScenarioKind::fixed_point && (s.k || s.l)) {
    auto sub = [&](const PermGroup& x) {
      return make_compatible(out.expectation,
                             fixed_point_algebra(*out.fixed_source, out.action->restrict_to(x), tol),
                             tol);
    };
    if (s.k) out.p = sub(*s.k);
    if (s.l) out.q = sub(*s.l);
  }
  const StarAlgebra& a = out.expectation.big();
  const StarAlgebra& b = out.expectation.small();
  if (s.p_generators)
    out.p = make_compatible(out.expectation,
                            intermediate_from_generators(a, b, *s.p_generators, k, tol), tol);
  if (s.q_generators)
    out.q = make_compatible(out.expectation,
                            intermediate_from_generators(a, b, *s.q_generators, k, tol), tol);
  return out;
}

}  // namespace fdindex::cli
