#pragma once

// Command dispatch and report assembly for the fdindex tool. Reports are
// nlohmann::json objects (keys sorted), so equal inputs give equal bytes.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "scenario.hpp"

namespace fdindex::cli {

enum class Format { json, table };

struct RunFlags {
  std::optional<double> eq_tol, rank_tol, angle_tol;
  std::optional<std::uint64_t> seed;
  Format format = Format::json;
  std::string out;  // empty: stdout
  std::string csv;  // lattice only; empty: derived from `out`
  AnglePath path = AnglePath::both;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"index",   "quasi-basis", "angle",   "exterior-angle",
                                              "lattice", "verify",      "validate"};
  return names;
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex z = m(r, c);
      if (z.imag() == 0.0) row.push_back(z.real());
      else row.push_back(json::array({z.real(), z.imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Tolerances& t) {
  return {{"eq_tol", t.eq_tol}, {"rank_tol", t.rank_tol}, {"angle_tol", t.angle_tol}};
}

inline json to_json(const PathValue& v) {
  return {{"raw_cos", v.raw_cos}, {"numerator", v.numerator}, {"denominators", v.denominators}};
}

inline json to_json(const AngleReport& r) {
  json j{{"cos", r.cos_value},
         {"raw_cos", r.raw_cos},
         {"angle", r.angle},
         {"path", to_string(r.path)},
         {"path_disagreement", r.path_disagreement},
         {"numerator", r.numerator},
         {"denominators", r.denominators},
         {"commuting_square", r.commuting_square},
         {"commuting_residual", r.commuting_residual},
         {"provenance", r.provenance}};
  if (r.definition) j["definition"] = to_json(*r.definition);
  if (r.quasibasis) j["quasibasis"] = to_json(*r.quasibasis);
  return j;
}

inline RealVector sorted_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Groups eigenvalues into (value, multiplicity) clusters within `tol`.
inline json spectrum(const Matrix& h, double tol) {
  RealVector ev = sorted_eigenvalues(h);
  json out = json::array();
  for (Eigen::Index i = 0; i < ev.size();) {
    Eigen::Index j = i;
    while (j < ev.size() && ev(j) - ev(i) < tol) ++j;
    out.push_back({{"value", ev.segment(i, j - i).mean()}, {"multiplicity", j - i}});
    i = j;
  }
  return out;
}

inline std::string group_label(const PermGroup& g) {
  return g.label() + " |" + std::to_string(g.order()) + "|";
}

// ---------------------------------------------------------------------------
// commands

inline json index_result(const Scenario& s, const Setup& setup) {
  const Tolerances& tol = s.options.tol;
  const CondExpectation& e = setup.expectation;
  ModuleBasis mb = orthonormal_basis(e, tol);
  WatataniIndex w = watatani_index(mb, e.big(), tol);
  json r{{"basis_size", mb.size()},
         {"centrality_residual", w.centrality_residual},
         {"min_eigenvalue", w.min_eigenvalue},
         {"spectrum", spectrum(w.value, tol.eq_tol)},
         {"norm", op_norm(w.value)},
         {"dim_big", e.big().dim()},
         {"dim_small", e.small().dim()},
         {"ambient_dim", e.big().ambient_dim()},
         {"reconstruction_residual", verify_quasi_basis(e, mb.elements, 100, s.options.seed)},
         {"ind_p_estimate", ind_p_estimate(e, s.options.indp_trials, s.options.seed, tol)}};
  r["scalar"] = w.scalar ? json(*w.scalar) : json(nullptr);
  if (setup.groups) {
    const double expected = static_cast<double>(index(setup.groups->g, setup.groups->h));
    const double disc = op_norm(w.value - expected * identity(w.value.rows()));
    r["oracle"] = {{"formula", "[G:H]"}, {"value", expected}, {"discrepancy", disc},
                   {"match", disc < tol.eq_tol}};
  }
  return r;
}

inline json quasi_basis_result(const Scenario& s, const Setup& setup) {
  const Tolerances& tol = s.options.tol;
  const CondExpectation& e = setup.expectation;
  ModuleBasis mb = orthonormal_basis(e, tol);
  json ranks = json::array();
  for (const auto& p : mb.support_projections)
    ranks.push_back(static_cast<long>(std::lround(p.trace().real())));
  json r{{"size", mb.size()},
         {"support_ranks", ranks},
         {"reconstruction_residual", verify_quasi_basis(e, mb.elements, 100, s.options.seed)}};
  if (e.big().ambient_dim() <= 16) {
    json elements = json::array();
    for (const auto& m : mb.elements) elements.push_back(to_json(m));
    r["elements"] = std::move(elements);
  }
  return r;
}

inline void require_pair(const Scenario& s, const Setup& setup) {
  if (!setup.p || !setup.q)
    throw ValidationError("scenario '" + s.name + "' does not name two intermediates");
}

inline json pair_oracle(const Scenario& s, const Setup& setup, const AngleReport& r) {
  if (!setup.groups || !s.k || !s.l) return nullptr;
  const PermGroup& h = setup.groups->h;
  const double expected = group_angle_cos(h, *s.k, *s.l);
  const double disc = std::abs(r.cos_value - expected);
  const bool square = intersect(*s.k, *s.l) == h;
  return {{"formula", "([K cap L:H]-1)/(sqrt([K:H]-1) sqrt([L:H]-1))"},
          {"cos", expected},
          {"discrepancy", disc},
          {"match", disc < s.options.tol.angle_tol},
          {"commuting_square_expected", square},
          {"commuting_square_match", square == r.commuting_square}};
}

inline json angle_result(const Scenario& s, const Setup& setup, AnglePath path) {
  require_pair(s, setup);
  AngleReport r = interior_angle(setup.expectation, *setup.p, *setup.q, path, s.options.tol);
  json j{{"interior", to_json(r)}};
  j["oracle"] = pair_oracle(s, setup, r);
  j["oracle_match"] = j["oracle"].is_null() ? json(nullptr) : j["oracle"]["match"];
  return j;
}

inline json exterior_result(const Scenario& s, const Setup& setup, AnglePath path) {
  require_pair(s, setup);
  AngleReport r = exterior_angle(setup.expectation, *setup.p, *setup.q, path, s.options.tol);
  return {{"exterior", to_json(r)}};
}

/// Full angle matrix over the proper intermediate subgroups.
inline json lattice_result(const Scenario& s, const Setup& setup, AnglePath path,
                           std::string* csv) {
  if (!setup.groups) throw ValidationError("lattice needs a group or crossed_product scenario");
  const Tolerances& tol = s.options.tol;
  const GroupInclusion& gi = *setup.groups;
  std::vector<PermGroup> subs = gi.proper_intermediates();
  json j{{"intermediates", json::array()}, {"pairs", json::array()}};
  std::vector<CompatibleIntermediate> cis;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    j["intermediates"].push_back(
        {{"index", i}, {"label", group_label(subs[i])}, {"order", subs[i].order()}});
    cis.push_back(gi.intermediate(subs[i], tol));
  }
  std::ostringstream table;
  table << std::setprecision(17) << "intermediate";
  for (const auto& g : subs) table << ",\"" << group_label(g) << "\"";
  table << "\n";
  double worst = 0.0;
  std::size_t failures = 0;
  if (!subs.empty()) {
    AngleContext ctx = AngleContext::build(gi.expectation, tol);
    AngleMatrix m = angle_matrix(ctx, cis, path, tol);
    for (std::size_t a = 0; a < subs.size(); ++a) {
      table << '"' << group_label(subs[a]) << '"';
      for (std::size_t b = 0; b < subs.size(); ++b) {
        table << ',';
        if (m.entries[a][b]) table << m.entries[a][b]->angle;
        else table << "nan";
      }
      table << "\n";
      for (std::size_t b = a + 1; b < subs.size(); ++b) {
        json pair{{"i", a}, {"j", b}};
        if (!m.entries[a][b]) {
          pair["error"] = m.errors[a][b];
          ++failures;
        } else {
          const AngleReport& r = *m.entries[a][b];
          const double expected = group_angle_cos(gi.h, subs[a], subs[b]);
          const double disc = std::abs(r.cos_value - expected);
          worst = std::max(worst, disc);
          pair.update({{"cos", r.cos_value},
                       {"angle", r.angle},
                       {"path_disagreement", r.path_disagreement},
                       {"commuting_square", r.commuting_square},
                       {"commuting_residual", r.commuting_residual},
                       {"oracle_cos", expected},
                       {"discrepancy", disc}});
        }
        j["pairs"].push_back(std::move(pair));
      }
    }
  }
  j["count"] = subs.size();
  j["pair_count"] = j["pairs"].size();
  j["failed_pairs"] = failures;
  j["max_discrepancy"] = worst;
  j["all_match"] = failures == 0 && worst < tol.angle_tol;
  if (csv) *csv = table.str();
  return j;
}

struct Check {
  std::string name;
  double residual;
  bool passed;
};

inline json verify_result(const Scenario& s, const Setup& setup, bool* all_passed) {
  const Tolerances& tol = s.options.tol;
  const CondExpectation& e = setup.expectation;
  std::vector<Check> checks;
  auto add = [&](std::string name, double residual, bool passed) {
    checks.push_back({std::move(name), residual, passed});
  };
  auto below = [&](std::string name, double residual, double bound) {
    add(std::move(name), residual, residual < bound);
  };
  auto algebra_ok = [&](const char* name, const StarAlgebra& a) {
    try {
      a.verify_invariants(tol);
      add(name, 0.0, true);
    } catch (const Error&) {
      add(name, 1.0, false);
    }
  };
  algebra_ok("algebra_invariants_big", e.big());
  algebra_ok("algebra_invariants_small", e.small());

  ExpectationReport rep = verify(e, 16, s.options.seed, tol);
  below("expectation_idempotent", rep.idempotency, tol.eq_tol);
  below("expectation_range", std::max(rep.range, rep.fixes_small), tol.eq_tol);
  below("expectation_unital", rep.unitality, tol.eq_tol);
  below("expectation_bimodule", rep.bimodule, tol.eq_tol);
  below("expectation_positive", rep.positivity, tol.eq_tol);
  add("expectation_faithful", rep.faithfulness_margin, rep.faithful());

  ModuleBasis mb = orthonormal_basis(e, tol);
  below("quasi_basis_reconstruction", verify_quasi_basis(e, mb.elements, 100, s.options.seed),
        tol.eq_tol);
  WatataniIndex w = watatani_index(mb, e.big(), tol);
  below("index_central", w.centrality_residual, tol.eq_tol);
  std::vector<std::size_t> reversed(e.big().dim());
  std::iota(reversed.rbegin(), reversed.rend(), std::size_t{0});
  WatataniIndex w2 = watatani_index(orthonormal_basis(e, tol, reversed), e.big(), tol);
  below("index_independent_of_basis", op_norm(w.value - w2.value), tol.eq_tol);
  if (setup.groups) {
    const double expected = static_cast<double>(index(setup.groups->g, setup.groups->h));
    below("index_matches_group_index", op_norm(w.value - expected * identity(w.value.rows())),
          tol.eq_tol);
  }

  BasicConstruction bc = BasicConstruction::build(e, tol);
  const BasicDiagnostics& d = bc.diagnostics();
  below("jones_projection", d.projection, tol.eq_tol);
  below("jones_compression", d.compression, tol.eq_tol);
  add("commutant_dimension", std::abs(static_cast<double>(d.commutant_dim) -
                                      static_cast<double>(d.small_dim)),
      d.commutant_dim == d.small_dim);
  below("commutant_equals_small", std::max(d.small_commutes, d.commutant_in_small), tol.eq_tol);
  below("partition_of_unity", d.partition_of_unity, tol.eq_tol);

  DualExpectation de = dual_expectation(bc, tol, s.options.seed);
  below("dual_on_spanning_pairs", de.spanning_residual(), tol.eq_tol);
  below("dual_of_jones_is_index_inverse",
        op_norm(de(bc.jones_projection()) - bc.index_inverse()), tol.eq_tol);
  if (de.lstsq_consistency()) below("dual_lstsq_consistency", *de.lstsq_consistency(), tol.eq_tol);
  if (de.lstsq_agreement()) below("dual_lstsq_agreement", *de.lstsq_agreement(), tol.eq_tol);
  if (de.verification()) add("dual_is_expectation", 0.0, de.verification()->passed());

  const double indp = ind_p_estimate(e, s.options.indp_trials, s.options.seed, tol);
  const double bound = op_norm(w.value);
  add("ind_p_in_range", std::max(0.0, std::max(1.0 - indp, indp - bound - 1e-6)),
      indp >= 1.0 && indp <= bound + 1e-6);

  if (setup.p && setup.q) {
    below("compatibility_P", setup.p->compatibility_residual, tol.eq_tol);
    below("compatibility_Q", setup.q->compatibility_residual, tol.eq_tol);
    try {
      AngleReport r = interior_angle(e, *setup.p, *setup.q, AnglePath::both, tol);
      below("angle_path_agreement", r.path_disagreement, tol.angle_tol);
    } catch (const DegenerateAngleError&) {
      add("angle_path_agreement", 0.0, true);
    }
  }

  json out = json::array();
  bool ok = true;
  for (const auto& c : checks) {
    out.push_back({{"name", c.name}, {"residual", c.residual}, {"passed", c.passed}});
    ok = ok && c.passed;
  }
  *all_passed = ok;
  return {{"checks", out}, {"all_passed", ok}};
}

// ---------------------------------------------------------------------------
// output

inline void flatten(const json& j, const std::string& prefix,
                    std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
  } else if (j.is_array() && !j.empty() && j.front().is_array() && j.front().size() > 2) {
    rows.emplace_back(prefix, "[" + std::to_string(j.size()) + "x" +
                                  std::to_string(j.front().size()) + " matrix]");
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i)
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
  } else {
    rows.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
}

inline std::string render(const json& report, Format f) {
  if (f == Format::json) return report.dump(2) + "\n";
  std::vector<std::pair<std::string, std::string>> rows;
  json body = report;
  body.erase("scenario");
  flatten(body, "", rows);
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << "\n";
  return os.str();
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
}

inline int exit_code_for(const std::exception& err) {
  if (dynamic_cast<const ValidationError*>(&err) || dynamic_cast<const ParseError*>(&err) ||
      dynamic_cast<const ContainmentError*>(&err) || dynamic_cast<const SizeError*>(&err) ||
      dynamic_cast<const json::exception*>(&err))
    return exit_validation;
  return exit_numerical;
}

inline Scenario load_scenario(const std::string& path, const RunFlags& flags) {
  Scenario s = parse_scenario(read_json_file(path));
  if (flags.eq_tol) s.options.tol.eq_tol = *flags.eq_tol;
  if (flags.rank_tol) s.options.tol.rank_tol = *flags.rank_tol;
  if (flags.angle_tol) s.options.tol.angle_tol = *flags.angle_tol;
  if (flags.seed) s.options.seed = *flags.seed;
  try {
    s.options.tol.validate();
  } catch (const Error& err) {
    throw ValidationError(err.what());
  }
  return s;
}

/// Runs one command; writes the report and returns the process exit code.
inline int run(const std::string& command, const std::string& scenario_path,
               const RunFlags& flags, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  json report{{"tool", "fdindex"}, {"version", version}, {"command", command}};
  int code = exit_ok;
  std::string csv;
  std::optional<Scenario> s;
  try {
    if (std::find(command_names().begin(), command_names().end(), command) ==
        command_names().end())
      throw ValidationError("unknown command '" + command + "'");
    s = load_scenario(scenario_path, flags);
    report["scenario"] = {{"name", s->name}, {"kind", to_string(s->kind)}, {"source", s->source}};
    report["tolerances"] = to_json(s->options.tol);
    report["seed"] = s->options.seed;
    report["tensor_factor"] = s->options.tensor_factor;
    if (command == "validate") {
      report["result"] = {{"valid", true}};
    } else {
      if (command == "lattice" && s->g && s->g->order() > 48)
        throw SizeError("group order " + std::to_string(s->g->order()) + " exceeds bound 48");
      Setup setup = build_setup(*s);
      if (command == "index") report["result"] = index_result(*s, setup);
      else if (command == "quasi-basis") report["result"] = quasi_basis_result(*s, setup);
      else if (command == "angle") report["result"] = angle_result(*s, setup, flags.path);
      else if (command == "exterior-angle") report["result"] = exterior_result(*s, setup, flags.path);
      else if (command == "lattice") report["result"] = lattice_result(*s, setup, flags.path, &csv);
      else {
        bool passed = false;
        report["result"] = verify_result(*s, setup, &passed);
        if (!passed) code = exit_numerical;
      }
    }
    report["status"] = code == exit_ok ? "ok" : "failed";
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    report["status"] = "error";
    report["error"] = {{"category", code == exit_validation ? "validation" : "numerical"},
                       {"message", e.what()}};
    err << "fdindex " << command << ": " << e.what() << "\n";
  }
  report["exit_code"] = code;
  try {
    emit(render(report, flags.format), flags.out, out);
    if (command == "lattice" && code == exit_ok) {
      std::string csv_path = flags.csv;
      if (csv_path.empty() && !flags.out.empty())
        csv_path = std::filesystem::path(flags.out).replace_extension(".csv").string();
      if (!csv_path.empty()) emit(csv, csv_path, out);
    }
  } catch (const std::exception& e) {
    err << "fdindex " << command << ": " << e.what() << "\n";
    return exit_validation;
  }
  return code;
}

}  // namespace fdindex::cli
