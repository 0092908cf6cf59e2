// fdindex: Watatani indices, quasi-bases and angles for scenario files.

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace fdindex::cli;
  CLI::App app{"Watatani indices, quasi-bases and subalgebra angles for finite-dimensional inclusions"};
  app.set_version_flag("--version", std::string(fdindex::version));
  app.require_subcommand(1);

  RunFlags flags;
  std::string format = "json";
  std::string path = "both";
  double eq_tol = 0, rank_tol = 0, angle_tol = 0;
  std::uint64_t seed = 0;
  std::string scenario;

  auto* tol_opt = app.add_option("--tol", eq_tol, "operator-norm equality tolerance")->check(CLI::PositiveNumber);
  auto* rank_opt = app.add_option("--rank-tol", rank_tol, "eigenvalue cutoff")->check(CLI::PositiveNumber);
  auto* angle_opt = app.add_option("--angle-tol", angle_tol, "cross-path tolerance")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the scenario)");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--out", flags.out, "write the report here instead of stdout");
  app.add_option("--csv", flags.csv, "lattice: CSV path (default: --out with .csv)");
  app.add_option("--path", path, "angle computation path")
      ->check(CLI::IsMember({"definition", "quasibasis", "both"}));

  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("scenario", scenario, "scenario JSON file")->required();
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_validation;
  }

  if (*tol_opt) flags.eq_tol = eq_tol;
  if (*rank_opt) flags.rank_tol = rank_tol;
  if (*angle_opt) flags.angle_tol = angle_tol;
  if (*seed_opt) flags.seed = seed;
  flags.format = format == "table" ? Format::table : Format::json;
  flags.path = path == "definition"   ? fdindex::AnglePath::definition
               : path == "quasibasis" ? fdindex::AnglePath::quasibasis
                                      : fdindex::AnglePath::both;
  return run(app.get_subcommands().front()->get_name(), scenario, flags);
}
