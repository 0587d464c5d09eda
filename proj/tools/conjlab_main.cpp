// conjlab: verify the topological equivalence between a uniformly
// asymptotically stable linear system and its bounded-Lipschitz
// perturbation, straight from a scenario file.
//
//   conjlab verify <file.scn> [--suite S] [--json out] [--csv out] [--seed N]
//   conjlab phi <file.scn> --t T --s S
//   conjlab map {H|G} <file.scn> --t T --x "v" [--path P] [--check]
//   conjlab sweep <file.scn> --quantity {theta|C|Henv|V} --t0 A --t1 B --n N

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conjlab/conjlab.hpp"

namespace {

using namespace conjlab;

Vec parse_state(const std::string& text, Eigen::Index dim) {
  scn::Lexer lex(text, 0, 0);
  const ValueNode v = lex.value();
  Vec out = scn::as_vector(v, "state");
  if (out.size() != dim)
    throw Error("state has dimension " + std::to_string(out.size()) +
                ", scenario needs " + std::to_string(dim));
  return out;
}

// golden paths inside scenario files are repo-relative; try as-is, then
// next to the scenario file's parent directory
std::string resolve_golden(const std::string& scn_path,
                           const std::string& golden_path) {
  if (std::ifstream probe(golden_path); probe) return golden_path;
  std::string dir = scn_path;
  const auto slash = dir.find_last_of('/');
  dir = slash == std::string::npos ? "." : dir.substr(0, slash);
  return dir + "/../" + golden_path;
}

int run_verify(const std::string& path, const std::string& suite_name,
               const std::string& json_out, const std::string& csv_out,
               std::uint64_t seed) {
  const Scenario sc = load_scenario_file(path, seed);
  CertificateReport report = run_suite(sc, suite_from_string(suite_name), seed);
  if (!sc.golden_path.empty()) {
    const std::string resolved = resolve_golden(path, sc.golden_path);
    const GoldenFile golden = load_golden(resolved);
    auto entries = verify_golden(sc, golden);
    report.entries.insert(report.entries.end(), entries.begin(),
                          entries.end());
  }
  std::cout << report_to_table(report);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << report_to_json(report).dump(2) << "\n";
  }
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    out << report_to_csv(report);
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conjlab: numerical strong topological equivalence on the half line"};
  app.require_subcommand(1);

  std::string scn_path, suite_name = "all", json_out, csv_out;
  std::uint64_t seed = 0x5EED;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("scenario", scn_path, "scenario file (.scn)")->required();
  verify->add_option("--suite", suite_name,
                     "conjugacy|continuity|smoothness|stability|all");
  verify->add_option("--json", json_out, "write the JSON report here");
  verify->add_option("--csv", csv_out, "write the CSV report here");
  verify->add_option("--seed", seed, "probe RNG seed");

  std::string phi_path;
  double phi_t = 0.0, phi_s = 0.0;
  auto* phi = app.add_subcommand("phi", "Evaluate the transition matrix");
  phi->add_option("scenario", phi_path)->required();
  phi->add_option("--t", phi_t)->required();
  phi->add_option("--s", phi_s)->required();

  std::string map_which, map_path, map_state, map_route = "flow_composition";
  double map_t = 0.0;
  bool map_check = false;
  auto* mapc = app.add_subcommand("map", "Evaluate H or G at a state");
  mapc->add_option("which", map_which, "H or G")->required();
  mapc->add_option("scenario", map_path)->required();
  mapc->add_option("--t", map_t)->required();
  mapc->add_option("--x", map_state, "state, e.g. \"0.7\" or \"[0.7, 0.2]\"")
      ->required();
  mapc->add_option("--path", map_route,
                   "flow_composition|integral_definition");
  mapc->add_flag("--check", map_check, "also cross-check the other path");

  std::string sweep_path, quantity;
  double sweep_t0 = 0.0, sweep_t1 = 5.0;
  int sweep_n = 101;
  std::string sweep_csv;
  auto* sweep = app.add_subcommand("sweep", "Emit plot data as CSV");
  sweep->add_option("scenario", sweep_path)->required();
  sweep->add_option("--quantity", quantity, "theta|C|Henv|V")->required();
  sweep->add_option("--t0", sweep_t0);
  sweep->add_option("--t1", sweep_t1);
  sweep->add_option("--n", sweep_n);
  sweep->add_option("--csv", sweep_csv, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify)
      return run_verify(scn_path, suite_name, json_out, csv_out, seed);

    if (*phi) {
      const Scenario sc = load_scenario_file(phi_path);
      const ConjugacyProblem p = sc.make_problem();
      std::cout.precision(15);
      std::cout << p.linear().transition(phi_t, phi_s, p.cfg()) << "\n";
      return 0;
    }

    if (*mapc) {
      const Scenario sc = load_scenario_file(map_path);
      const ConjugacyProblem p = sc.make_problem();
      const Vec x = parse_state(map_state, p.dim());
      const EvalPath route = map_route == "integral_definition"
                                 ? EvalPath::integral_definition
                                 : EvalPath::flow_composition;
      MapEvaluation ev;
      if (map_which == "H")
        ev = map_check ? H_map_checked(p, map_t, x)
                       : H_map(p, map_t, x, route);
      else if (map_which == "G")
        ev = map_check ? G_map_checked(p, map_t, x)
                       : G_map(p, map_t, x, route);
      else
        throw Error("map: first argument must be H or G");
      std::cout.precision(15);
      std::cout << ev.output.transpose() << "\n";
      if (ev.cross_checked)
        std::cout << "path residual: " << ev.residual_vs_other_path << "\n";
      return 0;
    }

    if (*sweep) {
      const Scenario sc = load_scenario_file(sweep_path);
      const std::string csv = emit_plotdata(
          sc, sweep_quantity_from_string(quantity), sweep_t0, sweep_t1,
          sweep_n);
      if (sweep_csv.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(sweep_csv);
        out << csv;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
