#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjlab/conjugacy.hpp"
#include "conjlab/regularity.hpp"
#include "conjlab/scenario.hpp"
#include "conjlab/stability.hpp"

// Golden files: frozen expected values produced by the independent
// fixed-step RK4 oracle (tools/gen_golden.cpp) and committed. verify_golden
// recomputes each recorded probe with the library path and reports the
// deviations.

namespace conjlab {

struct GoldenProbe {
  double t = 0.0;
  double s_or_tau = 0.0;
  Vec state;
  nlohmann::ordered_json value;  // scalar list or matrix
  double tol = 1e-7;
};

struct GoldenFile {
  std::string scenario;
  std::string oracle;
  std::optional<GoldenProbe> flow_terminal;   // y(t, tau, eta)
  std::optional<GoldenProbe> transition;      // Phi(t, s)
  std::optional<GoldenProbe> w_star;          // w*(t; (tau, eta))
  std::optional<GoldenProbe> z_star;          // z*(t; (t, xi))
  std::optional<GoldenProbe> h_map;           // H(t, xi)
  std::optional<GoldenProbe> g_map;           // G(t, eta)
  std::optional<GoldenProbe> jacobian;        // dG/deta(t, eta)
  std::optional<GoldenProbe> lyapunov_p;      // P(t)
  std::optional<std::pair<double, double>> theta_at;  // (t, value)
  struct Budget {
    double eps = 0.0, L = 0.0, theta_star = 0.0, delta = 0.0;
  };
  std::optional<Budget> budget;
  bool has_equilibrium_entry = false;
  std::optional<Vec> equilibrium;  // nullopt with entry present = "none"
};

namespace golden_detail {

inline Vec json_to_vec(const nlohmann::ordered_json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Mat json_to_mat(const nlohmann::ordered_json& j) {
  Mat m(j.size(), j.empty() ? 0 : j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i)
    for (std::size_t k = 0; k < j[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j[i][k].get<double>();
  return m;
}

inline nlohmann::ordered_json vec_to_json(const Vec& v) {
  auto j = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline nlohmann::ordered_json mat_to_json(const Mat& m) {
  auto j = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

inline GoldenProbe parse_probe(const nlohmann::ordered_json& j,
                               const char* anchor_key) {
  GoldenProbe p;
  p.t = j.value("t", 0.0);
  p.s_or_tau = j.value("s", j.value("tau", 0.0));
  if (j.contains("state")) p.state = json_to_vec(j["state"]);
  p.value = j.at("value");
  p.tol = j.value("tol", 1e-7);
  (void)anchor_key;
  return p;
}

}  // namespace golden_detail

inline GoldenFile load_golden(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open golden file: " + path);
  nlohmann::ordered_json j;
  in >> j;
  GoldenFile g;
  g.scenario = j.value("scenario", "");
  g.oracle = j.value("oracle", "");
  using golden_detail::parse_probe;
  if (j.contains("flow_terminal"))
    g.flow_terminal = parse_probe(j["flow_terminal"], "flow");
  if (j.contains("transition"))
    g.transition = parse_probe(j["transition"], "phi");
  if (j.contains("w_star")) g.w_star = parse_probe(j["w_star"], "w");
  if (j.contains("z_star")) g.z_star = parse_probe(j["z_star"], "z");
  if (j.contains("H")) g.h_map = parse_probe(j["H"], "H");
  if (j.contains("G")) g.g_map = parse_probe(j["G"], "G");
  if (j.contains("jacobian_G"))
    g.jacobian = parse_probe(j["jacobian_G"], "J");
  if (j.contains("lyapunov_P"))
    g.lyapunov_p = parse_probe(j["lyapunov_P"], "P");
  if (j.contains("theta"))
    g.theta_at = std::make_pair(j["theta"]["t"].get<double>(),
                                j["theta"]["value"].get<double>());
  if (j.contains("budget")) {
    GoldenFile::Budget b;
    b.eps = j["budget"]["eps"].get<double>();
    b.L = j["budget"]["L"].get<double>();
    b.theta_star = j["budget"]["theta_star"].get<double>();
    b.delta = j["budget"]["delta"].get<double>();
    g.budget = b;
  }
  if (j.contains("equilibrium")) {
    g.has_equilibrium_entry = true;
    if (!j["equilibrium"].is_null())
      g.equilibrium = golden_detail::json_to_vec(j["equilibrium"]);
  }
  return g;
}

/// Recompute every recorded probe through the library path and report the
/// deviation from the frozen oracle value.
inline std::vector<CheckEntry> verify_golden(const Scenario& sc,
                                             const GoldenFile& g) {
  const ConjugacyProblem p = sc.make_problem();
  std::vector<CheckEntry> out;
  using golden_detail::json_to_mat;
  using golden_detail::json_to_vec;

  if (g.flow_terminal) {
    const auto& pr = *g.flow_terminal;
    const Vec got = p.flow_y_value(pr.t, pr.s_or_tau, pr.state);
    out.push_back(CheckEntry::leq("golden/flow_terminal", "Step 1",
                                  (got - json_to_vec(pr.value)).norm(),
                                  pr.tol, "vs RK4 oracle value"));
  }
  if (g.transition) {
    const auto& pr = *g.transition;
    const Mat got = p.linear().transition(pr.t, pr.s_or_tau, p.cfg());
    out.push_back(CheckEntry::leq("golden/transition", "(P2)",
                                  opnorm(got - json_to_mat(pr.value)), pr.tol,
                                  "vs cocycle-product oracle"));
  }
  if (g.w_star) {
    const auto& pr = *g.w_star;
    const Vec got = w_star(p, pr.t, pr.s_or_tau, pr.state);
    out.push_back(CheckEntry::leq("golden/w_star", "(w-star)",
                                  (got - json_to_vec(pr.value)).norm(),
                                  pr.tol, "vs quadrature oracle"));
  }
  if (g.z_star) {
    const auto& pr = *g.z_star;
    const Vec got = z_star(p, pr.t, pr.t, pr.state).value;
    out.push_back(CheckEntry::leq("golden/z_star", "(pivote1)",
                                  (got - json_to_vec(pr.value)).norm(),
                                  pr.tol, "vs RK4 oracle"));
  }
  if (g.h_map) {
    const auto& pr = *g.h_map;
    const Vec got =
        H_map(p, pr.t, pr.state, EvalPath::flow_composition).output;
    out.push_back(CheckEntry::leq("golden/H", "Step 2",
                                  (got - json_to_vec(pr.value)).norm(),
                                  pr.tol, "vs RK4 composition oracle"));
  }
  if (g.g_map) {
    const auto& pr = *g.g_map;
    const Vec got =
        G_map(p, pr.t, pr.state, EvalPath::flow_composition).output;
    out.push_back(CheckEntry::leq("golden/G", "(Homeo-G)",
                                  (got - json_to_vec(pr.value)).norm(),
                                  pr.tol, "vs RK4 composition oracle"));
  }
  if (g.jacobian) {
    const auto& pr = *g.jacobian;
    const Mat got = jacobian_G_matrix(p, pr.t, pr.state);
    out.push_back(CheckEntry::leq("golden/jacobian_G", "(jacobiano-G)",
                                  opnorm(got - json_to_mat(pr.value)), pr.tol,
                                  "vs RK4 variational oracle"));
  }
  if (g.lyapunov_p) {
    const auto& pr = *g.lyapunov_p;
    const Mat got = lyapunov_P(
        p.linear(), [&](double) { return sc.lyapunov_Q; }, sc.q_plus, pr.t,
        p.tol().tol_tail, p.cfg());
    out.push_back(CheckEntry::leq("golden/lyapunov_P", "forma_cuadratica_scl",
                                  opnorm(got - json_to_mat(pr.value)), pr.tol,
                                  "vs closed-form/oracle value"));
  }
  if (g.theta_at) {
    out.push_back(CheckEntry::leq(
        "golden/theta", "Step 5",
        std::abs(theta(p, g.theta_at->first) - g.theta_at->second), 1e-10,
        "closed form at t = " + std::to_string(g.theta_at->first)));
  }
  if (g.budget) {
    const ContinuityBudget b = continuity_budget(p, g.budget->eps);
    const double worst = std::max({std::abs(b.L - g.budget->L),
                                   std::abs(b.theta_star - g.budget->theta_star),
                                   std::abs(b.delta - g.budget->delta)});
    out.push_back(CheckEntry::leq("golden/budget", "(auxiliares)", worst,
                                  1e-9, "L, theta*, delta arithmetic"));
  }
  if (g.has_equilibrium_entry) {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i)
      grid.push_back(std::min(10.0, p.t_max()) * i / 20.0);
    const auto search =
        find_equilibrium(p, sc.probes.equilibrium_guess, grid);
    if (!g.equilibrium) {
      out.push_back(CheckEntry::leq("golden/equilibrium_absent",
                                    "(equilibrio)", search.found ? 1.0 : 0.0,
                                    0.0, "oracle records no equilibrium"));
    } else {
      const double d = search.found
                           ? (search.candidate.ybar - *g.equilibrium).norm()
                           : 1e300;
      out.push_back(CheckEntry::leq("golden/equilibrium", "(PFE)", d, 1e-8,
                                    "vs oracle equilibrium"));
    }
  }
  return out;
}

}  // namespace conjlab
