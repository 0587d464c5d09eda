// Golden-file generator. Recomputes every recorded probe with a deliberately
// independent numerical path: classical fixed-step RK4 at h = 1e-4 plus
// closed forms where available. Never calls the library's adaptive
// integrator; the golden files this writes are what the test suite and
// `conjlab verify` compare against.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kH = 1e-4;

using Rhs = std::function<std::vector<double>(double, const std::vector<double>&)>;

std::vector<double> rk4(const Rhs& rhs, double t0, std::vector<double> y,
                        double t1, double h = kH) {
  const double span = t1 - t0;
  if (span == 0.0) return y;
  const long n = std::lround(std::ceil(std::abs(span) / h));
  const double dt = span / static_cast<double>(n);
  const std::size_t d = y.size();
  auto axpy = [&](const std::vector<double>& base, double c,
                  const std::vector<double>& k) {
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = base[i] + c * k[i];
    return out;
  };
  double t = t0;
  for (long i = 0; i < n; ++i) {
    const auto k1 = rhs(t, y);
    const auto k2 = rhs(t + dt / 2, axpy(y, dt / 2, k1));
    const auto k3 = rhs(t + dt / 2, axpy(y, dt / 2, k2));
    const auto k4 = rhs(t + dt, axpy(y, dt, k3));
    for (std::size_t j = 0; j < d; ++j)
      y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    t = t0 + (i + 1) * span / static_cast<double>(n);
  }
  return y;
}

double jiang_f(double t, double y) {
  return 0.2 * (kPi / 2.0 - std::atan(t + std::abs(y)));
}

json vec_json(const std::vector<double>& v) {
  json j = json::array();
  for (double x : v) j.push_back(x);
  return j;
}

json probe(double t, const char* anchor_key, double anchor,
           const std::vector<double>& state, const json& value, double tol) {
  json j;
  j["t"] = t;
  j[anchor_key] = anchor;
  if (!state.empty()) j["state"] = vec_json(state);
  j["value"] = value;
  j["tol"] = tol;
  return j;
}

void write(const std::string& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  std::printf("wrote %s\n", path.c_str());
}

std::string root() {
#ifdef CONJLAB_REPO_ROOT
  return std::string(CONJLAB_REPO_ROOT) + "/";
#else
  return "";
#endif
}

void gen_jiang() {
  json g;
  g["scenario"] = "jiang";
  g["oracle"] = "fixed-step RK4, h = 1e-4, independent of the library path";

  auto flow = [](double t, const std::vector<double>& y) {
    return std::vector<double>{-y[0] + jiang_f(t, y[0])};
  };

  // y(5, 0, 0)
  g["flow_terminal"] =
      probe(5.0, "tau", 0.0, {0.0}, vec_json(rk4(flow, 0.0, {0.0}, 5.0)),
            1e-7);

  // z*(2; (2, 0)): the anchor trajectory x(s,2,0) vanishes, so z* solves
  // z' = -z + f(t, z) from 0.
  g["z_star"] = probe(2.0, "tau", 2.0, {0.0},
                      vec_json(rk4(flow, 0.0, {0.0}, 2.0)), 1e-7);

  // H(4, 0.7) = y(4, 0, e^4 * 0.7)
  g["H"] = probe(4.0, "tau", 4.0, {0.7},
                 vec_json(rk4(flow, 0.0, {std::exp(4.0) * 0.7}, 4.0)), 1e-7);

  // w*(3; (3, 0.5)): co-integrate [y; w] forward from y(0,3,0.5)
  {
    const auto y0 = rk4(flow, 3.0, {0.5}, 0.0);
    auto pair_rhs = [](double t, const std::vector<double>& z) {
      return std::vector<double>{-z[0] + jiang_f(t, z[0]),
                                 -z[1] - jiang_f(t, z[0])};
    };
    const auto zw = rk4(pair_rhs, 0.0, {y0[0], 0.0}, 3.0);
    g["w_star"] = probe(3.0, "tau", 3.0, {0.5}, vec_json({zw[1]}), 1e-7);
  }

  // dG/deta(2, 0.4) = Phi(2,0) * dy(0,2,0.4)/deta via backward [y; V]
  {
    auto var_rhs = [](double t, const std::vector<double>& z) {
      const double s = z[0] > 0 ? 1.0 : (z[0] < 0 ? -1.0 : 0.0);
      const double u = t + std::abs(z[0]);
      const double df = -0.2 * s / (1.0 + u * u);
      return std::vector<double>{-z[0] + jiang_f(t, z[0]),
                                 (-1.0 + df) * z[1]};
    };
    const auto yv = rk4(var_rhs, 2.0, {0.4, 1.0}, 0.0);
    g["jacobian_G"] = probe(
        2.0, "tau", 2.0, {0.4},
        json::array({json::array({std::exp(-2.0) * yv[1]})}), 1e-6);
  }

  g["theta"] = {{"t", 1.0}, {"value", std::exp(0.2)}};

  {
    // L = ln(4 mu K / (alpha eps)), theta* = e^{0.2 L}, delta = eps/(2 theta*)
    const double eps = 0.1, mu = kPi / 5.0;
    const double L = std::log(4.0 * mu / eps);
    json b;
    b["eps"] = eps;
    b["L"] = L;
    b["theta_star"] = std::exp(0.2 * L);
    b["delta"] = eps / (2.0 * std::exp(0.2 * L));
    g["budget"] = b;
  }

  g["equilibrium"] = nullptr;  // per-time roots fail grid validation
  write(root() + "golden/jiang.expected.json", g);
}

void gen_zero_f() {
  json g;
  g["scenario"] = "zero_f";
  g["oracle"] = "closed forms (unperturbed system)";
  g["transition"] = probe(2.0, "s", 0.0, {},
                          json::array({json::array({std::exp(-2.0), 0.0}),
                                       json::array({0.0, std::exp(-2.0)})}),
                          1e-8);
  g["H"] = probe(3.0, "tau", 3.0, {0.7, -0.4}, vec_json({0.7, -0.4}), 1e-7);
  g["lyapunov_P"] = probe(1.0, "s", 0.0, {},
                          json::array({json::array({0.5, 0.0}),
                                       json::array({0.0, 0.5})}),
                          1e-8);
  g["equilibrium"] = vec_json({0.0, 0.0});
  write(root() + "golden/zero_f.expected.json", g);
}

void gen_s3_rot() {
  json g;
  g["scenario"] = "s3_rot";
  g["oracle"] =
      "fixed-step RK4, h = 1e-4, plus the closed-form spiral transition";

  // Phi(3,1) = e^{-2} R(1.0) with R the clockwise rotation by b(t-s)
  {
    const double d = 2.0, c = std::cos(0.5 * d), s = std::sin(0.5 * d);
    const double e = std::exp(-d);
    g["transition"] = probe(3.0, "s", 1.0, {},
                            json::array({json::array({e * c, e * s}),
                                         json::array({-e * s, e * c})}),
                            1e-8);
  }

  auto flow = [](double, const std::vector<double>& y) {
    return std::vector<double>{-y[0] + 0.5 * y[1] + 0.2 * std::tanh(y[0]),
                               -0.5 * y[0] - y[1] + 0.2 * std::tanh(y[1])};
  };
  g["flow_terminal"] = probe(3.0, "tau", 0.0, {0.6, -0.4},
                             vec_json(rk4(flow, 0.0, {0.6, -0.4}, 3.0)),
                             1e-7);

  // H(2, xi) = y(2, 0, Phi(0,2) xi) with Phi(0,2) = e^{2} R(-1.0)
  {
    const double c = std::cos(1.0), s = std::sin(1.0), e = std::exp(2.0);
    const double x1 = 0.6, x2 = -0.4;
    const std::vector<double> x0{e * (c * x1 - s * x2),
                                 e * (s * x1 + c * x2)};
    g["H"] = probe(2.0, "tau", 2.0, {0.6, -0.4},
                   vec_json(rk4(flow, 0.0, x0, 2.0)), 1e-7);
  }

  // A^T P + P A = -I with A = rot(-1, 0.5) is solved by P = I/2
  g["lyapunov_P"] = probe(1.0, "s", 0.0, {},
                          json::array({json::array({0.5, 0.0}),
                                       json::array({0.0, 0.5})}),
                          1e-8);
  g["equilibrium"] = vec_json({0.0, 0.0});
  write(root() + "golden/s3_rot.expected.json", g);
}

void gen_s4_constant() {
  json g;
  g["scenario"] = "s4_constant";
  g["oracle"] = "closed forms (linear system with constant forcing)";
  // y' = -y + 0.3: y(t) = 0.3 + (y0 - 0.3) e^{-(t-t0)}
  auto flow_value = [](double t, double t0, double y0) {
    return 0.3 + (y0 - 0.3) * std::exp(-(t - t0));
  };
  g["flow_terminal"] =
      probe(4.0, "tau", 0.0, {0.7}, vec_json({flow_value(4.0, 0.0, 0.7)}),
            1e-8);
  // H(4, 0.7) = y(4, 0, e^4 * 0.7)
  g["H"] = probe(4.0, "tau", 4.0, {0.7},
                 vec_json({flow_value(4.0, 0.0, std::exp(4.0) * 0.7)}), 1e-7);
  // G(3, ybar) = Phi(3,0) ybar
  g["G"] = probe(3.0, "tau", 3.0, {0.3}, vec_json({std::exp(-3.0) * 0.3}),
                 1e-8);
  // w*(2; (1, 0.3)) = (Phi(2,0) - I) ybar
  g["w_star"] = probe(2.0, "tau", 1.0, {0.3},
                      vec_json({(std::exp(-2.0) - 1.0) * 0.3}), 1e-8);
  g["equilibrium"] = vec_json({0.3});
  write(root() + "golden/s4_constant.expected.json", g);
}

void gen_scaled_sin() {
  json g;
  g["scenario"] = "scaled_sin";
  g["oracle"] = "fixed-step RK4, h = 1e-4";
  auto flow = [](double, const std::vector<double>& y) {
    return std::vector<double>{-y[0] + 0.2 * std::sin(y[0])};
  };
  g["flow_terminal"] = probe(4.0, "tau", 0.0, {1.2},
                             vec_json(rk4(flow, 0.0, {1.2}, 4.0)), 1e-7);
  g["H"] = probe(3.0, "tau", 3.0, {0.8},
                 vec_json(rk4(flow, 0.0, {std::exp(3.0) * 0.8}, 3.0)), 1e-7);
  g["lyapunov_P"] =
      probe(0.0, "s", 0.0, {}, json::array({json::array({0.5})}), 1e-8);
  g["equilibrium"] = vec_json({0.0});
  write(root() + "golden/scaled_sin.expected.json", g);
}

}  // namespace

int main() {
  gen_jiang();
  gen_zero_f();
  gen_s3_rot();
  gen_s4_constant();
  gen_scaled_sin();
  return 0;
}
