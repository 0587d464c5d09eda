#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "conjlab/builtins.hpp"
#include "conjlab/errors.hpp"
#include "conjlab/nonlinear_flow.hpp"
#include "conjlab/report.hpp"

// Scenario files: flat key-value sections [scenario], [linear],
// [perturbation], [constants], [probes], [tolerances], [lyapunov],
// [expected]. Values are numbers, vectors [a, b], matrices [[a,b],[c,d]],
// quoted strings, or built-in names with parameters (f = jiang_arctan(0.2),
// A = rot(-1, 0.5), A = diag(osc(1, 0.25))). Expressions in t are
// restricted to the shipped built-ins so results stay reproducible.

namespace conjlab {

struct ValueNode {
  enum class Kind { number, ident, call, list, text };
  Kind kind = Kind::number;
  double num = 0.0;
  std::string name;              // ident/call name or raw text
  std::vector<ValueNode> items;  // call args or list items
  int line = 0;
  int col = 0;
};

namespace scn {

class Lexer {
 public:
  Lexer(const std::string& s, int line, int col0)
      : s_(s), line_(line), col0_(col0) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  char get() {
    skip_ws();
    return s_[pos_++];
  }
  int col() const { return col0_ + static_cast<int>(pos_); }
  int line() const { return line_; }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError("scenario: " + msg, line_, col());
  }

  double number() {
    skip_ws();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos_ += used;
    return v;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) fail("expected an identifier");
    return s_.substr(start, pos_ - start);
  }

  ValueNode value() {
    skip_ws();
    ValueNode node;
    node.line = line_;
    node.col = col();
    const char c = peek();
    if (c == '"') {
      get();
      std::size_t end = s_.find('"', pos_);
      if (end == std::string::npos) fail("unterminated string");
      node.kind = ValueNode::Kind::text;
      node.name = s_.substr(pos_, end - pos_);
      pos_ = end + 1;
      return node;
    }
    if (c == '[') {
      get();
      node.kind = ValueNode::Kind::list;
      if (peek() == ']') {
        get();
        return node;
      }
      while (true) {
        node.items.push_back(value());
        const char d = get();
        if (d == ']') break;
        if (d != ',') fail("expected ',' or ']' in list");
      }
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      node.name = ident();
      if (peek() == '(') {
        get();
        node.kind = ValueNode::Kind::call;
        if (peek() == ')') {
          get();
          return node;
        }
        while (true) {
          node.items.push_back(value());
          const char d = get();
          if (d == ')') break;
          if (d != ',') fail("expected ',' or ')' in argument list");
        }
      } else {
        node.kind = ValueNode::Kind::ident;
      }
      return node;
    }
    node.kind = ValueNode::Kind::number;
    node.num = number();
    return node;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

struct Document {
  // section -> key -> value, insertion-ordered per section
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, ValueNode>>>>
      sections;

  const std::vector<std::pair<std::string, ValueNode>>* find(
      const std::string& section) const {
    for (const auto& [name, keys] : sections)
      if (name == section) return &keys;
    return nullptr;
  }

  std::optional<ValueNode> get(const std::string& section,
                               const std::string& key) const {
    if (const auto* keys = find(section)) {
      for (const auto& [k, v] : *keys)
        if (k == key) return v;
    }
    return std::nullopt;
  }
};

inline Document parse_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::string current;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("scenario: unterminated section header", lineno,
                         static_cast<int>(begin) + 1);
      current = line.substr(1, line.size() - 2);
      doc.sections.emplace_back(current,
                                std::vector<std::pair<std::string, ValueNode>>{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("scenario: expected 'key = value'", lineno,
                       static_cast<int>(begin) + 1);
    if (current.empty())
      throw ParseError("scenario: key outside any [section]", lineno, 1);
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    const std::string rhs = line.substr(eq + 1);
    Lexer lex(rhs, lineno, static_cast<int>(begin + eq + 2));
    ValueNode v = lex.value();
    if (!lex.done()) lex.fail("trailing characters after value");
    doc.sections.back().second.emplace_back(key, v);
  }
  return doc;
}

inline double as_number(const ValueNode& v, const char* what) {
  if (v.kind != ValueNode::Kind::number)
    throw ParseError(std::string("scenario: ") + what + " must be a number",
                     v.line, v.col);
  return v.num;
}

inline Vec as_vector(const ValueNode& v, const char* what) {
  if (v.kind == ValueNode::Kind::number) return vec1(v.num);
  if (v.kind != ValueNode::Kind::list)
    throw ParseError(std::string("scenario: ") + what + " must be a vector",
                     v.line, v.col);
  Vec out(v.items.size());
  for (std::size_t i = 0; i < v.items.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = as_number(v.items[i], what);
  return out;
}

inline Mat as_matrix(const ValueNode& v, const char* what) {
  if (v.kind != ValueNode::Kind::list || v.items.empty() ||
      v.items.front().kind != ValueNode::Kind::list)
    throw ParseError(std::string("scenario: ") + what +
                         " must be a matrix [[..],[..]]",
                     v.line, v.col);
  const std::size_t rows = v.items.size();
  const std::size_t cols = v.items.front().items.size();
  Mat out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (v.items[i].items.size() != cols)
      throw ParseError("scenario: ragged matrix rows", v.line, v.col);
    for (std::size_t j = 0; j < cols; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          as_number(v.items[i].items[j], what);
  }
  return out;
}

struct LinearSpec {
  LinearSystem::MatrixFn fn;
  Eigen::Index dim = 0;
};

inline LinearSpec parse_linear_fn(const ValueNode& v) {
  LinearSpec spec;
  if (v.kind == ValueNode::Kind::number) {
    Mat a(1, 1);
    a << v.num;
    spec.fn = builtins::constant_matrix(a);
    spec.dim = 1;
    return spec;
  }
  if (v.kind == ValueNode::Kind::list) {
    Mat a = as_matrix(v, "A");
    if (a.rows() != a.cols())
      throw ParseError("scenario: A must be square", v.line, v.col);
    spec.dim = a.rows();
    spec.fn = builtins::constant_matrix(std::move(a));
    return spec;
  }
  if (v.kind == ValueNode::Kind::call && v.name == "rot") {
    if (v.items.size() != 2)
      throw ParseError("scenario: rot(a, b) takes two numbers", v.line, v.col);
    spec.dim = 2;
    spec.fn = builtins::constant_matrix(
        builtins::rot(as_number(v.items[0], "rot"), as_number(v.items[1], "rot")));
    return spec;
  }
  if (v.kind == ValueNode::Kind::call && v.name == "diag") {
    if (v.items.empty())
      throw ParseError("scenario: diag() needs entries", v.line, v.col);
    // entries: numbers or osc(a, b) = -a + b sin t
    struct Entry {
      bool is_osc = false;
      double value = 0.0;
      builtins::OscEntry osc;
    };
    std::vector<Entry> entries;
    bool time_varying = false;
    for (const auto& item : v.items) {
      Entry e;
      if (item.kind == ValueNode::Kind::number) {
        e.value = item.num;
      } else if (item.kind == ValueNode::Kind::call && item.name == "osc" &&
                 item.items.size() == 2) {
        e.is_osc = true;
        e.osc = builtins::OscEntry{as_number(item.items[0], "osc"),
                                   as_number(item.items[1], "osc")};
        time_varying = true;
      } else {
        throw ParseError("scenario: diag entries are numbers or osc(a, b)",
                         item.line, item.col);
      }
      entries.push_back(e);
    }
    spec.dim = static_cast<Eigen::Index>(entries.size());
    const Eigen::Index n = spec.dim;
    if (!time_varying) {
      Mat a = Mat::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) a(i, i) = entries[i].value;
      spec.fn = builtins::constant_matrix(std::move(a));
    } else {
      spec.fn = [entries, n](double t) {
        Mat a = Mat::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
          a(i, i) = entries[i].is_osc ? entries[i].osc(t) : entries[i].value;
        return a;
      };
    }
    return spec;
  }
  throw ParseError("scenario: unknown A form (use a matrix, diag, or rot)",
                   v.line, v.col);
}

inline Perturbation parse_perturbation(const ValueNode& v, Eigen::Index dim) {
  auto need_args = [&](std::size_t n) {
    if (v.items.size() != n)
      throw ParseError("scenario: " + v.name + " takes " + std::to_string(n) +
                           " argument(s)",
                       v.line, v.col);
  };
  if (v.kind == ValueNode::Kind::ident && v.name == "zero")
    return builtins::zero_perturbation(dim);
  if (v.kind != ValueNode::Kind::call)
    throw ParseError("scenario: unknown f form", v.line, v.col);
  if (v.name == "jiang_arctan") {
    need_args(1);
    if (dim != 1)
      throw ParseError("scenario: jiang_arctan is scalar-only", v.line, v.col);
    return builtins::jiang_arctan(as_number(v.items[0], "coefficient"));
  }
  if (v.name == "scaled_sin") {
    need_args(1);
    return builtins::scaled_sin(as_number(v.items[0], "coefficient"), dim);
  }
  if (v.name == "scaled_tanh") {
    need_args(1);
    return builtins::scaled_tanh(as_number(v.items[0], "coefficient"), dim);
  }
  if (v.name == "constant_shift") {
    need_args(1);
    Vec c = as_vector(v.items[0], "shift");
    if (c.size() != dim)
      throw ParseError("scenario: constant_shift dimension mismatch", v.line,
                       v.col);
    return builtins::constant_shift(std::move(c));
  }
  throw ParseError("scenario: unknown perturbation '" + v.name + "'", v.line,
                   v.col);
}

}  // namespace scn

/// Probe points shipped with a scenario: explicit anchor states (used for
/// the two-path and Jacobian checks) plus a seeded random sweep inside
/// [-box, box]^n for the round-trip and proximity sweeps.
struct ProbeSpec {
  std::vector<double> times{0.0, 1.0, 5.0, 10.0, 50.0};
  // Times for the two-path (flow vs integral) checks; empty = same as
  // `times`. Perturbations that keep oscillating at large |y| (sin) make
  // the paper-literal integrand unresolvable once the backward anchor
  // trajectory exceeds ~e^15, so such scenarios cap this list.
  std::vector<double> equiv_times;
  std::vector<Vec> states;
  int n_random = 32;
  double box = 2.0;
  Vec equilibrium_guess;

  const std::vector<double>& two_path_times() const {
    return equiv_times.empty() ? times : equiv_times;
  }
};

/// One fully parsed scenario: systems, certified constants, probes,
/// tolerances, the Lyapunov Q block, and the expected outcomes.
struct Scenario {
  std::string name;
  LinearSystem linear;
  Perturbation pert;
  IntegratorConfig cfg;
  Tolerances tol;
  double t_max = 50.0;
  ProbeSpec probes;

  Mat lyapunov_Q;
  double q_minus = 1.0;
  double q_plus = 1.0;

  bool expects_equilibrium = false;
  bool expects_no_equilibrium = false;
  Vec expected_equilibrium;
  std::string golden_path;

  ConjugacyProblem make_problem() const {
    return ConjugacyProblem(linear, pert, cfg, t_max, tol);
  }
};

/// Parse and validate a scenario document. Certificate sampling runs at
/// load: (P1) on a grid, (P3) on 256 seeded triples, and the structural
/// hypotheses through the constructors ((7), alpha <= M, K >= 1).
inline Scenario load_scenario(const std::string& text,
                              std::uint64_t seed = 0x5EED) {
  const scn::Document doc = scn::parse_document(text);

  auto require = [&](const char* section, const char* key) -> ValueNode {
    auto v = doc.get(section, key);
    if (!v)
      throw ParseError(std::string("scenario: missing ") + section + "." + key,
                       0, 0);
    return *v;
  };

  const ValueNode a_node = require("linear", "A");
  scn::LinearSpec lin = scn::parse_linear_fn(a_node);
  if (auto dim_node = doc.get("linear", "dim")) {
    const auto declared =
        static_cast<Eigen::Index>(scn::as_number(*dim_node, "dim"));
    if (declared != lin.dim)
      throw ParseError("scenario: declared dim disagrees with A",
                       dim_node->line, dim_node->col);
  }

  const double k_const = scn::as_number(require("constants", "K"), "K");
  const double alpha = scn::as_number(require("constants", "alpha"), "alpha");
  const double m_const = scn::as_number(require("constants", "M"), "M");

  LinearSystem linear(lin.fn, lin.dim, m_const, k_const, alpha);

  Perturbation pert = scn::parse_perturbation(require("perturbation", "f"),
                                              lin.dim);
  {
    // explicit certificates override the built-in defaults
    auto gamma = doc.get("perturbation", "gamma");
    auto mu = doc.get("perturbation", "mu");
    auto order = doc.get("perturbation", "r");
    const double g = gamma ? scn::as_number(*gamma, "gamma") : pert.lipschitz();
    const double m = mu ? scn::as_number(*mu, "mu") : pert.bound();
    const int r = order ? static_cast<int>(scn::as_number(*order, "r"))
                        : pert.smoothness_order();
    Perturbation::JacobianFn jac;
    if (pert.has_analytic_jacobian()) {
      const Perturbation inner = pert;
      jac = [inner](double t, const Vec& y) { return inner.jacobian(t, y); };
    }
    const Perturbation inner = pert;
    pert = Perturbation([inner](double t, const Vec& y) { return inner.f(t, y); },
                        g, m, r, std::move(jac));
  }

  Scenario out{
      doc.get("scenario", "name")
          ? [&] {
              auto v = *doc.get("scenario", "name");
              return v.kind == ValueNode::Kind::text ? v.name : v.name;
            }()
          : "unnamed",
      std::move(linear),
      std::move(pert),
      IntegratorConfig{},
      Tolerances{},
      50.0,
      ProbeSpec{},
      Mat::Identity(lin.dim, lin.dim),
      1.0,
      1.0,
      false,
      false,
      Vec::Zero(lin.dim),
      std::string{}};

  if (auto v = doc.get("constants", "t_max"))
    out.t_max = scn::as_number(*v, "t_max");

  if (const auto* tols = doc.find("tolerances")) {
    for (const auto& [key, v] : *tols) {
      const double x = scn::as_number(v, key.c_str());
      if (key == "rtol") out.cfg.rtol = x;
      else if (key == "atol") out.cfg.atol = x;
      else if (key == "h_max") out.cfg.h_max = x;
      else if (key == "max_steps") out.cfg.max_steps = static_cast<std::int64_t>(x);
      else if (key == "eps_cert") out.tol.eps_cert = x;
      else if (key == "tau_uas") out.tol.tau_uas = x;
      else if (key == "tau_num") out.tol.tau_num = x;
      else if (key == "tau_fd") out.tol.tau_fd = x;
      else if (key == "tol_fix") out.tol.tol_fix = x;
      else if (key == "tau_equiv") out.tol.tau_equiv = x;
      else if (key == "tau_inv") out.tol.tau_inv = x;
      else if (key == "tau_conj") out.tol.tau_conj = x;
      else if (key == "tau_rel") out.tol.tau_rel = x;
      else if (key == "tau_jac") out.tol.tau_jac = x;
      else if (key == "tau_eq") out.tol.tau_eq = x;
      else if (key == "tau_lyap") out.tol.tau_lyap = x;
      else if (key == "tol_tail") out.tol.tol_tail = x;
      else if (key == "quad_tol") out.tol.quad_tol = x;
      else
        throw ParseError("scenario: unknown tolerance '" + key + "'", v.line,
                         v.col);
    }
  }
  if (const char* scale_env = std::getenv("CONJLAB_TOL_SCALE")) {
    const double scale = std::atof(scale_env);
    if (scale > 0.0) out.tol = out.tol.scaled(scale);
  }

  out.probes.equilibrium_guess = Vec::Zero(lin.dim);
  if (const auto* probes = doc.find("probes")) {
    for (const auto& [key, v] : *probes) {
      if (key == "times") {
        out.probes.times.clear();
        for (const auto& item : v.items)
          out.probes.times.push_back(scn::as_number(item, "times"));
      } else if (key == "equiv_times") {
        out.probes.equiv_times.clear();
        for (const auto& item : v.items)
          out.probes.equiv_times.push_back(scn::as_number(item, "equiv_times"));
      } else if (key == "states") {
        out.probes.states.clear();
        for (const auto& item : v.items) {
          Vec s = scn::as_vector(item, "state");
          if (s.size() != lin.dim)
            throw ParseError("scenario: probe state dimension mismatch",
                             item.line, item.col);
          out.probes.states.push_back(std::move(s));
        }
      } else if (key == "n_random") {
        out.probes.n_random = static_cast<int>(scn::as_number(v, "n_random"));
      } else if (key == "box") {
        out.probes.box = scn::as_number(v, "box");
      } else if (key == "equilibrium_guess") {
        Vec g = scn::as_vector(v, "equilibrium_guess");
        if (g.size() != lin.dim)
          throw ParseError("scenario: guess dimension mismatch", v.line, v.col);
        out.probes.equilibrium_guess = std::move(g);
      } else {
        throw ParseError("scenario: unknown probe key '" + key + "'", v.line,
                         v.col);
      }
    }
  }

  if (auto v = doc.get("lyapunov", "Q")) {
    if (v->kind == ValueNode::Kind::number)
      out.lyapunov_Q = v->num * Mat::Identity(lin.dim, lin.dim);
    else
      out.lyapunov_Q = scn::as_matrix(*v, "Q");
    if (out.lyapunov_Q.rows() != lin.dim)
      throw ParseError("scenario: Q dimension mismatch", v->line, v->col);
    Eigen::SelfAdjointEigenSolver<Mat> es(
        0.5 * (out.lyapunov_Q + out.lyapunov_Q.transpose()));
    out.q_minus = es.eigenvalues().minCoeff();
    out.q_plus = es.eigenvalues().maxCoeff();
  }
  if (auto v = doc.get("lyapunov", "q_minus"))
    out.q_minus = scn::as_number(*v, "q_minus");
  if (auto v = doc.get("lyapunov", "q_plus"))
    out.q_plus = scn::as_number(*v, "q_plus");

  if (auto v = doc.get("expected", "equilibrium")) {
    if (v->kind == ValueNode::Kind::ident && v->name == "none") {
      out.expects_no_equilibrium = true;
    } else {
      out.expects_equilibrium = true;
      out.expected_equilibrium = scn::as_vector(*v, "equilibrium");
    }
  }
  if (auto v = doc.get("expected", "golden")) {
    if (v->kind != ValueNode::Kind::text)
      throw ParseError("scenario: golden must be a quoted path", v->line,
                       v->col);
    out.golden_path = v->name;
  }

  // Certificate sampling at load: echo the violated inequality on failure.
  {
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(out.t_max * i / 100.0);
    for (const auto& e : out.linear.verify_sup_bound(grid, out.tol.eps_cert))
      if (!e.pass)
        throw CertificateRejected(
            "scenario: sampled sup ||A(t)|| = " + std::to_string(e.measured) +
            " exceeds M(1+eps) = " + std::to_string(e.bound));
    for (const auto& e : out.pert.verify(lin.dim, out.t_max, seed, out.tol))
      if (!e.pass)
        throw CertificateRejected("scenario: perturbation certificate '" +
                                  e.check_id + "' fails: measured " +
                                  std::to_string(e.measured) + " > bound " +
                                  std::to_string(e.bound));
  }
  out.make_problem();  // validates K gamma / alpha < 1 and friends
  return out;
}

inline Scenario load_scenario_file(const std::string& path,
                                   std::uint64_t seed = 0x5EED) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = load_scenario(buf.str(), seed);
  if (s.name == "unnamed") {
    // derive a name from the file stem
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos)
      stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos)
      stem = stem.substr(0, dot);
    s.name = stem;
  }
  return s;
}

}  // namespace conjlab
