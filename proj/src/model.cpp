#include "mlb/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "mlb/error.hpp"
#include "mlb/simplex.hpp"

namespace mlb {

using nlohmann::json;

// ---------------------------------------------------------------------------
// SparseMatrix

void SparseMatrix::add(int row, int col, double value) {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw StructuralError("sparse entry (" + std::to_string(row) + ", " + std::to_string(col) +
                          ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  entries_.push_back({row, col, value});
}

void SparseMatrix::resize(int rows, int cols) {
  for (const auto& e : entries_) {
    if (e.row >= rows || e.col >= cols) throw StructuralError("resize would drop entries");
  }
  rows_ = rows;
  cols_ = cols;
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cols_) throw StructuralError("multiply: length mismatch");
  std::vector<double> out(rows_, 0.0);
  for (const auto& e : entries_) out[e.row] += e.value * x[e.col];
  return out;
}

std::vector<double> SparseMatrix::left_multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != rows_) throw StructuralError("left_multiply: length mismatch");
  std::vector<double> out(cols_, 0.0);
  for (const auto& e : entries_) out[e.col] += e.value * x[e.row];
  return out;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_, 0.0));
  for (const auto& e : entries_) out[e.row][e.col] += e.value;
  return out;
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  const int rows = static_cast<int>(dense.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(dense.front().size());
  SparseMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(dense[r].size()) != cols) throw StructuralError("ragged dense matrix");
    for (int c = 0; c < cols; ++c) {
      if (dense[r][c] != 0.0) m.add(r, c, dense[r][c]);
    }
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.add(i, i, 1.0);
  return m;
}

bool SparseMatrix::operator==(const SparseMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && to_dense() == other.to_dense();
}

// ---------------------------------------------------------------------------
// TwoStageProblem

void TwoStageProblem::validate() const {
  if (n_x < 0) throw StructuralError("n_x must be nonnegative");
  if (static_cast<int>(c.size()) != n_x) throw StructuralError("length of c differs from n_x");
  const int p = num_z();
  if (static_cast<int>(z_domain.size()) != p) throw StructuralError("z_domain length differs from d");
  const int m1 = num_first_stage_rows();
  if (A.rows() != m1 || A.cols() != n_x) throw StructuralError("A must be |b| x n_x");
  if (C.rows() != m1 || C.cols() != p) throw StructuralError("C must be |b| x |d|");
  for (const auto& dom : z_domain) {
    if (dom.integer && !(std::isfinite(dom.lower) && std::isfinite(dom.upper))) {
      throw StructuralError("integer z variables need finite bounds");
    }
  }
  if (scenarios.empty()) throw StructuralError("problem has no scenarios");
  if (probabilities.size() != scenarios.size()) {
    throw StructuralError("one probability per scenario required");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    if (!(probabilities[s] > 0.0)) {
      throw StructuralError("scenario " + std::to_string(s) + ": probability must be positive");
    }
    total += probabilities[s];
  }
  if (std::abs(total - 1.0) > 1e-12) throw StructuralError("scenario probabilities must sum to 1");

  const int m2 = scenarios.front().num_rows();
  const int n2 = scenarios.front().num_y();
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const Scenario& sc = scenarios[s];
    const std::string tag = "scenario " + std::to_string(s) + ": ";
    if (sc.num_rows() != m2 || sc.num_y() != n2) {
      throw StructuralError(tag + "dimensions differ from scenario 0");
    }
    if (sc.W.rows() != m2 || sc.W.cols() != n2) throw StructuralError(tag + "W must be |h| x |q|");
    if (sc.T.rows() != m2 || sc.T.cols() != n_x) throw StructuralError(tag + "T must be |h| x n_x");
    if (static_cast<int>(sc.y_domain.size()) != n2) throw StructuralError(tag + "y_domain length differs from q");
    for (const auto& dom : sc.y_domain) {
      if (dom.integer && !(std::isfinite(dom.lower) && std::isfinite(dom.upper))) {
        throw StructuralError(tag + "integer y variables need finite bounds");
      }
    }
  }
}

bool TwoStageProblem::deterministic_h_and_T() const {
  for (std::size_t s = 1; s < scenarios.size(); ++s) {
    if (scenarios[s].h != scenarios[0].h) return false;
    if (!(scenarios[s].T == scenarios[0].T)) return false;
  }
  return true;
}

double TwoStageProblem::first_stage_cost(std::span<const double> x, std::span<const double> z) const {
  double v = 0.0;
  for (int i = 0; i < n_x; ++i) v += c[i] * x[i];
  for (int k = 0; k < num_z(); ++k) v += d[k] * z[k];
  return v;
}

// ---------------------------------------------------------------------------
// MixedModel

int MixedModel::add_variable(double cost, VarDomain domain) {
  objective.push_back(cost);
  domains.push_back(domain);
  if (!priority.empty()) priority.push_back(0);
  matrix.resize(matrix.rows(), static_cast<int>(objective.size()));
  return static_cast<int>(objective.size()) - 1;
}

int MixedModel::add_row(std::span<const std::pair<int, double>> coeffs, RowSense sense, double rhs_value) {
  const int r = num_rows();
  matrix.resize(r + 1, num_vars());
  for (const auto& [col, v] : coeffs) matrix.add(r, col, v);
  senses.push_back(sense);
  rhs.push_back(rhs_value);
  return r;
}

void MixedModel::validate() const {
  if (static_cast<int>(domains.size()) != num_vars()) throw StructuralError("one domain per variable required");
  if (matrix.cols() != num_vars() || matrix.rows() != num_rows()) {
    throw StructuralError("constraint matrix shape mismatch");
  }
  if (senses.size() != rhs.size()) throw StructuralError("one sense per row required");
  if (!priority.empty() && static_cast<int>(priority.size()) != num_vars()) {
    throw StructuralError("one branching priority per variable required");
  }
  for (const auto& dom : domains) {
    if (dom.integer && !(std::isfinite(dom.lower) && std::isfinite(dom.upper))) {
      throw StructuralError("integer variable with infinite bound");
    }
    if (dom.lower > dom.upper) throw StructuralError("variable with empty domain");
  }
}

double MixedModel::evaluate(std::span<const double> values) const {
  double v = objective_offset;
  for (int j = 0; j < num_vars(); ++j) v += objective[j] * values[j];
  return v;
}

double MixedModel::max_violation(std::span<const double> values) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, domains[j].lower - values[j]);
    worst = std::max(worst, values[j] - domains[j].upper);
  }
  const auto act = matrix.multiply(values);
  for (int r = 0; r < num_rows(); ++r) {
    switch (senses[r]) {
      case RowSense::GreaterEqual: worst = std::max(worst, rhs[r] - act[r]); break;
      case RowSense::LessEqual: worst = std::max(worst, act[r] - rhs[r]); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(act[r] - rhs[r])); break;
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Model construction

MixedModel build_extensive_form(const TwoStageProblem& problem) {
  problem.validate();
  const int n = problem.n_x;
  const int p = problem.num_z();
  const int n2 = problem.scenarios.front().num_y();
  const int m1 = problem.num_first_stage_rows();
  const int m2 = problem.scenarios.front().num_rows();
  const int S = problem.num_scenarios();
  const int total_vars = n + p + S * n2;
  const int total_rows = m1 + S * m2;

  MixedModel model;
  model.objective.reserve(total_vars);
  model.domains.reserve(total_vars);
  for (int i = 0; i < n; ++i) {
    model.objective.push_back(problem.c[i]);
    model.domains.push_back(VarDomain::binary());
  }
  for (int k = 0; k < p; ++k) {
    model.objective.push_back(problem.d[k]);
    model.domains.push_back(problem.z_domain[k]);
  }
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = problem.scenarios[s];
    for (int j = 0; j < n2; ++j) {
      model.objective.push_back(problem.probabilities[s] * sc.q[j]);
      model.domains.push_back(sc.y_domain[j]);
    }
  }

  // Once x is fixed the scenario blocks decouple, so branch on x first.
  model.priority.assign(total_vars, 0);
  std::fill(model.priority.begin(), model.priority.begin() + n, 1);

  model.matrix = SparseMatrix(total_rows, total_vars);
  for (const auto& e : problem.A.entries()) model.matrix.add(e.row, e.col, e.value);
  for (const auto& e : problem.C.entries()) model.matrix.add(e.row, n + e.col, e.value);
  model.senses.assign(m1, RowSense::LessEqual);
  model.rhs = problem.b;
  for (int s = 0; s < S; ++s) {
    const Scenario& sc = problem.scenarios[s];
    const int row0 = m1 + s * m2;
    const int col0 = n + p + s * n2;
    for (const auto& e : sc.T.entries()) model.matrix.add(row0 + e.row, e.col, e.value);
    for (const auto& e : sc.W.entries()) model.matrix.add(row0 + e.row, col0 + e.col, e.value);
    for (int r = 0; r < m2; ++r) {
      model.senses.push_back(RowSense::GreaterEqual);
      model.rhs.push_back(sc.h[r]);
    }
  }
  return model;
}

double extensive_objective(const TwoStageProblem& problem, std::span<const double> x,
                           std::span<const double> z, const std::vector<std::vector<double>>& y) {
  double v = problem.first_stage_cost(x, z);
  for (int s = 0; s < problem.num_scenarios(); ++s) {
    double qs = 0.0;
    const auto& q = problem.scenarios[s].q;
    for (std::size_t j = 0; j < q.size(); ++j) qs += q[j] * y[s][j];
    v += problem.probabilities[s] * qs;
  }
  return v;
}

std::vector<double> scenario_rhs(const Scenario& scenario, std::span<const double> x) {
  std::vector<double> rhs = scenario.h;
  for (const auto& e : scenario.T.entries()) rhs[e.row] -= e.value * x[e.col];
  return rhs;
}

MixedModel build_scenario_model(const Scenario& scenario, std::span<const double> x, bool relax) {
  if (static_cast<int>(x.size()) != scenario.T.cols()) {
    throw StructuralError("scenario model: x has length " + std::to_string(x.size()) + ", expected " +
                          std::to_string(scenario.T.cols()));
  }
  MixedModel model;
  model.objective = scenario.q;
  model.domains = scenario.y_domain;
  if (relax) {
    for (auto& dom : model.domains) dom.integer = false;
  }
  model.matrix = scenario.W;
  model.rhs = scenario_rhs(scenario, x);
  model.senses.assign(model.rhs.size(), RowSense::GreaterEqual);
  return model;
}

RecourseReport check_relatively_complete_recourse(const TwoStageProblem& problem, int samples,
                                                  std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("check_relatively_complete_recourse: samples must be >= 1");
  problem.validate();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  RecourseReport report;
  std::vector<double> x(problem.n_x);
  for (int k = 0; k < samples; ++k) {
    for (auto& xi : x) xi = coin(rng) ? 1.0 : 0.0;
    ++report.samples_checked;
    for (int s = 0; s < problem.num_scenarios(); ++s) {
      const LPSolution sol = solve_lp(build_scenario_model(problem.scenarios[s], x, true));
      if (sol.status == LpStatus::Infeasible) {
        report.complete = false;
        report.violating_x = x;
        report.violating_scenario = s;
        return report;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON instance files

namespace {

double number(const json& v) {
  if (v.is_string()) return std::stod(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw StructuralError("expected a number or decimal string");
}

std::vector<double> vector_from(const json& v) {
  std::vector<double> out;
  if (v.is_null()) return out;
  if (!v.is_array()) throw StructuralError("expected an array");
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(number(e));
  return out;
}

SparseMatrix matrix_from(const json& v, int rows, int cols) {
  SparseMatrix m(rows, cols);
  if (v.is_null()) return m;
  if (!v.is_array()) throw StructuralError("matrix must be a triplet list");
  for (const auto& t : v) {
    if (!t.is_array() || t.size() != 3) throw StructuralError("matrix triplet must be [row, col, val]");
    m.add(t[0].get<int>(), t[1].get<int>(), number(t[2]));
  }
  return m;
}

json matrix_to(const SparseMatrix& m) {
  json out = json::array();
  for (const auto& e : m.entries()) out.push_back({e.row, e.col, e.value});
  return out;
}

VarDomain domain_from(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "binary") return VarDomain::binary();
    if (s == "continuous") return VarDomain::continuous();
    if (s == "integer") throw StructuralError("integer domain needs an explicit upper bound");
    throw StructuralError("unknown domain '" + s + "'");
  }
  if (v.is_object()) {
    VarDomain d;
    d.lower = v.contains("lb") ? number(v["lb"]) : 0.0;
    d.upper = v.contains("ub") && !v["ub"].is_null() ? number(v["ub"]) : kInf;
    d.integer = v.value("integer", false);
    return d;
  }
  throw StructuralError("domain must be a string or object");
}

json domain_to(const VarDomain& d) {
  if (d == VarDomain::binary()) return "binary";
  if (d == VarDomain::continuous()) return "continuous";
  json o = {{"lb", d.lower}, {"integer", d.integer}};
  o["ub"] = std::isfinite(d.upper) ? json(d.upper) : json(nullptr);
  return o;
}

std::vector<VarDomain> domains_from(const json& v, std::size_t n) {
  std::vector<VarDomain> out;
  if (v.is_null()) {
    out.assign(n, VarDomain::continuous());
  } else if (v.is_string() || v.is_object()) {
    out.assign(n, domain_from(v));
  } else {
    for (const auto& e : v) out.push_back(domain_from(e));
  }
  return out;
}

}  // namespace

TwoStageProblem problem_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("instance file is not valid JSON: ") + e.what());
  }
  TwoStageProblem p;
  try {
    p.n_x = doc.at("n_x").get<int>();
    p.c = vector_from(doc.at("c"));
    p.d = vector_from(doc.value("d", json::array()));
    p.b = vector_from(doc.value("b", json::array()));
    const int m1 = static_cast<int>(p.b.size());
    p.A = matrix_from(doc.value("A", json::array()), m1, p.n_x);
    p.C = matrix_from(doc.value("C", json::array()), m1, static_cast<int>(p.d.size()));
    p.z_domain = domains_from(doc.value("z_domain", json(nullptr)), p.d.size());
    const auto& scen = doc.at("scenarios");
    for (const auto& s : scen) {
      Scenario sc;
      sc.q = vector_from(s.at("q"));
      sc.h = vector_from(s.at("h"));
      sc.W = matrix_from(s.at("W"), static_cast<int>(sc.h.size()), static_cast<int>(sc.q.size()));
      sc.T = matrix_from(s.value("T", json::array()), static_cast<int>(sc.h.size()), p.n_x);
      sc.y_domain = domains_from(s.value("y_domain", json(nullptr)), sc.q.size());
      p.probabilities.push_back(s.contains("prob") ? number(s["prob"]) : -1.0);
      p.scenarios.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed instance file: ") + e.what());
  }
  // Missing probabilities default to equiprobable.
  const bool any_missing = std::any_of(p.probabilities.begin(), p.probabilities.end(),
                                       [](double v) { return v < 0.0; });
  if (any_missing && !p.scenarios.empty()) {
    p.probabilities.assign(p.scenarios.size(), 1.0 / static_cast<double>(p.scenarios.size()));
  }
  p.validate();
  return p;
}

std::string problem_to_json_string(const TwoStageProblem& p) {
  json doc;
  doc["n_x"] = p.n_x;
  doc["c"] = p.c;
  doc["d"] = p.d;
  doc["A"] = matrix_to(p.A);
  doc["C"] = matrix_to(p.C);
  doc["b"] = p.b;
  doc["z_domain"] = json::array();
  for (const auto& dz : p.z_domain) doc["z_domain"].push_back(domain_to(dz));
  doc["scenarios"] = json::array();
  for (int s = 0; s < p.num_scenarios(); ++s) {
    const Scenario& sc = p.scenarios[s];
    json js;
    js["prob"] = p.probabilities[s];
    js["q"] = sc.q;
    js["W"] = matrix_to(sc.W);
    js["T"] = matrix_to(sc.T);
    js["h"] = sc.h;
    js["y_domain"] = json::array();
    for (const auto& dy : sc.y_domain) js["y_domain"].push_back(domain_to(dy));
    doc["scenarios"].push_back(std::move(js));
  }
  return doc.dump();
}

TwoStageProblem read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_json_string(ss.str());
}

void write_problem(const TwoStageProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file " + path);
  out << problem_to_json_string(problem) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace mlb
