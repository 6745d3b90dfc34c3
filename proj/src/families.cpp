#include "mlb/families.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "mlb/error.hpp"
#include "mlb/lshaped.hpp"

namespace mlb {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<double> random_binary(std::mt19937_64& rng, int n) {
  std::vector<double> x(n);
  std::bernoulli_distribution coin(0.5);
  for (auto& v : x) v = coin(rng) ? 1.0 : 0.0;
  return x;
}

// Runs make(i) for i in [0, n) on `jobs` threads; results keep index order.
Dataset fill_dataset(Dataset data, int n, int jobs, const std::function<LabeledExample(int)>& make) {
  if (n < 1) throw PreconditionError("number of examples must be >= 1");
  std::vector<LabeledExample> out(n);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = make(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& ex : out) data.add(std::move(ex));
  return data;
}

std::vector<double> draw_capacities(const SSLPParams& p, std::mt19937_64& rng) {
  std::vector<double> caps(p.a);
  for (auto& u : caps) u = uniform_int(rng, p.capacity_min, p.capacity_max);
  return caps;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SSLPParams::validate() const {
  if (a < 1 || b < 1 || c < 1) throw PreconditionError("SSLP needs a, b, c >= 1");
  if (capacity_min > capacity_max || capacity_min < 0) throw PreconditionError("SSLP capacity range is empty");
  if (cost_min > cost_max || revenue_min > revenue_max || demand_min > demand_max) {
    throw PreconditionError("SSLP cost, revenue or demand range is empty");
  }
  if (!(presence >= 0.0 && presence <= 1.0)) throw PreconditionError("SSLP presence must be a probability");
  if (!(overflow_penalty >= 0.0)) throw PreconditionError("SSLP overflow penalty must be nonnegative");
}

void SMKPParams::validate() const {
  if (n1 < 1 || m1 < 0 || n2 < 1 || m < 1 || c < 1) throw PreconditionError("SMKP dimensions must be positive");
  if (T_min > T_max || T_min < 0) throw PreconditionError("SMKP T range must be nonempty and nonnegative");
  if (W_min > W_max || W_min < 1) throw PreconditionError("SMKP W range must be nonempty and positive");
  if (A_min > A_max || cost_min > cost_max || q_min > q_max) throw PreconditionError("SMKP range is empty");
  if (!(T_density > 0.0 && T_density <= 1.0)) throw PreconditionError("SMKP T density must lie in (0, 1]");
  if (!(rhs_slack_factor > 0.5 && rhs_slack_factor < 1.0)) {
    throw PreconditionError("SMKP rhs_slack_factor must lie in (0.5, 1)");
  }
}

#define MLB_FIELD(name) j[#name] = p.name
void to_json(nlohmann::json& j, const SSLPParams& p) {
  j = nlohmann::json::object();
  MLB_FIELD(a); MLB_FIELD(b); MLB_FIELD(c);
  MLB_FIELD(capacity_min); MLB_FIELD(capacity_max);
  MLB_FIELD(cost_min); MLB_FIELD(cost_max);
  MLB_FIELD(revenue_min); MLB_FIELD(revenue_max);
  MLB_FIELD(demand_min); MLB_FIELD(demand_max);
  MLB_FIELD(presence); MLB_FIELD(overflow_penalty); MLB_FIELD(family_seed);
}

void to_json(nlohmann::json& j, const SMKPParams& p) {
  j = nlohmann::json::object();
  MLB_FIELD(n1); MLB_FIELD(m1); MLB_FIELD(n2); MLB_FIELD(m); MLB_FIELD(c);
  MLB_FIELD(T_min); MLB_FIELD(T_max); MLB_FIELD(T_density);
  MLB_FIELD(W_min); MLB_FIELD(W_max); MLB_FIELD(A_min); MLB_FIELD(A_max);
  MLB_FIELD(cost_min); MLB_FIELD(cost_max); MLB_FIELD(q_min); MLB_FIELD(q_max);
  MLB_FIELD(rhs_slack_factor); MLB_FIELD(family_seed);
}
#undef MLB_FIELD

#define MLB_FIELD(name) if (j.contains(#name)) j.at(#name).get_to(p.name)
void from_json(const nlohmann::json& j, SSLPParams& p) {
  MLB_FIELD(a); MLB_FIELD(b); MLB_FIELD(c);
  MLB_FIELD(capacity_min); MLB_FIELD(capacity_max);
  MLB_FIELD(cost_min); MLB_FIELD(cost_max);
  MLB_FIELD(revenue_min); MLB_FIELD(revenue_max);
  MLB_FIELD(demand_min); MLB_FIELD(demand_max);
  MLB_FIELD(presence); MLB_FIELD(overflow_penalty); MLB_FIELD(family_seed);
}

void from_json(const nlohmann::json& j, SMKPParams& p) {
  MLB_FIELD(n1); MLB_FIELD(m1); MLB_FIELD(n2); MLB_FIELD(m); MLB_FIELD(c);
  MLB_FIELD(T_min); MLB_FIELD(T_max); MLB_FIELD(T_density);
  MLB_FIELD(W_min); MLB_FIELD(W_max); MLB_FIELD(A_min); MLB_FIELD(A_max);
  MLB_FIELD(cost_min); MLB_FIELD(cost_max); MLB_FIELD(q_min); MLB_FIELD(q_max);
  MLB_FIELD(rhs_slack_factor); MLB_FIELD(family_seed);
}
#undef MLB_FIELD

TwoStageProblem gen_sslp_instance(const SSLPParams& p, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 base(p.family_seed);
  TwoStageProblem prob;
  prob.n_x = p.a;
  prob.c.resize(p.a);
  for (auto& v : prob.c) v = uniform_int(base, p.cost_min, p.cost_max);
  prob.A = SparseMatrix(0, p.a);
  prob.C = SparseMatrix(0, 0);
  std::vector<std::vector<double>> demand(p.a, std::vector<double>(p.b));
  std::vector<std::vector<double>> revenue(p.a, std::vector<double>(p.b));
  for (int i = 0; i < p.a; ++i) {
    for (int j = 0; j < p.b; ++j) {
      demand[i][j] = uniform_int(base, p.demand_min, p.demand_max);
      revenue[i][j] = uniform_int(base, p.revenue_min, p.revenue_max);
    }
  }
  std::mt19937_64 inst(seed);
  const auto caps = draw_capacities(p, inst);

  // y_ij at i*b + j, overflow o_i at a*b + i. Rows: per client a >= and a <=
  // row pinning sum_i y_ij to its presence, then one capacity row per server:
  // -sum_j d_ij y_ij + o_i >= -u_i x_i.
  const int ny = p.a * p.b + p.a;
  const int rows = 2 * p.b + p.a;
  Scenario proto;
  proto.q.resize(ny);
  proto.y_domain.resize(ny);
  proto.W = SparseMatrix(rows, ny);
  proto.T = SparseMatrix(rows, p.a);
  for (int i = 0; i < p.a; ++i) {
    for (int j = 0; j < p.b; ++j) {
      const int v = i * p.b + j;
      proto.q[v] = -revenue[i][j];
      proto.y_domain[v] = VarDomain::binary();
      proto.W.add(2 * j, v, 1.0);
      proto.W.add(2 * j + 1, v, -1.0);
      proto.W.add(2 * p.b + i, v, -demand[i][j]);
    }
    const int o = p.a * p.b + i;
    proto.q[o] = p.overflow_penalty;
    proto.y_domain[o] = VarDomain::continuous();
    proto.W.add(2 * p.b + i, o, 1.0);
    proto.T.add(2 * p.b + i, i, caps[i]);
  }
  std::bernoulli_distribution present(p.presence);
  for (int s = 0; s < p.c; ++s) {
    Scenario sc = proto;
    sc.h.assign(rows, 0.0);
    for (int j = 0; j < p.b; ++j) {
      const double h = present(base) ? 1.0 : 0.0;
      sc.h[2 * j] = h;
      sc.h[2 * j + 1] = -h;
    }
    prob.scenarios.push_back(std::move(sc));
  }
  prob.probabilities.assign(p.c, 1.0 / p.c);
  prob.validate();
  return prob;
}

std::vector<double> sslp_capacities(const TwoStageProblem& problem) {
  std::vector<double> caps(problem.n_x, 0.0);
  for (const auto& e : problem.scenarios.at(0).T.entries()) caps.at(e.col) += e.value;
  return caps;
}

TwoStageProblem sslp_with_capacities(const TwoStageProblem& problem, std::span<const double> capacities) {
  if (static_cast<int>(capacities.size()) != problem.n_x) {
    throw StructuralError("one capacity per server expected");
  }
  TwoStageProblem out = problem;
  for (auto& sc : out.scenarios) {
    SparseMatrix T(sc.T.rows(), sc.T.cols());
    for (const auto& e : sc.T.entries()) T.add(e.row, e.col, capacities[e.col]);
    sc.T = std::move(T);
  }
  return out;
}

TwoStageProblem gen_smkp_instance(const SMKPParams& p, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 base(p.family_seed);
  TwoStageProblem prob;
  prob.n_x = p.n1;
  prob.c.resize(p.n1);
  for (auto& v : prob.c) v = uniform_int(base, p.cost_min, p.cost_max);
  // Covering knapsacks sum_j a_ij x_j >= half the row sum, stored as <= rows.
  prob.A = SparseMatrix(p.m1, p.n1);
  prob.C = SparseMatrix(p.m1, 0);
  prob.b.resize(p.m1);
  for (int i = 0; i < p.m1; ++i) {
    double sum = 0.0;
    for (int j = 0; j < p.n1; ++j) {
      const double a = uniform_int(base, p.A_min, p.A_max);
      prob.A.add(i, j, -a);
      sum += a;
    }
    prob.b[i] = -std::ceil(0.5 * sum);
  }
  SparseMatrix W(p.m, p.n2);
  std::vector<double> w_sum(p.m, 0.0);
  for (int i = 0; i < p.m; ++i) {
    for (int j = 0; j < p.n2; ++j) {
      const double w = uniform_int(base, p.W_min, p.W_max);
      W.add(i, j, w);
      w_sum[i] += w;
    }
  }
  std::vector<std::vector<double>> q(p.c, std::vector<double>(p.n2));
  for (auto& qs : q) {
    for (auto& v : qs) v = uniform_int(base, p.q_min, p.q_max);
  }

  std::mt19937_64 inst(seed);
  SparseMatrix T(p.m, p.n1);
  std::bernoulli_distribution keep(p.T_density);
  for (int i = 0; i < p.m; ++i) {
    for (int j = 0; j < p.n1; ++j) {
      const double t = uniform_int(inst, p.T_min, p.T_max);
      if (keep(inst)) T.add(i, j, t);
    }
  }
  std::uniform_real_distribution<double> slack(0.5, p.rhs_slack_factor);
  std::vector<double> h(p.m);
  for (int i = 0; i < p.m; ++i) h[i] = slack(inst) * w_sum[i];

  for (int s = 0; s < p.c; ++s) {
    Scenario sc;
    sc.q = q[s];
    sc.W = W;
    sc.T = T;
    sc.h = h;
    sc.y_domain.assign(p.n2, VarDomain::binary());
    prob.scenarios.push_back(std::move(sc));
  }
  prob.probabilities.assign(p.c, 1.0 / p.c);
  prob.validate();
  return prob;
}

Featurizer sslp_featurizer(const TwoStageProblem& problem) {
  return [caps = sslp_capacities(problem)](std::span<const double> x) { return featurize_sslp(caps, x); };
}

Featurizer smkp_featurizer(const TwoStageProblem& problem) {
  const Scenario& sc = problem.scenarios.at(0);
  SparseMatrix neg_T(sc.T.rows(), sc.T.cols());
  for (const auto& e : sc.T.entries()) neg_T.add(e.row, e.col, -e.value);
  return [h = sc.h, neg_T = std::move(neg_T)](std::span<const double> x) { return featurize_smkp(h, neg_T, x); };
}

Labeling labeling_from_string(const std::string& name) {
  if (name == "full") return Labeling::Full;
  if (name == "implicit") return Labeling::Implicit;
  throw PreconditionError("unknown labeling '" + name + "' (expected full or implicit)");
}

Dataset gen_examples(const SSLPParams& p, int n, Labeling labeling, std::uint64_t seed, int jobs) {
  const TwoStageProblem base = gen_sslp_instance(p, seed);
  Dataset data;
  data.feature_len = 2 * p.a;
  data.label_len = 1;
  data.scaled.assign(data.feature_len, false);
  for (int i = 0; i < p.a; ++i) data.scaled[i] = true;
  return fill_dataset(std::move(data), n, jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const auto caps = draw_capacities(p, rng);
    const auto x = random_binary(rng, p.a);
    const TwoStageProblem prob = sslp_with_capacities(base, caps);
    LabeledExample ex;
    ex.features = featurize_sslp(caps, x);
    if (labeling == Labeling::Full) {
      ex.label = {evaluate_Q(prob, x)};
    } else {
      ex.label = {evaluate_scenario(prob, uniform_int(rng, 0, p.c - 1), x)};
    }
    return ex;
  });
}

Dataset gen_examples(const SMKPParams& p, int n, Labeling labeling, std::uint64_t seed, int jobs) {
  p.validate();
  Dataset data;
  data.feature_len = p.m;
  data.label_len = 1;
  data.scaled.assign(p.m, true);
  return fill_dataset(std::move(data), n, jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const TwoStageProblem prob = gen_smkp_instance(p, rng());
    const auto x = random_binary(rng, p.n1);
    LabeledExample ex;
    ex.features = smkp_featurizer(prob)(x);
    if (labeling == Labeling::Full) {
      ex.label = {evaluate_Q(prob, x)};
    } else {
      ex.label = {evaluate_scenario(prob, uniform_int(rng, 0, p.c - 1), x)};
    }
    return ex;
  });
}

Dataset gen_examples_relaxed(const SSLPParams& p, int n, std::uint64_t seed, int jobs) {
  const TwoStageProblem base = gen_sslp_instance(p, seed);
  Dataset data;
  data.feature_len = 2 * p.a;
  data.label_len = relaxed_label_len(base);
  data.scaled.assign(data.feature_len, false);
  for (int i = 0; i < p.a; ++i) data.scaled[i] = true;
  return fill_dataset(std::move(data), n, jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const auto caps = draw_capacities(p, rng);
    const auto x = random_binary(rng, p.a);
    const TwoStageProblem prob = sslp_with_capacities(base, caps);
    return LabeledExample{featurize_sslp(caps, x), relaxed_label(prob, evaluate_Q_relaxed(prob, x))};
  });
}

Dataset gen_examples_relaxed(const SMKPParams& p, int n, std::uint64_t seed, int jobs) {
  p.validate();
  Dataset data;
  data.feature_len = p.m;
  data.label_len = p.m + 2;
  data.scaled.assign(p.m, true);
  return fill_dataset(std::move(data), n, jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const TwoStageProblem prob = gen_smkp_instance(p, rng());
    const auto x = random_binary(rng, p.n1);
    return LabeledExample{smkp_featurizer(prob)(x), relaxed_label(prob, evaluate_Q_relaxed(prob, x))};
  });
}

}  // namespace mlb
