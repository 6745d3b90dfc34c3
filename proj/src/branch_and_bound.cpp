#include "mlb/branch_and_bound.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "mlb/error.hpp"
#include "mlb/simplex.hpp"

namespace mlb {

const char* to_string(MipStatus status) {
  switch (status) {
    case MipStatus::Optimal: return "optimal";
    case MipStatus::Infeasible: return "infeasible";
    case MipStatus::FeasibleLimit: return "feasible-limit";
    case MipStatus::NoSolutionLimit: return "no-solution-limit";
    case MipStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

double LazyCut::violation(std::span<const double> values) const {
  double act = 0.0;
  for (const auto& [j, v] : coeffs) act += v * values[j];
  switch (sense) {
    case RowSense::GreaterEqual: return rhs - act;
    case RowSense::LessEqual: return act - rhs;
    case RowSense::Equal: return std::abs(act - rhs);
  }
  return 0.0;
}

namespace {

struct BoundChange {
  int var;
  double lower;
  double upper;
};

struct Node {
  long id;
  double bound;
  std::vector<BoundChange> changes;  // cumulative from the root
  Basis basis;
  // Branching that created the node, for pseudo-cost updates.
  int branch_var = -1;
  bool up = false;
  double distance = 0.0;  // change in the branched variable's value
};

// Average objective gain per unit change, per variable and direction.
class PseudoCosts {
 public:
  explicit PseudoCosts(int n) : sum_{std::vector<double>(n), std::vector<double>(n)}, count_{std::vector<int>(n), std::vector<int>(n)} {}

  void record(int var, bool up, double distance, double gain) {
    if (distance <= 1e-9) return;
    sum_[up][var] += std::max(0.0, gain) / distance;
    ++count_[up][var];
    total_[up] += std::max(0.0, gain) / distance;
    ++total_count_[up];
  }

  // Uninitialized entries take the average over the initialized ones.
  double get(int var, bool up) const {
    if (count_[up][var] > 0) return sum_[up][var] / count_[up][var];
    return total_count_[up] > 0 ? total_[up] / total_count_[up] : 1.0;
  }

 private:
  std::vector<double> sum_[2];
  std::vector<int> count_[2];
  double total_[2] = {0.0, 0.0};
  long total_count_[2] = {0, 0};
};

// Open nodes, retrievable by best bound or by recency (depth-first dive).
class NodePool {
 public:
  bool empty() const { return nodes_.empty(); }
  void push(Node node) {
    by_bound_.emplace(node.bound, node.id);
    const long id = node.id;
    nodes_.emplace(id, std::move(node));
  }
  Node pop_best() { return take(by_bound_.begin()->second); }
  Node pop_newest() { return take(nodes_.rbegin()->first); }
  double newest_bound() const { return nodes_.rbegin()->second.bound; }
  long newest_id() const { return nodes_.rbegin()->first; }
  double min_bound() const { return by_bound_.empty() ? kInf : by_bound_.begin()->first; }

 private:
  Node take(long id) {
    auto it = nodes_.find(id);
    Node node = std::move(it->second);
    nodes_.erase(it);
    by_bound_.erase({node.bound, id});
    return node;
  }
  std::map<long, Node> nodes_;
  std::set<std::pair<double, long>> by_bound_;
};

// Separation threshold for callback cuts.
constexpr double kSeparationTol = 1e-6;

class Tree {
 public:
  Tree(const MixedModel& model, const IntegralCallback* callback, MipLimits limits)
      : model_(model), callback_(callback), limits_(limits), solver_(model), pseudo_(model.num_vars()) {
    for (int j = 0; j < model.num_vars(); ++j) {
      if (model.domains[j].integer) integers_.push_back(j);
    }
    objective_step_ = objective_step(model);
    decompose_ = callback == nullptr && !model.priority.empty();
    if (decompose_) {
      row_entries_.resize(model.num_rows());
      for (const auto& e : model.matrix.entries()) row_entries_[e.row].emplace_back(e.col, e.value);
    }
  }

  void seed_incumbent(const WarmStart& ws) {
    if (static_cast<int>(ws.values.size()) != model_.num_vars()) {
      throw PreconditionError("warm start has wrong length");
    }
    incumbent_ = ws.values;
    upper_bound_ = ws.objective;
  }

  MIPSolution run() {
    const auto start = std::chrono::steady_clock::now();
    NodePool open;
    auto push = [&](Node node) { open.push(std::move(node)); };
    push(Node{next_id_++, -kInf, {}, {}, -1, false, 0.0});

    MIPSolution out;
    bool limit_hit = false;
    while (!open.empty()) {
      if (out.node_count >= limits_.node_limit) {
        limit_hit = true;
        break;
      }
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > limits_.time_limit_seconds) {
        limit_hit = true;
        break;
      }
      // Depth-first until an incumbent exists; afterwards keep plunging into
      // the last node's children while they lie in the lower half of the gap.
      const bool plunge = incumbent_.empty() ||
                          (open.newest_id() >= children_from_ &&
                           open.newest_bound() <= open.min_bound() + 0.5 * (upper_bound_ - open.min_bound()));
      Node node = plunge ? open.pop_newest() : open.pop_best();
      children_from_ = next_id_;
      if (dominated(node.bound)) continue;
      if (!apply(node)) continue;
      ++out.node_count;
      process(node, push, out);
      if (unbounded_) {
        out.status = MipStatus::Unbounded;
        return out;
      }
    }

    out.lp_iterations = solver_.total_iterations();
    out.callback_stats = stats_;
    out.best_bound = upper_bound_;
    if (limit_hit) {
      out.best_bound = std::min(out.best_bound, open.min_bound());
    }
    if (!incumbent_.empty()) {
      out.status = limit_hit ? MipStatus::FeasibleLimit : MipStatus::Optimal;
      out.primal = incumbent_;
      out.objective = upper_bound_;
      if (!limit_hit) out.best_bound = upper_bound_;
    } else {
      out.status = limit_hit ? MipStatus::NoSolutionLimit : MipStatus::Infeasible;
    }
    return out;
  }

 private:
  // Restores root bounds on the previous node's variables, then installs this
  // node's bounds and warm-start basis.
  bool apply(const Node& node) {
    for (const auto& ch : applied_) {
      solver_.set_bounds(ch.var, model_.domains[ch.var].lower, model_.domains[ch.var].upper);
    }
    applied_.clear();
    for (const auto& ch : node.changes) {
      if (ch.lower > ch.upper) return false;
      solver_.set_bounds(ch.var, ch.lower, ch.upper);
      applied_.push_back(ch);
    }
    if (!node.basis.empty()) solver_.set_basis(node.basis);
    return true;
  }

  LpStatus solve_lp() {
    LpStatus st = solver_.solve();
    if (st == LpStatus::NumericalFailure || st == LpStatus::IterationLimit) {
      solver_.set_basis(Basis{});  // inconsistent snapshot -> slack basis
      st = solver_.solve();
    }
    if (st == LpStatus::NumericalFailure || st == LpStatus::IterationLimit) {
      throw NumericalError(std::string("node relaxation failed: ") + to_string(st));
    }
    return st;
  }

  // Largest d such that every objective coefficient is an integer multiple of
  // d and only integer variables carry cost; 0 when there is none.
  static double objective_step(const MixedModel& model) {
    for (int j = 0; j < model.num_vars(); ++j) {
      if (model.objective[j] != 0.0 && !model.domains[j].integer) return 0.0;
    }
    for (long long scale : {1LL, 2LL, 4LL, 5LL, 10LL, 20LL, 50LL, 100LL, 1000LL, 10000LL}) {
      long long g = 0;
      bool ok = true;
      for (double c : model.objective) {
        const double v = c * static_cast<double>(scale);
        if (std::abs(v) > 1e12 || std::abs(v - std::round(v)) > 1e-9 * std::max(1.0, std::abs(v))) {
          ok = false;
          break;
        }
        g = std::gcd(g, std::llabs(std::llround(v)));
      }
      if (ok) return g == 0 ? 0.0 : static_cast<double>(g) / static_cast<double>(scale);
    }
    return 0.0;
  }

  // True when no integer point below `bound` can beat the incumbent.
  bool dominated(double bound) const {
    if (bound >= upper_bound_ - limits_.gap_tolerance) return true;
    if (objective_step_ <= 0.0 || !std::isfinite(upper_bound_) || !std::isfinite(bound)) return false;
    const double rounded = objective_step_ * std::ceil(bound / objective_step_ - 1e-6);
    return rounded >= upper_bound_ - limits_.gap_tolerance;
  }

  // Among the fractional integer variables of highest priority, the one with
  // the largest pseudo-cost product score; ties by lowest index. -1 if
  // integral.
  int branching_variable(std::span<const double> v) const {
    int best = -1;
    int best_priority = 0;
    double best_score = 0.0;
    for (int j : integers_) {
      const double f = v[j] - std::floor(v[j]);
      if (std::min(f, 1.0 - f) <= limits_.integrality_tolerance) continue;
      const int prio = model_.priority.empty() ? 0 : model_.priority[j];
      const double down = std::max(pseudo_.get(j, false) * f, 1e-6);
      const double up = std::max(pseudo_.get(j, true) * (1.0 - f), 1e-6);
      const double score = down * up;
      if (best < 0 || prio > best_priority || (prio == best_priority && score > best_score)) {
        best = j;
        best_priority = prio;
        best_score = score;
      }
    }
    return best;
  }

  // Bound changes implied by reduced costs: moving a nonbasic integer variable
  // off its bound by k raises the objective by at least k * |d_j|, which must
  // stay below the best value that could still improve on the incumbent.
  std::vector<BoundChange> reduced_cost_fixings(double obj) const {
    std::vector<BoundChange> out;
    if (!std::isfinite(upper_bound_)) return out;
    double target = upper_bound_ - limits_.gap_tolerance;
    if (objective_step_ > 0.0) target = std::min(target, upper_bound_ - objective_step_ + 1e-6);
    const double room = target - obj;
    if (room < 0.0) return out;
    const LPSolution sol = solver_.solution();
    for (int j : integers_) {
      const double lo = solver_.lower(j), hi = solver_.upper(j);
      if (lo >= hi) continue;
      const double v = sol.primal[j];
      if (sol.lower_bound_duals[j] > 1e-9 && std::abs(v - lo) <= 1e-9) {
        const double steps = std::floor(room / sol.lower_bound_duals[j] + 1e-9);
        if (lo + steps < hi) out.push_back({j, lo, lo + steps});
      } else if (sol.upper_bound_duals[j] > 1e-9 && std::abs(v - hi) <= 1e-9) {
        const double steps = std::floor(room / sol.upper_bound_duals[j] + 1e-9);
        if (hi - steps > lo) out.push_back({j, hi - steps, hi});
      }
    }
    return out;
  }

  template <class Push>
  void branch(const Node& node, int var, double value, double bound, Push& push,
              const std::vector<BoundChange>& fixings = {}) {
    const double lo = solver_.lower(var);
    const double hi = solver_.upper(var);
    if (std::abs(value - std::round(value)) <= limits_.integrality_tolerance) value = std::round(value);
    double down_hi = std::floor(value);
    double up_lo = std::ceil(value);
    if (down_hi == up_lo) {
      // Integral value (cycling guard): split so the current value is in one child.
      if (value < hi) {
        up_lo = value + 1.0;
      } else {
        down_hi = value - 1.0;
      }
    }
    const Basis basis = solver_.basis();
    std::vector<BoundChange> changes = node.changes;
    changes.insert(changes.end(), fixings.begin(), fixings.end());
    Node down{next_id_++, bound, changes, basis, var, false, value - std::min(hi, down_hi)};
    down.changes.push_back({var, lo, std::min(hi, down_hi)});
    Node up{next_id_++, bound, std::move(changes), basis, var, true, std::max(lo, up_lo) - value};
    up.changes.push_back({var, std::max(lo, up_lo), hi});
    push(std::move(down));
    push(std::move(up));
  }

  template <class Push>
  void process(const Node& node, Push& push, MIPSolution& out) {
    bool first = true;
    for (;;) {
      const LpStatus st = solve_lp();
      if (st == LpStatus::Infeasible) return;
      if (st == LpStatus::Unbounded) {
        unbounded_ = true;
        return;
      }
      const double obj = solver_.objective();
      if (first && node.branch_var >= 0 && std::isfinite(node.bound)) {
        pseudo_.record(node.branch_var, node.up, node.distance, obj - node.bound);
      }
      first = false;
      if (dominated(obj)) return;
      const std::vector<double> values(solver_.values().begin(), solver_.values().end());
      const int frac = branching_variable(values);
      if (frac >= 0) {
        if (decompose_) {
          // Fix every higher-priority variable first so the rest can split
          // into independent blocks.
          const int pending = unfixed_above(model_.priority[frac]);
          if (pending >= 0) {
            branch(node, pending, values[pending], obj, push, reduced_cost_fixings(obj));
            return;
          }
          if (solve_components(out)) return;
        }
        branch(node, frac, values[frac], obj, push, reduced_cost_fixings(obj));
        return;
      }

      std::vector<double> candidate = values;
      for (int j : integers_) candidate[j] = std::round(candidate[j]);
      if (callback_ == nullptr) {
        accept(candidate, obj);
        return;
      }
      ++stats_.invocations;
      CallbackDecision decision = (*callback_)(Candidate{candidate, obj, node.id});
      if (decision.accept) {
        ++stats_.accepted;
        if (obj < upper_bound_) accept(candidate, obj);
        return;
      }
      ++stats_.rejected;
      bool separates = false;
      for (auto& cut : decision.cuts) {
        if (cut.violation(values) > kSeparationTol) separates = true;
        ++stats_.cuts_by_kind[cut.kind];
        solver_.add_row(cut.coeffs, cut.sense, cut.rhs);
      }
      if (separates) continue;

      ++stats_.non_separating;
      int unfixed = -1;
      for (int j : integers_) {
        if (solver_.lower(j) < solver_.upper(j)) {
          unfixed = j;
          break;
        }
      }
      if (unfixed >= 0) branch(node, unfixed, candidate[unfixed], obj, push);
      return;
    }
  }

  // Lowest-index unfixed integer variable with priority above `priority`.
  int unfixed_above(int priority) const {
    for (int j : integers_) {
      if (model_.priority[j] > priority && solver_.lower(j) < solver_.upper(j)) return j;
    }
    return -1;
  }

  // When the unfixed variables fall into two or more blocks that share no
  // row, solves each block as its own MIP and closes the node. Returns false
  // if the node does not split or a block hits a limit.
  bool solve_components(MIPSolution& out) {
    const int n = model_.num_vars();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    auto is_free = [&](int j) { return solver_.lower(j) < solver_.upper(j); };
    for (const auto& row : row_entries_) {
      int first = -1;
      for (const auto& [j, a] : row) {
        if (!is_free(j)) continue;
        if (first < 0) first = find(j);
        else parent[find(j)] = first;
      }
    }
    std::map<int, std::vector<int>> blocks;
    for (int j = 0; j < n; ++j) {
      if (is_free(j)) blocks[find(j)].push_back(j);
    }
    if (blocks.size() < 2) return false;

    std::vector<double> solution(n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (is_free(j)) continue;
      solution[j] = solver_.lower(j);
      total += model_.objective[j] * solution[j];
    }
    std::vector<int> local(n, -1);
    for (const auto& [root, vars] : blocks) {
      MixedModel sub;
      for (int j : vars) {
        local[j] = sub.add_variable(model_.objective[j],
                                    VarDomain{solver_.lower(j), solver_.upper(j), model_.domains[j].integer});
      }
      for (int r = 0; r < model_.num_rows(); ++r) {
        std::vector<std::pair<int, double>> coeffs;
        double rhs = model_.rhs[r];
        for (const auto& [j, a] : row_entries_[r]) {
          if (is_free(j)) {
            if (find(j) == root) coeffs.emplace_back(local[j], a);
          } else {
            rhs -= a * solution[j];
          }
        }
        if (!coeffs.empty()) sub.add_row(coeffs, model_.senses[r], rhs);
      }
      MipLimits limits = limits_;
      limits.node_limit = std::max(0L, limits_.node_limit - out.node_count);
      const MIPSolution part = solve_mip(sub, limits);
      out.node_count += part.node_count;
      if (part.status == MipStatus::Infeasible) return true;
      if (part.status != MipStatus::Optimal) return false;
      for (int j : vars) solution[j] = part.primal[local[j]];
      total += part.objective;
    }
    if (total < upper_bound_) accept(solution, total);
    return true;
  }

  void accept(const std::vector<double>& values, double obj) {
    incumbent_ = values;
    upper_bound_ = obj;
  }

  const MixedModel& model_;
  const IntegralCallback* callback_;
  MipLimits limits_;
  SimplexSolver solver_;
  PseudoCosts pseudo_;
  std::vector<int> integers_;
  std::vector<BoundChange> applied_;
  std::vector<double> incumbent_;
  double upper_bound_ = kInf;
  double objective_step_ = 0.0;
  bool decompose_ = false;
  std::vector<std::vector<std::pair<int, double>>> row_entries_;
  long next_id_ = 0;
  long children_from_ = 0;  // ids at or above were created by the last node
  bool unbounded_ = false;
  CallbackStats stats_;
};

}  // namespace

MIPSolution solve_with_callback(const MixedModel& model, const IntegralCallback& callback, MipLimits limits) {
  Tree tree(model, callback ? &callback : nullptr, limits);
  return tree.run();
}

MIPSolution solve_with_callback(const MixedModel& model, const IntegralCallback& callback,
                                const WarmStart& warm_start, MipLimits limits) {
  Tree tree(model, callback ? &callback : nullptr, limits);
  tree.seed_incumbent(warm_start);
  return tree.run();
}

MIPSolution solve_mip(const MixedModel& model, MipLimits limits) {
  Tree tree(model, nullptr, limits);
  return tree.run();
}

}  // namespace mlb
