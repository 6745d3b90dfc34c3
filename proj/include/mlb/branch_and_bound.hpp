#pragma once

#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mlb/model.hpp"

namespace mlb {

enum class MipStatus { Optimal, Infeasible, FeasibleLimit, NoSolutionLimit, Unbounded };

const char* to_string(MipStatus status);

struct MipLimits {
  long node_limit = 5'000'000;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  double gap_tolerance = 1e-6;       ///< absolute
  double integrality_tolerance = 1e-6;
};

/// Row added by a callback: sum coeffs <sense> rhs.
struct LazyCut {
  std::vector<std::pair<int, double>> coeffs;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  std::string kind;

  /// Amount by which `values` violates the cut (<= 0 when satisfied).
  double violation(std::span<const double> values) const;
};

/// Integral node solution handed to the callback.
struct Candidate {
  std::span<const double> values;
  double objective;
  long node;
};

struct CallbackDecision {
  bool accept = true;
  std::vector<LazyCut> cuts;

  static CallbackDecision accept_candidate() { return {true, {}}; }
  static CallbackDecision reject(std::vector<LazyCut> cuts) { return {false, std::move(cuts)}; }
};

/// Invoked at every node whose relaxation is integral. Must not retain
/// node-local state across invocations.
using IntegralCallback = std::function<CallbackDecision(const Candidate&)>;

struct CallbackStats {
  long invocations = 0;
  long accepted = 0;
  long rejected = 0;
  /// Rejections whose cuts did not cut off the candidate (cycling guard).
  long non_separating = 0;
  std::map<std::string, long> cuts_by_kind;
};

struct MIPSolution {
  MipStatus status = MipStatus::Infeasible;
  std::vector<double> primal;
  double objective = std::numeric_limits<double>::infinity();
  double best_bound = -std::numeric_limits<double>::infinity();
  long node_count = 0;
  long lp_iterations = 0;
  CallbackStats callback_stats;

  bool has_solution() const {
    return status == MipStatus::Optimal || status == MipStatus::FeasibleLimit;
  }
};

/// Best-bound branch-and-bound with plunging and reduced-cost fixing.
/// Branches on the fractional variable of highest priority with the best
/// pseudo-cost score (ties: lowest index). Rows returned by the callback join
/// a global cut pool enforced at every later node. When a rejecting callback's cuts fail to separate the
/// candidate, the node is branched on an unfixed integer variable instead, or
/// discarded if every integer variable is already fixed.
MIPSolution solve_with_callback(const MixedModel& model, const IntegralCallback& callback,
                                MipLimits limits = {});

/// Without a callback and with priorities set, every higher-priority variable
/// is fixed before lower-priority ones are branched on; a node whose free
/// variables then split into blocks sharing no row is closed by solving each
/// block separately.
MIPSolution solve_mip(const MixedModel& model, MipLimits limits = {});

/// Optional seed for the incumbent, e.g. from a heuristic warm start.
struct WarmStart {
  std::vector<double> values;
  double objective;
};

MIPSolution solve_with_callback(const MixedModel& model, const IntegralCallback& callback,
                                const WarmStart& warm_start, MipLimits limits = {});

}  // namespace mlb
