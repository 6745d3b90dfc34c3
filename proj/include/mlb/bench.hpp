#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlb/families.hpp"
#include "mlb/lshaped.hpp"
#include "mlb/network.hpp"
#include "mlb/report.hpp"

namespace mlb {

enum class FamilyKind { SSLP, SMKP };

const char* to_string(FamilyKind kind);
FamilyKind family_from_string(const std::string& name);

/// One experiment: a family, its training data and networks, and the methods
/// benchmarked on fresh instances. All seeds derive from `seed`; evaluation
/// and history instances use streams disjoint from the training data.
struct ExperimentConfig {
  FamilyKind family = FamilyKind::SSLP;
  SSLPParams sslp;
  SMKPParams smkp;
  std::uint64_t seed = 1;
  int instances = 50;
  int examples = 20000;
  int relaxed_examples = 20000;
  Labeling labeling = Labeling::Full;
  /// Input and output lengths are filled in from the data.
  NetworkSpec q_network{1, 1, 4, 64};
  NetworkSpec relaxed_network{1, 1, 6, 96};
  TrainConfig train;
  /// Std-L, Alt-L, ML-Std-L, ML-Alt-L, 2P-Std-L, 2P-Alt-L; a "+B" suffix on a
  /// two-phase method adds the Chebyshev bound.
  std::vector<std::string> methods{"Std-L", "Alt-L", "ML-Std-L", "ML-Alt-L"};
  std::string baseline = "Alt-L";
  /// Family defaults when absent: 1/1 for SSLP, 0.98/0.95 for SMKP.
  std::optional<double> mu;
  std::optional<double> nu;
  /// Solve the extensive form of every instance for gaps.
  bool oracle = true;
  /// Exact optima of this many extra instances feed the Chebyshev bound.
  int history = 10;
  /// Seconds per solve; 0 means none.
  double time_limit = 0.0;
  int jobs = 1;
  std::string out = "out";

  void validate() const;
  double effective_mu() const;
  double effective_nu() const;
  bool needs_q_network() const;
  bool needs_relaxed_network() const;

  std::uint64_t data_seed() const;
  std::uint64_t relaxed_data_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t instance_seed(int k) const;
  std::uint64_t history_seed(int k) const;

  std::string q_model_path() const;
  std::string relaxed_model_path() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

TwoStageProblem make_instance(const ExperimentConfig& config, std::uint64_t seed);
Featurizer make_featurizer(const ExperimentConfig& config, const TwoStageProblem& problem);

struct GenerateOutcome {
  int instances = 0;
  int q_examples = 0;
  int relaxed_examples = 0;
  std::string manifest_path;
};

/// Writes instances/, data/ (64/16/20 split files) and manifest.json under
/// config.out. Identical configs produce identical files.
GenerateOutcome cmd_generate(const ExperimentConfig& config);

struct TrainOutcome {
  std::vector<double> q_test_error;        ///< percent, per output
  std::vector<double> relaxed_test_error;  ///< percent, per output
  std::string report_path;
};

/// Trains the networks from the generated data and writes models/ and
/// train_report.csv (one row per family, model and output).
TrainOutcome cmd_train(const ExperimentConfig& config);

/// One method on one instance.
struct BenchRecord {
  int instance = 0;
  std::uint64_t seed = 0;
  std::string method;
  bool ok = false;
  std::string error;
  std::optional<double> oracle_objective;
  SolveResult result;
};

nlohmann::ordered_json record_to_json(const BenchRecord& record);

struct MethodSpec {
  bool ml = false;
  bool alt = false;
  bool two_phase = false;
  bool prob_bound = false;
};

/// Throws PreconditionError for unknown names.
MethodSpec parse_method(const std::string& name);

/// Models the ML methods need; either may be null when unused.
struct Predictors {
  const Network* q = nullptr;
  const Network* relaxed = nullptr;
};

/// Runs one method. `history` feeds the Chebyshev bound of "+B" methods.
SolveResult run_method(const ExperimentConfig& config, const TwoStageProblem& problem, const std::string& method,
                       const Predictors& predictors, const std::vector<double>& history);

struct BenchOutcome {
  std::vector<BenchRecord> records;
  std::vector<ReportRow> rows;
  int failures = 0;
};

/// Solves config.instances fresh instances with every method and writes
/// records.jsonl, report.csv and report.txt under config.out.
BenchOutcome cmd_bench(const ExperimentConfig& config);

/// Aggregates records into report rows: per method and metric, with ratios
/// against `baseline` computed per instance. Failed records are excluded and
/// counted in a "<method>:failures" row.
std::vector<ReportRow> aggregate(const std::vector<nlohmann::json>& records, const std::string& baseline);

/// Reads records.jsonl files, writes report.csv and report.txt to out_dir.
std::vector<ReportRow> cmd_report(const std::vector<std::string>& inputs, const std::string& baseline,
                                  const std::string& out_dir);

}  // namespace mlb
