#include "mlb/bench.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mlb/error.hpp"

namespace mlb {

namespace fs = std::filesystem;

namespace {

const char* const kKnownMethods[] = {"Std-L",    "Alt-L",    "ML-Std-L",   "ML-Alt-L",
                                     "2P-Std-L", "2P-Alt-L", "2P-Std-L+B", "2P-Alt-L+B"};

// (metric, path into the result object)
const std::pair<const char*, const char*> kMetrics[] = {
    {"time_total", "/times/total"},
    {"time_master", "/times/master"},
    {"time_exact_subproblems", "/times/exact_subproblems"},
    {"time_relaxed_subproblems", "/times/relaxed_subproblems"},
    {"time_prediction", "/times/prediction"},
    {"objective", "/objective"},
    {"node_count", "/node_count"},
    {"n_integer_cuts", "/n_integer_cuts"},
    {"n_continuous_cuts", "/n_continuous_cuts"},
    {"n_exact_subproblem_solves", "/n_exact_subproblem_solves"},
    {"n_relaxed_subproblem_solves", "/n_relaxed_subproblem_solves"},
    {"n_predictions", "/n_predictions"},
    {"retries", "/retries"},
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// FNV-1a
std::uint64_t file_hash(const std::string& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : read_file(path)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string instance_path(const ExperimentConfig& c, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "instance_%03d.json", k);
  return (fs::path(c.out) / "instances" / buf).string();
}

std::string data_path(const ExperimentConfig& c, const std::string& kind, const std::string& part) {
  return (fs::path(c.out) / "data" / (kind + "_" + part + ".csv")).string();
}

Dataset make_examples(const ExperimentConfig& c, bool relaxed) {
  if (c.family == FamilyKind::SSLP) {
    return relaxed ? gen_examples_relaxed(c.sslp, c.relaxed_examples, c.relaxed_data_seed(), c.jobs)
                   : gen_examples(c.sslp, c.examples, c.labeling, c.data_seed(), c.jobs);
  }
  return relaxed ? gen_examples_relaxed(c.smkp, c.relaxed_examples, c.relaxed_data_seed(), c.jobs)
                 : gen_examples(c.smkp, c.examples, c.labeling, c.data_seed(), c.jobs);
}

// Runs task(i) for i in [0, n) on `jobs` threads and rethrows the first failure.
void parallel_for(int n, int jobs, const std::function<void(int)>& task) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mutex);
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
}

std::optional<double> metric_value(const nlohmann::json& record, const std::string& metric) {
  const auto& result = record.at("result");
  if (metric == "gap_pct") {
    if (!record.contains("oracle_objective") || record.at("oracle_objective").is_null()) return std::nullopt;
    const double oracle = record.at("oracle_objective").get<double>();
    return 100.0 * (result.at("objective").get<double>() - oracle) / std::max(1.0, std::abs(oracle));
  }
  for (const auto& [name, path] : kMetrics) {
    if (metric != name) continue;
    const nlohmann::json::json_pointer ptr(path);
    if (!result.contains(ptr) || !result.at(ptr).is_number()) return std::nullopt;
    return result.at(ptr).get<double>();
  }
  return std::nullopt;
}

void write_reports(const std::vector<ReportRow>& rows, const std::string& out_dir) {
  write_file((fs::path(out_dir) / "report.csv").string(), report_csv(rows));
  write_file((fs::path(out_dir) / "report.txt").string(), report_text(rows));
}

}  // namespace

const char* to_string(FamilyKind kind) { return kind == FamilyKind::SSLP ? "sslp" : "smkp"; }

FamilyKind family_from_string(const std::string& name) {
  if (name == "sslp") return FamilyKind::SSLP;
  if (name == "smkp") return FamilyKind::SMKP;
  throw PreconditionError("unknown family '" + name + "' (expected sslp or smkp)");
}

void ExperimentConfig::validate() const {
  if (family == FamilyKind::SSLP) sslp.validate();
  else smkp.validate();
  if (instances < 1) throw PreconditionError("instance count must be >= 1");
  if (examples < 1 || relaxed_examples < 1) throw PreconditionError("example counts must be >= 1");
  if (history < 0) throw PreconditionError("history must be >= 0");
  if (jobs < 1) throw PreconditionError("jobs must be >= 1");
  if (time_limit < 0.0) throw PreconditionError("time limit must be >= 0");
  if (methods.empty()) throw PreconditionError("no methods to run");
  for (const auto& m : methods) parse_method(m);
  for (double v : {effective_mu(), effective_nu()}) {
    if (!(v > 0.0 && v <= 1.0)) throw PreconditionError("mu and nu must lie in (0, 1]");
  }
  for (const auto& m : methods) {
    if (parse_method(m).prob_bound && history < 2) {
      throw PreconditionError("method " + m + " needs a history of at least 2 instances");
    }
  }
  train.validate();
}

double ExperimentConfig::effective_mu() const {
  return mu.value_or(family == FamilyKind::SSLP ? 1.0 : 0.98);
}

double ExperimentConfig::effective_nu() const {
  return nu.value_or(family == FamilyKind::SSLP ? 1.0 : 0.95);
}

bool ExperimentConfig::needs_q_network() const {
  for (const auto& m : methods) {
    if (parse_method(m).ml) return true;
  }
  return false;
}

bool ExperimentConfig::needs_relaxed_network() const {
  for (const auto& m : methods) {
    const MethodSpec s = parse_method(m);
    if (s.ml && s.alt) return true;
  }
  return false;
}

std::uint64_t ExperimentConfig::data_seed() const { return derive_seed(seed, 1); }
std::uint64_t ExperimentConfig::relaxed_data_seed() const { return derive_seed(seed, 2); }
std::uint64_t ExperimentConfig::train_seed() const { return derive_seed(seed, 3); }
std::uint64_t ExperimentConfig::instance_seed(int k) const { return derive_seed(derive_seed(seed, 4), k); }
std::uint64_t ExperimentConfig::history_seed(int k) const { return derive_seed(derive_seed(seed, 5), k); }

std::string ExperimentConfig::q_model_path() const { return (fs::path(out) / "models" / "q.json").string(); }
std::string ExperimentConfig::relaxed_model_path() const {
  return (fs::path(out) / "models" / "relaxed.json").string();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json::object();
  j["family"] = to_string(c.family);
  if (c.family == FamilyKind::SSLP) j["params"] = c.sslp;
  else j["params"] = c.smkp;
  j["seed"] = c.seed;
  j["instances"] = c.instances;
  j["examples"] = c.examples;
  j["relaxed_examples"] = c.relaxed_examples;
  j["labeling"] = c.labeling == Labeling::Full ? "full" : "implicit";
  j["q_network"] = {{"hidden_layers", c.q_network.hidden_layers}, {"units", c.q_network.units_per_layer}};
  j["relaxed_network"] = {{"hidden_layers", c.relaxed_network.hidden_layers},
                          {"units", c.relaxed_network.units_per_layer}};
  j["train"] = {{"batch_size", c.train.batch_size}, {"learning_rate", c.train.learning_rate},
                {"patience", c.train.patience},     {"max_epochs", c.train.max_epochs},
                {"time_limit", c.train.time_limit}};
  j["methods"] = c.methods;
  j["baseline"] = c.baseline;
  j["mu"] = c.effective_mu();
  j["nu"] = c.effective_nu();
  j["oracle"] = c.oracle;
  j["history"] = c.history;
  j["time_limit"] = c.time_limit;
  j["jobs"] = c.jobs;
  j["out"] = c.out;
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  if (j.contains("family")) c.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("params")) {
    if (c.family == FamilyKind::SSLP) j.at("params").get_to(c.sslp);
    else j.at("params").get_to(c.smkp);
  }
  get("seed", c.seed);
  get("instances", c.instances);
  get("examples", c.examples);
  get("relaxed_examples", c.relaxed_examples);
  if (j.contains("labeling")) c.labeling = labeling_from_string(j.at("labeling").get<std::string>());
  auto read_spec = [&j](const char* key, NetworkSpec& spec) {
    if (!j.contains(key)) return;
    const auto& s = j.at(key);
    if (s.contains("hidden_layers")) s.at("hidden_layers").get_to(spec.hidden_layers);
    if (s.contains("units")) s.at("units").get_to(spec.units_per_layer);
  };
  read_spec("q_network", c.q_network);
  read_spec("relaxed_network", c.relaxed_network);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (t.contains("batch_size")) t.at("batch_size").get_to(c.train.batch_size);
    if (t.contains("learning_rate")) t.at("learning_rate").get_to(c.train.learning_rate);
    if (t.contains("patience")) t.at("patience").get_to(c.train.patience);
    if (t.contains("max_epochs")) t.at("max_epochs").get_to(c.train.max_epochs);
    if (t.contains("time_limit")) t.at("time_limit").get_to(c.train.time_limit);
  }
  get("methods", c.methods);
  get("baseline", c.baseline);
  if (j.contains("mu") && !j.at("mu").is_null()) c.mu = j.at("mu").get<double>();
  if (j.contains("nu") && !j.at("nu").is_null()) c.nu = j.at("nu").get<double>();
  get("oracle", c.oracle);
  get("history", c.history);
  get("time_limit", c.time_limit);
  get("jobs", c.jobs);
  get("out", c.out);
}

ExperimentConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config '" + path + "': " + e.what());
  }
  ExperimentConfig c;
  try {
    c = j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("config '" + path + "': " + e.what());
  }
  c.validate();
  return c;
}

TwoStageProblem make_instance(const ExperimentConfig& c, std::uint64_t seed) {
  return c.family == FamilyKind::SSLP ? gen_sslp_instance(c.sslp, seed) : gen_smkp_instance(c.smkp, seed);
}

Featurizer make_featurizer(const ExperimentConfig& c, const TwoStageProblem& problem) {
  return c.family == FamilyKind::SSLP ? sslp_featurizer(problem) : smkp_featurizer(problem);
}

GenerateOutcome cmd_generate(const ExperimentConfig& c) {
  c.validate();
  GenerateOutcome outcome;
  nlohmann::ordered_json manifest;
  manifest["config"] = nlohmann::json(c);
  auto& files = manifest["files"];
  auto record_file = [&files](const std::string& path, const nlohmann::ordered_json& meta) {
    nlohmann::ordered_json f = meta;
    f["path"] = path;
    f["fnv1a64"] = hex64(file_hash(path));
    files.push_back(f);
  };

  for (int k = 0; k < c.instances; ++k) {
    const std::uint64_t seed = c.instance_seed(k);
    const std::string path = instance_path(c, k);
    fs::create_directories(fs::path(path).parent_path());
    write_problem(make_instance(c, seed), path);
    record_file(path, {{"kind", "instance"}, {"index", k}, {"seed", seed}});
  }
  outcome.instances = c.instances;

  auto emit = [&](const std::string& kind, bool relaxed, std::uint64_t seed) {
    const Dataset data = make_examples(c, relaxed);
    const Split split = split_indices(data.size(), derive_seed(seed, 0xda7a));
    const std::pair<const char*, const std::vector<int>*> parts[] = {
        {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
    for (const auto& [part, idx] : parts) {
      const std::string path = data_path(c, kind, part);
      fs::create_directories(fs::path(path).parent_path());
      write_dataset(data.subset(*idx), path);
      record_file(path, {{"kind", kind}, {"part", part}, {"rows", idx->size()}, {"seed", seed}});
    }
    return data.size();
  };
  if (c.needs_q_network()) outcome.q_examples = emit("q", false, c.data_seed());
  if (c.needs_relaxed_network()) outcome.relaxed_examples = emit("relaxed", true, c.relaxed_data_seed());

  manifest["seeds"] = {{"data", c.data_seed()},
                       {"relaxed_data", c.relaxed_data_seed()},
                       {"train", c.train_seed()},
                       {"instances", derive_seed(c.seed, 4)},
                       {"history", derive_seed(c.seed, 5)}};
  outcome.manifest_path = (fs::path(c.out) / "manifest.json").string();
  write_file(outcome.manifest_path, manifest.dump(2) + "\n");
  return outcome;
}

TrainOutcome cmd_train(const ExperimentConfig& c) {
  c.validate();
  TrainOutcome outcome;
  std::ostringstream csv;
  csv << "family,model,output,train_examples,test_examples,epochs,abs_rel_error_pct\n";
  auto fit = [&](const std::string& kind, const NetworkSpec& shape, std::uint64_t seed, const std::string& path) {
    const Dataset train_set = read_dataset(data_path(c, kind, "train"));
    const Dataset val_set = read_dataset(data_path(c, kind, "validation"));
    const Dataset test_set = read_dataset(data_path(c, kind, "test"));
    NetworkSpec spec = shape;
    spec.input_len = train_set.feature_len;
    spec.output_len = train_set.label_len;
    TrainConfig tc = c.train;
    tc.seed = seed;
    if (c.labeling == Labeling::Implicit && kind == "q") tc.loss = Loss::L2;
    TrainReport report;
    const Network net = train(train_set, val_set, spec, tc, &report);
    fs::create_directories(fs::path(path).parent_path());
    save_network(net, path);
    const auto errors = relative_errors(net, test_set);
    for (std::size_t k = 0; k < errors.size(); ++k) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", errors[k]);
      csv << to_string(c.family) << ',' << (kind == "q" ? "IP" : "LP") << ',' << k << ',' << train_set.size()
          << ',' << test_set.size() << ',' << report.epochs_run << ',' << buf << '\n';
    }
    return errors;
  };
  if (c.needs_q_network()) outcome.q_test_error = fit("q", c.q_network, c.train_seed(), c.q_model_path());
  if (c.needs_relaxed_network()) {
    outcome.relaxed_test_error =
        fit("relaxed", c.relaxed_network, derive_seed(c.train_seed(), 1), c.relaxed_model_path());
  }
  outcome.report_path = (fs::path(c.out) / "train_report.csv").string();
  write_file(outcome.report_path, csv.str());
  return outcome;
}

MethodSpec parse_method(const std::string& name) {
  if (std::find(std::begin(kKnownMethods), std::end(kKnownMethods), name) == std::end(kKnownMethods)) {
    throw PreconditionError("unknown method '" + name + "'");
  }
  MethodSpec s;
  s.two_phase = name.starts_with("2P-");
  s.ml = s.two_phase || name.starts_with("ML-");
  s.alt = name.find("Alt-L") != std::string::npos;
  s.prob_bound = name.ends_with("+B");
  return s;
}

nlohmann::ordered_json record_to_json(const BenchRecord& r) {
  nlohmann::ordered_json j;
  j["instance"] = r.instance;
  j["seed"] = r.seed;
  j["method"] = r.method;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["oracle_objective"] = r.oracle_objective ? nlohmann::ordered_json(*r.oracle_objective) : nullptr;
  if (r.ok) j["result"] = nlohmann::ordered_json::parse(to_json(r.result));
  return j;
}

SolveResult run_method(const ExperimentConfig& c, const TwoStageProblem& problem, const std::string& method,
                       const Predictors& predictors, const std::vector<double>& history) {
  const MethodSpec spec = parse_method(method);
  SolveConfig sc;
  sc.is_alt = spec.alt;
  if (c.time_limit > 0.0) sc.limits.time_limit_seconds = c.time_limit;
  if (!spec.ml) return solve(problem, sc);

  const NetworkPredictor predictor(problem, make_featurizer(c, problem), predictors.q,
                                   spec.alt ? predictors.relaxed : nullptr);
  sc.mode = SolveMode::ML;
  sc.mu = c.effective_mu();
  sc.nu = c.effective_nu();
  sc.predictor = &predictor;
  if (spec.two_phase) return two_phase_solve(problem, sc, spec.prob_bound, history);
  return solve(problem, sc);
}

BenchOutcome cmd_bench(const ExperimentConfig& c) {
  c.validate();
  Network q_net, relaxed_net;
  Predictors predictors;
  if (c.needs_q_network()) {
    q_net = load_network(c.q_model_path());
    predictors.q = &q_net;
  }
  if (c.needs_relaxed_network()) {
    relaxed_net = load_network(c.relaxed_model_path());
    predictors.relaxed = &relaxed_net;
  }

  bool need_history = false;
  for (const auto& m : c.methods) need_history = need_history || parse_method(m).prob_bound;
  std::vector<double> history(need_history ? c.history : 0);
  parallel_for(static_cast<int>(history.size()), c.jobs, [&](int k) {
    SolveConfig sc;
    sc.is_alt = true;
    history[k] = solve(make_instance(c, c.history_seed(k)), sc).objective;
  });

  const int per_instance = static_cast<int>(c.methods.size());
  std::vector<BenchRecord> records(static_cast<std::size_t>(c.instances) * per_instance);
  parallel_for(c.instances, c.jobs, [&](int k) {
    const std::uint64_t seed = c.instance_seed(k);
    const std::string path = instance_path(c, k);
    const TwoStageProblem problem = fs::exists(path) ? read_problem(path) : make_instance(c, seed);
    std::optional<double> oracle;
    if (c.oracle) {
      MipLimits limits;
      if (c.time_limit > 0.0) limits.time_limit_seconds = c.time_limit;
      const MIPSolution ef = solve_mip(build_extensive_form(problem), limits);
      if (ef.status == MipStatus::Optimal) oracle = ef.objective;
    }
    for (int m = 0; m < per_instance; ++m) {
      BenchRecord& r = records[static_cast<std::size_t>(k) * per_instance + m];
      r.instance = k;
      r.seed = seed;
      r.method = c.methods[m];
      r.oracle_objective = oracle;
      try {
        r.result = run_method(c, problem, r.method, predictors, history);
        if (oracle) r.result.gap_vs_oracle = (r.result.objective - *oracle) / std::max(1.0, std::abs(*oracle));
        r.ok = true;
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
  });

  BenchOutcome outcome;
  std::string jsonl;
  std::vector<nlohmann::json> parsed;
  for (const auto& r : records) {
    const auto j = record_to_json(r);
    jsonl += j.dump() + "\n";
    parsed.push_back(nlohmann::json::parse(j.dump()));
    if (!r.ok) ++outcome.failures;
  }
  write_file((fs::path(c.out) / "records.jsonl").string(), jsonl);
  outcome.rows = aggregate(parsed, c.baseline);
  write_reports(outcome.rows, c.out);
  outcome.records = std::move(records);
  return outcome;
}

std::vector<ReportRow> aggregate(const std::vector<nlohmann::json>& records, const std::string& baseline) {
  std::vector<std::string> methods;
  std::map<std::string, int> failures;
  // method -> instance -> record
  std::map<std::string, std::map<int, const nlohmann::json*>> ok;
  for (const auto& r : records) {
    const auto method = r.at("method").get<std::string>();
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
    if (r.at("ok").get<bool>()) {
      ok[method][r.at("instance").get<int>()] = &r;
    } else {
      ++failures[method];
    }
  }

  std::vector<std::string> metric_names;
  for (const auto& [name, path] : kMetrics) metric_names.emplace_back(name);
  metric_names.emplace_back("gap_pct");

  std::vector<ReportRow> rows;
  for (const auto& method : methods) {
    const auto& mine = ok[method];
    const auto base_it = ok.find(baseline);
    for (const auto& metric : metric_names) {
      std::vector<double> values, ratios;
      for (const auto& [instance, rec] : mine) {
        const auto v = metric_value(*rec, metric);
        if (!v) continue;
        values.push_back(*v);
        if (base_it == ok.end() || metric == "gap_pct") continue;
        const auto b = base_it->second.find(instance);
        if (b == base_it->second.end()) continue;
        const auto bv = metric_value(*b->second, metric);
        if (bv && *bv != 0.0) ratios.push_back(100.0 * *v / *bv);
      }
      if (values.empty()) continue;
      ReportRow row{method + ":" + metric, summarize(values), std::nullopt};
      if (!ratios.empty()) row.ratio = summarize(ratios);
      rows.push_back(std::move(row));
    }
    rows.push_back(ReportRow{method + ":failures", summarize({static_cast<double>(failures[method])}), std::nullopt});
  }
  return rows;
}

std::vector<ReportRow> cmd_report(const std::vector<std::string>& inputs, const std::string& baseline,
                                  const std::string& out_dir) {
  if (inputs.empty()) throw PreconditionError("no record files given");
  std::vector<nlohmann::json> records;
  for (const auto& path : inputs) {
    std::istringstream in(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        records.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  const auto rows = aggregate(records, baseline);
  write_reports(rows, out_dir);
  return rows;
}

}  // namespace mlb
