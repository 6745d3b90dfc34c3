#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mlb/bench.hpp"
#include "mlb/error.hpp"

using namespace mlb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mlb_bench_" + name);
  fs::remove_all(dir);
  return dir.string();
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig c;
  c.family = FamilyKind::SSLP;
  c.sslp.a = 3;
  c.sslp.b = 5;
  c.sslp.c = 3;
  c.instances = 4;
  c.examples = 250;
  c.relaxed_examples = 100;
  c.q_network = {1, 1, 2, 16};
  c.relaxed_network = {1, 1, 2, 16};
  c.train.max_epochs = 15;
  c.methods = {"Std-L", "Alt-L", "ML-Std-L", "ML-Alt-L", "2P-Std-L+B"};
  c.history = 4;
  c.out = out;
  return c;
}

nlohmann::json record(int instance, const std::string& method, double time, double objective, bool ok = true) {
  nlohmann::json r;
  r["instance"] = instance;
  r["method"] = method;
  r["ok"] = ok;
  r["oracle_objective"] = 10.0;
  if (ok) r["result"] = {{"objective", objective}, {"times", {{"total", time}}}};
  return r;
}

const ReportRow* find_row(const std::vector<ReportRow>& rows, const std::string& metric) {
  for (const auto& r : rows) {
    if (r.metric == metric) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("quantiles and summaries") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(quantile(v, 0.5) == 50.5);
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  CHECK(quantile(v, 0.05) == doctest::Approx(5.95));
  const Summary s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.avg == 5.0);
  // sample sd sqrt(32/7)
  CHECK(s.stderr_ == doctest::Approx(std::sqrt(32.0 / 7.0) / std::sqrt(8.0)));
  CHECK(s.q05 <= s.q50);
  CHECK(s.q50 <= s.q95);
  CHECK(summarize({3.0}).stderr_ == 0.0);
  CHECK_THROWS_AS(summarize({}), PreconditionError);
  CHECK_THROWS_AS(quantile(v, 1.5), PreconditionError);
}

TEST_CASE("report CSV") {
  CHECK(report_csv({}) == "metric,q05,q50,q95,avg,stderr,ratio_q05,ratio_q50,ratio_q95,ratio_avg\n");
  std::vector<ReportRow> rows;
  rows.push_back({"A:time_total", summarize({0.1, 1.0 / 3, 2e-17}), summarize({100.0, 99.5})});
  rows.push_back({"A:objective", summarize({-345.6, 1e300}), std::nullopt});
  const auto back = parse_report_csv(report_csv(rows));
  REQUIRE(back.size() == 2);
  CHECK(back[0].metric == rows[0].metric);
  CHECK(back[0].value.q05 == rows[0].value.q05);
  CHECK(back[0].value.avg == rows[0].value.avg);
  CHECK(back[0].value.stderr_ == rows[0].value.stderr_);
  CHECK(back[0].ratio->q95 == rows[0].ratio->q95);
  CHECK_FALSE(back[1].ratio.has_value());
  CHECK(back[1].value.q95 == rows[1].value.q95);
  CHECK_THROWS_AS(parse_report_csv("metric,avg\n"), IoError);
  CHECK(report_text(rows).find("A:objective") != std::string::npos);
}

TEST_CASE("aggregation") {
  std::vector<nlohmann::json> recs;
  for (int i = 0; i < 4; ++i) {
    recs.push_back(record(i, "Alt-L", 2.0 * (i + 1), 10.0));
    recs.push_back(record(i, "ML-Alt-L", 1.0 * (i + 1), 10.5, i != 3));
  }
  const auto rows = aggregate(recs, "Alt-L");
  const auto* base_time = find_row(rows, "Alt-L:time_total");
  REQUIRE(base_time);
  CHECK(base_time->value.avg == 5.0);
  CHECK(base_time->value.stderr_ == doctest::Approx(std::sqrt(20.0 / 3.0) / 2.0));
  REQUIRE(base_time->ratio);
  CHECK(base_time->ratio->avg == 100.0);
  CHECK(base_time->ratio->q05 == 100.0);

  const auto* ml_time = find_row(rows, "ML-Alt-L:time_total");
  REQUIRE(ml_time);
  CHECK(ml_time->value.count == 3);
  CHECK(ml_time->ratio->avg == doctest::Approx(50.0));
  const auto* gap = find_row(rows, "ML-Alt-L:gap_pct");
  REQUIRE(gap);
  CHECK(gap->value.avg == doctest::Approx(5.0));
  CHECK_FALSE(gap->ratio.has_value());
  CHECK(find_row(rows, "ML-Alt-L:failures")->value.avg == 1.0);
  CHECK(find_row(rows, "Alt-L:failures")->value.avg == 0.0);
  // rows follow first appearance of each method
  CHECK(rows.front().metric.rfind("Alt-L:", 0) == 0);
}

TEST_CASE("experiment configuration") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.effective_mu() == 1.0);
  c.family = FamilyKind::SMKP;
  CHECK(c.effective_mu() == 0.98);
  CHECK(c.effective_nu() == 0.95);
  c.instances = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.instances = 5;
  c.methods = {"ML-Foo"};
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c.methods = {"2P-Alt-L+B"};
  c.history = 1;
  CHECK_THROWS_AS(c.validate(), PreconditionError);

  const MethodSpec m = parse_method("2P-Alt-L+B");
  CHECK(m.ml);
  CHECK(m.alt);
  CHECK(m.two_phase);
  CHECK(m.prob_bound);
  CHECK_FALSE(parse_method("Std-L").ml);

  ExperimentConfig d;
  d.family = FamilyKind::SMKP;
  d.smkp.n1 = 12;
  d.seed = 77;
  d.methods = {"Alt-L", "ML-Alt-L"};
  d.mu = 0.9;
  const nlohmann::json j = d;
  const auto back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.smkp.n1 == 12);
  CHECK(*back.mu == 0.9);

  CHECK(d.instance_seed(0) != d.history_seed(0));
  CHECK(d.instance_seed(0) != d.data_seed());
}

TEST_CASE("generate is deterministic and splits 64/16/20") {
  const std::string a = scratch("gen_a"), b = scratch("gen_b");
  ExperimentConfig c = tiny_config(a);
  const auto out = cmd_generate(c);
  CHECK(out.instances == 4);
  CHECK(out.q_examples == 250);
  CHECK(out.relaxed_examples == 100);
  const std::string first = slurp(out.manifest_path);
  cmd_generate(c);
  CHECK(slurp(out.manifest_path) == first);
  c.out = b;
  cmd_generate(c);
  const auto ja = nlohmann::json::parse(first);
  const auto jb = nlohmann::json::parse(slurp(b + "/manifest.json"));
  REQUIRE(ja["files"].size() == jb["files"].size());
  for (std::size_t i = 0; i < ja["files"].size(); ++i) CHECK(ja["files"][i]["fnv1a64"] == jb["files"][i]["fnv1a64"]);
  const auto train = read_dataset(a + "/data/q_train.csv");
  const auto val = read_dataset(a + "/data/q_validation.csv");
  const auto test = read_dataset(a + "/data/q_test.csv");
  CHECK(train.size() == 160);
  CHECK(val.size() == 40);
  CHECK(test.size() == 50);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train reports one row per output and is reproducible") {
  const std::string dir = scratch("train");
  ExperimentConfig c = tiny_config(dir);
  cmd_generate(c);
  const auto first = cmd_train(c);
  CHECK(first.q_test_error.size() == 1);
  CHECK(first.relaxed_test_error.size() == static_cast<std::size_t>(c.sslp.a + 3));
  const std::string report = slurp(first.report_path);
  CHECK(report.rfind("family,model,output,", 0) == 0);
  CHECK(report.find("sslp,IP,0,") != std::string::npos);
  CHECK(report.find("sslp,LP,0,") != std::string::npos);
  const auto second = cmd_train(c);
  CHECK(first.q_test_error == second.q_test_error);
  CHECK(first.relaxed_test_error == second.relaxed_test_error);

  SUBCASE("constant labels are learned to within 1%") {
    for (const char* part : {"train", "validation", "test"}) {
      const std::string path = dir + "/data/q_" + std::string(part) + ".csv";
      Dataset d = read_dataset(path);
      for (auto& ex : d.examples) ex.label = {-40.0};
      write_dataset(d, path);
    }
    ExperimentConfig q_only = c;
    q_only.methods = {"ML-Std-L"};
    q_only.train.max_epochs = 200;
    const auto r = cmd_train(q_only);
    CHECK(r.q_test_error[0] <= 1.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("bench end to end") {
  const std::string dir = scratch("bench");
  ExperimentConfig c = tiny_config(dir);
  cmd_generate(c);
  cmd_train(c);
  const auto out = cmd_bench(c);
  CHECK(out.failures == 0);
  REQUIRE(out.records.size() == 4 * c.methods.size());
  for (const auto& r : out.records) {
    REQUIRE(r.ok);
    REQUIRE(r.oracle_objective);
    const MethodSpec m = parse_method(r.method);
    if (!m.ml || m.two_phase) CHECK(std::abs(r.result.objective - *r.oracle_objective) <= 1e-6);
    if (m.ml && !m.two_phase) CHECK(r.result.n_exact_subproblem_solves == 0);
    CHECK(r.result.objective >= *r.oracle_objective - 1e-6);
  }
  const auto* self = find_row(out.rows, "Alt-L:objective");
  REQUIRE(self);
  CHECK(self->ratio->avg == doctest::Approx(100.0));
  CHECK(fs::exists(dir + "/records.jsonl"));
  const std::string csv = slurp(dir + "/report.csv");
  CHECK(parse_report_csv(csv).size() == out.rows.size());

  const std::string again = dir + "/again";
  const auto rows = cmd_report({dir + "/records.jsonl"}, "Alt-L", again);
  CHECK(slurp(again + "/report.csv") == csv);

  // a second run reproduces everything except wall-clock times
  const auto rerun = cmd_bench(c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].metric.find(":time_") != std::string::npos) continue;
    CHECK(rerun.rows[i].metric == rows[i].metric);
    CHECK(rerun.rows[i].value.avg == rows[i].value.avg);
    CHECK(rerun.rows[i].value.q50 == rows[i].value.q50);
  }
  CHECK_THROWS_AS(cmd_report({dir + "/missing.jsonl"}, "Alt-L", again), IoError);
  CHECK_THROWS_AS(cmd_report({}, "Alt-L", again), PreconditionError);
  fs::remove_all(dir);
}

TEST_CASE("bench without models fails clearly") {
  ExperimentConfig c = tiny_config(scratch("nomodel"));
  CHECK_THROWS_AS(cmd_bench(c), IoError);
}
