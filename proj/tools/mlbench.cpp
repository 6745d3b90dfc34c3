#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlb/bench.hpp"
#include "mlb/error.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> baseline;
  std::optional<int> jobs;
  std::optional<double> time_limit;
};

void add_common(CLI::App* cmd, Common& o, bool config_required) {
  auto* opt = cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--baseline", o.baseline, "method the ratio columns compare against");
  cmd->add_option("--jobs", o.jobs, "worker threads");
  cmd->add_option("--time-limit", o.time_limit, "seconds per solve");
}

mlb::ExperimentConfig resolve(const Common& o) {
  mlb::ExperimentConfig c = o.config_path.empty() ? mlb::ExperimentConfig{} : mlb::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.baseline) c.baseline = *o.baseline;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.time_limit) c.time_limit = *o.time_limit;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ML-accelerated integer L-shaped benchmarks"};
  app.require_subcommand(1);

  Common gen_opts, train_opts, solve_opts, bench_opts, report_opts;
  auto* gen = app.add_subcommand("generate", "write instances, datasets and a manifest");
  add_common(gen, gen_opts, true);
  auto* trn = app.add_subcommand("train", "train the networks on generated data");
  add_common(trn, train_opts, true);

  auto* slv = app.add_subcommand("solve", "solve one instance file and print the result as JSON");
  add_common(slv, solve_opts, false);
  std::string instance, method = "Alt-L";
  slv->add_option("--instance", instance, "instance file")->required();
  slv->add_option("--method", method, "Std-L, Alt-L, ML-Std-L, ML-Alt-L, 2P-Std-L, 2P-Alt-L (+B)");

  auto* bch = app.add_subcommand("bench", "solve fresh instances with every method and report");
  add_common(bch, bench_opts, true);

  auto* rep = app.add_subcommand("report", "aggregate records.jsonl files into report tables");
  add_common(rep, report_opts, false);
  std::vector<std::string> inputs;
  rep->add_option("inputs", inputs, "records.jsonl files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto out = mlb::cmd_generate(resolve(gen_opts));
      std::printf("%d instances, %d Q examples, %d relaxed examples; manifest %s\n", out.instances,
                  out.q_examples, out.relaxed_examples, out.manifest_path.c_str());
    } else if (trn->parsed()) {
      const auto out = mlb::cmd_train(resolve(train_opts));
      std::printf("test report written to %s\n", out.report_path.c_str());
    } else if (slv->parsed()) {
      mlb::ExperimentConfig c = resolve(solve_opts);
      c.methods = {method};
      const auto problem = mlb::read_problem(instance);
      mlb::Network q, relaxed;
      mlb::Predictors predictors;
      const auto spec = mlb::parse_method(method);
      if (spec.ml) {
        q = mlb::load_network(c.q_model_path());
        predictors.q = &q;
        if (spec.alt) {
          relaxed = mlb::load_network(c.relaxed_model_path());
          predictors.relaxed = &relaxed;
        }
      }
      std::vector<double> history;
      for (int k = 0; spec.prob_bound && k < c.history; ++k) {
        mlb::SolveConfig sc;
        sc.is_alt = true;
        history.push_back(mlb::solve(mlb::make_instance(c, c.history_seed(k)), sc).objective);
      }
      std::cout << mlb::to_json(mlb::run_method(c, problem, method, predictors, history)) << '\n';
    } else if (bch->parsed()) {
      const auto c = resolve(bench_opts);
      const auto out = mlb::cmd_bench(c);
      std::cout << mlb::report_text(out.rows);
      std::printf("%d failed runs; records in %s\n", out.failures, c.out.c_str());
    } else if (rep->parsed()) {
      const std::string out = report_opts.out.value_or(".");
      const auto rows = mlb::cmd_report(inputs, report_opts.baseline.value_or("Alt-L"), out);
      std::cout << mlb::report_text(rows);
    }
  } catch (const mlb::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
