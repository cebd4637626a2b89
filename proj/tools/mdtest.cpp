// mdtest: high-dimensional mean tests for M-dependent samples.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 degenerate statistic on user data.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdep/mdep.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kDegenerate = 4 };

nlohmann::json result_json(const mdep::TestResult& r, std::size_t M) {
  return {{"statistic", r.statistic},
          {"p_value", r.p_value},
          {"reject", r.reject},
          {"alpha", r.alpha},
          {"m_order", M},
          {"numerator", r.numerator},
          {"variance", r.variance},
          {"tr_omega_hat", r.diagnostics.tr_omega_hat},
          {"min_pair_count", r.diagnostics.min_pair_count}};
}

void print_result(const mdep::TestResult& r, std::size_t M, bool as_json, nlohmann::json extra) {
  if (as_json) {
    nlohmann::json j = result_json(r, M);
    j.update(extra);
    std::cout << j.dump(2) << '\n';
    return;
  }
  for (auto it = extra.begin(); it != extra.end(); ++it) std::cout << it.key() << ": " << it.value() << '\n';
  std::cout << "m_order: " << M << '\n'
            << "statistic: " << mdep::format_double(r.statistic) << '\n'
            << "p_value: " << mdep::format_double(r.p_value) << '\n'
            << "reject: " << (r.reject ? "yes" : "no") << " (alpha " << r.alpha << ")\n";
}

std::vector<mdep::Block> parse_blocks(const std::string& list) {
  std::vector<mdep::Block> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(mdep::parse_block(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean tests for high-dimensional M-dependent time series"};
  app.require_subcommand(1);

  // test one-sample / two-sample
  auto* test = app.add_subcommand("test", "Run a mean test on CSV data");
  test->require_subcommand(1);
  std::string input, input1, input2;
  std::size_t m_order = 0;
  double alpha = 0.05;
  bool as_json = false;

  auto* one = test->add_subcommand("one-sample", "Test H0: mu = 0");
  one->add_option("--input", input, "n x p CSV, one observation per row")->required();
  one->add_option("--m-order", m_order, "Dependence order M")->required();
  one->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  one->add_flag("--json", as_json, "Print JSON");

  auto* two = test->add_subcommand("two-sample", "Test H0: mu1 = mu2");
  two->add_option("--input1", input1, "First sample CSV")->required();
  two->add_option("--input2", input2, "Second sample CSV")->required();
  two->add_option("--m-order", m_order, "Dependence order M")->required();
  two->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  two->add_flag("--json", as_json, "Print JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a JSON config");
  std::string config_path, out_path, summary_path;
  std::size_t threads = 0;
  sim->add_option("--config", config_path, "Experiment JSON")->required();
  sim->add_option("--out", out_path, "Per-replicate results CSV")->required();
  sim->add_option("--summary", summary_path, "Summary CSV (default: stdout)");
  sim->add_option("--threads", threads, "Worker threads (overrides the config)");

  // reproduce-table
  auto* rep = app.add_subcommand("reproduce-table", "Reproduce a reference size/power table");
  int table = 1;
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
  std::string blocks = "size,power1,power2";
  rep->add_option("--table", table, "Table id")->required()->check(CLI::Range(1, 3));
  rep->add_option("--reps", reps, "Replicates per cell")->capture_default_str();
  rep->add_option("--seed", seed, "Master seed")->capture_default_str();
  rep->add_option("--out", out_path, "Output CSV")->required();
  rep->add_option("--threads", threads, "Worker threads");
  rep->add_option("--blocks", blocks, "Comma-separated subset of size,power1,power2")->capture_default_str();

  // qq
  auto* qq = app.add_subcommand("qq", "QQ data of p-values against the uniform law");
  std::string pvalues, filter_scenario, filter_test;
  qq->add_option("--pvalues", pvalues, "Results CSV from simulate")->required();
  qq->add_option("--out", out_path, "Output CSV")->required();
  qq->add_option("--scenario", filter_scenario, "Only records of this scenario");
  qq->add_option("--test", filter_test, "Only records of this statistic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*one) {
      const mdep::ObservationMatrix x = mdep::load_matrix(input);
      const auto r = mdep::test_one_sample(x, m_order, alpha);
      print_result(r, m_order, as_json, {{"n", x.n()}, {"p", x.p()}});
    } else if (*two) {
      mdep::TwoSampleInput in{mdep::load_matrix(input1), mdep::load_matrix(input2), m_order};
      const std::size_t n1 = in.x1.n(), n2 = in.x2.n(), p = in.x1.p();
      const auto r = mdep::test_two_sample(in, alpha);
      print_result(r, m_order, as_json, {{"n1", n1}, {"n2", n2}, {"p", p}});
    } else if (*sim) {
      mdep::ExperimentConfig cfg = mdep::load_experiment_config(config_path);
      if (threads > 0) cfg.threads = threads;
      cfg.keep_records = true;
      const auto summary = mdep::run_experiment(cfg);
      mdep::save_results(summary.records, out_path);
      const std::string csv = mdep::format_summary_csv(summary);
      if (summary_path.empty()) std::cout << csv;
      else mdep::detail::write_file(summary_path, csv);
      std::cerr << "wall time: " << summary.wall_seconds << " s\n";
    } else if (*rep) {
      const auto report = mdep::reproduce_table(table, reps, seed, threads > 0 ? threads : 1, parse_blocks(blocks));
      mdep::detail::write_file(out_path, mdep::format_table_csv(report));
      std::cerr << "wall time: " << report.summary.wall_seconds << " s\n";
    } else if (*qq) {
      std::vector<double> ps;
      for (const auto& rec : mdep::load_results(pvalues)) {
        if (!filter_scenario.empty() && rec.scenario != filter_scenario) continue;
        if (!filter_test.empty() && rec.test != filter_test) continue;
        ps.push_back(rec.p_value);
      }
      mdep::qq_export(ps, out_path);
    }
  } catch (const mdep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const mdep::DegenerateVarianceError& e) {
    std::cerr << "degenerate statistic: " << e.what() << '\n';
    return kDegenerate;
  } catch (const mdep::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
