#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mdep/data_io.hpp"
#include "mdep/errors.hpp"
#include "mdep/mean_tests.hpp"
#include "mdep/numeric.hpp"
#include "mdep/simgen.hpp"
#include "mdep/variance.hpp"

namespace mdep {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kTestNew = "T_new";
inline constexpr std::string_view kTestBs = "T_BS";

// Sub-stream tags inside one replicate stream.
inline constexpr std::uint64_t kMeanStream = 1;
inline constexpr std::uint64_t kDataStream1 = 2;
inline constexpr std::uint64_t kDataStream2 = 3;

// A scenario is flagged when degenerate replicates reach this fraction.
inline constexpr double kFailureFlagFraction = 1e-3;

struct ScenarioConfig {
  std::string id;
  bool two_sample = false;
  std::string model;  // catalog label, informational
  ProcessParams process;
  ProcessParams process2;  // second group, two-sample only
  std::size_t n = 0;
  std::size_t n2 = 0;  // two-sample only
  std::vector<std::size_t> m_orders;
  MeanScenario mean = MeanScenario::Null;
  double alpha = 0.05;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  bool run_new = true;
  bool run_bs = false;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool keep_records = true;
  std::vector<ScenarioConfig> scenarios;
};

/// Aggregate of one (scenario, statistic, specified M) cell.
struct SummaryRow {
  std::string scenario;
  std::string test;
  std::size_t n = 0;
  std::size_t n2 = 0;
  std::size_t p = 0;
  std::size_t true_order = 0;
  std::size_t m_order = 0;
  std::string mean;
  double alpha = 0.05;
  std::size_t replicates = 0;
  std::size_t valid = 0;
  std::size_t failed = 0;
  std::size_t rejections = 0;
  double rate = 0.0;
  double mc_se = 0.0;
  bool flagged = false;
};

struct ExperimentSummary {
  std::vector<SummaryRow> rows;
  std::vector<ExperimentRecord> records;  // replicate order within each cell
  double wall_seconds = 0.0;

  const SummaryRow& row(std::string_view scenario, std::string_view test, std::size_t m_order) const {
    for (const auto& r : rows)
      if (r.scenario == scenario && r.test == test && r.m_order == m_order) return r;
    throw ConfigError("no summary row for " + std::string(scenario) + "/" + std::string(test));
  }
};

/// sqrt(r (1 - r) / R); zero when R = 0.
inline double mc_standard_error(double rate, std::size_t replicates) {
  if (replicates == 0) return 0.0;
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(replicates));
}

// ---------------------------------------------------------------------------
// Config parsing and validation
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + std::string(key) + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get_field<T>(j, key, where) : fallback;
}

inline ProcessParams parse_process(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": process must be an object");
  ProcessParams pp;
  pp.p = get_field<std::size_t>(j, "p", where);
  pp.m = get_or<std::size_t>(j, "m", 0, where);
  pp.M = get_field<std::size_t>(j, "M", where);
  pp.phi1 = get_field<double>(j, "phi1", where);
  pp.phi2 = get_field<double>(j, "phi2", where);
  pp.w = get_field<double>(j, "w", where);
  pp.mixing_w = get_or<double>(j, "mixing_w", pp.w, where);
  pp.variant = parse_mixing_variant(get_or<std::string>(j, "variant", "reciprocal-h", where));
  pp.sigma = get_or<double>(j, "sigma", 1.0, where);
  return pp;
}

inline void validate_process(const ProcessParams& pp, const std::string& where) {
  if (pp.p < 1) throw ConfigError(where + ": p must be positive");
  if (pp.factor_dim() <= pp.p) throw ConfigError(where + ": factor dimension m must exceed p");
  if (!(pp.w > 0.0 && pp.w <= 1.0) || !(pp.mixing_w > 0.0 && pp.mixing_w <= 1.0))
    throw ConfigError(where + ": bandwidths must lie in (0, 1]");
  if (!(pp.sigma > 0.0)) throw ConfigError(where + ": sigma must be positive");
}

}  // namespace detail

/// Checks everything that can be checked without generating data.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.scenarios.empty()) throw ConfigError("experiment has no scenarios");
  std::vector<std::string> ids;
  for (const auto& sc : cfg.scenarios) {
    const std::string where = "scenario '" + sc.id + "'";
    if (sc.id.empty()) throw ConfigError("scenario id must be nonempty");
    if (sc.id.find_first_of(",\n\r") != std::string::npos)
      throw ConfigError(where + ": id must not contain commas or newlines");
    if (std::find(ids.begin(), ids.end(), sc.id) != ids.end())
      throw ConfigError(where + ": duplicate id");
    ids.push_back(sc.id);
    if (sc.replicates < 1) throw ConfigError(where + ": replicates must be at least 1");
    if (!(sc.alpha > 0.0 && sc.alpha < 1.0)) throw ConfigError(where + ": alpha must lie in (0, 1)");
    if (!sc.run_new && !sc.run_bs) throw ConfigError(where + ": no statistics requested");
    if (sc.run_new && sc.m_orders.empty()) throw ConfigError(where + ": m_orders is empty");
    detail::validate_process(sc.process, where);
    const bool ts_mean = sc.mean == MeanScenario::TwoSample1 || sc.mean == MeanScenario::TwoSample2;
    if (sc.two_sample) {
      detail::validate_process(sc.process2, where + " group 2");
      if (sc.process.p != sc.process2.p) throw ConfigError(where + ": groups differ in p");
      if (sc.run_bs) throw ConfigError(where + ": T_BS is a one-sample statistic");
      if (sc.mean != MeanScenario::Null && !ts_mean)
        throw ConfigError(where + ": two-sample scenarios take null or two-sample-* means");
    } else if (ts_mean) {
      throw ConfigError(where + ": two-sample mean on a one-sample scenario");
    }
    const std::size_t n_min = sc.two_sample ? std::min(sc.n, sc.n2) : sc.n;
    if (sc.run_bs && n_min < 4) throw ConfigError(where + ": T_BS needs n >= 4");
    if (n_min < 2) throw ConfigError(where + ": n must be at least 2");
    for (std::size_t M : sc.m_orders)
      if (n_min < min_sample_size(M))
        throw ConfigError(where + ": n = " + std::to_string(n_min) + " is too small for M = " +
                          std::to_string(M) + " (need " + std::to_string(min_sample_size(M)) + ")");
  }
}

/// Scenario object accepted in the experiment JSON:
///   {"id", "model": "I".."IV" | "process": {...}, "n", "m_orders", "mean",
///    "alpha", "replicates", "statistics", "seed"}
/// Two-sample scenarios set "two_sample": true and either "true_order" (catalog
/// groups with p = 4 n) or "process" and "process2"; "n2" defaults to "n".
inline ScenarioConfig parse_scenario(const nlohmann::json& j, std::uint64_t default_seed) {
  using detail::get_field;
  using detail::get_or;
  if (!j.is_object()) throw ConfigError("scenario entries must be objects");
  ScenarioConfig sc;
  sc.id = get_field<std::string>(j, "id", "scenario");
  const std::string where = "scenario '" + sc.id + "'";
  sc.two_sample = get_or<bool>(j, "two_sample", false, where);
  sc.n = get_field<std::size_t>(j, "n", where);
  sc.n2 = get_or<std::size_t>(j, "n2", sc.n, where);
  sc.mean = parse_mean_scenario(get_or<std::string>(j, "mean", "null", where));
  sc.alpha = get_or<double>(j, "alpha", 0.05, where);
  sc.replicates = get_field<std::size_t>(j, "replicates", where);
  sc.seed = get_or<std::uint64_t>(j, "seed", default_seed, where);

  if (sc.two_sample) {
    if (j.contains("process")) {
      sc.process = detail::parse_process(j.at("process"), where);
      if (!j.contains("process2")) throw ConfigError(where + ": missing field 'process2'");
      sc.process2 = detail::parse_process(j.at("process2"), where);
      sc.model = "custom";
    } else {
      const auto order = get_field<std::size_t>(j, "true_order", where);
      sc.process = two_sample_params(1, sc.n, order);
      sc.process2 = two_sample_params(2, sc.n, order);
      sc.model = "two-sample";
    }
  } else if (j.contains("process")) {
    sc.process = detail::parse_process(j.at("process"), where);
    sc.model = "custom";
  } else {
    sc.model = get_field<std::string>(j, "model", where);
    sc.process = catalog_params(catalog_entry(sc.model), sc.n);
  }
  if (j.contains("p") && !j.contains("process")) {
    sc.process.p = get_field<std::size_t>(j, "p", where);
    sc.process2.p = sc.process.p;
  }

  sc.m_orders = get_or<std::vector<std::size_t>>(j, "m_orders", {sc.process.M}, where);
  const auto stats = get_or<std::vector<std::string>>(j, "statistics", {std::string(kTestNew)}, where);
  sc.run_new = sc.run_bs = false;
  for (const auto& s : stats) {
    if (s == kTestNew) sc.run_new = true;
    else if (s == kTestBs) sc.run_bs = true;
    else throw ConfigError(where + ": unknown statistic '" + s + "'");
  }
  return sc;
}

inline ExperimentConfig parse_experiment_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  cfg.schema_version = detail::get_field<int>(j, "schema_version", "config");
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  cfg.seed = detail::get_field<std::uint64_t>(j, "seed", "config");
  cfg.threads = detail::get_or<std::size_t>(j, "threads", 1, "config");
  cfg.keep_records = detail::get_or<bool>(j, "records", true, "config");
  if (!j.contains("scenarios") || !j.at("scenarios").is_array())
    throw ConfigError("config: 'scenarios' must be an array");
  for (const auto& s : j.at("scenarios")) cfg.scenarios.push_back(parse_scenario(s, cfg.seed));
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Runs body(i) for i in [0, count) on `threads` workers. The first exception
/// is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

struct Outcome {
  bool failed = false;
  double statistic = 0.0;
  double p_value = 0.0;
  bool reject = false;
};

inline Outcome outcome_of(const TestResult& r) { return {false, r.statistic, r.p_value, r.reject}; }

/// Resolved scenario: model specs are built once and shared by all workers.
struct ScenarioPlan {
  const ScenarioConfig* cfg = nullptr;
  std::unique_ptr<FactorModelSpec> spec1;
  std::unique_ptr<FactorModelSpec> spec2;
  std::uint64_t domain = 0;
  std::size_t cells = 0;  // statistics per replicate
};

inline ScenarioPlan plan_scenario(const ScenarioConfig& sc) {
  ScenarioPlan plan;
  plan.cfg = &sc;
  plan.spec1 = std::make_unique<FactorModelSpec>(build_spec(sc.process));
  if (sc.two_sample) plan.spec2 = std::make_unique<FactorModelSpec>(build_spec(sc.process2));
  plan.domain = fnv1a64(sc.id);
  plan.cells = (sc.run_new ? sc.m_orders.size() : 0) + (sc.run_bs ? 1 : 0);
  return plan;
}

/// All statistics of one replicate, in cell order: T_new for each specified M,
/// then T_BS.
inline void run_replicate(const ScenarioPlan& plan, std::uint64_t replicate, Outcome* out) {
  const ScenarioConfig& sc = *plan.cfg;
  const RngStream base(sc.seed, plan.domain, replicate);
  RngStream mean_stream = base.substream(kMeanStream);
  const Eigen::VectorXd mu = sample_mean_scenario(sc.mean, sc.process.p, mean_stream);
  RngStream data1 = base.substream(kDataStream1);
  const PreparedSample x1(generate(*plan.spec1, sc.n, data1, mu));

  std::size_t cell = 0;
  if (sc.two_sample) {
    RngStream data2 = base.substream(kDataStream2);
    const PreparedSample x2(
        generate(*plan.spec2, sc.n2, data2, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc.process2.p))));
    for (std::size_t M : sc.m_orders) {
      try {
        out[cell] = outcome_of(test_two_sample(x1, x2, M, sc.alpha));
      } catch (const DegenerateVarianceError&) {
        out[cell] = Outcome{true};
      }
      ++cell;
    }
    return;
  }
  if (sc.run_new) {
    for (std::size_t M : sc.m_orders) {
      try {
        out[cell] = outcome_of(test_one_sample(x1, M, sc.alpha));
      } catch (const DegenerateVarianceError&) {
        out[cell] = Outcome{true};
      }
      ++cell;
    }
  }
  if (sc.run_bs) {
    try {
      out[cell] = outcome_of(test_bs(x1, sc.alpha));
    } catch (const DegenerateVarianceError&) {
      out[cell] = Outcome{true};
    }
  }
}

}  // namespace detail

/// Runs every scenario. Results depend only on the config, never on the
/// thread count: each replicate owns its random stream and outcomes are
/// aggregated in replicate order.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  ExperimentSummary summary;
  for (const auto& sc : cfg.scenarios) {
    const detail::ScenarioPlan plan = detail::plan_scenario(sc);
    std::vector<detail::Outcome> outcomes(sc.replicates * plan.cells);
    parallel_for(sc.replicates, cfg.threads, [&](std::size_t r) {
      detail::run_replicate(plan, r, outcomes.data() + r * plan.cells);
    });

    std::vector<std::pair<std::string, std::size_t>> cells;
    if (sc.run_new)
      for (std::size_t M : sc.m_orders) cells.emplace_back(std::string(kTestNew), M);
    if (sc.run_bs) cells.emplace_back(std::string(kTestBs), 0);

    for (std::size_t c = 0; c < cells.size(); ++c) {
      SummaryRow row;
      row.scenario = sc.id;
      row.test = cells[c].first;
      row.n = sc.n;
      row.n2 = sc.two_sample ? sc.n2 : 0;
      row.p = sc.process.p;
      row.true_order = sc.process.M;
      row.m_order = cells[c].second;
      row.mean = std::string(to_string(sc.mean));
      row.alpha = sc.alpha;
      row.replicates = sc.replicates;
      for (std::size_t r = 0; r < sc.replicates; ++r) {
        const detail::Outcome& o = outcomes[r * plan.cells + c];
        if (o.failed) {
          ++row.failed;
          continue;
        }
        ++row.valid;
        if (o.reject) ++row.rejections;
        if (cfg.keep_records)
          summary.records.push_back({sc.id, row.test, sc.n, sc.process.p, row.m_order, r, o.statistic,
                                     o.p_value, o.reject});
      }
      row.rate = row.valid ? static_cast<double>(row.rejections) / static_cast<double>(row.valid) : 0.0;
      row.mc_se = mc_standard_error(row.rate, row.valid);
      row.flagged = static_cast<double>(row.failed) >= kFailureFlagFraction * static_cast<double>(row.replicates);
      summary.rows.push_back(std::move(row));
    }
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

inline constexpr std::string_view kSummaryHeader =
    "scenario,test,n,n2,p,true_order,m_order,mean,alpha,replicates,valid,failed,rejections,rate,"
    "mc_se,flagged,failure_policy";

/// Deterministic summary CSV. Wall time is deliberately left out.
inline std::string format_summary_csv(const ExperimentSummary& summary) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const auto& r : summary.rows) {
    os << r.scenario << ',' << r.test << ',' << r.n << ',' << r.n2 << ',' << r.p << ',' << r.true_order
       << ',' << r.m_order << ',' << r.mean << ',' << format_double(r.alpha) << ',' << r.replicates << ','
       << r.valid << ',' << r.failed << ',' << r.rejections << ',' << format_double(r.rate) << ','
       << format_double(r.mc_se) << ',' << (r.flagged ? 1 : 0) << ",failed-excluded-from-rate\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Reference tables
// ---------------------------------------------------------------------------

enum class Block { Size, Power1, Power2 };

inline std::string_view to_string(Block b) {
  switch (b) {
    case Block::Size: return "size";
    case Block::Power1: return "power1";
    case Block::Power2: return "power2";
  }
  return "size";
}

inline Block parse_block(std::string_view s) {
  for (auto b : {Block::Size, Block::Power1, Block::Power2})
    if (to_string(b) == s) return b;
  throw ConfigError("unknown block '" + std::string(s) + "' (expected size, power1 or power2)");
}

/// One target cell of a reference table.
struct ReferenceCell {
  int table = 0;
  Block block = Block::Size;
  std::string_view test;
  std::string_view row;  // model label, or the lag order for table 2
  std::size_t n = 0;
  std::size_t m_order = 0;  // specified M
  double target = 0.0;
};

namespace detail {

inline void push_row(std::vector<ReferenceCell>& out, int table, Block block, std::string_view test,
                     std::string_view row, std::size_t m_order, const std::vector<std::size_t>& ns,
                     const std::vector<double>& values) {
  for (std::size_t i = 0; i < ns.size(); ++i)
    out.push_back({table, block, test, row, ns[i], m_order, values[i]});
}

}  // namespace detail

/// Rejection rates at alpha = 0.05 from 10^4 replicates per cell, as printed
/// in the original simulation study.
inline const std::vector<ReferenceCell>& reference_catalog() {
  static const std::vector<ReferenceCell> cells = [] {
    std::vector<ReferenceCell> c;
    const std::vector<std::size_t> n1 = {40, 60, 80, 100};
    // Table 1: one-sample models, T_new at the true M and T_BS.
    struct Row1 {
      std::string_view model;
      std::size_t M;
      std::vector<double> v[6];  // size new, size bs, p1 new, p1 bs, p2 new, p2 bs
    };
    const std::vector<Row1> t1 = {
        {"I", 0,
         {{.061, .063, .055, .054}, {.097, .088, .079, .074}, {.989, .999, 1, 1}, {.994, .999, 1, 1},
          {1, 1, 1, 1}, {1, 1, 1, 1}}},
        {"II", 1,
         {{.076, .070, .070, .068}, {.442, .533, .611, .674}, {.242, .282, .319, .35},
          {.678, .786, .858, .906}, {.818, .989, .999, 1}, {.934, 1, 1, 1}}},
        {"III", 2,
         {{.072, .071, .068, .065}, {.929, .979, .996, .999}, {.125, .135, .146, .153},
          {.952, .989, .997, 1}, {.635, .850, .961, .992}, {.998, 1, 1, 1}}},
        {"IV", 3,
         {{.060, .063, .062, .058}, {.998, 1, 1, 1}, {.084, .098, .102, .098}, {.997, 1, 1, 1},
          {.445, .703, .867, .939}, {1, 1, 1, 1}}},
    };
    const Block blocks[3] = {Block::Size, Block::Power1, Block::Power2};
    for (int b = 0; b < 3; ++b)
      for (const auto& r : t1) {
        detail::push_row(c, 1, blocks[b], kTestNew, r.model, r.M, n1, r.v[2 * b]);
        detail::push_row(c, 1, blocks[b], kTestBs, r.model, 0, n1, r.v[2 * b + 1]);
      }

    // Table 2: two-sample design, rows are the true (and specified) M.
    const std::vector<std::size_t> n2 = {40, 60, 80};
    const std::vector<std::vector<double>> t2[3] = {
        {{.0866, .0891, .0773}, {.0767, .0758, .0696}, {.0627, .0651, .0607}},
        {{.1128, .1190, .1239}, {.0860, .0915, .0882}, {.0642, .0734, .0735}},
        {{.3003, .4222, .6070}, {.1712, .2299, .3525}, {.1103, .1594, .2369}},
    };
    const std::string_view orders[3] = {"1", "2", "3"};
    for (int b = 0; b < 3; ++b)
      for (std::size_t M = 1; M <= 3; ++M)
        detail::push_row(c, 2, blocks[b], kTestNew, orders[M - 1], M, n2, t2[b][M - 1]);

    // Table 3: model III (true M = 2) tested with specified M = 0..4.
    const std::vector<std::vector<double>> t3[3] = {
        {{.9110, .1410, .0717, .0685, .0631},
         {.9741, .1579, .0709, .0715, .0687},
         {.9947, .1725, .0683, .0669, .0656},
         {.9987, .1847, .0645, .0647, .0636}},
        {{.9371, .2178, .1245, .1202, .1064},
         {.9853, .2598, .1350, .1321, .1260},
         {.9970, .2965, .1458, .1426, .1366},
         {.9993, .3232, .1532, .1510, .1482}},
        {{.9976, .7613, .6347, .5995, .5471},
         {1, .9291, .8504, .8382, .8183},
         {1, .9871, .9609, .9576, .9530},
         {1, .9978, .9916, .9904, .9892}},
    };
    for (int b = 0; b < 3; ++b)
      for (std::size_t i = 0; i < n1.size(); ++i)
        for (std::size_t M = 0; M <= 4; ++M)
          c.push_back({3, blocks[b], kTestNew, "III", n1[i], M, t3[b][i][M]});
    return c;
  }();
  return cells;
}

inline const ReferenceCell& reference_cell(int table, Block block, std::string_view test, std::string_view row,
                                           std::size_t n, std::size_t m_order) {
  for (const auto& c : reference_catalog())
    if (c.table == table && c.block == block && c.test == test && c.row == row && c.n == n &&
        c.m_order == m_order)
      return c;
  throw ConfigError("no reference cell for table " + std::to_string(table));
}

inline std::string table_scenario_id(int table, std::string_view row, std::size_t n, Block block) {
  return "t" + std::to_string(table) + "-" + std::string(row) + "-n" + std::to_string(n) + "-" +
         std::string(to_string(block));
}

/// Experiment reproducing the requested blocks of a reference table.
inline ExperimentConfig table_experiment(int table, std::size_t replicates, std::uint64_t seed,
                                         std::size_t threads, const std::vector<Block>& blocks) {
  if (table < 1 || table > 3) throw ConfigError("table id must be 1, 2 or 3");
  if (blocks.empty()) throw ConfigError("no table blocks requested");
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.keep_records = false;
  for (Block block : blocks) {
    auto base = [&](std::string_view row, std::size_t n) {
      ScenarioConfig sc;
      sc.id = table_scenario_id(table, row, n, block);
      sc.n = n;
      sc.alpha = 0.05;
      sc.replicates = replicates;
      sc.seed = seed;
      return sc;
    };
    if (table == 1 || table == 3) {
      const MeanScenario mean = block == Block::Size     ? MeanScenario::Null
                                : block == Block::Power1 ? MeanScenario::Power1
                                                         : MeanScenario::Power2;
      const std::vector<std::string_view> models =
          table == 1 ? std::vector<std::string_view>{"I", "II", "III", "IV"} : std::vector<std::string_view>{"III"};
      for (auto model : models)
        for (std::size_t n : {40, 60, 80, 100}) {
          ScenarioConfig sc = base(model, n);
          sc.model = std::string(model);
          sc.process = catalog_params(catalog_entry(model), n);
          sc.mean = mean;
          sc.run_bs = table == 1;
          if (table == 1) sc.m_orders = {sc.process.M};
          else sc.m_orders = {0, 1, 2, 3, 4};
          cfg.scenarios.push_back(std::move(sc));
        }
    } else {
      const MeanScenario mean = block == Block::Size     ? MeanScenario::Null
                                : block == Block::Power1 ? MeanScenario::TwoSample1
                                                         : MeanScenario::TwoSample2;
      for (std::size_t M = 1; M <= 3; ++M)
        for (std::size_t n : {40, 60, 80}) {
          ScenarioConfig sc = base(std::to_string(M), n);
          sc.two_sample = true;
          sc.model = "two-sample";
          sc.n2 = n;
          sc.process = two_sample_params(1, n, M);
          sc.process2 = two_sample_params(2, n, M);
          sc.mean = mean;
          sc.m_orders = {M};
          cfg.scenarios.push_back(std::move(sc));
        }
    }
  }
  validate(cfg);
  return cfg;
}

struct TableRow {
  ReferenceCell cell;
  double observed = 0.0;
  double se = 0.0;
  std::size_t failed = 0;
  double abs_dev() const { return std::abs(observed - cell.target); }
};

struct TableReport {
  std::vector<TableRow> rows;
  ExperimentSummary summary;
};

/// Runs the requested blocks and pairs each observed rate with its target.
inline TableReport reproduce_table(int table, std::size_t replicates, std::uint64_t seed, std::size_t threads,
                                   const std::vector<Block>& blocks = {Block::Size, Block::Power1,
                                                                       Block::Power2}) {
  const ExperimentConfig cfg = table_experiment(table, replicates, seed, threads, blocks);
  TableReport report;
  report.summary = run_experiment(cfg);
  for (Block block : blocks)
    for (const auto& cell : reference_catalog()) {
      if (cell.table != table || cell.block != block) continue;
      const std::string id = table_scenario_id(table, cell.row, cell.n, block);
      const SummaryRow& r = report.summary.row(id, cell.test, cell.m_order);
      report.rows.push_back({cell, r.rate, r.mc_se, r.failed});
    }
  return report;
}

inline std::string format_table_csv(const TableReport& report) {
  std::ostringstream os;
  os << "table,block,test,row,n,m_order,target,observed,se,abs_dev,failed\n";
  for (const auto& r : report.rows)
    os << r.cell.table << ',' << to_string(r.cell.block) << ',' << r.cell.test << ',' << r.cell.row << ','
       << r.cell.n << ',' << r.cell.m_order << ',' << format_double(r.cell.target) << ','
       << format_double(r.observed) << ',' << format_double(r.se) << ',' << format_double(r.abs_dev())
       << ',' << r.failed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// QQ export
// ---------------------------------------------------------------------------

struct QQPoint {
  double theoretical = 0.0;
  double empirical = 0.0;
};

/// Uniform plotting positions (k - 0.5)/R against sorted p-values.
inline std::vector<QQPoint> qq_points(std::vector<double> p_values) {
  if (p_values.empty()) throw ConfigError("qq: no p-values");
  std::sort(p_values.begin(), p_values.end());
  const double R = static_cast<double>(p_values.size());
  std::vector<QQPoint> out(p_values.size());
  for (std::size_t k = 0; k < p_values.size(); ++k)
    out[k] = {(static_cast<double>(k) + 0.5) / R, p_values[k]};
  return out;
}

/// max_k |p_(k) - (k - 0.5)/R|.
inline double qq_max_deviation(const std::vector<QQPoint>& pts) {
  double d = 0.0;
  for (const auto& q : pts) d = std::max(d, std::abs(q.empirical - q.theoretical));
  return d;
}

inline std::string format_qq_csv(const std::vector<QQPoint>& pts) {
  std::ostringstream os;
  os << "theoretical,empirical\n";
  for (const auto& q : pts) os << format_double(q.theoretical) << ',' << format_double(q.empirical) << '\n';
  return os.str();
}

inline void qq_export(const std::vector<double>& p_values, const std::filesystem::path& out) {
  detail::write_file(out, format_qq_csv(qq_points(p_values)));
}

}  // namespace mdep
