#ifndef FUZZYSAIL_HARNESS_HPP_
#define FUZZYSAIL_HARNESS_HPP_

// Batch experiments, per-noise significance tables and control surfaces.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <exception>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fuzzysail/controllers.hpp"
#include "fuzzysail/csv.hpp"
#include "fuzzysail/fuzzy.hpp"
#include "fuzzysail/sim.hpp"
#include "fuzzysail/stats.hpp"

namespace fuzzysail {

/// Everything besides the controller spec that determines a run.
struct ExperimentSetup {
  FuzzySystem fuzzy;
  EpisodeConfig episode;
  PIGains pi;
  PerturbMode ns_mode = PerturbMode::kPerTerm;
  bool keep_traces = false;
};

inline RunRecord run_single(const ControllerSpec& spec, NoiseLevel noise,
                            std::uint64_t seed, const ExperimentSetup& setup) {
  auto controller =
      make_controller(spec, setup.fuzzy, controller_seed(seed), setup.pi, setup.ns_mode);
  RunRecord r = run_episode(*controller, setup.episode, noise, seed);
  r.controller = spec.label();
  return r;
}

struct BatchResult {
  ControllerSpec spec;
  NoiseLevel noise = NoiseLevel::kLow;
  std::uint64_t base_seed = 0;
  std::vector<RunRecord> runs;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double mean_time = 0.0;
  double std_time = 0.0;
  bool std_defined = false;  // false for single-run batches (std reported as 0)
  int n_incomplete = 0;

  std::vector<double> rmses() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.rmse);
    return v;
  }
  std::vector<double> times() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.time_taken);
    return v;
  }
};

inline BatchResult summarize(const ControllerSpec& spec, NoiseLevel noise,
                             std::uint64_t base_seed, std::vector<RunRecord> runs) {
  if (runs.empty()) throw std::invalid_argument("batch has no runs");
  BatchResult b;
  b.spec = spec;
  b.noise = noise;
  b.base_seed = base_seed;
  b.runs = std::move(runs);
  const auto r = b.rmses();
  const auto t = b.times();
  b.mean_rmse = mean(r);
  b.std_rmse = sample_stddev(r);
  b.mean_time = mean(t);
  b.std_time = sample_stddev(t);
  b.std_defined = b.runs.size() > 1;
  for (const auto& run : b.runs) b.n_incomplete += run.completed ? 0 : 1;
  return b;
}

/// `runs` episodes with seeds base_seed, base_seed + 1, ...
inline BatchResult batch_run(const ControllerSpec& spec, NoiseLevel noise, int runs,
                             std::uint64_t base_seed, const ExperimentSetup& setup) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  spec.validate();
  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    RunRecord r = run_single(spec, noise, base_seed + static_cast<std::uint64_t>(i), setup);
    if (!setup.keep_traces) r.trace.clear();
    records.push_back(std::move(r));
  }
  return summarize(spec, noise, base_seed, std::move(records));
}

/// Controller rows of the published comparison tables, in table order.
inline std::vector<ControllerSpec> paper_rows() {
  std::vector<ControllerSpec> rows{{ControllerKind::kPI, {}}, {ControllerKind::kType1, {}}};
  for (double p : {2.0, 5.0, 10.0, 20.0}) rows.push_back({ControllerKind::kNonStationary, p});
  for (double p : {2.0, 5.0, 10.0, 20.0}) rows.push_back({ControllerKind::kIntervalType2, p});
  for (double p : {2.0, 5.0, 10.0, 25.0, 50.0}) rows.push_back({ControllerKind::kDualSurface, p});
  return rows;
}

// ---------------------------------------------------------------------------
// Significance tables

inline constexpr double kSignificanceLevel = 0.05;

struct TableRow {
  ControllerSpec spec;
  double mean_rmse = 0.0, std_rmse = 0.0;
  double mean_time = 0.0, std_time = 0.0;
  double p_rmse = 1.0, p_time = 1.0;  // vs the type-1 baseline
  int n_incomplete = 0;

  // Derived annotations.
  bool significant_rmse = false, significant_time = false;
  bool best_in_category_rmse = false, best_in_category_time = false;
  bool best_overall_rmse = false, best_overall_time = false;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct SignificanceTable {
  NoiseLevel noise = NoiseLevel::kLow;
  std::vector<TableRow> rows;

  friend bool operator==(const SignificanceTable&, const SignificanceTable&) = default;
};

/// Recomputes significance flags and best-in-category / best-overall
/// markers (lowest mean) from the numeric columns.
inline void annotate(SignificanceTable& table) {
  std::map<ControllerKind, std::pair<double, double>> best_cat;
  double best_rmse = std::numeric_limits<double>::infinity();
  double best_time = std::numeric_limits<double>::infinity();
  for (const auto& r : table.rows) {
    auto [it, inserted] = best_cat.try_emplace(r.spec.kind, r.mean_rmse, r.mean_time);
    if (!inserted) {
      it->second.first = std::min(it->second.first, r.mean_rmse);
      it->second.second = std::min(it->second.second, r.mean_time);
    }
    best_rmse = std::min(best_rmse, r.mean_rmse);
    best_time = std::min(best_time, r.mean_time);
  }
  for (auto& r : table.rows) {
    r.significant_rmse = r.p_rmse < kSignificanceLevel;
    r.significant_time = r.p_time < kSignificanceLevel;
    r.best_in_category_rmse = r.mean_rmse == best_cat[r.spec.kind].first;
    r.best_in_category_time = r.mean_time == best_cat[r.spec.kind].second;
    r.best_overall_rmse = r.mean_rmse == best_rmse;
    r.best_overall_time = r.mean_time == best_time;
  }
}

/// One row per batch with two-sided Mann-Whitney p-values against the
/// type-1 baseline. All batches must share the baseline's noise level.
inline SignificanceTable significance_table(const BatchResult& baseline,
                                            const std::vector<BatchResult>& batches) {
  SignificanceTable table;
  table.noise = baseline.noise;
  const auto base_r = baseline.rmses();
  const auto base_t = baseline.times();
  for (const auto& b : batches) {
    if (b.noise != baseline.noise) {
      throw std::invalid_argument("batch " + b.spec.label() +
                                  " does not share the baseline noise level");
    }
    TableRow row;
    row.spec = b.spec;
    row.mean_rmse = b.mean_rmse;
    row.std_rmse = b.std_rmse;
    row.mean_time = b.mean_time;
    row.std_time = b.std_time;
    row.n_incomplete = b.n_incomplete;
    row.p_rmse = mann_whitney(b.rmses(), base_r).p;
    row.p_time = mann_whitney(b.times(), base_t).p;
    table.rows.push_back(row);
  }
  annotate(table);
  return table;
}

inline constexpr const char* kTableHeader =
    "variety,parameter,mean_rmse,std_rmse,mean_time,std_time,p_rmse_vs_t1,p_time_vs_t1,"
    "n_incomplete";

inline void write_table_csv(std::ostream& out, const SignificanceTable& table) {
  using csv::format_double;
  out << kTableHeader << '\n';
  for (const auto& r : table.rows) {
    out << to_string(r.spec.kind) << ',' << r.spec.param_label() << ','
        << format_double(r.mean_rmse) << ',' << format_double(r.std_rmse) << ','
        << format_double(r.mean_time) << ',' << format_double(r.std_time) << ','
        << format_double(r.p_rmse) << ',' << format_double(r.p_time) << ','
        << r.n_incomplete << '\n';
  }
}

inline ControllerSpec parse_spec_cells(const std::string& variety, const std::string& param) {
  auto kind = parse_controller_kind(variety);
  if (!kind) throw csv::ParseError("unknown variety '" + variety + "'");
  ControllerSpec spec{*kind, {}};
  if (param != "NA") spec.param = csv::parse_double(param);
  return spec;
}

inline SignificanceTable read_table_csv(std::istream& in, NoiseLevel noise) {
  const auto t = csv::read(in);
  const auto c_var = t.column("variety"), c_par = t.column("parameter");
  const auto c_mr = t.column("mean_rmse"), c_sr = t.column("std_rmse");
  const auto c_mt = t.column("mean_time"), c_st = t.column("std_time");
  const auto c_pr = t.column("p_rmse_vs_t1"), c_pt = t.column("p_time_vs_t1");
  const auto c_ni = t.column("n_incomplete");
  SignificanceTable table;
  table.noise = noise;
  for (const auto& cells : t.rows) {
    TableRow r;
    r.spec = parse_spec_cells(cells[c_var], cells[c_par]);
    r.mean_rmse = csv::parse_double(cells[c_mr]);
    r.std_rmse = csv::parse_double(cells[c_sr]);
    r.mean_time = csv::parse_double(cells[c_mt]);
    r.std_time = csv::parse_double(cells[c_st]);
    r.p_rmse = csv::parse_double(cells[c_pr]);
    r.p_time = csv::parse_double(cells[c_pt]);
    r.n_incomplete = static_cast<int>(csv::parse_double(cells[c_ni]));
    table.rows.push_back(r);
  }
  annotate(table);
  return table;
}

/// Human-readable rendering: '*' marks p < 0.05 against type-1, 'c' best
/// in category, 'B' best overall.
inline void write_table_text(std::ostream& out, const SignificanceTable& table) {
  out << "noise: " << to_string(table.noise) << '\n';
  out << std::left << std::setw(16) << "Variety" << std::setw(6) << "Param" << std::right
      << std::setw(13) << "Mean RMSE" << std::setw(10) << "Std RMSE" << std::setw(13)
      << "Mean Time" << std::setw(10) << "Std Time" << std::setw(10) << "p(RMSE)"
      << std::setw(10) << "p(Time)" << std::setw(6) << "Inc" << '\n';
  auto mark = [](bool sig, bool cat, bool all) {
    std::string m;
    m += sig ? '*' : ' ';
    m += cat ? 'c' : ' ';
    m += all ? 'B' : ' ';
    return m;
  };
  for (const auto& r : table.rows) {
    out << std::left << std::setw(16) << display_name(r.spec.kind) << std::setw(6)
        << r.spec.param_label() << std::right << std::fixed << std::setprecision(2)
        << std::setw(10) << r.mean_rmse
        << mark(r.significant_rmse, r.best_in_category_rmse, r.best_overall_rmse)
        << std::setw(10) << r.std_rmse << std::setw(10) << r.mean_time
        << mark(r.significant_time, r.best_in_category_time, r.best_overall_time)
        << std::setw(10) << r.std_time << std::setprecision(4) << std::setw(10) << r.p_rmse
        << std::setw(10) << r.p_time << std::setw(6) << r.n_incomplete << '\n';
    out.unsetf(std::ios::fixed);
  }
}

// ---------------------------------------------------------------------------
// Per-run CSV (input to the stats subcommand)

inline constexpr const char* kRunsHeader = "variety,parameter,noise,seed,completed,time,rmse";

inline void write_runs_csv(std::ostream& out, const std::vector<BatchResult>& batches) {
  out << kRunsHeader << '\n';
  for (const auto& b : batches) {
    for (const auto& r : b.runs) {
      out << to_string(b.spec.kind) << ',' << b.spec.param_label() << ','
          << to_string(b.noise) << ',' << r.seed << ',' << (r.completed ? 1 : 0) << ','
          << csv::format_double(r.time_taken) << ',' << csv::format_double(r.rmse) << '\n';
    }
  }
}

/// Reads one metric column ("rmse" or "time") from a per-run CSV.
inline std::vector<double> read_runs_metric(std::istream& in, const std::string& metric) {
  if (metric != "rmse" && metric != "time") {
    throw std::invalid_argument("metric must be 'rmse' or 'time'");
  }
  const auto t = csv::read(in);
  const auto col = t.column(metric);
  std::vector<double> out;
  for (const auto& cells : t.rows) out.push_back(csv::parse_double(cells[col]));
  if (out.empty()) throw csv::ParseError("no runs in file");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepResult {
  std::vector<BatchResult> batches;        // noise-major, paper row order
  std::vector<SignificanceTable> tables;   // one per noise level
};

/// Runs every row for every noise level. Work is spread over `threads`
/// workers; results are placed by index, so output never depends on
/// scheduling.
inline SweepResult sweep(const std::vector<NoiseLevel>& noises,
                         const std::vector<ControllerSpec>& rows, int runs,
                         std::uint64_t base_seed, const ExperimentSetup& setup,
                         unsigned threads = std::thread::hardware_concurrency()) {
  const auto baseline = std::find_if(rows.begin(), rows.end(), [](const auto& s) {
    return s.kind == ControllerKind::kType1;
  });
  if (baseline == rows.end()) throw std::invalid_argument("sweep needs a type-1 row");
  const std::size_t base_idx = static_cast<std::size_t>(baseline - rows.begin());

  const std::size_t n_tasks = noises.size() * rows.size();
  std::vector<BatchResult> results(n_tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      try {
        results[i] = batch_run(rows[i % rows.size()], noises[i / rows.size()], runs,
                               base_seed, setup);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_tasks)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SweepResult out;
  for (std::size_t n = 0; n < noises.size(); ++n) {
    std::vector<BatchResult> level(results.begin() + static_cast<std::ptrdiff_t>(n * rows.size()),
                                   results.begin() + static_cast<std::ptrdiff_t>((n + 1) * rows.size()));
    out.tables.push_back(significance_table(level[base_idx], level));
  }
  out.batches = std::move(results);
  return out;
}

// ---------------------------------------------------------------------------
// Control surfaces

/// Controller output over error x delta-error, both from -180 to 180 in 1
/// degree steps. Row-major by error.
struct SurfaceGrid {
  static constexpr int kSize = 361;
  static constexpr double kMin = -180.0;
  std::vector<double> values = std::vector<double>(kSize * kSize, 0.0);

  static double axis(int i) { return kMin + i; }
  double at(int ie, int ide) const { return values[static_cast<std::size_t>(ie * kSize + ide)]; }
  double& at(int ie, int ide) { return values[static_cast<std::size_t>(ie * kSize + ide)]; }

  friend bool operator==(const SurfaceGrid&, const SurfaceGrid&) = default;
};

/// Tabulates a fuzzy controller's raw output with the error memory bypassed
/// (each cell evaluated at its own (error, delta-error)). Non-stationary
/// cells draw fresh instantiations in row-major order from `seed`'s stream.
inline SurfaceGrid surface(const ControllerSpec& spec, const FuzzySystem& sys,
                           std::uint64_t seed = 0,
                           PerturbMode ns_mode = PerturbMode::kPerTerm) {
  if (spec.kind == ControllerKind::kPI) {
    throw std::invalid_argument("surfaces are defined for the fuzzy controllers only");
  }
  auto controller = make_controller(spec, sys, controller_seed(seed), {}, ns_mode);
  auto& fuzzy = dynamic_cast<FuzzyController&>(*controller);
  SurfaceGrid g;
  for (int i = 0; i < SurfaceGrid::kSize; ++i) {
    for (int j = 0; j < SurfaceGrid::kSize; ++j) {
      g.at(i, j) = fuzzy.evaluate(SurfaceGrid::axis(i), SurfaceGrid::axis(j));
    }
  }
  return g;
}

inline void write_surface_csv(std::ostream& out, const SurfaceGrid& g) {
  out << "error,derror,output\n";
  for (int i = 0; i < SurfaceGrid::kSize; ++i) {
    for (int j = 0; j < SurfaceGrid::kSize; ++j) {
      out << static_cast<int>(SurfaceGrid::axis(i)) << ','
          << static_cast<int>(SurfaceGrid::axis(j)) << ',' << csv::format_double(g.at(i, j))
          << '\n';
    }
  }
}

/// Mean absolute 5-point discrete Laplacian over interior cells.
inline double mean_abs_laplacian(const SurfaceGrid& g) {
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>((SurfaceGrid::kSize - 2) * (SurfaceGrid::kSize - 2)));
  for (int i = 1; i + 1 < SurfaceGrid::kSize; ++i) {
    for (int j = 1; j + 1 < SurfaceGrid::kSize; ++j) {
      terms.push_back(std::fabs(g.at(i + 1, j) + g.at(i - 1, j) + g.at(i, j + 1) +
                                g.at(i, j - 1) - 4.0 * g.at(i, j)));
    }
  }
  return exact_sum(terms) / static_cast<double>(terms.size());
}

// ---------------------------------------------------------------------------
// Trace CSV

inline constexpr const char* kTraceHeader = "t,heading,desired,error,rudder,wind_dir,x,y";

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  using csv::format_double;
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << format_double(r.t) << ',' << format_double(r.heading) << ','
        << format_double(r.desired) << ',' << format_double(r.error) << ','
        << format_double(r.rudder) << ',' << format_double(r.wind_dir) << ','
        << format_double(r.x) << ',' << format_double(r.y) << '\n';
  }
}

inline constexpr const char* kSummaryHeader = "controller,noise,seed,completed,time,rmse,steps";

inline void write_summary_csv(std::ostream& out, const RunRecord& r) {
  out << kSummaryHeader << '\n'
      << r.controller << ',' << to_string(r.noise) << ',' << r.seed << ','
      << (r.completed ? 1 : 0) << ',' << csv::format_double(r.time_taken) << ','
      << csv::format_double(r.rmse) << ',' << r.trace.size() << '\n';
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_HARNESS_HPP_
