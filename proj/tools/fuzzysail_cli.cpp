// fuzzysail: run, batch, sweep, surface, stats and serve subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuzzysail/fuzzysail.hpp"

namespace fs = std::filesystem;
using namespace fuzzysail;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string fuzzy_config;
  std::string physics_config;
  bool ns_shared = false;

  void add_to(CLI::App* app) {
    app->add_option("--fuzzy-config", fuzzy_config,
                    "Membership functions / rule table file (default: built-in partition)")
        ->check(CLI::ExistingFile);
    app->add_option("--physics-config", physics_config,
                    "Physics and course overrides, one 'key value' per line")
        ->check(CLI::ExistingFile);
    app->add_flag("--ns-shared", ns_shared,
                  "Non-stationary: one shared shift per variable instead of one per term");
  }

  ExperimentSetup setup() const {
    ExperimentSetup s;
    if (!fuzzy_config.empty()) s.fuzzy = load_fuzzy_config(fuzzy_config);
    if (!physics_config.empty()) load_physics_config(physics_config, s.episode);
    s.ns_mode = ns_shared ? PerturbMode::kShared : PerturbMode::kPerTerm;
    return s;
  }
};

struct ControllerOptions {
  std::string kind;
  std::string param;

  void add_to(CLI::App* app) {
    app->add_option("--controller", kind, "Controller: pi, t1, ns, it2 or ds")
        ->required()
        ->check(CLI::IsMember({"pi", "t1", "ns", "it2", "ds"}));
    app->add_option("--param", param,
                    "ns: sigma (deg); it2: movement (deg); ds: threshold (deg, movement "
                    "fixed at 5; 'inf' allowed)");
  }

  ControllerSpec spec() const {
    ControllerSpec s{*parse_controller_kind(kind), {}};
    if (!param.empty()) {
      try {
        s.param = csv::parse_double(param);
      } catch (const csv::ParseError&) {
        throw UsageError("--param: not a number: " + param);
      }
    }
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--param: ") + e.what());
    }
    return s;
  }
};

NoiseLevel noise_from(const std::string& s) {
  auto n = parse_noise_level(s);
  if (!n) throw UsageError("unknown noise level '" + s + "'");
  return *n;
}

const std::vector<std::string> kNoiseNames{"low", "med", "medium", "high"};

void print_record(std::ostream& out, const RunRecord& r) {
  out << "controller=" << r.controller << " noise=" << to_string(r.noise) << " seed=" << r.seed
      << " completed=" << (r.completed ? 1 : 0) << " time=" << csv::format_double(r.time_taken)
      << " rmse=" << csv::format_double(r.rmse) << " steps=" << r.trace.size() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy heading-controller workbench on a simulated sailing course"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one episode and write its trace");
  CommonOptions run_common;
  ControllerOptions run_ctrl;
  std::string run_noise = "low", run_out, run_summary;
  std::uint64_t run_seed = 1;
  run_common.add_to(run);
  run_ctrl.add_to(run);
  run->add_option("--noise", run_noise, "low, med or high")->check(CLI::IsMember(kNoiseNames));
  run->add_option("--seed", run_seed, "Episode seed");
  run->add_option("--out", run_out, "Trace CSV path");
  run->add_option("--summary", run_summary, "Summary CSV path (default: <out>.summary.csv)");

  // batch
  auto* batch = app.add_subcommand("batch", "Run a batch of seeded episodes");
  CommonOptions batch_common;
  ControllerOptions batch_ctrl;
  std::string batch_noise = "low", batch_out;
  int batch_runs = 30;
  std::uint64_t batch_seed = 1;
  batch_common.add_to(batch);
  batch_ctrl.add_to(batch);
  batch->add_option("--noise", batch_noise, "low, med or high")->check(CLI::IsMember(kNoiseNames));
  batch->add_option("--runs", batch_runs, "Runs per batch")->check(CLI::PositiveNumber);
  batch->add_option("--seed-base", batch_seed, "Seed of the first run");
  batch->add_option("--out", batch_out, "Per-run CSV path");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every table row at every noise level");
  CommonOptions sweep_common;
  int sweep_runs = 30;
  std::uint64_t sweep_seed = 1;
  std::string sweep_dir = "sweep_out";
  unsigned sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> sweep_noise{"low", "med", "high"};
  sweep_common.add_to(sweep_cmd);
  sweep_cmd->add_option("--runs", sweep_runs, "Runs per batch")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed-base", sweep_seed, "Seed of the first run in every batch");
  sweep_cmd->add_option("--out-dir", sweep_dir, "Output directory");
  sweep_cmd->add_option("--threads", sweep_threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--noise", sweep_noise, "Noise levels to run")
      ->check(CLI::IsMember(kNoiseNames));

  // surface
  auto* surf = app.add_subcommand("surface", "Export a 361x361 control surface");
  CommonOptions surf_common;
  ControllerOptions surf_ctrl;
  std::uint64_t surf_seed = 0;
  std::string surf_out;
  surf_common.add_to(surf);
  surf_ctrl.add_to(surf);
  surf->add_option("--seed", surf_seed, "Seed for non-stationary draws");
  surf->add_option("--out", surf_out, "Surface CSV path (default: stdout)");

  // stats
  auto* stats = app.add_subcommand("stats", "Two-sided Mann-Whitney test between two run files");
  std::string stats_a, stats_b, stats_metric = "rmse", stats_out;
  stats->add_option("--a", stats_a, "Per-run CSV of the first batch")->required();
  stats->add_option("--b", stats_b, "Per-run CSV of the second batch")->required();
  stats->add_option("--metric", stats_metric, "rmse or time")
      ->check(CLI::IsMember({"rmse", "time"}));
  stats->add_option("--out", stats_out, "Also write the result CSV here");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve one episode over TCP");
  CommonOptions serve_common;
  std::uint16_t serve_port = 5555;
  std::string serve_host = "127.0.0.1", serve_noise = "low", serve_out;
  std::uint64_t serve_seed = 1;
  serve_common.add_to(serve_cmd);
  serve_cmd->add_option("--port", serve_port, "TCP port (0 = ephemeral)");
  serve_cmd->add_option("--host", serve_host, "IPv4 address to bind");
  serve_cmd->add_option("--noise", serve_noise, "low, med or high")
      ->check(CLI::IsMember(kNoiseNames));
  serve_cmd->add_option("--seed", serve_seed, "Episode seed");
  serve_cmd->add_option("--out", serve_out, "Trace CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) {
      const auto spec = run_ctrl.spec();
      const auto setup = run_common.setup();
      const auto rec = run_single(spec, noise_from(run_noise), run_seed, setup);
      if (!run_out.empty()) {
        auto out = csv::open_for_write(run_out);
        write_trace_csv(out, rec.trace);
        const std::string summary = run_summary.empty() ? run_out + ".summary.csv" : run_summary;
        auto sout = csv::open_for_write(summary);
        write_summary_csv(sout, rec);
      } else if (!run_summary.empty()) {
        auto sout = csv::open_for_write(run_summary);
        write_summary_csv(sout, rec);
      }
      print_record(std::cout, rec);
    } else if (*batch) {
      const auto spec = batch_ctrl.spec();
      const auto b = batch_run(spec, noise_from(batch_noise), batch_runs, batch_seed,
                               batch_common.setup());
      if (!batch_out.empty()) {
        auto out = csv::open_for_write(batch_out);
        write_runs_csv(out, {b});
      }
      std::cout << "controller=" << spec.label() << " noise=" << to_string(b.noise)
                << " runs=" << b.runs.size() << " mean_rmse=" << csv::format_double(b.mean_rmse)
                << " std_rmse=" << csv::format_double(b.std_rmse)
                << " mean_time=" << csv::format_double(b.mean_time)
                << " std_time=" << csv::format_double(b.std_time)
                << " n_incomplete=" << b.n_incomplete
                << (b.std_defined ? "" : " (std undefined for one run)") << '\n';
    } else if (*sweep_cmd) {
      std::vector<NoiseLevel> levels;
      for (const auto& n : sweep_noise) {
        const auto lvl = noise_from(n);
        if (std::find(levels.begin(), levels.end(), lvl) == levels.end()) levels.push_back(lvl);
      }
      std::sort(levels.begin(), levels.end());
      const auto rows = paper_rows();
      const auto res =
          sweep(levels, rows, sweep_runs, sweep_seed, sweep_common.setup(), sweep_threads);
      fs::create_directories(sweep_dir);
      for (std::size_t n = 0; n < levels.size(); ++n) {
        const std::string name(to_string(levels[n]));
        auto tout = csv::open_for_write((fs::path(sweep_dir) / ("table_" + name + ".csv")).string());
        write_table_csv(tout, res.tables[n]);
        auto rout = csv::open_for_write((fs::path(sweep_dir) / ("runs_" + name + ".csv")).string());
        const std::vector<BatchResult> level(
            res.batches.begin() + static_cast<std::ptrdiff_t>(n * rows.size()),
            res.batches.begin() + static_cast<std::ptrdiff_t>((n + 1) * rows.size()));
        write_runs_csv(rout, level);
        write_table_text(std::cout, res.tables[n]);
        std::cout << '\n';
      }
    } else if (*surf) {
      const auto spec = surf_ctrl.spec();
      if (spec.kind == ControllerKind::kPI) {
        throw UsageError("surfaces are defined for t1, ns, it2 and ds");
      }
      const auto setup = surf_common.setup();
      const auto grid = surface(spec, setup.fuzzy, surf_seed, setup.ns_mode);
      if (surf_out.empty()) {
        write_surface_csv(std::cout, grid);
      } else {
        auto out = csv::open_for_write(surf_out);
        write_surface_csv(out, grid);
      }
    } else if (*stats) {
      auto load = [&](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open '" + path + "'");
        return read_runs_metric(in, stats_metric);
      };
      const auto a = load(stats_a);
      const auto b = load(stats_b);
      const auto r = mann_whitney(a, b);
      auto emit = [&](std::ostream& out) {
        out << "metric,n_a,n_b,u,p,exact\n"
            << stats_metric << ',' << a.size() << ',' << b.size() << ','
            << csv::format_double(r.u) << ',' << csv::format_double(r.p) << ','
            << (r.exact ? 1 : 0) << '\n';
      };
      emit(std::cout);
      if (!stats_out.empty()) {
        auto out = csv::open_for_write(stats_out);
        emit(out);
      }
    } else if (*serve_cmd) {
      const auto setup = serve_common.setup();
      wire::Server server(serve_port, serve_host);
      std::cerr << "listening on " << serve_host << ':' << server.port() << std::endl;
      auto res = server.serve_episode(setup.episode, noise_from(serve_noise), serve_seed);
      res.record.controller = "remote";
      if (!serve_out.empty()) {
        auto out = csv::open_for_write(serve_out);
        write_trace_csv(out, res.record.trace);
      }
      print_record(std::cout, res.record);
      if (res.status != wire::ServeResult::Status::kOk) {
        std::cerr << "error: " << res.message << '\n';
        return kRuntimeError;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
