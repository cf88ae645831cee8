// gossa: experiment driver for gossip-based distributed stochastic
// approximation. Subcommands validate gossip schemes, run single or
// Monte-Carlo trajectories, and compare empirical behavior against the
// asymptotic predictions.
//
// Exit codes: 0 pass, 1 config/validation error, 2 divergence,
// 3 tolerance-check failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gossa/analysis.hpp"
#include "gossa/config.hpp"
#include "gossa/engine.hpp"
#include "gossa/errors.hpp"
#include "gossa/io.hpp"
#include "gossa/montecarlo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitToleranceFail = 3;

struct CommonArgs {
  std::string config_path;
  int threads = 0;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (JSON)")
      ->required();
  cmd->add_option("--threads", args.threads, "replica-level parallelism bound");
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "root seed (overrides config)");
}

gossa::ExperimentConfig load(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = gossa::ExperimentConfig::from_file(args.config_path);
  if (args.seed) cfg.run.root_seed = *args.seed;
  if (!args.out_dir.empty()) cfg.output.directory = args.out_dir;
  return cfg;
}

int resolve_threads(const CommonArgs& args, const gossa::ExperimentConfig& cfg) {
  if (args.threads > 0) return args.threads;
  if (cfg.run.threads > 0) return cfg.run.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

fs::path ensure_out_dir(const gossa::ExperimentConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gossa::ConfigError("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

int cmd_rho(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  gossa::GossipScheme scheme = cfg.build_scheme(*problem);
  gossa::SchemeValidation report = gossa::validate_scheme(scheme);
  json j = gossa::to_json(report);
  j["scheme"] = scheme.describe();
  j["graph_connected"] = scheme.graph().is_connected();
  std::cout << "scheme: " << scheme.describe() << "\n"
            << "rho = " << report.rho << "\n"
            << j.dump(2) << std::endl;
  if (!report.valid) {
    std::cerr << "warning: gossip stochasticity/contraction requirement violated"
              << (report.contraction ? "" : " (rho >= 1, graph likely disconnected)")
              << std::endl;
    return kExitConfig;
  }
  if (cfg.output.json) {
    write_json_file(ensure_out_dir(cfg) / "rho_report.json", j);
  }
  return kExitOk;
}

int cmd_simulate(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  gossa::GossipScheme scheme = cfg.build_scheme(*problem);
  gossa::StepSchedule schedule = cfg.build_schedule();
  std::uint64_t root = cfg.root_seed();

  gossa::StackedState init = gossa::make_initial_state(
      cfg.build_init(*problem), problem->n_agents(), problem->dim(), root, 0);
  std::mt19937_64 rng = gossa::make_stream(root, 0, gossa::StreamChannel::Trajectory);
  gossa::RecordPlan plan = cfg.build_record_plan(*problem);
  plan.averaged = cfg.run.averaging;
  gossa::TrajectoryOptions options;
  options.averaging = cfg.run.averaging;
  options.gain = cfg.resolve_gain(*problem);

  gossa::TrajectoryResult result = gossa::run_trajectory(
      *problem, scheme, schedule, cfg.run.n_steps, init, rng, plan, options);

  fs::path dir = ensure_out_dir(cfg);
  if (cfg.output.csv) {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    gossa::write_csv(result.record, csv);
  }
  if (result.diverged()) {
    std::cerr << "divergence detected at step " << result.divergence->step
              << " (|theta| = " << result.divergence->norm << ")" << std::endl;
    return kExitDivergence;
  }
  std::cout << "simulate: " << cfg.run.n_steps << " steps, "
            << result.record.rows.size() << " recorded rows -> "
            << (dir / "trajectory.csv").string() << std::endl;
  return kExitOk;
}

int cmd_montecarlo(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  gossa::GossipScheme scheme = cfg.build_scheme(*problem);
  gossa::StepSchedule schedule = cfg.build_schedule();
  std::uint64_t root = cfg.root_seed();
  const int threads = resolve_threads(args, cfg);
  const int n_runs = cfg.run.n_runs;
  if (n_runs < 2) throw gossa::ConfigError("montecarlo requires run.n_runs >= 2");

  const int d = problem->dim();
  const int n_agents = problem->n_agents();
  gossa::InitSpec init = cfg.build_init(*problem);
  gossa::TrajectoryOptions options;
  options.averaging = cfg.run.averaging;
  options.gain = cfg.resolve_gain(*problem);

  struct ReplicaRow {
    bool diverged = false;
    std::int64_t divergence_step = 0;
    Eigen::VectorXd final_mean;
    double final_disagreement = 0.0;
    Eigen::VectorXd final_avg_mean;
  };
  std::vector<ReplicaRow> rows(n_runs);

  gossa::parallel_replicas(n_runs, threads, [&](int r) {
    gossa::StackedState start =
        gossa::make_initial_state(init, n_agents, d, root, r);
    std::mt19937_64 rng = gossa::make_stream(root, r, gossa::StreamChannel::Trajectory);
    gossa::TrajectoryResult res =
        gossa::run_trajectory(*problem, scheme, schedule, cfg.run.n_steps, start, rng,
                              gossa::RecordPlan::none(), options);
    if (res.diverged()) {
      rows[r].diverged = true;
      rows[r].divergence_step = res.divergence->step;
      return;
    }
    rows[r].final_mean = gossa::consensus_mean(res.final_state);
    rows[r].final_disagreement = gossa::disagreement_norm(res.final_state);
    if (res.final_averaged) {
      rows[r].final_avg_mean = gossa::consensus_mean(*res.final_averaged);
    }
  });

  fs::path dir = ensure_out_dir(cfg);
  int n_divergent = 0;
  std::vector<Eigen::VectorXd> finals, avg_finals, normalized;
  auto theta_star = problem->equilibrium();
  const double gamma_final = schedule.gamma(cfg.run.n_steps);
  for (const auto& row : rows) {
    if (row.diverged) {
      ++n_divergent;
      continue;
    }
    finals.push_back(row.final_mean);
    if (row.final_avg_mean.size() > 0) avg_finals.push_back(row.final_avg_mean);
    if (theta_star) {
      normalized.push_back((row.final_mean - *theta_star) / std::sqrt(gamma_final));
    }
  }
  if (static_cast<int>(finals.size()) < 2) {
    std::cerr << "montecarlo: fewer than 2 replicas survived ("
              << n_divergent << " divergent)" << std::endl;
    return kExitDivergence;
  }

  if (cfg.output.csv) {
    std::ofstream csv(dir / "replicas.csv", std::ios::binary);
    csv << "replica";
    for (int k = 1; k <= d; ++k) csv << ",final_mean_" << k;
    csv << ",final_disagreement_norm";
    for (int k = 1; k <= d; ++k) csv << ",final_avg_mean_" << k;
    csv << ",diverged,divergence_step\n";
    csv.precision(17);
    for (int r = 0; r < n_runs; ++r) {
      const auto& row = rows[r];
      csv << r;
      for (int k = 0; k < d; ++k) {
        csv << ',';
        if (!row.diverged) csv << row.final_mean[k];
      }
      csv << ',';
      if (!row.diverged) csv << row.final_disagreement;
      for (int k = 0; k < d; ++k) {
        csv << ',';
        if (!row.diverged && row.final_avg_mean.size() > 0) csv << row.final_avg_mean[k];
      }
      csv << ',' << (row.diverged ? 1 : 0) << ',';
      if (row.diverged) csv << row.divergence_step;
      csv << "\n";
    }
    if (!normalized.empty()) {
      std::ofstream hist(dir / "normalized_errors.csv", std::ios::binary);
      gossa::write_normalized_errors_csv(normalized, hist);
    }
  }

  json summary;
  summary["n_runs"] = n_runs;
  summary["n_steps"] = cfg.run.n_steps;
  summary["n_divergent"] = n_divergent;
  summary["final_mean"] = gossa::to_json(gossa::empirical_covariance(finals).mean);
  summary["final_mean_covariance"] = gossa::to_json(gossa::empirical_covariance(finals).cov);
  if (avg_finals.size() >= 2) {
    summary["final_avg_mean_covariance"] =
        gossa::to_json(gossa::empirical_covariance(avg_finals).cov);
  }
  if (!normalized.empty()) {
    gossa::CovarianceEstimate est = gossa::empirical_covariance(normalized);
    summary["normalized_error_covariance"] = gossa::to_json(est.cov);
    summary["normalized_error_cov_std_error"] = gossa::to_json(est.cov_std_error);
  }
  if (cfg.output.json) write_json_file(dir / "summary.json", summary);

  std::cout << "montecarlo: " << n_runs << " replicas (" << n_divergent
            << " divergent) -> " << dir.string() << std::endl;
  return kExitOk;
}

int cmd_clt(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  gossa::GossipScheme scheme = cfg.build_scheme(*problem);
  gossa::StepSchedule schedule = cfg.build_schedule();

  gossa::CltCheckOptions options;
  options.threads = resolve_threads(args, cfg);
  options.rel_tolerance = cfg.check.rel_tolerance;
  options.sync_tolerance = cfg.check.sync_tolerance;
  options.max_divergent_fraction = cfg.check.max_divergent_fraction;

  gossa::CltCheckReport report =
      gossa::clt_check(*problem, scheme, schedule, cfg.run.n_steps, cfg.run.n_runs,
                       cfg.root_seed(), options);

  fs::path dir = ensure_out_dir(cfg);
  if (cfg.output.json) write_json_file(dir / "clt_report.json", gossa::to_json(report));
  if (cfg.output.csv) {
    std::ofstream hist(dir / "normalized_errors.csv", std::ios::binary);
    gossa::write_normalized_errors_csv(report.normalized_errors, hist);
  }
  std::cout << "clt: rel_error = " << report.rel_error
            << ", rel_error_avg = " << report.rel_error_avg
            << ", synchrony_median = " << report.synchrony_median << " (threshold "
            << report.synchrony_threshold << "), divergent " << report.n_divergent << "/"
            << report.n_runs << " -> " << (report.passed ? "PASS" : "FAIL") << std::endl;
  return report.passed ? kExitOk : kExitToleranceFail;
}

int cmd_rate(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  gossa::GossipScheme scheme = cfg.build_scheme(*problem);
  gossa::StepSchedule schedule = cfg.build_schedule();

  gossa::RateCheckOptions options;
  options.threads = resolve_threads(args, cfg);
  options.n_points = cfg.check.rate_points;
  options.n_checked = cfg.check.rate_checked;
  options.init = cfg.build_init(*problem);

  gossa::MomentReport report =
      gossa::disagreement_rate_check(*problem, scheme, schedule, cfg.run.n_steps,
                                     cfg.run.n_runs, cfg.root_seed(), options);

  fs::path dir = ensure_out_dir(cfg);
  if (cfg.output.json) write_json_file(dir / "rate_report.json", gossa::to_json(report));
  if (cfg.output.csv) {
    std::ofstream curve(dir / "rate_curve.csv", std::ios::binary);
    gossa::write_rate_curve_csv(report, curve);
  }
  std::cout << "rate: rho = " << report.rho << ", bound = " << report.bound
            << (report.rho_zero_degenerate
                    ? " (rho = 0: bound trivially governed by within-step noise)"
                    : "")
            << ", divergent " << report.n_divergent << "/" << report.n_runs << " -> "
            << (report.passed ? "PASS" : "FAIL") << std::endl;
  return report.passed ? kExitOk : kExitToleranceFail;
}

int cmd_efficiency(const CommonArgs& args) {
  gossa::ExperimentConfig cfg = load(args);
  auto problem = cfg.build_problem();
  const auto* loc = dynamic_cast<const gossa::LocalizationProblem*>(problem.get());
  if (loc == nullptr) {
    throw gossa::ConfigError("efficiency: requires a localization problem");
  }
  gossa::EfficiencyReport report =
      gossa::efficiency_report(*loc, cfg.efficiency_gamma_star());

  fs::path dir = ensure_out_dir(cfg);
  if (cfg.output.json) {
    write_json_file(dir / "efficiency_report.json", gossa::to_json(report));
  }
  bool ok = report.gap_psd && report.factorization_error <= 1e-8;
  std::cout << "efficiency: min gap eigenvalue = " << report.min_gap_eigenvalue
            << ", factorization error = " << report.factorization_error << " -> "
            << (ok ? "PASS" : "FAIL") << std::endl;
  return ok ? kExitOk : kExitToleranceFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gossip-based distributed stochastic approximation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* rho = app.add_subcommand("rho", "validate a gossip scheme and print rho");
  auto* simulate = app.add_subcommand("simulate", "run one trajectory to CSV");
  auto* montecarlo = app.add_subcommand("montecarlo", "run replicated trajectories");
  auto* clt = app.add_subcommand("clt", "Monte-Carlo check of the CLT covariances");
  auto* rate = app.add_subcommand("rate", "disagreement L2-rate check");
  auto* efficiency = app.add_subcommand("efficiency", "efficiency gap of the critical regime");
  for (auto* cmd : {rho, simulate, montecarlo, clt, rate, efficiency}) {
    add_common(cmd, args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (rho->parsed()) return cmd_rho(args);
    if (simulate->parsed()) return cmd_simulate(args);
    if (montecarlo->parsed()) return cmd_montecarlo(args);
    if (clt->parsed()) return cmd_clt(args);
    if (rate->parsed()) return cmd_rate(args);
    if (efficiency->parsed()) return cmd_efficiency(args);
  } catch (const gossa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
