#include "gossa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace gossa {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose().eval());
}

void require_square_pair(const Eigen::MatrixXd& h, const Eigen::MatrixXd& upsilon,
                         const char* who) {
  if (h.rows() != h.cols() || upsilon.rows() != upsilon.cols() ||
      h.rows() != upsilon.rows()) {
    throw std::invalid_argument(std::string(who) + ": H and Upsilon must be d x d");
  }
}

void require_symmetric_psd(const Eigen::MatrixXd& m, const char* who) {
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument(std::string(who) + ": Upsilon must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw std::invalid_argument(std::string(who) + ": Upsilon must be PSD");
  }
}

/// Largest real part of the eigenvalues of a (general) real matrix.
double max_real_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Solve A X + X A^T = -Q for symmetric X (A Hurwitz, Q symmetric) by
/// vectorization, then symmetrize and verify the residual.
Eigen::MatrixXd solve_sylvester_sym(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                    const char* who) {
  const Eigen::Index d = a.rows();
  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd system = kron(identity, a) + kron(a, identity);
  Eigen::Map<const Eigen::VectorXd> q_vec(q.data(), d * d);
  Eigen::VectorXd x_vec = system.fullPivLu().solve(-q_vec);
  Eigen::MatrixXd x = symmetrize(Eigen::Map<Eigen::MatrixXd>(x_vec.data(), d, d));

  double scale = std::max({1.0, q.cwiseAbs().maxCoeff(),
                           a.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff()});
  double residual = (a * x + x * a.transpose() + q).cwiseAbs().maxCoeff();
  if (residual > 1e-9 * scale) {
    throw std::runtime_error(std::string(who) + ": solve residual too large");
  }
  return x;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& h, const Eigen::MatrixXd& upsilon) {
  require_square_pair(h, upsilon, "solve_lyapunov");
  require_symmetric_psd(upsilon, "solve_lyapunov");
  if (max_real_eigenvalue(h) >= 0.0) {
    throw std::invalid_argument("solve_lyapunov: H must be Hurwitz");
  }
  return solve_sylvester_sym(h, symmetrize(upsilon), "solve_lyapunov");
}

Eigen::MatrixXd solve_lyapunov_critical(const Eigen::MatrixXd& h,
                                        const Eigen::MatrixXd& upsilon,
                                        double gamma_star) {
  require_square_pair(h, upsilon, "solve_lyapunov_critical");
  require_symmetric_psd(upsilon, "solve_lyapunov_critical");
  double largest = max_real_eigenvalue(h);
  if (largest >= 0.0) {
    throw std::invalid_argument("solve_lyapunov_critical: H must be Hurwitz");
  }
  double stability_floor = 1.0 / (2.0 * (-largest));
  if (!(gamma_star > stability_floor)) {
    throw std::invalid_argument(
        "solve_lyapunov_critical: gamma_star must exceed 1/(2L), the stability margin");
  }
  const Eigen::Index d = h.rows();
  Eigen::MatrixXd shifted =
      2.0 * gamma_star * h + Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd rhs = 2.0 * gamma_star * gamma_star * symmetrize(upsilon);
  return solve_sylvester_sym(shifted, rhs, "solve_lyapunov_critical");
}

Eigen::MatrixXd averaged_covariance(const Eigen::MatrixXd& h,
                                    const Eigen::MatrixXd& upsilon) {
  require_square_pair(h, upsilon, "averaged_covariance");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("averaged_covariance: H must be invertible");
  }
  Eigen::MatrixXd h_inv_upsilon = lu.solve(symmetrize(upsilon));
  Eigen::MatrixXd sigma = lu.solve(h_inv_upsilon.transpose()).transpose();
  return symmetrize(sigma);
}

OptimalGain optimal_gain(const Eigen::MatrixXd& h, const Eigen::MatrixXd& upsilon,
                         double gamma_star) {
  require_square_pair(h, upsilon, "optimal_gain");
  if (!(gamma_star > 0.0)) {
    throw std::invalid_argument("optimal_gain: gamma_star must be positive");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("optimal_gain: H must be invertible");
  }
  OptimalGain out;
  out.gain = -lu.inverse() / gamma_star;
  out.sigma_star = averaged_covariance(h, upsilon) / gamma_star;
  return out;
}

CovarianceEstimate empirical_covariance(const std::vector<Eigen::VectorXd>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) {
    throw std::invalid_argument("empirical_covariance: need at least 2 samples");
  }
  const Eigen::Index d = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != d) {
      throw std::invalid_argument("empirical_covariance: inconsistent dimensions");
    }
  }

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : samples) {
    sum += s;
    sum_sq += s * s.transpose();
  }
  CovarianceEstimate est;
  est.n_samples = n;
  est.mean = sum / n;
  est.cov = (sum_sq - n * est.mean * est.mean.transpose()) / (n - 1);
  est.cov = symmetrize(est.cov);

  est.cov_std_error = Eigen::MatrixXd::Constant(
      d, d, std::numeric_limits<double>::quiet_NaN());
  if (n >= 3) {
    // leave-one-out covariances from the sufficient statistics
    std::vector<Eigen::MatrixXd> loo;
    loo.reserve(n);
    Eigen::MatrixXd loo_mean = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples) {
      Eigen::VectorXd m_i = (sum - s) / (n - 1);
      Eigen::MatrixXd c_i =
          (sum_sq - s * s.transpose() - (n - 1) * m_i * m_i.transpose()) / (n - 2);
      loo.push_back(c_i);
      loo_mean += c_i;
    }
    loo_mean /= n;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
    for (const auto& c_i : loo) {
      var += (c_i - loo_mean).cwiseProduct(c_i - loo_mean);
    }
    est.cov_std_error = (var * (n - 1) / n).cwiseSqrt();
  }
  return est;
}

CltPrediction predict_clt(const CltData& data, const StepSchedule& schedule) {
  CltPrediction out;
  out.regime = schedule.regime();
  out.sigma_avg = averaged_covariance(data.jacobian, data.noise_cov);
  if (schedule.regime() == StepSchedule::Regime::Subcritical) {
    out.sigma = solve_lyapunov(data.jacobian, data.noise_cov);
  } else {
    out.gamma_star = schedule.gamma_star();
    Eigen::MatrixXd sigma_sqrt_n =
        solve_lyapunov_critical(data.jacobian, data.noise_cov, out.gamma_star);
    out.sigma = sigma_sqrt_n / out.gamma_star;
    OptimalGain og = optimal_gain(data.jacobian, data.noise_cov, out.gamma_star);
    out.gain = og.gain;
    out.sigma_star = og.sigma_star;
  }
  return out;
}

CltCheckReport clt_check(const ProblemModel& problem, const GossipScheme& scheme,
                         const StepSchedule& schedule, std::int64_t n_steps, int n_runs,
                         std::uint64_t root_seed, const CltCheckOptions& options) {
  if (n_steps < 1 || n_runs < 2) {
    throw std::invalid_argument("clt_check: need n_steps >= 1 and n_runs >= 2");
  }
  SchemeValidation validation = validate_scheme(scheme);
  if (!validation.doubly_stochastic) {
    throw std::invalid_argument(
        "clt_check: doubly stochastic gossip required (1^T W_n = 1^T w.p.1)");
  }
  CltData data = problem.clt_data();
  Eigen::VectorXd theta_star = *problem.equilibrium();

  CltCheckReport report;
  report.prediction = predict_clt(data, schedule);
  report.n_runs = n_runs;

  const int d = problem.dim();
  const int n_agents = problem.n_agents();
  const double gamma_final = schedule.gamma(n_steps);
  const double inv_sqrt_gamma = 1.0 / std::sqrt(gamma_final);
  const double sqrt_n = std::sqrt(static_cast<double>(n_steps));
  const double perturbation =
      options.init_scale_factor * std::sqrt(gamma_final) / std::sqrt(static_cast<double>(d));
  InitSpec init = InitSpec::near_point(theta_star, perturbation);

  struct ReplicaOut {
    bool diverged = false;
    Eigen::VectorXd z;
    Eigen::VectorXd z_avg;
    double sync = 0.0;
  };
  std::vector<ReplicaOut> outs(n_runs);

  TrajectoryOptions traj_options;
  traj_options.averaging = true;

  parallel_replicas(n_runs, options.threads, [&](int r) {
    StackedState start = make_initial_state(init, n_agents, d, root_seed, r);
    std::mt19937_64 rng = make_stream(root_seed, r, StreamChannel::Trajectory);
    TrajectoryResult res = run_trajectory(problem, scheme, schedule, n_steps, start,
                                          rng, RecordPlan::none(), traj_options);
    if (res.diverged()) {
      outs[r].diverged = true;
      return;
    }
    Eigen::VectorXd mean = consensus_mean(res.final_state);
    outs[r].z = inv_sqrt_gamma * (mean - theta_star);
    outs[r].z_avg = sqrt_n * (consensus_mean(*res.final_averaged) - theta_star);
    double max_dev = 0.0;
    for (int i = 0; i < n_agents; ++i) {
      max_dev = std::max(max_dev, (res.final_state.agent(i) - mean).norm());
    }
    outs[r].sync = inv_sqrt_gamma * max_dev;
  });

  std::vector<Eigen::VectorXd> zs, zbars;
  std::vector<double> syncs;
  for (const auto& o : outs) {
    if (o.diverged) {
      ++report.n_divergent;
      continue;
    }
    zs.push_back(o.z);
    zbars.push_back(o.z_avg);
    syncs.push_back(o.sync);
  }
  if (static_cast<int>(zs.size()) < 2) {
    throw std::runtime_error("clt_check: fewer than 2 runs survived");
  }

  report.normalized_errors = zs;
  report.empirical = empirical_covariance(zs);
  report.empirical_avg = empirical_covariance(zbars);
  report.rel_error = (report.empirical.cov - report.prediction.sigma).norm() /
                     report.prediction.sigma.norm();
  report.rel_error_avg = (report.empirical_avg.cov - report.prediction.sigma_avg).norm() /
                         report.prediction.sigma_avg.norm();

  std::nth_element(syncs.begin(), syncs.begin() + syncs.size() / 2, syncs.end());
  report.synchrony_median = syncs[syncs.size() / 2];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.prediction.sigma);
  report.synchrony_threshold =
      options.sync_tolerance * std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));

  report.cov_ok = report.rel_error <= options.rel_tolerance;
  report.cov_avg_ok = report.rel_error_avg <= options.rel_tolerance;
  report.synchrony_ok = report.synchrony_median <= report.synchrony_threshold;
  report.divergence_ok =
      report.n_divergent <= options.max_divergent_fraction * n_runs;
  report.passed = report.cov_ok && report.cov_avg_ok && report.synchrony_ok &&
                  report.divergence_ok;
  return report;
}

MomentReport disagreement_rate_check(const ProblemModel& problem,
                                     const GossipScheme& scheme,
                                     const StepSchedule& schedule, std::int64_t n_steps,
                                     int n_runs, std::uint64_t root_seed,
                                     const RateCheckOptions& options) {
  if (n_steps < 2 || n_runs < 2) {
    throw std::invalid_argument("disagreement_rate_check: need n_steps >= 2, n_runs >= 2");
  }
  double rho = contraction_coefficient(scheme);
  if (rho >= 1.0 - 1e-12) {
    throw std::invalid_argument("disagreement_rate_check: contraction rho < 1 required");
  }

  MomentReport report;
  report.rho = rho;
  report.rho_zero_degenerate = rho <= 1e-14;
  report.n_runs = n_runs;

  RecordPlan plan = RecordPlan::log_spaced(std::min<std::int64_t>(10, n_steps), n_steps,
                                           options.n_points);
  plan.y_perp_sq = true;
  const std::size_t n_idx = plan.indices.size();

  const int d = problem.dim();
  const int n_agents = problem.n_agents();

  struct ReplicaOut {
    bool diverged = false;
    std::vector<double> perp_sq;
    std::vector<double> y_perp_sq;
  };
  std::vector<ReplicaOut> outs(n_runs);

  parallel_replicas(n_runs, options.threads, [&](int r) {
    StackedState start = make_initial_state(options.init, n_agents, d, root_seed, r);
    std::mt19937_64 rng = make_stream(root_seed, r, StreamChannel::Trajectory);
    TrajectoryResult res =
        run_trajectory(problem, scheme, schedule, n_steps, start, rng, plan, {});
    if (res.diverged()) {
      outs[r].diverged = true;
      return;
    }
    for (const auto& row : res.record.rows) {
      outs[r].perp_sq.push_back(row.disagreement_norm * row.disagreement_norm);
      outs[r].y_perp_sq.push_back(*row.y_perp_sq);
    }
  });

  std::vector<const ReplicaOut*> kept;
  for (const auto& o : outs) {
    if (o.diverged) {
      ++report.n_divergent;
    } else {
      kept.push_back(&o);
    }
  }
  const int runs = static_cast<int>(kept.size());
  if (runs < 2) {
    throw std::runtime_error("disagreement_rate_check: fewer than 2 runs survived");
  }

  report.steps = plan.indices;
  report.normalized_disagreement.resize(n_idx);
  report.std_errors.resize(n_idx);
  double c_hat = 0.0;
  for (std::size_t j = 0; j < n_idx; ++j) {
    double mean = 0.0;
    double mean_y = 0.0;
    for (const auto* o : kept) {
      mean += o->perp_sq[j];
      mean_y += o->y_perp_sq[j];
    }
    mean /= runs;
    mean_y /= runs;
    double var = 0.0;
    for (const auto* o : kept) {
      var += (o->perp_sq[j] - mean) * (o->perp_sq[j] - mean);
    }
    var /= (runs - 1);
    double gamma = schedule.gamma(plan.indices[j]);
    double inv_g2 = 1.0 / (gamma * gamma);
    report.normalized_disagreement[j] = mean * inv_g2;
    report.std_errors[j] = std::sqrt(var / runs) * inv_g2;
    if (2 * plan.indices[j] >= n_steps) c_hat = std::max(c_hat, mean_y);
  }
  report.c_hat = c_hat;
  double sq = std::sqrt(rho);
  report.bound = report.rho_zero_degenerate ? 0.0 : rho * c_hat / ((1.0 - sq) * (1.0 - sq));

  report.passed = true;
  int checked = std::min<int>(options.n_checked, static_cast<int>(n_idx));
  for (std::size_t j = n_idx - checked; j < n_idx; ++j) {
    double slack = options.slack_std_errors * report.std_errors[j];
    if (report.normalized_disagreement[j] > report.bound + slack) {
      report.passed = false;
    }
  }
  return report;
}

EfficiencyReport efficiency_gap(const Eigen::MatrixXd& fisher, int n_agents,
                                double gamma_star) {
  if (fisher.rows() != fisher.cols()) {
    throw std::invalid_argument("efficiency_gap: F must be square");
  }
  if (n_agents < 1) throw std::invalid_argument("efficiency_gap: n_agents must be >= 1");
  Eigen::MatrixXd f = symmetrize(fisher);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
  double lambda_min = eig.eigenvalues().minCoeff();
  if (!(lambda_min > 0.0)) {
    throw std::invalid_argument("efficiency_gap: F must be full rank positive definite");
  }
  if (!(gamma_star > n_agents / (2.0 * lambda_min))) {
    throw std::invalid_argument(
        "efficiency_gap: gamma_star must exceed N / (2 lambda_min(F))");
  }
  const Eigen::Index d = f.rows();
  const double n = static_cast<double>(n_agents);
  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);

  EfficiencyReport report;
  report.fisher = f;
  report.gamma_star = gamma_star;
  report.n_agents = n_agents;
  report.fisher_inv = f.fullPivLu().inverse();
  Eigen::MatrixXd m = 2.0 * gamma_star / n * f - identity;
  Eigen::MatrixXd m_inv = m.fullPivLu().inverse();
  report.sigma = symmetrize(gamma_star * gamma_star / (n * n) * f * m_inv);
  report.gap = report.sigma - report.fisher_inv;
  Eigen::MatrixXd deviation = gamma_star / n * f - identity;
  report.factorization =
      symmetrize(report.fisher_inv * m_inv * deviation * deviation);
  report.factorization_error =
      (report.gap - report.factorization).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gap_eig(symmetrize(report.gap));
  report.min_gap_eigenvalue = gap_eig.eigenvalues().minCoeff();
  report.gap_psd = report.min_gap_eigenvalue >= -1e-10;
  return report;
}

EfficiencyReport efficiency_report(const LocalizationProblem& problem,
                                   double gamma_star) {
  Eigen::Matrix2d fisher = problem.fisher_information(problem.source());
  return efficiency_gap(fisher, problem.n_agents(), gamma_star);
}

}  // namespace gossa
