#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gossa/engine.hpp"
#include "gossa/gossip.hpp"
#include "gossa/montecarlo.hpp"
#include "gossa/problem.hpp"
#include "gossa/schedule.hpp"

namespace gossa {

/// Solve H Sigma + Sigma H^T = -Upsilon for symmetric PSD Sigma, by
/// vectorization: (I (x) H + H (x) I) vec(Sigma) = -vec(Upsilon).
/// Requires H Hurwitz and Upsilon symmetric PSD.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& h, const Eigen::MatrixXd& upsilon);

/// Critical-regime (gamma_n ~ gamma_star/n) asymptotic covariance of
/// sqrt(n)(<theta_n> - theta_star):
///   (2 gamma_star H + I) Sigma + Sigma (2 gamma_star H^T + I) = -2 gamma_star^2 Upsilon.
/// Requires gamma_star > 1/(2L) where -L is the largest real part of eig(H).
Eigen::MatrixXd solve_lyapunov_critical(const Eigen::MatrixXd& h,
                                        const Eigen::MatrixXd& upsilon,
                                        double gamma_star);

/// Averaged-sequence asymptotic covariance H^-1 Upsilon H^-T (symmetrized).
Eigen::MatrixXd averaged_covariance(const Eigen::MatrixXd& h,
                                    const Eigen::MatrixXd& upsilon);

/// Optimal matrix gain for the critical regime and the covariance it attains:
/// Gamma_star = -gamma_star^-1 H^-1, Sigma_star = gamma_star^-1 H^-1 Upsilon H^-T.
/// Sigma_star is normalized like CltPrediction::sigma (gamma_n^{-1/2} scale).
struct OptimalGain {
  Eigen::MatrixXd gain;
  Eigen::MatrixXd sigma_star;
};
OptimalGain optimal_gain(const Eigen::MatrixXd& h, const Eigen::MatrixXd& upsilon,
                         double gamma_star);

/// Sample mean and Bessel-corrected covariance with per-entry jackknife
/// standard errors (NaN when fewer than 3 samples).
struct CovarianceEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cov_std_error;
  int n_samples = 0;
};
CovarianceEstimate empirical_covariance(const std::vector<Eigen::VectorXd>& samples);

/// Solved asymptotic covariances for a problem/schedule pair.
///   sigma     covariance of gamma_n^{-1/2}(<theta_n> - theta_star)
///   sigma_avg covariance of sqrt(n)(<theta_bar_n> - theta_star)
/// In the critical regime, sqrt(n)(<theta_n> - theta_star) has covariance
/// gamma_star * sigma. gain/sigma_star are filled in the critical regime.
struct CltPrediction {
  StepSchedule::Regime regime = StepSchedule::Regime::Subcritical;
  double gamma_star = 0.0;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sigma_avg;
  std::optional<Eigen::MatrixXd> gain;
  std::optional<Eigen::MatrixXd> sigma_star;
};

/// Pure formula-level prediction; independent of the gossip scheme and of the
/// number of agents beyond what (h, Upsilon) already encode, which is exactly
/// why distributed and centralized configurations share their predictions.
CltPrediction predict_clt(const CltData& data, const StepSchedule& schedule);

struct CltCheckOptions {
  int threads = 1;
  /// Pass band: relative Frobenius error of empirical vs predicted covariance.
  double rel_tolerance = 0.2;
  /// Synchrony pass: median statistic <= sync_tolerance * sqrt(lambda_max(sigma)).
  double sync_tolerance = 0.1;
  double max_divergent_fraction = 0.01;
  /// Initial per-agent perturbation around theta_star has norm at most
  /// init_scale_factor * sqrt(gamma(n_steps)).
  double init_scale_factor = 0.1;
};

struct CltCheckReport {
  CltPrediction prediction;
  CovarianceEstimate empirical;      // gamma_n^{-1/2}(<theta_n> - theta_star)
  CovarianceEstimate empirical_avg;  // sqrt(n)(<theta_bar_n> - theta_star)
  double rel_error = 0.0;            // Frobenius, vs prediction.sigma
  double rel_error_avg = 0.0;        // Frobenius, vs prediction.sigma_avg
  double synchrony_median = 0.0;     // max_i gamma_n^{-1/2}|theta_{n,i} - <theta_n>|
  double synchrony_threshold = 0.0;
  int n_runs = 0;
  int n_divergent = 0;
  std::vector<Eigen::VectorXd> normalized_errors;  // per surviving run, d entries
  bool cov_ok = false;
  bool cov_avg_ok = false;
  bool synchrony_ok = false;
  bool divergence_ok = false;
  bool passed = false;
};

/// Monte-Carlo check of the CLT predictions: runs n_runs trajectories
/// initialized near theta_star, collects the normalized errors at the final
/// step, and compares their covariance against predict_clt. Requires a
/// doubly stochastic scheme and a problem exposing clt_data.
CltCheckReport clt_check(const ProblemModel& problem, const GossipScheme& scheme,
                         const StepSchedule& schedule, std::int64_t n_steps, int n_runs,
                         std::uint64_t root_seed, const CltCheckOptions& options = {});

struct RateCheckOptions {
  int threads = 1;
  int n_points = 30;          // log-spaced recording indices
  int n_checked = 5;          // largest indices compared against the bound
  double slack_std_errors = 3.0;
  InitSpec init = InitSpec::box(-1.0, 1.0);
};

/// Empirical L2 disagreement rate versus the rho C / (1-sqrt(rho))^2 bound.
struct MomentReport {
  std::vector<std::int64_t> steps;
  std::vector<double> normalized_disagreement;  // gamma_n^-2 E|theta_perp,n|^2
  std::vector<double> std_errors;               // standard error of each entry
  double rho = 1.0;
  double c_hat = 0.0;  // max over the tail half of E|Y_perp,n|^2
  double bound = 0.0;  // rho * c_hat / (1 - sqrt(rho))^2
  bool rho_zero_degenerate = false;  // bound trivially governed by within-step noise
  int n_runs = 0;
  int n_divergent = 0;
  bool passed = false;
};

MomentReport disagreement_rate_check(const ProblemModel& problem,
                                     const GossipScheme& scheme,
                                     const StepSchedule& schedule, std::int64_t n_steps,
                                     int n_runs, std::uint64_t root_seed,
                                     const RateCheckOptions& options = {});

/// Departure from asymptotic efficiency of the non-averaged critical-regime
/// algorithm: Sigma - F^-1 with its closed-form factorization
/// F^-1 (2 gamma_star N^-1 F - I)^-1 (gamma_star N^-1 F - I)^2.
struct EfficiencyReport {
  Eigen::MatrixXd fisher;
  Eigen::MatrixXd fisher_inv;
  Eigen::MatrixXd sigma;  // gamma_star^2 N^-2 F (2 gamma_star N^-1 F - I)^-1
  Eigen::MatrixXd gap;    // sigma - fisher_inv
  Eigen::MatrixXd factorization;
  double min_gap_eigenvalue = 0.0;
  double factorization_error = 0.0;  // |gap - factorization|_max
  double gamma_star = 0.0;
  int n_agents = 0;
  bool gap_psd = false;
};

/// Core computation on an explicit Fisher matrix (admissibility:
/// gamma_star > N / (2 lambda_min(F)), F full rank).
EfficiencyReport efficiency_gap(const Eigen::MatrixXd& fisher, int n_agents,
                                double gamma_star);

/// Convenience wrapper using the realized F(theta_star) of a localization
/// problem.
EfficiencyReport efficiency_report(const LocalizationProblem& problem,
                                   double gamma_star);

}  // namespace gossa
