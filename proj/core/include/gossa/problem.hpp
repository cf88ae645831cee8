#pragma once

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gossa/state.hpp"

namespace gossa {

/// Local CLT data at the equilibrium: the mean-field Jacobian (Hurwitz) and
/// the covariance of <Y> at the consensus equilibrium state.
struct CltData {
  Eigen::MatrixXd jacobian;   // grad h(theta_star), d x d
  Eigen::MatrixXd noise_cov;  // Upsilon, d x d symmetric PSD
};

/// Observation law mu_theta together with its mean field h, a Lyapunov
/// function V for h, and (when known) the equilibrium and its CLT data.
/// Implementations are immutable and shareable across threads; sampling
/// uses caller-supplied random streams.
class ProblemModel {
 public:
  virtual ~ProblemModel() = default;

  virtual int dim() const = 0;
  virtual int n_agents() const = 0;

  /// Draw Y ~ mu_theta into `out` (length d*N). Each agent's block depends
  /// only on that agent's theta block.
  virtual void sample_observations(const Eigen::VectorXd& theta, std::mt19937_64& rng,
                                   Eigen::VectorXd& out) const = 0;

  Eigen::VectorXd sample_observations(const Eigen::VectorXd& theta,
                                      std::mt19937_64& rng) const {
    Eigen::VectorXd y(theta.size());
    sample_observations(theta, rng, y);
    return y;
  }

  /// h(theta) = E[<Y>] at the consensus state 1 (x) theta; theta in R^d.
  virtual Eigen::VectorXd mean_field(const Eigen::VectorXd& theta) const = 0;

  /// Lyapunov function for h (non-negative, grad V . h <= 0).
  virtual double lyapunov(const Eigen::VectorXd& theta) const = 0;

  virtual std::optional<Eigen::VectorXd> equilibrium() const { return std::nullopt; }

  /// (grad h(theta_star), Upsilon); throws std::logic_error when no
  /// equilibrium is known.
  virtual CltData clt_data() const;
};

/// Linear mean field with additive Gaussian noise:
///   Y_i = -A (theta_i - theta_star) + xi_i,   xi_i ~ N(0, sigma_Y^2 I_d) i.i.d.
/// h(theta) = -A(theta - theta_star), V(theta) = |theta - theta_star|^2,
/// Upsilon = sigma_Y^2 I / N. Requires -A Hurwitz.
class QuadraticGaussianProblem : public ProblemModel {
 public:
  QuadraticGaussianProblem(Eigen::MatrixXd a, Eigen::VectorXd theta_star,
                           double noise_std, int n_agents);

  int dim() const override { return static_cast<int>(a_.rows()); }
  int n_agents() const override { return n_agents_; }
  using ProblemModel::sample_observations;
  void sample_observations(const Eigen::VectorXd& theta, std::mt19937_64& rng,
                           Eigen::VectorXd& out) const override;
  Eigen::VectorXd mean_field(const Eigen::VectorXd& theta) const override;
  double lyapunov(const Eigen::VectorXd& theta) const override;
  std::optional<Eigen::VectorXd> equilibrium() const override { return theta_star_; }
  CltData clt_data() const override;

  const Eigen::MatrixXd& drift_matrix() const { return a_; }
  double noise_std() const { return noise_std_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd theta_star_;
  double noise_std_;
  int n_agents_;
};

/// Planar source localization by N sensors (d = 2). Sensor i at r_i receives
///   X_i ~ N(g_i(theta_star), sigma^2),   g_i(theta) = 1000 / |theta - r_i|^2,
/// and contributes the score increment
///   Y_i = sigma^-2 (X_i - g_i(theta_i)) grad g_i(theta_i),
///   grad g_i(theta) = -2000 (theta - r_i) / |theta - r_i|^4.
/// One sensor per agent; the score is singular at sensor positions.
class LocalizationProblem : public ProblemModel {
 public:
  static constexpr double kSignalScale = 1000.0;
  static constexpr double kSingularityGuard = 1e-9;

  LocalizationProblem(std::vector<Eigen::Vector2d> sensors, Eigen::Vector2d source,
                      double obs_variance = 1e-2);

  int dim() const override { return 2; }
  int n_agents() const override { return static_cast<int>(sensors_.size()); }
  using ProblemModel::sample_observations;
  void sample_observations(const Eigen::VectorXd& theta, std::mt19937_64& rng,
                           Eigen::VectorXd& out) const override;
  Eigen::VectorXd mean_field(const Eigen::VectorXd& theta) const override;
  /// KL divergence to the true sensor law, up to an additive constant:
  /// V(theta) = sum_i (g_i(theta_star) - g_i(theta))^2 / (2 sigma^2).
  double lyapunov(const Eigen::VectorXd& theta) const override;
  std::optional<Eigen::VectorXd> equilibrium() const override;
  CltData clt_data() const override;

  const std::vector<Eigen::Vector2d>& sensors() const { return sensors_; }
  const Eigen::Vector2d& source() const { return source_; }
  double obs_variance() const { return obs_variance_; }

  double signal(int sensor, const Eigen::Vector2d& theta) const;
  Eigen::Vector2d signal_gradient(int sensor, const Eigen::Vector2d& theta) const;

  /// Fisher information F(theta) = sum_i grad g_i(theta) grad g_i(theta)^T / sigma^2.
  Eigen::Matrix2d fisher_information(const Eigen::Vector2d& theta) const;

 private:
  void check_distance(int agent, const Eigen::Vector2d& theta) const;

  std::vector<Eigen::Vector2d> sensors_;
  Eigen::Vector2d source_;
  double obs_variance_;
};

}  // namespace gossa
