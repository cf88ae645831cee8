#include "gossa/problem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gossa/errors.hpp"

namespace gossa {

CltData ProblemModel::clt_data() const {
  throw std::logic_error("clt_data: problem has no known equilibrium");
}

QuadraticGaussianProblem::QuadraticGaussianProblem(Eigen::MatrixXd a,
                                                   Eigen::VectorXd theta_star,
                                                   double noise_std, int n_agents)
    : a_(std::move(a)),
      theta_star_(std::move(theta_star)),
      noise_std_(noise_std),
      n_agents_(n_agents) {
  if (a_.rows() != a_.cols() || a_.rows() != theta_star_.size()) {
    throw std::invalid_argument("QuadraticGaussianProblem: dimension mismatch");
  }
  if (noise_std_ < 0.0) {
    throw std::invalid_argument("QuadraticGaussianProblem: noise_std must be >= 0");
  }
  if (n_agents_ < 1) {
    throw std::invalid_argument("QuadraticGaussianProblem: n_agents must be >= 1");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(a_);
  if (eig.eigenvalues().real().minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "QuadraticGaussianProblem: -A must be Hurwitz (A eigenvalues in the right half-plane)");
  }
}

void QuadraticGaussianProblem::sample_observations(const Eigen::VectorXd& theta,
                                                   std::mt19937_64& rng,
                                                   Eigen::VectorXd& out) const {
  const int d = dim();
  if (theta.size() != static_cast<Eigen::Index>(d) * n_agents_) {
    throw std::invalid_argument("sample_observations: theta length mismatch");
  }
  out.resize(theta.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n_agents_; ++i) {
    auto block = theta.segment(static_cast<Eigen::Index>(i) * d, d);
    out.segment(static_cast<Eigen::Index>(i) * d, d) = -(a_ * (block - theta_star_));
    if (noise_std_ > 0.0) {
      for (int k = 0; k < d; ++k) {
        out[static_cast<Eigen::Index>(i) * d + k] += noise_std_ * gauss(rng);
      }
    }
  }
}

Eigen::VectorXd QuadraticGaussianProblem::mean_field(const Eigen::VectorXd& theta) const {
  return -(a_ * (theta - theta_star_));
}

double QuadraticGaussianProblem::lyapunov(const Eigen::VectorXd& theta) const {
  return (theta - theta_star_).squaredNorm();
}

CltData QuadraticGaussianProblem::clt_data() const {
  const int d = dim();
  return CltData{-a_, (noise_std_ * noise_std_ / n_agents_) *
                          Eigen::MatrixXd::Identity(d, d)};
}

LocalizationProblem::LocalizationProblem(std::vector<Eigen::Vector2d> sensors,
                                         Eigen::Vector2d source, double obs_variance)
    : sensors_(std::move(sensors)), source_(std::move(source)),
      obs_variance_(obs_variance) {
  if (sensors_.empty()) {
    throw std::invalid_argument("LocalizationProblem: at least one sensor required");
  }
  if (!(obs_variance_ > 0.0)) {
    throw std::invalid_argument("LocalizationProblem: obs_variance must be positive");
  }
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if ((sensors_[i] - source_).norm() < kSingularityGuard) {
      throw std::invalid_argument("LocalizationProblem: source coincides with a sensor");
    }
    for (std::size_t j = i + 1; j < sensors_.size(); ++j) {
      if ((sensors_[i] - sensors_[j]).norm() < kSingularityGuard) {
        throw std::invalid_argument("LocalizationProblem: duplicate sensor positions");
      }
    }
  }
}

void LocalizationProblem::check_distance(int agent, const Eigen::Vector2d& theta) const {
  if ((theta - sensors_[agent]).norm() < kSingularityGuard) {
    std::ostringstream os;
    os << "localization score singular: agent " << agent + 1
       << " estimate coincides with sensor " << agent + 1;
    throw SingularityError(agent, agent, os.str());
  }
}

double LocalizationProblem::signal(int sensor, const Eigen::Vector2d& theta) const {
  return kSignalScale / (theta - sensors_[sensor]).squaredNorm();
}

Eigen::Vector2d LocalizationProblem::signal_gradient(int sensor,
                                                     const Eigen::Vector2d& theta) const {
  Eigen::Vector2d delta = theta - sensors_[sensor];
  double r2 = delta.squaredNorm();
  return (-2.0 * kSignalScale / (r2 * r2)) * delta;
}

void LocalizationProblem::sample_observations(const Eigen::VectorXd& theta,
                                              std::mt19937_64& rng,
                                              Eigen::VectorXd& out) const {
  const int n = n_agents();
  if (theta.size() != 2 * n) {
    throw std::invalid_argument("sample_observations: theta length mismatch");
  }
  out.resize(theta.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = std::sqrt(obs_variance_);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d estimate = theta.segment<2>(2 * i);
    check_distance(i, estimate);
    double x = signal(i, source_) + sigma * gauss(rng);
    double residual = (x - signal(i, estimate)) / obs_variance_;
    out.segment<2>(2 * i) = residual * signal_gradient(i, estimate);
  }
}

Eigen::VectorXd LocalizationProblem::mean_field(const Eigen::VectorXd& theta) const {
  if (theta.size() != 2) {
    throw std::invalid_argument("mean_field: theta must be a point in the plane");
  }
  Eigen::Vector2d point = theta;
  Eigen::Vector2d h = Eigen::Vector2d::Zero();
  const int n = n_agents();
  for (int i = 0; i < n; ++i) {
    check_distance(i, point);
    h += (signal(i, source_) - signal(i, point)) / obs_variance_ *
         signal_gradient(i, point);
  }
  return h / n;
}

double LocalizationProblem::lyapunov(const Eigen::VectorXd& theta) const {
  Eigen::Vector2d point = theta;
  double v = 0.0;
  for (int i = 0; i < n_agents(); ++i) {
    check_distance(i, point);
    double diff = signal(i, source_) - signal(i, point);
    v += diff * diff;
  }
  return v / (2.0 * obs_variance_);
}

std::optional<Eigen::VectorXd> LocalizationProblem::equilibrium() const {
  return Eigen::VectorXd(source_);
}

Eigen::Matrix2d LocalizationProblem::fisher_information(const Eigen::Vector2d& theta) const {
  Eigen::Matrix2d f = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n_agents(); ++i) {
    check_distance(i, theta);
    Eigen::Vector2d grad = signal_gradient(i, theta);
    f += grad * grad.transpose();
  }
  return f / obs_variance_;
}

CltData LocalizationProblem::clt_data() const {
  const double n = static_cast<double>(n_agents());
  Eigen::Matrix2d fisher = fisher_information(source_);
  return CltData{-fisher / n, fisher / (n * n)};
}

}  // namespace gossa
