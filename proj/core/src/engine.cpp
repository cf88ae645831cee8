#include "gossa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/LU>

namespace gossa {

RecordPlan RecordPlan::every(std::int64_t stride, std::int64_t n_steps) {
  if (stride < 1) throw std::invalid_argument("RecordPlan::every: stride must be >= 1");
  RecordPlan plan;
  for (std::int64_t n = stride; n <= n_steps; n += stride) plan.indices.push_back(n);
  return plan;
}

RecordPlan RecordPlan::log_spaced(std::int64_t first, std::int64_t last, int points) {
  if (first < 1 || last < first || points < 1) {
    throw std::invalid_argument("RecordPlan::log_spaced: bad range");
  }
  RecordPlan plan;
  double lf = std::log(static_cast<double>(first));
  double ll = std::log(static_cast<double>(last));
  std::int64_t prev = 0;
  for (int k = 0; k < points; ++k) {
    double t = points == 1 ? 1.0 : static_cast<double>(k) / (points - 1);
    auto n = static_cast<std::int64_t>(std::llround(std::exp(lf + t * (ll - lf))));
    n = std::clamp(n, first, last);
    if (n > prev) {
      plan.indices.push_back(n);
      prev = n;
    }
  }
  if (plan.indices.empty() || plan.indices.back() != last) plan.indices.push_back(last);
  return plan;
}

void write_csv(const RunRecord& record, std::ostream& out) {
  const int d = record.dim;
  bool has_sq_error = false;
  for (const auto& row : record.rows) {
    if (row.sq_error_per_node) has_sq_error = true;
  }
  out << "step";
  for (int k = 1; k <= d; ++k) out << ",mean_" << k;
  out << ",disagreement_norm,lyapunov";
  for (int k = 1; k <= d; ++k) out << ",avg_mean_" << k;
  if (has_sq_error) out << ",sq_error_per_node";
  out << "\n";

  auto prev = out.precision(17);
  for (const auto& row : record.rows) {
    out << row.step;
    for (int k = 0; k < d; ++k) out << ',' << row.mean[k];
    out << ',' << row.disagreement_norm << ',';
    if (row.lyapunov) out << *row.lyapunov;
    for (int k = 0; k < d; ++k) {
      out << ',';
      if (row.avg_mean) out << (*row.avg_mean)[k];
    }
    if (has_sq_error) {
      out << ',';
      if (row.sq_error_per_node) out << *row.sq_error_per_node;
    }
    out << "\n";
  }
  out.precision(prev);
}

namespace {

void check_iterate_args(const StackedState& state, const GossipMatrix& w,
                        const Eigen::VectorXd& y) {
  if (w.entries.rows() != w.entries.cols() || w.entries.rows() != state.n_agents) {
    throw std::invalid_argument("iterate: gossip matrix size != n_agents");
  }
  if (y.size() != state.theta.size()) {
    throw std::invalid_argument("iterate: observation length != state length");
  }
}

}  // namespace

StackedState iterate(const StackedState& state, const GossipMatrix& w,
                     const Eigen::VectorXd& y, double gamma) {
  check_iterate_args(state, w, y);
  const int d = state.dim;
  const int n = state.n_agents;
  Eigen::VectorXd local = state.theta + gamma * y;
  StackedState next(Eigen::VectorXd(state.theta.size()), n, d);
  Eigen::Map<const Eigen::MatrixXd> z(local.data(), d, n);
  Eigen::Map<Eigen::MatrixXd> out(next.theta.data(), d, n);
  // (W (x) I_d) applied blockwise: out_i = sum_j W(i,j) z_j
  out.noalias() = z * w.entries.transpose();
  return next;
}

StackedState iterate_with_gain(const StackedState& state, const GossipMatrix& w,
                               const Eigen::VectorXd& y, double gamma,
                               const Eigen::MatrixXd& gain) {
  check_iterate_args(state, w, y);
  const int d = state.dim;
  const int n = state.n_agents;
  if (gain.rows() != d || gain.cols() != d) {
    throw std::invalid_argument("iterate_with_gain: gain must be d x d");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gain);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin >= 1e12) {
    throw std::invalid_argument("iterate_with_gain: gain is singular or near-singular");
  }
  Eigen::VectorXd local(state.theta.size());
  Eigen::Map<const Eigen::MatrixXd> ymat(y.data(), d, n);
  Eigen::Map<const Eigen::MatrixXd> tmat(state.theta.data(), d, n);
  Eigen::Map<Eigen::MatrixXd> lmat(local.data(), d, n);
  lmat.noalias() = gain * ymat;
  lmat = tmat + gamma * lmat;
  StackedState next(Eigen::VectorXd(state.theta.size()), n, d);
  Eigen::Map<Eigen::MatrixXd> out(next.theta.data(), d, n);
  out.noalias() = lmat * w.entries.transpose();
  return next;
}

TrajectoryResult run_trajectory(const ProblemModel& problem, const GossipScheme& scheme,
                                const StepSchedule& schedule, std::int64_t n_steps,
                                const StackedState& init, std::mt19937_64& rng,
                                const RecordPlan& plan, const TrajectoryOptions& options) {
  const int d = problem.dim();
  const int n = problem.n_agents();
  if (init.dim != d || init.n_agents != n) {
    throw std::invalid_argument("run_trajectory: init dimensions do not match problem");
  }
  if (scheme.node_count() != n) {
    throw std::invalid_argument("run_trajectory: scheme node count != problem agents");
  }
  if (n_steps < 0) throw std::invalid_argument("run_trajectory: n_steps must be >= 0");

  std::optional<Eigen::MatrixXd> gain = options.gain;
  if (gain) {
    // validate once up front; the per-step path skips the SVD
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(*gain);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (gain->rows() != d || gain->cols() != d || !(smin > 0.0) || smax / smin >= 1e12) {
      throw std::invalid_argument("run_trajectory: gain is singular or wrong shape");
    }
  }

  TrajectoryResult result;
  result.record.dim = d;
  result.final_state = init;

  Eigen::VectorXd theta = init.theta;
  Eigen::VectorXd theta_bar;
  if (options.averaging) theta_bar = Eigen::VectorXd::Zero(theta.size());

  Eigen::VectorXd y(theta.size());
  Eigen::VectorXd local(theta.size());
  Eigen::VectorXd next(theta.size());
  Eigen::MatrixXd gossiped(d, n);

  auto record_iter = plan.indices.begin();
  const double inv_n_agents = 1.0 / static_cast<double>(n);

  for (std::int64_t step = 1; step <= n_steps; ++step) {
    const double gamma = schedule.gamma(step);

    problem.sample_observations(theta, rng, y);
    GossipMatrix w = sample_gossip(scheme, step, rng);

    Eigen::Map<const Eigen::MatrixXd> tmat(theta.data(), d, n);
    Eigen::Map<Eigen::MatrixXd> lmat(local.data(), d, n);
    Eigen::Map<const Eigen::MatrixXd> ymat(y.data(), d, n);
    if (gain) {
      lmat.noalias() = (*gain) * ymat;
      lmat = tmat + gamma * lmat;
    } else {
      lmat = tmat + gamma * ymat;
    }
    gossiped.noalias() = lmat * w.entries.transpose();
    Eigen::Map<Eigen::MatrixXd>(next.data(), d, n) = gossiped;
    theta.swap(next);

    if (!theta.allFinite() || theta.norm() > options.divergence_norm) {
      result.divergence = DivergenceInfo{step, theta.allFinite() ? theta.norm()
                                                : std::numeric_limits<double>::infinity()};
      break;
    }

    if (options.averaging) {
      theta_bar += (theta - theta_bar) / static_cast<double>(step);
    }

    if (record_iter != plan.indices.end() && *record_iter == step) {
      ++record_iter;
      StackedState snapshot(theta, n, d);
      RecordRow row;
      row.step = step;
      row.mean = consensus_mean(snapshot);
      row.disagreement_norm = disagreement_norm(snapshot);
      if (plan.lyapunov) row.lyapunov = problem.lyapunov(row.mean);
      if (plan.averaged && options.averaging) {
        row.avg_mean = consensus_mean(StackedState(theta_bar, n, d));
      }
      if (plan.y_perp_sq) {
        row.y_perp_sq = disagreement(StackedState(y, n, d)).squaredNorm();
      }
      if (plan.sq_error_reference) {
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
          err += (snapshot.agent(i) - *plan.sq_error_reference).squaredNorm();
        }
        row.sq_error_per_node = err * inv_n_agents;
      }
      if (plan.full_state) row.state = theta;
      result.record.rows.push_back(std::move(row));
    }
  }

  result.final_state = StackedState(theta, n, d);
  if (options.averaging) {
    result.final_averaged = StackedState(theta_bar, n, d);
  }
  return result;
}

}  // namespace gossa
