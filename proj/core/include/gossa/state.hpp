#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace gossa {

/// Stacked agent states: theta in R^(d*N), agent i owning the contiguous
/// block theta.segment(i*d, d). Decomposes as theta = 1 (x) <theta> + theta_perp.
struct StackedState {
  Eigen::VectorXd theta;
  int n_agents = 0;
  int dim = 0;

  StackedState() = default;
  StackedState(Eigen::VectorXd theta_, int n_agents_, int dim_)
      : theta(std::move(theta_)), n_agents(n_agents_), dim(dim_) {
    if (theta.size() != static_cast<Eigen::Index>(n_agents) * dim) {
      throw std::invalid_argument("StackedState: theta length != n_agents * dim");
    }
  }

  Eigen::VectorBlock<const Eigen::VectorXd> agent(int i) const {
    return theta.segment(static_cast<Eigen::Index>(i) * dim, dim);
  }

  /// View of the stacked vector as a d x N matrix, one column per agent.
  Eigen::Map<const Eigen::MatrixXd> as_matrix() const {
    return Eigen::Map<const Eigen::MatrixXd>(theta.data(), dim, n_agents);
  }

  static StackedState consensus(const Eigen::VectorXd& value, int n_agents) {
    Eigen::VectorXd theta(value.size() * n_agents);
    for (int i = 0; i < n_agents; ++i) theta.segment(i * value.size(), value.size()) = value;
    return StackedState(std::move(theta), n_agents, static_cast<int>(value.size()));
  }
};

/// <x> = (x_1 + ... + x_N)/N, a vector of R^d.
inline Eigen::VectorXd consensus_mean(const StackedState& state) {
  return state.as_matrix().rowwise().mean();
}

/// x_perp = x - 1 (x) <x>, the projection onto the subspace orthogonal to
/// consensus. Satisfies <x_perp> = 0.
inline Eigen::VectorXd disagreement(const StackedState& state) {
  Eigen::VectorXd mean = consensus_mean(state);
  Eigen::VectorXd perp = state.theta;
  Eigen::Map<Eigen::MatrixXd> blocks(perp.data(), state.dim, state.n_agents);
  blocks.colwise() -= mean;
  return perp;
}

inline double disagreement_norm(const StackedState& state) {
  return disagreement(state).norm();
}

}  // namespace gossa
