#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "gossa/problem.hpp"
#include "gossa/rng.hpp"
#include "gossa/state.hpp"

namespace gossa {

/// Run fn(replica) for replica in [0, n_runs) on up to `threads` workers.
/// Replicas own disjoint output slots, so results are independent of the
/// execution order and of the thread count.
void parallel_replicas(int n_runs, int threads, const std::function<void(int)>& fn);

/// Initial-state factories. All draw from the replica's Init channel stream,
/// so replica k's starting point is a pure function of (root_seed, k).
struct InitSpec {
  enum class Kind { Box, NearPoint, Explicit };
  Kind kind = Kind::Box;
  double box_lo = -1.0;
  double box_hi = 1.0;
  Eigen::VectorXd point;   // NearPoint center / Explicit stacked vector
  double scale = 0.0;      // NearPoint: per-agent perturbation sup-norm bound

  static InitSpec box(double lo, double hi) {
    InitSpec s;
    s.kind = Kind::Box;
    s.box_lo = lo;
    s.box_hi = hi;
    return s;
  }
  static InitSpec near_point(Eigen::VectorXd center, double scale) {
    InitSpec s;
    s.kind = Kind::NearPoint;
    s.point = std::move(center);
    s.scale = scale;
    return s;
  }
  static InitSpec explicit_vector(Eigen::VectorXd stacked) {
    InitSpec s;
    s.kind = Kind::Explicit;
    s.point = std::move(stacked);
    return s;
  }
};

StackedState make_initial_state(const InitSpec& spec, int n_agents, int dim,
                                std::uint64_t root_seed, int replica);

}  // namespace gossa
