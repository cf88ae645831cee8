#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gossa/gossip.hpp"
#include "gossa/problem.hpp"
#include "gossa/schedule.hpp"
#include "gossa/state.hpp"

namespace gossa {

/// Which step indices get a diagnostics row, and which extras to record.
struct RecordPlan {
  std::vector<std::int64_t> indices;  // strictly increasing, 1-based
  bool lyapunov = false;              // V(<theta_n>)
  bool averaged = false;              // <theta_bar_n> (needs averaging on)
  bool y_perp_sq = false;             // |Y_perp,n|^2 of the step-n draw
  bool full_state = false;            // snapshot of theta_n
  /// When set, record the square error per node
  /// N^-1 sum_i |theta_{n,i} - theta_star|^2 against this reference point.
  std::optional<Eigen::VectorXd> sq_error_reference;

  static RecordPlan none() { return {}; }
  static RecordPlan every(std::int64_t stride, std::int64_t n_steps);
  /// About `points` log-spaced indices over [first, last], always containing
  /// both endpoints.
  static RecordPlan log_spaced(std::int64_t first, std::int64_t last, int points);
};

struct RecordRow {
  std::int64_t step = 0;
  Eigen::VectorXd mean;                     // <theta_n>, d entries
  double disagreement_norm = 0.0;           // |theta_perp,n|
  std::optional<double> lyapunov;           // V(<theta_n>)
  std::optional<Eigen::VectorXd> avg_mean;  // <theta_bar_n>
  std::optional<double> y_perp_sq;          // |Y_perp,n|^2
  std::optional<double> sq_error_per_node;
  std::optional<Eigen::VectorXd> state;     // full theta_n snapshot
};

struct RunRecord {
  int dim = 0;
  std::vector<RecordRow> rows;
};

/// Columns: step, mean_1..mean_d, disagreement_norm, lyapunov,
/// avg_mean_1..avg_mean_d and, when recorded, sq_error_per_node.
/// Disabled optional columns are left empty.
void write_csv(const RunRecord& record, std::ostream& out);

struct DivergenceInfo {
  std::int64_t step = 0;
  double norm = 0.0;
};

struct TrajectoryResult {
  RunRecord record;
  StackedState final_state;
  std::optional<StackedState> final_averaged;
  std::optional<DivergenceInfo> divergence;

  bool diverged() const { return divergence.has_value(); }
};

struct TrajectoryOptions {
  bool averaging = false;
  std::optional<Eigen::MatrixXd> gain;  // d x d invertible matrix gain
  double divergence_norm = 1e12;
};

/// One step of the compact recursion: (W (x) I_d)(theta + gamma Y), applied
/// blockwise without materializing the Kronecker product.
StackedState iterate(const StackedState& state, const GossipMatrix& w,
                     const Eigen::VectorXd& y, double gamma);

/// Same, with each agent increment scaled by a common invertible gain:
/// (W (x) I_d)(theta + gamma (I_N (x) Gain) Y).
StackedState iterate_with_gain(const StackedState& state, const GossipMatrix& w,
                               const Eigen::VectorXd& y, double gamma,
                               const Eigen::MatrixXd& gain);

/// Run the two-step local/gossip recursion for n_steps from `init`,
/// drawing Y_n ~ mu_{theta_{n-1}} then W_n ~ scheme at each step, optionally
/// maintaining the running average theta_bar_n. Deterministic given the
/// stream state and configs. A non-finite or norm-exploding state aborts the
/// run with a divergence report; stability of the unprojected recursion is
/// config-dependent and bad step sizes genuinely diverge.
TrajectoryResult run_trajectory(const ProblemModel& problem, const GossipScheme& scheme,
                                const StepSchedule& schedule, std::int64_t n_steps,
                                const StackedState& init, std::mt19937_64& rng,
                                const RecordPlan& plan = RecordPlan::none(),
                                const TrajectoryOptions& options = {});

}  // namespace gossa
