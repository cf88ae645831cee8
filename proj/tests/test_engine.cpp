#include <sstream>

#include <doctest.h>

#include "gossa/analysis.hpp"
#include "gossa/engine.hpp"
#include "gossa/montecarlo.hpp"
#include "test_util.hpp"

using namespace gossa;

namespace {

StackedState make_state(std::initializer_list<double> values, int n_agents, int dim) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double v : values) theta[k++] = v;
  return StackedState(std::move(theta), n_agents, dim);
}

}  // namespace

TEST_CASE("consensus mean") {
  CHECK(consensus_mean(make_state({1, 2, 3}, 3, 1))[0] == doctest::Approx(2.0));

  Eigen::VectorXd mean = consensus_mean(make_state({1, 0, 3, 4}, 2, 2));
  CHECK(mean[0] == doctest::Approx(2.0));
  CHECK(mean[1] == doctest::Approx(2.0));

  Eigen::VectorXd v(2);
  v << -1.5, 0.25;
  StackedState consensus = StackedState::consensus(v, 5);
  CHECK((consensus_mean(consensus) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disagreement vector") {
  Eigen::VectorXd perp = disagreement(make_state({1, 2, 3}, 3, 1));
  CHECK(perp[0] == doctest::Approx(-1.0));
  CHECK(perp[1] == doctest::Approx(0.0));
  CHECK(perp[2] == doctest::Approx(1.0));

  Eigen::VectorXd v(1);
  v << 4.2;
  CHECK(disagreement(StackedState::consensus(v, 4)).cwiseAbs().maxCoeff() == 0.0);

  StackedState s = make_state({0, 4}, 2, 1);
  Eigen::VectorXd p = disagreement(s);
  CHECK(p[0] == doctest::Approx(-2.0));
  CHECK(p[1] == doctest::Approx(2.0));
  CHECK(disagreement_norm(s) == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("property: decomposition theta = 1 (x) <theta> + theta_perp") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);
    int d = 1 + static_cast<int>(rng() % 3);
    Eigen::VectorXd theta(n * d);
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = gauss(rng);
    StackedState s(theta, n, d);
    Eigen::VectorXd mean = consensus_mean(s);
    Eigen::VectorXd perp = disagreement(s);
    Eigen::VectorXd rebuilt(n * d);
    for (int i = 0; i < n; ++i) rebuilt.segment(i * d, d) = mean + perp.segment(i * d, d);
    CHECK((rebuilt - theta).cwiseAbs().maxCoeff() < 1e-12);
    // <theta_perp> = 0
    CHECK(consensus_mean(StackedState(perp, n, d)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("iterate: identity gossip applies the local step only") {
  StackedState s = make_state({0, 0, 0}, 3, 1);
  GossipMatrix w{Eigen::MatrixXd::Identity(3, 3)};
  StackedState next = iterate(s, w, Eigen::VectorXd::Ones(3), 0.1);
  for (int i = 0; i < 3; ++i) CHECK(next.theta[i] == doctest::Approx(0.1));
}

TEST_CASE("iterate: one-step averaging") {
  StackedState s = make_state({0, 4}, 2, 1);
  Eigen::MatrixXd avg(2, 2);
  avg << 0.5, 0.5, 0.5, 0.5;
  StackedState next = iterate(s, GossipMatrix{avg}, Eigen::VectorXd::Zero(2), 1.0);
  CHECK(next.theta[0] == doctest::Approx(2.0));
  CHECK(next.theta[1] == doctest::Approx(2.0));
}

TEST_CASE("iterate: pairwise edge {1,2} averages the first two agents") {
  StackedState s = make_state({0, 2, 6}, 3, 1);
  Eigen::MatrixXd w(3, 3);
  w << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1;
  StackedState next = iterate(s, GossipMatrix{w}, Eigen::VectorXd::Zero(3), 0.1);
  CHECK(next.theta[0] == doctest::Approx(1.0));
  CHECK(next.theta[1] == doctest::Approx(1.0));
  CHECK(next.theta[2] == doctest::Approx(6.0));
}

TEST_CASE("iterate: dimension mismatch is an argument error") {
  StackedState s = make_state({0, 1}, 2, 1);
  GossipMatrix w{Eigen::MatrixXd::Identity(3, 3)};
  CHECK_THROWS_AS(iterate(s, w, Eigen::VectorXd::Zero(2), 0.1), std::invalid_argument);
  GossipMatrix ok{Eigen::MatrixXd::Identity(2, 2)};
  CHECK_THROWS_AS(iterate(s, ok, Eigen::VectorXd::Zero(3), 0.1), std::invalid_argument);
}

TEST_CASE("iterate_with_gain: identity gain reproduces iterate, scalar gain scales") {
  StackedState s = make_state({0.5, -1, 2, 0}, 2, 2);
  Eigen::MatrixXd w(2, 2);
  w << 0.7, 0.3, 0.2, 0.8;
  Eigen::VectorXd y(4);
  y << 1, -2, 0.5, 3;
  StackedState a = iterate(s, GossipMatrix{w}, y, 0.05);
  StackedState b = iterate_with_gain(s, GossipMatrix{w}, y, 0.05,
                                     Eigen::MatrixXd::Identity(2, 2));
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-15);

  StackedState c = make_state({0}, 1, 1);
  Eigen::MatrixXd gain(1, 1);
  gain << 2.0;
  StackedState scaled = iterate_with_gain(c, GossipMatrix{Eigen::MatrixXd::Identity(1, 1)},
                                          Eigen::VectorXd::Ones(1), 0.1, gain);
  CHECK(scaled.theta[0] == doctest::Approx(0.2));

  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(iterate_with_gain(s, GossipMatrix{w}, y, 0.05, singular),
                  std::invalid_argument);
}

TEST_CASE("property: gossip preserves consensus states") {
  std::mt19937_64 rng(17);
  NetworkGraph g = test::random_connected_graph(5, rng);
  for (const auto& scheme : {GossipScheme::pairwise(g), GossipScheme::broadcast(g, 0.3)}) {
    Eigen::VectorXd v(2);
    v << 1.25, -0.5;
    StackedState consensus = StackedState::consensus(v, 5);
    for (int k = 0; k < 10; ++k) {
      GossipMatrix w = sample_gossip(scheme, 1, rng);
      StackedState next = iterate(consensus, w, Eigen::VectorXd::Zero(10), 0.3);
      for (int i = 0; i < 5; ++i) {
        CHECK((next.agent(i) - v).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
  }
}

TEST_CASE("property: doubly stochastic gossip preserves the consensus mean") {
  std::mt19937_64 rng(19);
  NetworkGraph g = test::random_connected_graph(6, rng);
  GossipScheme scheme = GossipScheme::pairwise(g);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd theta(12);
    for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = gauss(rng);
    StackedState s(theta, 6, 2);
    GossipMatrix w = sample_gossip(scheme, 1, rng);
    StackedState next = iterate(s, w, Eigen::VectorXd::Zero(12), 0.1);
    CHECK((consensus_mean(next) - consensus_mean(s)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("brute force: blockwise iterate equals the dense Kronecker application") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int n = 2; n <= 4; ++n) {
    for (int d = 1; d <= 4; ++d) {
      NetworkGraph g = test::random_connected_graph(n, rng);
      GossipScheme scheme = GossipScheme::broadcast(g, 0.45);
      GossipMatrix w = sample_gossip(scheme, 1, rng);
      Eigen::VectorXd theta(n * d), y(n * d);
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        theta[k] = gauss(rng);
        y[k] = gauss(rng);
      }
      StackedState s(theta, n, d);
      StackedState fast = iterate(s, w, y, 0.2);
      Eigen::MatrixXd dense =
          test::kronecker(w.entries, Eigen::MatrixXd::Identity(d, d));
      Eigen::VectorXd slow = dense * (theta + 0.2 * y);
      CHECK((fast.theta - slow).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("run_trajectory: deterministic Robbins-Monro with a full first step") {
  // zero-noise quadratic, single agent, gamma_1 = 1: theta_1 = theta_star
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Constant(1, 3.0), 0.0, 1);
  GossipScheme scheme = GossipScheme::identity(NetworkGraph(1, {}));
  StepSchedule schedule(1.0, 1.0);
  StackedState init(Eigen::VectorXd::Zero(1), 1, 1);
  std::mt19937_64 rng(1);
  TrajectoryResult res = run_trajectory(problem, scheme, schedule, 1, init, rng);
  CHECK_FALSE(res.diverged());
  CHECK(res.final_state.theta[0] == doctest::Approx(3.0));
}

TEST_CASE("run_trajectory: running mean identity") {
  // zero-noise deterministic run: theta_1 = 2, theta_2 = 8/3, so the
  // averaged iterate must equal their midpoint
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Constant(1, 6.0), 0.0, 1);
  GossipScheme scheme = GossipScheme::identity(NetworkGraph(1, {}));
  StepSchedule schedule(1.0 / 3.0, 1.0);
  StackedState init(Eigen::VectorXd::Zero(1), 1, 1);
  std::mt19937_64 rng(1);
  TrajectoryOptions opts;
  opts.averaging = true;
  RecordPlan plan;
  plan.indices = {1, 2};
  plan.averaged = true;
  TrajectoryResult res =
      run_trajectory(problem, scheme, schedule, 2, init, rng, plan, opts);
  // theta_1 = 0 + (1/3)*6 = 2, theta_2 = 2 + (1/6)*4 = 8/3
  CHECK(res.record.rows[0].mean[0] == doctest::Approx(2.0));
  CHECK(res.record.rows[1].mean[0] == doctest::Approx(8.0 / 3.0));
  CHECK((*res.record.rows[1].avg_mean)[0] == doctest::Approx((2.0 + 8.0 / 3.0) / 2.0));
}

TEST_CASE("property: running mean equals the direct mean of recorded iterates") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1) * 0.8,
                                   Eigen::VectorXd::Zero(1), 0.5, 3);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(3));
  StepSchedule schedule(0.5, 0.7);
  const std::int64_t n_steps = 1000;
  RecordPlan plan = RecordPlan::every(1, n_steps);
  plan.full_state = true;
  TrajectoryOptions opts;
  opts.averaging = true;
  StackedState init(Eigen::VectorXd::Constant(3, 1.0), 3, 1);
  std::mt19937_64 rng(77);
  TrajectoryResult res =
      run_trajectory(problem, scheme, schedule, n_steps, init, rng, plan, opts);
  REQUIRE(res.record.rows.size() == static_cast<std::size_t>(n_steps));
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(3);
  for (const auto& row : res.record.rows) direct += *row.state;
  direct /= static_cast<double>(n_steps);
  CHECK((res.final_averaged->theta - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("determinism: identical seeds give bitwise-identical records") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(2, 2),
                                   Eigen::VectorXd::Zero(2), 1.0, 4);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(4));
  StepSchedule schedule(0.3, 0.7);
  RecordPlan plan = RecordPlan::log_spaced(1, 500, 20);
  plan.lyapunov = true;
  plan.averaged = true;
  TrajectoryOptions opts;
  opts.averaging = true;
  auto run_once = [&] {
    StackedState init = make_initial_state(InitSpec::box(-1, 1), 4, 2, 42, 0);
    std::mt19937_64 rng = make_stream(42, 0, StreamChannel::Trajectory);
    return run_trajectory(problem, scheme, schedule, 500, init, rng, plan, opts);
  };
  TrajectoryResult a = run_once();
  TrajectoryResult b = run_once();
  REQUIRE(a.record.rows.size() == b.record.rows.size());
  for (std::size_t k = 0; k < a.record.rows.size(); ++k) {
    CHECK(a.record.rows[k].step == b.record.rows[k].step);
    CHECK((a.record.rows[k].mean - b.record.rows[k].mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.record.rows[k].disagreement_norm == b.record.rows[k].disagreement_norm);
    CHECK(*a.record.rows[k].lyapunov == *b.record.rows[k].lyapunov);
  }
  CHECK((a.final_state.theta - b.final_state.theta).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream csv_a, csv_b;
  write_csv(a.record, csv_a);
  write_csv(b.record, csv_b);
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("statistics: disagreement shrinks from n=1e2 to n=1e4 in >= 95% of runs") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 1.0, 5);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(5));
  StepSchedule schedule(0.5, 0.7);
  RecordPlan plan;
  plan.indices = {100, 10000};
  int shrunk = 0;
  for (int r = 0; r < 100; ++r) {
    StackedState init = make_initial_state(InitSpec::box(-1, 1), 5, 1, 4242, r);
    std::mt19937_64 rng = make_stream(4242, r, StreamChannel::Trajectory);
    TrajectoryResult res =
        run_trajectory(problem, scheme, schedule, 10000, init, rng, plan, {});
    REQUIRE_FALSE(res.diverged());
    if (res.record.rows[1].disagreement_norm < res.record.rows[0].disagreement_norm) {
      ++shrunk;
    }
  }
  CHECK(shrunk >= 95);
}

TEST_CASE("statistics: optimal gain attains the Sigma_star variance on the scalar problem") {
  // critical schedule, gain Gamma_star = -1/(gamma_star h): the normalized
  // final-iterate variance must match Sigma_star = Upsilon/(gamma_star a^2)
  const double a = 2.0, gamma_star = 1.0;
  QuadraticGaussianProblem problem(a * Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), std::sqrt(5.0), 5);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(5));
  StepSchedule schedule(gamma_star, 1.0);
  OptimalGain best = optimal_gain(problem.clt_data().jacobian,
                                  problem.clt_data().noise_cov, gamma_star);
  CHECK(best.gain(0, 0) == doctest::Approx(0.5));

  const std::int64_t n_steps = 30000;
  const int n_runs = 400;
  TrajectoryOptions opts;
  opts.gain = best.gain;
  const double inv_sqrt_gamma = std::sqrt(n_steps / gamma_star);
  std::vector<Eigen::VectorXd> samples(n_runs);
  parallel_replicas(n_runs, 2, [&](int r) {
    StackedState init = make_initial_state(
        InitSpec::near_point(Eigen::VectorXd::Zero(1), 1e-3), 5, 1, 515, r);
    std::mt19937_64 rng = make_stream(515, r, StreamChannel::Trajectory);
    TrajectoryResult res =
        run_trajectory(problem, scheme, schedule, n_steps, init, rng, {}, opts);
    REQUIRE_FALSE(res.diverged());
    samples[r] = inv_sqrt_gamma * consensus_mean(res.final_state);
  });
  CovarianceEstimate est = empirical_covariance(samples);
  double ratio = est.cov(0, 0) / best.sigma_star(0, 0);
  CHECK(ratio > 0.8);
  CHECK(ratio < 1.2);
}

TEST_CASE("divergence guard reports the offending step") {
  // gamma too large for the quadratic drift: |1 - gamma a| > 1 blows up
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1) * 100.0,
                                   Eigen::VectorXd::Zero(1), 0.0, 1);
  GossipScheme scheme = GossipScheme::identity(NetworkGraph(1, {}));
  StepSchedule schedule(1.0, 0.6);
  StackedState init(Eigen::VectorXd::Constant(1, 1.0), 1, 1);
  std::mt19937_64 rng(3);
  TrajectoryResult res = run_trajectory(problem, scheme, schedule, 100, init, rng);
  REQUIRE(res.diverged());
  CHECK(res.divergence->step >= 1);
  CHECK(res.divergence->step <= 100);
}

TEST_CASE("csv: header-only output for an empty run") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 0.0, 1);
  GossipScheme scheme = GossipScheme::identity(NetworkGraph(1, {}));
  StepSchedule schedule(0.1, 0.7);
  StackedState init(Eigen::VectorXd::Zero(1), 1, 1);
  std::mt19937_64 rng(1);
  TrajectoryResult res = run_trajectory(problem, scheme, schedule, 0, init, rng);
  std::ostringstream csv;
  write_csv(res.record, csv);
  CHECK(csv.str() == "step,mean_1,disagreement_norm,lyapunov,avg_mean_1\n");
}

TEST_CASE("record plan: log spacing covers both endpoints strictly increasing") {
  RecordPlan plan = RecordPlan::log_spaced(100, 100000, 25);
  REQUIRE_FALSE(plan.indices.empty());
  CHECK(plan.indices.front() == 100);
  CHECK(plan.indices.back() == 100000);
  for (std::size_t k = 1; k < plan.indices.size(); ++k) {
    CHECK(plan.indices[k] > plan.indices[k - 1]);
  }
}
