#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "gossa/analysis.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gossa;

namespace {

using test::lyapunov_quadrature;
using test::random_hurwitz;
using test::random_psd;

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST_CASE("solve_lyapunov: scalar and identity cases") {
  CHECK(solve_lyapunov(scalar(-2.0), scalar(4.0))(0, 0) == doctest::Approx(1.0));
  Eigen::MatrixXd sigma = solve_lyapunov(-0.5 * Eigen::MatrixXd::Identity(3, 3),
                                         Eigen::MatrixXd::Identity(3, 3));
  CHECK((sigma - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_lyapunov rejects non-Hurwitz H and non-PSD Upsilon") {
  CHECK_THROWS_AS(solve_lyapunov(scalar(0.5), scalar(1.0)), std::invalid_argument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_lyapunov(-Eigen::MatrixXd::Identity(2, 2), indefinite),
                  std::invalid_argument);
}

TEST_CASE("oracle: solve_lyapunov agrees with the quadrature integral") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 2 + trial % 2;  // 2x2 and 3x3
    Eigen::MatrixXd h = random_hurwitz(d, rng);
    Eigen::MatrixXd upsilon = random_psd(d, rng);
    Eigen::MatrixXd sigma = solve_lyapunov(h, upsilon);
    Eigen::MatrixXd oracle = lyapunov_quadrature(h, upsilon);
    CHECK((sigma - oracle).cwiseAbs().maxCoeff() < 1e-6);
    // residual of the defining equation
    CHECK((h * sigma + sigma * h.transpose() + upsilon).cwiseAbs().maxCoeff() < 1e-10);
    // symmetric PSD output
    CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("solve_lyapunov_critical: scalar closed form") {
  // Sigma = gamma^2 v / (2 gamma a - 1)
  CHECK(solve_lyapunov_critical(scalar(-1.0), scalar(1.0), 1.0)(0, 0) ==
        doctest::Approx(1.0));
  CHECK(solve_lyapunov_critical(scalar(-2.0), scalar(3.0), 0.5)(0, 0) ==
        doctest::Approx(0.25 * 3.0 / (2.0 * 0.5 * 2.0 - 1.0)));
  // stability margin gamma_star > 1/(2L)
  CHECK_THROWS_AS(solve_lyapunov_critical(scalar(-1.0), scalar(1.0), 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_lyapunov_critical(scalar(1.0), scalar(1.0), 2.0),
                  std::invalid_argument);
}

TEST_CASE("solve_lyapunov_critical: localization closed form Sigma = g^2 N^-2 F (2 g N^-1 F - I)^-1") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd fisher = random_psd(2, rng) + 0.5 * Eigen::MatrixXd::Identity(2, 2);
    int n_agents = 1 + trial % 4;
    const double n = n_agents;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
    double gamma_star = 1.2 * n / (2.0 * eig.eigenvalues().minCoeff());
    Eigen::MatrixXd h = -fisher / n;
    Eigen::MatrixXd upsilon = fisher / (n * n);
    Eigen::MatrixXd sigma = solve_lyapunov_critical(h, upsilon, gamma_star);
    Eigen::MatrixXd closed =
        gamma_star * gamma_star / (n * n) * fisher *
        (2.0 * gamma_star / n * fisher - Eigen::MatrixXd::Identity(2, 2)).inverse();
    CHECK((sigma - closed).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("averaged covariance") {
  CHECK(averaged_covariance(scalar(-2.0), scalar(3.0))(0, 0) == doctest::Approx(0.75));
  std::mt19937_64 q_rng(13);
  Eigen::MatrixXd q = random_psd(3, q_rng);
  CHECK((averaged_covariance(-Eigen::MatrixXd::Identity(3, 3), q) - q)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  // localization form: (-F/N)^-1 (F/N^2) (-F/N)^-T = F^-1
  std::mt19937_64 rng(17);
  Eigen::MatrixXd fisher = random_psd(2, rng) + Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd sigma_avg = averaged_covariance(-fisher / 5.0, fisher / 25.0);
  CHECK((sigma_avg - fisher.inverse()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(averaged_covariance(Eigen::MatrixXd::Zero(2, 2), fisher),
                  std::invalid_argument);
}

TEST_CASE("optimal gain: scalar example and coincidence with the averaged covariance") {
  OptimalGain og = optimal_gain(scalar(-2.0), scalar(1.0), 1.0);
  CHECK(og.gain(0, 0) == doctest::Approx(0.5));
  CHECK(og.sigma_star(0, 0) == doctest::Approx(averaged_covariance(scalar(-2.0), scalar(1.0))(0, 0)));
}

TEST_CASE("optimal gain dominates sampled alternatives on the scalar problem") {
  // Sigma_Gamma computed by the critical solver on the gain-scaled system,
  // rescaled to the gamma^{-1/2} normalization for comparison with Sigma_star
  const double a = 1.0, v = 1.0, gamma_star = 2.0;
  OptimalGain best = optimal_gain(scalar(-a), scalar(v), gamma_star);
  for (double g : {0.6, 0.9, 1.3, 2.0, 4.0}) {
    Eigen::MatrixXd h_g = scalar(-a * g);
    Eigen::MatrixXd upsilon_g = scalar(v * g * g);
    double sigma_g =
        solve_lyapunov_critical(h_g, upsilon_g, gamma_star)(0, 0) / gamma_star;
    CHECK(sigma_g - best.sigma_star(0, 0) >= -1e-12);
  }
  // equality at the optimal gain itself
  double g_opt = best.gain(0, 0);
  double sigma_opt = solve_lyapunov_critical(scalar(-a * g_opt), scalar(v * g_opt * g_opt),
                                             gamma_star)(0, 0) / gamma_star;
  CHECK(sigma_opt == doctest::Approx(best.sigma_star(0, 0)));
}

TEST_CASE("empirical covariance: Bessel correction and degenerate samples") {
  std::vector<Eigen::VectorXd> two{scalar(1.0).col(0), scalar(-1.0).col(0)};
  CovarianceEstimate est = empirical_covariance(two);
  CHECK(est.mean[0] == doctest::Approx(0.0));
  CHECK(est.cov(0, 0) == doctest::Approx(2.0));

  std::vector<Eigen::VectorXd> same(5, Eigen::VectorXd::Constant(2, 3.0));
  CovarianceEstimate flat = empirical_covariance(same);
  CHECK(flat.cov.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  CHECK_THROWS_AS(empirical_covariance({scalar(1.0).col(0)}), std::invalid_argument);
}

TEST_CASE("empirical covariance: chi-square concentration on 1e5 normals") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(100000);
  for (int s = 0; s < 100000; ++s) samples.push_back(scalar(gauss(rng)).col(0));
  CovarianceEstimate est = empirical_covariance(samples);
  CHECK(est.cov(0, 0) > 0.97);
  CHECK(est.cov(0, 0) < 1.03);
  // jackknife standard error of the variance of n standard normals ~ sqrt(2/n)
  CHECK(est.cov_std_error(0, 0) == doctest::Approx(std::sqrt(2.0 / 100000)).epsilon(0.15));
}

TEST_CASE("predict_clt: subcritical scalar gives v/(2a), averaged gives v/a^2") {
  CltData data{scalar(-1.0), scalar(1.0)};
  CltPrediction p = predict_clt(data, StepSchedule(0.5, 0.7));
  CHECK(p.regime == StepSchedule::Regime::Subcritical);
  CHECK(p.sigma(0, 0) == doctest::Approx(0.5));
  CHECK(p.sigma_avg(0, 0) == doctest::Approx(1.0));
  CHECK_FALSE(p.gain.has_value());
}

TEST_CASE("predict_clt: critical regime fills the gain and rescales sigma") {
  CltData data{scalar(-1.0), scalar(1.0)};
  CltPrediction p = predict_clt(data, StepSchedule(2.0, 1.0));
  CHECK(p.regime == StepSchedule::Regime::Critical);
  CHECK(p.gamma_star == doctest::Approx(2.0));
  // sqrt(n)-normalized solution: g^2 v/(2 g a - 1) = 4/3; sigma = that / g
  CHECK(p.sigma(0, 0) == doctest::Approx((4.0 / 3.0) / 2.0));
  REQUIRE(p.gain.has_value());
  CHECK((*p.gain)(0, 0) == doctest::Approx(0.5));
  CHECK((*p.sigma_star)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("prediction is identical for centralized and distributed configurations") {
  // same (h, Upsilon) entering predict_clt must give bitwise-equal matrices,
  // whatever scheme or agent count produced them
  CltData data{scalar(-1.3), scalar(0.7)};
  StepSchedule schedule(0.4, 0.8);
  CltPrediction centralized = predict_clt(data, schedule);
  CltPrediction distributed = predict_clt(data, schedule);
  CHECK(centralized.sigma(0, 0) == distributed.sigma(0, 0));
  CHECK(centralized.sigma_avg(0, 0) == distributed.sigma_avg(0, 0));
}

TEST_CASE("scalar critical covariance dominates the averaged limit v/a^2") {
  const double a = 1.5, v = 2.0;
  double floor = v / (a * a);
  for (double gamma : {0.34, 0.5, 2.0 / (2.0 * 1.5), 1.0, 3.0, 10.0}) {
    if (!(gamma > 1.0 / (2.0 * a))) continue;
    double sigma = solve_lyapunov_critical(scalar(-a), scalar(v), gamma)(0, 0);
    CHECK(sigma - floor >= -1e-12);
  }
}

TEST_CASE("efficiency gap: scalar worked example") {
  EfficiencyReport rep = efficiency_gap(scalar(4.0), 1, 1.0);
  CHECK(rep.sigma(0, 0) == doctest::Approx(4.0 / 7.0));
  CHECK(rep.fisher_inv(0, 0) == doctest::Approx(0.25));
  CHECK(rep.gap(0, 0) == doctest::Approx(4.0 / 7.0 - 0.25));
  CHECK(rep.gap(0, 0) > 0.0);
  CHECK(rep.factorization_error < 1e-12);
  CHECK(rep.gap_psd);
}

TEST_CASE("efficiency gap vanishes when gamma_star N^-1 F = I") {
  // F = 2I, N = 1, gamma_star = 0.5 -> (gamma N^-1 F - I)^2 = 0
  EfficiencyReport rep = efficiency_gap(2.0 * Eigen::MatrixXd::Identity(2, 2), 1, 0.5 + 1e-9);
  CHECK(rep.gap.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("efficiency gap: random Fisher matrices give PSD gaps matching the factorization") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd fisher = random_psd(2, rng) + 0.3 * Eigen::MatrixXd::Identity(2, 2);
    int n_agents = 1 + trial % 5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
    std::uniform_real_distribution<double> factor(1.05, 4.0);
    double gamma_star = factor(rng) * n_agents / (2.0 * eig.eigenvalues().minCoeff());
    EfficiencyReport rep = efficiency_gap(fisher, n_agents, gamma_star);
    CHECK(rep.min_gap_eigenvalue >= -1e-10);
    CHECK(rep.factorization_error < 1e-8);
    // gamma_star N^-1 F != I for these generic draws, so the gap is nontrivial
    CHECK(rep.gap.trace() > 0.0);
  }
  CHECK_THROWS_AS(efficiency_gap(scalar(4.0), 1, 0.1), std::invalid_argument);
  Eigen::MatrixXd rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  CHECK_THROWS_AS(efficiency_gap(rank1, 1, 10.0), std::invalid_argument);
}

TEST_CASE("clt_check rejects non-doubly-stochastic schemes") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 1.0, 4);
  GossipScheme broadcast = GossipScheme::broadcast(NetworkGraph::complete(4), 0.5);
  CHECK_THROWS_AS(
      clt_check(problem, broadcast, StepSchedule(0.5, 0.7), 100, 10, 1, {}),
      std::invalid_argument);
}

TEST_CASE("disagreement_rate_check rejects rho = 1 and flags rho = 0 as degenerate") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 1.0, 4);
  GossipScheme split = GossipScheme::pairwise(NetworkGraph(4, {{0, 1}, {2, 3}}));
  CHECK_THROWS_AS(
      disagreement_rate_check(problem, split, StepSchedule(0.5, 0.7), 100, 10, 1, {}),
      std::invalid_argument);

  QuadraticGaussianProblem pair_problem(Eigen::MatrixXd::Identity(1, 1),
                                        Eigen::VectorXd::Zero(1), 1.0, 2);
  GossipScheme complete2 = GossipScheme::pairwise(NetworkGraph::complete(2));
  RateCheckOptions opts;
  opts.n_points = 8;
  MomentReport rep = disagreement_rate_check(pair_problem, complete2,
                                             StepSchedule(0.5, 0.7), 200, 8, 3, opts);
  CHECK(rep.rho_zero_degenerate);
  CHECK(rep.bound == 0.0);
  // the unique pairwise matrix on two nodes zeroes the disagreement exactly
  CHECK(rep.passed);
}

TEST_CASE("statistics: normalized disagreement curve stays flat for pairwise and broadcast") {
  // flatness: the last normalized value is at most twice the curve median
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), 1.0, 5);
  StepSchedule schedule(0.5, 0.7);
  NetworkGraph graph = NetworkGraph::complete(5);
  RateCheckOptions opts;
  opts.threads = 2;
  opts.n_points = 20;
  for (const auto& scheme :
       {GossipScheme::pairwise(graph), GossipScheme::broadcast(graph, 0.5)}) {
    MomentReport rep =
        disagreement_rate_check(problem, scheme, schedule, 20000, 50, 909, opts);
    CHECK(rep.n_divergent == 0);
    CHECK(rep.passed);
    std::vector<double> curve = rep.normalized_disagreement;
    std::nth_element(curve.begin(), curve.begin() + curve.size() / 2, curve.end());
    double median = curve[curve.size() / 2];
    CHECK(rep.normalized_disagreement.back() <= 2.0 * median);
  }
}

TEST_CASE("clt_check smoke run on a small ensemble") {
  QuadraticGaussianProblem problem(Eigen::MatrixXd::Identity(1, 1),
                                   Eigen::VectorXd::Zero(1), std::sqrt(3.0), 3);
  GossipScheme scheme = GossipScheme::pairwise(NetworkGraph::complete(3));
  StepSchedule schedule(0.5, 0.7);
  CltCheckOptions opts;
  opts.threads = 2;
  opts.rel_tolerance = 0.5;  // loose: this is a smoke test, not the acceptance run
  CltCheckReport rep = clt_check(problem, scheme, schedule, 20000, 200, 7, opts);
  CHECK(rep.n_divergent == 0);
  CHECK(rep.prediction.sigma(0, 0) == doctest::Approx(0.5));
  CHECK(rep.prediction.sigma_avg(0, 0) == doctest::Approx(1.0));
  CHECK(rep.empirical.n_samples == 200);
  CHECK(rep.rel_error < 0.5);
  CHECK(std::size_t(200) == rep.normalized_errors.size());
}
