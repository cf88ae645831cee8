#include "gossa/gossip.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gossa {

double GossipMatrix::row_stochasticity_defect() const {
  double defect = (entries.rowwise().sum().array() - 1.0).abs().maxCoeff();
  double lo = entries.minCoeff();
  double hi = entries.maxCoeff();
  if (lo < 0.0) defect = std::max(defect, -lo);
  if (hi > 1.0) defect = std::max(defect, hi - 1.0);
  return defect;
}

GossipScheme::GossipScheme(Kind kind, std::shared_ptr<const NetworkGraph> graph)
    : kind_(kind), graph_(std::move(graph)) {}

GossipScheme GossipScheme::pairwise(NetworkGraph graph) {
  auto g = std::make_shared<const NetworkGraph>(std::move(graph));
  if (g->edges().empty()) {
    throw std::invalid_argument("pairwise scheme requires at least one edge");
  }
  return GossipScheme(Kind::Pairwise, std::move(g));
}

GossipScheme GossipScheme::broadcast(NetworkGraph graph, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("broadcast beta must lie in (0,1)");
  }
  auto g = std::make_shared<const NetworkGraph>(std::move(graph));
  GossipScheme s(Kind::Broadcast, std::move(g));
  s.beta_ = beta;
  return s;
}

GossipScheme GossipScheme::identity(NetworkGraph graph) {
  return GossipScheme(Kind::Identity,
                      std::make_shared<const NetworkGraph>(std::move(graph)));
}

GossipScheme GossipScheme::dropout(double p, GossipScheme inner) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("dropout p must lie in (0,1]");
  }
  GossipScheme s(Kind::Dropout, inner.graph_);
  s.p_ = p;
  s.inner_ = std::make_shared<const GossipScheme>(std::move(inner));
  return s;
}

GossipScheme GossipScheme::vanishing_rate(double p0, double eta, GossipScheme inner) {
  if (!(p0 > 0.0)) throw std::invalid_argument("vanishing-rate p0 must be positive");
  if (eta < 0.0) throw std::invalid_argument("vanishing-rate eta must be >= 0");
  GossipScheme s(Kind::VanishingRate, inner.graph_);
  s.p_ = p0;
  s.eta_ = eta;
  s.inner_ = std::make_shared<const GossipScheme>(std::move(inner));
  return s;
}

double GossipScheme::activation_probability(std::int64_t step) const {
  switch (kind_) {
    case Kind::Dropout:
      return p_;
    case Kind::VanishingRate:
      return std::min(1.0, p_ / std::pow(static_cast<double>(step), eta_));
    default:
      return 1.0;
  }
}

std::string GossipScheme::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Pairwise:
      os << "pairwise";
      break;
    case Kind::Broadcast:
      os << "broadcast(beta=" << beta_ << ")";
      break;
    case Kind::Identity:
      os << "identity";
      break;
    case Kind::Dropout:
      os << "dropout(p=" << p_ << ", " << inner_->describe() << ")";
      break;
    case Kind::VanishingRate:
      os << "vanishing(p0=" << p_ << ", eta=" << eta_ << ", " << inner_->describe()
         << ")";
      break;
  }
  return os.str();
}

namespace {

Eigen::MatrixXd pairwise_matrix(int n, int i, int j) {
  // I_N - (e_i - e_j)(e_i - e_j)^T / 2
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n);
  w(i, i) = 0.5;
  w(j, j) = 0.5;
  w(i, j) = 0.5;
  w(j, i) = 0.5;
  return w;
}

Eigen::MatrixXd broadcast_matrix(const NetworkGraph& graph, int speaker, double beta) {
  int n = graph.node_count();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(n, n);
  for (int k : graph.neighbors()[speaker]) {
    w(k, speaker) = beta;
    w(k, k) = 1.0 - beta;
  }
  return w;
}

}  // namespace

GossipMatrix sample_gossip(const GossipScheme& scheme, std::int64_t step,
                           std::mt19937_64& rng) {
  if (step < 1) throw std::invalid_argument("sample_gossip: step must be >= 1");
  const int n = scheme.node_count();
  switch (scheme.kind()) {
    case GossipScheme::Kind::Pairwise: {
      const auto& edges = scheme.graph().edges();
      std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
      auto [i, j] = edges[pick(rng)];
      return GossipMatrix{pairwise_matrix(n, i, j)};
    }
    case GossipScheme::Kind::Broadcast: {
      std::uniform_int_distribution<int> pick(0, n - 1);
      return GossipMatrix{broadcast_matrix(scheme.graph(), pick(rng), scheme.beta())};
    }
    case GossipScheme::Kind::Identity:
      return GossipMatrix{Eigen::MatrixXd::Identity(n, n)};
    case GossipScheme::Kind::Dropout:
    case GossipScheme::Kind::VanishingRate: {
      double p = scheme.activation_probability(step);
      std::bernoulli_distribution active(p);
      if (active(rng)) return sample_gossip(scheme.inner(), step, rng);
      return GossipMatrix{Eigen::MatrixXd::Identity(n, n)};
    }
  }
  throw std::logic_error("sample_gossip: unreachable");
}

GossipSupport enumerate_support(const GossipScheme& scheme, std::int64_t step) {
  if (step < 1) throw std::invalid_argument("enumerate_support: step must be >= 1");
  const int n = scheme.node_count();
  GossipSupport support;
  switch (scheme.kind()) {
    case GossipScheme::Kind::Pairwise: {
      const auto& edges = scheme.graph().edges();
      double p = 1.0 / static_cast<double>(edges.size());
      for (auto [i, j] : edges) {
        support.probabilities.push_back(p);
        support.matrices.push_back(pairwise_matrix(n, i, j));
      }
      break;
    }
    case GossipScheme::Kind::Broadcast: {
      double p = 1.0 / static_cast<double>(n);
      for (int i = 0; i < n; ++i) {
        support.probabilities.push_back(p);
        support.matrices.push_back(broadcast_matrix(scheme.graph(), i, scheme.beta()));
      }
      break;
    }
    case GossipScheme::Kind::Identity: {
      support.probabilities.push_back(1.0);
      support.matrices.push_back(Eigen::MatrixXd::Identity(n, n));
      break;
    }
    case GossipScheme::Kind::Dropout:
    case GossipScheme::Kind::VanishingRate: {
      double p = scheme.activation_probability(step);
      GossipSupport inner = enumerate_support(scheme.inner(), step);
      for (std::size_t k = 0; k < inner.matrices.size(); ++k) {
        support.probabilities.push_back(p * inner.probabilities[k]);
        support.matrices.push_back(std::move(inner.matrices[k]));
      }
      if (p < 1.0) {
        support.probabilities.push_back(1.0 - p);
        support.matrices.push_back(Eigen::MatrixXd::Identity(n, n));
      }
      break;
    }
  }
  return support;
}

Eigen::MatrixXd expected_matrix(const GossipScheme& scheme, std::int64_t step) {
  const int n = scheme.node_count();
  GossipSupport support = enumerate_support(scheme, step);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < support.matrices.size(); ++k) {
    mean += support.probabilities[k] * support.matrices[k];
  }
  return mean;
}

double contraction_coefficient(const GossipScheme& scheme, std::int64_t step) {
  const int n = scheme.node_count();
  if (n == 1) return 0.0;  // K = 0 for a single node
  Eigen::MatrixXd k_proj =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  GossipSupport support = enumerate_support(scheme, step);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < support.matrices.size(); ++i) {
    const Eigen::MatrixXd& w = support.matrices[i];
    mean += support.probabilities[i] * (w.transpose() * k_proj * w);
  }
  mean = 0.5 * (mean + mean.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mean);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

SchemeValidation validate_scheme(const GossipScheme& scheme, double tolerance,
                                 std::int64_t step) {
  SchemeValidation report;
  GossipSupport support = enumerate_support(scheme, step);
  const int n = scheme.node_count();

  double row_defect = 0.0;
  double doubly_defect = 0.0;
  for (const auto& w : support.matrices) {
    row_defect = std::max(row_defect, GossipMatrix{w}.row_stochasticity_defect());
    double col = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
    doubly_defect = std::max(doubly_defect, col);
  }
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < support.matrices.size(); ++i) {
    mean += support.probabilities[i] * support.matrices[i];
  }
  double mean_col_defect = (mean.colwise().sum().array() - 1.0).abs().maxCoeff();

  report.max_row_defect = row_defect;
  report.row_stochastic = row_defect <= tolerance;
  report.max_column_defect = mean_col_defect;
  report.column_stochastic_in_mean = mean_col_defect <= tolerance;
  report.doubly_stochastic = doubly_defect <= tolerance;
  report.rho = contraction_coefficient(scheme, step);
  report.contraction = report.rho < 1.0 - tolerance;
  report.valid =
      report.row_stochastic && report.column_stochastic_in_mean && report.contraction;
  return report;
}

VanishingRateFeasibility vanishing_rate_feasibility(double eta, double xi,
                                                    double alpha) {
  if (!(alpha > 0.5)) {
    throw std::invalid_argument("vanishing_rate_feasibility: alpha must exceed 1/2");
  }
  if (eta < 0.0 || !(xi > 0.0)) {
    throw std::invalid_argument("vanishing_rate_feasibility: eta >= 0 and xi > 0 required");
  }
  VanishingRateFeasibility result;
  result.feasible = (eta >= 0.0) && (eta < xi - 0.5) && (xi - 0.5 <= 0.5);

  auto fmt = [](std::ostringstream& os) { return os.str(); };
  {
    std::ostringstream os;
    os << "n^" << alpha << " * gamma_n = gamma0 * n^" << (alpha - xi)
       << " -> 0 requires alpha < xi";
    result.step_decay = {fmt(os), alpha < xi};
  }
  {
    std::ostringstream os;
    os << "n^" << (1.0 + alpha) << " * gamma_n = gamma0 * n^" << (1.0 + alpha - xi)
       << " -> inf requires 1 + alpha > xi";
    result.step_not_too_fast = {fmt(os), 1.0 + alpha > xi};
  }
  {
    std::ostringstream os;
    os << "(1-rho_n)/(n^" << alpha << " gamma_n) = (a/gamma0) * n^"
       << (xi - alpha - eta) << ", liminf > 0 requires eta <= xi - alpha";
    result.contraction_rate = {fmt(os), eta <= xi - alpha};
  }
  return result;
}

}  // namespace gossa
