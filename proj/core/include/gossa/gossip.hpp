#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gossa/graph.hpp"

namespace gossa {

/// One realization of the random communication matrix W_n. Rows sum to one
/// (each agent takes a weighted average of its neighbors' iterates).
struct GossipMatrix {
  Eigen::MatrixXd entries;

  int size() const { return static_cast<int>(entries.rows()); }
  /// Max deviation of any row sum from 1, plus any entry outside [0,1].
  double row_stochasticity_defect() const;
};

/// Weighted finite support of the per-step matrix distribution.
struct GossipSupport {
  std::vector<double> probabilities;
  std::vector<Eigen::MatrixXd> matrices;
};

/// A distribution over gossip matrices, parameterized as in the three
/// standard schemes (pairwise, broadcast, dropout) plus the vanishing
/// communication-rate wrapper and the no-communication identity scheme.
/// Immutable after construction; sampling takes a caller-owned stream.
class GossipScheme {
 public:
  enum class Kind { Pairwise, Broadcast, Dropout, VanishingRate, Identity };

  static GossipScheme pairwise(NetworkGraph graph);
  static GossipScheme broadcast(NetworkGraph graph, double beta);
  static GossipScheme identity(NetworkGraph graph);
  /// W'_n = B_n W_n + (1 - B_n) I with B_n ~ Bernoulli(p), W_n ~ inner.
  static GossipScheme dropout(double p, GossipScheme inner);
  /// Dropout whose mixing probability decays as p_n = min(1, p0 / n^eta).
  static GossipScheme vanishing_rate(double p0, double eta, GossipScheme inner);

  Kind kind() const { return kind_; }
  const NetworkGraph& graph() const { return *graph_; }
  int node_count() const { return graph_->node_count(); }
  double beta() const { return beta_; }
  double dropout_p() const { return p_; }
  double vanish_p0() const { return p_; }
  double vanish_eta() const { return eta_; }
  const GossipScheme& inner() const { return *inner_; }
  /// Mixing probability at a given step (1 except for Dropout/VanishingRate).
  double activation_probability(std::int64_t step) const;

  std::string describe() const;

 private:
  GossipScheme(Kind kind, std::shared_ptr<const NetworkGraph> graph);

  Kind kind_;
  std::shared_ptr<const NetworkGraph> graph_;
  double beta_ = 0.0;
  double p_ = 1.0;
  double eta_ = 0.0;
  std::shared_ptr<const GossipScheme> inner_;
};

/// Draw one W_n. `step` is the 1-based iteration index (it only matters for
/// the VanishingRate scheme).
GossipMatrix sample_gossip(const GossipScheme& scheme, std::int64_t step,
                           std::mt19937_64& rng);

/// Exact finite support of the step-n matrix distribution, by enumeration of
/// the activation distribution (edges for pairwise, nodes for broadcast).
GossipSupport enumerate_support(const GossipScheme& scheme, std::int64_t step);

/// Exact E(W_n) by support enumeration.
Eigen::MatrixXd expected_matrix(const GossipScheme& scheme, std::int64_t step);

/// Spectral norm rho of E(W_n^T (I - 11^T/N) W_n), computed by exact support
/// enumeration followed by a symmetric eigensolve. rho < 1 is the contraction
/// condition on the disagreement subspace.
double contraction_coefficient(const GossipScheme& scheme, std::int64_t step = 1);

/// Stochasticity report for a scheme; violations are reported, not thrown.
struct SchemeValidation {
  bool row_stochastic = false;        // every support matrix
  double max_row_defect = 0.0;
  bool column_stochastic_in_mean = false;  // 1^T E(W) = 1^T
  double max_column_defect = 0.0;
  bool doubly_stochastic = false;     // 1^T W = 1^T for every support matrix
  double rho = 1.0;
  bool contraction = false;           // rho < 1
  bool valid = false;                 // row + column-in-mean + contraction
};

SchemeValidation validate_scheme(const GossipScheme& scheme, double tolerance = 1e-12,
                                 std::int64_t step = 1);

/// Feasibility of a vanishing communication rate for power-law families
/// 1 - rho_n = a/n^eta, gamma_n = gamma0/n^xi. The verdict is the sufficient
/// region 0 <= eta < xi - 1/2 <= 1/2; the three limit conditions are
/// additionally evaluated at the supplied alpha.
struct VanishingRateFeasibility {
  bool feasible = false;
  struct Limit {
    std::string description;
    bool holds = false;
  };
  Limit step_decay;        // n^alpha gamma_n -> 0
  Limit step_not_too_fast; // n^(1+alpha) gamma_n -> infinity
  Limit contraction_rate;  // liminf (1-rho_n)/(n^alpha gamma_n) > 0
};

VanishingRateFeasibility vanishing_rate_feasibility(double eta, double xi, double alpha);

}  // namespace gossa
