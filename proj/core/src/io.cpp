#include "gossa/io.hpp"

namespace gossa {

using nlohmann::json;

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

static json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

json to_json(const SchemeValidation& v) {
  return json{{"row_stochastic", v.row_stochastic},
              {"max_row_defect", v.max_row_defect},
              {"column_stochastic_in_mean", v.column_stochastic_in_mean},
              {"max_column_defect", v.max_column_defect},
              {"doubly_stochastic", v.doubly_stochastic},
              {"rho", v.rho},
              {"contraction", v.contraction},
              {"valid", v.valid}};
}

json to_json(const VanishingRateFeasibility& f) {
  auto limit = [](const VanishingRateFeasibility::Limit& l) {
    return json{{"condition", l.description}, {"holds", l.holds}};
  };
  return json{{"feasible", f.feasible},
              {"step_decay", limit(f.step_decay)},
              {"step_not_too_fast", limit(f.step_not_too_fast)},
              {"contraction_rate", limit(f.contraction_rate)}};
}

json to_json(const CovarianceEstimate& e) {
  return json{{"mean", to_json(e.mean)},
              {"cov", to_json(e.cov)},
              {"cov_std_error", to_json(e.cov_std_error)},
              {"n_samples", e.n_samples}};
}

json to_json(const CltPrediction& p) {
  json out{{"regime", p.regime == StepSchedule::Regime::Critical ? "critical" : "subcritical"},
           {"sigma", to_json(p.sigma)},
           {"sigma_avg", to_json(p.sigma_avg)}};
  if (p.regime == StepSchedule::Regime::Critical) out["gamma_star"] = p.gamma_star;
  if (p.gain) out["optimal_gain"] = to_json(*p.gain);
  if (p.sigma_star) out["sigma_star"] = to_json(*p.sigma_star);
  return out;
}

json to_json(const CltCheckReport& r) {
  return json{{"prediction", to_json(r.prediction)},
              {"empirical", to_json(r.empirical)},
              {"empirical_avg", to_json(r.empirical_avg)},
              {"rel_error", r.rel_error},
              {"rel_error_avg", r.rel_error_avg},
              {"synchrony_median", r.synchrony_median},
              {"synchrony_threshold", r.synchrony_threshold},
              {"n_runs", r.n_runs},
              {"n_divergent", r.n_divergent},
              {"cov_ok", r.cov_ok},
              {"cov_avg_ok", r.cov_avg_ok},
              {"synchrony_ok", r.synchrony_ok},
              {"divergence_ok", r.divergence_ok},
              {"passed", r.passed}};
}

json to_json(const MomentReport& r) {
  return json{{"steps", r.steps},
              {"normalized_disagreement", r.normalized_disagreement},
              {"std_errors", r.std_errors},
              {"rho", r.rho},
              {"c_hat", r.c_hat},
              {"bound", r.bound},
              {"rho_zero_degenerate", r.rho_zero_degenerate},
              {"n_runs", r.n_runs},
              {"n_divergent", r.n_divergent},
              {"passed", r.passed}};
}

json to_json(const EfficiencyReport& r) {
  return json{{"fisher", to_json(r.fisher)},
              {"fisher_inv", to_json(r.fisher_inv)},
              {"sigma", to_json(r.sigma)},
              {"gap", to_json(r.gap)},
              {"factorization", to_json(r.factorization)},
              {"min_gap_eigenvalue", r.min_gap_eigenvalue},
              {"factorization_error", r.factorization_error},
              {"gamma_star", r.gamma_star},
              {"n_agents", r.n_agents},
              {"gap_psd", r.gap_psd}};
}

void write_normalized_errors_csv(const std::vector<Eigen::VectorXd>& errors,
                                 std::ostream& out) {
  const Eigen::Index d = errors.empty() ? 0 : errors.front().size();
  out << "run_id";
  for (Eigen::Index k = 1; k <= d; ++k) out << ",comp_" << k;
  out << "\n";
  auto prev = out.precision(17);
  for (std::size_t r = 0; r < errors.size(); ++r) {
    out << r + 1;
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << errors[r][k];
    out << "\n";
  }
  out.precision(prev);
}

void write_rate_curve_csv(const MomentReport& report, std::ostream& out) {
  out << "step,normalized_disagreement,std_error,bound\n";
  auto prev = out.precision(17);
  for (std::size_t j = 0; j < report.steps.size(); ++j) {
    out << report.steps[j] << ',' << report.normalized_disagreement[j] << ','
        << report.std_errors[j] << ',' << report.bound << "\n";
  }
  out.precision(prev);
}

}  // namespace gossa
