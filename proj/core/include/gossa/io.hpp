#pragma once

#include <ostream>
#include <vector>

#include <json.hpp>

#include "gossa/analysis.hpp"
#include "gossa/gossip.hpp"

namespace gossa {

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const SchemeValidation& v);
nlohmann::json to_json(const VanishingRateFeasibility& f);
nlohmann::json to_json(const CovarianceEstimate& e);
nlohmann::json to_json(const CltPrediction& p);
nlohmann::json to_json(const CltCheckReport& r);
nlohmann::json to_json(const MomentReport& r);
nlohmann::json to_json(const EfficiencyReport& r);

/// Histogram data: one row per surviving run, columns run_id, comp_1..comp_d.
void write_normalized_errors_csv(const std::vector<Eigen::VectorXd>& errors,
                                 std::ostream& out);

/// Rate-check curve: step, normalized_disagreement, std_error, bound.
void write_rate_curve_csv(const MomentReport& report, std::ostream& out);

}  // namespace gossa
