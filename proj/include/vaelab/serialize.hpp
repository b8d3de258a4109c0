#pragma once

#include <json.hpp>

#include "vaelab/analysis.hpp"
#include "vaelab/linear_vae.hpp"
#include "vaelab/replica.hpp"

namespace vaelab {

/// Finite values as numbers, non-finite ones as the strings "inf", "-inf", "nan".
nlohmann::json json_number(double v);

/// Inverse of json_number; also accepts plain numbers.
double number_from_json(const nlohmann::json& j);

/// chi, zeta, omega that are not applicable (NaN) are written as null.
nlohmann::json to_json(const SummaryStatistics& s);
nlohmann::json to_json(const ConjugateStatistics& c);
nlohmann::json to_json(const FixedPointResult& r);
nlohmann::json to_json(const AsymptoticMetrics& m);
nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const MetricSummary& s);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const SolverOptions& o);
nlohmann::json to_json(const TrainConfig& t);

}  // namespace vaelab
