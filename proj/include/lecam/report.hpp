#pragma once

#include <string>

#include <json.hpp>

#include "lecam/density_model.hpp"
#include "lecam/metrics.hpp"
#include "lecam/transforms.hpp"

namespace lecam {

// CSV layout: '#' provenance header lines, one column-name line, then one
// row per grid point; doubles at 17 significant digits.
std::string report_to_csv(const BoundReport& rep);
nlohmann::json report_to_json(const BoundReport& rep);

nlohmann::json pyramid_to_json(const CountPyramid& pyr);
CountPyramid pyramid_from_json(const nlohmann::json& j);

nlohmann::json stack_to_json(const CoefficientStack& st);
CoefficientStack stack_from_json(const nlohmann::json& j);

nlohmann::json path_to_json(const WhiteNoisePath& p);
WhiteNoisePath path_from_json(const nlohmann::json& j);

// {"family": ..., "params": {...}, "eps0": ...}
DensityModel density_from_json(const nlohmann::json& j);
nlohmann::json density_to_json(const DensityModel& f);

}  // namespace lecam
