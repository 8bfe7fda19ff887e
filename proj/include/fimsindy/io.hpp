#pragma once

#include "fimsindy/regression.hpp"

#include <json.hpp>

namespace fimsindy {

/// {"terms": [...], "equations": [{"target": "x0", "coefficients": [...]}],
///  "threshold", "ridge_alpha", "iterations", "empty_warning"}
nlohmann::json model_to_json(const SparseModel& model);
SparseModel model_from_json(const nlohmann::json& j);

}  // namespace fimsindy
