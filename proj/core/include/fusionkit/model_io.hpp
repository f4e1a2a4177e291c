#pragma once

#include <string>

#include "fusionkit/em_config.hpp"
#include "fusionkit/imputation.hpp"
#include "fusionkit/mixtures.hpp"

namespace fusionkit {

/// Fitted parameters as a JSON document with named blocks (mu_X, Sigma_XX, ...)
/// at full double precision; mixtures carry g, pi and a components array.
std::string model_to_json_string(const ModelParams& params, int indent = 2);
ModelParams model_from_json_string(const std::string& text);

void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

std::string report_to_json_string(const FitReport& report, int indent = 2);
void save_report(const std::string& path, const FitReport& report);

std::string summary_to_json_string(const SummaryTable& table, int indent = 2);
void save_summary_json(const std::string& path, const SummaryTable& table);

}  // namespace fusionkit
