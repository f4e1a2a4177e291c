#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace fusionkit {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ModelFamily { gaussian, skew_normal, gmm, snmix };

const char* family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

}  // namespace fusionkit
