#pragma once

#include "lgpr/kernels.hpp"

#include <json.hpp>

namespace lgpr::detail {

nlohmann::json kernel_to_value(const KernelSpec& spec);
KernelSpec kernel_from_value(const nlohmann::json& value);

nlohmann::json matrix_to_value(const Matrix& m);
Matrix matrix_from_value(const nlohmann::json& value);

}  // namespace lgpr::detail
