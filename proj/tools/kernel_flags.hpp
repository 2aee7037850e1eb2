#pragma once

#include <lgpr/kernels.hpp>

#include <string>
#include <vector>

namespace lgpr::tool {

// One component template from a short expression over observed inputs: terms
// joined by '+', factors by '*', atoms se | linear | white. Example: "se+white".
// Hyperparameters are placeholders; training replaces them.
KernelSpec parse_component_kernel(const std::string& expr, std::size_t observed);

// Comma-separated list of templates, e.g. "se,se+white".
std::vector<KernelSpec> parse_component_kernels(const std::string& list, std::size_t observed);

}  // namespace lgpr::tool
