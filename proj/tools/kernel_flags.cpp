#include "kernel_flags.hpp"

#include <sstream>

namespace lgpr::tool {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(part);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

KernelSpec atom(const std::string& name, std::size_t observed) {
  if (name == "se") return KernelSpec::squared_exponential(1.0, std::vector<double>(observed, 1.0));
  if (name == "linear") return KernelSpec::linear(1.0);
  if (name == "white") return KernelSpec::white_noise(0.1);
  throw Error("unknown kernel '" + name + "' (expected se, linear or white)");
}

}  // namespace

KernelSpec parse_component_kernel(const std::string& expr, std::size_t observed) {
  std::vector<KernelSpec> terms;
  for (const auto& term : split(expr, '+')) {
    std::vector<KernelSpec> factors;
    for (const auto& f : split(term, '*')) {
      const std::string name = strip(f);
      if (name.empty()) throw Error("empty kernel term in '" + expr + "'");
      factors.push_back(atom(name, observed));
    }
    terms.push_back(factors.size() == 1 ? factors.front() : KernelSpec::product(std::move(factors)));
  }
  if (terms.empty()) throw Error("empty kernel expression");
  return terms.size() == 1 ? terms.front() : KernelSpec::sum(std::move(terms));
}

std::vector<KernelSpec> parse_component_kernels(const std::string& list, std::size_t observed) {
  std::vector<KernelSpec> out;
  for (const auto& expr : split(list, ',')) out.push_back(parse_component_kernel(expr, observed));
  return out;
}

}  // namespace lgpr::tool
