#include "json_convert.hpp"

namespace lgpr {
namespace detail {
namespace {

KernelKind parse_kind(const std::string& s) {
  for (auto kind : {KernelKind::SquaredExponential, KernelKind::Linear, KernelKind::WhiteNoise,
                    KernelKind::Sum, KernelKind::Product, KernelKind::Juxtaposition,
                    KernelKind::Factorizing}) {
    if (to_string(kind) == s) return kind;
  }
  throw Error("unsupported kernel kind '" + s + "'");
}

InputScope parse_scope(const std::string& s) {
  for (auto scope : {InputScope::Observed, InputScope::Latent, InputScope::Extended}) {
    if (to_string(scope) == s) return scope;
  }
  throw Error("unknown kernel input scope '" + s + "'");
}

bool is_base(KernelKind kind) {
  return kind == KernelKind::SquaredExponential || kind == KernelKind::Linear;
}

}  // namespace

nlohmann::json kernel_to_value(const KernelSpec& spec) {
  nlohmann::json out;
  out["kind"] = to_string(spec.kind);
  out["children"] = nlohmann::json::array();
  for (const auto& c : spec.children) out["children"].push_back(kernel_to_value(c));
  out["hyperparams"] = nlohmann::json::object();
  for (const auto& [name, values] : spec.hyperparams) {
    if (name == "lengthscale" || values.size() != 1) {
      out["hyperparams"][name] = values;
    } else {
      out["hyperparams"][name] = values.front();
    }
  }
  if (is_base(spec.kind)) out["inputs"] = to_string(spec.scope);
  if (spec.kind == KernelKind::Juxtaposition) out["latent_transform"] = to_string(spec.transform);
  return out;
}

KernelSpec kernel_from_value(const nlohmann::json& value) {
  if (!value.is_object() || !value.contains("kind")) throw Error("kernel JSON needs a 'kind' field");
  KernelSpec spec;
  spec.kind = parse_kind(value.at("kind").get<std::string>());
  if (value.contains("children")) {
    for (const auto& c : value.at("children")) spec.children.push_back(kernel_from_value(c));
  }
  if (value.contains("hyperparams")) {
    for (const auto& [name, v] : value.at("hyperparams").items()) {
      if (v.is_array()) {
        spec.hyperparams[name] = v.get<std::vector<double>>();
      } else {
        spec.hyperparams[name] = {v.get<double>()};
      }
    }
  }
  if (value.contains("inputs")) spec.scope = parse_scope(value.at("inputs").get<std::string>());
  if (spec.kind == KernelKind::Factorizing) spec.transform = LatentTransform::Simplex;
  if (value.contains("latent_transform")) {
    const auto t = value.at("latent_transform").get<std::string>();
    if (t == "simplex") {
      spec.transform = LatentTransform::Simplex;
    } else if (t == "identity") {
      spec.transform = LatentTransform::Identity;
    } else {
      throw Error("unknown latent transform '" + t + "'");
    }
  }
  return spec;
}

nlohmann::json matrix_to_value(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_value(const nlohmann::json& value) {
  const auto rows = value.at("rows").get<Eigen::Index>();
  const auto cols = value.at("cols").get<Eigen::Index>();
  Matrix m(rows, cols);
  const auto& data = value.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) {
    throw DimensionError("matrix rows", static_cast<std::size_t>(rows), data.size());
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = data[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError("matrix columns", static_cast<std::size_t>(cols), row.size());
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace detail

std::string kernel_to_json(const KernelSpec& spec, int indent) {
  return detail::kernel_to_value(spec).dump(indent);
}

KernelSpec kernel_from_json(const std::string& text) {
  try {
    return detail::kernel_from_value(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed kernel JSON: ") + e.what());
  }
}

}  // namespace lgpr
