#include "oodil/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace oodil {

nlohmann::json tensors_to_json(const NamedTensors& named) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [name, tensor] : named) {
    tensor->check_finite(name);
    doc[name] = {{"shape", tensor->shape}, {"data", tensor->data}};
  }
  return doc;
}

void tensors_from_json(const nlohmann::json& doc, const NamedTensors& named) {
  for (const auto& [name, tensor] : named) {
    if (!doc.contains(name)) {
      throw std::runtime_error("checkpoint: missing parameter '" + name + "'");
    }
    const auto& entry = doc.at(name);
    auto shape = entry.at("shape").get<std::vector<size_t>>();
    auto data = entry.at("data").get<std::vector<double>>();
    if (shape != tensor->shape) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    if (data.size() != tensor->data.size()) {
      throw std::runtime_error("checkpoint: data length mismatch for '" + name + "'");
    }
    tensor->data = std::move(data);
  }
}

void save_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(1) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return nlohmann::json::parse(in);
}

}  // namespace oodil
