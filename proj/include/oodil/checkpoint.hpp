#ifndef OODIL_CHECKPOINT_HPP_
#define OODIL_CHECKPOINT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oodil/tensor.hpp"

namespace oodil {

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;

// Checkpoint document: a JSON object mapping parameter names to
// {"shape": [...], "data": [...]}. Doubles survive the round trip
// value-exactly (shortest round-trip serialization).
nlohmann::json tensors_to_json(const NamedTensors& named);
void tensors_from_json(const nlohmann::json& doc, const NamedTensors& named);

void save_json(const std::string& path, const nlohmann::json& doc);
nlohmann::json load_json(const std::string& path);

}  // namespace oodil

#endif  // OODIL_CHECKPOINT_HPP_
