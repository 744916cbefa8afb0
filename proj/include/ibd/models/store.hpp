#pragma once

#include "ibd/model.hpp"

#include <string>

namespace ibd {

// Versioned JSON model files ("ibd-model/1"). Round-trips preserve
// predictions bitwise. Only trained families serialize; external and
// function models are rejected.
void save_model(const ModelPtr& model, const std::string& path);
ModelPtr load_model(const std::string& path);

std::string model_to_json(const ModelPtr& model);
ModelPtr model_from_json(const std::string& text);

} // namespace ibd
