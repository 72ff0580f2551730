#pragma once

#include "nxai/explainers.hpp"
#include "nxai/model.hpp"

#include <filesystem>
#include <string>

namespace nxai {

/// JSON container: format version, config, input/output widths, parameter
/// tensors (row-major with declared shapes) and the training log.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
/// Throws ConfigError for unreadable or malformed files and ShapeError when
/// tensors do not match the declared configuration.
TrainedModel load_model(const std::filesystem::path& path);

std::string pgexplainer_to_json(const PGExplainerModel& pgm);
PGExplainerModel pgexplainer_from_json(const std::string& text);

void save_pgexplainer(const PGExplainerModel& pgm, const std::filesystem::path& path);
PGExplainerModel load_pgexplainer(const std::filesystem::path& path);

} // namespace nxai
