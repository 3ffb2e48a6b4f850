#pragma once

#include <filesystem>
#include <string>

#include "meanfield/model.hpp"

namespace meanfield {

/// Parses and fully validates a JSON config. Missing optional fields take
/// the documented defaults (dt = 1e-3, y0 = 0, replications = 10000, seed = 1).
SystemConfig parse_config(const std::string& json_text);

/// Reads `path` and calls parse_config. I/O errors are rethrown verbatim.
SystemConfig load_config(const std::filesystem::path& path);

/// Canonical JSON encoding accepted by parse_config.
std::string config_to_json(const SystemConfig& config);

}  // namespace meanfield
