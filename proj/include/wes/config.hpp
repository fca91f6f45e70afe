#pragma once

#include <map>
#include <optional>
#include <string>

#include "wes/service.hpp"

namespace wes {

// key=value pairs; '#' starts a comment. Unknown keys are rejected so typos
// fail before a server starts.
std::map<std::string, std::string> load_config_file(const std::string& path);

// Environment overrides: key "encoder.dim" maps to WES_ENCODER_DIM.
std::string env_var_for_key(const std::string& key);

// Precedence: flags > environment > file > defaults. Flag values are passed
// as an override map assembled by the CLI.
ServiceConfig resolve_service_config(const std::optional<std::string>& config_path,
                                     const std::map<std::string, std::string>& flag_overrides);

// The full key set consumed during resolution.
const std::map<std::string, std::string>& config_key_defaults();

}  // namespace wes
