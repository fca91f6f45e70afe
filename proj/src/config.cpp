#include "wes/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "wes/error.hpp"

namespace wes {

namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int64_t parse_int(const std::string& key, const std::string& value, int64_t min_value,
                  int64_t max_value) {
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || errno != 0 || v < min_value || v > max_value) {
    throw Error(ErrorCode::BadFlag, "config key '" + key + "': bad value '" + value + "'");
  }
  return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || errno != 0) {
    throw Error(ErrorCode::BadFlag, "config key '" + key + "': bad value '" + value + "'");
  }
  return v;
}

}  // namespace

const std::map<std::string, std::string>& config_key_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"port", "8383"},
      {"max_patches_per_request", "5000"},
      {"workers", "0"},
      {"encoder.name", "reference-v1"},
      {"encoder.dim", "384"},
      {"encoder.seed", "11400714819323198485"},  // 0x9e3779b97f4a7c15
      {"fetch.timeout_ms", "30000"},
      {"fetch.bearer_token", ""},
      {"cache.frames", "64"},
  };
  return defaults;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::BadFlag, "cannot open config file " + path);
  }
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadFlag,
                  path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (config_key_defaults().find(key) == config_key_defaults().end()) {
      throw Error(ErrorCode::BadFlag,
                  path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

std::string env_var_for_key(const std::string& key) {
  std::string name = "WES_";
  for (char c : key) {
    name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

ServiceConfig resolve_service_config(const std::optional<std::string>& config_path,
                                     const std::map<std::string, std::string>& flag_overrides) {
  std::map<std::string, std::string> merged = config_key_defaults();
  if (config_path.has_value()) {
    for (auto& [key, value] : load_config_file(*config_path)) merged[key] = value;
  }
  for (auto& [key, value] : merged) {
    if (const char* env = std::getenv(env_var_for_key(key).c_str())) {
      value = env;
    }
  }
  for (const auto& [key, value] : flag_overrides) {
    if (config_key_defaults().find(key) == config_key_defaults().end()) {
      throw Error(ErrorCode::BadFlag, "unknown config key '" + key + "'");
    }
    merged[key] = value;
  }

  ServiceConfig config;
  config.port = static_cast<int>(parse_int("port", merged["port"], 1, 65535));
  config.max_patches_per_request = static_cast<uint32_t>(
      parse_int("max_patches_per_request", merged["max_patches_per_request"], 1, 1000000));
  config.workers =
      static_cast<unsigned>(parse_int("workers", merged["workers"], 0, 4096));
  config.encoder.name = merged["encoder.name"];
  config.encoder.dim =
      static_cast<uint32_t>(parse_int("encoder.dim", merged["encoder.dim"], 1, 65536));
  config.encoder.seed = parse_u64("encoder.seed", merged["encoder.seed"]);
  config.fetch.timeout_ms = static_cast<int>(
      parse_int("fetch.timeout_ms", merged["fetch.timeout_ms"], 1, 3600000));
  config.fetch.bearer_token = merged["fetch.bearer_token"];
  config.cache_frames =
      static_cast<uint32_t>(parse_int("cache.frames", merged["cache.frames"], 1, 1 << 20));
  return config;
}

}  // namespace wes
