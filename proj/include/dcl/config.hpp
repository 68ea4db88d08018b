#ifndef DCL_CONFIG_HPP
#define DCL_CONFIG_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcl/rehearsal.hpp"

namespace dcl::config {

inline constexpr int kSchemaVersion = 1;

/// Schema violation; `path` is the dotted field path ("training.lr").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Full config document, including the informational paper_defaults block
/// (published reference hyperparameters).
nlohmann::json to_json(const cl::RunConfig& cfg);
/// Strict parse: unknown keys and wrong types raise ConfigError. Missing keys
/// keep their defaults; training.epochs defaults by task kind.
cl::RunConfig from_json(const nlohmann::json& j);

/// Published reference hyperparameters, keyed by config path.
nlohmann::json paper_defaults();

/// Applies "a.b.c=value" to a config document. The value is read as JSON when
/// it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads `path` (or starts from defaults when empty), applies overrides, parses.
cl::RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides);

}  // namespace dcl::config

#endif  // DCL_CONFIG_HPP
