// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cfmimo/harness.hpp"

namespace cfmimo {

/// Invalid configuration; `field` is the dotted path of the offending key when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Profile { Paper, Desk };

Profile profile_from_string(const std::string& name);
std::string to_string(Profile profile);

/// Everything a run needs: scenario, channel, radio constants, TPC options and campaign knobs.
struct CliConfig {
  CampaignSpec campaign;
  /// Name of the path-loss preset the model started from.
  std::string path_loss_preset = "adjusted";
};

/// Built-in defaults. `paper`: 512 single-antenna APs, 8 UEs, MMSE, three algorithms.
/// `desk`: same with 64 APs.
CliConfig default_config(Profile profile);

/// Applies a JSON document on top of `base`. Unknown keys are rejected.
CliConfig parse_config(const nlohmann::json& doc, CliConfig base);
/// Reads a JSON file (comments allowed) on top of the profile defaults.
CliConfig load_config(const std::filesystem::path& path, Profile profile = Profile::Desk);
CliConfig parse_config_text(const std::string& text, Profile profile = Profile::Desk);

/// Canonical, fully explicit JSON form of a configuration.
nlohmann::ordered_json config_to_json(const CliConfig& config);

}  // namespace cfmimo
