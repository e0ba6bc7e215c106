#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "fmpols/experiment.hpp"

namespace fmpols {

// JSON mirror of ExperimentConfig. Every field is written; reading rejects
// unknown keys with ConfigError. `system` is either a built-in name or an
// inline object {name, A, C, jordan_r, kappa_A, spectrum}.
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies dotted `key=value` assignments ("noise.uniform_w=0.2",
/// "variants.1.lambda=0.1"). The value is parsed as JSON when it can be,
/// otherwise taken as a string. Unknown paths are ConfigError.
ExperimentConfig apply_overrides(const ExperimentConfig& config, std::span<const std::string> overrides);

}  // namespace fmpols
