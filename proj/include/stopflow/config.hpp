#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "stopflow/core_model.hpp"

namespace stopflow {

/// Model keys accepted in a config file, in canonical order.
inline constexpr const char* kModelKeys[] = {"mu", "sigma", "rho", "kappa", "lambda", "theta"};

/// Parses `key = value` lines ('#' starts a comment). Throws ValidationError
/// for unknown or repeated keys and malformed numbers, IoError when the file
/// cannot be read.
std::map<std::string, double> parse_config_text(const std::string& text,
                                                const std::string& origin = "config");
std::map<std::string, double> read_config_file(const std::filesystem::path& path);

/// Resolves model parameters: flag values override the file. With a file,
/// every key must come from the file or a flag; without one, unspecified
/// keys keep their defaults. The result is validated.
ModelParams resolve_params(const std::optional<std::filesystem::path>& config_file,
                           const std::map<std::string, double>& flag_values);

}  // namespace stopflow
