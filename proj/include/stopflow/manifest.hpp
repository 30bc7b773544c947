#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stopflow/core_model.hpp"

namespace stopflow {

/**
 * Record of one command invocation. `options` holds every resolved
 * command option as the text that reproduces it on the command line, so a
 * replay re-issues exactly the same run.
 */
struct RunManifest {
    std::string command;
    std::string version;
    ModelParams params;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::map<std::string, std::string> options;
    std::vector<std::string> artifacts;  ///< paths relative to the output directory
    double duration_s = 0.0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
/// Throws IoError on unreadable or malformed files.
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace stopflow
