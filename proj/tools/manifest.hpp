#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace comono::cli {

inline constexpr const char* kToolName = "comono-rdd";
inline constexpr const char* kToolVersion = "0.1.0";

std::string read_file(const std::string& path);

/// Content digest recorded in run manifests to guard against silent input
/// swaps on replay.
std::string digest_file(const std::string& path);

/// Assembles and writes the run manifest. Keys are sorted by nlohmann::json,
/// doubles render shortest-exact, so manifests are byte-deterministic.
void write_manifest(const std::string& path, const std::string& subcommand,
                    const nlohmann::json& config, const nlohmann::json& inputs,
                    const nlohmann::json& outputs, const nlohmann::json& counts);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace comono::cli
