#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include "comono/errors.hpp"

namespace comono::cli {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string digest_file(const std::string& path) {
  std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(errc::io_error, "write failed for '" + path + "'");
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    const nlohmann::json& config, const nlohmann::json& inputs,
                    const nlohmann::json& outputs, const nlohmann::json& counts) {
  nlohmann::json m = {
      {"config", config},
      {"counts", counts},
      {"inputs", inputs},
      {"outputs", outputs},
      {"subcommand", subcommand},
      {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
  };
  write_text_file(path, m.dump(2) + "\n");
}

}  // namespace comono::cli
