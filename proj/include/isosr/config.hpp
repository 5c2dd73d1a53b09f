#pragma once

// INI-style run configuration. Top-level keys: engine, seed, runs, out,
// deterministic. Sections: [dataset], [ga], [bsr], [checker]. Lists are
// comma separated. format_config() writes every key, so its output read back
// through parse_config() reproduces the same RunConfig.

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "isosr/runner.hpp"

namespace isosr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Starts from the defaults and applies the keys present. Unknown keys and
/// malformed values throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::filesystem::path& path);
std::string format_config(const RunConfig& cfg);

}  // namespace isosr
