#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sslaw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitFailure = 3;

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err` as a single "error[CODE]: message" line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace sslaw::cli
