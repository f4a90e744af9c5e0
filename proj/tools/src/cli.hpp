#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace odgi::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericError = 3, kIoError = 4 };

/// Bad flags or config files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing inputs or unwritable outputs.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs `odgi <args...>` (args exclude the program name). Reports go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace odgi::cli
