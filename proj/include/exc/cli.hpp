#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace exc::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Config = std::map<std::string, std::string>;

// key = value lines; '#' starts a comment.  Repeated keys are an error.
Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnv = "EXC_THREADS";

// args[0] is the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace exc::cli
