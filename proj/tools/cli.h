#ifndef PLANK_CLI_H
#define PLANK_CLI_H

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "plank/engine.h"

namespace plank::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckError = 1,
  kInputError = 2,  // unreadable file or syntax error
  kFuelExhausted = 3,
};

struct CliConfig {
  enum class Command { Check, Normalize };

  Command command = Command::Check;
  std::string script_path;
  std::optional<std::string> term_text;
  size_t max_steps = kDefaultFuel;
  bool trace = false;
  bool ascii_output = true;
};

int run_check(const CliConfig& cfg, std::ostream& out, std::ostream& err);
int run_normalize(const CliConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv and dispatches. Usage errors exit with kInputError.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plank::cli

#endif  // PLANK_CLI_H
