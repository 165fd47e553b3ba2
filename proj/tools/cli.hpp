#pragma once

#include "zacgm/problem.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zac::cli {

enum class Verb { match, dgm, bench, verify };

/// Bad command line; maps to exit status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Command {
  Verb verb = Verb::match;
  std::string a, b, gt;  // input paths
  std::string out;       // empty: stdout
  std::optional<long> k;
  std::optional<double> ratio;
  std::optional<double> lambda0, lambda1, lambda2;
  std::optional<double> beta, lambdaR;
  std::string method = "zac";     // zac | zacr
  bool removal = true;
  std::string mode = "rigid";     // dgm: rigid | nonrigid
  std::string suite;              // bench
  std::uint64_t seed = 42;
  std::optional<int> trials;
  long maxDisturb = 5;            // verify
  bool timing = false;

  /// Canonical argument list; parse_args(canonical()) yields an equal command.
  std::vector<std::string> canonical() const;
  bool operator==(const Command&) const = default;
};

/// Default master seed: $ZAC_SEED when set and numeric, else 42.
std::uint64_t default_seed();

/// argv without the program name. Throws UsageError naming the offending token.
Command parse_args(const std::vector<std::string>& args);

/// Problem settings for match / verify: library defaults plus the
/// command's lambda overrides.
ProblemConfig problem_config(const Command& cmd);

/// Runs a validated command. Returns 0 on success, 2 on runtime failure
/// (unreadable or malformed inputs, solver errors); messages go to `err`.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args + execute with the 0/1/2 exit contract.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zac::cli
