#ifndef SSS_TOOLS_COMMANDS_HPP
#define SSS_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "sss/solver.hpp"

namespace sss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Values given on the command line; each one overrides the config document.
struct Overrides {
  std::optional<double> eta_start;
  std::optional<double> eta_end;
  std::optional<double> epsilon;
  std::optional<std::string> c_mode;
  std::optional<std::string> stop;
  std::optional<double> sigma2;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<int> jobs;
  std::optional<std::filesystem::path> out;
  bool traces = false;
};

int cmd_solve(const std::filesystem::path& matrix_file, const std::filesystem::path& vector_file,
              const nlohmann::json& config, const Overrides& flags, std::ostream& out,
              std::ostream& err);

int cmd_simulate(const nlohmann::json& config, const Overrides& flags, std::ostream& out,
                 std::ostream& err);

int cmd_compare_cosamp(const nlohmann::json& config, const Overrides& flags, std::ostream& out,
                       std::ostream& err);

/// Parses argv and dispatches to a subcommand; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sss::cli

#endif  // SSS_TOOLS_COMMANDS_HPP
