#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wevbg/eigenmodel.hpp"

namespace wevbg {

/// Settings shared by the frame-based subcommands. Everything is parsed and
/// checked by validate() before any input is read or output written.
struct RunConfig {
  std::filesystem::path input;
  std::string pattern = "*";
  std::optional<std::filesystem::path> labels;
  std::string block = "40";  // "N" or "HxW"
  std::string selection = "weakest:10";
  double tau = 0.1;
  std::filesystem::path output;
  std::uint64_t seed = 7;

  /// Throws ConfigError / SelectionError on malformed values.
  void validate() const;
  BlockShape block_shape() const;
};

/// "N" -> N x N, "HxW" -> H x W; throws ConfigError.
BlockShape parse_block_shape(const std::string& text);

/// Runs one subcommand. `args[0]` is the program name. Returns 0 on success,
/// 1 on a usage or validation error, 2 when computation fails.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wevbg
