#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "test_util.hpp"

#ifndef FRAMELOSS_CLI
#error "FRAMELOSS_CLI must name the frameloss executable"
#endif

namespace testutil {

struct CliResult
{
  int status = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI with `args` (already shell-quoted where needed).
inline CliResult
run_cli(const std::string& args, const std::filesystem::path& scratch)
{
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string command =
    std::string("'") + FRAMELOSS_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int raw = std::system(command.c_str());
  CliResult result;
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = read_bytes(out);
  result.err = read_bytes(err);
  return result;
}

inline std::string
q(const std::filesystem::path& p)
{
  return "'" + p.string() + "'";
}

} // namespace testutil
