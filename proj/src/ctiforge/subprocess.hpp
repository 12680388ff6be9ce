#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ctiforge {

struct ProcessResult {
  int status = -1;  // exit status, or 128 + signal
  std::string out;
  std::string err;
};

// Runs argv[0] (PATH lookup) with `input` on stdin and collects stdout and
// stderr. `env` entries are added to (or replace) the inherited environment.
// Throws StoreUnavailable when the program cannot be started.
ProcessResult run_process(const std::vector<std::string> &argv, const std::filesystem::path &cwd,
                          const std::map<std::string, std::string> &env = {}, const std::string &input = {});

}  // namespace ctiforge
