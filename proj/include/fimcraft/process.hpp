#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

namespace fimcraft {

struct CommandResult {
    int exit_code = -1;
    bool timed_out = false;
    bool spawn_failed = false;
    std::string output;  // combined stdout/stderr, capped
};

/// Runs `command` through /bin/sh in `cwd`. On timeout the whole process
/// group is killed.
CommandResult run_command(const std::string& command, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout);

/// Long-lived child speaking a line protocol over stdin/stdout. stderr is
/// inherited.
class ChildProcess {
  public:
    explicit ChildProcess(const std::vector<std::string>& argv);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// False if the child has gone away.
    bool write_line(std::string_view line);
    /// nullopt on EOF or timeout.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  private:
    pid_t pid_ = -1;
    int in_fd_ = -1;   // child's stdin
    int out_fd_ = -1;  // child's stdout
    std::string buffer_;
};

}  // namespace fimcraft
