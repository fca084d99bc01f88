#include "fimcraft/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "fimcraft/util.hpp"

namespace fimcraft {

namespace {

constexpr std::size_t kOutputCap = 64 * 1024;

void ignore_sigpipe()
{
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

std::vector<char*> to_argv(const std::vector<std::string>& args)
{
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    return argv;
}

}  // namespace

CommandResult run_command(const std::string& command, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout)
{
    ignore_sigpipe();
    CommandResult result;
    int pipefd[2];
    if (pipe2(pipefd, O_CLOEXEC) != 0) {
        result.spawn_failed = true;
        result.output = std::strerror(errno);
        return result;
    }
    std::string cwd_str = cwd.string();
    std::vector<std::string> args{"/bin/sh", "-c", command};
    auto argv = to_argv(args);

    pid_t pid = fork();
    if (pid < 0) {
        close(pipefd[0]);
        close(pipefd[1]);
        result.spawn_failed = true;
        result.output = std::strerror(errno);
        return result;
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(pipefd[1], STDERR_FILENO);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        if (!cwd_str.empty() && chdir(cwd_str.c_str()) != 0) _exit(127);
        execv(argv[0], argv.data());
        _exit(127);
    }
    setpgid(pid, pid);
    close(pipefd[1]);

    auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    bool eof = false;
    while (!eof) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            result.timed_out = true;
            break;
        }
        pollfd pfd{pipefd[0], POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
        if (rc < 0 && errno != EINTR) break;
        if (rc <= 0) continue;
        ssize_t n = read(pipefd[0], buf, sizeof buf);
        if (n <= 0) {
            eof = true;
        } else if (result.output.size() < kOutputCap) {
            result.output.append(buf, static_cast<std::size_t>(n));
        }
    }
    close(pipefd[0]);

    int status = 0;
    if (result.timed_out) {
        kill(-pid, SIGKILL);
        waitpid(pid, &status, 0);
        return result;
    }
    // The pipe may close before the shell exits; wait out the remainder.
    for (;;) {
        pid_t w = waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            return result;
        }
        usleep(1000);
    }
    // Reap anything the shell left behind in its group.
    kill(-pid, SIGKILL);
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv_in)
{
    ignore_sigpipe();
    if (argv_in.empty()) {
        throw Error(ErrorCode::invalid_config, "empty command line");
    }
    int to_child[2];
    int from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0) {
        throw Error(ErrorCode::io, std::string("pipe: ") + std::strerror(errno));
    }
    if (pipe2(from_child, O_CLOEXEC) != 0) {
        close(to_child[0]);
        close(to_child[1]);
        throw Error(ErrorCode::io, std::string("pipe: ") + std::strerror(errno));
    }
    auto argv = to_argv(argv_in);
    pid_ = fork();
    if (pid_ < 0) {
        for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
        throw Error(ErrorCode::io, std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        execvp(argv[0], argv.data());
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
}

ChildProcess::~ChildProcess()
{
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 200; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) return;
            usleep(5000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
    }
}

bool ChildProcess::write_line(std::string_view line)
{
    std::string data(line);
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = write(in_fd_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

std::optional<std::string> ChildProcess::read_line(std::chrono::milliseconds timeout)
{
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) return std::nullopt;
        pollfd pfd{out_fd_, POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) return std::nullopt;
        char buf[4096];
        ssize_t n = read(out_fd_, buf, sizeof buf);
        if (n <= 0) return std::nullopt;
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

}  // namespace fimcraft
