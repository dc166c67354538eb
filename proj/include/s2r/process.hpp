#pragma once

// Child processes for the external tools the pipeline drives (muxer, browser).

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "s2r/error.hpp"

extern char** environ;

namespace s2r {

/// First executable named `name` on PATH (or `name` itself when it has a slash).
inline std::optional<std::filesystem::path> find_on_path(const std::string& name) {
    namespace fs = std::filesystem;
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0) return fs::path(name);
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    if (!path) return std::nullopt;
    std::string p(path);
    std::size_t start = 0;
    while (start <= p.size()) {
        std::size_t colon = p.find(':', start);
        if (colon == std::string::npos) colon = p.size();
        fs::path candidate = fs::path(p.substr(start, colon - start)) / name;
        if (!candidate.empty() && ::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate))
            return candidate;
        start = colon + 1;
    }
    return std::nullopt;
}

inline std::string join_command(const std::vector<std::string>& args) {
    std::string out;
    for (const auto& a : args) {
        if (!out.empty()) out += ' ';
        const bool plain = !a.empty() && a.find_first_of(" \t\n'\"\\$`*?[]{}()<>|&;#~") == std::string::npos;
        if (plain) {
            out += a;
        } else {
            out += '\'';
            for (char c : a) out += (c == '\'') ? std::string("'\\''") : std::string(1, c);
            out += '\'';
        }
    }
    return out;
}

namespace detail {

struct Pipe {
    int fd[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fd, O_CLOEXEC) != 0) throw Error(Stage::general, "pipe() failed");
    }
    ~Pipe() { close_all(); }
    void close_read() { if (fd[0] >= 0) { ::close(fd[0]); fd[0] = -1; } }
    void close_write() { if (fd[1] >= 0) { ::close(fd[1]); fd[1] = -1; } }
    void close_all() { close_read(); close_write(); }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
};

inline pid_t spawn(const std::vector<std::string>& args, const std::string& cwd, int out_fd, int err_fd) {
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, 0, "/dev/null", O_RDONLY, 0);
    if (out_fd >= 0) posix_spawn_file_actions_adddup2(&fa, out_fd, 1);
    if (err_fd >= 0) posix_spawn_file_actions_adddup2(&fa, err_fd, 2);
    if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&fa, cwd.c_str());
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, argv[0], &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (rc != 0) return -1;
    return pid;
}

}  // namespace detail

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs to completion, collecting stdout and stderr.
inline ProcessResult run_process(const std::vector<std::string>& args, const std::string& cwd = {}) {
    detail::Pipe out, err;
    const pid_t pid = detail::spawn(args, cwd, out.fd[1], err.fd[1]);
    out.close_write();
    err.close_write();
    if (pid < 0) throw Error(Stage::general, "cannot start: " + join_command(args));
    ProcessResult r;
    pollfd fds[2] = {{out.fd[0], POLLIN, 0}, {err.fd[0], POLLIN, 0}};
    std::string* sinks[2] = {&r.out, &r.err};
    int open = 2;
    char buf[4096];
    while (open > 0) {
        if (::poll(fds, 2, -1) < 0) break;
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP))) continue;
            const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                sinks[i]->append(buf, static_cast<std::size_t>(n));
            } else {
                fds[i].fd = -1;
                --open;
            }
        }
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return r;
}

/// A long-running child whose stderr is read line by line; killed on destruction.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& args) {
        detail::Pipe err;
        pid_ = detail::spawn(args, {}, -1, err.fd[1]);
        err.close_write();
        if (pid_ < 0) throw Error(Stage::browser, "cannot start: " + join_command(args));
        err_fd_ = err.fd[0];
        err.fd[0] = -1;
    }

    ~ChildProcess() {
        if (pid_ > 0) {
            ::kill(pid_, SIGTERM);
            int status = 0;
            for (int i = 0; i < 50 && ::waitpid(pid_, &status, WNOHANG) == 0; ++i) ::usleep(20000);
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
            }
        }
        if (err_fd_ >= 0) ::close(err_fd_);
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// Reads stderr until a line containing `marker` appears; returns that line.
    std::optional<std::string> wait_for_line(const std::string& marker, std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        char buf[1024];
        while (true) {
            std::size_t nl;
            while ((nl = pending_.find('\n')) != std::string::npos) {
                std::string line = pending_.substr(0, nl);
                pending_.erase(0, nl + 1);
                if (line.find(marker) != std::string::npos) return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return std::nullopt;
            pollfd p{err_fd_, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) continue;
            const ssize_t n = ::read(err_fd_, buf, sizeof buf);
            if (n <= 0) return std::nullopt;
            pending_.append(buf, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int err_fd_ = -1;
    std::string pending_;
};

}  // namespace s2r
