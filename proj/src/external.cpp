#include "ibd/models/external.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace ibd {

namespace {

using Clock = std::chrono::steady_clock;

struct Pipe {
    int read_fd = -1;
    int write_fd = -1;

    void open() {
        int fds[2];
        if (::pipe(fds) != 0) {
            throw ExternalModelError(ExternalModelError::Kind::ProcessFailure,
                                     "process failure: pipe: " + std::string(std::strerror(errno)));
        }
        read_fd = fds[0];
        write_fd = fds[1];
    }
    void close_read() {
        if (read_fd >= 0) ::close(read_fd);
        read_fd = -1;
    }
    void close_write() {
        if (write_fd >= 0) ::close(write_fd);
        write_fd = -1;
    }
    ~Pipe() {
        close_read();
        close_write();
    }
};

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return static_cast<int>(std::max<long long>(0, left.count()));
}

std::string trim_for_message(const std::string& text, std::size_t limit = 400) {
    std::string out = text.substr(0, limit);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

// One request-response exchange: feed `input` to the child, collect stdout
// and stderr until EOF or deadline. The pump keeps reading while writing so
// a child that streams its answer early cannot deadlock on full pipes.
struct ExchangeResult {
    std::string out;
    std::string err;
    int exit_status = 0;
    bool timed_out = false;
};

ExchangeResult run_exchange(const std::string& command, const std::string& input,
                            std::chrono::milliseconds startup_timeout,
                            std::chrono::milliseconds response_timeout) {
    Pipe in_pipe;
    Pipe out_pipe;
    Pipe err_pipe;
    in_pipe.open();
    out_pipe.open();
    err_pipe.open();

    const pid_t pid = ::fork();
    if (pid < 0) {
        throw ExternalModelError(ExternalModelError::Kind::ProcessFailure,
                                 "process failure: fork: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        ::dup2(in_pipe.read_fd, STDIN_FILENO);
        ::dup2(out_pipe.write_fd, STDOUT_FILENO);
        ::dup2(err_pipe.write_fd, STDERR_FILENO);
        in_pipe.close_write();
        out_pipe.close_read();
        err_pipe.close_read();
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        std::perror("exec");
        ::_exit(127);
    }

    in_pipe.close_read();
    out_pipe.close_write();
    err_pipe.close_write();
    set_nonblocking(in_pipe.write_fd);
    set_nonblocking(out_pipe.read_fd);
    set_nonblocking(err_pipe.read_fd);
    ::signal(SIGPIPE, SIG_IGN);

    ExchangeResult result;
    std::size_t written = 0;
    auto deadline = Clock::now() + startup_timeout;
    bool response_clock_started = false;
    char buffer[65536];

    while (out_pipe.read_fd >= 0 || err_pipe.read_fd >= 0) {
        if (written == input.size() && in_pipe.write_fd >= 0) {
            in_pipe.close_write();
            deadline = Clock::now() + response_timeout;
            response_clock_started = true;
        }

        std::vector<pollfd> fds;
        if (in_pipe.write_fd >= 0) fds.push_back({in_pipe.write_fd, POLLOUT, 0});
        if (out_pipe.read_fd >= 0) fds.push_back({out_pipe.read_fd, POLLIN, 0});
        if (err_pipe.read_fd >= 0) fds.push_back({err_pipe.read_fd, POLLIN, 0});

        const int rc = ::poll(fds.data(), fds.size(), std::min(remaining_ms(deadline), 200));
        if (Clock::now() >= deadline) {
            result.timed_out = true;
            break;
        }
        if (rc <= 0) continue;

        for (const pollfd& pfd : fds) {
            if (pfd.fd == in_pipe.write_fd && (pfd.revents & (POLLOUT | POLLERR))) {
                const ssize_t n = ::write(in_pipe.write_fd, input.data() + written,
                                          std::min<std::size_t>(input.size() - written, 65536));
                if (n > 0) {
                    written += static_cast<std::size_t>(n);
                } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    // Child closed its stdin early; stop feeding, keep reading.
                    in_pipe.close_write();
                    if (!response_clock_started) {
                        deadline = Clock::now() + response_timeout;
                        response_clock_started = true;
                    }
                }
            } else if (pfd.fd == out_pipe.read_fd && (pfd.revents & (POLLIN | POLLHUP))) {
                const ssize_t n = ::read(out_pipe.read_fd, buffer, sizeof(buffer));
                if (n > 0) {
                    result.out.append(buffer, static_cast<std::size_t>(n));
                } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                    out_pipe.close_read();
                }
            } else if (pfd.fd == err_pipe.read_fd && (pfd.revents & (POLLIN | POLLHUP))) {
                const ssize_t n = ::read(err_pipe.read_fd, buffer, sizeof(buffer));
                if (n > 0) {
                    result.err.append(buffer, static_cast<std::size_t>(n));
                } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                    err_pipe.close_read();
                }
            }
        }
    }

    if (result.timed_out) {
        ::kill(pid, SIGKILL);
        int status = 0;
        ::waitpid(pid, &status, 0);
        return result;
    }

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (WIFEXITED(status)) {
        result.exit_status = WEXITSTATUS(status);
    } else {
        result.exit_status = -1;
    }
    return result;
}

} // namespace

ExternalModel::ExternalModel(ExternalModelConfig config, Schema schema)
    : config_(std::move(config)), schema_(std::move(schema)) {
    if (config_.command.empty()) throw ValidationError("external model requires a command");
    if (config_.batch_size == 0) throw ValidationError("external model batch size must be >= 1");
}

void ExternalModel::score(const Table& rows, std::span<double> out) const {
    for (std::size_t begin = 0; begin < rows.n_rows; begin += config_.batch_size) {
        const std::size_t end = std::min(rows.n_rows, begin + config_.batch_size);
        score_chunk(rows, begin, end, out);
    }
}

void ExternalModel::score_chunk(const Table& rows, std::size_t begin, std::size_t end,
                                std::span<double> out) const {
    std::ostringstream request;
    for (std::size_t f = 0; f < schema_.n_features(); ++f) {
        if (f > 0) request << ',';
        request << schema_.names[f];
    }
    request << '\n';
    char cell[64];
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t f = 0; f < schema_.n_features(); ++f) {
            if (f > 0) request << ',';
            const double v = rows.columns[f][r];
            if (schema_.kinds[f] == FeatureKind::Categorical) {
                request << schema_.levels[f][static_cast<std::size_t>(v)];
            } else {
                std::snprintf(cell, sizeof(cell), "%.17g", v);
                request << cell;
            }
        }
        request << '\n';
    }

    const ExchangeResult result = run_exchange(config_.command, request.str(),
                                               config_.startup_timeout, config_.response_timeout);
    if (result.timed_out) {
        throw ExternalModelError(ExternalModelError::Kind::Timeout,
                                 "timeout waiting for external model '" + config_.command + "'");
    }
    if (result.exit_status != 0) {
        throw ExternalModelError(ExternalModelError::Kind::ProcessFailure,
                                 "process failure: external model exited with status " +
                                     std::to_string(result.exit_status) + ": " +
                                     trim_for_message(result.err));
    }

    const std::size_t expected = end - begin;
    std::size_t count = 0;
    std::istringstream response(result.out);
    std::string line;
    while (std::getline(response, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (count >= expected) {
            throw ExternalModelError(ExternalModelError::Kind::MalformedResponse,
                                     "malformed response: more lines than rows from '" +
                                         config_.command + "'");
        }
        const auto value = parse_decimal(line);
        if (!value) {
            throw ExternalModelError(ExternalModelError::Kind::MalformedResponse,
                                     "malformed response: line " + std::to_string(count + 1) +
                                         " is not a decimal: '" + trim_for_message(line) + "'");
        }
        out[begin + count] = *value;
        ++count;
    }
    if (count < expected) {
        throw ExternalModelError(ExternalModelError::Kind::ShortResponse,
                                 "short response: got " + std::to_string(count) + " scores for " +
                                     std::to_string(expected) + " rows from '" + config_.command +
                                     "'");
    }
}

ModelPtr external_model(ExternalModelConfig config, Schema schema) {
    return std::make_shared<ExternalModel>(std::move(config), std::move(schema));
}

} // namespace ibd
