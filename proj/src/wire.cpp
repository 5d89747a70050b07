#include "tacsearch/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "json.hpp"
#include "tacsearch/errors.hpp"

namespace tacsearch {

namespace {
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_left(Clock::time_point deadline) {
    std::chrono::duration<double> left = deadline - Clock::now();
    return left.count();
}

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& other) noexcept : fd_(other.release()) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = other.release();
        }
        return *this;
    }
    ~Fd() { reset(); }
    int get() const { return fd_; }
    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

void wait_readable(int fd, Clock::time_point deadline) {
    double left = seconds_left(deadline);
    if (left <= 0.0) throw PolicyTimeoutError("policy call timed out");
    struct pollfd pfd {
        fd, POLLIN, 0
    };
    int rc = ::poll(&pfd, 1, static_cast<int>(left * 1000.0) + 1);
    if (rc == 0) throw PolicyTimeoutError("policy call timed out");
    if (rc < 0) throw PolicyConnectError(std::string("poll failed: ") + std::strerror(errno));
}

void write_all(int fd, const std::string& data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw PolicyConnectError(std::string("write failed: ") + std::strerror(errno));
        }
        off += static_cast<size_t>(n);
    }
}

std::string read_line(int fd, Clock::time_point deadline) {
    std::string line;
    char c;
    while (true) {
        wait_readable(fd, deadline);
        ssize_t n = ::read(fd, &c, 1);
        if (n == 0) throw PolicyConnectError("connection closed before response line");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw PolicyConnectError(std::string("read failed: ") + std::strerror(errno));
        }
        if (c == '\n') return line;
        line += c;
        if (line.size() > (1u << 22))
            throw PolicyProtocolError("response line exceeds 4 MiB");
    }
}

Fd connect_tcp(const std::string& host, const std::string& port,
               Clock::time_point deadline) {
    struct addrinfo hints {};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* info = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &info) != 0 || !info)
        throw PolicyConnectError("cannot resolve " + host + ":" + port);

    Fd fd(::socket(info->ai_family, SOCK_STREAM, 0));
    if (fd.get() < 0) {
        ::freeaddrinfo(info);
        throw PolicyConnectError("cannot create socket");
    }
    int flags = ::fcntl(fd.get(), F_GETFL, 0);
    ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd.get(), info->ai_addr, info->ai_addrlen);
    ::freeaddrinfo(info);
    if (rc < 0 && errno != EINPROGRESS)
        throw PolicyConnectError(std::string("connect failed: ") + std::strerror(errno));
    if (rc < 0) {
        double left = seconds_left(deadline);
        if (left <= 0.0) throw PolicyTimeoutError("connect timed out");
        struct pollfd pfd {
            fd.get(), POLLOUT, 0
        };
        int prc = ::poll(&pfd, 1, static_cast<int>(left * 1000.0) + 1);
        if (prc == 0) throw PolicyTimeoutError("connect timed out");
        if (prc < 0)
            throw PolicyConnectError(std::string("poll failed: ") + std::strerror(errno));
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0)
            throw PolicyConnectError(std::string("connect failed: ") + std::strerror(err));
    }
    ::fcntl(fd.get(), F_SETFL, flags);  // back to blocking; reads are poll-gated
    return fd;
}

PolicyWireResponse call_tcp(const std::string& address, const std::string& payload,
                            int k, Clock::time_point deadline) {
    size_t colon = address.rfind(':');
    if (colon == std::string::npos)
        throw PolicyConnectError("tcp endpoint needs host:port, got " + address);
    Fd fd = connect_tcp(address.substr(0, colon), address.substr(colon + 1), deadline);
    write_all(fd.get(), payload);
    return parse_wire_response(read_line(fd.get(), deadline), k);
}

class ChildProcess {
public:
    explicit ChildProcess(const std::string& command) {
        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw PolicyConnectError("cannot create pipes");
        pid_ = ::fork();
        if (pid_ < 0) throw PolicyConnectError("fork failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        stdin_ = Fd(to_child[1]);
        stdout_ = Fd(from_child[0]);
    }

    ~ChildProcess() {
        stdin_.reset();
        stdout_.reset();
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    int in() const { return stdin_.get(); }
    int out() const { return stdout_.get(); }

private:
    pid_t pid_ = -1;
    Fd stdin_;
    Fd stdout_;
};

PolicyWireResponse call_cmd(const std::string& command, const std::string& payload,
                            int k, Clock::time_point deadline) {
    ChildProcess child(command);
    write_all(child.in(), payload);
    return parse_wire_response(read_line(child.out(), deadline), k);
}
}  // namespace

std::string wire_request_to_json(const PolicyWireRequest& request) {
    json j;
    j["type"] = "sample";
    j["statement"] = request.statement_text;
    j["state"] = request.state_text;
    j["k"] = request.k;
    j["temperatures"] = request.temperatures;
    return j.dump();
}

PolicyWireResponse parse_wire_response(const std::string& line, int k) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw PolicyProtocolError(std::string("malformed response JSON: ") + e.what());
    }
    PolicyWireResponse response;
    try {
        for (const auto& t : j.at("tactics")) {
            Tactic tactic;
            tactic.text = t.at("text").get<std::string>();
            tactic.token_logprobs = t.at("token_logprobs").get<std::vector<double>>();
            response.tactics.push_back(std::move(tactic));
        }
    } catch (const json::exception& e) {
        throw PolicyProtocolError(std::string("malformed response fields: ") + e.what());
    }
    if (static_cast<int>(response.tactics.size()) > k)
        throw PolicyProtocolError("response has more tactics than requested");
    for (const auto& tactic : response.tactics) {
        try {
            validate_policy_tactic(tactic);
        } catch (const ValidationError& e) {
            throw PolicyProtocolError(e.what());
        }
    }
    return response;
}

PolicyWireResponse external_policy_call(const std::string& endpoint,
                                        const PolicyWireRequest& request,
                                        double timeout_seconds) {
    auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    std::string payload = wire_request_to_json(request) + "\n";
    if (endpoint.rfind("tcp:", 0) == 0)
        return call_tcp(endpoint.substr(4), payload, request.k, deadline);
    if (endpoint.rfind("cmd:", 0) == 0)
        return call_cmd(endpoint.substr(4), payload, request.k, deadline);
    throw PolicyConnectError("endpoint must start with tcp: or cmd:, got " + endpoint);
}

ExternalPolicy::ExternalPolicy(std::string endpoint, double call_timeout_seconds)
    : endpoint_(std::move(endpoint)), call_timeout_seconds_(call_timeout_seconds) {}

std::vector<Tactic> ExternalPolicy::sample(const Statement& statement,
                                           const ProofState& state,
                                           const SamplingPlan& plan,
                                           std::mt19937_64&) const {
    PolicyWireRequest request;
    request.statement_text = statement.goal_state.text;
    request.state_text = state.text;
    request.k = plan.total_k;
    request.temperatures = plan.expanded_temperatures();
    auto response = external_policy_call(endpoint_, request, call_timeout_seconds_);
    return std::move(response.tactics);
}

}  // namespace tacsearch
