#include "ehc/udp_listener.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

namespace ehc {

namespace {

sockaddr_in resolve(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    const std::string h = host.empty() ? "0.0.0.0" : host;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res) {
        throw Error("cannot resolve host " + h);
    }
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    freeaddrinfo(res);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    return addr;
}

}  // namespace

UdpListener::~UdpListener() { stop(); }

int UdpListener::bind(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    // Bursts of 50 nodes must not overflow the kernel queue.
    int rcvbuf = 4 << 20;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
    sockaddr_in addr = resolve(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        throw Error("cannot bind UDP " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

void UdpListener::start() {
    running_ = true;
    thread_ = std::thread([this] { run(); });
}

void UdpListener::stop() {
    running_ = false;
    if (thread_.joinable()) thread_.join();
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void UdpListener::run() {
    std::array<std::uint8_t, 2048> buf{};
    pollfd pfd{fd_, POLLIN, 0};
    while (running_) {
        if (::poll(&pfd, 1, 100) <= 0) continue;
        const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
        if (n < 0) continue;
        datagrams_.fetch_add(1, std::memory_order_relaxed);
        gw_.ingest(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)), gw_.clock().now_ms());
    }
}

UdpSender::UdpSender(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr = resolve(host, port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        throw Error("cannot reach UDP " + host + ":" + std::to_string(port) + ": " + why);
    }
}

UdpSender::~UdpSender() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send(std::span<const std::uint8_t> frame) {
    // Datagrams are fire-and-forget; a refused send is simply lost.
    (void)::send(fd_, frame.data(), frame.size(), 0);
}

}  // namespace ehc
