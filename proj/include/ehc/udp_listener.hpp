#pragma once

#include "ehc/gateway.hpp"

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>

namespace ehc {

/// Receives bracelet datagrams and feeds them to a Gateway on one thread.
/// Arrival time is taken from the gateway's clock.
class UdpListener {
public:
    explicit UdpListener(Gateway& gateway) : gw_(gateway) {}
    ~UdpListener();
    UdpListener(const UdpListener&) = delete;
    UdpListener& operator=(const UdpListener&) = delete;

    /// Port 0 picks a free port. Returns the bound port; throws Error.
    int bind(const std::string& host, int port);
    void start();
    void stop();
    std::uint64_t datagrams() const noexcept { return datagrams_.load(); }

private:
    void run();

    Gateway& gw_;
    int fd_{-1};
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> datagrams_{0};
    std::thread thread_;
};

/// Fire-and-forget datagram sender used by the simulator's URL target.
class UdpSender {
public:
    UdpSender(const std::string& host, int port);
    ~UdpSender();
    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;

    void send(std::span<const std::uint8_t> frame);

private:
    int fd_{-1};
};

}  // namespace ehc
