#pragma once

#include "ehc/error.hpp"
#include "ehc/protocol.hpp"
#include "ehc/vital.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ehc::sim {

/// Signal model for one vital channel of a bracelet.
struct ChannelProfile {
    bool enabled{false};
    double baseline{0.0};
    double noise_stddev{0.0};
    double amplitude{0.0};   // circadian sinusoid amplitude
    double period_s{86400.0};
    double phase_s{0.0};
};

/// Default baseline for a freshly declared node (physical units).
double default_baseline(VitalKind kind) noexcept;

struct NodeProfile {
    NodeId node_id{0};
    PatientId patient_id{0};
    double sample_period_s{1.0};
    std::array<ChannelProfile, kVitalKindCount> channels{};

    ChannelProfile& channel(VitalKind k) { return channels[index_of(k)]; }
    const ChannelProfile& channel(VitalKind k) const { return channels[index_of(k)]; }
    std::vector<VitalKind> enabled_kinds() const;

    /// Node with the four default channels enabled at default baselines.
    static NodeProfile with_defaults(NodeId node, PatientId patient);
};

/// Scripted excursion added on top of a channel's baseline. The delta ramps
/// linearly from 0 over ramp_s, holds, then ramps back over the final ramp_s.
struct AnomalyEvent {
    NodeId node_id{0};
    VitalKind kind{VitalKind::BodyTemperature};
    double start_s{0.0};
    double duration_s{0.0};
    double delta{0.0};
    double ramp_s{0.0};

    /// Fraction of delta in effect at t_s, in [0, 1].
    double envelope(double t_s) const noexcept;
    double plateau_start_s() const noexcept { return start_s + ramp_s; }
    double plateau_end_s() const noexcept { return start_s + duration_s - ramp_s; }
};

struct ImpairmentConfig {
    double loss_prob{0.0};
    double dup_prob{0.0};
    std::uint32_t delay_ms_min{0};
    std::uint32_t delay_ms_max{0};
    std::uint64_t seed{0};
};

struct Scenario {
    double duration_s{0.0};
    std::uint64_t seed{0};
    /// Epoch time of simulated t = 0.
    TimestampMs start_epoch_ms{0};
    std::vector<NodeProfile> nodes;
    std::vector<AnomalyEvent> events;
    ImpairmentConfig impairment;

    const NodeProfile* find_node(NodeId id) const;
};

class ScenarioInvalid : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Throws ScenarioInvalid listing every violated rule.
void validate(const Scenario& scenario);

/// Parses the `[scenario]` / `[node <id>]` / `[event]` / `[impairment]`
/// text format and validates it. Throws kv::ParseError or ScenarioInvalid.
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);
std::string save_scenario(const Scenario& scenario);

/// Deterministic Gaussian noise for one (seed, node, kind) channel.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, NodeId node, VitalKind kind);
    double next_standard_normal();

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Noise-free physical value of a channel at t_s: baseline + circadian
/// sinusoid + every applicable event's ramped delta.
double channel_value(const ChannelProfile& channel, std::span<const AnomalyEvent> events,
                     double t_s) noexcept;

/// One fixed-point sample: channel_value plus N(0, stddev) noise drawn from
/// `noise`, rounded to the nearest 0.1. Always consumes one draw so streams
/// stay aligned regardless of stddev.
std::int16_t next_sample(const ChannelProfile& channel, std::span<const AnomalyEvent> events,
                         double t_s, NoiseStream& noise);

struct Emission {
    TimestampMs send_time_ms{0};
    protocol::TelemetryPacket packet;
};

/// Packets for every node, ordered by send time with ties broken by node id.
/// Node k-th packet is sent at start_epoch + k * sample_period.
std::vector<Emission> run_fleet(const Scenario& scenario);

struct TimedFrame {
    TimestampMs time_ms{0};
    protocol::Frame frame;

    friend bool operator==(const TimedFrame&, const TimedFrame&) = default;
};

std::vector<TimedFrame> encode_stream(std::span<const Emission> emissions);

/// Lossy wireless hop: drop with loss_prob, duplicate survivors once with
/// dup_prob, delay each copy uniformly. Output is stable-sorted by arrival.
std::vector<TimedFrame> apply_impairment(std::span<const TimedFrame> stream,
                                         const ImpairmentConfig& config);

/// Delivery log: one `arrival_ms<TAB>HEXFRAME` line per delivered frame.
std::string format_delivery_log(std::span<const TimedFrame> delivered);
std::vector<TimedFrame> parse_delivery_log(std::string_view text);

}  // namespace ehc::sim
