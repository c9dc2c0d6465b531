#include "ehc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ehc::sim {

NoiseStream::NoiseStream(std::uint64_t seed, NodeId node, VitalKind kind) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(wire_code(kind))};
    engine_.seed(seq);
}

double NoiseStream::next_standard_normal() { return normal_(engine_); }

double channel_value(const ChannelProfile& channel, std::span<const AnomalyEvent> events,
                     double t_s) noexcept {
    double v = channel.baseline;
    if (channel.amplitude != 0.0) {
        v += channel.amplitude *
             std::sin(2.0 * std::numbers::pi * (t_s + channel.phase_s) / channel.period_s);
    }
    for (const auto& ev : events) v += ev.delta * ev.envelope(t_s);
    return v;
}

std::int16_t next_sample(const ChannelProfile& channel, std::span<const AnomalyEvent> events,
                         double t_s, NoiseStream& noise) {
    const double z = noise.next_standard_normal();
    return to_x10(channel_value(channel, events, t_s) + channel.noise_stddev * z);
}

std::vector<Emission> run_fleet(const Scenario& scenario) {
    validate(scenario);

    std::vector<Emission> out;
    for (const auto& node : scenario.nodes) {
        const auto kinds = node.enabled_kinds();
        // events per channel, in scenario order
        std::array<std::vector<AnomalyEvent>, kVitalKindCount> events;
        for (const auto& ev : scenario.events) {
            if (ev.node_id == node.node_id) events[index_of(ev.kind)].push_back(ev);
        }
        std::vector<NoiseStream> noise;
        noise.reserve(kinds.size());
        for (auto k : kinds) noise.emplace_back(scenario.seed, node.node_id, k);

        const auto count = static_cast<std::uint64_t>(
            std::floor(scenario.duration_s / node.sample_period_s + 1e-9));
        for (std::uint64_t i = 0; i < count; ++i) {
            const double t = static_cast<double>(i) * node.sample_period_s;
            Emission e;
            e.send_time_ms = scenario.start_epoch_ms + static_cast<TimestampMs>(std::llround(t * 1000.0));
            e.packet.node_id = node.node_id;
            e.packet.seq = static_cast<std::uint16_t>(i);
            e.packet.timestamp_ms = e.send_time_ms;
            for (std::size_t c = 0; c < kinds.size(); ++c) {
                const auto k = kinds[c];
                e.packet.samples.push_back(
                    {k, next_sample(node.channel(k), events[index_of(k)], t, noise[c])});
            }
            out.push_back(std::move(e));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Emission& a, const Emission& b) {
        if (a.send_time_ms != b.send_time_ms) return a.send_time_ms < b.send_time_ms;
        return a.packet.node_id < b.packet.node_id;
    });
    return out;
}

std::vector<TimedFrame> encode_stream(std::span<const Emission> emissions) {
    std::vector<TimedFrame> out;
    out.reserve(emissions.size());
    for (const auto& e : emissions) out.push_back({e.send_time_ms, protocol::encode_packet(e.packet)});
    return out;
}

std::vector<TimedFrame> apply_impairment(std::span<const TimedFrame> stream,
                                         const ImpairmentConfig& config) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> delay(config.delay_ms_min, config.delay_ms_max);

    std::vector<TimedFrame> out;
    out.reserve(stream.size());
    for (const auto& f : stream) {
        // Fixed draw order per frame keeps the outcome independent of earlier branches.
        const double loss_u = unit(rng);
        const double dup_u = unit(rng);
        const std::uint32_t d0 = delay(rng);
        const std::uint32_t d1 = delay(rng);
        if (loss_u < config.loss_prob) continue;
        out.push_back({f.time_ms + d0, f.frame});
        if (dup_u < config.dup_prob) out.push_back({f.time_ms + d1, f.frame});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TimedFrame& a, const TimedFrame& b) { return a.time_ms < b.time_ms; });
    return out;
}

std::string format_delivery_log(std::span<const TimedFrame> delivered) {
    std::string out;
    for (const auto& f : delivered) {
        out += std::to_string(f.time_ms);
        out += '\t';
        out += protocol::to_hex(f.frame);
        out += '\n';
    }
    return out;
}

std::vector<TimedFrame> parse_delivery_log(std::string_view text) {
    std::vector<TimedFrame> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error("delivery log line " + std::to_string(line_no) + ": missing tab");
        }
        TimedFrame f;
        try {
            f.time_ms = std::stoull(line.substr(0, tab));
            f.frame = protocol::from_hex(std::string_view(line).substr(tab + 1));
        } catch (const std::exception& e) {
            throw Error("delivery log line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace ehc::sim
