#pragma once

#include "ehc/protocol.hpp"
#include "ehc/store.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

namespace ehc::test {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(EHC_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "ehc") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Store seeded with the five patients of fig5_patients.tsv.
inline std::unique_ptr<store::PatientStore> seeded_store(const std::filesystem::path& dir) {
    auto db = store::PatientStore::open(dir, true);
    auto text = store::read_file(fixture("fig5_patients.tsv"));
    for (const auto& p : store::parse_patients_tsv(text, DateOrder::MonthDayYear)) db->upsert_patient(p);
    return db;
}

/// Uniformly random valid packet.
inline protocol::TelemetryPacket random_packet(std::mt19937_64& rng) {
    protocol::TelemetryPacket p;
    p.node_id = static_cast<NodeId>(rng());
    p.seq = static_cast<std::uint16_t>(rng());
    p.timestamp_ms = rng();
    std::vector<VitalKind> kinds(kAllVitalKinds.begin(), kAllVitalKinds.end());
    std::shuffle(kinds.begin(), kinds.end(), rng);
    const auto n = 1 + rng() % kinds.size();
    for (std::size_t i = 0; i < n; ++i) {
        p.samples.push_back({kinds[i], static_cast<std::int16_t>(static_cast<std::uint16_t>(rng()))});
    }
    return p;
}

}  // namespace ehc::test
