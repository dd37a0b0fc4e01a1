#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace pproute {

// Per-label traffic for one message-exchange phase family.  rounds[p] counts
// phases completed by party p under the label; after a run both sides must
// agree.  bytes[p] is payload actually sent by party p (headers excluded).
struct LabelStats {
    std::uint64_t rounds[2] = {0, 0};
    std::uint64_t bytes[2] = {0, 0};
};

struct CommStats {
    std::map<std::string, LabelStats> by_label;
    std::uint64_t rounds[2] = {0, 0};
    std::uint64_t bytes[2] = {0, 0};
    // offline: correlated randomness delivered by the dealer, no online rounds
    std::uint64_t dealer_offline_bytes[2] = {0, 0};
    // online dealer traffic (oracle backend): bytes party <-> dealer
    std::uint64_t dealer_online_bytes[2] = {0, 0};

    std::uint64_t total_rounds() const { return rounds[0]; }
    std::uint64_t total_bytes() const { return bytes[0] + bytes[1]; }

    std::uint64_t label_rounds(const std::string &label) const {
        auto it = by_label.find(label);
        return it == by_label.end() ? 0 : it->second.rounds[0];
    }
    std::uint64_t label_bytes(const std::string &label) const {
        auto it = by_label.find(label);
        return it == by_label.end() ? 0
                                    : it->second.bytes[0] + it->second.bytes[1];
    }
};

} // namespace pproute
