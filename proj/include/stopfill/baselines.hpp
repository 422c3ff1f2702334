#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stopfill/afc.hpp"
#include "stopfill/model.hpp"

namespace stopfill::baselines {

struct BaselineResult {
    std::string stop_id;
    int sequence = 0;  // resolved on the record's trip; -1 when off-trip
    bool used_fallback = false;
};

// Vehicle-position predictor: returns S and the stop scheduled there.
BaselineResult schedule_based_predict(const afc::JoinedRecord& record);

// Per-passenger boarding history keyed by (card, route, time bucket).
// Built from training records with known stops only.
class HistoryIndex {
  public:
    static HistoryIndex build(std::span<const afc::JoinedRecord> train, int bucket_seconds = 3600);

    // Most frequent stop for the key, ties broken toward the most recent
    // boarding (then lexicographically smallest stop_id).
    std::optional<std::string> lookup(const std::string& card_id, const std::string& route_id,
                                      int boarding_ts) const;

    int bucket_seconds() const { return bucket_seconds_; }
    std::size_t size() const { return map_.size(); }

  private:
    struct StopUse {
        std::int64_t count = 0;
        std::int64_t last_seen = 0;  // absolute seconds, for recency ties
    };
    std::unordered_map<std::string, std::map<std::string, StopUse>> map_;
    int bucket_seconds_ = 3600;

    static std::string key(const std::string& card, const std::string& route, int bucket);
};

// Algorithm 1: history lookup, ML imputation otherwise.
BaselineResult history_predict(const afc::JoinedRecord& record, const HistoryIndex& index,
                               const learn::Imputation& ml_fallback);

// Algorithm 2: nearest co-boarding on the same trip instance within
// threshold_s seconds (ties toward the earlier boarding), ML imputation
// otherwise. same_trip must hold the other boardings with known stops on the
// record's trip instance; the record itself must not be included.
BaselineResult temporal_closeness_predict(const afc::JoinedRecord& record,
                                          std::span<const afc::JoinedRecord> same_trip,
                                          const learn::Imputation& ml_fallback,
                                          int threshold_s = 30);

// Empirical boarding-stop distribution over the training data.
class FrequencyTable {
  public:
    static FrequencyTable build(std::span<const afc::JoinedRecord> train);

    double mass(const std::string& stop_id) const;
    const std::map<std::string, double>& masses() const { return mass_; }

  private:
    std::map<std::string, double> mass_;
};

// Algorithm 3: samples a stop from the table restricted to the record's trip
// (renormalized); falls back to uniform over the trip's stops when no on-trip
// stop has mass. Deterministic given (seed, record_index). With
// restrict_to_trip = false, samples the global table instead; the result may
// lie off the trip (sequence -1).
BaselineResult semi_random_predict(const afc::JoinedRecord& record, std::uint64_t record_index,
                                   const FrequencyTable& freq, std::uint64_t seed,
                                   bool restrict_to_trip = true);

}  // namespace stopfill::baselines
