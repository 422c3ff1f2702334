#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stopfill/date.hpp"
#include "stopfill/gtfs.hpp"

namespace stopfill::afc {

// One smart-card boarding transaction. An absent boarding_stop_id marks the
// imputation target.
struct AfcRecord {
    std::string card_id;
    std::string trip_id;
    Date service_date;
    int boarding_ts = 0;  // seconds from midnight
    std::optional<std::string> boarding_stop_id;
    std::string operator_id;
    std::optional<std::string> traveler_type;
};

struct JoinedRecord {
    AfcRecord afc;
    const gtfs::TripSchedule* trip = nullptr;
    std::int64_t input_index = -1;  // position in the pre-join record vector
    std::optional<int> actual_seq;  // A; absent when the stop is missing
    int predicted_seq = 0;          // S, always present
    bool loop_ambiguous = false;    // stop occurs more than once on the trip

    int hour() const { return hour_of_day(afc.boarding_ts); }
    // Lateness vs the schedule at the actual boarding stop; requires A.
    int lateness_s() const {
        return afc.boarding_ts - trip->events[size_t(*actual_seq) - 1].scheduled_arrival;
    }
};

struct DropReport {
    std::int64_t input = 0;
    std::int64_t retained = 0;
    std::map<std::string, std::int64_t> dropped;  // reason -> count

    std::int64_t total_dropped() const;
    double retained_fraction() const { return input ? double(retained) / double(input) : 0.0; }
    std::string to_json() const;
};

// Loop routes: stop lookups prefer the earliest occurrence whose scheduled
// arrival is >= boarding_ts - kLoopWindowS, else the first occurrence.
inline constexpr int kLoopWindowS = 1800;

inline constexpr const char* kDropMissingTripId = "missing_trip_id";
inline constexpr const char* kDropMissingStop = "missing_boarding_stop";
inline constexpr const char* kDropUnmatchedTrip = "unmatched_trip";
inline constexpr const char* kDropStopNotOnTrip = "stop_not_on_trip";

struct LoadStats {
    std::int64_t parsed = 0;
    std::int64_t malformed = 0;
};

// Columns, in order: card_id, trip_id, service_date, boarding_ts,
// boarding_stop_id, operator_id, traveler_type. boarding_ts accepts integer
// seconds or HH:MM:SS. A missing header is fatal; malformed rows are counted.
std::vector<AfcRecord> load_afc(const std::filesystem::path& csv_path, LoadStats* stats = nullptr);

void write_afc(const std::filesystem::path& csv_path, const std::vector<AfcRecord>& records);

enum class JoinMode { train, impute };

// Train mode drops records lacking a boarding stop or trip id; impute mode
// keeps missing-stop records. Output order follows input order.
std::pair<std::vector<JoinedRecord>, DropReport> preprocess_and_join(
    const std::vector<AfcRecord>& records, const gtfs::GtfsFeed& feed, JoinMode mode);

// Per-operator distribution of per-trip missing-stop ratios.
std::map<std::string, std::vector<double>> missingness_by_operator(
    const std::vector<AfcRecord>& records);

struct Histogram {
    double bin_width = 30.0;
    std::map<long, std::int64_t> bins;  // floor(value / bin_width) -> count
    std::int64_t n = 0;
    double sum = 0.0;

    void add(double value);
    double mean() const { return n ? sum / double(n) : 0.0; }
    std::string to_json() const;
};

// Lateness (boarding_ts - scheduled arrival at A) over records with A present.
Histogram lateness_density(const std::vector<JoinedRecord>& joined, double bin_width_s = 30.0);

}  // namespace stopfill::afc
