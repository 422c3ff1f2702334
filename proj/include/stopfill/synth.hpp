#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "stopfill/afc.hpp"
#include "stopfill/geo.hpp"
#include "stopfill/gtfs.hpp"

namespace stopfill::synth {

// Vehicle lateness along a trip.
//   none:   every vehicle exactly on schedule
//   drift:  cumulative per-stop increments N(mu_per_stop_s * hour_factor[h],
//           sigma_s); with sigma 0 the lateness at 1-based stop k is exactly
//           mu_per_stop_s * k (flat hour_factor)
//   hourly: independent per-stop lateness N(mu_by_hour[h], sigma_s)
// h is the hour of the stop's scheduled arrival.
struct LatenessModel {
    enum class Kind { none, drift, hourly };
    Kind kind = Kind::none;
    double mu_per_stop_s = 0.0;
    double sigma_s = 0.0;
    std::array<double, 24> hour_factor;
    std::array<double, 24> mu_by_hour;

    LatenessModel() {
        hour_factor.fill(1.0);
        mu_by_hour.fill(0.0);
    }
};

enum class Mechanism { random, operator_biased };

struct SynthConfig {
    std::uint64_t seed = 0;
    int num_routes = 5;
    int stops_per_route = 15;
    int headway_s = 600;
    int service_days = 7;
    Date start_date{2024, 3, 4};
    int service_start_s = 6 * 3600;
    int service_end_s = 23 * 3600;
    int num_operators = 3;
    int interstop_time_s = 120;
    double stop_spacing_min_m = 300.0;
    double stop_spacing_max_m = 500.0;
    LatenessModel lateness;
    int num_commuters = 500;
    int trips_per_commuter_per_day = 2;
    double one_time_traveler_fraction = 0.0;  // fraction of all boardings from
                                              // fresh single-use cards
    double attendance_prob = 1.0;  // per (commuter, day); attending commuters
                                   // make all their daily trips
    double missing_ratio = 0.0;
    Mechanism mechanism = Mechanism::random;
    double addresses_per_km = 30.0;
    double street_lights_per_km = 20.0;
    double traffic_lights_per_km = 5.0;
    double center_lat = 31.60;
    double center_lon = 34.77;

    nlohmann::json to_json() const;
    static SynthConfig from_json(const nlohmann::json& j);
};

struct TruthRow {
    std::int64_t record_index = 0;  // position in the emitted AFC vector
    std::string true_stop_id;
    int true_sequence = 0;
    double lateness_s = 0.0;  // realized vehicle lateness at that stop
};

struct SynthCity {
    gtfs::GtfsFeed feed;
    std::vector<afc::AfcRecord> afc;  // missingness already applied
    std::vector<geo::GeoPoint> geo_points;
    std::vector<TruthRow> truth;  // one row per AFC record, index-aligned
};

// Deterministic given cfg.seed. Throws std::invalid_argument on invalid or
// infeasible configs (e.g. headway longer than the service span).
SynthCity generate(const SynthConfig& cfg);

// random: erases each record's stop with probability ratio.
// operator_biased: per trip instance, a Beta-distributed erase probability
// with mean = ratio and an operator-specific concentration, so per-trip
// missingness varies across operators while the overall mean stays at ratio.
std::vector<afc::AfcRecord> mask(const std::vector<afc::AfcRecord>& records, double ratio,
                                 Mechanism mechanism, std::uint64_t seed);

// Writes dir/gtfs/{stops,trips,stop_times,shapes,calendar}.txt, dir/afc.csv,
// dir/geo.csv and dir/ground_truth.csv. Byte-identical for equal cities.
void write_city(const SynthCity& city, const std::filesystem::path& dir);

void write_truth_csv(const std::vector<TruthRow>& truth, const std::filesystem::path& path);
std::vector<TruthRow> load_truth_csv(const std::filesystem::path& path);

const char* mechanism_name(Mechanism m);
bool parse_mechanism(const std::string& name, Mechanism& out);
const char* lateness_kind_name(LatenessModel::Kind k);
bool parse_lateness_kind(const std::string& name, LatenessModel::Kind& out);

}  // namespace stopfill::synth
