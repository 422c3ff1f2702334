#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "stopfill/gtfs.hpp"
#include "stopfill/synth.hpp"

using namespace stopfill;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("synth_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

synth::SynthConfig small_config() {
    synth::SynthConfig cfg;
    cfg.seed = 12;
    cfg.num_routes = 2;
    cfg.stops_per_route = 8;
    cfg.headway_s = 1200;
    cfg.service_days = 3;
    cfg.num_commuters = 40;
    cfg.trips_per_commuter_per_day = 2;
    return cfg;
}

bool same_record(const afc::AfcRecord& a, const afc::AfcRecord& b) {
    return a.card_id == b.card_id && a.trip_id == b.trip_id &&
           a.service_date == b.service_date && a.boarding_ts == b.boarding_ts &&
           a.boarding_stop_id == b.boarding_stop_id && a.operator_id == b.operator_id &&
           a.traveler_type == b.traveler_type;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// flat record stream for masking tests: 50 trips x 2 operators x 400 cards
std::vector<afc::AfcRecord> flat_records(int n) {
    std::vector<afc::AfcRecord> out;
    for (int i = 0; i < n; ++i) {
        afc::AfcRecord r;
        r.card_id = "c" + std::to_string(i);
        r.trip_id = "t" + std::to_string(i % 50);
        r.service_date = Date{2024, 3, 4 + (i / 50) % 4};
        r.boarding_ts = 28800 + i % 7200;
        r.boarding_stop_id = "s" + std::to_string(i % 10);
        r.operator_id = "op" + std::to_string(i % 2);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST_CASE("generation is deterministic") {
    synth::SynthConfig cfg = small_config();
    cfg.lateness.kind = synth::LatenessModel::Kind::drift;
    cfg.lateness.mu_per_stop_s = 10.0;
    cfg.lateness.sigma_s = 20.0;
    cfg.missing_ratio = 0.3;
    cfg.one_time_traveler_fraction = 0.1;

    synth::SynthCity a = synth::generate(cfg);
    synth::SynthCity b = synth::generate(cfg);
    REQUIRE(a.afc.size() == b.afc.size());
    for (size_t i = 0; i < a.afc.size(); ++i) CHECK(same_record(a.afc[i], b.afc[i]));
    REQUIRE(a.truth.size() == b.truth.size());
    for (size_t i = 0; i < a.truth.size(); ++i) {
        CHECK(a.truth[i].true_stop_id == b.truth[i].true_stop_id);
        CHECK(a.truth[i].lateness_s == b.truth[i].lateness_s);
    }
    REQUIRE(a.geo_points.size() == b.geo_points.size());
    for (size_t i = 0; i < a.geo_points.size(); ++i) {
        CHECK(a.geo_points[i].lat == b.geo_points[i].lat);
        CHECK(a.geo_points[i].category == b.geo_points[i].category);
    }
    CHECK(a.feed.trips.size() == b.feed.trips.size());

    synth::SynthConfig other = cfg;
    other.seed = 13;
    synth::SynthCity c = synth::generate(other);
    bool differs = c.afc.size() != a.afc.size();
    for (size_t i = 0; !differs && i < a.afc.size(); ++i)
        differs = !same_record(a.afc[i], c.afc[i]);
    CHECK(differs);
}

TEST_CASE("truth rows align with the afc stream") {
    synth::SynthConfig cfg = small_config();
    cfg.missing_ratio = 0.4;
    cfg.one_time_traveler_fraction = 0.15;
    synth::SynthCity city = synth::generate(cfg);

    REQUIRE(city.truth.size() == city.afc.size());
    size_t masked = 0;
    for (size_t i = 0; i < city.afc.size(); ++i) {
        CHECK(city.truth[i].record_index == std::int64_t(i));
        if (city.afc[i].boarding_stop_id)
            CHECK(*city.afc[i].boarding_stop_id == city.truth[i].true_stop_id);
        else
            ++masked;
        const gtfs::TripSchedule* trip =
            city.feed.find_trip(city.afc[i].trip_id, city.afc[i].service_date);
        REQUIRE(trip != nullptr);
        int seq = city.truth[i].true_sequence;
        REQUIRE(seq >= 1);
        REQUIRE(seq <= trip->stop_count());
        CHECK(trip->events[size_t(seq) - 1].stop_id == city.truth[i].true_stop_id);
    }
    CHECK(masked > 0);
    // record stream is sorted by (date, ts)
    for (size_t i = 1; i < city.afc.size(); ++i) {
        bool ordered = city.afc[i - 1].service_date < city.afc[i].service_date ||
                       (city.afc[i - 1].service_date == city.afc[i].service_date &&
                        city.afc[i - 1].boarding_ts <= city.afc[i].boarding_ts);
        CHECK(ordered);
    }
}

TEST_CASE("zero lateness boards exactly on schedule") {
    synth::SynthConfig cfg = small_config();
    synth::SynthCity city = synth::generate(cfg);
    CHECK(city.afc.size() ==
          size_t(cfg.num_commuters * cfg.service_days * cfg.trips_per_commuter_per_day));
    for (size_t i = 0; i < city.afc.size(); ++i) {
        const afc::AfcRecord& r = city.afc[i];
        const gtfs::TripSchedule* trip = city.feed.find_trip(r.trip_id, r.service_date);
        REQUIRE(trip != nullptr);
        int seq = city.truth[i].true_sequence;
        CHECK(r.boarding_ts == trip->events[size_t(seq) - 1].scheduled_arrival);
        CHECK(city.truth[i].lateness_s == 0.0);
        // the schedule position is the true stop: every D is zero
        CHECK(gtfs::scheduled_position(*trip, r.boarding_ts) == seq);
    }
}

TEST_CASE("sigma free drift accumulates mu per stop") {
    synth::SynthConfig cfg = small_config();
    cfg.lateness.kind = synth::LatenessModel::Kind::drift;
    cfg.lateness.mu_per_stop_s = 10.0;
    cfg.lateness.sigma_s = 0.0;
    synth::SynthCity city = synth::generate(cfg);
    for (size_t i = 0; i < city.afc.size(); ++i) {
        int k = city.truth[i].true_sequence;
        CHECK(city.truth[i].lateness_s == 10.0 * k);
        const gtfs::TripSchedule* trip =
            city.feed.find_trip(city.afc[i].trip_id, city.afc[i].service_date);
        int sched = trip->events[size_t(k) - 1].scheduled_arrival;
        CHECK(city.afc[i].boarding_ts == sched + 10 * k);
    }

    // a doubled hour factor doubles the increments
    synth::SynthConfig twice = cfg;
    twice.lateness.hour_factor.fill(2.0);
    synth::SynthCity city2 = synth::generate(twice);
    for (size_t i = 0; i < city2.afc.size(); ++i)
        CHECK(city2.truth[i].lateness_s == 20.0 * city2.truth[i].true_sequence);
}

TEST_CASE("hourly lateness is flat per stop") {
    synth::SynthConfig cfg = small_config();
    cfg.lateness.kind = synth::LatenessModel::Kind::hourly;
    cfg.lateness.mu_by_hour.fill(60.0);
    cfg.lateness.sigma_s = 0.0;
    synth::SynthCity city = synth::generate(cfg);
    for (const synth::TruthRow& t : city.truth) CHECK(t.lateness_s == 60.0);

    cfg.lateness.sigma_s = 30.0;
    cfg.num_commuters = 300;
    synth::SynthCity noisy = synth::generate(cfg);
    double sum = 0.0;
    for (const synth::TruthRow& t : noisy.truth) sum += t.lateness_s;
    double mean = sum / double(noisy.truth.size());
    double band = 3.0 * 30.0 / std::sqrt(double(noisy.truth.size()));
    CHECK(std::fabs(mean - 60.0) <= band);
}

TEST_CASE("commuters keep a fixed home stop") {
    synth::SynthConfig cfg = small_config();
    cfg.service_days = 5;
    synth::SynthCity city = synth::generate(cfg);
    std::map<std::string, std::set<int>> seq_by_card;
    for (size_t i = 0; i < city.afc.size(); ++i)
        seq_by_card[city.afc[i].card_id].insert(city.truth[i].true_sequence);
    for (const auto& [card, seqs] : seq_by_card) {
        CHECK(seqs.size() == 1);
        CHECK(*seqs.begin() < cfg.stops_per_route);  // never the terminus
    }
    for (const afc::AfcRecord& r : city.afc) CHECK(r.traveler_type == "commuter");
}

TEST_CASE("one time travelers form the requested share") {
    synth::SynthConfig cfg = small_config();
    cfg.num_commuters = 120;
    cfg.one_time_traveler_fraction = 0.25;
    synth::SynthCity city = synth::generate(cfg);

    std::map<std::string, int> uses;
    std::int64_t onetime = 0;
    for (const afc::AfcRecord& r : city.afc)
        if (r.traveler_type && *r.traveler_type == "onetime") {
            ++onetime;
            ++uses[r.card_id];
        }
    double frac = double(onetime) / double(city.afc.size());
    CHECK(std::fabs(frac - 0.25) < 0.01);
    for (const auto& [card, n] : uses) CHECK(n == 1);  // single-use cards
}

TEST_CASE("attendance thins commuter days") {
    synth::SynthConfig cfg = small_config();
    cfg.service_days = 6;
    cfg.attendance_prob = 0.5;
    cfg.num_commuters = 100;
    synth::SynthCity city = synth::generate(cfg);
    size_t full = size_t(cfg.num_commuters * cfg.service_days * cfg.trips_per_commuter_per_day);
    CHECK(city.afc.size() < full);
    CHECK(city.afc.size() > full / 4);
    // attended days contribute all trips, so counts per (card, day) are exact
    std::map<std::string, int> per_day;
    for (const afc::AfcRecord& r : city.afc)
        ++per_day[r.card_id + "|" + r.service_date.to_string()];
    for (const auto& [key, n] : per_day) CHECK(n == cfg.trips_per_commuter_per_day);
}

TEST_CASE("masking") {
    std::vector<afc::AfcRecord> records = flat_records(20000);

    SUBCASE("ratio zero is the identity") {
        std::vector<afc::AfcRecord> out =
            synth::mask(records, 0.0, synth::Mechanism::random, 1);
        for (size_t i = 0; i < out.size(); ++i)
            CHECK(out[i].boarding_stop_id == records[i].boarding_stop_id);
    }

    SUBCASE("ratio one erases everything") {
        std::vector<afc::AfcRecord> out =
            synth::mask(records, 1.0, synth::Mechanism::random, 1);
        for (const afc::AfcRecord& r : out) CHECK_FALSE(r.boarding_stop_id.has_value());
    }

    SUBCASE("random mask hits the ratio and is reproducible") {
        std::vector<afc::AfcRecord> out =
            synth::mask(records, 0.3, synth::Mechanism::random, 5);
        size_t missing = 0;
        for (const afc::AfcRecord& r : out)
            if (!r.boarding_stop_id) ++missing;
        double frac = double(missing) / double(out.size());
        double sigma = std::sqrt(0.3 * 0.7 / double(out.size()));
        CHECK(std::fabs(frac - 0.3) <= 3 * sigma);

        std::vector<afc::AfcRecord> again =
            synth::mask(records, 0.3, synth::Mechanism::random, 5);
        for (size_t i = 0; i < out.size(); ++i)
            CHECK(out[i].boarding_stop_id.has_value() == again[i].boarding_stop_id.has_value());

        std::vector<afc::AfcRecord> reseeded =
            synth::mask(records, 0.3, synth::Mechanism::random, 6);
        int diff = 0;
        for (size_t i = 0; i < out.size(); ++i)
            diff += out[i].boarding_stop_id.has_value() !=
                    reseeded[i].boarding_stop_id.has_value();
        CHECK(diff > 0);
    }

    SUBCASE("operator bias concentrates missingness per trip") {
        auto trip_variance = [&](const std::vector<afc::AfcRecord>& out) {
            std::map<std::string, std::pair<int, int>> per_trip;  // (missing, total)
            for (const afc::AfcRecord& r : out) {
                auto& [m, n] = per_trip[r.trip_id + "@" + r.service_date.to_string()];
                if (!r.boarding_stop_id) ++m;
                ++n;
            }
            double mean = 0.0;
            std::vector<double> fracs;
            for (const auto& [key, mn] : per_trip) {
                fracs.push_back(double(mn.first) / double(mn.second));
                mean += fracs.back();
            }
            mean /= double(fracs.size());
            double var = 0.0;
            for (double f : fracs) var += (f - mean) * (f - mean);
            return std::pair<double, double>{mean, var / double(fracs.size())};
        };
        auto [mean_r, var_r] =
            trip_variance(synth::mask(records, 0.3, synth::Mechanism::random, 5));
        auto [mean_b, var_b] =
            trip_variance(synth::mask(records, 0.3, synth::Mechanism::operator_biased, 5));
        CHECK(std::fabs(mean_r - 0.3) < 0.05);
        CHECK(std::fabs(mean_b - 0.3) < 0.05);
        CHECK(var_b > 2.0 * var_r);
    }

    SUBCASE("invalid ratio throws") {
        CHECK_THROWS_AS(synth::mask(records, -0.1, synth::Mechanism::random, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(synth::mask(records, 1.5, synth::Mechanism::random, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("written city round trips through the parsers") {
    synth::SynthConfig cfg = small_config();
    cfg.missing_ratio = 0.2;
    cfg.lateness.kind = synth::LatenessModel::Kind::drift;
    cfg.lateness.mu_per_stop_s = 5.0;
    cfg.lateness.sigma_s = 12.0;
    synth::SynthCity city = synth::generate(cfg);

    TempDir dir;
    synth::write_city(city, dir.path);
    for (const char* f : {"gtfs/stops.txt", "gtfs/trips.txt", "gtfs/stop_times.txt",
                          "gtfs/shapes.txt", "gtfs/calendar.txt", "afc.csv", "geo.csv",
                          "ground_truth.csv"})
        CHECK(fs::exists(dir.path / f));

    gtfs::ParseReport report;
    gtfs::GtfsFeed feed = gtfs::parse_feed(dir.path / "gtfs", &report);
    CHECK(report.total() == 0);
    CHECK(feed.stops.size() == city.feed.stops.size());
    CHECK(feed.shapes.size() == city.feed.shapes.size());
    REQUIRE(feed.trips.size() == city.feed.trips.size());
    for (const auto& [key, trip] : city.feed.trips) {
        const gtfs::TripSchedule* parsed = feed.find_trip(key.trip_id, key.service_date);
        REQUIRE(parsed != nullptr);
        REQUIRE(parsed->events.size() == trip.events.size());
        for (size_t i = 0; i < trip.events.size(); ++i) {
            CHECK(parsed->events[i].stop_id == trip.events[i].stop_id);
            CHECK(parsed->events[i].sequence == trip.events[i].sequence);
            CHECK(parsed->events[i].scheduled_arrival == trip.events[i].scheduled_arrival);
        }
        CHECK(parsed->route_id == trip.route_id);
        CHECK(parsed->shape_id == trip.shape_id);
    }

    afc::LoadStats stats;
    std::vector<afc::AfcRecord> loaded = afc::load_afc(dir.path / "afc.csv", &stats);
    CHECK(stats.malformed == 0);
    REQUIRE(loaded.size() == city.afc.size());
    for (size_t i = 0; i < loaded.size(); ++i) CHECK(same_record(loaded[i], city.afc[i]));

    std::vector<geo::GeoPoint> pts = geo::load_geo_csv(dir.path / "geo.csv");
    REQUIRE(pts.size() == city.geo_points.size());

    std::vector<synth::TruthRow> truth = synth::load_truth_csv(dir.path / "ground_truth.csv");
    REQUIRE(truth.size() == city.truth.size());
    for (size_t i = 0; i < truth.size(); ++i) {
        CHECK(truth[i].record_index == city.truth[i].record_index);
        CHECK(truth[i].true_stop_id == city.truth[i].true_stop_id);
        CHECK(truth[i].true_sequence == city.truth[i].true_sequence);
        CHECK(truth[i].lateness_s ==
              doctest::Approx(city.truth[i].lateness_s).epsilon(1e-9));
    }

    // equal cities serialize byte for byte
    TempDir dir2;
    synth::write_city(city, dir2.path);
    for (const char* f : {"gtfs/stops.txt", "gtfs/trips.txt", "gtfs/stop_times.txt",
                          "gtfs/shapes.txt", "gtfs/calendar.txt", "afc.csv", "geo.csv",
                          "ground_truth.csv"})
        CHECK(slurp(dir.path / f) == slurp(dir2.path / f));
}

TEST_CASE("config json round trip") {
    synth::SynthConfig cfg;
    cfg.seed = 99;
    cfg.num_routes = 7;
    cfg.stops_per_route = 11;
    cfg.headway_s = 450;
    cfg.service_days = 14;
    cfg.start_date = Date{2024, 6, 1};
    cfg.lateness.kind = synth::LatenessModel::Kind::hourly;
    cfg.lateness.sigma_s = 25.0;
    cfg.lateness.mu_by_hour[7] = 120.0;
    cfg.lateness.hour_factor[8] = 1.8;
    cfg.one_time_traveler_fraction = 0.2;
    cfg.attendance_prob = 0.9;
    cfg.missing_ratio = 0.35;
    cfg.mechanism = synth::Mechanism::operator_biased;
    cfg.traffic_lights_per_km = 7.5;

    synth::SynthConfig back = synth::SynthConfig::from_json(cfg.to_json());
    CHECK(back.seed == cfg.seed);
    CHECK(back.num_routes == cfg.num_routes);
    CHECK(back.stops_per_route == cfg.stops_per_route);
    CHECK(back.headway_s == cfg.headway_s);
    CHECK(back.service_days == cfg.service_days);
    CHECK(back.start_date == cfg.start_date);
    CHECK(back.lateness.kind == cfg.lateness.kind);
    CHECK(back.lateness.sigma_s == cfg.lateness.sigma_s);
    CHECK(back.lateness.mu_by_hour == cfg.lateness.mu_by_hour);
    CHECK(back.lateness.hour_factor == cfg.lateness.hour_factor);
    CHECK(back.one_time_traveler_fraction == cfg.one_time_traveler_fraction);
    CHECK(back.attendance_prob == cfg.attendance_prob);
    CHECK(back.missing_ratio == cfg.missing_ratio);
    CHECK(back.mechanism == cfg.mechanism);
    CHECK(back.traffic_lights_per_km == cfg.traffic_lights_per_km);
    CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("name parsing") {
    synth::Mechanism m;
    CHECK(synth::parse_mechanism("operator_biased", m));
    CHECK(m == synth::Mechanism::operator_biased);
    CHECK_FALSE(synth::parse_mechanism("typo", m));
    CHECK(std::string(synth::mechanism_name(synth::Mechanism::random)) == "random");

    synth::LatenessModel::Kind k;
    CHECK(synth::parse_lateness_kind("drift", k));
    CHECK(k == synth::LatenessModel::Kind::drift);
    CHECK_FALSE(synth::parse_lateness_kind("", k));
    CHECK(std::string(synth::lateness_kind_name(synth::LatenessModel::Kind::hourly)) ==
          "hourly");
}

TEST_CASE("infeasible configs are rejected") {
    synth::SynthConfig cfg = small_config();
    cfg.stops_per_route = 2;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);

    cfg = small_config();
    cfg.headway_s = 24 * 3600;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);

    cfg = small_config();
    cfg.one_time_traveler_fraction = 1.0;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);

    cfg = small_config();
    cfg.missing_ratio = 1.2;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);

    cfg = small_config();
    cfg.service_end_s = cfg.service_start_s;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);

    // a window too short for one full run
    cfg = small_config();
    cfg.stops_per_route = 20;
    cfg.interstop_time_s = 3600;
    cfg.service_start_s = 6 * 3600;
    cfg.service_end_s = 10 * 3600;
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);
}
