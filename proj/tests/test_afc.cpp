#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stopfill/afc.hpp"

using namespace stopfill;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& stem) {
    static int counter = 0;
    return fs::temp_directory_path() /
           (stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// feed with one trip over two dates; stop s2 repeats (loop)
gtfs::GtfsFeed tiny_feed() {
    gtfs::GtfsFeed feed;
    for (const char* id : {"s1", "s2", "s3"}) feed.stops[id] = gtfs::Stop{id, id, 32.0, 34.8};
    for (int day = 4; day <= 5; ++day) {
        gtfs::TripSchedule t;
        t.trip_id = "t1";
        t.route_id = "r1";
        t.service_date = Date{2024, 3, day};
        t.shape_id = "shp";
        t.events = {{"s1", 1, 28800, {}},
                    {"s2", 2, 29100, {}},
                    {"s3", 3, 29400, {}},
                    {"s2", 4, 29700, {}}};
        feed.trips[{"t1", t.service_date}] = t;
    }
    return feed;
}

afc::AfcRecord rec(const std::string& card, int ts, std::optional<std::string> stop,
                   const std::string& trip = "t1", int day = 4) {
    afc::AfcRecord r;
    r.card_id = card;
    r.trip_id = trip;
    r.service_date = Date{2024, 3, day};
    r.boarding_ts = ts;
    r.boarding_stop_id = std::move(stop);
    r.operator_id = "op1";
    r.traveler_type = "adult";
    return r;
}

}  // namespace

TEST_CASE("load afc csv") {
    fs::path p = temp_file("afc");
    put(p,
        "card_id,trip_id,service_date,boarding_ts,boarding_stop_id,operator_id,traveler_type\n"
        "c1,t1,2024-03-04,28810,s1,op1,adult\n"
        "c2,t1,2024-03-04,08:00:30,,op1,student\n"
        "c3,t1,2024-03-04,notatime,s1,op1,adult\n");
    afc::LoadStats stats;
    std::vector<afc::AfcRecord> recs = afc::load_afc(p, &stats);
    REQUIRE(recs.size() == 2);
    CHECK(stats.parsed == 2);
    CHECK(stats.malformed == 1);
    CHECK(recs[0].card_id == "c1");
    CHECK(recs[0].boarding_ts == 28810);
    REQUIRE(recs[0].boarding_stop_id.has_value());
    CHECK(*recs[0].boarding_stop_id == "s1");
    CHECK(recs[1].boarding_ts == 28830);  // HH:MM:SS accepted
    CHECK_FALSE(recs[1].boarding_stop_id.has_value());
    CHECK(recs[1].traveler_type == "student");
    fs::remove(p);
}

TEST_CASE("load afc requires header") {
    fs::path p = temp_file("afc_nohdr");
    put(p, "c1,t1,2024-03-04,28810,s1,op1,adult\n");
    CHECK_THROWS_AS(afc::load_afc(p), std::runtime_error);
    fs::remove(p);
}

TEST_CASE("afc write/load round trip") {
    std::vector<afc::AfcRecord> recs{rec("c1", 28810, "s1"), rec("c2", 28950, std::nullopt)};
    fs::path p = temp_file("afc_rt");
    afc::write_afc(p, recs);
    std::vector<afc::AfcRecord> back = afc::load_afc(p);
    REQUIRE(back.size() == 2);
    CHECK(back[0].card_id == recs[0].card_id);
    CHECK(back[0].boarding_ts == recs[0].boarding_ts);
    CHECK(back[0].boarding_stop_id == recs[0].boarding_stop_id);
    CHECK(back[1].boarding_stop_id == std::nullopt);
    CHECK(back[1].service_date == recs[1].service_date);
    fs::remove(p);
}

TEST_CASE("join computes A and S") {
    gtfs::GtfsFeed feed = tiny_feed();
    // boards at s3 at 29100 when the vehicle is scheduled at s2: A=3, S=2
    std::vector<afc::AfcRecord> recs{rec("c1", 29100, "s3")};
    auto [joined, drop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::train);
    REQUIRE(joined.size() == 1);
    CHECK(drop.retained == 1);
    REQUIRE(joined[0].actual_seq.has_value());
    CHECK(*joined[0].actual_seq == 3);
    CHECK(joined[0].predicted_seq == 2);
    CHECK(joined[0].input_index == 0);
    CHECK(joined[0].trip->trip_id == "t1");
}

TEST_CASE("train mode drops, impute mode keeps") {
    gtfs::GtfsFeed feed = tiny_feed();
    std::vector<afc::AfcRecord> recs;
    for (int i = 0; i < 9; ++i) recs.push_back(rec("c" + std::to_string(i), 28800 + i, "s1"));
    recs.push_back(rec("c9", 28900, std::nullopt));

    auto [train, tdrop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::train);
    CHECK(train.size() == 9);
    CHECK(tdrop.dropped[afc::kDropMissingStop] == 1);
    CHECK(tdrop.input == 10);
    CHECK(tdrop.retained + tdrop.total_dropped() == tdrop.input);

    auto [imp, idrop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::impute);
    CHECK(imp.size() == 10);
    CHECK(idrop.total_dropped() == 0);
    CHECK_FALSE(imp.back().actual_seq.has_value());
    CHECK(imp.back().predicted_seq >= 1);  // S always present
    CHECK(imp.back().input_index == 9);
}

TEST_CASE("join drop reasons") {
    gtfs::GtfsFeed feed = tiny_feed();
    std::vector<afc::AfcRecord> recs{
        rec("c1", 28800, "s1", ""),          // no trip id
        rec("c2", 28800, "s1", "ghost"),     // unmatched trip
        rec("c3", 28800, "s9"),              // stop not on trip
        rec("c4", 28800, "s1", "t1", 20),    // date outside calendar
        rec("c5", 28800, "s1"),              // good
    };
    auto [joined, drop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::train);
    CHECK(joined.size() == 1);
    CHECK(joined[0].afc.card_id == "c5");
    CHECK(joined[0].input_index == 4);
    CHECK(drop.dropped[afc::kDropMissingTripId] == 1);
    CHECK(drop.dropped[afc::kDropUnmatchedTrip] == 2);
    CHECK(drop.dropped[afc::kDropStopNotOnTrip] == 1);
    CHECK(drop.retained_fraction() == doctest::Approx(0.2).epsilon(1e-12));
    std::string j = drop.to_json();
    CHECK(j.find(afc::kDropStopNotOnTrip) != std::string::npos);
}

TEST_CASE("loop trip picks plausible occurrence") {
    gtfs::GtfsFeed feed = tiny_feed();
    // s2 appears at sequences 2 (29100) and 4 (29700)
    std::vector<afc::AfcRecord> recs{
        rec("early", 29050, "s2"),  // near first occurrence -> 2
        rec("late", 29690, "s2"),   // 29690 - 1800 < 29100, still 2? no: window keeps
                                    // occurrences with arrival >= ts - 1800 -> 2
        rec("very_late", 31200, "s2"),  // ts - 1800 = 29400 > 29100 -> sequence 4
    };
    auto [joined, drop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::train);
    REQUIRE(joined.size() == 3);
    CHECK(*joined[0].actual_seq == 2);
    CHECK(*joined[1].actual_seq == 2);
    CHECK(*joined[2].actual_seq == 4);
    CHECK(joined[0].loop_ambiguous);
    // lateness measured against the chosen occurrence
    CHECK(joined[0].lateness_s() == 29050 - 29100);
}

TEST_CASE("missingness by operator") {
    std::vector<afc::AfcRecord> recs;
    // opA: trip t1 fully present, opB: trip t2 fully missing
    for (int i = 0; i < 4; ++i) {
        afc::AfcRecord a = rec("a" + std::to_string(i), 28800, "s1", "t1");
        a.operator_id = "opA";
        recs.push_back(a);
        afc::AfcRecord b = rec("b" + std::to_string(i), 28800, std::nullopt, "t2");
        b.operator_id = "opB";
        recs.push_back(b);
    }
    auto dist = afc::missingness_by_operator(recs);
    REQUIRE(dist.count("opA") == 1);
    REQUIRE(dist.count("opB") == 1);
    for (double r : dist["opA"]) CHECK(r == 0.0);
    for (double r : dist["opB"]) CHECK(r == 1.0);
}

TEST_CASE("lateness density") {
    gtfs::GtfsFeed feed = tiny_feed();
    std::vector<afc::AfcRecord> recs{
        rec("c1", 28800, "s1"),        // exactly on schedule: 0
        rec("c2", 28800 + 120, "s1"),  // +120
        rec("c3", 28800 - 45, "s1"),   // -45
    };
    auto [joined, drop] = afc::preprocess_and_join(recs, feed, afc::JoinMode::train);
    afc::Histogram h = afc::lateness_density(joined);
    CHECK(h.n == 3);
    CHECK(h.mean() == doctest::Approx((0.0 + 120.0 - 45.0) / 3.0).epsilon(1e-12));
    CHECK(h.bins[0] == 1);   // [0, 30)
    CHECK(h.bins[4] == 1);   // [120, 150)
    CHECK(h.bins[-2] == 1);  // [-60, -30)
    std::string j = h.to_json();
    CHECK(j.find("bin_width") != std::string::npos);
}
