#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "stopfill/baselines.hpp"
#include "stopfill/rng.hpp"

using namespace stopfill;

namespace {

std::string stop_name(int route, int seq) {
    return "r" + std::to_string(route) + "s" + std::to_string(seq);
}

// one 6-stop trip per route, every 5 minutes from 08:00
struct World {
    gtfs::TripSchedule trips[3];

    World() {
        for (int r = 0; r < 3; ++r) {
            gtfs::TripSchedule& t = trips[r];
            t.trip_id = "t" + std::to_string(r);
            t.route_id = "r" + std::to_string(r);
            t.service_date = Date{2024, 3, 4};
            for (int s = 1; s <= 6; ++s)
                t.events.push_back({stop_name(r, s), s, 28800 + 300 * (s - 1), {}});
        }
    }

    afc::JoinedRecord rec(const std::string& card, int route, int ts,
                          std::optional<int> stop_seq = {}, int day = 4) const {
        afc::JoinedRecord j;
        j.afc.card_id = card;
        j.afc.trip_id = trips[route].trip_id;
        j.afc.service_date = Date{2024, 3, day};
        j.afc.boarding_ts = ts;
        j.afc.operator_id = "op";
        j.trip = &trips[route];
        if (stop_seq) {
            j.afc.boarding_stop_id = stop_name(route, *stop_seq);
            j.actual_seq = *stop_seq;
        }
        j.predicted_seq = gtfs::scheduled_position(trips[route], ts);
        return j;
    }
};

learn::Imputation fallback_to(const gtfs::TripSchedule& trip, int seq) {
    learn::Imputation imp;
    imp.sequence = seq;
    imp.stop_id = trip.events[size_t(seq) - 1].stop_id;
    imp.d_hat = 0;
    return imp;
}

// reference implementation of the history tie rules
std::optional<std::string> brute_history(const std::vector<afc::JoinedRecord>& train,
                                         const std::string& card, const std::string& route,
                                         int ts, int bucket_s) {
    int bucket = (ts / bucket_s) % std::max(1, 86400 / bucket_s);
    struct Use {
        std::int64_t count = 0;
        std::int64_t last = 0;
    };
    std::map<std::string, Use> uses;
    for (const afc::JoinedRecord& r : train) {
        if (!r.afc.boarding_stop_id || r.afc.card_id != card || r.trip->route_id != route)
            continue;
        if ((r.afc.boarding_ts / bucket_s) % std::max(1, 86400 / bucket_s) != bucket) continue;
        Use& u = uses[*r.afc.boarding_stop_id];
        ++u.count;
        u.last = std::max(u.last, r.afc.service_date.days_since_epoch() * 86400 +
                                      r.afc.boarding_ts);
    }
    if (uses.empty()) return std::nullopt;
    const std::string* best = nullptr;
    Use best_use;
    for (const auto& [stop, u] : uses)
        if (!best || u.count > best_use.count ||
            (u.count == best_use.count && u.last > best_use.last)) {
            best = &stop;
            best_use = u;
        }
    return *best;
}

}  // namespace

TEST_CASE("schedule baseline returns the scheduled position") {
    World w;
    afc::JoinedRecord j = w.rec("c1", 0, 28800 + 650);  // between stops 3 and 4
    REQUIRE(j.predicted_seq == 3);
    baselines::BaselineResult r = baselines::schedule_based_predict(j);
    CHECK(r.sequence == 3);
    CHECK(r.stop_id == stop_name(0, 3));
    CHECK_FALSE(r.used_fallback);
}

TEST_CASE("history lookup matches a brute force rebuild") {
    World w;
    Rng rng(71);
    std::vector<afc::JoinedRecord> train;
    std::vector<std::string> cards{"a", "b", "c", "d"};
    for (int i = 0; i < 300; ++i) {
        int route = int(rng.uniform_index(3));
        int ts = 21600 + int(rng.uniform_index(36000));  // 06:00 .. 16:00
        int day = 4 + int(rng.uniform_index(5));
        int seq = 1 + int(rng.uniform_index(6));
        train.push_back(w.rec(cards[rng.uniform_index(cards.size())], route, ts, seq, day));
    }
    baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
    CHECK(idx.bucket_seconds() == 3600);

    int hits = 0;
    for (int q = 0; q < 200; ++q) {
        const std::string& card = cards[rng.uniform_index(cards.size())];
        int route = int(rng.uniform_index(3));
        int ts = 21600 + int(rng.uniform_index(36000));
        std::optional<std::string> got =
            idx.lookup(card, "r" + std::to_string(route), ts);
        std::optional<std::string> want =
            brute_history(train, card, "r" + std::to_string(route), ts, 3600);
        CHECK(got == want);
        if (got) ++hits;
    }
    CHECK(hits > 0);
}

TEST_CASE("history tie rules") {
    World w;
    // card x, route 0, all within the 08:00 bucket
    std::vector<afc::JoinedRecord> train;

    SUBCASE("higher count wins") {
        train.push_back(w.rec("x", 0, 28810, 2, 4));
        train.push_back(w.rec("x", 0, 28820, 2, 5));
        train.push_back(w.rec("x", 0, 28830, 5, 6));
        baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
        CHECK(idx.lookup("x", "r0", 28900) == stop_name(0, 2));
    }

    SUBCASE("count tie goes to the most recent boarding") {
        train.push_back(w.rec("x", 0, 28810, 2, 4));
        train.push_back(w.rec("x", 0, 28820, 5, 6));  // later day
        baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
        CHECK(idx.lookup("x", "r0", 28900) == stop_name(0, 5));
    }

    SUBCASE("full tie goes to the smallest stop id") {
        train.push_back(w.rec("x", 0, 28810, 4, 4));
        train.push_back(w.rec("x", 0, 28810, 2, 4));  // same count, same instant
        baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
        CHECK(idx.lookup("x", "r0", 28900) == stop_name(0, 2));
    }

    SUBCASE("buckets separate times of day") {
        train.push_back(w.rec("x", 0, 28810, 2, 4));   // 08:00 bucket
        train.push_back(w.rec("x", 0, 50000, 5, 4));   // 13:00 bucket
        baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
        CHECK(idx.lookup("x", "r0", 29000) == stop_name(0, 2));
        CHECK(idx.lookup("x", "r0", 50300) == stop_name(0, 5));
        CHECK_FALSE(idx.lookup("x", "r0", 40000).has_value());
        CHECK_FALSE(idx.lookup("y", "r0", 29000).has_value());
        CHECK_FALSE(idx.lookup("x", "r1", 29000).has_value());
    }

    SUBCASE("records without stops are ignored") {
        train.push_back(w.rec("x", 0, 28810));
        baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
        CHECK(idx.size() == 0);
    }
}

TEST_CASE("history predictor falls back to the model") {
    World w;
    std::vector<afc::JoinedRecord> train{w.rec("x", 0, 28810, 4, 4)};
    baselines::HistoryIndex idx = baselines::HistoryIndex::build(train);
    learn::Imputation ml = fallback_to(w.trips[0], 1);

    afc::JoinedRecord known = w.rec("x", 0, 28900);
    baselines::BaselineResult hit = baselines::history_predict(known, idx, ml);
    CHECK(hit.stop_id == stop_name(0, 4));
    CHECK(hit.sequence == 4);
    CHECK_FALSE(hit.used_fallback);

    afc::JoinedRecord unknown = w.rec("z", 0, 28900);
    baselines::BaselineResult miss = baselines::history_predict(unknown, idx, ml);
    CHECK(miss.used_fallback);
    CHECK(miss.stop_id == stop_name(0, 1));
    CHECK(miss.sequence == 1);
}

TEST_CASE("temporal closeness matches a brute force scan") {
    World w;
    Rng rng(81);
    learn::Imputation ml = fallback_to(w.trips[1], 2);
    for (int trial = 0; trial < 120; ++trial) {
        int n = 1 + int(rng.uniform_index(8));
        std::vector<afc::JoinedRecord> others;
        for (int i = 0; i < n; ++i) {
            bool labeled = rng.uniform() < 0.8;
            int ts = 28800 + int(rng.uniform_index(1200));
            others.push_back(labeled ? w.rec("o" + std::to_string(i), 1, ts,
                                             1 + int(rng.uniform_index(6)))
                                     : w.rec("o" + std::to_string(i), 1, ts));
        }
        afc::JoinedRecord target = w.rec("me", 1, 28800 + int(rng.uniform_index(1200)));
        int threshold = 30;

        const afc::JoinedRecord* want = nullptr;
        for (const afc::JoinedRecord& o : others) {
            if (!o.afc.boarding_stop_id) continue;
            int diff = std::abs(o.afc.boarding_ts - target.afc.boarding_ts);
            if (diff >= threshold) continue;
            if (!want || diff < std::abs(want->afc.boarding_ts - target.afc.boarding_ts) ||
                (diff == std::abs(want->afc.boarding_ts - target.afc.boarding_ts) &&
                 o.afc.boarding_ts < want->afc.boarding_ts))
                want = &o;
        }
        baselines::BaselineResult got =
            baselines::temporal_closeness_predict(target, others, ml, threshold);
        if (want) {
            CHECK_FALSE(got.used_fallback);
            CHECK(got.stop_id == *want->afc.boarding_stop_id);
        } else {
            CHECK(got.used_fallback);
            CHECK(got.stop_id == ml.stop_id);
        }
    }
}

TEST_CASE("temporal closeness boundaries") {
    World w;
    learn::Imputation ml = fallback_to(w.trips[0], 6);
    afc::JoinedRecord target = w.rec("me", 0, 29000);

    std::vector<afc::JoinedRecord> at_limit{w.rec("o", 0, 29040, 3)};
    baselines::BaselineResult r1 =
        baselines::temporal_closeness_predict(target, at_limit, ml, 40);
    CHECK(r1.used_fallback);  // |diff| == threshold is outside the window

    std::vector<afc::JoinedRecord> inside{w.rec("o", 0, 29039, 3)};
    baselines::BaselineResult r2 =
        baselines::temporal_closeness_predict(target, inside, ml, 40);
    CHECK_FALSE(r2.used_fallback);
    CHECK(r2.stop_id == stop_name(0, 3));
    CHECK(r2.sequence == 3);

    // equal distance on both sides: earlier boarding wins
    std::vector<afc::JoinedRecord> tie{w.rec("late", 0, 29010, 4),
                                       w.rec("early", 0, 28990, 2)};
    baselines::BaselineResult r3 = baselines::temporal_closeness_predict(target, tie, ml, 30);
    CHECK(r3.stop_id == stop_name(0, 2));

    std::vector<afc::JoinedRecord> empty;
    CHECK(baselines::temporal_closeness_predict(target, empty, ml, 30).used_fallback);
}

TEST_CASE("frequency table masses") {
    World w;
    std::vector<afc::JoinedRecord> train{
        w.rec("a", 0, 28800, 1), w.rec("b", 0, 28810, 1), w.rec("c", 0, 28820, 1),
        w.rec("d", 0, 28830, 3),
    };
    baselines::FrequencyTable t = baselines::FrequencyTable::build(train);
    CHECK(t.mass(stop_name(0, 1)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(t.mass(stop_name(0, 3)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(t.mass("elsewhere") == 0.0);
    double total = 0.0;
    for (const auto& [stop, m] : t.masses()) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    std::vector<afc::JoinedRecord> unlabeled{w.rec("a", 0, 28800)};
    CHECK_THROWS_AS(baselines::FrequencyTable::build(unlabeled), std::invalid_argument);
}

TEST_CASE("semi random sampling") {
    World w;
    afc::JoinedRecord target = w.rec("me", 2, 29000);

    SUBCASE("deterministic per seed and record index") {
        std::vector<afc::JoinedRecord> train{w.rec("a", 2, 28800, 1), w.rec("b", 2, 28810, 4)};
        baselines::FrequencyTable t = baselines::FrequencyTable::build(train);
        baselines::BaselineResult a = baselines::semi_random_predict(target, 17, t, 5);
        baselines::BaselineResult b = baselines::semi_random_predict(target, 17, t, 5);
        CHECK(a.stop_id == b.stop_id);
        CHECK(a.sequence == b.sequence);
        bool any_differs = false;
        for (std::uint64_t i = 0; i < 64 && !any_differs; ++i)
            any_differs = baselines::semi_random_predict(target, i, t, 5).stop_id != a.stop_id;
        CHECK(any_differs);
    }

    SUBCASE("restriction renormalizes over the trip") {
        // global table: r2s1 0.2, r2s2 0.2, r0s1 0.6; trip r2 sees only the first two
        std::vector<afc::JoinedRecord> train;
        for (int i = 0; i < 2; ++i) train.push_back(w.rec("a", 2, 28800, 1));
        for (int i = 0; i < 2; ++i) train.push_back(w.rec("a", 2, 28800, 2));
        for (int i = 0; i < 6; ++i) train.push_back(w.rec("a", 0, 28800, 1));
        baselines::FrequencyTable t = baselines::FrequencyTable::build(train);

        const int n = 20000;
        int first = 0;
        for (int i = 0; i < n; ++i) {
            baselines::BaselineResult r =
                baselines::semi_random_predict(target, std::uint64_t(i), t, 9);
            if (r.stop_id == stop_name(2, 1)) ++first;
            else CHECK(r.stop_id == stop_name(2, 2));
        }
        double p = double(first) / n;
        double sigma = std::sqrt(0.5 * 0.5 / n);
        CHECK(std::fabs(p - 0.5) <= 3 * sigma);
    }

    SUBCASE("zero on-trip mass falls back to uniform over the trip") {
        std::vector<afc::JoinedRecord> train{w.rec("a", 0, 28800, 1)};  // mass on route 0 only
        baselines::FrequencyTable t = baselines::FrequencyTable::build(train);
        const int n = 30000;
        std::map<std::string, int> counts;
        for (int i = 0; i < n; ++i)
            ++counts[baselines::semi_random_predict(target, std::uint64_t(i), t, 3).stop_id];
        CHECK(counts.size() == 6);
        double sigma = std::sqrt((1.0 / 6) * (5.0 / 6) / n);
        for (const auto& [stop, c] : counts)
            CHECK(std::fabs(double(c) / n - 1.0 / 6) <= 3 * sigma);
    }

    SUBCASE("self match rate equals the sum of squared masses") {
        // draws of both the actual stop and the prediction from p = (.5, .3, .2)
        std::vector<afc::JoinedRecord> train;
        for (int i = 0; i < 5; ++i) train.push_back(w.rec("a", 2, 28800, 1));
        for (int i = 0; i < 3; ++i) train.push_back(w.rec("a", 2, 28800, 2));
        for (int i = 0; i < 2; ++i) train.push_back(w.rec("a", 2, 28800, 3));
        baselines::FrequencyTable t = baselines::FrequencyTable::build(train);

        const int n = 100000;
        Rng actual_rng(4242);
        int match = 0;
        for (int i = 0; i < n; ++i) {
            double u = actual_rng.uniform();
            std::string actual = u < 0.5 ? stop_name(2, 1)
                                : u < 0.8 ? stop_name(2, 2)
                                          : stop_name(2, 3);
            baselines::BaselineResult r =
                baselines::semi_random_predict(target, std::uint64_t(i), t, 77);
            if (r.stop_id == actual) ++match;
        }
        double expect = 0.5 * 0.5 + 0.3 * 0.3 + 0.2 * 0.2;  // 0.38
        double sigma = std::sqrt(expect * (1 - expect) / n);
        CHECK(std::fabs(double(match) / n - expect) <= 3 * sigma);
    }

    SUBCASE("unrestricted sampling may leave the trip") {
        std::vector<afc::JoinedRecord> train{w.rec("a", 0, 28800, 2)};
        baselines::FrequencyTable t = baselines::FrequencyTable::build(train);
        baselines::BaselineResult r =
            baselines::semi_random_predict(target, 0, t, 5, false);
        CHECK(r.stop_id == stop_name(0, 2));  // only stop with mass
        CHECK(r.sequence == -1);              // not on the r2 trip
    }
}
