#include "stopfill/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "stopfill/csv.hpp"
#include "stopfill/rng.hpp"

namespace stopfill::synth {

namespace {

constexpr std::uint64_t kLayoutTag = 0xA1;
constexpr std::uint64_t kLatenessTag = 0xA2;
constexpr std::uint64_t kCommuterTag = 0xA3;
constexpr std::uint64_t kOneTimeTag = 0xA4;
constexpr std::uint64_t kGeoTag = 0xA5;
constexpr std::uint64_t kMaskRandomTag = 0xB1;
constexpr std::uint64_t kMaskTripTag = 0xB2;

constexpr double kMetersPerDegLat = 111320.0;

double quantize(double deg) { return std::round(deg * 1e7) / 1e7; }

double meters_to_lat(double m) { return m / kMetersPerDegLat; }
double meters_to_lon(double m, double lat) {
    return m / (kMetersPerDegLat * std::cos(lat * M_PI / 180.0));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct RoutePlan {
    std::string route_id;
    std::string shape_id;
    std::string operator_id;
    std::vector<gtfs::Stop> stops;                   // in sequence order
    std::vector<std::pair<double, double>> shape_points;
    std::vector<int> departures;                     // seconds from midnight
};

void validate(const SynthConfig& cfg) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("synth: " + msg); };
    if (cfg.num_routes < 1) fail("num_routes must be >= 1");
    if (cfg.stops_per_route < 3) fail("stops_per_route must be >= 3");
    if (cfg.headway_s < 1) fail("headway_s must be >= 1");
    if (cfg.service_days < 1) fail("service_days must be >= 1");
    if (!cfg.start_date.valid()) fail("invalid start_date");
    if (cfg.service_end_s <= cfg.service_start_s) fail("service window is empty");
    if (cfg.headway_s > cfg.service_end_s - cfg.service_start_s)
        fail("infeasible: headway exceeds the service span");
    if (cfg.num_operators < 1) fail("num_operators must be >= 1");
    if (cfg.interstop_time_s < 1) fail("interstop_time_s must be >= 1");
    if (!(cfg.stop_spacing_min_m > 0.0) || cfg.stop_spacing_max_m < cfg.stop_spacing_min_m)
        fail("bad stop spacing range");
    if (cfg.num_commuters < 0) fail("num_commuters must be >= 0");
    if (cfg.trips_per_commuter_per_day < 1) fail("trips_per_commuter_per_day must be >= 1");
    if (cfg.one_time_traveler_fraction < 0.0 || cfg.one_time_traveler_fraction >= 1.0)
        fail("one_time_traveler_fraction must be in [0, 1)");
    if (cfg.attendance_prob < 0.0 || cfg.attendance_prob > 1.0)
        fail("attendance_prob must be in [0, 1]");
    if (cfg.missing_ratio < 0.0 || cfg.missing_ratio > 1.0)
        fail("missing_ratio must be in [0, 1]");
    int last_departure = cfg.service_end_s - (cfg.stops_per_route - 1) * cfg.interstop_time_s;
    if (last_departure < cfg.service_start_s)
        fail("infeasible: no trip fits inside the service window");
}

std::vector<RoutePlan> plan_routes(const SynthConfig& cfg, Rng& rng) {
    std::vector<RoutePlan> plans;
    plans.reserve(size_t(cfg.num_routes));
    int dep_last = cfg.service_end_s - (cfg.stops_per_route - 1) * cfg.interstop_time_s;
    for (int r = 0; r < cfg.num_routes; ++r) {
        RoutePlan plan;
        plan.route_id = "r" + std::to_string(r);
        plan.shape_id = "shp" + std::to_string(r);
        plan.operator_id = "op" + std::to_string(r % cfg.num_operators);

        double angle = 2.0 * M_PI * double(r) / double(cfg.num_routes) + rng.uniform(-0.1, 0.1);
        double lat = cfg.center_lat + meters_to_lat(rng.uniform(-150.0, 150.0));
        double lon = cfg.center_lon + meters_to_lon(rng.uniform(-150.0, 150.0), cfg.center_lat);
        std::pair<double, double> prev{0.0, 0.0};
        for (int k = 1; k <= cfg.stops_per_route; ++k) {
            gtfs::Stop stop;
            char id[32];
            std::snprintf(id, sizeof(id), "r%ds%02d", r, k);
            stop.stop_id = id;
            stop.name = "Route " + std::to_string(r) + " Stop " + std::to_string(k);
            stop.lat = quantize(lat);
            stop.lon = quantize(lon);
            if (k > 1) {
                // densify the segment between the previous and this stop
                int interior = rng.uniform_int(2, 4);
                for (int p = 1; p <= interior; ++p) {
                    double t = double(p) / double(interior + 1);
                    double jl = rng.uniform(-8.0, 8.0);
                    double plat = prev.first + (stop.lat - prev.first) * t + meters_to_lat(jl);
                    double plon = prev.second + (stop.lon - prev.second) * t +
                                  meters_to_lon(jl, cfg.center_lat);
                    plan.shape_points.emplace_back(quantize(plat), quantize(plon));
                }
            }
            plan.shape_points.emplace_back(stop.lat, stop.lon);
            prev = {stop.lat, stop.lon};
            plan.stops.push_back(std::move(stop));

            double spacing = rng.uniform(cfg.stop_spacing_min_m, cfg.stop_spacing_max_m);
            double bend = angle + rng.uniform(-0.25, 0.25);
            lat += meters_to_lat(spacing * std::sin(bend));
            lon += meters_to_lon(spacing * std::cos(bend), cfg.center_lat);
        }
        for (int dep = cfg.service_start_s; dep <= dep_last; dep += cfg.headway_s)
            plan.departures.push_back(dep);
        plans.push_back(std::move(plan));
    }
    return plans;
}

// Realized lateness per stop for every (route, day, departure).
// lateness[r][day][trip][stop_index]
using LatenessGrid = std::vector<std::vector<std::vector<std::vector<double>>>>;

LatenessGrid realize_lateness(const SynthConfig& cfg, const std::vector<RoutePlan>& plans,
                              Rng& rng) {
    const LatenessModel& lm = cfg.lateness;
    LatenessGrid grid(plans.size());
    for (size_t r = 0; r < plans.size(); ++r) {
        const RoutePlan& plan = plans[r];
        grid[r].resize(size_t(cfg.service_days));
        for (int day = 0; day < cfg.service_days; ++day) {
            auto& trips = grid[r][size_t(day)];
            trips.resize(plan.departures.size());
            for (size_t t = 0; t < plan.departures.size(); ++t) {
                std::vector<double>& late = trips[t];
                late.assign(size_t(cfg.stops_per_route), 0.0);
                if (lm.kind == LatenessModel::Kind::none) continue;
                double cum = 0.0;
                for (int k = 0; k < cfg.stops_per_route; ++k) {
                    int arr = plan.departures[t] + k * cfg.interstop_time_s;
                    int h = hour_of_day(arr);
                    if (lm.kind == LatenessModel::Kind::drift) {
                        double mu = lm.mu_per_stop_s * lm.hour_factor[size_t(h)];
                        cum += lm.sigma_s > 0.0 ? rng.normal(mu, lm.sigma_s) : mu;
                        late[size_t(k)] = cum;
                    } else {
                        double mu = lm.mu_by_hour[size_t(h)];
                        late[size_t(k)] =
                            lm.sigma_s > 0.0 ? rng.normal(mu, lm.sigma_s) : mu;
                    }
                }
            }
        }
    }
    return grid;
}

struct Boarding {
    std::string card_id;
    int route = 0;
    int day = 0;
    int trip = 0;        // index into plan.departures
    int stop_seq = 0;    // 1-based
    std::string traveler_type;
};

// First trip whose realized arrival at stop_seq is >= desired; falls back to
// the last trip of the day so attending commuters always board.
int catch_trip(const RoutePlan& plan, const std::vector<std::vector<double>>& day_lateness,
               int interstop_s, int stop_seq, double desired) {
    for (size_t t = 0; t < plan.departures.size(); ++t) {
        double realized = double(plan.departures[t] + (stop_seq - 1) * interstop_s) +
                          day_lateness[t][size_t(stop_seq - 1)];
        if (realized >= desired) return int(t);
    }
    return int(plan.departures.size()) - 1;
}

}  // namespace

const char* mechanism_name(Mechanism m) {
    return m == Mechanism::random ? "random" : "operator_biased";
}

bool parse_mechanism(const std::string& name, Mechanism& out) {
    if (name == "random") {
        out = Mechanism::random;
        return true;
    }
    if (name == "operator_biased") {
        out = Mechanism::operator_biased;
        return true;
    }
    return false;
}

const char* lateness_kind_name(LatenessModel::Kind k) {
    switch (k) {
        case LatenessModel::Kind::none: return "none";
        case LatenessModel::Kind::drift: return "drift";
        default: return "hourly";
    }
}

bool parse_lateness_kind(const std::string& name, LatenessModel::Kind& out) {
    if (name == "none") {
        out = LatenessModel::Kind::none;
        return true;
    }
    if (name == "drift") {
        out = LatenessModel::Kind::drift;
        return true;
    }
    if (name == "hourly") {
        out = LatenessModel::Kind::hourly;
        return true;
    }
    return false;
}

SynthCity generate(const SynthConfig& cfg) {
    validate(cfg);
    SeedSequence seq(cfg.seed);
    SynthCity city;

    Rng layout_rng = seq.stream(kLayoutTag);
    std::vector<RoutePlan> plans = plan_routes(cfg, layout_rng);

    // feed
    for (const RoutePlan& plan : plans) {
        for (const gtfs::Stop& s : plan.stops) city.feed.stops[s.stop_id] = s;
        gtfs::RouteShape shape;
        shape.shape_id = plan.shape_id;
        shape.points = plan.shape_points;
        shape.cum_dist = gtfs::cumulative_distance(shape.points);
        city.feed.shapes[plan.shape_id] = std::move(shape);
    }
    for (int day = 0; day < cfg.service_days; ++day) {
        Date date = cfg.start_date.plus_days(day);
        for (const RoutePlan& plan : plans) {
            for (size_t t = 0; t < plan.departures.size(); ++t) {
                gtfs::TripSchedule trip;
                trip.trip_id = plan.route_id + "_d" + std::to_string(plan.departures[t]);
                trip.route_id = plan.route_id;
                trip.service_date = date;
                trip.shape_id = plan.shape_id;
                trip.events.reserve(size_t(cfg.stops_per_route));
                for (int k = 1; k <= cfg.stops_per_route; ++k) {
                    gtfs::StopEvent ev;
                    ev.stop_id = plan.stops[size_t(k - 1)].stop_id;
                    ev.sequence = k;
                    ev.scheduled_arrival =
                        plan.departures[t] + (k - 1) * cfg.interstop_time_s;
                    trip.events.push_back(std::move(ev));
                }
                city.feed.trips[gtfs::TripKey{trip.trip_id, date}] = std::move(trip);
            }
        }
    }

    Rng lateness_rng = seq.stream(kLatenessTag);
    LatenessGrid lateness = realize_lateness(cfg, plans, lateness_rng);

    // commuter boardings
    std::vector<Boarding> boardings;
    Rng commuter_rng = seq.stream(kCommuterTag);
    int dep_last = cfg.service_end_s - (cfg.stops_per_route - 1) * cfg.interstop_time_s;
    for (int c = 0; c < cfg.num_commuters; ++c) {
        int route = int(commuter_rng.uniform_index(std::uint64_t(cfg.num_routes)));
        int home_stop = commuter_rng.uniform_int(1, cfg.stops_per_route - 1);
        std::vector<double> base_times(size_t(cfg.trips_per_commuter_per_day));
        for (double& t : base_times)
            t = commuter_rng.uniform(double(cfg.service_start_s), double(dep_last));
        std::sort(base_times.begin(), base_times.end());
        std::string card = "c" + std::to_string(c);
        for (int day = 0; day < cfg.service_days; ++day) {
            if (!commuter_rng.bernoulli(cfg.attendance_prob)) continue;
            for (double base : base_times) {
                double desired = base + commuter_rng.normal(0.0, 600.0);
                int trip = catch_trip(plans[size_t(route)], lateness[size_t(route)][size_t(day)],
                                      cfg.interstop_time_s, home_stop, desired);
                boardings.push_back({card, route, day, trip, home_stop, "commuter"});
            }
        }
    }

    // one-time travelers, sized so they form the requested fraction of all
    // boardings: n_ot = f / (1 - f) * n_commuter
    Rng onetime_rng = seq.stream(kOneTimeTag);
    double f = cfg.one_time_traveler_fraction;
    std::int64_t n_onetime =
        f > 0.0 ? std::llround(f / (1.0 - f) * double(boardings.size())) : 0;
    for (std::int64_t i = 0; i < n_onetime; ++i) {
        Boarding b;
        b.card_id = "ot" + std::to_string(i);
        b.route = int(onetime_rng.uniform_index(std::uint64_t(cfg.num_routes)));
        b.day = int(onetime_rng.uniform_index(std::uint64_t(cfg.service_days)));
        b.trip = int(onetime_rng.uniform_index(plans[size_t(b.route)].departures.size()));
        b.stop_seq = onetime_rng.uniform_int(1, cfg.stops_per_route - 1);
        b.traveler_type = "onetime";
        boardings.push_back(std::move(b));
    }

    // materialize AFC records plus pre-sorted truth payloads
    struct Pending {
        afc::AfcRecord rec;
        int true_seq;
        double lateness_s;
    };
    std::vector<Pending> pending;
    pending.reserve(boardings.size());
    for (const Boarding& b : boardings) {
        const RoutePlan& plan = plans[size_t(b.route)];
        double late = lateness[size_t(b.route)][size_t(b.day)][size_t(b.trip)]
                              [size_t(b.stop_seq - 1)];
        int sched = plan.departures[size_t(b.trip)] + (b.stop_seq - 1) * cfg.interstop_time_s;
        Pending p;
        p.rec.card_id = b.card_id;
        p.rec.trip_id = plan.route_id + "_d" + std::to_string(plan.departures[size_t(b.trip)]);
        p.rec.service_date = cfg.start_date.plus_days(b.day);
        p.rec.boarding_ts = sched + int(std::llround(late));
        p.rec.boarding_stop_id = plan.stops[size_t(b.stop_seq - 1)].stop_id;
        p.rec.operator_id = plan.operator_id;
        p.rec.traveler_type = b.traveler_type;
        p.true_seq = b.stop_seq;
        p.lateness_s = late;
        pending.push_back(std::move(p));
    }
    std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        if (a.rec.service_date != b.rec.service_date) return a.rec.service_date < b.rec.service_date;
        if (a.rec.boarding_ts != b.rec.boarding_ts) return a.rec.boarding_ts < b.rec.boarding_ts;
        if (a.rec.card_id != b.rec.card_id) return a.rec.card_id < b.rec.card_id;
        return a.rec.trip_id < b.rec.trip_id;
    });
    std::vector<afc::AfcRecord> unmasked;
    unmasked.reserve(pending.size());
    city.truth.reserve(pending.size());
    for (size_t i = 0; i < pending.size(); ++i) {
        TruthRow t;
        t.record_index = std::int64_t(i);
        t.true_stop_id = *pending[i].rec.boarding_stop_id;
        t.true_sequence = pending[i].true_seq;
        t.lateness_s = pending[i].lateness_s;
        city.truth.push_back(std::move(t));
        unmasked.push_back(std::move(pending[i].rec));
    }
    city.afc = mask(unmasked, cfg.missing_ratio, cfg.mechanism, cfg.seed);

    // geospatial points scattered inside the match buffer of each route
    Rng geo_rng = seq.stream(kGeoTag);
    for (const RoutePlan& plan : plans) {
        const gtfs::RouteShape& shape = city.feed.shapes[plan.shape_id];
        double km = shape.total_length_m() / 1000.0;
        double mult = geo_rng.uniform(0.5, 1.5);
        const std::pair<geo::Category, double> rates[3] = {
            {geo::Category::address, cfg.addresses_per_km},
            {geo::Category::street_light, cfg.street_lights_per_km},
            {geo::Category::traffic_light, cfg.traffic_lights_per_km},
        };
        for (const auto& [cat, per_km] : rates) {
            std::int64_t count = std::llround(km * per_km * mult);
            for (std::int64_t i = 0; i < count; ++i) {
                double target = geo_rng.uniform() * shape.total_length_m();
                auto it = std::upper_bound(shape.cum_dist.begin(), shape.cum_dist.end(), target);
                size_t seg = std::min(shape.points.size() - 2,
                                      size_t(std::max<std::ptrdiff_t>(
                                          0, it - shape.cum_dist.begin() - 1)));
                double seg_len = shape.cum_dist[seg + 1] - shape.cum_dist[seg];
                double t = seg_len > 0.0 ? (target - shape.cum_dist[seg]) / seg_len : 0.0;
                double lat = shape.points[seg].first +
                             (shape.points[seg + 1].first - shape.points[seg].first) * t;
                double lon = shape.points[seg].second +
                             (shape.points[seg + 1].second - shape.points[seg].second) * t;
                double off_lat = geo_rng.uniform(-40.0, 40.0);
                double off_lon = geo_rng.uniform(-40.0, 40.0);
                geo::GeoPoint pt;
                pt.lat = quantize(lat + meters_to_lat(off_lat));
                pt.lon = quantize(lon + meters_to_lon(off_lon, cfg.center_lat));
                pt.category = cat;
                city.geo_points.push_back(pt);
            }
        }
    }
    return city;
}

std::vector<afc::AfcRecord> mask(const std::vector<afc::AfcRecord>& records, double ratio,
                                 Mechanism mechanism, std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("mask: ratio must be in [0, 1]");
    std::vector<afc::AfcRecord> out = records;
    if (ratio == 0.0) return out;
    if (ratio == 1.0) {
        for (afc::AfcRecord& r : out) r.boarding_stop_id.reset();
        return out;
    }
    SeedSequence seq(seed);
    if (mechanism == Mechanism::random) {
        Rng rng = seq.stream(kMaskRandomTag);
        for (afc::AfcRecord& r : out)
            if (rng.bernoulli(ratio)) r.boarding_stop_id.reset();
        return out;
    }

    // operator_biased: one Beta-distributed erase probability per trip
    // instance; concentration cycles per operator so some operators report
    // far more erratically than others
    static const double kConcentration[3] = {0.8, 3.0, 12.0};
    std::map<std::string, int> operator_index;
    for (const afc::AfcRecord& r : out) operator_index.emplace(r.operator_id, 0);
    int oi = 0;
    for (auto& [op, idx] : operator_index) idx = oi++;

    struct TripMask {
        double p;
        Rng rng;
    };
    std::unordered_map<std::string, TripMask> trips;
    for (afc::AfcRecord& r : out) {
        std::string key = r.trip_id + "@" + r.service_date.to_string();
        auto it = trips.find(key);
        if (it == trips.end()) {
            Rng trng = seq.stream(kMaskTripTag ^ fnv1a(key));
            double c = kConcentration[size_t(operator_index[r.operator_id]) % 3];
            double p = trng.beta(ratio * c, (1.0 - ratio) * c);
            it = trips.emplace(key, TripMask{p, std::move(trng)}).first;
        }
        if (it->second.rng.bernoulli(it->second.p)) r.boarding_stop_id.reset();
    }
    return out;
}

void write_truth_csv(const std::vector<TruthRow>& truth, const std::filesystem::path& path) {
    CsvWriter w(path);
    w.write_row({"record_index", "true_stop_id", "true_sequence", "lateness_s"});
    char buf[40];
    for (const TruthRow& t : truth) {
        std::snprintf(buf, sizeof(buf), "%.10g", t.lateness_s);
        w.write_row({std::to_string(t.record_index), t.true_stop_id,
                     std::to_string(t.true_sequence), buf});
    }
}

std::vector<TruthRow> load_truth_csv(const std::filesystem::path& path) {
    CsvReader r(path);
    int c_idx = r.col("record_index"), c_stop = r.col("true_stop_id");
    int c_seq = r.col("true_sequence"), c_late = r.col("lateness_s");
    if (c_idx < 0 || c_stop < 0 || c_seq < 0 || c_late < 0)
        throw std::runtime_error("ground truth csv: missing required columns");
    std::vector<TruthRow> out;
    while (r.next()) {
        TruthRow t;
        t.record_index = std::stoll(r.field(c_idx));
        t.true_stop_id = r.field(c_stop);
        t.true_sequence = std::stoi(r.field(c_seq));
        t.lateness_s = std::stod(r.field(c_late));
        out.push_back(std::move(t));
    }
    return out;
}

void write_city(const SynthCity& city, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "gtfs");

    std::vector<const gtfs::Stop*> stops;
    for (const auto& [id, s] : city.feed.stops) stops.push_back(&s);
    std::sort(stops.begin(), stops.end(),
              [](const gtfs::Stop* a, const gtfs::Stop* b) { return a->stop_id < b->stop_id; });
    {
        CsvWriter w(dir / "gtfs" / "stops.txt");
        w.write_row({"stop_id", "stop_name", "stop_lat", "stop_lon"});
        char lat[32], lon[32];
        for (const gtfs::Stop* s : stops) {
            std::snprintf(lat, sizeof(lat), "%.7f", s->lat);
            std::snprintf(lon, sizeof(lon), "%.7f", s->lon);
            w.write_row({s->stop_id, s->name, lat, lon});
        }
    }
    {
        CsvWriter w(dir / "gtfs" / "shapes.txt");
        w.write_row({"shape_id", "shape_pt_lat", "shape_pt_lon", "shape_pt_sequence"});
        std::vector<const gtfs::RouteShape*> shapes;
        for (const auto& [id, s] : city.feed.shapes) shapes.push_back(&s);
        std::sort(shapes.begin(), shapes.end(), [](const gtfs::RouteShape* a,
                                                   const gtfs::RouteShape* b) {
            return a->shape_id < b->shape_id;
        });
        char lat[32], lon[32];
        for (const gtfs::RouteShape* s : shapes)
            for (size_t i = 0; i < s->points.size(); ++i) {
                std::snprintf(lat, sizeof(lat), "%.7f", s->points[i].first);
                std::snprintf(lon, sizeof(lon), "%.7f", s->points[i].second);
                w.write_row({s->shape_id, lat, lon, std::to_string(i + 1)});
            }
    }

    // one canonical copy of each trip (they repeat daily); service span from
    // the expanded dates
    Date first_date{9999, 12, 31}, last_date{1, 1, 1};
    std::map<std::string, const gtfs::TripSchedule*> canonical;
    for (const auto& [key, trip] : city.feed.trips) {
        first_date = std::min(first_date, key.service_date);
        last_date = std::max(last_date, key.service_date);
        auto it = canonical.find(trip.trip_id);
        if (it == canonical.end() || trip.service_date < it->second->service_date)
            canonical[trip.trip_id] = &trip;
    }
    {
        CsvWriter w(dir / "gtfs" / "calendar.txt");
        w.write_row({"service_id", "sunday", "monday", "tuesday", "wednesday", "thursday",
                     "friday", "saturday", "start_date", "end_date"});
        w.write_row({"all", "1", "1", "1", "1", "1", "1", "1", first_date.to_string(),
                     last_date.to_string()});
    }
    {
        CsvWriter w(dir / "gtfs" / "trips.txt");
        w.write_row({"trip_id", "route_id", "service_id", "shape_id"});
        for (const auto& [id, trip] : canonical)
            w.write_row({trip->trip_id, trip->route_id, "all", trip->shape_id});
    }
    {
        CsvWriter w(dir / "gtfs" / "stop_times.txt");
        w.write_row({"trip_id", "arrival_time", "stop_id", "stop_sequence"});
        for (const auto& [id, trip] : canonical)
            for (const gtfs::StopEvent& ev : trip->events)
                w.write_row({trip->trip_id, clock_to_string(ev.scheduled_arrival), ev.stop_id,
                             std::to_string(ev.sequence)});
    }

    afc::write_afc(dir / "afc.csv", city.afc);
    geo::write_geo_csv(dir / "geo.csv", city.geo_points);
    write_truth_csv(city.truth, dir / "ground_truth.csv");
}

nlohmann::json SynthConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["num_routes"] = num_routes;
    j["stops_per_route"] = stops_per_route;
    j["headway_s"] = headway_s;
    j["service_days"] = service_days;
    j["start_date"] = start_date.to_string();
    j["service_start_s"] = service_start_s;
    j["service_end_s"] = service_end_s;
    j["num_operators"] = num_operators;
    j["interstop_time_s"] = interstop_time_s;
    j["stop_spacing_min_m"] = stop_spacing_min_m;
    j["stop_spacing_max_m"] = stop_spacing_max_m;
    j["lateness"] = {{"kind", lateness_kind_name(lateness.kind)},
                     {"mu_per_stop_s", lateness.mu_per_stop_s},
                     {"sigma_s", lateness.sigma_s},
                     {"hour_factor", lateness.hour_factor},
                     {"mu_by_hour", lateness.mu_by_hour}};
    j["num_commuters"] = num_commuters;
    j["trips_per_commuter_per_day"] = trips_per_commuter_per_day;
    j["one_time_traveler_fraction"] = one_time_traveler_fraction;
    j["attendance_prob"] = attendance_prob;
    j["missing_ratio"] = missing_ratio;
    j["mechanism"] = mechanism_name(mechanism);
    j["addresses_per_km"] = addresses_per_km;
    j["street_lights_per_km"] = street_lights_per_km;
    j["traffic_lights_per_km"] = traffic_lights_per_km;
    j["center_lat"] = center_lat;
    j["center_lon"] = center_lon;
    return j;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig cfg;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", cfg.seed);
    get("num_routes", cfg.num_routes);
    get("stops_per_route", cfg.stops_per_route);
    get("headway_s", cfg.headway_s);
    get("service_days", cfg.service_days);
    if (j.contains("start_date")) {
        cfg.start_date = parse_date(j.at("start_date").get<std::string>());
        if (!cfg.start_date.valid())
            throw std::invalid_argument("synth config: bad start_date");
    }
    get("service_start_s", cfg.service_start_s);
    get("service_end_s", cfg.service_end_s);
    get("num_operators", cfg.num_operators);
    get("interstop_time_s", cfg.interstop_time_s);
    get("stop_spacing_min_m", cfg.stop_spacing_min_m);
    get("stop_spacing_max_m", cfg.stop_spacing_max_m);
    if (j.contains("lateness")) {
        const nlohmann::json& l = j.at("lateness");
        if (l.contains("kind") &&
            !parse_lateness_kind(l.at("kind").get<std::string>(), cfg.lateness.kind))
            throw std::invalid_argument("synth config: bad lateness kind");
        if (l.contains("mu_per_stop_s")) cfg.lateness.mu_per_stop_s = l.at("mu_per_stop_s");
        if (l.contains("sigma_s")) cfg.lateness.sigma_s = l.at("sigma_s");
        if (l.contains("hour_factor"))
            cfg.lateness.hour_factor = l.at("hour_factor").get<std::array<double, 24>>();
        if (l.contains("mu_by_hour"))
            cfg.lateness.mu_by_hour = l.at("mu_by_hour").get<std::array<double, 24>>();
    }
    get("num_commuters", cfg.num_commuters);
    get("trips_per_commuter_per_day", cfg.trips_per_commuter_per_day);
    get("one_time_traveler_fraction", cfg.one_time_traveler_fraction);
    get("attendance_prob", cfg.attendance_prob);
    get("missing_ratio", cfg.missing_ratio);
    if (j.contains("mechanism") &&
        !parse_mechanism(j.at("mechanism").get<std::string>(), cfg.mechanism))
        throw std::invalid_argument("synth config: bad mechanism");
    get("addresses_per_km", cfg.addresses_per_km);
    get("street_lights_per_km", cfg.street_lights_per_km);
    get("traffic_lights_per_km", cfg.traffic_lights_per_km);
    get("center_lat", cfg.center_lat);
    get("center_lon", cfg.center_lon);
    return cfg;
}

}  // namespace stopfill::synth
