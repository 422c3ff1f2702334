#include "stopfill/gtfs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "stopfill/csv.hpp"
#include "json.hpp"

namespace stopfill::gtfs {

int TripSchedule::find_stop_sequence(const std::string& stop_id, int not_before) const {
    int first = -1;
    for (const StopEvent& ev : events) {
        if (ev.stop_id != stop_id) continue;
        if (first < 0) first = ev.sequence;
        if (ev.scheduled_arrival >= not_before) return ev.sequence;
    }
    return first;
}

bool TripSchedule::stop_repeats(const std::string& stop_id) const {
    int n = 0;
    for (const StopEvent& ev : events)
        if (ev.stop_id == stop_id && ++n > 1) return true;
    return false;
}

std::int64_t ParseReport::total() const {
    std::int64_t n = 0;
    for (const auto& [file, reasons] : dropped)
        for (const auto& [reason, count] : reasons) n += count;
    return n;
}

std::string ParseReport::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [file, reasons] : dropped) {
        nlohmann::json per_file = nlohmann::json::object();
        for (const auto& [reason, count] : reasons) per_file[reason] = count;
        j[file] = per_file;
    }
    j["total_dropped"] = total();
    return j.dump(2);
}

const TripSchedule* GtfsFeed::find_trip(const std::string& trip_id, const Date& d) const {
    auto it = trips.find(TripKey{trip_id, d});
    return it == trips.end() ? nullptr : &it->second;
}

const RouteShape* GtfsFeed::find_shape(const std::string& shape_id) const {
    auto it = shapes.find(shape_id);
    return it == shapes.end() ? nullptr : &it->second;
}

const Stop* GtfsFeed::find_stop(const std::string& stop_id) const {
    auto it = stops.find(stop_id);
    return it == stops.end() ? nullptr : &it->second;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusM = 6371000.0;
    constexpr double kDeg = M_PI / 180.0;
    double dlat = (lat2 - lat1) * kDeg;
    double dlon = (lon2 - lon1) * kDeg;
    double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) *
                   std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<double> cumulative_distance(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> cum(points.size(), 0.0);
    for (size_t i = 1; i < points.size(); ++i) {
        cum[i] = cum[i - 1] + haversine_m(points[i - 1].first, points[i - 1].second,
                                          points[i].first, points[i].second);
    }
    return cum;
}

namespace {

CsvReader open_required(const std::filesystem::path& dir, const char* name) {
    std::filesystem::path p = dir / name;
    if (!std::filesystem::exists(p))
        throw std::runtime_error("missing mandatory GTFS file: " + p.string());
    CsvReader reader(p);
    if (!reader.ok()) throw std::runtime_error("cannot read GTFS file: " + p.string());
    return reader;
}

struct RawStopTime {
    int sequence;
    int arrival;
    std::string stop_id;
    std::optional<double> shape_dist;
};

struct RawTrip {
    std::string route_id;
    std::string service_id;
    std::string shape_id;
};

}  // namespace

GtfsFeed parse_feed(const std::filesystem::path& directory, ParseReport* report) {
    GtfsFeed feed;
    ParseReport local;
    ParseReport& rep = report ? *report : local;

    {
        CsvReader r = open_required(directory, "stops.txt");
        int c_id = r.col("stop_id"), c_name = r.col("stop_name");
        int c_lat = r.col("stop_lat"), c_lon = r.col("stop_lon");
        if (c_id < 0 || c_lat < 0 || c_lon < 0)
            throw std::runtime_error("stops.txt lacks required columns");
        while (r.next()) {
            Stop s;
            s.stop_id = r.field(c_id);
            s.name = r.field(c_name);
            try {
                s.lat = std::stod(r.field(c_lat));
                s.lon = std::stod(r.field(c_lon));
            } catch (...) {
                rep.add("stops.txt", "bad_coordinate");
                continue;
            }
            if (s.stop_id.empty()) {
                rep.add("stops.txt", "missing_stop_id");
                continue;
            }
            if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0) {
                rep.add("stops.txt", "coordinate_out_of_range");
                continue;
            }
            if (!feed.stops.emplace(s.stop_id, s).second) rep.add("stops.txt", "duplicate_stop_id");
        }
    }

    {
        CsvReader r = open_required(directory, "shapes.txt");
        int c_id = r.col("shape_id"), c_lat = r.col("shape_pt_lat"), c_lon = r.col("shape_pt_lon");
        int c_seq = r.col("shape_pt_sequence");
        if (c_id < 0 || c_lat < 0 || c_lon < 0 || c_seq < 0)
            throw std::runtime_error("shapes.txt lacks required columns");
        std::unordered_map<std::string, std::vector<std::pair<int, std::pair<double, double>>>> raw;
        while (r.next()) {
            try {
                raw[r.field(c_id)].emplace_back(
                    std::stoi(r.field(c_seq)),
                    std::make_pair(std::stod(r.field(c_lat)), std::stod(r.field(c_lon))));
            } catch (...) {
                rep.add("shapes.txt", "bad_row");
            }
        }
        for (auto& [shape_id, pts] : raw) {
            if (pts.size() < 2) {
                rep.add("shapes.txt", "degenerate_shape", std::int64_t(pts.size()));
                continue;
            }
            std::stable_sort(pts.begin(), pts.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            RouteShape shape;
            shape.shape_id = shape_id;
            shape.points.reserve(pts.size());
            for (const auto& [seq, ll] : pts) shape.points.push_back(ll);
            shape.cum_dist = cumulative_distance(shape.points);
            feed.shapes.emplace(shape_id, std::move(shape));
        }
    }

    std::unordered_map<std::string, std::vector<Date>> service_dates;
    {
        CsvReader r = open_required(directory, "calendar.txt");
        int c_sid = r.col("service_id"), c_start = r.col("start_date"), c_end = r.col("end_date");
        static const char* kDays[7] = {"sunday", "monday",   "tuesday", "wednesday",
                                       "thursday", "friday", "saturday"};
        int c_day[7];
        bool day_cols = true;
        for (int i = 0; i < 7; ++i) {
            c_day[i] = r.col(kDays[i]);
            day_cols = day_cols && c_day[i] >= 0;
        }
        if (c_sid < 0 || c_start < 0 || c_end < 0 || !day_cols)
            throw std::runtime_error("calendar.txt lacks required columns");
        while (r.next()) {
            Date start = parse_date(r.field(c_start));
            Date end = parse_date(r.field(c_end));
            if (!start.valid() || !end.valid() || end < start) {
                rep.add("calendar.txt", "bad_date_range");
                continue;
            }
            bool active[7];
            for (int i = 0; i < 7; ++i) active[i] = r.field(c_day[i]) == "1";
            auto& dates = service_dates[r.field(c_sid)];
            for (Date d = start; !(end < d); d = d.plus_days(1))
                if (active[d.weekday()]) dates.push_back(d);
        }
    }

    std::unordered_map<std::string, RawTrip> raw_trips;
    {
        CsvReader r = open_required(directory, "trips.txt");
        int c_trip = r.col("trip_id"), c_route = r.col("route_id");
        int c_service = r.col("service_id"), c_shape = r.col("shape_id");
        if (c_trip < 0 || c_route < 0 || c_service < 0)
            throw std::runtime_error("trips.txt lacks required columns");
        while (r.next()) {
            std::string trip_id = r.field(c_trip);
            if (trip_id.empty()) {
                rep.add("trips.txt", "missing_trip_id");
                continue;
            }
            RawTrip t{r.field(c_route), r.field(c_service),
                      c_shape >= 0 ? r.field(c_shape) : std::string{}};
            if (!raw_trips.emplace(trip_id, std::move(t)).second)
                rep.add("trips.txt", "duplicate_trip_id");
        }
    }

    std::unordered_map<std::string, std::vector<RawStopTime>> raw_times;
    {
        CsvReader r = open_required(directory, "stop_times.txt");
        int c_trip = r.col("trip_id"), c_arr = r.col("arrival_time"), c_stop = r.col("stop_id");
        int c_seq = r.col("stop_sequence"), c_dist = r.col("shape_dist_traveled");
        if (c_trip < 0 || c_arr < 0 || c_stop < 0 || c_seq < 0)
            throw std::runtime_error("stop_times.txt lacks required columns");
        while (r.next()) {
            const std::string& trip_id = r.field(c_trip);
            if (!raw_trips.count(trip_id)) {
                rep.add("stop_times.txt", "unknown_trip_id");
                continue;
            }
            if (!feed.stops.count(r.field(c_stop))) {
                rep.add("stop_times.txt", "unknown_stop_id");
                continue;
            }
            int arrival = parse_clock_seconds(r.field(c_arr));
            if (arrival < 0) {
                rep.add("stop_times.txt", "bad_arrival_time");
                continue;
            }
            RawStopTime st;
            try {
                st.sequence = std::stoi(r.field(c_seq));
            } catch (...) {
                rep.add("stop_times.txt", "bad_sequence");
                continue;
            }
            st.arrival = arrival;
            st.stop_id = r.field(c_stop);
            if (c_dist >= 0 && !r.field(c_dist).empty()) {
                try {
                    st.shape_dist = std::stod(r.field(c_dist));
                } catch (...) {
                }
            }
            raw_times[trip_id].push_back(std::move(st));
        }
    }

    for (auto& [trip_id, times] : raw_times) {
        const RawTrip& meta = raw_trips.at(trip_id);
        auto svc = service_dates.find(meta.service_id);
        if (svc == service_dates.end() || svc->second.empty()) {
            rep.add("trips.txt", "unknown_or_empty_service");
            continue;
        }
        if (!meta.shape_id.empty() && !feed.shapes.count(meta.shape_id)) {
            rep.add("trips.txt", "unknown_shape_id");
            continue;
        }
        std::stable_sort(times.begin(), times.end(),
                         [](const RawStopTime& a, const RawStopTime& b) {
                             return a.sequence < b.sequence;
                         });
        // Arrivals must be nondecreasing along the trip; offending rows drop.
        std::vector<StopEvent> events;
        int last_arrival = -1;
        for (const RawStopTime& st : times) {
            if (st.arrival < last_arrival) {
                rep.add("stop_times.txt", "non_monotone_arrival");
                continue;
            }
            last_arrival = st.arrival;
            events.push_back(StopEvent{st.stop_id, 0, st.arrival, st.shape_dist});
        }
        if (events.size() < 2) {
            rep.add("stop_times.txt", "trip_too_short", std::int64_t(events.size()));
            continue;
        }
        for (size_t i = 0; i < events.size(); ++i) events[i].sequence = int(i) + 1;

        for (const Date& d : svc->second) {
            TripSchedule trip;
            trip.trip_id = trip_id;
            trip.route_id = meta.route_id;
            trip.service_date = d;
            trip.shape_id = meta.shape_id;
            trip.events = events;
            feed.trips.emplace(TripKey{trip_id, d}, std::move(trip));
        }
    }

    return feed;
}

int scheduled_position(const TripSchedule& trip, int t) {
    const auto& ev = trip.events;
    if (t < ev.front().scheduled_arrival) return ev.front().sequence;
    // Last event with scheduled_arrival <= t.
    auto it = std::upper_bound(ev.begin(), ev.end(), t, [](int value, const StopEvent& e) {
        return value < e.scheduled_arrival;
    });
    return std::prev(it)->sequence;
}

TripStats trip_stats(const TripSchedule& trip, const RouteShape& shape) {
    TripStats s;
    s.number_of_points = int(shape.points.size());
    s.total_length_m = shape.total_length_m();
    if (trip.events.size() < 2) {
        s.total_time_s = 0;
        s.degenerate = true;
    } else {
        s.total_time_s = trip.last_arrival() - trip.first_arrival();
    }
    return s;
}

GtfsFeed filter_feed(const GtfsFeed& feed, const FeedFilter& filter) {
    GtfsFeed out;
    std::set<std::string> routes(filter.route_ids.begin(), filter.route_ids.end());
    for (const auto& [key, trip] : feed.trips) {
        if (!routes.empty() && !routes.count(trip.route_id)) continue;
        if (filter.bbox) {
            bool inside = true;
            for (const StopEvent& ev : trip.events) {
                const Stop* s = feed.find_stop(ev.stop_id);
                if (!s || !filter.bbox->contains(s->lat, s->lon)) {
                    inside = false;
                    break;
                }
            }
            if (!inside) continue;
        }
        out.trips.emplace(key, trip);
        for (const StopEvent& ev : trip.events)
            if (const Stop* s = feed.find_stop(ev.stop_id)) out.stops.emplace(s->stop_id, *s);
        if (!trip.shape_id.empty())
            if (const RouteShape* sh = feed.find_shape(trip.shape_id))
                out.shapes.emplace(sh->shape_id, *sh);
    }
    return out;
}

}  // namespace stopfill::gtfs
