#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stopfill/date.hpp"

namespace stopfill::gtfs {

struct Stop {
    std::string stop_id;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
};

struct StopEvent {
    std::string stop_id;
    int sequence = 0;        // 1-based, gap-free after normalization
    int scheduled_arrival = 0;  // seconds from midnight of the service day
    std::optional<double> shape_dist;
};

struct TripSchedule {
    std::string trip_id;
    std::string route_id;
    Date service_date;
    std::string shape_id;
    std::vector<StopEvent> events;  // sorted by sequence

    int first_arrival() const { return events.front().scheduled_arrival; }
    int last_arrival() const { return events.back().scheduled_arrival; }
    int stop_count() const { return int(events.size()); }

    // Index of a stop on the trip, or -1. With repeated stops (loop routes)
    // returns the earliest occurrence whose arrival is >= not_before.
    int find_stop_sequence(const std::string& stop_id, int not_before = -1) const;
    bool stop_repeats(const std::string& stop_id) const;
};

struct RouteShape {
    std::string shape_id;
    std::vector<std::pair<double, double>> points;  // lat, lon
    std::vector<double> cum_dist;                   // meters, cum_dist[0] == 0

    double total_length_m() const { return cum_dist.empty() ? 0.0 : cum_dist.back(); }
};

struct TripKey {
    std::string trip_id;
    Date service_date;
    bool operator==(const TripKey&) const = default;
};

struct TripKeyHash {
    std::size_t operator()(const TripKey& k) const {
        return std::hash<std::string>{}(k.trip_id) * 31u ^ DateHash{}(k.service_date);
    }
};

// Dropped-row counts per file per reason, emitted as JSON.
struct ParseReport {
    std::map<std::string, std::map<std::string, std::int64_t>> dropped;

    void add(const std::string& file, const std::string& reason, std::int64_t n = 1) {
        dropped[file][reason] += n;
    }
    std::int64_t total() const;
    std::string to_json() const;
};

struct GtfsFeed {
    std::unordered_map<std::string, Stop> stops;
    std::unordered_map<TripKey, TripSchedule, TripKeyHash> trips;
    std::unordered_map<std::string, RouteShape> shapes;

    const TripSchedule* find_trip(const std::string& trip_id, const Date& d) const;
    const RouteShape* find_shape(const std::string& shape_id) const;
    const Stop* find_stop(const std::string& stop_id) const;
};

// Parses stops.txt, trips.txt, stop_times.txt, shapes.txt and calendar.txt.
// Rows violating invariants are dropped and counted in `report`; a missing
// mandatory file throws std::runtime_error.
GtfsFeed parse_feed(const std::filesystem::path& directory, ParseReport* report = nullptr);

// Sequence of the last stop with scheduled_arrival <= t, clamped to the trip.
int scheduled_position(const TripSchedule& trip, int t);

struct TripStats {
    int number_of_points = 0;
    double total_length_m = 0.0;
    int total_time_s = 0;
    bool degenerate = false;  // single-event trip
};

TripStats trip_stats(const TripSchedule& trip, const RouteShape& shape);

// Haversine great-circle distance in meters.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Cumulative polyline length from the raw points.
std::vector<double> cumulative_distance(const std::vector<std::pair<double, double>>& points);

struct BoundingBox {
    double min_lat = -90.0, min_lon = -180.0, max_lat = 90.0, max_lon = 180.0;
    bool contains(double lat, double lon) const {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
};

// Explicit geographic / route-list trip filter. A trip is kept iff its route
// is listed (or the list is empty) and every one of its stops falls inside
// the box (or no box is set). Stops and shapes are pruned to what remains.
struct FeedFilter {
    std::optional<BoundingBox> bbox;
    std::vector<std::string> route_ids;
};

GtfsFeed filter_feed(const GtfsFeed& feed, const FeedFilter& filter);

}  // namespace stopfill::gtfs
