#include "stopfill/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "stopfill/csv.hpp"

namespace stopfill::geo {

const char* category_name(Category c) {
    switch (c) {
        case Category::traffic_light: return "traffic_light";
        case Category::street_light: return "street_light";
        case Category::address: return "address";
    }
    return "?";
}

bool parse_category(const std::string& name, Category& out) {
    if (name == "traffic_light") out = Category::traffic_light;
    else if (name == "street_light") out = Category::street_light;
    else if (name == "address") out = Category::address;
    else return false;
    return true;
}

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDeg = M_PI / 180.0;
}  // namespace

double point_to_segment_m(double plat, double plon, double alat, double alon, double blat,
                          double blon) {
    // Equirectangular projection centered at the point keeps collinear
    // lat/lon points collinear, so densifying a polyline cannot change the
    // distance to it.
    double coslat = std::cos(plat * kDeg);
    double ax = (alon - plon) * coslat * kDeg * kEarthRadiusM;
    double ay = (alat - plat) * kDeg * kEarthRadiusM;
    double bx = (blon - plon) * coslat * kDeg * kEarthRadiusM;
    double by = (blat - plat) * kDeg * kEarthRadiusM;
    double dx = bx - ax, dy = by - ay;
    double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
    double cx = ax + t * dx, cy = ay + t * dy;
    return std::sqrt(cx * cx + cy * cy);
}

double point_to_polyline_m(double lat, double lon, const gtfs::RouteShape& shape) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < shape.points.size(); ++i) {
        const auto& a = shape.points[i];
        const auto& b = shape.points[i + 1];
        best = std::min(best, point_to_segment_m(lat, lon, a.first, a.second, b.first, b.second));
    }
    return best;
}

RouteGeoStats route_point_counts(const gtfs::RouteShape& shape, std::span<const GeoPoint> points,
                                 double buffer_m) {
    if (shape.points.size() < 2)
        throw std::invalid_argument("route_point_counts: shape needs >= 2 points");
    RouteGeoStats stats;
    stats.route_id = shape.shape_id;

    // Coarse bounding box pre-filter, padded by the buffer.
    double min_lat = 90, max_lat = -90, min_lon = 180, max_lon = -180;
    for (const auto& [lat, lon] : shape.points) {
        min_lat = std::min(min_lat, lat);
        max_lat = std::max(max_lat, lat);
        min_lon = std::min(min_lon, lon);
        max_lon = std::max(max_lon, lon);
    }
    double pad_lat = 2.0 * buffer_m / (kEarthRadiusM * kDeg);
    double mid_lat = (min_lat + max_lat) / 2.0;
    double pad_lon = pad_lat / std::max(0.1, std::cos(mid_lat * kDeg));

    for (const GeoPoint& p : points) {
        if (p.lat < min_lat - pad_lat || p.lat > max_lat + pad_lat || p.lon < min_lon - pad_lon ||
            p.lon > max_lon + pad_lon)
            continue;
        if (point_to_polyline_m(p.lat, p.lon, shape) > buffer_m) continue;
        switch (p.category) {
            case Category::traffic_light: ++stats.traffic_lights; break;
            case Category::street_light: ++stats.street_lights; break;
            case Category::address: ++stats.addresses; break;
        }
    }
    return stats;
}

std::vector<GeoPoint> load_geo_csv(const std::filesystem::path& path, std::int64_t* skipped) {
    CsvReader r(path);
    if (!r.ok()) throw std::runtime_error("cannot open geo file: " + path.string());
    int c_lat = r.col("lat"), c_lon = r.col("lon"), c_cat = r.col("category");
    if (c_lat < 0 || c_lon < 0 || c_cat < 0)
        throw std::runtime_error("geo file lacks lat/lon/category columns");
    std::vector<GeoPoint> out;
    while (r.next()) {
        GeoPoint p;
        try {
            p.lat = std::stod(r.field(c_lat));
            p.lon = std::stod(r.field(c_lon));
        } catch (...) {
            if (skipped) ++*skipped;
            continue;
        }
        if (!parse_category(r.field(c_cat), p.category)) {
            if (skipped) ++*skipped;
            continue;
        }
        out.push_back(p);
    }
    return out;
}

void write_geo_csv(const std::filesystem::path& path, const std::vector<GeoPoint>& points) {
    CsvWriter w(path);
    w.write_row({"lat", "lon", "category"});
    char buf[32];
    for (const GeoPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.7f", p.lat);
        std::string lat = buf;
        std::snprintf(buf, sizeof(buf), "%.7f", p.lon);
        w.write_row({lat, buf, category_name(p.category)});
    }
}

std::unordered_map<std::string, RouteGeoStats> compute_route_geo_stats(
    const gtfs::GtfsFeed& feed, std::span<const GeoPoint> points, double buffer_m) {
    // route -> shape of one of its trips (patterns share a shape per route here)
    std::unordered_map<std::string, const gtfs::RouteShape*> route_shape;
    for (const auto& [key, trip] : feed.trips) {
        if (route_shape.count(trip.route_id)) continue;
        if (const gtfs::RouteShape* sh = feed.find_shape(trip.shape_id))
            route_shape.emplace(trip.route_id, sh);
    }
    std::unordered_map<std::string, RouteGeoStats> out;
    for (const auto& [route_id, shape] : route_shape) {
        RouteGeoStats s = route_point_counts(*shape, points, buffer_m);
        s.route_id = route_id;
        out.emplace(route_id, std::move(s));
    }
    return out;
}

}  // namespace stopfill::geo
