#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stopfill/gtfs.hpp"

namespace stopfill::geo {

enum class Category { traffic_light, street_light, address };

const char* category_name(Category c);
// Returns false on an unknown name.
bool parse_category(const std::string& name, Category& out);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    Category category = Category::address;
};

struct RouteGeoStats {
    std::string route_id;
    std::int64_t addresses = 0;
    std::int64_t street_lights = 0;
    std::int64_t traffic_lights = 0;
};

// Great-circle distance from a point to a segment, meters. The segment is
// treated planar in a local equirectangular frame around the point, which is
// accurate at street scale.
double point_to_segment_m(double plat, double plon, double alat, double alon, double blat,
                          double blon);

double point_to_polyline_m(double lat, double lon, const gtfs::RouteShape& shape);

// A point counts for its category iff its distance to the nearest polyline
// segment is <= buffer_m; each point counts at most once per route.
RouteGeoStats route_point_counts(const gtfs::RouteShape& shape, std::span<const GeoPoint> points,
                                 double buffer_m = 50.0);

// CSV columns: lat, lon, category. Unknown categories are counted and skipped.
std::vector<GeoPoint> load_geo_csv(const std::filesystem::path& path,
                                   std::int64_t* skipped = nullptr);

void write_geo_csv(const std::filesystem::path& path, const std::vector<GeoPoint>& points);

// Stats per route over every route in the feed, using the shape of one of its
// trips. Routes without a resolvable shape are omitted.
std::unordered_map<std::string, RouteGeoStats> compute_route_geo_stats(
    const gtfs::GtfsFeed& feed, std::span<const GeoPoint> points, double buffer_m = 50.0);

}  // namespace stopfill::geo
