#include "stopfill/features.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

#include "stopfill/csv.hpp"

namespace stopfill::features {

const std::array<std::string, kFeatureCount> kFeatureNames = {
    "addresses_average",
    "street_light_average",
    "traffic_lights_average",
    "number_of_points",
    "average_distance_per_stop",
    "average_time_per_stop",
    "average_points_to_stops",
    "time_diff_of_trip",
    "time_from_boarding_to_last_stop",
    "time_from_departure_to_boarding",
    "predicted_sequence",
    "hourly_expected_lateness",
    "boardingtime_seconds_from_midnight",
    "boardingtime_weekday",
    "is_weekend",
};

DeltaLabel compute_label(int actual_seq, int predicted_seq) {
    int d = actual_seq - predicted_seq;
    DeltaLabel out;
    out.d = std::clamp(d, kDeltaClipMin, kDeltaClipMax);
    out.clipped = out.d != d;
    return out;
}

LatenessTable build_lateness_table(std::span<const afc::JoinedRecord> train_records) {
    std::array<double, 24> sum{};
    std::array<std::int64_t, 24> count{};
    double total = 0.0;
    std::int64_t n = 0;
    for (const afc::JoinedRecord& rec : train_records) {
        if (!rec.actual_seq) continue;
        double lateness = double(rec.lateness_s());
        int h = rec.hour();
        sum[size_t(h)] += lateness;
        ++count[size_t(h)];
        total += lateness;
        ++n;
    }
    if (n == 0) throw std::runtime_error("build_lateness_table: empty training set");
    LatenessTable table;
    table.global_mean = total / double(n);
    for (int h = 0; h < 24; ++h)
        table.mean_by_hour[size_t(h)] =
            count[size_t(h)] ? sum[size_t(h)] / double(count[size_t(h)]) : table.global_mean;
    return table;
}

FeatureRow extract_features(const afc::JoinedRecord& record, const gtfs::GtfsFeed& feed,
                            const geo::RouteGeoStats* geo, const LatenessTable& lateness,
                            const FeatureConfig& config) {
    const gtfs::TripSchedule& trip = *record.trip;
    const gtfs::RouteShape* shape = feed.find_shape(trip.shape_id);
    if (!shape) throw std::runtime_error("extract_features: unresolved shape " + trip.shape_id);
    gtfs::TripStats stats = gtfs::trip_stats(trip, *shape);

    FeatureRow x{};
    double geo_scale = 1.0;
    if (config.normalize_geo_by_length && stats.total_length_m > 0.0)
        geo_scale = 1000.0 / stats.total_length_m;  // counts per km
    if (geo) {
        x[kAddresses] = double(geo->addresses) * geo_scale;
        x[kStreetLights] = double(geo->street_lights) * geo_scale;
        x[kTrafficLights] = double(geo->traffic_lights) * geo_scale;
    }
    double points = double(stats.number_of_points);
    x[kNumberOfPoints] = points;
    x[kAvgDistancePerStop] = stats.total_length_m / points;
    x[kAvgTimePerStop] = double(stats.total_time_s) / points;
    x[kAvgPointsToStops] = points / double(trip.stop_count());
    x[kTripTimeDiff] = double(stats.total_time_s);
    x[kTimeBoardingToLastStop] = double(trip.last_arrival() - record.afc.boarding_ts);
    x[kTimeDepartureToBoarding] = double(record.afc.boarding_ts - trip.first_arrival());
    x[kPredictedSequence] = double(record.predicted_seq);
    x[kHourlyExpectedLateness] = lateness.at_hour(record.hour());
    x[kBoardingSecondsFromMidnight] = double(record.afc.boarding_ts);
    int weekday = record.afc.service_date.weekday();
    x[kBoardingWeekday] = double(weekday);
    x[kIsWeekend] = config.weekend_days.count(weekday) ? 1.0 : 0.0;
    return x;
}

namespace {

const geo::RouteGeoStats* lookup_geo(
    const std::unordered_map<std::string, geo::RouteGeoStats>& geo_stats,
    const std::string& route_id) {
    auto it = geo_stats.find(route_id);
    return it == geo_stats.end() ? nullptr : &it->second;
}

}  // namespace

learn::Dataset build_training_dataset(
    std::span<const afc::JoinedRecord> records, const gtfs::GtfsFeed& feed,
    const std::unordered_map<std::string, geo::RouteGeoStats>& geo_stats,
    const LatenessTable& lateness, const FeatureConfig& config, ExtractionStats* stats) {
    learn::Dataset data;
    std::vector<int> d_values;
    for (const afc::JoinedRecord& rec : records) {
        if (!rec.actual_seq) continue;
        const geo::RouteGeoStats* geo = lookup_geo(geo_stats, rec.trip->route_id);
        data.rows.push_back(extract_features(rec, feed, geo, lateness, config));
        DeltaLabel label = compute_label(*rec.actual_seq, rec.predicted_seq);
        d_values.push_back(label.d);
        if (stats) {
            ++stats->rows;
            if (label.clipped) ++stats->clipped_labels;
            if (!geo) ++stats->missing_geo;
        }
    }
    std::set<int> distinct(d_values.begin(), d_values.end());
    data.class_map.assign(distinct.begin(), distinct.end());
    data.labels.reserve(d_values.size());
    for (int d : d_values) data.labels.push_back(data.class_index_of(d));
    return data;
}

std::vector<FeatureRow> build_feature_rows(
    std::span<const afc::JoinedRecord> records, const gtfs::GtfsFeed& feed,
    const std::unordered_map<std::string, geo::RouteGeoStats>& geo_stats,
    const LatenessTable& lateness, const FeatureConfig& config, ExtractionStats* stats) {
    std::vector<FeatureRow> rows;
    rows.reserve(records.size());
    for (const afc::JoinedRecord& rec : records) {
        const geo::RouteGeoStats* geo = lookup_geo(geo_stats, rec.trip->route_id);
        rows.push_back(extract_features(rec, feed, geo, lateness, config));
        if (stats) {
            ++stats->rows;
            if (!geo) ++stats->missing_geo;
        }
    }
    return rows;
}

template <typename T, typename DateFn>
std::pair<std::vector<T>, std::vector<T>> split_by_date_impl(const std::vector<T>& records,
                                                             int train_days, DateFn date_of) {
    std::set<Date> dates;
    for (const T& r : records) dates.insert(date_of(r));
    if (int(dates.size()) < train_days + 1)
        throw std::runtime_error("split_by_date: need more than " + std::to_string(train_days) +
                                 " distinct service dates, have " + std::to_string(dates.size()));
    std::set<Date> train_dates;
    int i = 0;
    for (const Date& d : dates) {
        if (i++ >= train_days) break;
        train_dates.insert(d);
    }
    std::pair<std::vector<T>, std::vector<T>> out;
    for (const T& r : records)
        (train_dates.count(date_of(r)) ? out.first : out.second).push_back(r);
    return out;
}

std::pair<std::vector<afc::AfcRecord>, std::vector<afc::AfcRecord>> split_by_date(
    const std::vector<afc::AfcRecord>& records, int train_days) {
    return split_by_date_impl(records, train_days,
                              [](const afc::AfcRecord& r) { return r.service_date; });
}

std::pair<std::vector<afc::JoinedRecord>, std::vector<afc::JoinedRecord>> split_by_date(
    const std::vector<afc::JoinedRecord>& records, int train_days) {
    return split_by_date_impl(records, train_days,
                              [](const afc::JoinedRecord& r) { return r.afc.service_date; });
}

void write_feature_csv(const std::filesystem::path& path, const learn::Dataset& data) {
    CsvWriter w(path);
    std::vector<std::string> header(kFeatureNames.begin(), kFeatureNames.end());
    bool labeled = !data.labels.empty();
    if (labeled) header.push_back("delta");
    w.write_row(header);
    char buf[40];
    for (size_t i = 0; i < data.rows.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(header.size());
        for (double v : data.rows[i]) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            row.emplace_back(buf);
        }
        if (labeled) row.push_back(std::to_string(data.d_value(data.labels[i])));
        w.write_row(row);
    }
}

}  // namespace stopfill::features
