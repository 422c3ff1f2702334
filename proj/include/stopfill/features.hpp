#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stopfill/afc.hpp"
#include "stopfill/dataset.hpp"
#include "stopfill/geo.hpp"
#include "stopfill/gtfs.hpp"

namespace stopfill::features {

using learn::FeatureRow;
using learn::kFeatureCount;

// Canonical feature order; also the header of the exported feature matrix.
extern const std::array<std::string, kFeatureCount> kFeatureNames;

enum FeatureIndex {
    kAddresses = 0,
    kStreetLights,
    kTrafficLights,
    kNumberOfPoints,
    kAvgDistancePerStop,
    kAvgTimePerStop,
    kAvgPointsToStops,
    kTripTimeDiff,
    kTimeBoardingToLastStop,
    kTimeDepartureToBoarding,
    kPredictedSequence,
    kHourlyExpectedLateness,
    kBoardingSecondsFromMidnight,
    kBoardingWeekday,
    kIsWeekend,
};

inline constexpr int kDeltaClipMin = -15;
inline constexpr int kDeltaClipMax = 15;

// D = A - S, clipped to [-15, 15].
struct DeltaLabel {
    int d = 0;
    bool clipped = false;
};

DeltaLabel compute_label(int actual_seq, int predicted_seq);

// Mean lateness per hour of day over training data; empty hours fall back to
// the global mean.
struct LatenessTable {
    std::array<double, 24> mean_by_hour{};
    double global_mean = 0.0;

    double at_hour(int h) const { return mean_by_hour[size_t(h % 24)]; }
};

LatenessTable build_lateness_table(std::span<const afc::JoinedRecord> train_records);

struct FeatureConfig {
    std::set<int> weekend_days = {5, 6};  // Friday, Saturday (0 = Sunday)
    bool normalize_geo_by_length = false;  // counts per km instead of raw counts
};

// geo == nullptr means no geospatial coverage for this route: the three geo
// features are zero and the caller's missing counter should be bumped.
FeatureRow extract_features(const afc::JoinedRecord& record, const gtfs::GtfsFeed& feed,
                            const geo::RouteGeoStats* geo, const LatenessTable& lateness,
                            const FeatureConfig& config = {});

struct ExtractionStats {
    std::int64_t rows = 0;
    std::int64_t clipped_labels = 0;
    std::int64_t missing_geo = 0;
};

// Feature matrix + labels for records with A present; class_map covers every
// clipped D seen. Records without A are skipped.
learn::Dataset build_training_dataset(
    std::span<const afc::JoinedRecord> records, const gtfs::GtfsFeed& feed,
    const std::unordered_map<std::string, geo::RouteGeoStats>& geo_stats,
    const LatenessTable& lateness, const FeatureConfig& config = {},
    ExtractionStats* stats = nullptr);

// Unlabeled rows in record order (for imputation / prediction).
std::vector<FeatureRow> build_feature_rows(
    std::span<const afc::JoinedRecord> records, const gtfs::GtfsFeed& feed,
    const std::unordered_map<std::string, geo::RouteGeoStats>& geo_stats,
    const LatenessTable& lateness, const FeatureConfig& config = {},
    ExtractionStats* stats = nullptr);

// First `train_days` distinct service dates go to train, the rest to test.
// Throws when the records span fewer than train_days + 1 distinct dates.
template <typename T, typename DateFn>
std::pair<std::vector<T>, std::vector<T>> split_by_date_impl(const std::vector<T>& records,
                                                             int train_days, DateFn date_of);

std::pair<std::vector<afc::AfcRecord>, std::vector<afc::AfcRecord>> split_by_date(
    const std::vector<afc::AfcRecord>& records, int train_days = 21);

std::pair<std::vector<afc::JoinedRecord>, std::vector<afc::JoinedRecord>> split_by_date(
    const std::vector<afc::JoinedRecord>& records, int train_days = 21);

// CSV with the 15 feature columns plus a trailing `delta` label column
// (omitted when labels are absent).
void write_feature_csv(const std::filesystem::path& path, const learn::Dataset& data);

}  // namespace stopfill::features
