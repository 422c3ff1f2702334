#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stopfill/afc.hpp"
#include "stopfill/baselines.hpp"
#include "stopfill/features.hpp"
#include "stopfill/metrics.hpp"
#include "stopfill/model.hpp"
#include "stopfill/synth.hpp"

namespace stopfill::report {

inline constexpr const char* kToolVersion = "0.1.0";

// One scored prediction; rows align index-for-index with the evaluated
// record span.
struct PredictionRow {
    std::int64_t input_index = -1;
    std::string card_id;
    Date service_date;
    int boarding_ts = 0;
    std::string trip_id;
    std::string route_id;
    std::string actual_stop_id;
    int actual_seq = 0;
    std::string predicted_stop_id;
    int predicted_seq = 0;
    int schedule_seq = 0;  // S
    bool used_fallback = false;

    metrics::EvalPair pair() const { return {predicted_seq, actual_seq}; }
};

struct MethodEval {
    std::string name;
    std::vector<PredictionRow> rows;
    metrics::MetricsReport report;
};

// Everything needed to turn joined records into model inputs.
struct FeatureContext {
    const gtfs::GtfsFeed* feed = nullptr;
    const std::unordered_map<std::string, geo::RouteGeoStats>* geo_stats = nullptr;
    const features::LatenessTable* lateness = nullptr;
    features::FeatureConfig config;
};

std::vector<learn::Imputation> impute_records(const learn::ModelArtifact& model,
                                              std::span<const afc::JoinedRecord> records,
                                              const FeatureContext& ctx);

// Scores per-record predicted sequences against actual_seq (all records must
// carry one). fallback may be null.
MethodEval evaluate_sequences(const std::string& name, std::span<const afc::JoinedRecord> records,
                              std::span<const int> predicted_seq,
                              const std::vector<bool>* fallback, int pareto_limit = 5);

MethodEval evaluate_model(const std::string& name, const learn::ModelArtifact& model,
                          std::span<const afc::JoinedRecord> records, const FeatureContext& ctx,
                          int pareto_limit = 5);

// Adds weighted one-vs-rest AUC from the model's class probabilities.
void attach_model_auc(MethodEval& eval, const learn::ModelArtifact& model,
                      std::span<const afc::JoinedRecord> records, const FeatureContext& ctx);

void write_predictions_csv(const std::filesystem::path& path, const MethodEval& eval);

struct Cell {
    std::int64_t n = 0;
    double accuracy = 0.0;
};

struct TemporalBreakdown {
    std::array<std::optional<Cell>, 7> daily;    // weekday 0 (Sunday) .. 6
    std::array<std::optional<Cell>, 24> hourly;  // weekday records only
};

TemporalBreakdown temporal_breakdown(std::span<const PredictionRow> rows,
                                     const std::set<int>& weekend_days = {5, 6});

// One file for several methods: columns method, weekday|hour, n, accuracy.
void write_temporal_csv(const std::filesystem::path& daily_path,
                        const std::filesystem::path& hourly_path,
                        const std::vector<std::pair<std::string, TemporalBreakdown>>& breakdowns);

struct StopAccuracy {
    std::string stop_id;
    double lat = 0.0;
    double lon = 0.0;
    std::int64_t n = 0;
    double accuracy = 0.0;
};

struct SpatialBreakdown {
    std::vector<StopAccuracy> stops;   // per true boarding stop, id-sorted
    std::vector<StopAccuracy> subset;  // accuracy >= threshold and n >= min_support
};

SpatialBreakdown spatial_breakdown(std::span<const PredictionRow> rows,
                                   const gtfs::GtfsFeed& feed, double threshold = 0.5,
                                   int min_support = 10);

void write_spatial_csv(const std::filesystem::path& stops_path,
                       const std::filesystem::path& subset_path, const SpatialBreakdown& sb);

struct ComparisonRow {
    std::string method;
    double percent_predicted = 1.0;    // coverage before fallback
    double accuracy_predicted = 0.0;   // accuracy on the covered subset
    metrics::MetricsReport overall;    // fallback applied
};

struct CompareOptions {
    int closeness_threshold_s = 30;
    int history_bucket_s = 3600;
    std::uint64_t semi_random_seed = 1;
    bool restrict_semi_random = true;
    int pareto_limit = 5;
};

struct CompareOutput {
    std::vector<ComparisonRow> rows;  // ml, history, closeness, semi_random
    std::vector<MethodEval> evals;    // same order
};

// observable[i] tells whether test[i]'s stop was present in the raw feed of
// records (a masked stop cannot serve as an Algorithm 2 co-boarder even when
// ground truth is known for scoring). Empty means all observable.
CompareOutput compare_methods(std::span<const afc::JoinedRecord> test,
                              const std::vector<learn::Imputation>& ml,
                              const baselines::HistoryIndex& history,
                              const baselines::FrequencyTable& freq,
                              const std::vector<bool>& observable, const CompareOptions& opt);

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows);

struct SubsetReport {
    std::string name;
    std::int64_t n = 0;
    std::optional<metrics::MetricsReport> report;  // absent when the subset is empty
};

// Subsets of the ML evaluation: one-time travelers (single boarding for that
// card on that service day), records Algorithm 1 could not cover, records
// Algorithm 2 could not cover.
std::vector<SubsetReport> robustness_subsets(const MethodEval& ml, const MethodEval& history_eval,
                                             const MethodEval& closeness_eval,
                                             std::span<const afc::JoinedRecord> test,
                                             int pareto_limit = 5);

nlohmann::json subsets_to_json(const std::vector<SubsetReport>& subsets);

struct RunManifest {
    std::map<std::string, std::string> inputs;  // logical name -> path
    nlohmann::json config;                      // full resolved pipeline config
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
    std::optional<std::string> timestamp;  // set only when stamping is requested

    nlohmann::json to_json() const;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

struct PipelineConfig {
    std::filesystem::path city_dir;  // gtfs/ afc.csv geo.csv [ground_truth.csv]
    std::filesystem::path out_dir;
    learn::TrainConfig train;
    int train_days = 21;
    features::FeatureConfig feature_config;
    CompareOptions compare;
    double geo_buffer_m = 50.0;
    double spatial_threshold = 0.5;
    int spatial_min_support = 10;
    int importance_shuffles = 5;
    bool stamp = false;

    nlohmann::json to_json() const;
};

// Full pipeline: ingest, split, train, evaluate ML + baselines, write every
// table plus the manifest into out_dir. Returns the comparison rows.
CompareOutput run_report(const PipelineConfig& cfg);

}  // namespace stopfill::report
