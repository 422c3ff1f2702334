#include "stopfill/report.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "stopfill/csv.hpp"

namespace stopfill::report {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

PredictionRow make_row(const afc::JoinedRecord& rec, int predicted_seq, bool fallback) {
    PredictionRow row;
    row.input_index = rec.input_index;
    row.card_id = rec.afc.card_id;
    row.service_date = rec.afc.service_date;
    row.boarding_ts = rec.afc.boarding_ts;
    row.trip_id = rec.afc.trip_id;
    row.route_id = rec.trip->route_id;
    row.actual_seq = *rec.actual_seq;
    row.actual_stop_id = rec.trip->events[size_t(row.actual_seq) - 1].stop_id;
    row.predicted_seq = predicted_seq;
    if (predicted_seq >= 1 && predicted_seq <= rec.trip->stop_count())
        row.predicted_stop_id = rec.trip->events[size_t(predicted_seq) - 1].stop_id;
    row.schedule_seq = rec.predicted_seq;
    row.used_fallback = fallback;
    return row;
}

// One-hot AUC over the D classes present in the actuals; flagged degenerate.
void attach_onehot_auc(MethodEval& eval) {
    std::map<int, int> cls;
    for (const PredictionRow& r : eval.rows) cls.emplace(r.actual_seq - r.schedule_seq, 0);
    if (cls.size() < 2) return;
    int k = 0;
    for (auto& [d, idx] : cls) idx = k++;
    std::vector<std::vector<double>> scores(eval.rows.size(),
                                            std::vector<double>(cls.size(), 0.0));
    std::vector<int> actual(eval.rows.size());
    for (size_t i = 0; i < eval.rows.size(); ++i) {
        const PredictionRow& r = eval.rows[i];
        actual[i] = cls.at(r.actual_seq - r.schedule_seq);
        auto it = cls.find(r.predicted_seq - r.schedule_seq);
        if (it != cls.end()) scores[i][size_t(it->second)] = 1.0;
    }
    eval.report.auc = metrics::auc_weighted_ovr(scores, actual);
    eval.report.has_auc = true;
    eval.report.degenerate_scores = true;
}

}  // namespace

std::vector<learn::Imputation> impute_records(const learn::ModelArtifact& model,
                                              std::span<const afc::JoinedRecord> records,
                                              const FeatureContext& ctx) {
    std::vector<learn::FeatureRow> rows =
        features::build_feature_rows(records, *ctx.feed, *ctx.geo_stats, *ctx.lateness,
                                     ctx.config, nullptr);
    std::vector<learn::Imputation> out;
    out.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i)
        out.push_back(learn::impute_stop(model, rows[i], records[i]));
    return out;
}

MethodEval evaluate_sequences(const std::string& name, std::span<const afc::JoinedRecord> records,
                              std::span<const int> predicted_seq,
                              const std::vector<bool>* fallback, int pareto_limit) {
    if (records.empty()) throw std::invalid_argument("evaluate: empty test set");
    if (predicted_seq.size() != records.size())
        throw std::invalid_argument("evaluate: prediction count mismatch");
    MethodEval eval;
    eval.name = name;
    eval.rows.reserve(records.size());
    std::vector<metrics::EvalPair> pairs;
    pairs.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        if (!records[i].actual_seq)
            throw std::invalid_argument("evaluate: record without ground truth");
        eval.rows.push_back(
            make_row(records[i], predicted_seq[i], fallback ? (*fallback)[i] : false));
        pairs.push_back(eval.rows.back().pair());
    }
    eval.report = metrics::classification_metrics(pairs, pareto_limit);
    return eval;
}

MethodEval evaluate_model(const std::string& name, const learn::ModelArtifact& model,
                          std::span<const afc::JoinedRecord> records, const FeatureContext& ctx,
                          int pareto_limit) {
    std::vector<learn::Imputation> imp = impute_records(model, records, ctx);
    std::vector<int> seqs(imp.size());
    for (size_t i = 0; i < imp.size(); ++i) seqs[i] = imp[i].sequence;
    return evaluate_sequences(name, records, seqs, nullptr, pareto_limit);
}

void attach_model_auc(MethodEval& eval, const learn::ModelArtifact& model,
                      std::span<const afc::JoinedRecord> records, const FeatureContext& ctx) {
    std::vector<learn::FeatureRow> rows =
        features::build_feature_rows(records, *ctx.feed, *ctx.geo_stats, *ctx.lateness,
                                     ctx.config, nullptr);
    std::vector<std::vector<double>> scores;
    std::vector<int> actual;
    for (size_t i = 0; i < records.size(); ++i) {
        if (!records[i].actual_seq) continue;
        features::DeltaLabel label =
            features::compute_label(*records[i].actual_seq, records[i].predicted_seq);
        int cls = -1;
        for (size_t c = 0; c < model.class_map.size(); ++c)
            if (model.class_map[c] == label.d) {
                cls = int(c);
                break;
            }
        if (cls < 0) continue;  // D value the model never saw
        scores.push_back(learn::predict(model, rows[i]).probs);
        actual.push_back(cls);
    }
    if (actual.empty()) return;
    bool two_sided = false;
    for (int a : actual)
        if (a != actual[0]) two_sided = true;
    if (!two_sided) return;
    eval.report.auc = metrics::auc_weighted_ovr(scores, actual);
    eval.report.has_auc = true;
    eval.report.degenerate_scores = false;
}

void write_predictions_csv(const std::filesystem::path& path, const MethodEval& eval) {
    CsvWriter w(path);
    w.write_row({"input_index", "card_id", "service_date", "boarding_ts", "trip_id", "route_id",
                 "actual_stop_id", "actual_seq", "predicted_stop_id", "predicted_seq",
                 "schedule_seq", "abs_error", "within_1", "within_2", "used_fallback"});
    for (const PredictionRow& r : eval.rows) {
        int d = r.pair().d();
        w.write_row({std::to_string(r.input_index), r.card_id, r.service_date.to_string(),
                     std::to_string(r.boarding_ts), r.trip_id, r.route_id, r.actual_stop_id,
                     std::to_string(r.actual_seq), r.predicted_stop_id,
                     std::to_string(r.predicted_seq), std::to_string(r.schedule_seq),
                     std::to_string(d), d <= 1 ? "1" : "0", d <= 2 ? "1" : "0",
                     r.used_fallback ? "1" : "0"});
    }
}

TemporalBreakdown temporal_breakdown(std::span<const PredictionRow> rows,
                                     const std::set<int>& weekend_days) {
    std::array<std::pair<std::int64_t, std::int64_t>, 7> daily{};   // n, correct
    std::array<std::pair<std::int64_t, std::int64_t>, 24> hourly{};
    for (const PredictionRow& r : rows) {
        int wd = r.service_date.weekday();
        bool correct = r.predicted_seq == r.actual_seq;
        ++daily[size_t(wd)].first;
        daily[size_t(wd)].second += correct;
        if (!weekend_days.count(wd)) {
            int h = hour_of_day(r.boarding_ts);
            ++hourly[size_t(h)].first;
            hourly[size_t(h)].second += correct;
        }
    }
    TemporalBreakdown out;
    for (int wd = 0; wd < 7; ++wd)
        if (daily[size_t(wd)].first)
            out.daily[size_t(wd)] =
                Cell{daily[size_t(wd)].first,
                     double(daily[size_t(wd)].second) / double(daily[size_t(wd)].first)};
    for (int h = 0; h < 24; ++h)
        if (hourly[size_t(h)].first)
            out.hourly[size_t(h)] =
                Cell{hourly[size_t(h)].first,
                     double(hourly[size_t(h)].second) / double(hourly[size_t(h)].first)};
    return out;
}

void write_temporal_csv(const std::filesystem::path& daily_path,
                        const std::filesystem::path& hourly_path,
                        const std::vector<std::pair<std::string, TemporalBreakdown>>& breakdowns) {
    {
        CsvWriter w(daily_path);
        w.write_row({"method", "weekday", "n", "accuracy"});
        for (const auto& [method, b] : breakdowns)
            for (int wd = 0; wd < 7; ++wd)
                if (b.daily[size_t(wd)])
                    w.write_row({method, std::to_string(wd),
                                 std::to_string(b.daily[size_t(wd)]->n),
                                 fmt(b.daily[size_t(wd)]->accuracy)});
    }
    {
        CsvWriter w(hourly_path);
        w.write_row({"method", "hour", "n", "accuracy"});
        for (const auto& [method, b] : breakdowns)
            for (int h = 0; h < 24; ++h)
                if (b.hourly[size_t(h)])
                    w.write_row({method, std::to_string(h),
                                 std::to_string(b.hourly[size_t(h)]->n),
                                 fmt(b.hourly[size_t(h)]->accuracy)});
    }
}

SpatialBreakdown spatial_breakdown(std::span<const PredictionRow> rows,
                                   const gtfs::GtfsFeed& feed, double threshold,
                                   int min_support) {
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_stop;  // n, correct
    for (const PredictionRow& r : rows) {
        auto& [n, correct] = per_stop[r.actual_stop_id];
        ++n;
        correct += r.predicted_seq == r.actual_seq;
    }
    SpatialBreakdown out;
    for (const auto& [stop_id, counts] : per_stop) {
        StopAccuracy sa;
        sa.stop_id = stop_id;
        if (const gtfs::Stop* s = feed.find_stop(stop_id)) {
            sa.lat = s->lat;
            sa.lon = s->lon;
        }
        sa.n = counts.first;
        sa.accuracy = double(counts.second) / double(counts.first);
        out.stops.push_back(sa);
        if (sa.accuracy >= threshold && sa.n >= min_support) out.subset.push_back(sa);
    }
    return out;
}

void write_spatial_csv(const std::filesystem::path& stops_path,
                       const std::filesystem::path& subset_path, const SpatialBreakdown& sb) {
    char lat[32], lon[32];
    auto write = [&](const std::filesystem::path& path, const std::vector<StopAccuracy>& stops) {
        CsvWriter w(path);
        w.write_row({"stop_id", "lat", "lon", "n", "accuracy"});
        for (const StopAccuracy& s : stops) {
            std::snprintf(lat, sizeof(lat), "%.7f", s.lat);
            std::snprintf(lon, sizeof(lon), "%.7f", s.lon);
            w.write_row({s.stop_id, lat, lon, std::to_string(s.n), fmt(s.accuracy)});
        }
    };
    write(stops_path, sb.stops);
    write(subset_path, sb.subset);
}

CompareOutput compare_methods(std::span<const afc::JoinedRecord> test,
                              const std::vector<learn::Imputation>& ml,
                              const baselines::HistoryIndex& history,
                              const baselines::FrequencyTable& freq,
                              const std::vector<bool>& observable, const CompareOptions& opt) {
    size_t n = test.size();
    if (n == 0) throw std::invalid_argument("compare_methods: empty test set");
    if (ml.size() != n) throw std::invalid_argument("compare_methods: imputation count mismatch");
    if (!observable.empty() && observable.size() != n)
        throw std::invalid_argument("compare_methods: observable flag count mismatch");

    CompareOutput out;
    std::vector<int> seqs(n);
    std::vector<bool> fb(n, false);

    for (size_t i = 0; i < n; ++i) seqs[i] = ml[i].sequence;
    out.evals.push_back(evaluate_sequences("ml", test, seqs, nullptr, opt.pareto_limit));

    for (size_t i = 0; i < n; ++i) {
        baselines::BaselineResult r = baselines::history_predict(test[i], history, ml[i]);
        seqs[i] = r.sequence;
        fb[i] = r.used_fallback;
    }
    out.evals.push_back(evaluate_sequences("history", test, seqs, &fb, opt.pareto_limit));

    std::unordered_map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < n; ++i)
        groups[test[i].afc.trip_id + "@" + test[i].afc.service_date.to_string()].push_back(i);
    for (const auto& [key, members] : groups) {
        std::vector<afc::JoinedRecord> others;
        for (size_t i : members) {
            others.clear();
            for (size_t j : members)
                if (j != i && (observable.empty() || observable[j])) others.push_back(test[j]);
            baselines::BaselineResult r = baselines::temporal_closeness_predict(
                test[i], others, ml[i], opt.closeness_threshold_s);
            seqs[i] = r.sequence;
            fb[i] = r.used_fallback;
        }
    }
    out.evals.push_back(evaluate_sequences("closeness", test, seqs, &fb, opt.pareto_limit));

    for (size_t i = 0; i < n; ++i) {
        baselines::BaselineResult r = baselines::semi_random_predict(
            test[i], std::uint64_t(i), freq, opt.semi_random_seed, opt.restrict_semi_random);
        seqs[i] = r.sequence;
    }
    out.evals.push_back(evaluate_sequences("semi_random", test, seqs, nullptr, opt.pareto_limit));

    for (size_t m = 0; m < out.evals.size(); ++m) {
        MethodEval& eval = out.evals[m];
        if (m > 0) attach_onehot_auc(eval);  // the model's own AUC comes from
                                             // its probabilities, attached by
                                             // the caller
        ComparisonRow row;
        row.method = eval.name;
        std::int64_t covered = 0, covered_correct = 0;
        for (const PredictionRow& r : eval.rows) {
            if (r.used_fallback) continue;
            ++covered;
            covered_correct += r.predicted_seq == r.actual_seq;
        }
        row.percent_predicted = double(covered) / double(n);
        row.accuracy_predicted = covered ? double(covered_correct) / double(covered) : 0.0;
        row.overall = eval.report;
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows) {
    CsvWriter w(path);
    w.write_row({"method", "percent_predicted", "accuracy_predicted", "accuracy", "weighted_f1",
                 "rmse", "pa_1", "pa_2", "auc", "degenerate_scores"});
    for (const ComparisonRow& r : rows) {
        auto pa = [&](size_t l) {
            return l < r.overall.pareto.size() ? fmt(r.overall.pareto[l].second) : std::string();
        };
        w.write_row({r.method, fmt(r.percent_predicted), fmt(r.accuracy_predicted),
                     fmt(r.overall.accuracy), fmt(r.overall.weighted_f1), fmt(r.overall.rmse),
                     pa(1), pa(2), r.overall.has_auc ? fmt(r.overall.auc) : "",
                     r.overall.has_auc ? (r.overall.degenerate_scores ? "1" : "0") : ""});
    }
}

std::vector<SubsetReport> robustness_subsets(const MethodEval& ml, const MethodEval& history_eval,
                                             const MethodEval& closeness_eval,
                                             std::span<const afc::JoinedRecord> test,
                                             int pareto_limit) {
    size_t n = ml.rows.size();
    if (test.size() != n || history_eval.rows.size() != n || closeness_eval.rows.size() != n)
        throw std::invalid_argument("robustness_subsets: evaluation size mismatch");

    std::map<std::string, std::int64_t> per_card_day;
    for (const afc::JoinedRecord& rec : test)
        ++per_card_day[rec.afc.card_id + "|" + rec.afc.service_date.to_string()];

    std::vector<size_t> one_time, no_history, no_closeness;
    for (size_t i = 0; i < n; ++i) {
        const afc::JoinedRecord& rec = test[i];
        if (per_card_day[rec.afc.card_id + "|" + rec.afc.service_date.to_string()] == 1)
            one_time.push_back(i);
        if (history_eval.rows[i].used_fallback) no_history.push_back(i);
        if (closeness_eval.rows[i].used_fallback) no_closeness.push_back(i);
    }

    auto build = [&](const std::string& name, const std::vector<size_t>& idx) {
        SubsetReport rep;
        rep.name = name;
        rep.n = std::int64_t(idx.size());
        if (!idx.empty()) {
            std::vector<metrics::EvalPair> pairs;
            pairs.reserve(idx.size());
            for (size_t i : idx) pairs.push_back(ml.rows[i].pair());
            rep.report = metrics::classification_metrics(pairs, pareto_limit);
        }
        return rep;
    };
    return {build("one_time_travelers", one_time), build("uncovered_by_history", no_history),
            build("uncovered_by_closeness", no_closeness)};
}

nlohmann::json subsets_to_json(const std::vector<SubsetReport>& subsets) {
    nlohmann::json j = nlohmann::json::array();
    for (const SubsetReport& s : subsets) {
        nlohmann::json e;
        e["name"] = s.name;
        e["n"] = s.n;
        e["report"] = s.report ? s.report->to_json() : nlohmann::json(nullptr);
        j.push_back(std::move(e));
    }
    return j;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["inputs"] = inputs;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = version;
    j["timestamp"] = timestamp ? nlohmann::json(*timestamp) : nlohmann::json(nullptr);
    return j;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << manifest.to_json().dump(2) << '\n';
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["city_dir"] = city_dir.string();
    j["out_dir"] = out_dir.string();
    j["train"] = {{"learner", learn::learner_name(train.learner)},
                  {"rounds", train.rounds},
                  {"max_depth", train.max_depth},
                  {"learning_rate", train.learning_rate},
                  {"l2_lambda", train.l2_lambda},
                  {"seed", train.seed},
                  {"min_child_weight", train.min_child_weight}};
    j["train_days"] = train_days;
    j["feature_config"] = {
        {"weekend_days", std::vector<int>(feature_config.weekend_days.begin(),
                                          feature_config.weekend_days.end())},
        {"normalize_geo_by_length", feature_config.normalize_geo_by_length}};
    j["compare"] = {{"closeness_threshold_s", compare.closeness_threshold_s},
                    {"history_bucket_s", compare.history_bucket_s},
                    {"semi_random_seed", compare.semi_random_seed},
                    {"restrict_semi_random", compare.restrict_semi_random},
                    {"pareto_limit", compare.pareto_limit}};
    j["geo_buffer_m"] = geo_buffer_m;
    j["spatial_threshold"] = spatial_threshold;
    j["spatial_min_support"] = spatial_min_support;
    j["importance_shuffles"] = importance_shuffles;
    j["stamp"] = stamp;
    return j;
}

CompareOutput run_report(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    gtfs::ParseReport parse_report;
    gtfs::GtfsFeed feed = gtfs::parse_feed(cfg.city_dir / "gtfs", &parse_report);
    afc::LoadStats load_stats;
    std::vector<afc::AfcRecord> observed = afc::load_afc(cfg.city_dir / "afc.csv", &load_stats);

    // score masked records against ground truth when it is available
    std::vector<afc::AfcRecord> restored = observed;
    if (fs::exists(cfg.city_dir / "ground_truth.csv")) {
        std::vector<synth::TruthRow> truth =
            synth::load_truth_csv(cfg.city_dir / "ground_truth.csv");
        for (const synth::TruthRow& t : truth) {
            if (t.record_index < 0 || size_t(t.record_index) >= restored.size()) continue;
            afc::AfcRecord& rec = restored[size_t(t.record_index)];
            if (!rec.boarding_stop_id) rec.boarding_stop_id = t.true_stop_id;
        }
    }

    auto [train_obs, test_obs] = features::split_by_date(observed, cfg.train_days);
    auto [train_res, test_res] = features::split_by_date(restored, cfg.train_days);
    (void)train_res;

    auto [train_joined, train_drop] = afc::preprocess_and_join(train_obs, feed,
                                                               afc::JoinMode::train);
    auto [test_joined, test_drop] = afc::preprocess_and_join(test_res, feed,
                                                             afc::JoinMode::train);
    if (train_joined.empty()) throw std::runtime_error("run_report: empty training split");
    if (test_joined.empty()) throw std::runtime_error("run_report: empty test split");

    features::LatenessTable lateness = features::build_lateness_table(train_joined);
    std::vector<geo::GeoPoint> geo_points;
    if (fs::exists(cfg.city_dir / "geo.csv"))
        geo_points = geo::load_geo_csv(cfg.city_dir / "geo.csv");
    std::unordered_map<std::string, geo::RouteGeoStats> geo_stats =
        geo::compute_route_geo_stats(feed, geo_points, cfg.geo_buffer_m);
    FeatureContext ctx{&feed, &geo_stats, &lateness, cfg.feature_config};

    features::ExtractionStats fstats;
    learn::Dataset train_data = features::build_training_dataset(
        train_joined, feed, geo_stats, lateness, cfg.feature_config, &fstats);
    std::vector<double> loss_curve;
    learn::ModelArtifact model = learn::train(train_data, cfg.train, &loss_curve);
    learn::save_model(model, cfg.out_dir / "model.json");
    {
        CsvWriter w(cfg.out_dir / "loss_curve.csv");
        w.write_row({"round", "loss"});
        for (size_t i = 0; i < loss_curve.size(); ++i)
            w.write_row({std::to_string(i), fmt(loss_curve[i])});
    }

    std::vector<learn::Imputation> ml = impute_records(model, test_joined, ctx);
    baselines::HistoryIndex history =
        baselines::HistoryIndex::build(train_joined, cfg.compare.history_bucket_s);
    baselines::FrequencyTable freq = baselines::FrequencyTable::build(train_joined);
    std::vector<bool> observable(test_joined.size(), true);
    for (size_t i = 0; i < test_joined.size(); ++i) {
        std::int64_t idx = test_joined[i].input_index;
        if (idx >= 0 && size_t(idx) < test_obs.size())
            observable[i] = test_obs[size_t(idx)].boarding_stop_id.has_value();
    }

    CompareOutput cmp = compare_methods(test_joined, ml, history, freq, observable, cfg.compare);
    attach_model_auc(cmp.evals[0], model, test_joined, ctx);
    cmp.rows[0].overall = cmp.evals[0].report;

    std::vector<int> sched(test_joined.size());
    for (size_t i = 0; i < test_joined.size(); ++i) sched[i] = test_joined[i].predicted_seq;
    MethodEval sched_eval = evaluate_sequences("schedule", test_joined, sched, nullptr,
                                               cfg.compare.pareto_limit);

    for (const MethodEval& eval : cmp.evals)
        write_predictions_csv(cfg.out_dir / ("predictions_" + eval.name + ".csv"), eval);
    write_predictions_csv(cfg.out_dir / "predictions_schedule.csv", sched_eval);
    metrics::write_pareto_csv(cmp.evals[0].report.pareto, cfg.out_dir / "pareto_ml.csv");
    metrics::write_pareto_csv(sched_eval.report.pareto, cfg.out_dir / "pareto_schedule.csv");
    write_comparison_csv(cfg.out_dir / "comparison.csv", cmp.rows);
    {
        std::ofstream out(cfg.out_dir / "metrics_ml.json");
        out << cmp.evals[0].report.to_json().dump(2) << '\n';
    }
    {
        std::ofstream out(cfg.out_dir / "metrics_schedule.json");
        out << sched_eval.report.to_json().dump(2) << '\n';
    }

    write_temporal_csv(
        cfg.out_dir / "temporal_daily.csv", cfg.out_dir / "temporal_hourly.csv",
        {{"ml", temporal_breakdown(cmp.evals[0].rows, cfg.feature_config.weekend_days)},
         {"schedule", temporal_breakdown(sched_eval.rows, cfg.feature_config.weekend_days)}});
    write_spatial_csv(cfg.out_dir / "spatial_ml_stops.csv", cfg.out_dir / "spatial_ml_subset.csv",
                      spatial_breakdown(cmp.evals[0].rows, feed, cfg.spatial_threshold,
                                        cfg.spatial_min_support));
    write_spatial_csv(cfg.out_dir / "spatial_schedule_stops.csv",
                      cfg.out_dir / "spatial_schedule_subset.csv",
                      spatial_breakdown(sched_eval.rows, feed, cfg.spatial_threshold,
                                        cfg.spatial_min_support));

    std::vector<SubsetReport> subsets = robustness_subsets(
        cmp.evals[0], cmp.evals[1], cmp.evals[2], test_joined, cfg.compare.pareto_limit);
    {
        std::ofstream out(cfg.out_dir / "robustness.json");
        out << subsets_to_json(subsets).dump(2) << '\n';
    }

    learn::Dataset test_data = features::build_training_dataset(
        test_joined, feed, geo_stats, lateness, cfg.feature_config, nullptr);
    std::vector<learn::FeatureImportance> importance = learn::permutation_importance(
        model, test_data,
        [](std::span<const metrics::EvalPair> pairs) {
            return metrics::pareto_accuracy(pairs, 1);
        },
        cfg.train.seed, cfg.importance_shuffles);
    {
        CsvWriter w(cfg.out_dir / "importance.csv");
        w.write_row({"feature", "name", "mean_pa1_drop"});
        for (const learn::FeatureImportance& fi : importance)
            w.write_row({std::to_string(fi.feature), fi.name, fmt(fi.mean_drop)});
    }

    {
        std::ofstream out(cfg.out_dir / "parse_report.json");
        out << parse_report.to_json() << '\n';
    }
    {
        std::ofstream out(cfg.out_dir / "drop_report_train.json");
        out << train_drop.to_json() << '\n';
    }
    {
        std::ofstream out(cfg.out_dir / "drop_report_test.json");
        out << test_drop.to_json() << '\n';
    }
    {
        nlohmann::json j;
        for (const auto& [op, ratios] : afc::missingness_by_operator(observed)) j[op] = ratios;
        std::ofstream out(cfg.out_dir / "missingness_by_operator.json");
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(cfg.out_dir / "lateness_density.json");
        out << afc::lateness_density(train_joined).to_json() << '\n';
    }
    {
        nlohmann::json j;
        j["rows"] = fstats.rows;
        j["clipped_labels"] = fstats.clipped_labels;
        j["missing_geo"] = fstats.missing_geo;
        j["afc_parsed"] = load_stats.parsed;
        j["afc_malformed"] = load_stats.malformed;
        std::ofstream out(cfg.out_dir / "ingest_stats.json");
        out << j.dump(2) << '\n';
    }

    RunManifest manifest;
    manifest.inputs["city_dir"] = cfg.city_dir.string();
    manifest.inputs["gtfs"] = (cfg.city_dir / "gtfs").string();
    manifest.inputs["afc"] = (cfg.city_dir / "afc.csv").string();
    manifest.inputs["geo"] = (cfg.city_dir / "geo.csv").string();
    manifest.inputs["ground_truth"] = (cfg.city_dir / "ground_truth.csv").string();
    manifest.config = cfg.to_json();
    manifest.seed = cfg.train.seed;
    if (cfg.stamp) {
        char buf[32];
        std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        manifest.timestamp = buf;
    }
    write_manifest(manifest, cfg.out_dir / "manifest.json");
    return cmp;
}

}  // namespace stopfill::report
