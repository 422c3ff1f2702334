// stopfill: synthesize smart-card transit data, train boarding-stop
// imputation models, and compare them against schedule/history baselines.
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stopfill/csv.hpp"
#include "stopfill/report.hpp"

namespace fs = std::filesystem;
using namespace stopfill;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 1;
    fs::path out = "out";
};

struct City {
    gtfs::GtfsFeed feed;
    gtfs::ParseReport parse_report;
    afc::LoadStats load_stats;
    std::vector<afc::AfcRecord> observed;
    std::vector<afc::AfcRecord> restored;  // masked stops filled from ground truth
};

City load_city(const fs::path& dir) {
    City c;
    c.feed = gtfs::parse_feed(dir / "gtfs", &c.parse_report);
    c.observed = afc::load_afc(dir / "afc.csv", &c.load_stats);
    c.restored = c.observed;
    if (fs::exists(dir / "ground_truth.csv")) {
        for (const synth::TruthRow& t : synth::load_truth_csv(dir / "ground_truth.csv")) {
            if (t.record_index < 0 || size_t(t.record_index) >= c.restored.size()) continue;
            afc::AfcRecord& rec = c.restored[size_t(t.record_index)];
            if (!rec.boarding_stop_id) rec.boarding_stop_id = t.true_stop_id;
        }
    }
    return c;
}

std::unordered_map<std::string, geo::RouteGeoStats> load_geo(const City& city,
                                                             const fs::path& dir,
                                                             double buffer_m) {
    std::vector<geo::GeoPoint> pts;
    if (fs::exists(dir / "geo.csv")) pts = geo::load_geo_csv(dir / "geo.csv");
    return geo::compute_route_geo_stats(city.feed, pts, buffer_m);
}

// Labeled training material from the first train_days dates (0 = everything).
struct TrainData {
    std::vector<afc::JoinedRecord> joined;
    afc::DropReport drop;
    features::LatenessTable lateness;
    std::unordered_map<std::string, geo::RouteGeoStats> geo_stats;
    features::ExtractionStats stats;
    learn::Dataset data;
};

TrainData prepare_train(const City& city, const fs::path& dir, int train_days, double buffer_m,
                        const features::FeatureConfig& fc) {
    std::vector<afc::AfcRecord> recs =
        train_days > 0 ? features::split_by_date(city.observed, train_days).first
                       : city.observed;
    TrainData t;
    std::tie(t.joined, t.drop) = afc::preprocess_and_join(recs, city.feed, afc::JoinMode::train);
    if (t.joined.empty()) throw std::runtime_error("no usable training records");
    t.lateness = features::build_lateness_table(t.joined);
    t.geo_stats = load_geo(city, dir, buffer_m);
    t.data = features::build_training_dataset(t.joined, city.feed, t.geo_stats, t.lateness, fc,
                                              &t.stats);
    return t;
}

// Train/test joined records plus the feature context for evaluation runs.
struct EvalData {
    std::vector<afc::JoinedRecord> train, test;
    std::vector<bool> observable;  // test[i]'s stop present pre-restore
    features::LatenessTable lateness;
    std::unordered_map<std::string, geo::RouteGeoStats> geo_stats;
};

EvalData prepare_eval(const City& city, const fs::path& dir, int train_days, double buffer_m) {
    auto [train_obs, test_obs] = features::split_by_date(city.observed, train_days);
    auto [train_res, test_res] = features::split_by_date(city.restored, train_days);
    (void)train_res;
    EvalData e;
    e.train = afc::preprocess_and_join(train_obs, city.feed, afc::JoinMode::train).first;
    e.test = afc::preprocess_and_join(test_res, city.feed, afc::JoinMode::train).first;
    if (e.train.empty()) throw std::runtime_error("no usable training records");
    if (e.test.empty()) throw std::runtime_error("no scorable test records");
    e.lateness = features::build_lateness_table(e.train);
    e.geo_stats = load_geo(city, dir, buffer_m);
    e.observable.assign(e.test.size(), true);
    for (size_t i = 0; i < e.test.size(); ++i) {
        std::int64_t idx = e.test[i].input_index;
        if (idx >= 0 && size_t(idx) < test_obs.size())
            e.observable[i] = test_obs[size_t(idx)].boarding_stop_id.has_value();
    }
    return e;
}

void write_json(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text << '\n';
}

void add_train_flags(CLI::App* cmd, learn::TrainConfig& tc, std::string& learner) {
    cmd->add_option("--learner", learner, "gbt or logreg")
        ->check(CLI::IsMember({"gbt", "logreg"}));
    cmd->add_option("--rounds", tc.rounds, "boosting rounds (gbt) or epochs (logreg)");
    cmd->add_option("--max-depth", tc.max_depth, "tree depth limit");
    cmd->add_option("--learning-rate", tc.learning_rate, "shrinkage / step size");
    cmd->add_option("--l2-lambda", tc.l2_lambda, "L2 regularization");
    cmd->add_option("--min-child-weight", tc.min_child_weight, "minimum leaf hessian (gbt)");
}

void add_feature_flags(CLI::App* cmd, features::FeatureConfig& fc,
                       std::vector<int>& weekend_days) {
    cmd->add_option("--weekend-days", weekend_days, "weekday numbers counted as weekend, 0=Sunday")
        ->delimiter(',');
    cmd->add_flag("--geo-per-km", fc.normalize_geo_by_length,
                  "geo features as counts per km instead of raw counts");
}

void apply_weekend(features::FeatureConfig& fc, const std::vector<int>& weekend_days) {
    if (!weekend_days.empty())
        fc.weekend_days = std::set<int>(weekend_days.begin(), weekend_days.end());
}

void print_comparison(const std::vector<report::ComparisonRow>& rows) {
    std::printf("%-12s %9s %9s %9s %9s %9s\n", "method", "covered", "acc@cov", "accuracy",
                "pa1", "rmse");
    for (const report::ComparisonRow& r : rows) {
        double pa1 = r.overall.pareto.size() > 1 ? r.overall.pareto[1].second : 0.0;
        std::printf("%-12s %9.4f %9.4f %9.4f %9.4f %9.3f\n", r.method.c_str(),
                    r.percent_predicted, r.accuracy_predicted, r.overall.accuracy, pa1,
                    r.overall.rmse);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"boarding-stop imputation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value config file; [section] per subcommand");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "master RNG seed");
    app.add_option("--out", g.out, "output directory");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic city");
    synth::SynthConfig scfg;
    std::string lateness_kind = "none", mechanism = "random", start_date;
    std::vector<double> hour_factors, mu_by_hour;
    synth_cmd->add_option("--routes", scfg.num_routes, "number of routes");
    synth_cmd->add_option("--stops-per-route", scfg.stops_per_route, "stops per route");
    synth_cmd->add_option("--headway", scfg.headway_s, "seconds between departures");
    synth_cmd->add_option("--days", scfg.service_days, "service days to simulate");
    synth_cmd->add_option("--start-date", start_date, "first service date YYYY-MM-DD");
    synth_cmd->add_option("--service-start", scfg.service_start_s, "first departure, seconds");
    synth_cmd->add_option("--service-end", scfg.service_end_s, "last departure bound, seconds");
    synth_cmd->add_option("--operators", scfg.num_operators, "number of operators");
    synth_cmd->add_option("--interstop-time", scfg.interstop_time_s, "scheduled seconds per hop");
    synth_cmd->add_option("--spacing-min", scfg.stop_spacing_min_m, "min stop spacing, meters");
    synth_cmd->add_option("--spacing-max", scfg.stop_spacing_max_m, "max stop spacing, meters");
    synth_cmd->add_option("--lateness", lateness_kind, "none, drift or hourly")
        ->check(CLI::IsMember({"none", "drift", "hourly"}));
    synth_cmd->add_option("--mu", scfg.lateness.mu_per_stop_s, "mean lateness drift per stop");
    synth_cmd->add_option("--sigma", scfg.lateness.sigma_s, "lateness noise std dev");
    synth_cmd->add_option("--hour-factors", hour_factors, "24 hourly drift-mean multipliers")
        ->delimiter(',');
    synth_cmd->add_option("--mu-by-hour", mu_by_hour, "24 hourly mean offsets")->delimiter(',');
    synth_cmd->add_option("--commuters", scfg.num_commuters, "commuter population");
    synth_cmd->add_option("--trips-per-day", scfg.trips_per_commuter_per_day,
                          "boardings per commuter per day");
    synth_cmd->add_option("--one-time-fraction", scfg.one_time_traveler_fraction,
                          "fraction of boardings from single-use cards");
    synth_cmd->add_option("--attendance", scfg.attendance_prob, "per-day commuter show-up rate");
    synth_cmd->add_option("--missing-ratio", scfg.missing_ratio, "stop masking ratio");
    synth_cmd->add_option("--mechanism", mechanism, "random or operator_biased")
        ->check(CLI::IsMember({"random", "operator_biased"}));
    synth_cmd->add_option("--addresses-per-km", scfg.addresses_per_km);
    synth_cmd->add_option("--street-lights-per-km", scfg.street_lights_per_km);
    synth_cmd->add_option("--traffic-lights-per-km", scfg.traffic_lights_per_km);
    synth_cmd->callback([&] {
        scfg.seed = g.seed;
        if (!start_date.empty()) {
            scfg.start_date = parse_date(start_date);
            if (!scfg.start_date.valid()) throw CLI::ValidationError("--start-date", "bad date");
        }
        if (!parse_lateness_kind(lateness_kind, scfg.lateness.kind))
            throw CLI::ValidationError("--lateness", "unknown kind");
        if (!parse_mechanism(mechanism, scfg.mechanism))
            throw CLI::ValidationError("--mechanism", "unknown mechanism");
        auto fill24 = [](const std::vector<double>& src, std::array<double, 24>& dst,
                         const char* flag) {
            if (src.empty()) return;
            if (src.size() != 24) throw CLI::ValidationError(flag, "expected 24 values");
            std::copy(src.begin(), src.end(), dst.begin());
        };
        fill24(hour_factors, scfg.lateness.hour_factor, "--hour-factors");
        fill24(mu_by_hour, scfg.lateness.mu_by_hour, "--mu-by-hour");

        synth::SynthCity city = synth::generate(scfg);
        synth::write_city(city, g.out);
        write_json(g.out / "synth_config.json", scfg.to_json().dump(2));
        std::int64_t masked = 0;
        for (const afc::AfcRecord& r : city.afc) masked += !r.boarding_stop_id;
        std::printf("synth: %zu stops, %zu trips, %zu boardings (%lld masked) -> %s\n",
                    city.feed.stops.size(), city.feed.trips.size(), city.afc.size(),
                    (long long)masked, g.out.string().c_str());
    });

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "parse and join a city, emit reports");
    fs::path ingest_city;
    std::string join_mode = "train";
    ingest_cmd->add_option("--city", ingest_city, "city directory")->required();
    ingest_cmd->add_option("--mode", join_mode, "train drops unusable rows, impute keeps them")
        ->check(CLI::IsMember({"train", "impute"}));
    ingest_cmd->callback([&] {
        fs::create_directories(g.out);
        City city = load_city(ingest_city);
        afc::JoinMode mode = join_mode == "train" ? afc::JoinMode::train : afc::JoinMode::impute;
        auto [joined, drop] = afc::preprocess_and_join(city.observed, city.feed, mode);
        write_json(g.out / "parse_report.json", city.parse_report.to_json());
        write_json(g.out / "drop_report.json", drop.to_json());
        nlohmann::json miss;
        for (const auto& [op, ratios] : afc::missingness_by_operator(city.observed))
            miss[op] = ratios;
        write_json(g.out / "missingness_by_operator.json", miss.dump(2));
        write_json(g.out / "lateness_density.json", afc::lateness_density(joined).to_json());
        std::printf("ingest: %lld rows parsed (%lld malformed), %lld joined, %lld dropped\n",
                    (long long)city.load_stats.parsed, (long long)city.load_stats.malformed,
                    (long long)drop.retained, (long long)drop.total_dropped());
    });

    // features
    auto* feat_cmd = app.add_subcommand("features", "extract the labeled feature matrix");
    fs::path feat_city;
    int feat_days = 0;
    double feat_buffer = 50.0;
    features::FeatureConfig feat_fc;
    std::vector<int> feat_weekend;
    feat_cmd->add_option("--city", feat_city, "city directory")->required();
    feat_cmd->add_option("--train-days", feat_days, "restrict to the first N dates, 0 = all");
    feat_cmd->add_option("--geo-buffer", feat_buffer, "geo point buffer around shapes, meters");
    add_feature_flags(feat_cmd, feat_fc, feat_weekend);
    feat_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(feat_fc, feat_weekend);
        City city = load_city(feat_city);
        TrainData t = prepare_train(city, feat_city, feat_days, feat_buffer, feat_fc);
        features::write_feature_csv(g.out / "features.csv", t.data);
        nlohmann::json j;
        j["rows"] = t.stats.rows;
        j["clipped_labels"] = t.stats.clipped_labels;
        j["missing_geo"] = t.stats.missing_geo;
        j["classes"] = t.data.class_map;
        write_json(g.out / "extraction_stats.json", j.dump(2));
        std::printf("features: %lld rows, %d classes -> %s\n", (long long)t.stats.rows,
                    t.data.num_classes(), (g.out / "features.csv").string().c_str());
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "train an imputation model");
    fs::path train_city;
    int train_days = 0;
    double train_buffer = 50.0;
    learn::TrainConfig tcfg;
    std::string train_learner = "gbt";
    features::FeatureConfig train_fc;
    std::vector<int> train_weekend;
    train_cmd->add_option("--city", train_city, "city directory")->required();
    train_cmd->add_option("--train-days", train_days, "train on the first N dates, 0 = all");
    train_cmd->add_option("--geo-buffer", train_buffer, "geo buffer, meters");
    add_train_flags(train_cmd, tcfg, train_learner);
    add_feature_flags(train_cmd, train_fc, train_weekend);
    train_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(train_fc, train_weekend);
        tcfg.seed = g.seed;
        if (!learn::parse_learner(train_learner, tcfg.learner))
            throw CLI::ValidationError("--learner", "unknown learner");
        City city = load_city(train_city);
        TrainData t = prepare_train(city, train_city, train_days, train_buffer, train_fc);
        std::vector<double> loss_curve;
        learn::ModelArtifact model = learn::train(t.data, tcfg, &loss_curve);
        learn::save_model(model, g.out / "model.json");
        {
            CsvWriter w(g.out / "loss_curve.csv");
            w.write_row({"round", "loss"});
            char buf[40];
            for (size_t i = 0; i < loss_curve.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.10g", loss_curve[i]);
                w.write_row({std::to_string(i), buf});
            }
        }
        std::printf("train: %zu rows, %d classes, loss %.5f -> %.5f, model -> %s\n",
                    t.data.n(), t.data.num_classes(), loss_curve.front(), loss_curve.back(),
                    (g.out / "model.json").string().c_str());
    });

    // finetune
    auto* ft_cmd = app.add_subcommand("finetune", "continue training an existing model");
    fs::path ft_city, ft_model;
    int ft_days = 0, ft_rounds = 20;
    double ft_buffer = 50.0;
    features::FeatureConfig ft_fc;
    std::vector<int> ft_weekend;
    ft_cmd->add_option("--model", ft_model, "existing model.json")->required();
    ft_cmd->add_option("--city", ft_city, "new city directory")->required();
    ft_cmd->add_option("--extra-rounds", ft_rounds, "additional rounds (gbt) / epochs (logreg)");
    ft_cmd->add_option("--train-days", ft_days, "use the first N dates, 0 = all");
    ft_cmd->add_option("--geo-buffer", ft_buffer, "geo buffer, meters");
    add_feature_flags(ft_cmd, ft_fc, ft_weekend);
    ft_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(ft_fc, ft_weekend);
        learn::ModelArtifact model = learn::load_model(ft_model);
        City city = load_city(ft_city);
        TrainData t = prepare_train(city, ft_city, ft_days, ft_buffer, ft_fc);
        learn::ModelArtifact tuned = learn::fine_tune(model, t.data, ft_rounds);
        learn::save_model(tuned, g.out / "model.json");
        std::printf("finetune: +%d rounds on %zu rows, %d -> %d classes, model -> %s\n",
                    ft_rounds, t.data.n(), model.num_classes(), tuned.num_classes(),
                    (g.out / "model.json").string().c_str());
    });

    // impute
    auto* imp_cmd = app.add_subcommand("impute", "fill missing boarding stops");
    fs::path imp_city, imp_model;
    double imp_buffer = 50.0;
    bool imp_all = false;
    features::FeatureConfig imp_fc;
    std::vector<int> imp_weekend;
    imp_cmd->add_option("--model", imp_model, "model.json")->required();
    imp_cmd->add_option("--city", imp_city, "city directory")->required();
    imp_cmd->add_option("--geo-buffer", imp_buffer, "geo buffer, meters");
    imp_cmd->add_flag("--all", imp_all, "impute every record, not only missing-stop ones");
    add_feature_flags(imp_cmd, imp_fc, imp_weekend);
    imp_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(imp_fc, imp_weekend);
        learn::ModelArtifact model = learn::load_model(imp_model);
        City city = load_city(imp_city);
        auto [joined, drop] =
            afc::preprocess_and_join(city.observed, city.feed, afc::JoinMode::impute);
        std::vector<afc::JoinedRecord> labeled, targets;
        for (const afc::JoinedRecord& r : joined)
            (r.afc.boarding_stop_id ? labeled : targets).push_back(r);
        if (imp_all) targets = joined;
        if (targets.empty()) throw std::runtime_error("nothing to impute");
        if (labeled.empty())
            throw std::runtime_error("no labeled records to estimate lateness from");
        features::LatenessTable lateness = features::build_lateness_table(labeled);
        auto geo_stats = load_geo(city, imp_city, imp_buffer);
        report::FeatureContext ctx{&city.feed, &geo_stats, &lateness, imp_fc};
        std::vector<learn::Imputation> imputed = report::impute_records(model, targets, ctx);
        CsvWriter w(g.out / "imputed.csv");
        w.write_row({"input_index", "card_id", "service_date", "boarding_ts", "trip_id",
                     "route_id", "predicted_stop_id", "predicted_seq", "d_hat"});
        for (size_t i = 0; i < targets.size(); ++i) {
            const afc::JoinedRecord& r = targets[i];
            w.write_row({std::to_string(r.input_index), r.afc.card_id,
                         r.afc.service_date.to_string(), std::to_string(r.afc.boarding_ts),
                         r.afc.trip_id, r.trip->route_id, imputed[i].stop_id,
                         std::to_string(imputed[i].sequence), std::to_string(imputed[i].d_hat)});
        }
        std::printf("impute: %zu records filled (of %zu joined) -> %s\n", targets.size(),
                    joined.size(), (g.out / "imputed.csv").string().c_str());
    });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score a model on held-out dates");
    fs::path eval_city, eval_model;
    int eval_days = 21, eval_pareto = 5;
    double eval_buffer = 50.0;
    features::FeatureConfig eval_fc;
    std::vector<int> eval_weekend;
    eval_cmd->add_option("--model", eval_model, "model.json")->required();
    eval_cmd->add_option("--city", eval_city, "city directory")->required();
    eval_cmd->add_option("--train-days", eval_days, "dates reserved for context, rest scored");
    eval_cmd->add_option("--pareto-limit", eval_pareto, "largest tolerance level reported");
    eval_cmd->add_option("--geo-buffer", eval_buffer, "geo buffer, meters");
    add_feature_flags(eval_cmd, eval_fc, eval_weekend);
    eval_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(eval_fc, eval_weekend);
        learn::ModelArtifact model = learn::load_model(eval_model);
        City city = load_city(eval_city);
        EvalData e = prepare_eval(city, eval_city, eval_days, eval_buffer);
        report::FeatureContext ctx{&city.feed, &e.geo_stats, &e.lateness, eval_fc};
        report::MethodEval eval =
            report::evaluate_model("ml", model, e.test, ctx, eval_pareto);
        report::attach_model_auc(eval, model, e.test, ctx);
        write_json(g.out / "metrics.json", eval.report.to_json().dump(2));
        report::write_predictions_csv(g.out / "predictions.csv", eval);
        metrics::write_pareto_csv(eval.report.pareto, g.out / "pareto.csv");
        double pa1 = eval.report.pareto.size() > 1 ? eval.report.pareto[1].second : 0.0;
        std::printf("evaluate: n=%lld accuracy=%.4f pa1=%.4f rmse=%.3f\n",
                    (long long)eval.report.n, eval.report.accuracy, pa1, eval.report.rmse);
    });

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "model vs baselines on held-out dates");
    fs::path cmp_city, cmp_model;
    int cmp_days = 21;
    double cmp_buffer = 50.0;
    report::CompareOptions copt;
    bool cmp_unrestricted = false;
    features::FeatureConfig cmp_fc;
    std::vector<int> cmp_weekend;
    cmp_cmd->add_option("--model", cmp_model, "model.json")->required();
    cmp_cmd->add_option("--city", cmp_city, "city directory")->required();
    cmp_cmd->add_option("--train-days", cmp_days, "dates used to build baselines");
    cmp_cmd->add_option("--closeness-threshold", copt.closeness_threshold_s,
                        "co-boarder window, seconds");
    cmp_cmd->add_option("--history-bucket", copt.history_bucket_s,
                        "history time bucket, seconds");
    cmp_cmd->add_option("--pareto-limit", copt.pareto_limit, "largest tolerance level");
    cmp_cmd->add_flag("--unrestricted-semi-random", cmp_unrestricted,
                      "sample semi-random stops from the whole network");
    cmp_cmd->add_option("--geo-buffer", cmp_buffer, "geo buffer, meters");
    add_feature_flags(cmp_cmd, cmp_fc, cmp_weekend);
    cmp_cmd->callback([&] {
        fs::create_directories(g.out);
        apply_weekend(cmp_fc, cmp_weekend);
        copt.semi_random_seed = g.seed;
        copt.restrict_semi_random = !cmp_unrestricted;
        learn::ModelArtifact model = learn::load_model(cmp_model);
        City city = load_city(cmp_city);
        EvalData e = prepare_eval(city, cmp_city, cmp_days, cmp_buffer);
        report::FeatureContext ctx{&city.feed, &e.geo_stats, &e.lateness, cmp_fc};
        std::vector<learn::Imputation> ml = report::impute_records(model, e.test, ctx);
        baselines::HistoryIndex history =
            baselines::HistoryIndex::build(e.train, copt.history_bucket_s);
        baselines::FrequencyTable freq = baselines::FrequencyTable::build(e.train);
        report::CompareOutput cmp =
            report::compare_methods(e.test, ml, history, freq, e.observable, copt);
        report::attach_model_auc(cmp.evals[0], model, e.test, ctx);
        cmp.rows[0].overall = cmp.evals[0].report;
        report::write_comparison_csv(g.out / "comparison.csv", cmp.rows);
        for (const report::MethodEval& eval : cmp.evals)
            report::write_predictions_csv(g.out / ("predictions_" + eval.name + ".csv"), eval);
        std::vector<report::SubsetReport> subsets = report::robustness_subsets(
            cmp.evals[0], cmp.evals[1], cmp.evals[2], e.test, copt.pareto_limit);
        write_json(g.out / "robustness.json", report::subsets_to_json(subsets).dump(2));
        print_comparison(cmp.rows);
    });

    // report
    auto* rep_cmd = app.add_subcommand("report", "full pipeline: train, evaluate, write tables");
    report::PipelineConfig pcfg;
    std::string rep_learner = "gbt";
    std::vector<int> rep_weekend;
    bool rep_unrestricted = false;
    rep_cmd->add_option("--city", pcfg.city_dir, "city directory")->required();
    rep_cmd->add_option("--train-days", pcfg.train_days, "dates used for training");
    add_train_flags(rep_cmd, pcfg.train, rep_learner);
    add_feature_flags(rep_cmd, pcfg.feature_config, rep_weekend);
    rep_cmd->add_option("--closeness-threshold", pcfg.compare.closeness_threshold_s,
                        "co-boarder window, seconds");
    rep_cmd->add_option("--history-bucket", pcfg.compare.history_bucket_s,
                        "history time bucket, seconds");
    rep_cmd->add_option("--pareto-limit", pcfg.compare.pareto_limit, "largest tolerance level");
    rep_cmd->add_flag("--unrestricted-semi-random", rep_unrestricted,
                      "sample semi-random stops from the whole network");
    rep_cmd->add_option("--geo-buffer", pcfg.geo_buffer_m, "geo buffer, meters");
    rep_cmd->add_option("--spatial-threshold", pcfg.spatial_threshold,
                        "accuracy bound for the reliable-stop subset");
    rep_cmd->add_option("--spatial-min-support", pcfg.spatial_min_support,
                        "minimum boardings per stop for the subset");
    rep_cmd->add_option("--importance-shuffles", pcfg.importance_shuffles,
                        "permutation importance repetitions");
    rep_cmd->add_flag("--stamp", pcfg.stamp, "record wall-clock time in the manifest");
    rep_cmd->callback([&] {
        apply_weekend(pcfg.feature_config, rep_weekend);
        pcfg.train.seed = g.seed;
        pcfg.compare.semi_random_seed = g.seed;
        pcfg.compare.restrict_semi_random = !rep_unrestricted;
        if (!learn::parse_learner(rep_learner, pcfg.train.learner))
            throw CLI::ValidationError("--learner", "unknown learner");
        pcfg.out_dir = g.out;
        report::CompareOutput cmp = report::run_report(pcfg);
        print_comparison(cmp.rows);
        std::printf("report: wrote %s\n", g.out.string().c_str());
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "stopfill: %s\n", e.what());
        return 1;
    }
}
