#include "stopfill/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "learn_internal.hpp"
#include "stopfill/features.hpp"
#include "stopfill/rng.hpp"

namespace stopfill::learn {

int Dataset::class_index_of(int d) const {
    for (size_t i = 0; i < class_map.size(); ++i)
        if (class_map[i] == d) return int(i);
    return -1;
}

const char* learner_name(Learner l) { return l == Learner::gbt ? "gbt" : "logreg"; }

bool parse_learner(const std::string& name, Learner& out) {
    if (name == "gbt") {
        out = Learner::gbt;
        return true;
    }
    if (name == "logreg") {
        out = Learner::logreg;
        return true;
    }
    return false;
}

std::uint64_t dataset_hash(const Dataset& data) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t len) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const FeatureRow& r : data.rows) mix(r.data(), sizeof(double) * r.size());
    if (!data.labels.empty()) mix(data.labels.data(), data.labels.size() * sizeof(int));
    if (!data.class_map.empty()) mix(data.class_map.data(), data.class_map.size() * sizeof(int));
    return h;
}

namespace {

void validate_training_data(const Dataset& data) {
    if (data.n() == 0) throw std::invalid_argument("train: empty dataset");
    if (data.labels.size() != data.n())
        throw std::invalid_argument("train: label count != row count");
    for (int y : data.labels)
        if (y < 0 || y >= data.num_classes())
            throw std::invalid_argument("train: label outside class_map");
    detail::check_finite(data.rows);
}

void validate_config(const TrainConfig& cfg) {
    if (cfg.rounds < 1) throw std::invalid_argument("train: rounds must be >= 1");
    if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0))
        throw std::invalid_argument("train: learning_rate must be in (0, 1]");
    if (cfg.max_depth < 0) throw std::invalid_argument("train: max_depth must be >= 0");
}

// smaller |D| wins, then smaller D
bool better_tie(int d_new, int d_old) {
    int an = d_new < 0 ? -d_new : d_new;
    int ao = d_old < 0 ? -d_old : d_old;
    return an != ao ? an < ao : d_new < d_old;
}

}  // namespace

ModelArtifact train(const Dataset& data, const TrainConfig& cfg,
                    std::vector<double>* loss_curve) {
    validate_training_data(data);
    validate_config(cfg);
    if (data.num_classes() < 2)
        throw std::invalid_argument("train: need at least two classes, got " +
                                    std::to_string(data.num_classes()));
    ModelArtifact m;
    m.kind = cfg.learner;
    m.class_map = data.class_map;
    m.feature_names.assign(features::kFeatureNames.begin(), features::kFeatureNames.end());
    m.config = cfg;
    m.meta.seed = cfg.seed;
    m.meta.rounds = cfg.rounds;
    m.meta.data_hash = dataset_hash(data);
    m.meta.n_rows = std::int64_t(data.n());
    if (loss_curve) loss_curve->clear();
    if (cfg.learner == Learner::gbt)
        m.gbt = detail::train_gbt(data, cfg, loss_curve);
    else
        m.logreg = detail::train_logreg(data, cfg, loss_curve);
    return m;
}

Prediction predict(const ModelArtifact& model, const FeatureRow& x) {
    if (int(model.feature_names.size()) != kFeatureCount)
        throw std::invalid_argument("predict: model feature schema mismatch");
    int k = model.num_classes();
    if (k == 0) throw std::invalid_argument("predict: empty class map");
    std::vector<double> margin(size_t(k), 0.0);
    if (model.kind == Learner::gbt) {
        for (int c = 0; c < k; ++c) margin[size_t(c)] = model.gbt.base_score[size_t(c)];
        for (const std::vector<Tree>& round : model.gbt.rounds)
            for (size_t c = 0; c < round.size(); ++c) margin[c] += round[c].eval(x);
    } else {
        for (int c = 0; c < k; ++c) {
            double v = model.logreg.bias[size_t(c)];
            const std::vector<double>& w = model.logreg.weights[size_t(c)];
            for (int f = 0; f < kFeatureCount; ++f)
                v += w[size_t(f)] * (x[size_t(f)] - model.logreg.mean[size_t(f)]) /
                     model.logreg.scale[size_t(f)];
            margin[size_t(c)] = v;
        }
    }
    Prediction pred;
    pred.probs.resize(size_t(k));
    double mx = *std::max_element(margin.begin(), margin.end());
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
        pred.probs[size_t(c)] = std::exp(margin[size_t(c)] - mx);
        sum += pred.probs[size_t(c)];
    }
    int best = 0;
    for (int c = 0; c < k; ++c) {
        pred.probs[size_t(c)] /= sum;
        if (c > 0) {
            double pc = pred.probs[size_t(c)], pb = pred.probs[size_t(best)];
            if (pc > pb ||
                (pc == pb && better_tie(model.class_map[size_t(c)], model.class_map[size_t(best)])))
                best = c;
        }
    }
    pred.class_index = best;
    pred.d_hat = model.class_map[size_t(best)];
    return pred;
}

std::vector<Prediction> predict_batch(const ModelArtifact& model,
                                      std::span<const FeatureRow> rows) {
    std::vector<Prediction> out;
    out.reserve(rows.size());
    for (const FeatureRow& x : rows) out.push_back(predict(model, x));
    return out;
}

Imputation impute_stop(const ModelArtifact& model, const FeatureRow& x,
                       const afc::JoinedRecord& record) {
    Prediction p = predict(model, x);
    const gtfs::TripSchedule& trip = *record.trip;
    Imputation imp;
    imp.d_hat = p.d_hat;
    imp.sequence = std::clamp(record.predicted_seq + p.d_hat, 1, trip.stop_count());
    imp.stop_id = trip.events[size_t(imp.sequence) - 1].stop_id;
    return imp;
}

ModelArtifact fine_tune(const ModelArtifact& model, const Dataset& new_data, int extra_rounds) {
    validate_training_data(new_data);
    if (extra_rounds < 0) throw std::invalid_argument("fine_tune: extra_rounds must be >= 0");
    ModelArtifact out = model;

    std::vector<int> remap(size_t(new_data.num_classes()), 0);
    for (int c = 0; c < new_data.num_classes(); ++c) {
        int d = new_data.d_value(c);
        int idx = -1;
        for (size_t i = 0; i < out.class_map.size(); ++i)
            if (out.class_map[i] == d) {
                idx = int(i);
                break;
            }
        if (idx < 0) {
            // unseen D value: append with no trees and the smallest existing
            // base score, so it never outranks trained classes by default
            out.class_map.push_back(d);
            idx = out.num_classes() - 1;
            if (out.kind == Learner::gbt) {
                double mn = *std::min_element(out.gbt.base_score.begin(),
                                              out.gbt.base_score.end());
                out.gbt.base_score.push_back(mn);
            } else {
                out.logreg.weights.emplace_back(size_t(kFeatureCount), 0.0);
                out.logreg.bias.push_back(0.0);
            }
        }
        remap[size_t(c)] = idx;
    }
    if (extra_rounds == 0) return out;

    std::vector<int> labels(new_data.labels.size());
    for (size_t i = 0; i < labels.size(); ++i)
        labels[i] = remap[size_t(new_data.labels[i])];
    if (out.kind == Learner::gbt) {
        detail::boost_more_rounds(out.gbt, new_data.rows, labels, out.num_classes(), out.config,
                                  extra_rounds);
    } else {
        std::vector<FeatureRow> std_rows = detail::standardize(out.logreg, new_data.rows);
        detail::logreg_descend(out.logreg, std_rows, labels, out.config, extra_rounds, nullptr);
    }
    out.meta.rounds += extra_rounds;
    return out;
}

std::vector<FeatureImportance> permutation_importance(const ModelArtifact& model,
                                                      const Dataset& data, const MetricFn& metric,
                                                      std::uint64_t seed, int shuffles) {
    if (data.n() == 0) throw std::invalid_argument("permutation_importance: empty dataset");
    if (data.labels.size() != data.n())
        throw std::invalid_argument("permutation_importance: unlabeled dataset");
    size_t n = data.n();

    auto score = [&](const std::vector<FeatureRow>& rows) {
        std::vector<metrics::EvalPair> pairs(n);
        for (size_t i = 0; i < n; ++i) {
            Prediction p = predict(model, rows[i]);
            pairs[i] = {p.d_hat, data.d_value(data.labels[i])};
        }
        return metric(pairs);
    };
    double base = score(data.rows);

    SeedSequence seq(seed);
    std::vector<FeatureRow> work = data.rows;
    std::vector<double> column(n);
    std::vector<FeatureImportance> out;
    for (int f = 0; f < kFeatureCount; ++f) {
        double drop_sum = 0.0;
        for (int s = 0; s < shuffles; ++s) {
            Rng rng = seq.stream((std::uint64_t(f) << 32) | std::uint64_t(s));
            for (size_t i = 0; i < n; ++i) column[i] = data.rows[i][size_t(f)];
            for (size_t i = n; i > 1; --i)
                std::swap(column[i - 1], column[size_t(rng.uniform_index(i))]);
            for (size_t i = 0; i < n; ++i) work[i][size_t(f)] = column[i];
            drop_sum += base - score(work);
        }
        for (size_t i = 0; i < n; ++i) work[i][size_t(f)] = data.rows[i][size_t(f)];
        FeatureImportance fi;
        fi.feature = f;
        fi.name = size_t(f) < model.feature_names.size() ? model.feature_names[size_t(f)] : "";
        fi.mean_drop = drop_sum / double(shuffles);
        out.push_back(std::move(fi));
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a,
                                                const FeatureImportance& b) {
        return a.mean_drop != b.mean_drop ? a.mean_drop > b.mean_drop : a.feature < b.feature;
    });
    return out;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, int idx) {
    const TreeNode& nd = tree.nodes[size_t(idx)];
    nlohmann::json j;
    if (nd.is_leaf()) {
        j["value"] = nd.value;
    } else {
        j["feature"] = nd.feature;
        j["threshold"] = nd.threshold;
        j["left"] = node_to_json(tree, nd.left);
        j["right"] = node_to_json(tree, nd.right);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree) {
    int idx = int(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("value")) {
        tree.nodes[size_t(idx)].value = j.at("value").get<double>();
    } else {
        int f = j.at("feature").get<int>();
        double t = j.at("threshold").get<double>();
        int l = node_from_json(j.at("left"), tree);
        int r = node_from_json(j.at("right"), tree);
        TreeNode& nd = tree.nodes[size_t(idx)];
        nd.feature = f;
        nd.threshold = t;
        nd.left = l;
        nd.right = r;
    }
    return idx;
}

}  // namespace

nlohmann::json model_to_json(const ModelArtifact& model) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = learner_name(model.kind);
    j["class_map"] = model.class_map;
    j["feature_names"] = model.feature_names;
    j["config"] = {{"learner", learner_name(model.config.learner)},
                   {"rounds", model.config.rounds},
                   {"max_depth", model.config.max_depth},
                   {"learning_rate", model.config.learning_rate},
                   {"l2_lambda", model.config.l2_lambda},
                   {"seed", model.config.seed},
                   {"min_child_weight", model.config.min_child_weight}};
    j["meta"] = {{"seed", model.meta.seed},
                 {"rounds", model.meta.rounds},
                 {"data_hash", model.meta.data_hash},
                 {"n_rows", model.meta.n_rows}};
    if (model.kind == Learner::gbt) {
        nlohmann::json rounds = nlohmann::json::array();
        for (const std::vector<Tree>& round : model.gbt.rounds) {
            nlohmann::json trees = nlohmann::json::array();
            for (const Tree& t : round) trees.push_back(node_to_json(t, 0));
            rounds.push_back(std::move(trees));
        }
        j["gbt"] = {{"base_score", model.gbt.base_score}, {"rounds", std::move(rounds)}};
    } else {
        j["logreg"] = {{"mean", model.logreg.mean},
                       {"scale", model.logreg.scale},
                       {"weights", model.logreg.weights},
                       {"bias", model.logreg.bias}};
    }
    return j;
}

ModelArtifact model_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != 1)
        throw std::runtime_error("model: unsupported schema version");
    ModelArtifact m;
    if (!parse_learner(j.at("kind").get<std::string>(), m.kind))
        throw std::runtime_error("model: unknown learner kind");
    m.class_map = j.at("class_map").get<std::vector<int>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (m.class_map.empty()) throw std::runtime_error("model: empty class map");
    if (int(m.feature_names.size()) != kFeatureCount)
        throw std::runtime_error("model: feature schema must list exactly " +
                                 std::to_string(kFeatureCount) + " names");
    const nlohmann::json& cfg = j.at("config");
    parse_learner(cfg.at("learner").get<std::string>(), m.config.learner);
    m.config.rounds = cfg.at("rounds").get<int>();
    m.config.max_depth = cfg.at("max_depth").get<int>();
    m.config.learning_rate = cfg.at("learning_rate").get<double>();
    m.config.l2_lambda = cfg.at("l2_lambda").get<double>();
    m.config.seed = cfg.at("seed").get<std::uint64_t>();
    m.config.min_child_weight = cfg.at("min_child_weight").get<double>();
    const nlohmann::json& meta = j.at("meta");
    m.meta.seed = meta.at("seed").get<std::uint64_t>();
    m.meta.rounds = meta.at("rounds").get<int>();
    m.meta.data_hash = meta.at("data_hash").get<std::uint64_t>();
    m.meta.n_rows = meta.at("n_rows").get<std::int64_t>();
    if (m.kind == Learner::gbt) {
        const nlohmann::json& g = j.at("gbt");
        m.gbt.base_score = g.at("base_score").get<std::vector<double>>();
        for (const nlohmann::json& round : g.at("rounds")) {
            std::vector<Tree> trees;
            for (const nlohmann::json& tj : round) {
                Tree t;
                node_from_json(tj, t);
                trees.push_back(std::move(t));
            }
            m.gbt.rounds.push_back(std::move(trees));
        }
    } else {
        const nlohmann::json& l = j.at("logreg");
        m.logreg.mean = l.at("mean").get<std::vector<double>>();
        m.logreg.scale = l.at("scale").get<std::vector<double>>();
        m.logreg.weights = l.at("weights").get<std::vector<std::vector<double>>>();
        m.logreg.bias = l.at("bias").get<std::vector<double>>();
    }
    return m;
}

void save_model(const ModelArtifact& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(model).dump() << '\n';
}

ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace stopfill::learn
