#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stopfill/afc.hpp"
#include "stopfill/dataset.hpp"
#include "stopfill/metrics.hpp"

namespace stopfill::learn {

// Regression tree stored as a flat node array, root at index 0.
// Routing rule: x[feature] < threshold -> left, else right.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double eval(const FeatureRow& x) const;
};

// One tree per class per boosting round; margin_k = base_score_k + sum of
// that class's trees. base_score is the log class prior, so an ensemble with
// no effective splits predicts the empirical priors.
struct GbtModel {
    std::vector<double> base_score;         // per class
    std::vector<std::vector<Tree>> rounds;  // rounds[r][k]; later rounds may
                                            // have more trees after fine-tuning
};

// Multinomial logistic regression on standardized features.
struct LogRegModel {
    std::vector<double> mean;   // per feature
    std::vector<double> scale;  // per feature, never zero
    std::vector<std::vector<double>> weights;  // class x feature
    std::vector<double> bias;                  // per class
};

struct ModelMeta {
    std::uint64_t seed = 0;
    int rounds = 0;
    std::uint64_t data_hash = 0;
    std::int64_t n_rows = 0;
};

struct ModelArtifact {
    Learner kind = Learner::gbt;
    std::vector<int> class_map;  // class index -> D value
    std::vector<std::string> feature_names;
    GbtModel gbt;
    LogRegModel logreg;
    TrainConfig config;
    ModelMeta meta;

    int num_classes() const { return int(class_map.size()); }
};

// Trains either learner per cfg.learner. Deterministic given cfg.seed.
// Throws on fewer than two classes or any non-finite feature. When
// loss_curve is non-null it receives the initial training loss followed by
// the loss after every round/epoch, so it holds rounds + 1 entries
// (mean cross-entropy; logreg adds the L2 term).
ModelArtifact train(const Dataset& data, const TrainConfig& cfg,
                    std::vector<double>* loss_curve = nullptr);

struct Prediction {
    std::vector<double> probs;  // over class_map, sums to 1
    int class_index = 0;
    int d_hat = 0;  // class_map[class_index]
};

// Pure. Ties in the distribution break toward smaller |D|, then smaller D.
Prediction predict(const ModelArtifact& model, const FeatureRow& x);
std::vector<Prediction> predict_batch(const ModelArtifact& model,
                                      std::span<const FeatureRow> rows);

struct Imputation {
    std::string stop_id;
    int sequence = 0;  // clamp(S + d_hat, 1, stop_count)
    int d_hat = 0;
};

Imputation impute_stop(const ModelArtifact& model, const FeatureRow& x,
                       const afc::JoinedRecord& record);

// GBT: appends extra_rounds boosting rounds fit on new_data, base trees
// frozen; D values unseen by the original model are appended to class_map
// with no trees and a base score equal to the smallest existing one.
// LogReg: continues gradient descent on new_data (warm start), reusing the
// stored standardization. extra_rounds = 0 with an unchanged class set
// returns an identical artifact.
ModelArtifact fine_tune(const ModelArtifact& model, const Dataset& new_data, int extra_rounds);

using MetricFn = std::function<double(std::span<const metrics::EvalPair>)>;

struct FeatureImportance {
    int feature = 0;
    std::string name;
    double mean_drop = 0.0;
};

// Mean drop of metric (higher = better) over k column shuffles per feature,
// sorted by drop descending (ties: feature index ascending). Deterministic
// given seed.
std::vector<FeatureImportance> permutation_importance(const ModelArtifact& model,
                                                      const Dataset& data, const MetricFn& metric,
                                                      std::uint64_t seed, int shuffles = 5);

nlohmann::json model_to_json(const ModelArtifact& model);
ModelArtifact model_from_json(const nlohmann::json& j);
void save_model(const ModelArtifact& model, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

// Full-batch multinomial cross-entropy with L2 on weights (not bias):
//   loss = mean CE + l2_lambda/2 * sum w^2
// Rows must already be standardized. Gradients are written when the out
// params are non-null; used by training and by finite-difference checks.
double logreg_loss_and_gradient(std::span<const FeatureRow> rows, std::span<const int> labels,
                                int num_classes, const std::vector<std::vector<double>>& weights,
                                const std::vector<double>& bias, double l2_lambda,
                                std::vector<std::vector<double>>* grad_w,
                                std::vector<double>* grad_b);

}  // namespace stopfill::learn
