#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace stopfill::metrics {

// One evaluated prediction. Works on any integer label scale (stop sequences
// or delta classes); only identity and |p - a| matter.
struct EvalPair {
    int predicted = 0;
    int actual = 0;
    int d() const { return predicted >= actual ? predicted - actual : actual - predicted; }
};

// PA_l: fraction of pairs with |p - a| <= l. Throws on empty input.
double pareto_accuracy(std::span<const EvalPair> pairs, int l);

// (l, PA_l) for l = 0..limit. Nondecreasing, starts at accuracy.
std::vector<std::pair<int, double>> pareto_curve(std::span<const EvalPair> pairs, int limit);

double rmse(std::span<const EvalPair> pairs);

// Weighted one-vs-rest ROC AUC. scores[i][k] is the score of sample i for
// class k; actual[i] is the true class index. Per class: rank-based AUC of
// that column vs rest, then support-weighted mean. Classes with zero
// positives or zero negatives are skipped and the weights renormalized;
// throws if every class is skipped.
double auc_weighted_ovr(const std::vector<std::vector<double>>& scores,
                        std::span<const int> actual);

struct MetricsReport {
    std::int64_t n = 0;
    double accuracy = 0.0;
    double weighted_recall = 0.0;
    double weighted_precision = 0.0;
    double weighted_f1 = 0.0;
    double rmse = 0.0;
    double auc = 0.0;
    bool has_auc = false;
    bool degenerate_scores = false;  // AUC computed from one-hot baseline scores
    std::vector<std::pair<int, double>> pareto;  // (l, PA_l)

    nlohmann::json to_json() const;
};

// Accuracy plus support-weighted recall/precision/F1 over the classes present
// in actuals, RMSE, and the Pareto curve up to pareto_limit. AUC is left
// unset; fill it via auc_weighted_ovr when per-class scores exist.
MetricsReport classification_metrics(std::span<const EvalPair> pairs, int pareto_limit = 5);

void write_pareto_csv(const std::vector<std::pair<int, double>>& curve,
                      const std::filesystem::path& path);

}  // namespace stopfill::metrics
