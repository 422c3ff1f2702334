#include "stopfill/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "stopfill/csv.hpp"

namespace stopfill::metrics {

double pareto_accuracy(std::span<const EvalPair> pairs, int l) {
    if (pairs.empty()) throw std::invalid_argument("pareto_accuracy: empty input");
    std::int64_t hits = 0;
    for (const EvalPair& p : pairs)
        if (p.d() <= l) ++hits;
    return double(hits) / double(pairs.size());
}

std::vector<std::pair<int, double>> pareto_curve(std::span<const EvalPair> pairs, int limit) {
    std::vector<std::pair<int, double>> curve;
    curve.reserve(size_t(limit) + 1);
    for (int l = 0; l <= limit; ++l) curve.emplace_back(l, pareto_accuracy(pairs, l));
    return curve;
}

double rmse(std::span<const EvalPair> pairs) {
    if (pairs.empty()) throw std::invalid_argument("rmse: empty input");
    double sum = 0.0;
    for (const EvalPair& p : pairs) {
        double d = double(p.predicted - p.actual);
        sum += d * d;
    }
    return std::sqrt(sum / double(pairs.size()));
}

double auc_weighted_ovr(const std::vector<std::vector<double>>& scores,
                        std::span<const int> actual) {
    size_t n = actual.size();
    if (n == 0 || scores.size() != n)
        throw std::invalid_argument("auc_weighted_ovr: empty input or size mismatch");
    size_t num_classes = scores[0].size();

    std::vector<std::int64_t> support(num_classes, 0);
    for (int a : actual) {
        if (a < 0 || size_t(a) >= num_classes)
            throw std::invalid_argument("auc_weighted_ovr: class index out of range");
        ++support[size_t(a)];
    }

    double weighted_sum = 0.0;
    std::int64_t used_support = 0;
    std::vector<size_t> order(n);
    std::vector<double> rank(n);
    for (size_t k = 0; k < num_classes; ++k) {
        std::int64_t pos = support[k];
        std::int64_t neg = std::int64_t(n) - pos;
        if (pos == 0 || neg == 0) continue;  // ROC undefined, skip and renormalize

        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return scores[a][k] < scores[b][k]; });
        // average ranks for ties (1-based)
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && scores[order[j + 1]][k] == scores[order[i]][k]) ++j;
            double avg = 0.5 * double(i + 1 + j + 1);
            for (size_t t = i; t <= j; ++t) rank[order[t]] = avg;
            i = j + 1;
        }
        double rank_sum = 0.0;
        for (size_t t = 0; t < n; ++t)
            if (size_t(actual[t]) == k) rank_sum += rank[t];
        double auc = (rank_sum - 0.5 * double(pos) * double(pos + 1)) / (double(pos) * double(neg));
        weighted_sum += double(pos) * auc;
        used_support += pos;
    }
    if (used_support == 0)
        throw std::invalid_argument("auc_weighted_ovr: no class has both positives and negatives");
    return weighted_sum / double(used_support);
}

MetricsReport classification_metrics(std::span<const EvalPair> pairs, int pareto_limit) {
    if (pairs.empty()) throw std::invalid_argument("classification_metrics: empty input");
    MetricsReport rep;
    rep.n = std::int64_t(pairs.size());

    // per-class counts keyed by label value; classes = values present in actuals
    std::map<int, std::int64_t> support, true_pos;
    std::map<int, std::int64_t> predicted_count;
    for (const EvalPair& p : pairs) {
        ++support[p.actual];
        ++predicted_count[p.predicted];
        if (p.predicted == p.actual) ++true_pos[p.actual];
    }

    double n = double(pairs.size());
    double recall_sum = 0.0, precision_sum = 0.0, f1_sum = 0.0;
    std::int64_t correct = 0;
    for (auto& [cls, sup] : support) {
        std::int64_t tp = true_pos.count(cls) ? true_pos[cls] : 0;
        correct += tp;
        auto pc_it = predicted_count.find(cls);
        std::int64_t pc = pc_it == predicted_count.end() ? 0 : pc_it->second;
        double recall = double(tp) / double(sup);
        double precision = pc > 0 ? double(tp) / double(pc) : 0.0;
        double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        double w = double(sup);
        recall_sum += double(tp);  // w * recall, simplified: keeps recall == accuracy exact
        precision_sum += w * precision;
        f1_sum += w * f1;
    }
    rep.accuracy = double(correct) / n;
    rep.weighted_recall = recall_sum / n;
    rep.weighted_precision = precision_sum / n;
    rep.weighted_f1 = f1_sum / n;
    rep.rmse = rmse(pairs);
    rep.pareto = pareto_curve(pairs, pareto_limit);
    return rep;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["accuracy"] = accuracy;
    j["weighted_recall"] = weighted_recall;
    j["weighted_precision"] = weighted_precision;
    j["weighted_f1"] = weighted_f1;
    j["rmse"] = rmse;
    if (has_auc) {
        j["weighted_ovr_auc"] = auc;
        j["degenerate_scores"] = degenerate_scores;
    } else {
        j["weighted_ovr_auc"] = nullptr;
    }
    nlohmann::json curve = nlohmann::json::array();
    for (auto& [l, pa] : pareto) curve.push_back({{"l", l}, {"pa", pa}});
    j["pareto"] = curve;
    return j;
}

void write_pareto_csv(const std::vector<std::pair<int, double>>& curve,
                      const std::filesystem::path& path) {
    CsvWriter w(path);
    w.write_row({"l", "PA_l"});
    char buf[40];
    for (auto& [l, pa] : curve) {
        std::snprintf(buf, sizeof(buf), "%.10g", pa);
        w.write_row({std::to_string(l), buf});
    }
}

}  // namespace stopfill::metrics
