#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "learn_internal.hpp"
#include "stopfill/rng.hpp"

namespace stopfill::learn {

double logreg_loss_and_gradient(std::span<const FeatureRow> rows, std::span<const int> labels,
                                int num_classes, const std::vector<std::vector<double>>& weights,
                                const std::vector<double>& bias, double l2_lambda,
                                std::vector<std::vector<double>>* grad_w,
                                std::vector<double>* grad_b) {
    size_t n = rows.size();
    if (n == 0 || labels.size() != n)
        throw std::invalid_argument("logreg_loss_and_gradient: bad input sizes");
    int k = num_classes;
    if (grad_w) grad_w->assign(size_t(k), std::vector<double>(size_t(kFeatureCount), 0.0));
    if (grad_b) grad_b->assign(size_t(k), 0.0);

    double loss = 0.0;
    std::vector<double> z(size_t(k), 0.0);
    for (size_t i = 0; i < n; ++i) {
        const FeatureRow& x = rows[i];
        double mx = -1e300;
        for (int c = 0; c < k; ++c) {
            double v = bias[size_t(c)];
            const std::vector<double>& w = weights[size_t(c)];
            for (int f = 0; f < kFeatureCount; ++f) v += w[size_t(f)] * x[size_t(f)];
            z[size_t(c)] = v;
            mx = std::max(mx, v);
        }
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            z[size_t(c)] = std::exp(z[size_t(c)] - mx);
            sum += z[size_t(c)];
        }
        int y = labels[i];
        loss -= std::log(std::max(z[size_t(y)] / sum, 1e-300));
        if (grad_w || grad_b) {
            for (int c = 0; c < k; ++c) {
                double dz = z[size_t(c)] / sum - (c == y ? 1.0 : 0.0);
                if (grad_b) (*grad_b)[size_t(c)] += dz;
                if (grad_w) {
                    std::vector<double>& gw = (*grad_w)[size_t(c)];
                    for (int f = 0; f < kFeatureCount; ++f) gw[size_t(f)] += dz * x[size_t(f)];
                }
            }
        }
    }
    loss /= double(n);
    if (grad_b)
        for (double& v : *grad_b) v /= double(n);
    double l2 = 0.0;
    for (int c = 0; c < k; ++c) {
        const std::vector<double>& w = weights[size_t(c)];
        for (int f = 0; f < kFeatureCount; ++f) {
            l2 += w[size_t(f)] * w[size_t(f)];
            if (grad_w) {
                std::vector<double>& gw = (*grad_w)[size_t(c)];
                gw[size_t(f)] = gw[size_t(f)] / double(n) + l2_lambda * w[size_t(f)];
            }
        }
    }
    return loss + 0.5 * l2_lambda * l2;
}

namespace detail {

namespace {
constexpr size_t kBatchSize = 64;
constexpr std::uint64_t kShuffleTag = 0x106;
}  // namespace

std::vector<FeatureRow> standardize(const LogRegModel& model, std::span<const FeatureRow> rows) {
    std::vector<FeatureRow> out(rows.begin(), rows.end());
    for (FeatureRow& r : out)
        for (int f = 0; f < kFeatureCount; ++f)
            r[size_t(f)] = (r[size_t(f)] - model.mean[size_t(f)]) / model.scale[size_t(f)];
    return out;
}

void logreg_descend(LogRegModel& model, const std::vector<FeatureRow>& std_rows,
                    const std::vector<int>& labels, const TrainConfig& cfg, int epochs,
                    std::vector<double>* loss_curve) {
    size_t n = std_rows.size();
    int k = int(model.bias.size());
    Rng rng = SeedSequence(cfg.seed).stream(kShuffleTag);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<FeatureRow> batch;
    std::vector<int> batch_labels;
    std::vector<std::vector<double>> gw;
    std::vector<double> gb;
    if (loss_curve)
        loss_curve->push_back(logreg_loss_and_gradient(std_rows, labels, k, model.weights,
                                                       model.bias, cfg.l2_lambda, nullptr,
                                                       nullptr));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[size_t(rng.uniform_index(i))]);
        for (size_t start = 0; start < n; start += kBatchSize) {
            size_t end = std::min(start + kBatchSize, n);
            batch.clear();
            batch_labels.clear();
            for (size_t i = start; i < end; ++i) {
                batch.push_back(std_rows[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            logreg_loss_and_gradient(batch, batch_labels, k, model.weights, model.bias,
                                     cfg.l2_lambda, &gw, &gb);
            for (int c = 0; c < k; ++c) {
                model.bias[size_t(c)] -= cfg.learning_rate * gb[size_t(c)];
                for (int f = 0; f < kFeatureCount; ++f)
                    model.weights[size_t(c)][size_t(f)] -=
                        cfg.learning_rate * gw[size_t(c)][size_t(f)];
            }
        }
        if (loss_curve)
            loss_curve->push_back(logreg_loss_and_gradient(std_rows, labels, k, model.weights,
                                                           model.bias, cfg.l2_lambda, nullptr,
                                                           nullptr));
    }
}

LogRegModel train_logreg(const Dataset& data, const TrainConfig& cfg,
                         std::vector<double>* loss_curve) {
    size_t n = data.n();
    int k = data.num_classes();
    LogRegModel model;
    model.mean.assign(size_t(kFeatureCount), 0.0);
    model.scale.assign(size_t(kFeatureCount), 1.0);
    for (const FeatureRow& r : data.rows)
        for (int f = 0; f < kFeatureCount; ++f) model.mean[size_t(f)] += r[size_t(f)];
    for (double& m : model.mean) m /= double(n);
    std::vector<double> var(size_t(kFeatureCount), 0.0);
    for (const FeatureRow& r : data.rows)
        for (int f = 0; f < kFeatureCount; ++f) {
            double d = r[size_t(f)] - model.mean[size_t(f)];
            var[size_t(f)] += d * d;
        }
    for (int f = 0; f < kFeatureCount; ++f) {
        double s = std::sqrt(var[size_t(f)] / double(n));
        model.scale[size_t(f)] = s > 1e-12 ? s : 1.0;
    }
    model.weights.assign(size_t(k), std::vector<double>(size_t(kFeatureCount), 0.0));
    model.bias.assign(size_t(k), 0.0);

    std::vector<FeatureRow> std_rows = standardize(model, data.rows);
    logreg_descend(model, std_rows, data.labels, cfg, cfg.rounds, loss_curve);
    return model;
}

}  // namespace detail
}  // namespace stopfill::learn
