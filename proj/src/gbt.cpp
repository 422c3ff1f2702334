#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "learn_internal.hpp"

namespace stopfill::learn {

double Tree::eval(const FeatureRow& x) const {
    int i = 0;
    while (!nodes[size_t(i)].is_leaf()) {
        const TreeNode& nd = nodes[size_t(i)];
        i = x[size_t(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[size_t(i)].value;
}

namespace detail {

void softmax_rows(const std::vector<double>& margin, std::size_t n, int k,
                  std::vector<double>& prob) {
    prob.resize(n * size_t(k));
    for (size_t i = 0; i < n; ++i) {
        const double* m = &margin[i * size_t(k)];
        double* p = &prob[i * size_t(k)];
        double mx = m[0];
        for (int c = 1; c < k; ++c) mx = std::max(mx, m[c]);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            p[c] = std::exp(m[c] - mx);
            sum += p[c];
        }
        for (int c = 0; c < k; ++c) p[c] /= sum;
    }
}

double mean_cross_entropy(const std::vector<double>& prob, std::span<const int> labels, int k) {
    double loss = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        double p = prob[i * size_t(k) + size_t(labels[i])];
        loss -= std::log(std::max(p, 1e-300));
    }
    return loss / double(labels.size());
}

void check_finite(std::span<const FeatureRow> rows) {
    for (const FeatureRow& r : rows)
        for (double v : r)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
}

namespace {

constexpr int kMaxBins = 256;
constexpr double kMinGain = 1e-12;

// Quantile-binned copy of the feature matrix. cuts[f] holds at most 255
// sorted thresholds; bin(x) = number of cuts <= x, so a split at cut c_j
// sends bins 0..j (all values < c_j) left.
struct BinnedMatrix {
    std::array<std::vector<double>, size_t(kFeatureCount)> cuts;
    std::vector<std::uint16_t> bins;  // n x kFeatureCount, row-major
    std::size_t n = 0;

    std::uint16_t bin(size_t row, int f) const {
        return bins[row * size_t(kFeatureCount) + size_t(f)];
    }
};

BinnedMatrix bin_rows(const std::vector<FeatureRow>& rows) {
    BinnedMatrix bm;
    bm.n = rows.size();
    bm.bins.resize(bm.n * size_t(kFeatureCount));
    std::vector<double> vals(bm.n);
    for (int f = 0; f < kFeatureCount; ++f) {
        for (size_t i = 0; i < bm.n; ++i) vals[i] = rows[i][size_t(f)];
        std::sort(vals.begin(), vals.end());
        std::vector<double>& cuts = bm.cuts[size_t(f)];
        cuts.clear();
        std::vector<double> uniq(vals);
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() <= size_t(kMaxBins)) {
            cuts.assign(uniq.begin() + (uniq.empty() ? 0 : 1), uniq.end());
        } else {
            for (int b = 1; b < kMaxBins; ++b) {
                double c = vals[size_t(b) * bm.n / size_t(kMaxBins)];
                if (c > vals[0] && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
            }
        }
        for (size_t i = 0; i < bm.n; ++i) {
            double x = rows[i][size_t(f)];
            auto it = std::upper_bound(cuts.begin(), cuts.end(), x);
            bm.bins[i * size_t(kFeatureCount) + size_t(f)] =
                std::uint16_t(it - cuts.begin());
        }
    }
    return bm;
}

struct SplitResult {
    double gain = 0.0;
    int feature = -1;
    int cut = -1;  // index into cuts[feature]
    double gl = 0.0, hl = 0.0;
};

class TreeBuilder {
  public:
    TreeBuilder(const BinnedMatrix& bm, const TrainConfig& cfg) : bm_(bm), cfg_(cfg) {
        hist_g_.resize(size_t(kFeatureCount) * kMaxBins);
        hist_h_.resize(size_t(kFeatureCount) * kMaxBins);
    }

    // g/h indexed by row id; row_out[i] receives the leaf value reached by
    // row i (only rows in the root set are touched).
    Tree fit(const std::vector<double>& g, const std::vector<double>& h,
             std::vector<double>& row_out) {
        g_ = &g;
        h_ = &h;
        Tree tree;
        std::vector<int> rows(bm_.n);
        for (size_t i = 0; i < bm_.n; ++i) rows[i] = int(i);
        double gsum = 0.0, hsum = 0.0;
        for (int r : rows) {
            gsum += g[size_t(r)];
            hsum += h[size_t(r)];
        }
        tree.nodes.emplace_back();
        build(tree, 0, std::move(rows), 0, gsum, hsum, row_out);
        return tree;
    }

  private:
    void build(Tree& tree, int node, std::vector<int> rows, int depth, double gsum, double hsum,
               std::vector<double>& row_out) {
        SplitResult best;
        if (depth < cfg_.max_depth && rows.size() >= 2) best = find_split(rows, gsum, hsum);
        if (best.feature < 0) {
            double denom = hsum + cfg_.l2_lambda;
            double value = denom > 1e-16 ? -gsum / denom * cfg_.learning_rate : 0.0;
            tree.nodes[size_t(node)].feature = -1;
            tree.nodes[size_t(node)].value = value;
            for (int r : rows) row_out[size_t(r)] = value;
            return;
        }
        std::vector<int> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (int r : rows) {
            if (bm_.bin(size_t(r), best.feature) <= best.cut)
                left.push_back(r);
            else
                right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        int li = int(tree.nodes.size());
        tree.nodes.emplace_back();
        int ri = int(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& nd = tree.nodes[size_t(node)];
        nd.feature = best.feature;
        nd.threshold = bm_.cuts[size_t(best.feature)][size_t(best.cut)];
        nd.left = li;
        nd.right = ri;
        build(tree, li, std::move(left), depth + 1, best.gl, best.hl, row_out);
        build(tree, ri, std::move(right), depth + 1, gsum - best.gl, hsum - best.hl, row_out);
    }

    SplitResult find_split(const std::vector<int>& rows, double gsum, double hsum) {
        std::memset(hist_g_.data(), 0, hist_g_.size() * sizeof(double));
        std::memset(hist_h_.data(), 0, hist_h_.size() * sizeof(double));
        const std::vector<double>& g = *g_;
        const std::vector<double>& h = *h_;
        for (int r : rows) {
            const std::uint16_t* b = &bm_.bins[size_t(r) * size_t(kFeatureCount)];
            double gr = g[size_t(r)], hr = h[size_t(r)];
            for (int f = 0; f < kFeatureCount; ++f) {
                hist_g_[size_t(f) * kMaxBins + b[f]] += gr;
                hist_h_[size_t(f) * kMaxBins + b[f]] += hr;
            }
        }
        double lambda = cfg_.l2_lambda;
        double parent = gsum * gsum / (hsum + lambda);
        SplitResult best;
        best.gain = kMinGain;  // minimum acceptable; exact ties keep the
                               // earliest (feature asc, cut asc) candidate
        for (int f = 0; f < kFeatureCount; ++f) {
            int ncuts = int(bm_.cuts[size_t(f)].size());
            double gl = 0.0, hl = 0.0;
            for (int j = 0; j < ncuts; ++j) {
                gl += hist_g_[size_t(f) * kMaxBins + size_t(j)];
                hl += hist_h_[size_t(f) * kMaxBins + size_t(j)];
                double gr2 = gsum - gl, hr2 = hsum - hl;
                if (hl < cfg_.min_child_weight || hr2 < cfg_.min_child_weight) continue;
                double gain = gl * gl / (hl + lambda) + gr2 * gr2 / (hr2 + lambda) - parent;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = f;
                    best.cut = j;
                    best.gl = gl;
                    best.hl = hl;
                }
            }
        }
        return best;
    }

    const BinnedMatrix& bm_;
    const TrainConfig& cfg_;
    const std::vector<double>* g_ = nullptr;
    const std::vector<double>* h_ = nullptr;
    std::vector<double> hist_g_, hist_h_;
};

void run_rounds(GbtModel& model, const BinnedMatrix& bm, const std::vector<int>& labels,
                int num_classes, const TrainConfig& cfg, int rounds,
                std::vector<double>* loss_curve, std::vector<double>& margin) {
    size_t n = bm.n;
    int k = num_classes;
    std::vector<double> prob, g(n), h(n), row_out(n);
    TreeBuilder builder(bm, cfg);
    softmax_rows(margin, n, k, prob);
    if (loss_curve) loss_curve->push_back(mean_cross_entropy(prob, labels, k));
    for (int round = 0; round < rounds; ++round) {
        std::vector<Tree> round_trees;
        round_trees.reserve(size_t(k));
        for (int c = 0; c < k; ++c) {
            for (size_t i = 0; i < n; ++i) {
                double p = prob[i * size_t(k) + size_t(c)];
                g[i] = p - (labels[i] == c ? 1.0 : 0.0);
                h[i] = p * (1.0 - p);
            }
            round_trees.push_back(builder.fit(g, h, row_out));
            for (size_t i = 0; i < n; ++i) margin[i * size_t(k) + size_t(c)] += row_out[i];
        }
        model.rounds.push_back(std::move(round_trees));
        softmax_rows(margin, n, k, prob);
        if (loss_curve) loss_curve->push_back(mean_cross_entropy(prob, labels, k));
    }
}

}  // namespace

GbtModel train_gbt(const Dataset& data, const TrainConfig& cfg, std::vector<double>* loss_curve) {
    size_t n = data.n();
    int k = data.num_classes();
    GbtModel model;
    std::vector<std::int64_t> counts(size_t(k), 0);
    for (int y : data.labels) ++counts[size_t(y)];
    model.base_score.resize(size_t(k));
    for (int c = 0; c < k; ++c)
        model.base_score[size_t(c)] = std::log(double(counts[size_t(c)]) / double(n));

    BinnedMatrix bm = bin_rows(data.rows);
    std::vector<double> margin(n * size_t(k));
    for (size_t i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c) margin[i * size_t(k) + size_t(c)] = model.base_score[size_t(c)];
    run_rounds(model, bm, data.labels, k, cfg, cfg.rounds, loss_curve, margin);
    return model;
}

void boost_more_rounds(GbtModel& model, const std::vector<FeatureRow>& rows,
                       const std::vector<int>& labels, int num_classes, const TrainConfig& cfg,
                       int extra_rounds) {
    size_t n = rows.size();
    int k = num_classes;
    BinnedMatrix bm = bin_rows(rows);
    std::vector<double> margin(n * size_t(k));
    for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) {
            double m = model.base_score[size_t(c)];
            for (const std::vector<Tree>& round : model.rounds)
                if (size_t(c) < round.size()) m += round[size_t(c)].eval(rows[i]);
            margin[i * size_t(k) + size_t(c)] = m;
        }
    }
    run_rounds(model, bm, labels, k, cfg, extra_rounds, nullptr, margin);
}

}  // namespace detail
}  // namespace stopfill::learn
