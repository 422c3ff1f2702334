#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace stopfill::learn {

inline constexpr int kFeatureCount = 15;

using FeatureRow = std::array<double, kFeatureCount>;

// Labeled (or unlabeled, when labels is empty) feature matrix. class_map is
// the bijection class index <-> D value, sorted ascending by D.
struct Dataset {
    std::vector<FeatureRow> rows;
    std::vector<int> labels;     // class indices into class_map
    std::vector<int> class_map;  // index -> D value

    std::size_t n() const { return rows.size(); }
    int num_classes() const { return int(class_map.size()); }
    int d_value(int class_index) const { return class_map[size_t(class_index)]; }
    int class_index_of(int d) const;  // -1 when absent
};

enum class Learner { gbt, logreg };

struct TrainConfig {
    Learner learner = Learner::gbt;
    int rounds = 100;
    int max_depth = 6;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    std::uint64_t seed = 0;
    double min_child_weight = 1.0;
};

const char* learner_name(Learner l);
bool parse_learner(const std::string& name, Learner& out);

// FNV-1a over the row/label bytes; recorded in trained model metadata.
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace stopfill::learn
