#pragma once

#include <vector>

#include "stopfill/dataset.hpp"
#include "stopfill/model.hpp"

namespace stopfill::learn::detail {

// Row-major softmax over margins[n x k]; writes probs in place is allowed
// (prob may alias margin only if caller does not reuse margins).
void softmax_rows(const std::vector<double>& margin, std::size_t n, int k,
                  std::vector<double>& prob);

// Mean cross-entropy of prob[n x k] against labels.
double mean_cross_entropy(const std::vector<double>& prob, std::span<const int> labels, int k);

GbtModel train_gbt(const Dataset& data, const TrainConfig& cfg, std::vector<double>* loss_curve);

// Appends extra_rounds rounds to model (already extended to num_classes
// covering new_data's labels remapped into model class indices).
void boost_more_rounds(GbtModel& model, const std::vector<FeatureRow>& rows,
                       const std::vector<int>& labels, int num_classes, const TrainConfig& cfg,
                       int extra_rounds);

LogRegModel train_logreg(const Dataset& data, const TrainConfig& cfg,
                         std::vector<double>* loss_curve);

// Continues minibatch gradient descent from the model's current weights on
// already-standardized rows.
void logreg_descend(LogRegModel& model, const std::vector<FeatureRow>& std_rows,
                    const std::vector<int>& labels, const TrainConfig& cfg, int epochs,
                    std::vector<double>* loss_curve);

std::vector<FeatureRow> standardize(const LogRegModel& model, std::span<const FeatureRow> rows);

void check_finite(std::span<const FeatureRow> rows);

}  // namespace stopfill::learn::detail
