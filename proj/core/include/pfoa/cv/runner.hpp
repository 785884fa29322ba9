#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pfoa/cv/folds.hpp"
#include "pfoa/gbm/gbm.hpp"
#include "pfoa/nn/train.hpp"

namespace pfoa::cv {

struct PredictionRow {
    std::string knee_id;
    int fold = 0;
    std::string model;
    double probability = 0.0;
    int label = 0;
};

/// Out-of-fold predictions of one model over the whole cohort, cohort order.
using PredictionColumn = std::vector<PredictionRow>;

/// Trains one model per fold via the callback (train indices, test indices)
/// -> probabilities for the test indices, and assembles the out-of-fold
/// column. Enforces that every fold's training portion carries both classes.
using FoldModelFn = std::function<std::vector<double>(const std::vector<std::size_t>&,
                                                      const std::vector<std::size_t>&)>;
PredictionColumn run_cv(const std::string& model_name,
                        const std::vector<synth::CohortRecord>& cohort,
                        const FoldAssignment& folds, const FoldModelFn& fn);

/// GBM reference model on a clinical feature subset (age, sex, bmi, womac, kl).
PredictionColumn run_cv_gbm(const std::vector<synth::CohortRecord>& cohort,
                            const FoldAssignment& folds,
                            const std::vector<std::string>& features,
                            const gbm::GbmConfig& cfg, const std::string& model_name);

/// CNN (with or without attention) over preprocessed ROIs aligned with the
/// cohort order. Each fold trains an independent, freshly seeded model.
PredictionColumn run_cv_cnn(const std::vector<synth::CohortRecord>& cohort,
                            const std::vector<nn::LabeledRoi>& rois,
                            const FoldAssignment& folds, const nn::BackboneConfig& arch,
                            const nn::TrainConfig& train_cfg,
                            const roi::PreprocessConfig& crop_cfg, bool with_attention,
                            const std::string& model_name);

/// Clinical FeatureMatrix (age, sex, bmi, womac, kl) over the cohort.
gbm::FeatureMatrix clinical_features(const std::vector<synth::CohortRecord>& cohort);

/// Per-fold AUC of a prediction column.
std::vector<double> per_fold_auc(const PredictionColumn& column, int k);

void write_prediction_csv(const std::filesystem::path& path, const PredictionColumn& column);
PredictionColumn read_prediction_csv(const std::filesystem::path& path);

}  // namespace pfoa::cv
