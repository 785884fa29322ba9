#pragma once

#include "pfoa/cv/runner.hpp"

namespace pfoa::cv {

/// Second-layer fusion: for each fold f, a 2-feature GBM is trained on the
/// out-of-fold base predictions of all folds != f and applied to fold f, so
/// the stacked column stays out-of-fold end to end. Base columns must cover
/// the same knees with the same fold assignment.
PredictionColumn stack_second_layer(const PredictionColumn& preds_clinical,
                                    const PredictionColumn& preds_cnn,
                                    const gbm::GbmConfig& cfg,
                                    const std::string& model_name = "stacked");

/// Plain mean of the two probability columns (baseline fusion).
PredictionColumn mean_fusion(const PredictionColumn& a, const PredictionColumn& b,
                             const std::string& model_name = "mean_fusion");

}  // namespace pfoa::cv
