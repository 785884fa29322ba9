#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfoa/common/image.hpp"
#include "pfoa/roi/pipeline.hpp"

namespace pfoa::synth {

/// Monotone risk weights applied to standardized covariates. BMI, WOMAC and
/// KL must be risk-increasing (>= 0).
struct EffectStrengths {
    double bmi = 0.6;
    double womac = 0.9;
    double kl = 1.5;
    double sex = 0.35;
    double age = 0.0;
};

struct SynthConfig {
    int n_subjects = 500;
    int knees_per_subject = 2;  // 1 or 2
    double target_prevalence = 0.12;
    int image_size = 256;
    EffectStrengths effect_strengths;
    double lesion_contrast = 0.5;
    double risk_noise = 1.0;    // sd of the per-knee noise on the risk score
    double pixel_noise = 0.02;  // sd of additive image noise
    int n_landmarks = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Radiographic severity grades, each in [0, 3].
struct LatentSeverity {
    int osteophyte = 0;
    int jsn = 0;
    int sclerosis = 0;
    int cysts = 0;
};

struct CohortRecord {
    std::string subject_id;
    roi::Side side = roi::Side::kLeft;
    double age = 0.0;
    int sex = 0;  // 1 = female
    double bmi = 0.0;
    double womac = 0.0;
    int kl = 0;
    int label = 0;  // 1 = progressor
    LatentSeverity latent;
    std::uint64_t render_seed = 0;  // fully determines the rendered image

    std::string knee_id() const {
        return subject_id + (side == roi::Side::kLeft ? "_L" : "_R");
    }
};

/// Composite endpoint on the severity grades: progressor iff osteophyte >= 2,
/// or JSN >= 1 together with any osteophyte, sclerosis or cyst >= 1.
int assign_label(const LatentSeverity& latent);

/// Deterministic synthetic cohort with the planted covariate-to-severity
/// link. Labels derive from the latent grades via assign_label, so image
/// content and label are causally tied.
std::vector<CohortRecord> generate_cohort(const SynthConfig& config);

struct RenderedKnee {
    ImageF64 image;  // values in [0,1]
    roi::LandmarkSet landmarks;
    std::vector<Rect> lesion_boxes;  // osteophyte blobs + joint-space band
};

/// Renders the record's knee: patellar ellipse, femoral edge, joint-space gap
/// shrunk with the JSN grade, osteophyte blobs at the patellar poles scaled
/// by grade, random global rotation in [-15, 15] degrees, landmark points on
/// the patellar outline. Pure function of (record, config).
RenderedKnee render_knee_image(const CohortRecord& record, const SynthConfig& config);

/// Same, with the global rotation pinned (the no-argument overload draws it
/// from the record's render seed).
RenderedKnee render_knee_image(const CohortRecord& record, const SynthConfig& config,
                               double rotation_deg);

}  // namespace pfoa::synth
