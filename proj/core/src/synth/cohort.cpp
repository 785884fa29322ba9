#include "pfoa/synth/cohort.hpp"

#include <algorithm>
#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"

namespace pfoa::synth {

namespace {

// Covariate generating distributions (see also the standardization below).
constexpr double kAgeMean = 61.0, kAgeSd = 8.0;
constexpr double kBmiMean = 30.0, kBmiSd = 5.0;
constexpr double kWomacMean = 15.0, kWomacSd = 15.0;
constexpr double kFemaleFraction = 0.6;
// KL grade categorical, skewed toward no/mild tibiofemoral OA.
constexpr double kKlWeights[5] = {0.40, 0.25, 0.17, 0.11, 0.07};
constexpr double kKlMean = 1.20;
constexpr double kKlSd = 1.2649110640673518;  // sqrt(E[k^2] - mean^2)

int sample_kl(Rng& rng) {
    double u = rng.uniform();
    for (int k = 0; k < 5; ++k) {
        if (u < kKlWeights[k]) return k;
        u -= kKlWeights[k];
    }
    return 4;
}

void check_grade(int g, const char* name) {
    if (g < 0 || g > 3)
        throw ValidationError(std::string(name) + " grade outside [0,3]: " + std::to_string(g));
}

LatentSeverity progressor_grades(double intensity, Rng& rng) {
    // intensity in (0,1]: how far past the decision threshold this knee sits
    LatentSeverity g;
    if (rng.bernoulli(0.5)) {
        // osteophyte-driven phenotype
        g.osteophyte = intensity > 0.75 ? 3 : 2;
        g.jsn = intensity > 0.6 ? (intensity > 0.9 ? 2 : 1) : 0;
        g.sclerosis = rng.bernoulli(0.3 + 0.3 * intensity) ? 1 : 0;
        g.cysts = rng.bernoulli(0.15) ? 1 : 0;
    } else {
        // narrowing-driven phenotype with at least one companion sign
        g.jsn = 1 + (intensity > 0.7 ? 1 : 0) + (intensity > 0.93 ? 1 : 0);
        switch (rng.uniform_int(0, 2)) {
            case 0: g.osteophyte = 1; break;
            case 1: g.sclerosis = 1 + (intensity > 0.85 ? 1 : 0); break;
            default: g.cysts = 1; break;
        }
        if (rng.bernoulli(0.25 * intensity)) g.sclerosis = std::max(g.sclerosis, 1);
    }
    return g;
}

LatentSeverity nonprogressor_grades(double closeness, Rng& rng) {
    // closeness in [0,1): knees nearer the threshold show more minor signs
    LatentSeverity g;
    const double u = rng.uniform();
    if (u < 0.18 + 0.35 * closeness) {
        g.osteophyte = 1;  // minor osteophyte alone stays non-progressor
        if (rng.bernoulli(0.2)) g.sclerosis = 1;
        if (rng.bernoulli(0.1)) g.cysts = 1;
    } else if (u < 0.26 + 0.4 * closeness) {
        g.jsn = 1;  // isolated narrowing, no companion signs
    }
    return g;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_subjects < 2)
        throw ConfigError("n_subjects must be >= 2, got " + std::to_string(n_subjects));
    if (knees_per_subject < 1 || knees_per_subject > 2)
        throw ConfigError("knees_per_subject must be 1 or 2");
    if (!(target_prevalence > 0.0 && target_prevalence < 1.0))
        throw ConfigError("target_prevalence must lie in (0,1), got " +
                          std::to_string(target_prevalence));
    if (image_size < 64)
        throw ConfigError("image_size must be >= 64, got " + std::to_string(image_size));
    if (effect_strengths.bmi < 0.0 || effect_strengths.womac < 0.0 || effect_strengths.kl < 0.0)
        throw ConfigError("effect strengths for bmi/womac/kl must be >= 0 (risk-increasing)");
    if (risk_noise < 0.0) throw ConfigError("risk_noise must be >= 0");
    if (n_landmarks < 4) throw ConfigError("n_landmarks must be >= 4");
}

int assign_label(const LatentSeverity& latent) {
    check_grade(latent.osteophyte, "osteophyte");
    check_grade(latent.jsn, "jsn");
    check_grade(latent.sclerosis, "sclerosis");
    check_grade(latent.cysts, "cysts");
    if (latent.osteophyte >= 2) return 1;
    if (latent.jsn >= 1 &&
        (latent.osteophyte >= 1 || latent.sclerosis >= 1 || latent.cysts >= 1))
        return 1;
    return 0;
}

std::vector<CohortRecord> generate_cohort(const SynthConfig& config) {
    config.validate();
    const EffectStrengths& w = config.effect_strengths;

    struct KneeDraw {
        CohortRecord record;
        double risk = 0.0;
    };
    std::vector<KneeDraw> knees;
    knees.reserve(static_cast<std::size_t>(config.n_subjects) * config.knees_per_subject);

    for (int s = 0; s < config.n_subjects; ++s) {
        Rng rng(config.seed, static_cast<std::uint64_t>(s));
        CohortRecord base;
        char id[16];
        std::snprintf(id, sizeof(id), "S%05d", s);
        base.subject_id = id;
        base.age = rng.truncated_normal(kAgeMean, kAgeSd, 45.0, 85.0);
        base.sex = rng.bernoulli(kFemaleFraction) ? 1 : 0;
        base.bmi = rng.truncated_normal(kBmiMean, kBmiSd, 18.0, 50.0);
        base.womac = rng.truncated_normal(kWomacMean, kWomacSd, 0.0, 96.0);

        for (int k = 0; k < config.knees_per_subject; ++k) {
            KneeDraw knee;
            knee.record = base;
            knee.record.side = (k == 0) ? roi::Side::kLeft : roi::Side::kRight;
            knee.record.kl = sample_kl(rng);
            knee.record.render_seed =
                mix_seed(config.seed, (static_cast<std::uint64_t>(s) << 1) | k);

            const double z_age = (base.age - kAgeMean) / kAgeSd;
            const double z_bmi = (base.bmi - kBmiMean) / kBmiSd;
            const double z_womac = (base.womac - kWomacMean) / kWomacSd;
            const double z_kl = (knee.record.kl - kKlMean) / kKlSd;
            const double z_sex = (base.sex - kFemaleFraction) /
                                 std::sqrt(kFemaleFraction * (1.0 - kFemaleFraction));
            knee.risk = w.age * z_age + w.bmi * z_bmi + w.womac * z_womac + w.kl * z_kl +
                        w.sex * z_sex + rng.normal(0.0, config.risk_noise);
            knees.push_back(std::move(knee));
        }
    }

    // Calibrate the decision threshold on the realized risk distribution so
    // the cohort prevalence lands on target.
    std::vector<double> risks;
    risks.reserve(knees.size());
    for (const KneeDraw& k : knees) risks.push_back(k.risk);
    std::vector<double> sorted = risks;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() - sorted.front() < 1e-9)
        throw ConfigError(
            "risk distribution is degenerate (all effect strengths and risk_noise ~ 0); "
            "cannot realize target_prevalence=" + std::to_string(config.target_prevalence));
    const std::size_t n_pos = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(config.target_prevalence *
                                                static_cast<double>(knees.size()))));
    const double tau = sorted[sorted.size() - n_pos];
    const double spread_hi = std::max(sorted.back() - tau, 1e-9);
    const double spread_lo = std::max(tau - sorted.front(), 1e-9);

    std::vector<CohortRecord> cohort;
    cohort.reserve(knees.size());
    for (std::size_t i = 0; i < knees.size(); ++i) {
        CohortRecord rec = knees[i].record;
        Rng rng(rec.render_seed, 0xC0F0ULL);  // grade draws, separate stream
        const double risk = knees[i].risk;
        if (risk >= tau) {
            const double intensity = std::min(1.0, (risk - tau) / spread_hi + 0.05);
            rec.latent = progressor_grades(intensity, rng);
        } else {
            const double closeness = std::max(0.0, 1.0 - (tau - risk) / spread_lo);
            rec.latent = nonprogressor_grades(closeness, rng);
        }
        rec.label = assign_label(rec.latent);
        cohort.push_back(std::move(rec));
    }
    return cohort;
}

}  // namespace pfoa::synth
