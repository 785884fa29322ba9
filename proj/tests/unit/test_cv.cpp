#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/cv/folds.hpp"
#include "pfoa/cv/runner.hpp"
#include "pfoa/cv/stack.hpp"
#include "pfoa/stats/metrics.hpp"

using namespace pfoa;
using cv::FoldAssignment;
using cv::PredictionColumn;

namespace {

std::vector<synth::CohortRecord> demo_cohort(int n_subjects, double prevalence,
                                             std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.n_subjects = n_subjects;
    cfg.target_prevalence = prevalence;
    cfg.seed = seed;
    return synth::generate_cohort(cfg);
}

double column_auc(const PredictionColumn& col) {
    stats::ScoredSet s;
    for (const auto& r : col) {
        s.scores.push_back(r.probability);
        s.labels.push_back(r.label);
    }
    return stats::auc(s);
}

}  // namespace

TEST_CASE("make_folds: both knees of a subject share a fold; folds partition subjects") {
    const auto cohort = demo_cohort(200, 0.12, 3);
    const auto folds = cv::make_folds(cohort, 5, 1);
    std::map<std::string, std::set<int>> seen;
    for (const auto& rec : cohort)
        seen[rec.subject_id].insert(folds.fold_of(rec.subject_id));
    for (const auto& [subject, fold_set] : seen) CHECK(fold_set.size() == 1);
    CHECK(folds.fold_of_subject.size() == 200);
}

TEST_CASE("make_folds: per-fold prevalence within 2pp of overall at n=1000 subjects") {
    const auto cohort = demo_cohort(1000, 0.12, 7);
    const auto folds = cv::make_folds(cohort, 5, 1);
    std::vector<double> pos(5, 0.0), total(5, 0.0);
    double all_pos = 0.0;
    for (const auto& rec : cohort) {
        const int f = folds.fold_of(rec.subject_id);
        pos[static_cast<std::size_t>(f)] += rec.label;
        total[static_cast<std::size_t>(f)] += 1.0;
        all_pos += rec.label;
    }
    const double overall = all_pos / static_cast<double>(cohort.size());
    for (int f = 0; f < 5; ++f) {
        const double frac = pos[static_cast<std::size_t>(f)] / total[static_cast<std::size_t>(f)];
        CHECK(std::fabs(frac - overall) <= 0.02);
        CHECK(frac >= 0.10);
        CHECK(frac <= 0.14);
    }
}

TEST_CASE("make_folds: deterministic per seed, different across seeds, hash detects it") {
    const auto cohort = demo_cohort(150, 0.15, 9);
    const auto a = cv::make_folds(cohort, 5, 11);
    const auto b = cv::make_folds(cohort, 5, 11);
    const auto c = cv::make_folds(cohort, 5, 12);
    CHECK(a.fold_of_subject == b.fold_of_subject);
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("make_folds rejects k < 2 and too few positive subjects") {
    const auto cohort = demo_cohort(50, 0.12, 13);
    CHECK_THROWS_AS(cv::make_folds(cohort, 1, 0), ValidationError);

    // cohort with a single positive subject
    auto tiny = demo_cohort(30, 0.12, 17);
    bool first = true;
    std::string keep;
    for (auto& rec : tiny) {
        if (rec.label == 1) {
            if (first) {
                keep = rec.subject_id;
                first = false;
            }
            if (rec.subject_id != keep) {
                rec.label = 0;
                rec.latent = {};
            }
        }
    }
    CHECK_THROWS_AS(cv::make_folds(tiny, 5, 0), ValidationError);
}

TEST_CASE("run_cv: every knee predicted exactly once, by a fold-excluded model") {
    const auto cohort = demo_cohort(120, 0.25, 19);
    const auto folds = cv::make_folds(cohort, 4, 2);

    // the fold function also audits that its own test knees are excluded
    const auto column = cv::run_cv(
        "probe", cohort, folds,
        [&](const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx) {
            std::set<std::string> train_subjects, test_subjects;
            for (std::size_t i : train_idx) train_subjects.insert(cohort[i].subject_id);
            for (std::size_t i : test_idx) test_subjects.insert(cohort[i].subject_id);
            for (const auto& s : test_subjects) CHECK(train_subjects.count(s) == 0);
            return std::vector<double>(test_idx.size(), 0.5);
        });
    CHECK(column.size() == cohort.size());
    std::set<std::string> ids;
    for (const auto& r : column) ids.insert(r.knee_id);
    CHECK(ids.size() == cohort.size());
}

TEST_CASE("run_cv leakage audit: corrupting a test fold cannot change its predictions") {
    auto cohort = demo_cohort(100, 0.3, 23);
    const auto folds = cv::make_folds(cohort, 4, 3);
    gbm::GbmConfig cfg;
    cfg.n_trees = 40;
    cfg.min_samples_leaf = 5;
    const std::vector<std::string> features{"age", "sex", "bmi", "womac", "kl"};
    const auto base = cv::run_cv_gbm(cohort, folds, features, cfg, "gbm3");

    // poison every fold-0 knee's label; fold-0 predictions must be unchanged
    auto poisoned = cohort;
    for (auto& rec : poisoned)
        if (folds.fold_of(rec.subject_id) == 0) rec.label = 1 - rec.label;
    const auto after = cv::run_cv_gbm(poisoned, folds, features, cfg, "gbm3");
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].fold != 0) continue;
        CHECK(base[i].probability == after[i].probability);
    }
}

TEST_CASE("run_cv_gbm: adding WOMAC and KL improves AUC on the planted cohort") {
    const auto cohort = demo_cohort(400, 0.2, 29);
    const auto folds = cv::make_folds(cohort, 5, 4);
    gbm::GbmConfig cfg;
    cfg.n_trees = 120;
    const auto model1 =
        cv::run_cv_gbm(cohort, folds, {"age", "sex", "bmi"}, cfg, "gbm1");
    const auto model3 =
        cv::run_cv_gbm(cohort, folds, {"age", "sex", "bmi", "womac", "kl"}, cfg, "gbm3");
    CHECK(column_auc(model3) > column_auc(model1));
}

TEST_CASE("run_cv rejects a single-class training fold") {
    auto cohort = demo_cohort(40, 0.15, 31);
    for (auto& rec : cohort) rec.label = 0;
    // hand-build folds (make_folds would reject this cohort outright)
    FoldAssignment folds;
    folds.k = 2;
    int i = 0;
    for (const auto& rec : cohort) folds.fold_of_subject[rec.subject_id] = (i++ / 2) % 2;
    CHECK_THROWS_AS(
        cv::run_cv("x", cohort, folds,
                   [](const auto&, const auto& test_idx) {
                       return std::vector<double>(test_idx.size(), 0.5);
                   }),
        ValidationError);
}

TEST_CASE("stacking: perfect base learner gives stacked AUC 1.0") {
    const auto cohort = demo_cohort(150, 0.3, 37);
    const auto folds = cv::make_folds(cohort, 5, 5);
    PredictionColumn clinical, cnn;
    Rng rng(41);
    for (const auto& rec : cohort) {
        const int f = folds.fold_of(rec.subject_id);
        clinical.push_back({rec.knee_id(), f, "gbm3", rng.uniform(), rec.label});
        cnn.push_back({rec.knee_id(), f, "cnn", rec.label ? 0.9 : 0.1, rec.label});
    }
    gbm::GbmConfig cfg;
    cfg.max_leaves = 4;
    cfg.n_trees = 60;
    cfg.min_samples_leaf = 10;
    const auto stacked = cv::stack_second_layer(clinical, cnn, cfg);
    CHECK(column_auc(stacked) == doctest::Approx(1.0));
}

TEST_CASE("stacking duplicated columns roughly preserves the input AUC") {
    const auto cohort = demo_cohort(300, 0.25, 43);
    const auto folds = cv::make_folds(cohort, 5, 6);
    gbm::GbmConfig base_cfg;
    base_cfg.n_trees = 100;
    const auto column = cv::run_cv_gbm(cohort, folds, {"age", "sex", "bmi", "womac", "kl"},
                                       base_cfg, "gbm3");
    gbm::GbmConfig cfg;
    cfg.max_leaves = 4;
    cfg.n_trees = 60;
    cfg.min_samples_leaf = 10;
    const auto stacked = cv::stack_second_layer(column, column, cfg);
    CHECK(std::fabs(column_auc(stacked) - column_auc(column)) < 0.01);
}

TEST_CASE("stacking validates alignment: fold or knee mismatches are rejected") {
    const auto cohort = demo_cohort(60, 0.3, 47);
    const auto folds = cv::make_folds(cohort, 3, 7);
    PredictionColumn a, b;
    for (const auto& rec : cohort) {
        const int f = folds.fold_of(rec.subject_id);
        a.push_back({rec.knee_id(), f, "m1", 0.5, rec.label});
        b.push_back({rec.knee_id(), f, "m2", 0.5, rec.label});
    }
    auto bad_fold = b;
    bad_fold[0].fold = (bad_fold[0].fold + 1) % 3;
    CHECK_THROWS_AS(cv::stack_second_layer(a, bad_fold, gbm::GbmConfig{}), ValidationError);

    auto bad_id = b;
    bad_id[0].knee_id = "nonexistent";
    CHECK_THROWS_AS(cv::stack_second_layer(a, bad_id, gbm::GbmConfig{}), ValidationError);
}

TEST_CASE("mean fusion averages the probability columns") {
    PredictionColumn a{{"k1", 0, "m1", 0.2, 0}, {"k2", 1, "m1", 0.8, 1}};
    PredictionColumn b{{"k1", 0, "m2", 0.4, 0}, {"k2", 1, "m2", 0.6, 1}};
    const auto fused = cv::mean_fusion(a, b);
    CHECK(fused[0].probability == doctest::Approx(0.3));
    CHECK(fused[1].probability == doctest::Approx(0.7));
}

TEST_CASE("prediction CSV round-trips") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "pfoa_pred_test.csv";
    PredictionColumn col{{"S0_L", 0, "gbm3", 0.25, 0}, {"S0_R", 0, "gbm3", 0.75, 1}};
    cv::write_prediction_csv(path, col);
    const auto back = cv::read_prediction_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].knee_id == "S0_L");
    CHECK(back[1].probability == 0.75);
    CHECK(back[1].label == 1);
    fs::remove(path);
}
