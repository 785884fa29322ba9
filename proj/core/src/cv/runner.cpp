#include "pfoa/cv/runner.hpp"

#include <algorithm>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/io/csv.hpp"
#include "pfoa/stats/metrics.hpp"

namespace pfoa::cv {

PredictionColumn run_cv(const std::string& model_name,
                        const std::vector<synth::CohortRecord>& cohort,
                        const FoldAssignment& folds, const FoldModelFn& fn) {
    if (cohort.empty()) throw ValidationError("empty cohort");

    std::vector<int> fold_of_knee(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i)
        fold_of_knee[i] = folds.fold_of(cohort[i].subject_id);

    PredictionColumn column(cohort.size());
    for (int f = 0; f < folds.k; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < cohort.size(); ++i)
            (fold_of_knee[i] == f ? test_idx : train_idx).push_back(i);
        if (test_idx.empty()) continue;  // legal for tiny cohorts

        std::size_t pos = 0;
        for (std::size_t i : train_idx) pos += static_cast<std::size_t>(cohort[i].label);
        if (pos == 0 || pos == train_idx.size())
            throw ValidationError("fold " + std::to_string(f) +
                                  " training portion is single-class (" + std::to_string(pos) +
                                  "/" + std::to_string(train_idx.size()) + " positives)");

        const std::vector<double> probs = fn(train_idx, test_idx);
        if (probs.size() != test_idx.size())
            throw ValidationError("fold model returned " + std::to_string(probs.size()) +
                                  " predictions for " + std::to_string(test_idx.size()) +
                                  " test knees");
        for (std::size_t j = 0; j < test_idx.size(); ++j) {
            const std::size_t i = test_idx[j];
            column[i] = {cohort[i].knee_id(), f, model_name, probs[j], cohort[i].label};
        }
    }
    for (std::size_t i = 0; i < column.size(); ++i)
        if (column[i].knee_id.empty())
            throw ValidationError("knee " + cohort[i].knee_id() + " received no prediction");
    return column;
}

gbm::FeatureMatrix clinical_features(const std::vector<synth::CohortRecord>& cohort) {
    std::vector<double> age, sex, bmi, womac, kl;
    for (const auto& r : cohort) {
        age.push_back(r.age);
        sex.push_back(r.sex);
        bmi.push_back(r.bmi);
        womac.push_back(r.womac);
        kl.push_back(r.kl);
    }
    gbm::FeatureMatrix X;
    X.add_column("age", std::move(age));
    X.add_column("sex", std::move(sex));
    X.add_column("bmi", std::move(bmi));
    X.add_column("womac", std::move(womac));
    X.add_column("kl", std::move(kl));
    return X;
}

PredictionColumn run_cv_gbm(const std::vector<synth::CohortRecord>& cohort,
                            const FoldAssignment& folds,
                            const std::vector<std::string>& features,
                            const gbm::GbmConfig& cfg, const std::string& model_name) {
    const gbm::FeatureMatrix all = clinical_features(cohort).select(features);
    return run_cv(model_name, cohort, folds,
                  [&](const std::vector<std::size_t>& train_idx,
                      const std::vector<std::size_t>& test_idx) {
                      gbm::FeatureMatrix train_X, test_X;
                      for (std::size_t f = 0; f < all.n_features(); ++f) {
                          std::vector<double> tr, te;
                          tr.reserve(train_idx.size());
                          te.reserve(test_idx.size());
                          for (std::size_t i : train_idx) tr.push_back(all.column(f)[i]);
                          for (std::size_t i : test_idx) te.push_back(all.column(f)[i]);
                          train_X.add_column(all.feature_names()[f], std::move(tr));
                          test_X.add_column(all.feature_names()[f], std::move(te));
                      }
                      std::vector<int> y;
                      y.reserve(train_idx.size());
                      for (std::size_t i : train_idx) y.push_back(cohort[i].label);
                      const gbm::GbmModel model = gbm::fit_gbm(train_X, y, cfg);
                      return model.predict_proba(test_X);
                  });
}

PredictionColumn run_cv_cnn(const std::vector<synth::CohortRecord>& cohort,
                            const std::vector<nn::LabeledRoi>& rois,
                            const FoldAssignment& folds, const nn::BackboneConfig& arch,
                            const nn::TrainConfig& train_cfg,
                            const roi::PreprocessConfig& crop_cfg, bool with_attention,
                            const std::string& model_name) {
    if (rois.size() != cohort.size())
        throw ValidationError("ROI count " + std::to_string(rois.size()) +
                              " does not match cohort size " + std::to_string(cohort.size()));
    int fold_counter = 0;
    return run_cv(model_name, cohort, folds,
                  [&](const std::vector<std::size_t>& train_idx,
                      const std::vector<std::size_t>& test_idx) {
                      std::vector<nn::LabeledRoi> train_set, test_set;
                      train_set.reserve(train_idx.size());
                      for (std::size_t i : train_idx) train_set.push_back(rois[i]);
                      for (std::size_t i : test_idx) test_set.push_back(rois[i]);

                      nn::TrainConfig fold_cfg = train_cfg;
                      fold_cfg.seed = mix_seed(train_cfg.seed,
                                               static_cast<std::uint64_t>(fold_counter));
                      nn::AttentionNet model(arch, with_attention, fold_cfg.seed);
                      ++fold_counter;
                      nn::train_model(model, train_set, {}, crop_cfg, fold_cfg);
                      return nn::predict_proba(model, test_set, crop_cfg,
                                               fold_cfg.batch_size);
                  });
}

std::vector<double> per_fold_auc(const PredictionColumn& column, int k) {
    std::vector<double> out;
    for (int f = 0; f < k; ++f) {
        stats::ScoredSet scored;
        for (const auto& row : column)
            if (row.fold == f) {
                scored.scores.push_back(row.probability);
                scored.labels.push_back(row.label);
            }
        if (scored.scores.empty()) continue;
        out.push_back(stats::auc(scored));
    }
    return out;
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionColumn& column) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(column.size());
    for (const auto& r : column)
        rows.push_back({r.knee_id, std::to_string(r.fold), r.model,
                        io::format_double(r.probability), std::to_string(r.label)});
    io::write_csv(path, {"knee_id", "fold", "model", "probability", "label"}, rows);
}

PredictionColumn read_prediction_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::size_t id_col = t.col("knee_id");
    const std::size_t fold_col = t.col("fold");
    const std::size_t model_col = t.col("model");
    const std::size_t prob_col = t.col("probability");
    const std::size_t label_col = t.col("label");
    PredictionColumn out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        PredictionRow r;
        r.knee_id = row[id_col];
        r.fold = std::stoi(row[fold_col]);
        r.model = row[model_col];
        r.probability = std::stod(row[prob_col]);
        r.label = std::stoi(row[label_col]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace pfoa::cv
