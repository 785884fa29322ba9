#include "pfoa/cv/stack.hpp"

#include <algorithm>
#include <map>

#include "pfoa/common/error.hpp"

namespace pfoa::cv {

namespace {

void check_aligned(const PredictionColumn& a, const PredictionColumn& b) {
    if (a.size() != b.size())
        throw ValidationError("prediction columns differ in size: " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    if (a.empty()) throw ValidationError("empty prediction columns");
    std::map<std::string, std::size_t> index_b;
    for (std::size_t i = 0; i < b.size(); ++i) index_b[b[i].knee_id] = i;
    for (const auto& row : a) {
        const auto it = index_b.find(row.knee_id);
        if (it == index_b.end())
            throw ValidationError("knee " + row.knee_id + " missing from second column");
        const auto& other = b[it->second];
        if (other.fold != row.fold)
            throw ValidationError("knee " + row.knee_id + " has fold " + std::to_string(row.fold) +
                                  " vs " + std::to_string(other.fold) +
                                  "; all models must share one fold assignment");
        if (other.label != row.label)
            throw ValidationError("knee " + row.knee_id + " has inconsistent labels");
    }
}

}  // namespace

PredictionColumn stack_second_layer(const PredictionColumn& preds_clinical,
                                    const PredictionColumn& preds_cnn,
                                    const gbm::GbmConfig& cfg, const std::string& model_name) {
    check_aligned(preds_clinical, preds_cnn);
    std::map<std::string, std::size_t> cnn_index;
    for (std::size_t i = 0; i < preds_cnn.size(); ++i) cnn_index[preds_cnn[i].knee_id] = i;

    int k = 0;
    for (const auto& row : preds_clinical) k = std::max(k, row.fold + 1);

    PredictionColumn out(preds_clinical.size());
    for (int f = 0; f < k; ++f) {
        std::vector<double> tr_clin, tr_cnn;
        std::vector<int> tr_y;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < preds_clinical.size(); ++i) {
            const auto& row = preds_clinical[i];
            const double p_cnn = preds_cnn[cnn_index[row.knee_id]].probability;
            if (row.fold == f) {
                test_rows.push_back(i);
            } else {
                tr_clin.push_back(row.probability);
                tr_cnn.push_back(p_cnn);
                tr_y.push_back(row.label);
            }
        }
        if (test_rows.empty()) continue;

        gbm::FeatureMatrix train_X;
        train_X.add_column("pred_clinical", std::move(tr_clin));
        train_X.add_column("pred_cnn", std::move(tr_cnn));
        const gbm::GbmModel model = gbm::fit_gbm(train_X, tr_y, cfg);

        gbm::FeatureMatrix test_X;
        std::vector<double> te_clin, te_cnn;
        for (std::size_t i : test_rows) {
            te_clin.push_back(preds_clinical[i].probability);
            te_cnn.push_back(preds_cnn[cnn_index[preds_clinical[i].knee_id]].probability);
        }
        test_X.add_column("pred_clinical", std::move(te_clin));
        test_X.add_column("pred_cnn", std::move(te_cnn));
        const auto probs = model.predict_proba(test_X);

        for (std::size_t j = 0; j < test_rows.size(); ++j) {
            const std::size_t i = test_rows[j];
            out[i] = {preds_clinical[i].knee_id, f, model_name, probs[j],
                      preds_clinical[i].label};
        }
    }
    return out;
}

PredictionColumn mean_fusion(const PredictionColumn& a, const PredictionColumn& b,
                             const std::string& model_name) {
    check_aligned(a, b);
    std::map<std::string, std::size_t> index_b;
    for (std::size_t i = 0; i < b.size(); ++i) index_b[b[i].knee_id] = i;
    PredictionColumn out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& row = a[i];
        out[i] = {row.knee_id, row.fold, model_name,
                  0.5 * (row.probability + b[index_b.at(row.knee_id)].probability), row.label};
    }
    return out;
}

}  // namespace pfoa::cv
