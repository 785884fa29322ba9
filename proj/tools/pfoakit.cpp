// pfoakit: synthetic-cohort generation, patellofemoral ROI preprocessing,
// progression-model training (GBM reference models, CNN with/without spatial
// attention), evaluation, DeLong comparison, stacking, SHAP explanations and
// attention-map export. Every artifact-writing command drops a manifest.json
// into its output directory.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <cmath>
#include <map>
#include <set>

#include "pfoa/common/error.hpp"
#include "pfoa/common/parallel.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/cv/folds.hpp"
#include "pfoa/cv/runner.hpp"
#include "pfoa/cv/stack.hpp"
#include "pfoa/gbm/serialize.hpp"
#include "pfoa/gbm/shap.hpp"
#include "pfoa/io/array_io.hpp"
#include "pfoa/io/csv.hpp"
#include "pfoa/io/kv_config.hpp"
#include "pfoa/io/manifest.hpp"
#include "pfoa/io/png_io.hpp"
#include "pfoa/nn/train.hpp"
#include "pfoa/stats/delong.hpp"
#include "pfoa/stats/metrics.hpp"
#include "pfoa/synth/cohort.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pfoa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int folds = 5;
    int threads = 0;
    std::string format = "json";
    bool error_json = false;
};

// ---- config assembly -------------------------------------------------------

synth::SynthConfig synth_config(const io::KvConfig& kv, std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.n_subjects = kv.get_int("synth.n_subjects", cfg.n_subjects);
    cfg.knees_per_subject = kv.get_int("synth.knees_per_subject", cfg.knees_per_subject);
    cfg.target_prevalence = kv.get_double("synth.target_prevalence", cfg.target_prevalence);
    cfg.image_size = kv.get_int("synth.image_size", cfg.image_size);
    cfg.lesion_contrast = kv.get_double("synth.lesion_contrast", cfg.lesion_contrast);
    cfg.risk_noise = kv.get_double("synth.risk_noise", cfg.risk_noise);
    cfg.pixel_noise = kv.get_double("synth.pixel_noise", cfg.pixel_noise);
    cfg.n_landmarks = kv.get_int("synth.n_landmarks", cfg.n_landmarks);
    cfg.effect_strengths.bmi = kv.get_double("synth.effect.bmi", cfg.effect_strengths.bmi);
    cfg.effect_strengths.womac = kv.get_double("synth.effect.womac", cfg.effect_strengths.womac);
    cfg.effect_strengths.kl = kv.get_double("synth.effect.kl", cfg.effect_strengths.kl);
    cfg.effect_strengths.sex = kv.get_double("synth.effect.sex", cfg.effect_strengths.sex);
    cfg.effect_strengths.age = kv.get_double("synth.effect.age", cfg.effect_strengths.age);
    cfg.seed = seed;
    return cfg;
}

roi::PreprocessConfig preprocess_config(const io::KvConfig& kv) {
    roi::PreprocessConfig cfg;
    cfg.margin_px = kv.get_int("preprocess.margin_px", cfg.margin_px);
    cfg.p_low = kv.get_double("preprocess.p_low", cfg.p_low);
    cfg.p_high = kv.get_double("preprocess.p_high", cfg.p_high);
    cfg.resize_to = kv.get_int("preprocess.resize_to", cfg.resize_to);
    cfg.crop_to = kv.get_int("preprocess.crop_to", cfg.crop_to);
    return cfg;
}

gbm::GbmConfig gbm_config(const io::KvConfig& kv, const std::string& prefix,
                          std::uint64_t seed) {
    gbm::GbmConfig cfg;
    if (prefix == "stack.") {  // shallow trees: the stacker sees 2 features
        cfg.max_leaves = 4;
        cfg.min_samples_leaf = 10;
    }
    cfg.n_trees = kv.get_int(prefix + "n_trees", cfg.n_trees);
    cfg.learning_rate = kv.get_double(prefix + "learning_rate", cfg.learning_rate);
    cfg.max_leaves = kv.get_int(prefix + "max_leaves", cfg.max_leaves);
    cfg.min_samples_leaf = kv.get_int(prefix + "min_samples_leaf", cfg.min_samples_leaf);
    cfg.n_bins = kv.get_int(prefix + "n_bins", cfg.n_bins);
    cfg.lambda_l2 = kv.get_double(prefix + "lambda_l2", cfg.lambda_l2);
    cfg.growth = kv.get_str(prefix + "growth", "leaf_wise") == "depth_wise"
                     ? gbm::Growth::kDepthWise
                     : gbm::Growth::kLeafWise;
    cfg.seed = seed;
    return cfg;
}

nn::TrainConfig train_config(const io::KvConfig& kv, std::uint64_t seed) {
    nn::TrainConfig cfg;
    cfg.batch_size = kv.get_int("train.batch_size", cfg.batch_size);
    cfg.epochs = kv.get_int("train.epochs", cfg.epochs);
    cfg.lr0 = kv.get_double("train.lr0", cfg.lr0);
    cfg.lr_decay = kv.get_double("train.lr_decay", cfg.lr_decay);
    cfg.lr_step_epochs = kv.get_int("train.lr_step_epochs", cfg.lr_step_epochs);
    cfg.momentum = kv.get_double("train.momentum", cfg.momentum);
    cfg.focal_gamma = kv.get_double("train.focal_gamma", cfg.focal_gamma);
    cfg.focal_alpha = kv.get_double("train.focal_alpha", cfg.focal_alpha);
    cfg.seed = seed;
    return cfg;
}

nn::BackboneConfig backbone_config(const io::KvConfig& kv) {
    nn::BackboneConfig cfg = kv.get_str("net.preset", "desk") == "full"
                                 ? nn::BackboneConfig::full()
                                 : nn::BackboneConfig::desk();
    cfg.classifier_hidden = kv.get_int("net.classifier_hidden", cfg.classifier_hidden);
    return cfg;
}

// ---- cohort files -----------------------------------------------------------

std::string side_str(roi::Side s) { return s == roi::Side::kLeft ? "left" : "right"; }

void write_cohort_csv(const fs::path& path, const std::vector<synth::CohortRecord>& cohort) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(cohort.size());
    for (const auto& r : cohort)
        rows.push_back({r.subject_id, side_str(r.side), io::format_double(r.age),
                        std::to_string(r.sex), io::format_double(r.bmi),
                        io::format_double(r.womac), std::to_string(r.kl),
                        r.label ? "progressor" : "non-progressor"});
    io::write_csv(path, {"subject_id", "side", "age", "sex", "bmi", "womac", "kl", "label"},
                  rows);
}

std::vector<synth::CohortRecord> read_cohort_csv(const fs::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const auto c_subject = t.col("subject_id");
    const auto c_side = t.col("side");
    const auto c_age = t.col("age");
    const auto c_sex = t.col("sex");
    const auto c_bmi = t.col("bmi");
    const auto c_womac = t.col("womac");
    const auto c_kl = t.col("kl");
    const auto c_label = t.col("label");
    std::vector<synth::CohortRecord> cohort;
    cohort.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        synth::CohortRecord r;
        r.subject_id = row[c_subject];
        r.side = row[c_side] == "right" ? roi::Side::kRight : roi::Side::kLeft;
        r.age = std::stod(row[c_age]);
        r.sex = std::stoi(row[c_sex]);
        r.bmi = std::stod(row[c_bmi]);
        r.womac = std::stod(row[c_womac]);
        r.kl = std::stoi(row[c_kl]);
        r.label = row[c_label] == "progressor" ? 1 : 0;
        cohort.push_back(std::move(r));
    }
    return cohort;
}

void write_landmarks_json(const fs::path& path, const roi::LandmarkSet& lm) {
    ordered_json j;
    ordered_json pts = ordered_json::array();
    for (const auto& p : lm.points) pts.push_back({p.x, p.y});
    j["points"] = std::move(pts);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f << j.dump(2) << '\n';
}

roi::LandmarkSet read_landmarks_json(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open landmarks: " + path.string());
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError("invalid landmark JSON " + path.string() + ": " + e.what());
    }
    roi::LandmarkSet lm;
    for (const auto& p : j.at("points"))
        lm.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return lm;
}

void write_boxes_json(const fs::path& path, const std::vector<Rect>& boxes) {
    ordered_json j;
    ordered_json arr = ordered_json::array();
    for (const auto& b : boxes) arr.push_back({b.x0, b.y0, b.x1, b.y1});
    j["boxes"] = std::move(arr);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f << j.dump(2) << '\n';
}

std::vector<Rect> read_boxes_json(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception&) {
        return {};
    }
    std::vector<Rect> boxes;
    for (const auto& b : j.at("boxes"))
        boxes.push_back({b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                         b.at(3).get<double>()});
    return boxes;
}

io::RunManifest base_manifest(const std::string& command, const GlobalOpts& g,
                              const io::KvConfig& kv) {
    io::RunManifest m;
    m.command = command;
    m.seed = g.seed;
    m.config_snapshot = kv.entries();
    m.timestamp = io::current_timestamp_utc();
    if (!g.config_path.empty() && fs::exists(g.config_path))
        m.input_hashes[g.config_path] = io::sha256_file(g.config_path);
    return m;
}

// ---- subcommands ------------------------------------------------------------

int cmd_synth(const GlobalOpts& g, const io::KvConfig& kv) {
    const synth::SynthConfig cfg = synth_config(kv, g.seed);
    const auto cohort = synth::generate_cohort(cfg);

    const fs::path out(g.out_dir);
    fs::create_directories(out / "images");
    fs::create_directories(out / "landmarks");
    fs::create_directories(out / "boxes");
    write_cohort_csv(out / "cohort.csv", cohort);

    // synthetic-only ground truth, useful for audits
    std::vector<std::vector<std::string>> latent_rows;
    for (const auto& r : cohort)
        latent_rows.push_back({r.knee_id(), std::to_string(r.latent.osteophyte),
                               std::to_string(r.latent.jsn), std::to_string(r.latent.sclerosis),
                               std::to_string(r.latent.cysts), std::to_string(r.render_seed)});
    io::write_csv(out / "latent.csv",
                  {"knee_id", "osteophyte", "jsn", "sclerosis", "cysts", "render_seed"},
                  latent_rows);

    std::vector<synth::RenderedKnee> rendered(cohort.size());
    parallel_for(cohort.size(),
                 [&](std::size_t i) { rendered[i] = synth::render_knee_image(cohort[i], cfg); });
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const std::string id = cohort[i].knee_id();
        io::write_png16(out / "images" / (id + ".png"), rendered[i].image);
        write_landmarks_json(out / "landmarks" / (id + ".json"), rendered[i].landmarks);
        write_boxes_json(out / "boxes" / (id + ".json"), rendered[i].lesion_boxes);
    }

    io::RunManifest m = base_manifest("synth", g, kv);
    m.input_hashes["cohort.csv"] = io::sha256_file(out / "cohort.csv");
    io::write_run_manifest(out, m);
    std::cout << "cohort: " << cohort.size() << " knees written to " << out.string() << "\n";
    return kExitOk;
}

int cmd_preprocess(const GlobalOpts& g, const io::KvConfig& kv, const std::string& cohort_dir) {
    const roi::PreprocessConfig cfg = preprocess_config(kv);
    cfg.validate();
    const fs::path in(cohort_dir);
    const auto cohort = read_cohort_csv(in / "cohort.csv");

    const fs::path out(g.out_dir);
    fs::create_directories(out / "rois");
    const bool previews = kv.get_bool("preprocess.previews", false);
    if (previews) fs::create_directories(out / "previews");

    std::size_t processed = 0, failed = 0;
    std::vector<std::string> failures;
    for (const auto& rec : cohort) {
        const std::string id = rec.knee_id();
        try {
            const ImageF64 img = io::read_png(in / "images" / (id + ".png"));
            const auto lm = read_landmarks_json(in / "landmarks" / (id + ".json"));
            const auto boxes = read_boxes_json(in / "boxes" / (id + ".json"));
            roi::RoiImage r = roi::preprocess_knee(img, lm, rec.side, cfg, boxes);
            io::save_roi(out / "rois" / id, r);
            if (previews) {
                ImageF64 preview = r.pixels;
                double lo = preview.data()[0], hi = preview.data()[0];
                for (double v : preview.data()) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                for (double& v : preview.data())
                    v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
                io::write_png8(out / "previews" / (id + ".png"), preview);
            }
            ++processed;
        } catch (const std::exception& e) {
            ++failed;
            failures.push_back(id + ": " + e.what());
        }
    }

    ordered_json fail_log;
    fail_log["failures"] = failures;
    std::ofstream fl(out / "failures.json", std::ios::binary);
    fl << fail_log.dump(2) << '\n';

    io::RunManifest m = base_manifest("preprocess", g, kv);
    m.input_hashes["cohort.csv"] = io::sha256_file(in / "cohort.csv");
    io::write_run_manifest(out, m);
    std::cout << "preprocess: processed " << processed << ", failed " << failed << "\n";
    if (processed == 0 && failed > 0) {
        std::cerr << "all knees failed preprocessing\n";
        return kExitRuntime;
    }
    return kExitOk;
}

std::vector<nn::LabeledRoi> load_rois(const fs::path& roi_dir,
                                      const std::vector<synth::CohortRecord>& cohort) {
    std::vector<nn::LabeledRoi> out;
    out.reserve(cohort.size());
    for (const auto& rec : cohort) {
        nn::LabeledRoi s;
        s.roi = io::load_roi(roi_dir / "rois" / rec.knee_id());
        s.label = rec.label;
        s.knee_id = rec.knee_id();
        out.push_back(std::move(s));
    }
    return out;
}

void write_fold_csv(const fs::path& path, const cv::FoldAssignment& folds) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [subject, fold] : folds.fold_of_subject)
        rows.push_back({subject, std::to_string(fold)});
    io::write_csv(path, {"subject_id", "fold"}, rows);
}

void write_fold_metrics(const fs::path& path, const cv::PredictionColumn& column, int k) {
    ordered_json j;
    stats::ScoredSet pooled;
    for (const auto& r : column) {
        pooled.scores.push_back(r.probability);
        pooled.labels.push_back(r.label);
    }
    j["pooled_auc"] = stats::auc(pooled);
    j["per_fold_auc"] = cv::per_fold_auc(column, k);
    std::ofstream f(path, std::ios::binary);
    f << j.dump(2) << '\n';
}

int cmd_train(const GlobalOpts& g, const io::KvConfig& kv, const std::string& model_name,
              const std::string& cohort_dir, const std::string& roi_dir) {
    static const std::map<std::string, std::vector<std::string>> kGbmFeatures{
        {"gbm1", {"age", "sex", "bmi"}},
        {"gbm2", {"age", "sex", "bmi", "womac"}},
        {"gbm3", {"age", "sex", "bmi", "womac", "kl"}},
    };
    const bool is_gbm = kGbmFeatures.count(model_name) > 0;
    const bool is_cnn = model_name == "cnn" || model_name == "cnn-attn";
    if (!is_gbm && !is_cnn)
        throw ValidationError("unknown model '" + model_name +
                              "'; valid: gbm1 gbm2 gbm3 cnn cnn-attn");

    const fs::path in(cohort_dir);
    const auto cohort = read_cohort_csv(in / "cohort.csv");
    const std::uint64_t folds_seed = kv.get_u64("folds.seed", 1);
    const cv::FoldAssignment folds = cv::make_folds(cohort, g.folds, folds_seed);

    const fs::path out(g.out_dir);
    fs::create_directories(out);
    write_fold_csv(out / "folds.csv", folds);

    cv::PredictionColumn column;
    if (is_gbm) {
        const gbm::GbmConfig cfg = gbm_config(kv, "gbm.", g.seed);
        const auto features = kGbmFeatures.at(model_name);
        const gbm::FeatureMatrix all = cv::clinical_features(cohort).select(features);
        int fold_counter = 0;
        column = cv::run_cv(
            model_name, cohort, folds,
            [&](const std::vector<std::size_t>& train_idx,
                const std::vector<std::size_t>& test_idx) {
                gbm::FeatureMatrix train_X, test_X;
                for (std::size_t f = 0; f < all.n_features(); ++f) {
                    std::vector<double> tr, te;
                    for (std::size_t i : train_idx) tr.push_back(all.column(f)[i]);
                    for (std::size_t i : test_idx) te.push_back(all.column(f)[i]);
                    train_X.add_column(all.feature_names()[f], std::move(tr));
                    test_X.add_column(all.feature_names()[f], std::move(te));
                }
                std::vector<int> y;
                for (std::size_t i : train_idx) y.push_back(cohort[i].label);
                const gbm::GbmModel model = gbm::fit_gbm(train_X, y, cfg);
                gbm::save_gbm(model,
                              out / ("model_fold" + std::to_string(fold_counter) + ".json"));
                ++fold_counter;
                return model.predict_proba(test_X);
            });
    } else {
        if (roi_dir.empty())
            throw ValidationError("--roi <dir> is required for CNN models");
        const auto rois = load_rois(roi_dir, cohort);
        const roi::PreprocessConfig crop_cfg = preprocess_config(kv);
        const nn::TrainConfig tcfg = train_config(kv, g.seed);
        const nn::BackboneConfig arch = backbone_config(kv);
        const bool with_attention = model_name == "cnn-attn";
        int fold_counter = 0;
        column = cv::run_cv(
            model_name, cohort, folds,
            [&](const std::vector<std::size_t>& train_idx,
                const std::vector<std::size_t>& test_idx) {
                std::vector<nn::LabeledRoi> train_set, test_set;
                for (std::size_t i : train_idx) train_set.push_back(rois[i]);
                for (std::size_t i : test_idx) test_set.push_back(rois[i]);
                nn::TrainConfig fold_cfg = tcfg;
                fold_cfg.seed = mix_seed(tcfg.seed, static_cast<std::uint64_t>(fold_counter));
                nn::AttentionNet model(arch, with_attention, fold_cfg.seed);
                const auto history =
                    nn::train_model(model, train_set, {}, crop_cfg, fold_cfg);
                const std::string stem = "model_fold" + std::to_string(fold_counter);
                model.save(out / stem);
                nn::write_history_csv(out / (stem + "_history.csv"), history.history);
                ++fold_counter;
                return nn::predict_proba(model, test_set, crop_cfg, fold_cfg.batch_size);
            });
    }

    cv::write_prediction_csv(out / "predictions.csv", column);
    write_fold_metrics(out / "metrics.json", column, folds.k);

    io::RunManifest m = base_manifest("train", g, kv);
    m.config_snapshot["model"] = model_name;
    m.config_snapshot["folds.k"] = std::to_string(g.folds);
    m.input_hashes["cohort.csv"] = io::sha256_file(in / "cohort.csv");
    m.input_hashes["folds"] = folds.content_hash();
    io::write_run_manifest(out, m);
    std::cout << "train " << model_name << ": predictions for " << column.size()
              << " knees written\n";
    return kExitOk;
}

ordered_json eval_one(const cv::PredictionColumn& column, const fs::path& out_dir) {
    stats::ScoredSet pooled;
    std::string model = column.empty() ? "unknown" : column.front().model;
    int k = 0;
    for (const auto& r : column) {
        pooled.scores.push_back(r.probability);
        pooled.labels.push_back(r.label);
        k = std::max(k, r.fold + 1);
    }
    std::size_t n_pos = 0;
    for (int y : pooled.labels) n_pos += static_cast<std::size_t>(y);

    ordered_json j;
    j["model"] = model;
    j["n_pos"] = n_pos;
    j["n_neg"] = pooled.labels.size() - n_pos;
    j["auc"] = stats::auc(pooled);
    const auto ci = stats::delong_ci(pooled);
    j["auc_ci"] = {ci.first, ci.second};

    // secondary CI route: per-fold mean +- 1.96 sd
    const auto fold_aucs = cv::per_fold_auc(column, k);
    if (fold_aucs.size() >= 2) {
        double mean = 0.0;
        for (double a : fold_aucs) mean += a;
        mean /= static_cast<double>(fold_aucs.size());
        double var = 0.0;
        for (double a : fold_aucs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(fold_aucs.size() - 1);
        const double half = 1.959963984540054 * std::sqrt(var);
        j["auc_ci_folds"] = {std::max(0.0, mean - half), std::min(1.0, mean + half)};
    }
    j["ap"] = stats::average_precision(pooled);
    j["brier"] = stats::brier(pooled);

    // curve exports for external plotting
    std::vector<std::vector<std::string>> roc_rows, pr_rows;
    for (const auto& p : stats::roc_points(pooled))
        roc_rows.push_back({io::format_double(p.threshold), io::format_double(p.fpr),
                            io::format_double(p.tpr)});
    for (const auto& p : stats::pr_points(pooled))
        pr_rows.push_back({io::format_double(p.threshold), io::format_double(p.recall),
                           io::format_double(p.precision)});
    io::write_csv(out_dir / (model + "_roc.csv"), {"threshold", "fpr", "tpr"}, roc_rows);
    io::write_csv(out_dir / (model + "_pr.csv"), {"threshold", "recall", "precision"}, pr_rows);
    return j;
}

int cmd_eval(const GlobalOpts& g, const io::KvConfig& kv,
             const std::vector<std::string>& pred_paths) {
    const fs::path out(g.out_dir);
    fs::create_directories(out);
    ordered_json report = ordered_json::array();
    for (const auto& path : pred_paths)
        report.push_back(eval_one(cv::read_prediction_csv(path), out));

    if (g.format == "csv") {
        std::vector<std::vector<std::string>> rows;
        for (const auto& j : report)
            rows.push_back({j["model"].get<std::string>(), io::format_double(j["auc"]),
                            io::format_double(j["auc_ci"][0]), io::format_double(j["auc_ci"][1]),
                            io::format_double(j["ap"]), io::format_double(j["brier"])});
        io::write_csv(out / "report.csv", {"model", "auc", "auc_ci_lo", "auc_ci_hi", "ap", "brier"},
                      rows);
    }
    std::ofstream f(out / "report.json", std::ios::binary);
    f << report.dump(2) << '\n';

    io::RunManifest m = base_manifest("eval", g, kv);
    for (const auto& path : pred_paths) m.input_hashes[path] = io::sha256_file(path);
    io::write_run_manifest(out, m);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_compare(const GlobalOpts& g, const io::KvConfig& kv, const std::string& path_a,
                const std::string& path_b) {
    const auto col_a = cv::read_prediction_csv(path_a);
    const auto col_b = cv::read_prediction_csv(path_b);
    std::map<std::string, std::size_t> index_b;
    for (std::size_t i = 0; i < col_b.size(); ++i) index_b[col_b[i].knee_id] = i;
    if (col_a.size() != col_b.size())
        throw ValidationError("prediction files cover different knee counts: " +
                              std::to_string(col_a.size()) + " vs " +
                              std::to_string(col_b.size()));

    std::vector<double> scores_a, scores_b;
    std::vector<int> labels;
    for (const auto& row : col_a) {
        const auto it = index_b.find(row.knee_id);
        if (it == index_b.end())
            throw ValidationError("knee id not present in both files: " + row.knee_id);
        scores_a.push_back(row.probability);
        scores_b.push_back(col_b[it->second].probability);
        labels.push_back(row.label);
    }
    const auto r = stats::delong_test(scores_a, scores_b, labels);

    ordered_json j;
    j["model_a"] = col_a.front().model;
    j["model_b"] = col_b.front().model;
    j["auc_a"] = r.auc_a;
    j["auc_b"] = r.auc_b;
    j["auc_diff"] = r.auc_a - r.auc_b;
    double var_diff = r.var_a + r.var_b - 2.0 * r.cov_ab;
    if (var_diff < 0.0) var_diff = 0.0;
    const double half = 1.959963984540054 * std::sqrt(var_diff);
    j["auc_diff_ci"] = {r.auc_a - r.auc_b - half, r.auc_a - r.auc_b + half};
    j["z"] = r.z;
    j["p_value"] = r.p_value;

    if (!g.out_dir.empty()) {
        const fs::path out(g.out_dir);
        fs::create_directories(out);
        std::ofstream f(out / "compare.json", std::ios::binary);
        f << j.dump(2) << '\n';
        io::RunManifest m = base_manifest("compare", g, kv);
        m.input_hashes[path_a] = io::sha256_file(path_a);
        m.input_hashes[path_b] = io::sha256_file(path_b);
        io::write_run_manifest(out, m);
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_stack(const GlobalOpts& g, const io::KvConfig& kv, const std::string& clinical_path,
              const std::string& cnn_path) {
    const auto clinical = cv::read_prediction_csv(clinical_path);
    const auto cnn = cv::read_prediction_csv(cnn_path);
    const gbm::GbmConfig cfg = gbm_config(kv, "stack.", g.seed);

    cv::PredictionColumn stacked;
    if (kv.get_bool("stack.mean_fusion", false))
        stacked = cv::mean_fusion(clinical, cnn);
    else
        stacked = cv::stack_second_layer(clinical, cnn, cfg);

    const fs::path out(g.out_dir);
    fs::create_directories(out);
    cv::write_prediction_csv(out / "predictions.csv", stacked);
    int k = 0;
    for (const auto& r : stacked) k = std::max(k, r.fold + 1);
    write_fold_metrics(out / "metrics.json", stacked, k);

    io::RunManifest m = base_manifest("stack", g, kv);
    m.input_hashes[clinical_path] = io::sha256_file(clinical_path);
    m.input_hashes[cnn_path] = io::sha256_file(cnn_path);
    io::write_run_manifest(out, m);
    std::cout << "stack: " << stacked.size() << " out-of-fold predictions written\n";
    return kExitOk;
}

int cmd_explain(const GlobalOpts& g, const io::KvConfig& kv, const std::string& model_path,
                const std::string& cohort_dir) {
    if (!fs::exists(model_path))
        throw ValidationError("model file not found: " + model_path);
    const gbm::GbmModel model = gbm::load_gbm(model_path);
    const auto cohort = read_cohort_csv(fs::path(cohort_dir) / "cohort.csv");
    const gbm::FeatureMatrix features = cv::clinical_features(cohort);

    const int max_rows = kv.get_int("explain.max_rows", 200);
    const int max_background = kv.get_int("explain.max_background", 200);
    gbm::FeatureMatrix background;
    {
        const std::size_t n = std::min<std::size_t>(features.n_rows(),
                                                    static_cast<std::size_t>(max_background));
        for (std::size_t f = 0; f < features.n_features(); ++f) {
            std::vector<double> col(features.column(f).begin(), features.column(f).begin() + n);
            background.add_column(features.feature_names()[f], std::move(col));
        }
    }

    const fs::path out(g.out_dir);
    fs::create_directories(out);
    const std::size_t n_explain =
        std::min<std::size_t>(cohort.size(), static_cast<std::size_t>(max_rows));

    std::vector<std::vector<std::string>> shap_rows;
    std::vector<double> mean_abs(model.feature_names.size(), 0.0);
    const gbm::FeatureMatrix selected = features.select(model.feature_names);
    for (std::size_t i = 0; i < n_explain; ++i) {
        const auto shap = gbm::exact_shap(model, selected.row(i), background);
        for (std::size_t f = 0; f < model.feature_names.size(); ++f) {
            shap_rows.push_back({cohort[i].knee_id(), model.feature_names[f],
                                 io::format_double(shap.phi[f])});
            mean_abs[f] += std::abs(shap.phi[f]);
        }
    }
    for (double& v : mean_abs) v /= static_cast<double>(n_explain);
    io::write_csv(out / "shap.csv", {"knee_id", "feature", "phi"}, shap_rows);

    const auto ranking = gbm::importance_ranking(mean_abs);
    std::vector<std::vector<std::string>> imp_rows;
    for (std::size_t rank = 0; rank < ranking.size(); ++rank)
        imp_rows.push_back({std::to_string(rank + 1), model.feature_names[ranking[rank]],
                            io::format_double(mean_abs[ranking[rank]])});
    io::write_csv(out / "importance.csv", {"rank", "feature", "mean_abs_shap"}, imp_rows);

    io::RunManifest m = base_manifest("explain", g, kv);
    m.input_hashes[model_path] = io::sha256_file(model_path);
    io::write_run_manifest(out, m);
    std::cout << "explain: top feature is " << model.feature_names[ranking[0]] << "\n";
    return kExitOk;
}

int cmd_attn(const GlobalOpts& g, const io::KvConfig& kv, const std::string& checkpoint,
             const std::string& roi_dir, const std::vector<std::string>& knee_ids, int tap) {
    if (!fs::exists(checkpoint + ".json"))
        throw ValidationError("checkpoint not found: " + checkpoint + ".{bin,json}");
    nn::AttentionNet model = nn::AttentionNet::load(checkpoint);
    const roi::PreprocessConfig crop_cfg = preprocess_config(kv);
    const int n_taps = static_cast<int>(model.config().attention_taps.size());
    const int tap_index = tap >= 0 ? tap : n_taps - 1;  // deeper tap by default

    const fs::path out(g.out_dir);
    fs::create_directories(out);
    for (const auto& id : knee_ids) {
        const fs::path roi_base = fs::path(roi_dir) / "rois" / id;
        if (!fs::exists(roi_base.string() + ".json"))
            throw ValidationError("ROI not found for knee " + id + ": expected " +
                                  roi_base.string() + ".{bin,json}");
        const roi::RoiImage r = io::load_roi(roi_base);
        const auto overlay = nn::export_attention_overlay(model, r, crop_cfg, tap_index);
        io::write_png8(out / (id + "_attn.png"), overlay.heatmap);
        std::ofstream raw(out / (id + "_attn.bin"), std::ios::binary);
        std::vector<float> f32(overlay.raw_map.begin(), overlay.raw_map.end());
        raw.write(reinterpret_cast<const char*>(f32.data()),
                  static_cast<std::streamsize>(f32.size() * sizeof(float)));
    }

    io::RunManifest m = base_manifest("attn", g, kv);
    m.input_hashes[checkpoint + ".bin"] = io::sha256_file(checkpoint + ".bin");
    io::write_run_manifest(out, m);
    std::cout << "attn: wrote " << knee_ids.size() << " overlay(s), tap " << tap_index << "\n";
    return kExitOk;
}

void emit_error(const GlobalOpts& g, const std::string& kind, const std::string& what) {
    if (g.error_json) {
        ordered_json j;
        j["error"] = kind;
        j["message"] = what;
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "error (" << kind << "): " << what << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patellofemoral OA progression-prediction pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "key = value configuration file")
        ->envname("PFOAKIT_CONFIG");
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_flag("--error-json", g.error_json, "machine-readable errors on stderr");

    std::string model_name, cohort_dir, roi_dir, preds_a, preds_b, checkpoint, knees_arg,
        gbm_model_path;
    std::vector<std::string> pred_paths;
    int tap = -1;

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
    synth_cmd->add_option("--out", g.out_dir, "output directory")->required();

    auto* pre_cmd = app.add_subcommand("preprocess", "landmark-aligned ROI extraction");
    pre_cmd->add_option("--cohort", cohort_dir, "cohort directory from synth")->required();
    pre_cmd->add_option("--out", g.out_dir, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "cross-validated model training");
    train_cmd->add_option("--model", model_name, "gbm1|gbm2|gbm3|cnn|cnn-attn")->required();
    train_cmd->add_option("--cohort", cohort_dir, "cohort directory")->required();
    train_cmd->add_option("--roi", roi_dir, "preprocessed ROI directory (CNN models)");
    train_cmd->add_option("--folds", g.folds, "fold count");
    train_cmd->add_option("--out", g.out_dir, "output directory")->required();

    auto* eval_cmd = app.add_subcommand("eval", "metrics report and curve exports");
    eval_cmd->add_option("--preds", pred_paths, "prediction CSV file(s)")->required();
    eval_cmd->add_option("--out", g.out_dir, "output directory")->required();
    eval_cmd->add_option("--format", g.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));

    auto* cmp_cmd = app.add_subcommand("compare", "DeLong test between two models");
    cmp_cmd->add_option("--a", preds_a, "first prediction CSV")->required();
    cmp_cmd->add_option("--b", preds_b, "second prediction CSV")->required();
    cmp_cmd->add_option("--out", g.out_dir, "optional output directory");

    auto* stack_cmd = app.add_subcommand("stack", "second-layer GBM fusion");
    stack_cmd->add_option("--clinical", preds_a, "clinical prediction CSV")->required();
    stack_cmd->add_option("--cnn", preds_b, "imaging prediction CSV")->required();
    stack_cmd->add_option("--out", g.out_dir, "output directory")->required();

    auto* explain_cmd = app.add_subcommand("explain", "exact SHAP attributions for a GBM");
    explain_cmd->add_option("--model", gbm_model_path, "GBM model JSON")->required();
    explain_cmd->add_option("--cohort", cohort_dir, "cohort directory")->required();
    explain_cmd->add_option("--out", g.out_dir, "output directory")->required();

    auto* attn_cmd = app.add_subcommand("attn", "attention-map overlays");
    attn_cmd->add_option("--checkpoint", checkpoint, "model checkpoint base path")->required();
    attn_cmd->add_option("--roi", roi_dir, "preprocessed ROI directory")->required();
    attn_cmd->add_option("--knees", knees_arg, "comma-separated knee ids")->required();
    attn_cmd->add_option("--tap", tap, "attention tap index (default: deepest)");
    attn_cmd->add_option("--out", g.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (g.threads > 0) set_thread_count(g.threads);
        io::KvConfig kv;
        if (!g.config_path.empty()) kv = io::KvConfig::parse_file(g.config_path);

        if (synth_cmd->parsed()) return cmd_synth(g, kv);
        if (pre_cmd->parsed()) return cmd_preprocess(g, kv, cohort_dir);
        if (train_cmd->parsed()) return cmd_train(g, kv, model_name, cohort_dir, roi_dir);
        if (eval_cmd->parsed()) return cmd_eval(g, kv, pred_paths);
        if (cmp_cmd->parsed()) return cmd_compare(g, kv, preds_a, preds_b);
        if (stack_cmd->parsed()) return cmd_stack(g, kv, preds_a, preds_b);
        if (explain_cmd->parsed()) return cmd_explain(g, kv, gbm_model_path, cohort_dir);
        if (attn_cmd->parsed()) {
            std::vector<std::string> knees;
            std::stringstream ss(knees_arg);
            std::string id;
            while (std::getline(ss, id, ','))
                if (!id.empty()) knees.push_back(id);
            return cmd_attn(g, kv, checkpoint, roi_dir, knees, tap);
        }
        return kExitUsage;
    } catch (const ConfigError& e) {
        emit_error(g, "config", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        emit_error(g, "validation", e.what());
        return kExitUsage;
    } catch (const SchemaError& e) {
        emit_error(g, "schema", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        emit_error(g, "runtime", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        emit_error(g, "runtime", e.what());
        return kExitRuntime;
    }
}
