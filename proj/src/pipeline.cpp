#include "openasc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"
#include "openasc/evaluation.hpp"

namespace openasc {

namespace {

std::string join_path(const std::string& dir, const std::string& rel) {
    if (dir.empty()) return rel;
    if (dir.back() == '/') return dir + rel;
    return dir + "/" + rel;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create directory " + path + ": " + ec.message());
}

std::string sanitize(const std::string& rel) {
    std::string out = rel;
    for (char& c : out) {
        if (c == '/' || c == '\\') c = '_';
    }
    return out;
}

std::string cache_path(const std::string& cache_dir, const std::string& rel) {
    return join_path(cache_dir, sanitize(rel) + ".feat");
}

std::string format_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

void log_line(std::ostream* log, const std::string& line) {
    if (log) {
        (*log) << line << "\n";
        log->flush();
    }
}

void save_split_with_fingerprint(const std::string& path, const std::vector<SplitEntry>& split,
                                 uint64_t fp) {
    std::ostringstream os;
    os << "# fingerprint " << fp << "\n";
    for (const auto& e : split) {
        os << e.entry.path << '\t' << e.entry.label << '\t'
           << (e.assignment == SplitAssignment::Train ? "train" : "tuning") << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<SplitEntry> load_split_checked(const std::string& path, uint64_t fp) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    std::string first;
    std::getline(is, first);
    uint64_t got = 0;
    if (std::sscanf(first.c_str(), "# fingerprint %llu",
                    reinterpret_cast<unsigned long long*>(&got)) != 1 ||
        got != fp) {
        fail(ErrorCode::PipelineMismatch,
             "split file " + path + " was produced under a different pipeline configuration");
    }
    return load_split(path);
}

// Everything a training or evaluation stage needs for one clip.
struct LoadedClip {
    std::string rel_path;
    std::string label;
    Tensor input;  // standardized [1, n_mels, n_frames]
};

LoadedClip load_clip(const StandardizationStats& stats, const std::string& cache_dir,
                     const ManifestEntry& entry, uint64_t fp) {
    FeatureMatrix fm = load_features(cache_path(cache_dir, entry.path), fp);
    FeatureMatrix std_fm = standardize(fm, stats);
    return {entry.path, entry.label, feature_to_tensor(std_fm)};
}

struct ReportWriter {
    std::vector<std::pair<std::string, std::string>> items;

    void add(const std::string& key, const std::string& value) { items.push_back({key, value}); }
    void add_num(const std::string& key, double value, const char* fmt = "%.4f") {
        char buf[48];
        std::snprintf(buf, sizeof(buf), fmt, value);
        items.push_back({key, buf});
    }
    void write(const std::string& path) const {
        std::ostringstream os;
        for (const auto& [k, v] : items) os << k << ": " << v << "\n";
        write_text_file(path, os.str());
    }
};

void add_accuracy_block(ReportWriter& report,
                        const std::vector<std::pair<OpenSetDecision, std::string>>& decisions,
                        const LabelSet& labels) {
    auto per_class = class_accuracies(decisions, labels);
    WeightedAccuracy score = weighted_accuracy(per_class, labels);
    report.add_num("acc_known", score.acc_known);
    report.add_num("acc_unknown", score.acc_unknown);
    report.add_num("acc", score.acc);
    for (const auto& [name, acc] : per_class) {
        report.add_num("class_acc." + name, 100.0 * acc);
    }
    for (const std::string& w : score.warnings) report.add("warning", w);
}

}  // namespace

void cmd_synthesize(const PipelineConfig& cfg, std::ostream* log) {
    LabelSet labels = cfg.known_classes();
    std::vector<std::string> classes = cfg.get_list("synthetic.classes");
    double duration = cfg.get_double_or("synthetic.duration", 1.0);
    int sample_rate = static_cast<int>(cfg.get_int_or("synthetic.sample_rate", 16000));
    long train_n = cfg.get_int_or("synthetic.train_per_class", 0);
    long test_n = cfg.get_int_or("synthetic.test_per_class", 0);
    long u_train_n = cfg.get_int_or("synthetic.unknown_train_per_class", 0);
    long u_test_n = cfg.get_int_or("synthetic.unknown_test_per_class", 0);

    std::string root = cfg.path("dataset_root");
    ensure_dir(join_path(root, "audio"));
    uint64_t seed = cfg.seed();

    std::vector<ManifestEntry> train_entries, test_entries;
    for (const std::string& name : classes) {
        SceneRecipe recipe = parse_scene_recipe(name, cfg.get_string("synthetic.recipe." + name));
        bool known = labels.is_known(name);
        struct Side {
            const char* tag;
            long count;
            std::vector<ManifestEntry>* sink;
        };
        Side sides[2] = {{"train", known ? train_n : u_train_n, &train_entries},
                         {"test", known ? test_n : u_test_n, &test_entries}};
        for (const Side& side : sides) {
            for (long i = 0; i < side.count; ++i) {
                char idx[24];
                std::snprintf(idx, sizeof(idx), "%04ld", i);
                std::string rel = "audio/" + name + "_" + side.tag + "_" + idx + ".wav";
                uint64_t clip_seed =
                    derive_seed(seed, "synth/" + name + "/" + side.tag + "/" + std::string(idx));
                AudioClip clip = render_scene(recipe, duration, sample_rate, clip_seed);
                save_wav(join_path(root, rel), clip);
                side.sink->push_back({rel, name});
            }
        }
    }
    if (train_entries.empty() && test_entries.empty()) {
        fail(ErrorCode::InvalidConfig, "synthetic generation produced no clips");
    }
    save_manifest(cfg.path("train_manifest"), train_entries);
    save_manifest(cfg.path("test_manifest"), test_entries);
    log_line(log, "synthesized " + std::to_string(train_entries.size()) + " train and " +
                      std::to_string(test_entries.size()) + " test clips");
}

void cmd_featurize(const PipelineConfig& cfg, std::ostream* log) {
    uint64_t fp = cfg.fingerprint();
    LabelSet labels = cfg.known_classes();
    FeatureConfig fcfg = cfg.feature_config();
    std::string root = cfg.path("dataset_root");
    std::string cache_dir = cfg.path("cache_dir");

    std::vector<ManifestEntry> train_entries = load_manifest(cfg.path("train_manifest"));
    std::vector<ManifestEntry> test_entries = load_manifest(cfg.path("test_manifest"));
    if (train_entries.empty()) fail(ErrorCode::EmptyDataset, "train manifest lists no clips");
    for (const std::string& name : labels.known) {
        long n = std::count_if(train_entries.begin(), train_entries.end(),
                               [&](const ManifestEntry& e) { return e.label == name; });
        if (n == 0) fail(ErrorCode::EmptyClass, "known class " + name + " has no training clips");
    }

    std::vector<SplitEntry> split =
        stratified_split(train_entries, cfg.tuning_fraction(), derive_seed(cfg.seed(), "split"));
    ensure_dir(cache_dir);
    save_split_with_fingerprint(join_path(cache_dir, "split.tsv"), split, fp);

    std::map<std::string, std::string> seen;  // sanitized -> original
    auto featurize_one = [&](const ManifestEntry& e) {
        std::string key = sanitize(e.path);
        auto [it, fresh] = seen.insert({key, e.path});
        if (!fresh && it->second != e.path) {
            fail(ErrorCode::InvalidInput,
                 "manifest paths " + it->second + " and " + e.path + " collide in the cache");
        }
        AudioClip clip = load_wav(join_path(root, e.path));
        FeatureMatrix fm = compute_features(clip, fcfg);
        save_features(cache_path(cache_dir, e.path), fm, fp);
        return fm;
    };

    // Standardization is fitted on the classifier's training rows only:
    // train-assignment entries, restricted to known classes under the closed
    // regime.
    bool closed = cfg.regime() == Regime::Closed;
    std::vector<FeatureMatrix> stats_source;
    long done = 0;
    for (size_t i = 0; i < split.size(); ++i) {
        FeatureMatrix fm = featurize_one(split[i].entry);
        bool in_training = split[i].assignment == SplitAssignment::Train &&
                           (!closed || labels.is_known(split[i].entry.label));
        if (in_training) stats_source.push_back(std::move(fm));
        ++done;
    }
    for (const ManifestEntry& e : test_entries) {
        featurize_one(e);
        ++done;
    }
    StandardizationStats stats = fit_standardization(stats_source);
    save_standardization(join_path(cache_dir, "stats.bin"), stats, fp);
    log_line(log, "featurized " + std::to_string(done) + " clips; standardization fitted on " +
                      std::to_string(stats_source.size()) + " training clips");
}

namespace {

struct TrainingData {
    TensorDataset dataset;
    std::vector<std::string> label_strings;
    std::vector<int> feature_shape;
};

// Builds the in-memory training set from the cached features. For the
// classifier, unknown-labeled clips are dropped under the closed regime and
// mapped to the reject unit under the augmented regime. For the autoencoder
// (knowns_only) they are always dropped.
TrainingData load_training_data(const PipelineConfig& cfg, bool knowns_only) {
    uint64_t fp = cfg.fingerprint();
    LabelSet labels = cfg.known_classes();
    std::string cache_dir = cfg.path("cache_dir");
    StandardizationStats stats = load_standardization(join_path(cache_dir, "stats.bin"), fp);
    std::vector<SplitEntry> split = load_split_checked(join_path(cache_dir, "split.tsv"), fp);
    bool closed = cfg.regime() == Regime::Closed;

    TrainingData out;
    for (const SplitEntry& se : split) {
        int idx = labels.index_of(se.entry.label);
        if (idx < 0) {
            if (knowns_only || closed) continue;
            idx = labels.count();  // reject unit
        }
        LoadedClip clip = load_clip(stats, cache_dir, se.entry, fp);
        int at = static_cast<int>(out.dataset.inputs.size());
        out.dataset.inputs.push_back(std::move(clip.input));
        out.dataset.labels.push_back(idx);
        out.dataset.ids.push_back(se.entry.path);
        out.label_strings.push_back(se.entry.label);
        if (se.assignment == SplitAssignment::Train) {
            out.dataset.train_indices.push_back(at);
        } else {
            out.dataset.tuning_indices.push_back(at);
        }
    }
    if (out.dataset.inputs.empty()) fail(ErrorCode::EmptyDataset, "no usable training clips");
    out.feature_shape = out.dataset.inputs[0].shape;
    return out;
}

}  // namespace

void cmd_train_classifier(const PipelineConfig& cfg, std::ostream* log) {
    uint64_t fp = cfg.fingerprint();
    LabelSet labels = cfg.known_classes();
    Regime regime = cfg.regime();
    TrainingData data = load_training_data(cfg, false);
    std::string model_dir = cfg.path("model_dir");
    ensure_dir(model_dir);

    Network net = build_classifier(regime, labels.count(), data.feature_shape,
                                   derive_seed(cfg.seed(), "classifier_init"));
    log_line(log, "classifier parameters: " + std::to_string(net.parameter_count()));

    TrainOptions opts = cfg.train_options("classifier");
    std::ofstream train_log(join_path(model_dir, "classifier_train.log"),
                            std::ios::binary | std::ios::trunc);
    if (!train_log) fail(ErrorCode::IoError, "cannot open classifier training log");
    opts.log = &train_log;

    ClassifierObjective objective(data.dataset, classifier_width(regime, labels.count()));
    TrainResult result = train_network(net, objective, data.dataset.train_indices,
                                       data.dataset.tuning_indices, opts);
    result.best.save(join_path(model_dir, "classifier.ckpt"), fp);

    // Calibration records: the training rows under the selected checkpoint.
    std::vector<Tensor> inputs;
    std::vector<std::string> ids, truth;
    std::vector<int> true_idx;
    for (int i : data.dataset.train_indices) {
        inputs.push_back(data.dataset.inputs[i]);
        ids.push_back(data.dataset.ids[i]);
        truth.push_back(data.label_strings[i]);
        true_idx.push_back(data.dataset.labels[i]);
    }
    std::vector<LogitRecord> records = classify(result.best, inputs, ids, truth, true_idx);
    save_logit_records(join_path(model_dir, "train_records.tsv"), records);

    char line[128];
    std::snprintf(line, sizeof(line), "classifier best epoch %d, tuning loss %.6f",
                  result.best_epoch, result.best_tuning_loss);
    log_line(log, line);
}

void cmd_train_autoencoder(const PipelineConfig& cfg, std::ostream* log) {
    uint64_t fp = cfg.fingerprint();
    LabelSet labels = cfg.known_classes();
    TrainingData data = load_training_data(cfg, true);
    std::string model_dir = cfg.path("model_dir");
    ensure_dir(model_dir);

    Network net = build_autoencoder(data.feature_shape, labels.count(),
                                    derive_seed(cfg.seed(), "autoencoder_init"));
    log_line(log, "autoencoder parameters: " + std::to_string(net.parameter_count()));

    TrainOptions opts = cfg.train_options("autoencoder");
    std::ofstream train_log(join_path(model_dir, "autoencoder_train.log"),
                            std::ios::binary | std::ios::trunc);
    if (!train_log) fail(ErrorCode::IoError, "cannot open autoencoder training log");
    opts.log = &train_log;

    ReconstructionObjective objective(data.dataset, labels.count(), cfg.c2ae_config());
    TrainResult result = train_network(net, objective, data.dataset.train_indices,
                                       data.dataset.tuning_indices, opts);
    result.best.save(join_path(model_dir, "autoencoder.ckpt"), fp);

    char line[128];
    std::snprintf(line, sizeof(line), "autoencoder best epoch %d, tuning loss %.6f",
                  result.best_epoch, result.best_tuning_loss);
    log_line(log, line);
}

void cmd_fit_openmax(const PipelineConfig& cfg, std::ostream* log) {
    uint64_t fp = cfg.fingerprint();
    std::string model_dir = cfg.path("model_dir");
    std::vector<LogitRecord> records =
        load_logit_records(join_path(model_dir, "train_records.tsv"));
    int width = static_cast<int>(records[0].logits.size());
    EvtModel model = fit_evt_model(records, cfg.evt_config(), width);
    save_evt_model(join_path(model_dir, "evt_model.txt"), model, fp);
    log_line(log, "calibrated " + std::to_string(model.classes.size()) + " classes on " +
                      std::to_string(records.size()) + " training records");
}

namespace {

struct TestSet {
    std::vector<Tensor> inputs;
    std::vector<std::string> ids, truth;
    std::vector<int> true_idx;
    std::vector<bool> is_unknown;
    std::vector<LogitRecord> records;
};

TestSet load_test_set(const PipelineConfig& cfg, Network& classifier) {
    uint64_t fp = cfg.fingerprint();
    LabelSet labels = cfg.known_classes();
    std::string cache_dir = cfg.path("cache_dir");
    StandardizationStats stats = load_standardization(join_path(cache_dir, "stats.bin"), fp);
    std::vector<ManifestEntry> entries = load_manifest(cfg.path("test_manifest"));
    if (entries.empty()) fail(ErrorCode::EmptyDataset, "test manifest lists no clips");

    TestSet t;
    for (const ManifestEntry& e : entries) {
        LoadedClip clip = load_clip(stats, cache_dir, e, fp);
        t.inputs.push_back(std::move(clip.input));
        t.ids.push_back(e.path);
        t.truth.push_back(e.label);
        int idx = labels.index_of(e.label);
        t.true_idx.push_back(idx);
        t.is_unknown.push_back(idx < 0);
    }
    t.records = classify(classifier, t.inputs, t.ids, t.truth, t.true_idx);
    return t;
}

void write_score_tables(const PipelineConfig& cfg, const std::string& report_dir,
                        const std::string& backend, const std::vector<double>& scores,
                        const std::vector<bool>& is_unknown, double* auroc_out) {
    AurocResult roc = auroc(scores, is_unknown);
    write_roc_tsv(join_path(report_dir, backend + "_roc.tsv"), roc.points);
    ScoreHistograms hist = score_histograms(scores, is_unknown, cfg.histogram_bins());
    write_histogram_tsv(join_path(report_dir, backend + "_hist.tsv"), hist);
    *auroc_out = roc.auroc;
}

}  // namespace

void cmd_evaluate(const PipelineConfig& cfg, const std::string& backend, std::ostream* log) {
    if (backend != "threshold" && backend != "openmax" && backend != "c2ae") {
        fail(ErrorCode::InvalidInput, "backend must be threshold, openmax, or c2ae");
    }
    uint64_t fp = cfg.fingerprint();
    Regime regime = cfg.regime();
    LabelSet labels = cfg.known_classes();
    std::string model_dir = cfg.path("model_dir");
    std::string report_dir = cfg.path("report_dir");
    ensure_dir(report_dir);

    Network classifier = Network::load(join_path(model_dir, "classifier.ckpt"), fp);
    TestSet test = load_test_set(cfg, classifier);
    long n_unknown = std::count(test.is_unknown.begin(), test.is_unknown.end(), true);

    if (backend == "threshold") {
        std::vector<double> scores;
        for (const LogitRecord& r : test.records) {
            scores.push_back(1.0 - r.probabilities[r.predicted]);
        }
        double auc = 0.0;
        write_score_tables(cfg, report_dir, backend, scores, test.is_unknown, &auc);
        for (double eps : cfg.epsilon_list()) {
            ThresholdPolicy policy{eps, regime};
            std::vector<std::pair<OpenSetDecision, std::string>> decisions;
            for (size_t i = 0; i < test.records.size(); ++i) {
                decisions.push_back({threshold_decide(test.records[i], policy), test.truth[i]});
            }
            ReportWriter report;
            report.add("backend", backend);
            report.add("regime", regime_name(regime));
            report.add("epsilon", format_g(eps));
            report.add("n_test", std::to_string(test.records.size()));
            report.add("n_unknown_test", std::to_string(n_unknown));
            report.add_num("auroc", auc, "%.6f");
            add_accuracy_block(report, decisions, labels);
            std::string name = backend + "_eps" + format_g(eps) + ".report.txt";
            report.write(join_path(report_dir, name));
            log_line(log, "wrote " + name);
        }
        return;
    }

    if (backend == "openmax") {
        EvtModel model = load_evt_model(join_path(model_dir, "evt_model.txt"), fp);
        std::optional<double> eps;
        if (cfg.has("backend.openmax_epsilon")) {
            eps = cfg.get_double("backend.openmax_epsilon");
        }
        std::vector<double> scores;
        std::vector<std::pair<OpenSetDecision, std::string>> decisions;
        for (size_t i = 0; i < test.records.size(); ++i) {
            RecalibratedOutput out = evt_decide(test.records[i], model, regime, eps);
            scores.push_back(out.decision.unknownness);
            decisions.push_back({out.decision, test.truth[i]});
        }
        double auc = 0.0;
        write_score_tables(cfg, report_dir, backend, scores, test.is_unknown, &auc);
        ReportWriter report;
        report.add("backend", backend);
        report.add("regime", regime_name(regime));
        report.add("tail_size", std::to_string(model.config.tail_size));
        report.add("alpha", std::to_string(model.config.alpha));
        if (eps) report.add("epsilon", format_g(*eps));
        report.add("n_test", std::to_string(test.records.size()));
        report.add("n_unknown_test", std::to_string(n_unknown));
        report.add_num("auroc", auc, "%.6f");
        add_accuracy_block(report, decisions, labels);
        report.write(join_path(report_dir, "openmax.report.txt"));
        log_line(log, "wrote openmax.report.txt");
        return;
    }

    // c2ae
    Network autoencoder = Network::load(join_path(model_dir, "autoencoder.ckpt"), fp);
    C2aeConfig ccfg = cfg.c2ae_config();
    std::vector<double> scores;
    std::vector<std::pair<OpenSetDecision, std::string>> decisions;
    std::ostringstream errs;
    errs << "# id\ttrue_label\tpredicted\terr\n";
    char buf[32];
    for (size_t i = 0; i < test.records.size(); ++i) {
        OpenSetDecision d = c2ae_decide(test.records[i], test.inputs[i], autoencoder, ccfg, regime,
                                        labels.count());
        scores.push_back(d.unknownness);
        decisions.push_back({d, test.truth[i]});
        std::snprintf(buf, sizeof(buf), "%.17g", d.unknownness);
        errs << test.ids[i] << '\t' << test.truth[i] << '\t' << test.records[i].predicted << '\t'
             << buf << '\n';
    }
    write_text_file(join_path(report_dir, "c2ae_errors.tsv"), errs.str());
    double auc = 0.0;
    write_score_tables(cfg, report_dir, backend, scores, test.is_unknown, &auc);
    ReportWriter report;
    report.add("backend", backend);
    report.add("regime", regime_name(regime));
    report.add("theta", format_g(ccfg.threshold));
    report.add("n_test", std::to_string(test.records.size()));
    report.add("n_unknown_test", std::to_string(n_unknown));
    report.add_num("auroc", auc, "%.6f");
    add_accuracy_block(report, decisions, labels);
    report.write(join_path(report_dir, "c2ae.report.txt"));
    log_line(log, "wrote c2ae.report.txt");
}

InferenceResult cmd_infer(const PipelineConfig& cfg, const std::string& backend,
                          const std::string& wav_path) {
    if (backend != "threshold" && backend != "openmax" && backend != "c2ae") {
        fail(ErrorCode::InvalidInput, "backend must be threshold, openmax, or c2ae");
    }
    uint64_t fp = cfg.fingerprint();
    Regime regime = cfg.regime();
    LabelSet labels = cfg.known_classes();
    std::string cache_dir = cfg.path("cache_dir");
    std::string model_dir = cfg.path("model_dir");

    StandardizationStats stats = load_standardization(join_path(cache_dir, "stats.bin"), fp);
    AudioClip clip = load_wav(wav_path);
    FeatureMatrix fm = compute_features(clip, cfg.feature_config());
    Tensor input = feature_to_tensor(standardize(fm, stats));

    Network classifier = Network::load(join_path(model_dir, "classifier.ckpt"), fp);
    std::vector<Tensor> inputs{input};
    std::vector<LogitRecord> records = classify(classifier, inputs, {wav_path}, {""}, {-1});
    const LogitRecord& record = records[0];

    OpenSetDecision d;
    if (backend == "threshold") {
        d = threshold_decide(record, {cfg.epsilon_list().front(), regime});
    } else if (backend == "openmax") {
        EvtModel model = load_evt_model(join_path(model_dir, "evt_model.txt"), fp);
        std::optional<double> eps;
        if (cfg.has("backend.openmax_epsilon")) {
            eps = cfg.get_double("backend.openmax_epsilon");
        }
        d = evt_decide(record, model, regime, eps).decision;
    } else {
        Network autoencoder = Network::load(join_path(model_dir, "autoencoder.ckpt"), fp);
        d = c2ae_decide(record, input, autoencoder, cfg.c2ae_config(), regime, labels.count());
    }

    InferenceResult result;
    result.unknown = d.unknown;
    result.score = d.unknownness;
    result.label = d.unknown ? kUnknownLabel : labels.known[d.class_index];
    return result;
}

}  // namespace openasc
