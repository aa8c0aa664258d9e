#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "openasc.h"

namespace fs = std::filesystem;

namespace {

std::string config_text(const fs::path& root, int n_mels) {
    std::ostringstream os;
    os << "[pipeline]\n"
          "seed = 1234\n"
          "known_classes = hum, chirp\n"
          "[synthetic]\n"
          "classes = hum, chirp, hiss\n"
          "recipe.hum = tone:220:0.4, noise:0.02\n"
          "recipe.chirp = band:2000:400:0.4, noise:0.02\n"
          "recipe.hiss = noise:0.3\n"
          "sample_rate = 8000\n"
          "duration = 0.5\n"
          "train_per_class = 12\n"
          "test_per_class = 5\n"
          "unknown_test_per_class = 6\n"
          "[features]\n"
          "window_size = 256\n"
          "hop = 128\n";
    os << "n_mels = " << n_mels << "\n";
    os << "[training]\n"
          "classifier_epochs = 15\n"
          "batch_size = 4\n"
          "tuning_fraction = 0.25\n"
          "[backend]\n"
          "epsilon_list = 0.5\n"
          "[paths]\n";
    os << "dataset_root = " << (root / "data").string() << "\n";
    os << "train_manifest = " << (root / "data" / "train.tsv").string() << "\n";
    os << "test_manifest = " << (root / "data" / "test.tsv").string() << "\n";
    os << "cache_dir = " << (root / "cache").string() << "\n";
    os << "model_dir = " << (root / "models").string() << "\n";
    os << "report_dir = " << (root / "reports").string() << "\n";
    return os.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct ConfigHandle {
    oasc_config* cfg = nullptr;
    ~ConfigHandle() { oasc_config_free(cfg); }
};

}  // namespace

TEST_CASE("version and initial error state") {
    CHECK(std::strcmp(oasc_version(), "0.1.0") == 0);
    CHECK(oasc_last_error() != nullptr);
}

TEST_CASE("config parse load get set fingerprint") {
    TempDir dir("openasc_capi_cfg");
    std::string text = config_text(dir.path, 32);

    ConfigHandle h;
    REQUIRE(oasc_config_parse(text.c_str(), "inline", &h.cfg) == OASC_OK);
    REQUIRE(h.cfg != nullptr);

    char buf[128];
    CHECK(oasc_config_get(h.cfg, "pipeline.seed", buf, sizeof(buf)) == OASC_OK);
    CHECK(std::string(buf) == "1234");

    // Truncation keeps the NUL terminator.
    char tiny[5];
    CHECK(oasc_config_get(h.cfg, "pipeline.known_classes", tiny, sizeof(tiny)) == OASC_OK);
    CHECK(std::string(tiny) == "hum,");

    CHECK(oasc_config_get(h.cfg, "pipeline.absent", buf, sizeof(buf)) == OASC_ERR_INPUT);
    CHECK(std::string(oasc_last_error()).find("pipeline.absent") != std::string::npos);

    CHECK(oasc_config_set(h.cfg, "backend.theta", "0.4") == OASC_OK);
    CHECK(oasc_config_get(h.cfg, "backend.theta", buf, sizeof(buf)) == OASC_OK);
    CHECK(std::string(buf) == "0.4");
    CHECK(oasc_config_set(h.cfg, "nodot", "x") == OASC_ERR_INPUT);

    uint64_t fp1 = 0, fp2 = 0;
    CHECK(oasc_config_fingerprint(h.cfg, &fp1) == OASC_OK);
    ConfigHandle again;
    REQUIRE(oasc_config_parse(text.c_str(), "inline", &again.cfg) == OASC_OK);
    CHECK(oasc_config_fingerprint(again.cfg, &fp2) == OASC_OK);
    CHECK(fp1 == fp2);  // backend.theta tweak is not identity-bearing
    CHECK(oasc_config_set(again.cfg, "pipeline.seed", "99") == OASC_OK);
    CHECK(oasc_config_fingerprint(again.cfg, &fp2) == OASC_OK);
    CHECK(fp1 != fp2);

    // File round trip.
    fs::path file = dir.path / "c.conf";
    {
        std::ofstream out(file);
        out << text;
    }
    ConfigHandle loaded;
    CHECK(oasc_config_load(file.string().c_str(), &loaded.cfg) == OASC_OK);
    uint64_t fp3 = 0;
    CHECK(oasc_config_fingerprint(loaded.cfg, &fp3) == OASC_OK);
    CHECK(fp3 == fp1);
}

TEST_CASE("failures set status and message") {
    ConfigHandle h;
    CHECK(oasc_config_parse("[pipeline]\nseed = what\n", "t", &h.cfg) == OASC_ERR_INPUT);
    CHECK(h.cfg == nullptr);
    CHECK(std::string(oasc_last_error()).find("seed") != std::string::npos);

    ConfigHandle missing;
    CHECK(oasc_config_load("/nonexistent/openasc.conf", &missing.cfg) == OASC_ERR_INPUT);

    CHECK(oasc_config_parse(nullptr, "t", &h.cfg) == OASC_ERR_INPUT);
    CHECK(oasc_config_fingerprint(nullptr, nullptr) == OASC_ERR_INPUT);
    CHECK(oasc_synthesize(nullptr) == OASC_ERR_INPUT);
    CHECK(oasc_infer(nullptr, "threshold", "x.wav", nullptr) == OASC_ERR_INPUT);
    oasc_config_free(nullptr);  // must be a no-op
}

TEST_CASE("pipeline stages run through the shared library") {
    TempDir dir("openasc_capi_run");
    std::string text = config_text(dir.path, 32);
    ConfigHandle h;
    REQUIRE(oasc_config_parse(text.c_str(), "inline", &h.cfg) == OASC_OK);

    REQUIRE(oasc_synthesize(h.cfg) == OASC_OK);
    CHECK(fs::exists(dir.path / "data" / "train.tsv"));
    REQUIRE(oasc_featurize(h.cfg) == OASC_OK);
    REQUIRE(oasc_train_classifier(h.cfg) == OASC_OK);
    CHECK(fs::exists(dir.path / "models" / "classifier.ckpt"));
    REQUIRE(oasc_evaluate(h.cfg, "threshold") == OASC_OK);
    CHECK(fs::exists(dir.path / "reports" / "threshold_eps0.5.report.txt"));
    CHECK(oasc_evaluate(h.cfg, "bogus") == OASC_ERR_INPUT);

    oasc_decision d;
    std::string wav = (dir.path / "data" / "audio" / "hum_test_0000.wav").string();
    REQUIRE(oasc_infer(h.cfg, "threshold", wav.c_str(), &d) == OASC_OK);
    CHECK(d.label[0] != '\0');
    if (d.unknown) {
        CHECK(std::string(d.label) == "unknown");
    } else {
        std::string label = d.label;
        CHECK((label == "hum" || label == "chirp"));
    }
    CHECK(oasc_infer(h.cfg, "threshold", "/nope.wav", &d) == OASC_ERR_INPUT);
}

TEST_CASE("internal faults map to the internal status") {
    // 16 mel bands is below the autoencoder's minimum spatial extent, which
    // is an internal shape fault rather than a config parse problem.
    TempDir dir("openasc_capi_internal");
    std::string text = config_text(dir.path, 16);
    ConfigHandle h;
    REQUIRE(oasc_config_parse(text.c_str(), "inline", &h.cfg) == OASC_OK);
    REQUIRE(oasc_synthesize(h.cfg) == OASC_OK);
    REQUIRE(oasc_featurize(h.cfg) == OASC_OK);
    CHECK(oasc_train_autoencoder(h.cfg) == OASC_ERR_INTERNAL);
    CHECK(std::string(oasc_last_error()).find("ShapeError") != std::string::npos);
}
