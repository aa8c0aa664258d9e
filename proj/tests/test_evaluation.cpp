#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "openasc/error.hpp"
#include "openasc/evaluation.hpp"

using namespace openasc;

namespace {

OpenSetDecision known_decision(int index) {
    OpenSetDecision d;
    d.class_index = index;
    return d;
}

OpenSetDecision unknown_decision() {
    OpenSetDecision d;
    d.unknown = true;
    return d;
}

// Every discordant/concordant pair, ties at half weight. Quadratic on purpose.
double pair_counting_auroc(const std::vector<double>& scores,
                           const std::vector<bool>& is_unknown) {
    double num = 0.0;
    long pairs = 0;
    for (size_t u = 0; u < scores.size(); ++u) {
        if (!is_unknown[u]) continue;
        for (size_t k = 0; k < scores.size(); ++k) {
            if (is_unknown[k]) continue;
            ++pairs;
            if (scores[u] > scores[k]) {
                num += 1.0;
            } else if (scores[u] == scores[k]) {
                num += 0.5;
            }
        }
    }
    return num / static_cast<double>(pairs);
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("per-class accuracy counts matches and collapses unknowns") {
    LabelSet labels;
    labels.known = {"alpha", "beta"};
    std::vector<std::pair<OpenSetDecision, std::string>> decisions = {
        {known_decision(0), "alpha"},    // correct
        {known_decision(1), "alpha"},    // wrong class
        {unknown_decision(), "alpha"},   // false rejection
        {known_decision(1), "beta"},     // correct
        {unknown_decision(), "hiss"},    // correct rejection
        {unknown_decision(), "murmur"},  // correct rejection
        {known_decision(0), "murmur"},   // missed rejection
    };
    auto acc = class_accuracies(decisions, labels);
    CHECK(acc.size() == 3);
    CHECK(acc["alpha"] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(acc["beta"] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(acc["unknown"] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(class_accuracies({}, labels), Error);
}

TEST_CASE("weighted accuracy averages knowns and the unknown pseudo-class") {
    LabelSet labels;
    labels.known = {"alpha", "beta"};
    std::map<std::string, double> per_class = {
        {"alpha", 0.5}, {"beta", 0.7}, {"unknown", 0.9}};
    WeightedAccuracy w = weighted_accuracy(per_class, labels);
    CHECK(w.acc_known == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(w.acc_unknown == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(w.acc == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(w.warnings.empty());
}

TEST_CASE("weighted accuracy skips absent classes with a warning") {
    LabelSet labels;
    labels.known = {"alpha", "beta", "gamma"};
    std::map<std::string, double> per_class = {{"alpha", 0.4}, {"unknown", 1.0}};
    WeightedAccuracy w = weighted_accuracy(per_class, labels);
    CHECK(w.acc_known == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(w.warnings.size() == 2);
    CHECK(w.warnings[0].find("beta") != std::string::npos);
    CHECK(w.warnings[1].find("gamma") != std::string::npos);
}

TEST_CASE("weighted accuracy rejects unusable ground truth") {
    LabelSet labels;
    labels.known = {"alpha"};
    CHECK(code_of([&] { weighted_accuracy({{"alpha", 1.0}}, labels); }) ==
          ErrorCode::InvalidInput);
    CHECK(code_of([&] { weighted_accuracy({{"unknown", 1.0}}, labels); }) ==
          ErrorCode::InvalidInput);
    LabelSet none;
    CHECK(code_of([&] { weighted_accuracy({{"unknown", 1.0}}, none); }) ==
          ErrorCode::InvalidInput);
}

TEST_CASE("auroc matches brute-force pair counting on random sets") {
    std::mt19937_64 rng(20240817);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> size_dist(2, 50);
        int n = size_dist(rng);
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        // Mix continuous scores with a coarse grid so ties actually occur.
        std::uniform_real_distribution<double> real(0.0, 1.0);
        std::uniform_int_distribution<int> grid(0, 4);
        bool coarse = trial % 2 == 0;
        for (int i = 0; i < n; ++i) {
            scores[i] = coarse ? grid(rng) / 4.0 : real(rng);
            labels[i] = real(rng) < 0.5;
        }
        // Force both populations to exist.
        labels[0] = true;
        labels[n - 1] = false;

        double expect = pair_counting_auroc(scores, labels);
        AurocResult got = auroc(scores, labels);
        INFO("trial ", trial, " n ", n);
        CHECK(std::abs(got.auroc - expect) < 1e-9);
    }
}

TEST_CASE("auroc endpoints and degenerate inputs") {
    AurocResult perfect = auroc({0.9, 0.8, 0.1, 0.2}, {true, true, false, false});
    CHECK(perfect.auroc == doctest::Approx(1.0).epsilon(1e-12));
    AurocResult inverted = auroc({0.1, 0.2, 0.9, 0.8}, {true, true, false, false});
    CHECK(inverted.auroc == doctest::Approx(0.0).epsilon(1e-12));
    AurocResult ties = auroc({0.5, 0.5, 0.5, 0.5}, {true, true, false, false});
    CHECK(ties.auroc == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(code_of([&] { auroc({}, {}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { auroc({0.1, 0.2}, {true}); }) == ErrorCode::InvalidInput);
    CHECK(code_of([&] { auroc({0.1, 0.2}, {true, true}); }) == ErrorCode::UndefinedMetric);
    CHECK(code_of([&] { auroc({0.1, 0.2}, {false, false}); }) == ErrorCode::UndefinedMetric);
}

TEST_CASE("roc curve runs from the origin to (1,1)") {
    AurocResult r = auroc({0.9, 0.3, 0.7, 0.3}, {true, false, true, false});
    REQUIRE(r.points.size() >= 2);
    CHECK(r.points.front().fpr == 0.0);
    CHECK(r.points.front().tpr == 0.0);
    CHECK(std::isinf(r.points.front().threshold));
    CHECK(r.points.back().fpr == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.points.back().tpr == doctest::Approx(1.0).epsilon(1e-12));
    // Monotone in both axes.
    for (size_t i = 1; i < r.points.size(); ++i) {
        CHECK(r.points[i].fpr >= r.points[i - 1].fpr);
        CHECK(r.points[i].tpr >= r.points[i - 1].tpr);
        CHECK(r.points[i].threshold <= r.points[i - 1].threshold);
    }
}

TEST_CASE("histograms use equal-width bins over the finite range") {
    std::vector<double> scores = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<bool> labels = {false, false, true, true, true};
    ScoreHistograms h = score_histograms(scores, labels, 4);
    CHECK(h.lo == 0.0);
    CHECK(h.hi == 1.0);
    CHECK(h.known == std::vector<long>({1, 1, 0, 0}));
    CHECK(h.unknown == std::vector<long>({0, 0, 1, 2}));  // max clamps into the last bin
}

TEST_CASE("histogram edge cases") {
    // Constant scores widen the range by half a unit on both sides.
    ScoreHistograms flat = score_histograms({2.0, 2.0}, {true, false}, 2);
    CHECK(flat.lo == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(flat.hi == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(flat.known[1] == 1);
    CHECK(flat.unknown[1] == 1);

    // Non-finite scores land in the outermost bin on their side.
    double inf = std::numeric_limits<double>::infinity();
    ScoreHistograms mixed = score_histograms({-inf, 0.0, 1.0, inf}, {false, false, true, true}, 3);
    CHECK(mixed.lo == 0.0);
    CHECK(mixed.hi == 1.0);
    CHECK(mixed.known == std::vector<long>({2, 0, 0}));
    CHECK(mixed.unknown == std::vector<long>({0, 0, 2}));

    // All-non-finite input falls back to a unit range.
    ScoreHistograms allinf = score_histograms({inf, -inf}, {true, false}, 2);
    CHECK(allinf.lo == 0.0);
    CHECK(allinf.hi == 1.0);
    CHECK(allinf.unknown == std::vector<long>({0, 1}));
    CHECK(allinf.known == std::vector<long>({1, 0}));

    CHECK(code_of([&] { score_histograms({1.0}, {true}, 1); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([&] { score_histograms({}, {}, 4); }) == ErrorCode::InvalidInput);
}

TEST_CASE("tsv writers emit headers and one row per entry") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "openasc_eval_test";
    fs::create_directories(dir);

    AurocResult r = auroc({0.9, 0.1}, {true, false});
    fs::path roc = dir / "roc.tsv";
    write_roc_tsv(roc.string(), r.points);
    std::ifstream in(roc);
    std::string line;
    std::getline(in, line);
    CHECK(line == "fpr\ttpr\tthreshold");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(r.points.size()));

    ScoreHistograms h = score_histograms({0.0, 1.0}, {false, true}, 2);
    fs::path hist = dir / "hist.tsv";
    write_histogram_tsv(hist.string(), h);
    std::ifstream hin(hist);
    std::getline(hin, line);
    CHECK(line == "bin_lo\tbin_hi\tknown\tunknown");
    std::getline(hin, line);
    CHECK(line == "0\t0.5\t1\t0");
    std::getline(hin, line);
    CHECK(line == "0.5\t1\t0\t1");

    fs::remove_all(dir);
}

TEST_CASE("balanced score arithmetic on published-style inputs") {
    // Two knowns at 63.8% mean with unknown recall 35.9% should average to
    // 49.85, matching the reporting convention used by the evaluate command.
    LabelSet labels;
    labels.known = {"a", "b"};
    std::map<std::string, double> per_class = {
        {"a", 0.60}, {"b", 0.676}, {"unknown", 0.359}};
    WeightedAccuracy w = weighted_accuracy(per_class, labels);
    CHECK(w.acc_known == doctest::Approx(63.8).epsilon(1e-9));
    CHECK(w.acc == doctest::Approx(0.5 * (63.8 + 35.9)).epsilon(1e-9));
}
