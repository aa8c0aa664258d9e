#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "openasc/dataio.hpp"

namespace openasc {

enum class WindowKind { Hann, Rect };

struct FeatureConfig {
    int window_size = 2048;
    int hop = 512;
    int n_mels = 256;
    double log_floor = 1e-10;
    WindowKind window = WindowKind::Hann;
};

// Power spectrogram, [n_frames, n_bins] row-major in doubles.
struct Spectrogram {
    int n_frames = 0;
    int n_bins = 0;
    std::vector<double> power;

    double& at(int t, int k) { return power[static_cast<size_t>(t) * n_bins + k]; }
    double at(int t, int k) const { return power[static_cast<size_t>(t) * n_bins + k]; }
};

// Log-mel feature matrix, [n_frames, n_mels]. Stored in single precision:
// this is the pipeline's canonical feature dtype, matching the on-disk cache.
struct FeatureMatrix {
    int n_frames = 0;
    int n_mels = 0;
    std::vector<float> values;

    float& at(int t, int m) { return values[static_cast<size_t>(t) * n_mels + m]; }
    float at(int t, int m) const { return values[static_cast<size_t>(t) * n_mels + m]; }
};

// Frame count is ceil(len / hop); frame t is centered on sample t * hop with
// reflection padding at the edges. Window is periodic Hann by default.
Spectrogram stft_power(const AudioClip& clip, const FeatureConfig& cfg);

// Triangular filters on the HTK mel scale spanning 0 to Nyquist, unnormalized.
// Filters too narrow to cover any FFT bin are snapped to their nearest bin so
// every row has positive weight. Returns [n_mels][n_bins].
std::vector<std::vector<double>> mel_filterbank(int n_bins, int n_mels, int sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

FeatureMatrix mel_project_log(const Spectrogram& spec, int n_mels, int sample_rate,
                              double log_floor);

FeatureMatrix compute_features(const AudioClip& clip, const FeatureConfig& cfg);

// Per-bin standardization fitted on training features only. Uses the
// population standard deviation with an epsilon floor for constant bins.
struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    double epsilon = 1e-8;
};

StandardizationStats fit_standardization(const std::vector<FeatureMatrix>& features,
                                         double epsilon = 1e-8);
FeatureMatrix standardize(const FeatureMatrix& fm, const StandardizationStats& stats);

// Feature cache and stats files carry the pipeline fingerprint they were
// produced under; loading verifies it to catch stale caches.
void save_features(const std::string& path, const FeatureMatrix& fm, uint64_t fingerprint);
FeatureMatrix load_features(const std::string& path, uint64_t expected_fingerprint);
void save_standardization(const std::string& path, const StandardizationStats& stats,
                          uint64_t fingerprint);
StandardizationStats load_standardization(const std::string& path, uint64_t expected_fingerprint);

}  // namespace openasc
