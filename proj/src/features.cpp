#include "openasc/features.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

namespace {

// Infinite reflection without edge repetition, matching centered framing.
size_t reflect_index(long i, long len) {
    if (len == 1) return 0;
    long period = 2 * (len - 1);
    long m = ((i % period) + period) % period;
    if (m >= len) m = period - m;
    return static_cast<size_t>(m);
}

void validate_feature_config(const FeatureConfig& cfg) {
    if (cfg.window_size <= 0 || cfg.hop <= 0) {
        fail(ErrorCode::InvalidParameter, "window size and hop must be positive");
    }
    if (cfg.n_mels <= 0) fail(ErrorCode::InvalidParameter, "n_mels must be positive");
    if (cfg.log_floor <= 0.0) fail(ErrorCode::InvalidParameter, "log floor must be positive");
}

}  // namespace

Spectrogram stft_power(const AudioClip& clip, const FeatureConfig& cfg) {
    validate_feature_config(cfg);
    if (clip.samples.empty()) fail(ErrorCode::InvalidInput, "empty clip");
    if (clip.sample_rate <= 0) fail(ErrorCode::InvalidInput, "clip has no sample rate");

    const int N = cfg.window_size;
    const long len = static_cast<long>(clip.samples.size());
    const int n_frames = static_cast<int>((len + cfg.hop - 1) / cfg.hop);
    const int n_bins = N / 2 + 1;

    std::vector<double> window(N, 1.0);
    if (cfg.window == WindowKind::Hann) {
        for (int i = 0; i < N; ++i) {
            window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / N));
        }
    }

    Spectrogram spec;
    spec.n_frames = n_frames;
    spec.n_bins = n_bins;
    spec.power.assign(static_cast<size_t>(n_frames) * n_bins, 0.0);

    double* in = fftw_alloc_real(N);
    fftw_complex* out = fftw_alloc_complex(n_bins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(N, in, out, FFTW_ESTIMATE);

    for (int t = 0; t < n_frames; ++t) {
        long start = static_cast<long>(t) * cfg.hop - N / 2;
        for (int i = 0; i < N; ++i) {
            in[i] = clip.samples[reflect_index(start + i, len)] * window[i];
        }
        fftw_execute(plan);
        for (int k = 0; k < n_bins; ++k) {
            spec.at(t, k) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
    }

    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(int n_bins, int n_mels, int sample_rate) {
    if (n_bins < 2 || n_mels <= 0 || sample_rate <= 0) {
        fail(ErrorCode::InvalidParameter, "bad filterbank geometry");
    }
    const int N = 2 * (n_bins - 1);
    const double nyquist = sample_rate / 2.0;

    std::vector<double> edges_hz(n_mels + 2);
    double mel_hi = hz_to_mel(nyquist);
    for (int j = 0; j < n_mels + 2; ++j) {
        edges_hz[j] = mel_to_hz(mel_hi * j / (n_mels + 1));
    }

    std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
    for (int m = 0; m < n_mels; ++m) {
        double lo = edges_hz[m], center = edges_hz[m + 1], hi = edges_hz[m + 2];
        double row_sum = 0.0;
        for (int k = 0; k < n_bins; ++k) {
            double hz = static_cast<double>(k) * sample_rate / N;
            double up = center > lo ? (hz - lo) / (center - lo) : -1.0;
            double down = hi > center ? (hi - hz) / (hi - center) : -1.0;
            double w = std::max(0.0, std::min(up, down));
            fb[m][k] = w;
            row_sum += w;
        }
        if (row_sum <= 0.0) {
            // Filter narrower than the bin spacing: snap to the nearest bin so
            // the row keeps positive weight.
            int k = static_cast<int>(std::lround(center * N / sample_rate));
            k = std::min(std::max(k, 0), n_bins - 1);
            fb[m][k] = 1.0;
        }
    }
    return fb;
}

FeatureMatrix mel_project_log(const Spectrogram& spec, int n_mels, int sample_rate,
                              double log_floor) {
    auto fb = mel_filterbank(spec.n_bins, n_mels, sample_rate);
    FeatureMatrix fm;
    fm.n_frames = spec.n_frames;
    fm.n_mels = n_mels;
    fm.values.resize(static_cast<size_t>(spec.n_frames) * n_mels);
    for (int t = 0; t < spec.n_frames; ++t) {
        for (int m = 0; m < n_mels; ++m) {
            double acc = 0.0;
            const std::vector<double>& row = fb[m];
            for (int k = 0; k < spec.n_bins; ++k) acc += row[k] * spec.at(t, k);
            fm.at(t, m) = static_cast<float>(std::log(acc + log_floor));
        }
    }
    return fm;
}

FeatureMatrix compute_features(const AudioClip& clip, const FeatureConfig& cfg) {
    Spectrogram spec = stft_power(clip, cfg);
    return mel_project_log(spec, cfg.n_mels, clip.sample_rate, cfg.log_floor);
}

StandardizationStats fit_standardization(const std::vector<FeatureMatrix>& features,
                                         double epsilon) {
    if (features.empty()) fail(ErrorCode::EmptyDataset, "no features to fit standardization");
    if (epsilon <= 0.0) fail(ErrorCode::InvalidParameter, "epsilon must be positive");
    int n_mels = features[0].n_mels;
    std::vector<double> sum(n_mels, 0.0), sumsq(n_mels, 0.0);
    long count = 0;
    for (const FeatureMatrix& fm : features) {
        if (fm.n_mels != n_mels) {
            fail(ErrorCode::ShapeError, "feature bin count mismatch in standardization fit");
        }
        for (int t = 0; t < fm.n_frames; ++t) {
            for (int m = 0; m < n_mels; ++m) {
                double x = fm.at(t, m);
                sum[m] += x;
                sumsq[m] += x * x;
            }
        }
        count += fm.n_frames;
    }
    if (count == 0) fail(ErrorCode::EmptyDataset, "no frames to fit standardization");

    StandardizationStats stats;
    stats.epsilon = epsilon;
    stats.mean.resize(n_mels);
    stats.stddev.resize(n_mels);
    for (int m = 0; m < n_mels; ++m) {
        double mean = sum[m] / count;
        double var = sumsq[m] / count - mean * mean;
        stats.mean[m] = mean;
        stats.stddev[m] = std::max(std::sqrt(std::max(var, 0.0)), epsilon);
    }
    return stats;
}

FeatureMatrix standardize(const FeatureMatrix& fm, const StandardizationStats& stats) {
    if (fm.n_mels != static_cast<int>(stats.mean.size())) {
        fail(ErrorCode::ShapeError, "feature bin count does not match standardization stats");
    }
    FeatureMatrix out = fm;
    for (int t = 0; t < fm.n_frames; ++t) {
        for (int m = 0; m < fm.n_mels; ++m) {
            out.at(t, m) = static_cast<float>((static_cast<double>(fm.at(t, m)) - stats.mean[m]) /
                                              stats.stddev[m]);
        }
    }
    return out;
}

void save_features(const std::string& path, const FeatureMatrix& fm, uint64_t fingerprint) {
    MatrixFile m;
    m.dtype = 0;
    m.rows = static_cast<uint32_t>(fm.n_frames);
    m.cols = static_cast<uint32_t>(fm.n_mels);
    m.fingerprint = fingerprint;
    m.f32 = fm.values;
    write_matrix_file(path, m, kFeatureMagic);
}

FeatureMatrix load_features(const std::string& path, uint64_t expected_fingerprint) {
    MatrixFile m = read_matrix_file(path, kFeatureMagic);
    if (m.dtype != 0) fail(ErrorCode::CorruptFile, "feature cache must be f32: " + path);
    if (expected_fingerprint != 0 && m.fingerprint != expected_fingerprint) {
        fail(ErrorCode::PipelineMismatch,
             "feature cache " + path + " was produced under a different pipeline configuration");
    }
    FeatureMatrix fm;
    fm.n_frames = static_cast<int>(m.rows);
    fm.n_mels = static_cast<int>(m.cols);
    fm.values = std::move(m.f32);
    return fm;
}

void save_standardization(const std::string& path, const StandardizationStats& stats,
                          uint64_t fingerprint) {
    MatrixFile m;
    m.dtype = 1;
    m.rows = 3;
    m.cols = static_cast<uint32_t>(stats.mean.size());
    m.fingerprint = fingerprint;
    m.f64.assign(static_cast<size_t>(3) * stats.mean.size(), 0.0);
    for (size_t i = 0; i < stats.mean.size(); ++i) {
        m.f64[i] = stats.mean[i];
        m.f64[stats.mean.size() + i] = stats.stddev[i];
    }
    m.f64[2 * stats.mean.size()] = stats.epsilon;
    write_matrix_file(path, m, kStatsMagic);
}

StandardizationStats load_standardization(const std::string& path, uint64_t expected_fingerprint) {
    MatrixFile m = read_matrix_file(path, kStatsMagic);
    if (m.dtype != 1 || m.rows != 3) fail(ErrorCode::CorruptFile, "bad stats layout in " + path);
    if (expected_fingerprint != 0 && m.fingerprint != expected_fingerprint) {
        fail(ErrorCode::PipelineMismatch,
             "standardization stats " + path + " were produced under a different pipeline configuration");
    }
    StandardizationStats stats;
    stats.mean.assign(m.f64.begin(), m.f64.begin() + m.cols);
    stats.stddev.assign(m.f64.begin() + m.cols, m.f64.begin() + 2 * m.cols);
    stats.epsilon = m.f64[2 * static_cast<size_t>(m.cols)];
    return stats;
}

}  // namespace openasc
