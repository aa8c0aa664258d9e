#include "openasc/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"
#include "openasc/tensor.hpp"

namespace openasc {

namespace {

struct RiffChunk {
    char id[4];
    uint32_t size;
};

bool read_chunk_header(std::istream& is, RiffChunk& chunk) {
    is.read(chunk.id, 4);
    if (!is) return false;
    chunk.size = read_u32(is, "chunk size");
    return true;
}

}  // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);

    char riff[4];
    is.read(riff, 4);
    if (!is || std::memcmp(riff, "RIFF", 4) != 0) {
        fail(ErrorCode::UnsupportedFormat, "not a RIFF file: " + path);
    }
    read_u32(is, "riff size");
    char wave[4];
    is.read(wave, 4);
    if (!is || std::memcmp(wave, "WAVE", 4) != 0) {
        fail(ErrorCode::UnsupportedFormat, "not a WAVE file: " + path);
    }

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::vector<int16_t> raw;
    bool have_data = false;

    RiffChunk chunk;
    while (read_chunk_header(is, chunk)) {
        if (std::memcmp(chunk.id, "fmt ", 4) == 0) {
            if (chunk.size < 16) fail(ErrorCode::CorruptFile, "short fmt chunk in " + path);
            char fmtbuf[16];
            read_bytes(is, fmtbuf, 16, path + " fmt");
            std::memcpy(&format, fmtbuf + 0, 2);
            std::memcpy(&channels, fmtbuf + 2, 2);
            std::memcpy(&sample_rate, fmtbuf + 4, 4);
            std::memcpy(&bits, fmtbuf + 14, 2);
            if (chunk.size > 16) is.seekg(chunk.size - 16 + (chunk.size % 2), std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(chunk.id, "data", 4) == 0) {
            if (!have_fmt) fail(ErrorCode::CorruptFile, "data before fmt in " + path);
            if (format != 1 || bits != 16) {
                fail(ErrorCode::UnsupportedFormat,
                     "only 16-bit PCM is supported, got format " + std::to_string(format) + "/" +
                         std::to_string(bits) + " bits in " + path);
            }
            if (channels == 0) fail(ErrorCode::CorruptFile, "zero channels in " + path);
            size_t n = chunk.size / 2;
            raw.resize(n);
            if (n) read_bytes(is, raw.data(), n * 2, path + " samples");
            if (chunk.size % 2) is.seekg(1, std::ios::cur);
            have_data = true;
        } else {
            // Skip unknown chunks (padded to even length per RIFF).
            is.seekg(chunk.size + (chunk.size % 2), std::ios::cur);
            if (!is) fail(ErrorCode::CorruptFile, "truncated chunk in " + path);
        }
    }
    if (!have_fmt || !have_data) fail(ErrorCode::CorruptFile, "missing fmt or data chunk in " + path);
    if (raw.size() % channels != 0) fail(ErrorCode::CorruptFile, "partial frame in " + path);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    size_t frames = raw.size() / channels;
    clip.samples.resize(frames);
    for (size_t t = 0; t < frames; ++t) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) acc += raw[t * channels + c];
        clip.samples[t] = acc / (channels * 32767.0);
    }
    return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
    if (clip.sample_rate <= 0) fail(ErrorCode::InvalidParameter, "sample rate must be positive");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::IoError, "cannot open for writing: " + path);

    uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
    os.write("RIFF", 4);
    write_u32(os, 36 + data_size);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    write_u32(os, 16);
    uint16_t format = 1, channels = 1, bits = 16;
    write_bytes(os, &format, 2);
    write_bytes(os, &channels, 2);
    write_u32(os, static_cast<uint32_t>(clip.sample_rate));
    write_u32(os, static_cast<uint32_t>(clip.sample_rate * 2));  // byte rate
    uint16_t block_align = 2;
    write_bytes(os, &block_align, 2);
    write_bytes(os, &bits, 2);
    os.write("data", 4);
    write_u32(os, data_size);
    for (double x : clip.samples) {
        double clamped = std::min(1.0, std::max(-1.0, x));
        int16_t q = static_cast<int16_t>(std::lrint(clamped * 32767.0));
        write_bytes(os, &q, 2);
    }
    if (!os) fail(ErrorCode::IoError, "write failed: " + path);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
            line.find('\t', tab + 1) != std::string::npos) {
            fail(ErrorCode::CorruptFile,
                 path + ":" + std::to_string(lineno) + ": expected path<TAB>label");
        }
        entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return entries;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ostringstream os;
    for (const auto& e : entries) os << e.path << '\t' << e.label << '\n';
    write_text_file(path, os.str());
}

int LabelSet::index_of(const std::string& label) const {
    for (size_t i = 0; i < known.size(); ++i) {
        if (known[i] == label) return static_cast<int>(i);
    }
    return -1;
}

std::vector<SplitEntry> stratified_split(const std::vector<ManifestEntry>& entries,
                                         double tuning_fraction, uint64_t seed) {
    if (tuning_fraction < 0.0 || tuning_fraction >= 1.0) {
        fail(ErrorCode::InvalidParameter,
             "tuning fraction must be in [0, 1), got " + std::to_string(tuning_fraction));
    }
    if (entries.empty()) fail(ErrorCode::EmptyDataset, "cannot split an empty manifest");

    std::map<std::string, std::vector<size_t>> by_class;
    for (size_t i = 0; i < entries.size(); ++i) by_class[entries[i].label].push_back(i);

    // Largest-remainder allocation keeps per-class counts on the floor or
    // ceiling of the exact quota while matching the global total.
    long target = std::lround(tuning_fraction * static_cast<double>(entries.size()));
    struct Quota {
        std::string label;
        long base;
        double remainder;
        long cap;
    };
    std::vector<Quota> quotas;
    long base_total = 0;
    for (const auto& [label, idx] : by_class) {
        double exact = tuning_fraction * static_cast<double>(idx.size());
        long base = static_cast<long>(std::floor(exact));
        quotas.push_back({label, base, exact - base, static_cast<long>(idx.size()) - 1});
        base_total += base;
    }
    std::sort(quotas.begin(), quotas.end(), [](const Quota& a, const Quota& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return a.label < b.label;
    });
    long extra = target - base_total;
    std::map<std::string, long> take;
    for (auto& q : quotas) take[q.label] = std::min(q.base, q.cap);
    for (auto& q : quotas) {
        if (extra <= 0) break;
        long now = take[q.label];
        if (q.base == now && now < q.cap) {
            take[q.label] = now + 1;
            --extra;
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<SplitEntry> out(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) out[i].entry = entries[i];
    // Classes are visited in sorted order so the draw sequence is stable.
    for (auto& [label, idx] : by_class) {
        std::vector<size_t> order = idx;
        std::shuffle(order.begin(), order.end(), rng);
        long k = take[label];
        for (long j = 0; j < k; ++j) out[order[j]].assignment = SplitAssignment::Tuning;
    }
    return out;
}

std::vector<SplitEntry> load_split(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    std::vector<SplitEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string p, label, a;
        if (!std::getline(ss, p, '\t') || !std::getline(ss, label, '\t') || !std::getline(ss, a)) {
            fail(ErrorCode::CorruptFile,
                 path + ":" + std::to_string(lineno) + ": expected path<TAB>label<TAB>assignment");
        }
        SplitEntry e;
        e.entry = {p, label};
        if (a == "train") {
            e.assignment = SplitAssignment::Train;
        } else if (a == "tuning") {
            e.assignment = SplitAssignment::Tuning;
        } else {
            fail(ErrorCode::CorruptFile, path + ":" + std::to_string(lineno) + ": bad assignment " + a);
        }
        out.push_back(e);
    }
    return out;
}

void save_split(const std::string& path, const std::vector<SplitEntry>& split) {
    std::ostringstream os;
    for (const auto& e : split) {
        os << e.entry.path << '\t' << e.entry.label << '\t'
           << (e.assignment == SplitAssignment::Train ? "train" : "tuning") << '\n';
    }
    write_text_file(path, os.str());
}

namespace {

double parse_num(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidConfig, "bad number '" + s + "' in " + where);
    }
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

SceneRecipe parse_scene_recipe(const std::string& name, const std::string& text) {
    SceneRecipe recipe;
    recipe.name = name;
    for (std::string part : split_on(text, ',')) {
        size_t a = part.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        part = part.substr(a, part.find_last_not_of(" \t") - a + 1);
        std::vector<std::string> f = split_on(part, ':');
        SceneComponent c;
        const std::string where = "recipe for " + name;
        if (f[0] == "tone" && f.size() == 3) {
            c.kind = SceneComponent::Kind::Tone;
            c.frequency_hz = parse_num(f[1], where);
            c.amplitude = parse_num(f[2], where);
        } else if (f[0] == "band" && f.size() == 4) {
            c.kind = SceneComponent::Kind::Band;
            c.frequency_hz = parse_num(f[1], where);
            c.bandwidth_hz = parse_num(f[2], where);
            c.amplitude = parse_num(f[3], where);
        } else if (f[0] == "noise" && f.size() == 2) {
            c.kind = SceneComponent::Kind::Noise;
            c.amplitude = parse_num(f[1], where);
        } else {
            fail(ErrorCode::InvalidConfig, "bad component '" + part + "' in " + where);
        }
        recipe.components.push_back(c);
    }
    if (recipe.components.empty()) {
        fail(ErrorCode::InvalidConfig, "recipe for " + name + " has no components");
    }
    return recipe;
}

AudioClip render_scene(const SceneRecipe& recipe, double duration_seconds, int sample_rate,
                       uint64_t seed) {
    if (duration_seconds <= 0.0 || sample_rate <= 0) {
        fail(ErrorCode::InvalidParameter, "duration and sample rate must be positive");
    }
    size_t n = static_cast<size_t>(std::lround(duration_seconds * sample_rate));
    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.assign(n, 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> amp_jitter(0.85, 1.15);
    std::uniform_real_distribution<double> freq_jitter(0.99, 1.01);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (const SceneComponent& c : recipe.components) {
        double a = c.amplitude * amp_jitter(rng);
        if (c.kind == SceneComponent::Kind::Tone) {
            double f = c.frequency_hz * freq_jitter(rng);
            double p = phase(rng);
            double w = 2.0 * std::numbers::pi * f / sample_rate;
            for (size_t t = 0; t < n; ++t) clip.samples[t] += a * std::sin(w * t + p);
        } else if (c.kind == SceneComponent::Kind::Band) {
            // Sum of random sinusoids across the band; flat in-band spectrum,
            // near-Gaussian amplitude by the central limit theorem.
            const int partials = 48;
            double lo = c.frequency_hz - c.bandwidth_hz / 2.0;
            std::uniform_real_distribution<double> in_band(0.0, 1.0);
            double scale = a * std::sqrt(2.0 / partials);
            for (int m = 0; m < partials; ++m) {
                double f = lo + in_band(rng) * c.bandwidth_hz;
                double p = phase(rng);
                double w = 2.0 * std::numbers::pi * f / sample_rate;
                for (size_t t = 0; t < n; ++t) clip.samples[t] += scale * std::sin(w * t + p);
            }
        } else {
            for (size_t t = 0; t < n; ++t) clip.samples[t] += a * gauss(rng);
        }
    }
    return clip;
}

}  // namespace openasc
