#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace openasc {

struct AudioClip {
    std::vector<double> samples;  // mono, in [-1, 1]
    int sample_rate = 0;

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// 16-bit PCM WAV only; multichannel input is downmixed by averaging.
AudioClip load_wav(const std::string& path);
void save_wav(const std::string& path, const AudioClip& clip);

struct ManifestEntry {
    std::string path;   // relative to the dataset root
    std::string label;  // scene label string
};

// Tab-separated "path<TAB>label" lines, one clip per line.
std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// Known-class vocabulary. Index order is the class index order used by every
// model; labels outside the list are unknown.
struct LabelSet {
    std::vector<std::string> known;

    int count() const { return static_cast<int>(known.size()); }
    int index_of(const std::string& label) const;  // -1 when unknown
    bool is_known(const std::string& label) const { return index_of(label) >= 0; }
};

enum class SplitAssignment { Train, Tuning };

struct SplitEntry {
    ManifestEntry entry;
    SplitAssignment assignment = SplitAssignment::Train;
};

// Deterministic stratified split. Per-class tuning counts land on the floor
// or ceiling of fraction * class size, the overall count matches
// round(fraction * total) unless the one-training-example floor bites, and
// every nonempty class keeps at least one training example.
std::vector<SplitEntry> stratified_split(const std::vector<ManifestEntry>& entries,
                                         double tuning_fraction, uint64_t seed);

std::vector<SplitEntry> load_split(const std::string& path);
void save_split(const std::string& path, const std::vector<SplitEntry>& split);

// Synthetic scene recipes. A scene is a sum of components rendered with
// per-clip randomized phases plus mild amplitude and frequency jitter.
struct SceneComponent {
    enum class Kind { Tone, Band, Noise };
    Kind kind = Kind::Tone;
    double frequency_hz = 0.0;  // tone center or band center
    double bandwidth_hz = 0.0;  // band only
    double amplitude = 0.0;
};

struct SceneRecipe {
    std::string name;
    std::vector<SceneComponent> components;
};

// Grammar: comma-separated components, each "tone:FREQ:AMP",
// "band:CENTER:WIDTH:AMP", or "noise:AMP".
SceneRecipe parse_scene_recipe(const std::string& name, const std::string& text);

AudioClip render_scene(const SceneRecipe& recipe, double duration_seconds, int sample_rate,
                       uint64_t seed);

}  // namespace openasc
