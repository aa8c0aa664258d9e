#include "openasc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "openasc/binfile.hpp"
#include "openasc/error.hpp"

namespace openasc {

Regime parse_regime(const std::string& text) {
    if (text == "closed") return Regime::Closed;
    if (text == "augmented") return Regime::Augmented;
    fail(ErrorCode::InvalidConfig, "regime must be 'closed' or 'augmented', got '" + text + "'");
}

const char* regime_name(Regime regime) {
    return regime == Regime::Closed ? "closed" : "augmented";
}

std::vector<LayerSpec> classifier_architecture(int output_width) {
    if (output_width < 2) fail(ErrorCode::InvalidParameter, "classifier needs at least 2 outputs");
    std::vector<LayerSpec> specs;
    const int channels[5] = {16, 32, 32, 64, 64};
    const int strides[5] = {1, 2, 1, 2, 1};
    for (int i = 0; i < 5; ++i) {
        specs.push_back(LayerSpec::conv2d(channels[i], 3, strides[i]));
        specs.push_back(LayerSpec::relu());
        specs.push_back(LayerSpec::batch_norm());
    }
    specs.push_back(LayerSpec::global_avg_pool());
    specs.push_back(LayerSpec::dense(output_width));
    specs.push_back(LayerSpec::softmax());
    return specs;
}

Tensor feature_to_tensor(const FeatureMatrix& fm) {
    Tensor t({1, fm.n_mels, fm.n_frames});
    for (int m = 0; m < fm.n_mels; ++m) {
        for (int f = 0; f < fm.n_frames; ++f) {
            t.v[static_cast<size_t>(m) * fm.n_frames + f] = fm.at(f, m);
        }
    }
    return t;
}

Tensor assemble_batch(const std::vector<Tensor>& inputs, const std::vector<int>& indices) {
    if (indices.empty()) fail(ErrorCode::EmptyDataset, "empty batch");
    const Tensor& first = inputs[indices[0]];
    std::vector<int> shape{static_cast<int>(indices.size())};
    shape.insert(shape.end(), first.shape.begin(), first.shape.end());
    Tensor batch(shape);
    size_t stride = first.v.size();
    for (size_t i = 0; i < indices.size(); ++i) {
        const Tensor& x = inputs[indices[i]];
        if (!x.same_shape(first)) fail(ErrorCode::ShapeError, "ragged batch");
        std::copy(x.v.begin(), x.v.end(), batch.v.begin() + i * stride);
    }
    return batch;
}

double cross_entropy(const Tensor& probs, const std::vector<int>& labels, Tensor* grad) {
    if (probs.ndim() != 2 || probs.dim(0) != static_cast<int>(labels.size())) {
        fail(ErrorCode::ShapeError, "cross entropy expects [N,K] probabilities and N labels");
    }
    int n = probs.dim(0), k = probs.dim(1);
    if (grad) *grad = Tensor(probs.shape);
    double loss = 0.0;
    const double floor = 1e-12;
    for (int b = 0; b < n; ++b) {
        int y = labels[b];
        if (y < 0 || y >= k) fail(ErrorCode::InvalidParameter, "label out of range");
        double p = std::max(probs.at2(b, y), floor);
        loss -= std::log(p);
        if (grad) grad->at2(b, y) = -1.0 / (p * n);
    }
    return loss / n;
}

double ClassifierObjective::train_batch(Network& net, const std::vector<int>& indices,
                                        std::mt19937_64&) {
    Tensor batch = assemble_batch(data_.inputs, indices);
    std::vector<int> labels;
    for (int i : indices) labels.push_back(data_.labels[i]);
    Tensor probs = net.forward(batch, nullptr, true);
    Tensor grad;
    double loss = cross_entropy(probs, labels, &grad);
    net.backward(grad);
    return loss;
}

double ClassifierObjective::eval_loss(Network& net, const std::vector<int>& indices) {
    Tensor batch = assemble_batch(data_.inputs, indices);
    std::vector<int> labels;
    for (int i : indices) labels.push_back(data_.labels[i]);
    Tensor probs = net.forward(batch, nullptr, false);
    return cross_entropy(probs, labels, nullptr);
}

Network build_classifier(Regime regime, int known_count, const std::vector<int>& input_shape,
                         uint64_t init_seed) {
    if (known_count < 2) fail(ErrorCode::InvalidParameter, "need at least 2 known classes");
    return Network::build(classifier_architecture(classifier_width(regime, known_count)),
                          input_shape, init_seed);
}

std::vector<LogitRecord> classify(Network& net, const std::vector<Tensor>& inputs,
                                  const std::vector<std::string>& ids,
                                  const std::vector<std::string>& true_labels,
                                  const std::vector<int>& true_indices, int batch_size) {
    if (inputs.size() != ids.size() || inputs.size() != true_labels.size() ||
        inputs.size() != true_indices.size()) {
        fail(ErrorCode::InvalidParameter, "classify inputs and metadata must align");
    }
    // The pre-softmax layer feeds calibration; locate it once.
    int softmax_at = -1;
    for (size_t i = 0; i < net.specs().size(); ++i) {
        if (net.specs()[i].kind == LayerSpec::Kind::Softmax) softmax_at = static_cast<int>(i);
    }
    if (softmax_at <= 0) fail(ErrorCode::InvalidParameter, "classifier has no softmax head");

    std::vector<LogitRecord> records;
    records.reserve(inputs.size());
    std::vector<int> all(inputs.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    for (size_t start = 0; start < all.size(); start += batch_size) {
        size_t stop = std::min(all.size(), start + batch_size);
        std::vector<int> idx(all.begin() + start, all.begin() + stop);
        Tensor batch = assemble_batch(inputs, idx);
        Tensor probs = net.forward(batch, nullptr, false);
        const Tensor& logits = net.layer_output(softmax_at - 1);
        int width = probs.dim(1);
        for (size_t r = 0; r < idx.size(); ++r) {
            LogitRecord rec;
            rec.id = ids[idx[r]];
            rec.true_label = true_labels[idx[r]];
            rec.true_index = true_indices[idx[r]];
            rec.logits.resize(width);
            rec.probabilities.resize(width);
            int best = 0;
            for (int k = 0; k < width; ++k) {
                rec.logits[k] = logits.at2(static_cast<int>(r), k);
                rec.probabilities[k] = probs.at2(static_cast<int>(r), k);
                if (rec.probabilities[k] > rec.probabilities[best]) best = k;
            }
            rec.predicted = best;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void save_logit_records(const std::string& path, const std::vector<LogitRecord>& records) {
    if (records.empty()) fail(ErrorCode::EmptyDataset, "no records to save");
    std::ostringstream os;
    size_t width = records[0].logits.size();
    os << "# id\ttrue_label\ttrue_index\tpredicted\twidth=" << width << "\n";
    char buf[32];
    for (const LogitRecord& r : records) {
        if (r.logits.size() != width || r.probabilities.size() != width) {
            fail(ErrorCode::ShapeError, "ragged logit records");
        }
        os << r.id << '\t' << r.true_label << '\t' << r.true_index << '\t' << r.predicted;
        for (double x : r.logits) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            os << '\t' << buf;
        }
        for (double x : r.probabilities) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            os << '\t' << buf;
        }
        os << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<LogitRecord> load_logit_records(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::CorruptFile, "empty record file " + path);
    size_t eq = line.rfind("width=");
    if (line.empty() || line[0] != '#' || eq == std::string::npos) {
        fail(ErrorCode::CorruptFile, "missing header in " + path);
    }
    size_t width = std::stoul(line.substr(eq + 6));
    std::vector<LogitRecord> records;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() != 4 + 2 * width) {
            fail(ErrorCode::CorruptFile, path + ":" + std::to_string(lineno) + ": bad field count");
        }
        LogitRecord r;
        r.id = fields[0];
        r.true_label = fields[1];
        r.true_index = std::stoi(fields[2]);
        r.predicted = std::stoi(fields[3]);
        for (size_t i = 0; i < width; ++i) r.logits.push_back(std::stod(fields[4 + i]));
        for (size_t i = 0; i < width; ++i) {
            r.probabilities.push_back(std::stod(fields[4 + width + i]));
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) fail(ErrorCode::CorruptFile, "no records in " + path);
    return records;
}

}  // namespace openasc
