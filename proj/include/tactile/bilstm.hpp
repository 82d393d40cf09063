#pragma once

// Bidirectional LSTM sequence classifier written out by hand: batched forward
// pass, backpropagation through time, Adam, finite-difference gradient check,
// evaluation, and a versioned binary model format.
//
// Layout conventions: a sequence is a D x T matrix (channels x time). A batch
// is stored time-major as T matrices of shape D x B. Gate blocks are stacked
// in the order input, forget, cell candidate, output.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tactile/dataset.hpp"
#include "tactile/error.hpp"
#include "tactile/signal.hpp"

namespace tactile {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelDims {
    int input = 6;
    int hidden = 23;
    int classes = 10;
    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct LstmDirectionParams {
    Matrix w_in;   // 4H x D
    Matrix w_rec;  // 4H x H
    Matrix bias;   // 4H x 1
};

/// All trainable tensors. Also used as the container for gradients and for
/// Adam moments, which share its shapes.
struct BiLstmParams {
    LstmDirectionParams fwd;
    LstmDirectionParams bwd;
    Matrix head_w;  // C x 2H
    Matrix head_b;  // C x 1

    static constexpr std::size_t kTensorCount = 8;

    static BiLstmParams zeros(const ModelDims& d) {
        if (d.input <= 0 || d.hidden <= 0 || d.classes <= 0) throw Error("model dimensions must be positive");
        BiLstmParams p;
        for (auto* dir : {&p.fwd, &p.bwd}) {
            dir->w_in = Matrix::Zero(4 * d.hidden, d.input);
            dir->w_rec = Matrix::Zero(4 * d.hidden, d.hidden);
            dir->bias = Matrix::Zero(4 * d.hidden, 1);
        }
        p.head_w = Matrix::Zero(d.classes, 2 * d.hidden);
        p.head_b = Matrix::Zero(d.classes, 1);
        return p;
    }

    /// Uniform(-1/sqrt(H), 1/sqrt(H)) recurrent weights, forget-gate bias 1,
    /// zero head bias.
    template <typename Rng>
    static BiLstmParams init(const ModelDims& d, Rng& rng) {
        BiLstmParams p = zeros(d);
        auto fill = [&](Matrix& m, double k) {
            std::uniform_real_distribution<double> u(-k, k);
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
        };
        const double k = 1.0 / std::sqrt(static_cast<double>(d.hidden));
        for (auto* dir : {&p.fwd, &p.bwd}) {
            fill(dir->w_in, k);
            fill(dir->w_rec, k);
            dir->bias.setZero();
            dir->bias.block(d.hidden, 0, d.hidden, 1).setOnes();
        }
        fill(p.head_w, 1.0 / std::sqrt(2.0 * d.hidden));
        return p;
    }

    ModelDims dims() const {
        return {static_cast<int>(fwd.w_in.cols()), static_cast<int>(fwd.w_rec.cols()),
                static_cast<int>(head_w.rows())};
    }

    std::array<Matrix*, kTensorCount> tensors() {
        return {&fwd.w_in, &fwd.w_rec, &fwd.bias, &bwd.w_in, &bwd.w_rec, &bwd.bias, &head_w, &head_b};
    }
    std::array<const Matrix*, kTensorCount> tensors() const {
        return {&fwd.w_in, &fwd.w_rec, &fwd.bias, &bwd.w_in, &bwd.w_rec, &bwd.bias, &head_w, &head_b};
    }
    static constexpr std::array<const char*, kTensorCount> kTensorNames = {
        "fwd.w_in", "fwd.w_rec", "fwd.bias", "bwd.w_in", "bwd.w_rec", "bwd.bias", "head.w", "head.b"};

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Matrix* t : tensors()) n += static_cast<std::size_t>(t->size());
        return n;
    }

    BiLstmParams zeros_like() const { return zeros(dims()); }

    BiLstmParams& operator*=(double s) {
        for (Matrix* t : tensors()) *t *= s;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Features and normalization

enum class FeatureSet : std::uint32_t { Wrench = 0, WrenchTorque = 1 };

inline int feature_count(FeatureSet f) {
    return f == FeatureSet::Wrench ? static_cast<int>(kWrenchChannels)
                                   : static_cast<int>(kWrenchChannels + kJoints);
}

/// D x T matrix of the selected channels.
inline Matrix sequence_features(const TouchSequence& seq, FeatureSet features) {
    const int d = feature_count(features);
    if (features == FeatureSet::WrenchTorque && seq.torques.size() != seq.frames.size())
        throw Error("torque features requested but sequence has no joint torques");
    Matrix x(d, static_cast<Eigen::Index>(seq.size()));
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        for (std::size_t c = 0; c < kWrenchChannels; ++c) x(static_cast<Eigen::Index>(c), col) = seq.frames[t][c];
        if (features == FeatureSet::WrenchTorque)
            for (std::size_t j = 0; j < kJoints; ++j)
                x(static_cast<Eigen::Index>(kWrenchChannels + j), col) = seq.torques[t][j];
    }
    return x;
}

/// Per-channel z-score statistics.
struct Normalizer {
    Vector mean;
    Vector scale;

    static Normalizer identity(int channels) {
        return {Vector::Zero(channels), Vector::Ones(channels)};
    }

    /// Statistics over every frame of every sequence. Channels with zero
    /// spread keep scale 1.
    static Normalizer fit(const std::vector<Matrix>& seqs) {
        if (seqs.empty()) throw Error("cannot fit normalization on an empty set");
        const Eigen::Index d = seqs.front().rows();
        Vector sum = Vector::Zero(d), sq = Vector::Zero(d);
        double n = 0;
        for (const auto& x : seqs) {
            sum += x.rowwise().sum();
            n += static_cast<double>(x.cols());
        }
        const Vector mean = sum / n;
        for (const auto& x : seqs) sq += (x.colwise() - mean).array().square().matrix().rowwise().sum();
        Vector scale = (sq / n).array().sqrt().matrix();
        for (Eigen::Index i = 0; i < d; ++i)
            if (!(scale(i) > 1e-12)) scale(i) = 1.0;
        return {mean, scale};
    }

    Matrix apply(const Matrix& x) const {
        return ((x.colwise() - mean).array().colwise() / scale.array()).matrix();
    }
};

struct BiLstmClassifier {
    BiLstmParams params;
    Normalizer norm;
    FeatureSet features = FeatureSet::Wrench;

    ModelDims dims() const { return params.dims(); }

    template <typename Rng>
    static BiLstmClassifier create(const ModelDims& d, Rng& rng, FeatureSet f = FeatureSet::Wrench) {
        if (d.input != feature_count(f)) throw Error("input dimension does not match feature set");
        return {BiLstmParams::init(d, rng), Normalizer::identity(d.input), f};
    }

    /// Normalized D x T input for one sequence.
    Matrix prepare(const TouchSequence& seq) const { return norm.apply(sequence_features(seq, features)); }
};

// ---------------------------------------------------------------------------
// Forward pass

/// Activations kept for backpropagation, one direction.
struct DirectionCache {
    std::vector<Matrix> gates;  // per processing step: activated [i; f; g; o], 4H x B
    std::vector<Matrix> cell;   // per processing step: c_t, H x B
    std::vector<Matrix> hidden; // per processing step: h_t, H x B
};

struct ForwardPass {
    DirectionCache fwd;
    DirectionCache bwd;
    Matrix features;  // 2H x B head input
    Matrix probs;     // C x B
};

/// Time-major batch: steps[t] is D x B.
struct Batch {
    std::vector<Matrix> steps;
    std::vector<int> labels;
    /// Per-sample loss weights; empty means all ones.
    std::vector<double> weights;

    std::size_t size() const { return steps.empty() ? 0 : static_cast<std::size_t>(steps.front().cols()); }
    std::size_t length() const { return steps.size(); }
};

/// Packs D x T sequences (all of equal T) into a time-major batch.
inline Batch make_batch(const std::vector<const Matrix*>& seqs, std::vector<int> labels = {}) {
    Batch b;
    b.labels = std::move(labels);
    if (seqs.empty()) return b;
    const Eigen::Index d = seqs.front()->rows();
    const Eigen::Index t_len = seqs.front()->cols();
    const auto n = static_cast<Eigen::Index>(seqs.size());
    b.steps.assign(static_cast<std::size_t>(t_len), Matrix(d, n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const Matrix& x = *seqs[static_cast<std::size_t>(j)];
        if (x.rows() != d || x.cols() != t_len) throw InvalidSequenceError("batch sequences differ in shape");
        for (Eigen::Index t = 0; t < t_len; ++t) b.steps[static_cast<std::size_t>(t)].col(j) = x.col(t);
    }
    return b;
}

inline Batch make_batch(const Matrix& seq, int label = 0) { return make_batch({&seq}, {label}); }

namespace detail {

inline void sigmoid_inplace(Eigen::Block<Matrix> m) {
    m = (1.0 + (-m.array()).exp()).inverse().matrix();
}

/// Runs one direction. `reverse` consumes the steps from last to first;
/// cache entries are stored in processing order.
inline Matrix run_direction(const LstmDirectionParams& p, const std::vector<Matrix>& steps, bool reverse,
                            DirectionCache* cache) {
    const Eigen::Index h = p.w_rec.cols();
    const Eigen::Index n = steps.front().cols();
    const std::size_t len = steps.size();
    Matrix hs = Matrix::Zero(h, n), cs = Matrix::Zero(h, n);
    Matrix z(4 * h, n);
    if (cache) {
        cache->gates.resize(len);
        cache->cell.resize(len);
        cache->hidden.resize(len);
    }
    for (std::size_t s = 0; s < len; ++s) {
        const std::size_t t = reverse ? len - 1 - s : s;
        z.noalias() = p.w_in * steps[t];
        z.noalias() += p.w_rec * hs;
        z.colwise() += p.bias.col(0);
        sigmoid_inplace(z.topRows(2 * h));
        z.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
        sigmoid_inplace(z.bottomRows(h));

        cs = (z.middleRows(h, h).array() * cs.array() + z.topRows(h).array() * z.middleRows(2 * h, h).array())
                 .matrix();
        hs = (z.bottomRows(h).array() * cs.array().tanh()).matrix();
        if (!hs.allFinite() || !cs.allFinite())
            throw NumericalError(std::string("non-finite activation in ") + (reverse ? "backward" : "forward") +
                                     " direction",
                                 t);
        if (cache) {
            cache->gates[s] = z;
            cache->cell[s] = cs;
            cache->hidden[s] = hs;
        }
    }
    return hs;
}

inline Matrix softmax_columns(const Matrix& logits) {
    Matrix p = logits;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double mx = p.col(j).maxCoeff();
        p.col(j) = (p.col(j).array() - mx).exp().matrix();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

}  // namespace detail

/// Concatenated final hidden states [h_fwd; h_bwd] (2H x B) without caching.
inline Matrix head_input(const BiLstmParams& p, const std::vector<Matrix>& steps) {
    if (steps.empty()) throw InvalidSequenceError("empty input sequence");
    const Eigen::Index h = p.fwd.w_rec.cols();
    Matrix f(2 * h, steps.front().cols());
    f.topRows(h) = detail::run_direction(p.fwd, steps, false, nullptr);
    f.bottomRows(h) = detail::run_direction(p.bwd, steps, true, nullptr);
    return f;
}

/// Full forward pass over a batch. With `keep_cache` the activations needed by
/// `backward` are retained.
inline ForwardPass forward_batch(const BiLstmParams& p, const std::vector<Matrix>& steps, bool keep_cache = true) {
    if (steps.empty()) throw InvalidSequenceError("empty input sequence");
    if (steps.front().rows() != p.fwd.w_in.cols())
        throw InvalidSequenceError("input has " + std::to_string(steps.front().rows()) + " channels, model expects " +
                                   std::to_string(p.fwd.w_in.cols()));
    ForwardPass out;
    const Eigen::Index h = p.fwd.w_rec.cols();
    out.features.resize(2 * h, steps.front().cols());
    out.features.topRows(h) = detail::run_direction(p.fwd, steps, false, keep_cache ? &out.fwd : nullptr);
    out.features.bottomRows(h) = detail::run_direction(p.bwd, steps, true, keep_cache ? &out.bwd : nullptr);
    Matrix logits = p.head_w * out.features;
    logits.colwise() += p.head_b.col(0);
    out.probs = detail::softmax_columns(logits);
    if (!out.probs.allFinite()) throw NumericalError("non-finite class probabilities", steps.size() - 1);
    return out;
}

struct Prediction {
    std::vector<double> probabilities;
    int label = 0;
    double confidence = 0.0;

    /// Argmax with ties resolved toward the lowest class index.
    static Prediction from(std::vector<double> probs) {
        Prediction p;
        p.probabilities = std::move(probs);
        for (std::size_t i = 1; i < p.probabilities.size(); ++i)
            if (p.probabilities[i] > p.probabilities[static_cast<std::size_t>(p.label)]) p.label = static_cast<int>(i);
        p.confidence = p.probabilities.empty() ? 0.0 : p.probabilities[static_cast<std::size_t>(p.label)];
        return p;
    }

    static Prediction uniform(int classes = kNumClasses) {
        return from(std::vector<double>(static_cast<std::size_t>(classes), 1.0 / classes));
    }
};

inline std::vector<Prediction> predictions_from(const Matrix& probs) {
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(probs.cols()));
    for (Eigen::Index j = 0; j < probs.cols(); ++j)
        out.push_back(Prediction::from(std::vector<double>(probs.col(j).data(), probs.col(j).data() + probs.rows())));
    return out;
}

/// Classifies one already-prepared D x T input.
inline Prediction forward(const BiLstmParams& p, const Matrix& x) {
    return predictions_from(forward_batch(p, make_batch(x).steps, false).probs).front();
}

/// Classifies a raw sequence: feature selection, normalization, forward pass.
inline Prediction forward(const BiLstmClassifier& model, const TouchSequence& seq) {
    return forward(model.params, model.prepare(seq));
}

inline constexpr double kProbabilityFloor = 1e-12;

/// Cross-entropy -log p[label] with p clamped at 1e-12.
inline double loss(const Prediction& pred, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= pred.probabilities.size())
        throw Error("label " + std::to_string(label) + " outside the class range");
    return -std::log(std::max(pred.probabilities[static_cast<std::size_t>(label)], kProbabilityFloor));
}

/// Weighted mean cross-entropy of a forward pass.
inline double batch_loss(const ForwardPass& fp, const Batch& b) {
    const auto n = static_cast<std::size_t>(fp.probs.cols());
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const int y = b.labels.at(j);
        if (y < 0 || y >= fp.probs.rows()) throw Error("label " + std::to_string(y) + " outside the class range");
        const double w = b.weights.empty() ? 1.0 : b.weights[j];
        total += w * -std::log(std::max(fp.probs(y, static_cast<Eigen::Index>(j)), kProbabilityFloor));
    }
    return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Backward pass

namespace detail {

/// BPTT through one direction given dL/dh at its final step. Accumulates into
/// `g` and returns nothing else; input gradients are not needed.
inline void backprop_direction(const LstmDirectionParams& p, const DirectionCache& cache,
                               const std::vector<Matrix>& steps, bool reverse, const Matrix& dh_final,
                               LstmDirectionParams& g) {
    const Eigen::Index h = p.w_rec.cols();
    const Eigen::Index n = dh_final.cols();
    const std::size_t len = steps.size();
    Matrix dh = dh_final;
    Matrix dc = Matrix::Zero(h, n);
    Matrix dz(4 * h, n);
    const Matrix zeros = Matrix::Zero(h, n);

    for (std::size_t s = len; s-- > 0;) {
        const std::size_t t = reverse ? len - 1 - s : s;
        const Matrix& gates = cache.gates[s];
        const auto i = gates.topRows(h).array();
        const auto f = gates.middleRows(h, h).array();
        const auto gg = gates.middleRows(2 * h, h).array();
        const auto o = gates.bottomRows(h).array();
        const Matrix& c_prev = s > 0 ? cache.cell[s - 1] : zeros;
        const Matrix& h_prev = s > 0 ? cache.hidden[s - 1] : zeros;
        const Eigen::ArrayXXd tc = cache.cell[s].array().tanh();

        dc.array() += dh.array() * o * (1.0 - tc.square());
        dz.topRows(h) = (dc.array() * gg * i * (1.0 - i)).matrix();
        dz.middleRows(h, h) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
        dz.middleRows(2 * h, h) = (dc.array() * i * (1.0 - gg.square())).matrix();
        dz.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();

        g.w_in.noalias() += dz * steps[t].transpose();
        if (s > 0) g.w_rec.noalias() += dz * h_prev.transpose();
        g.bias.col(0) += dz.rowwise().sum();

        dh.noalias() = p.w_rec.transpose() * dz;
        dc.array() *= f;
    }
}

}  // namespace detail

/// Exact gradient of the weighted mean batch loss with respect to every
/// parameter, given the cached forward pass.
inline BiLstmParams backward(const BiLstmParams& p, const ForwardPass& fp, const Batch& b) {
    const Eigen::Index n = fp.probs.cols();
    const Eigen::Index h = p.fwd.w_rec.cols();
    if (fp.fwd.gates.size() != b.length() || fp.bwd.gates.size() != b.length())
        throw Error("backward needs a cached forward pass over the same batch");

    Matrix dlogits = fp.probs;
    for (Eigen::Index j = 0; j < n; ++j) {
        const int y = b.labels.at(static_cast<std::size_t>(j));
        const double w = b.weights.empty() ? 1.0 : b.weights[static_cast<std::size_t>(j)];
        if (fp.probs(y, j) < kProbabilityFloor) {
            dlogits.col(j).setZero();  // clamped region: the loss is flat here
            continue;
        }
        dlogits(y, j) -= 1.0;
        dlogits.col(j) *= w / static_cast<double>(n);
    }

    BiLstmParams g = p.zeros_like();
    g.head_w.noalias() = dlogits * fp.features.transpose();
    g.head_b.col(0) = dlogits.rowwise().sum();
    const Matrix dfeat = p.head_w.transpose() * dlogits;
    detail::backprop_direction(p.fwd, fp.fwd, b.steps, false, dfeat.topRows(h), g.fwd);
    detail::backprop_direction(p.bwd, fp.bwd, b.steps, true, dfeat.bottomRows(h), g.bwd);
    return g;
}

/// Loss and gradient in one call.
inline std::pair<double, BiLstmParams> loss_and_gradient(const BiLstmParams& p, const Batch& b) {
    const ForwardPass fp = forward_batch(p, b.steps, true);
    return {batch_loss(fp, b), backward(p, fp, b)};
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
    double learning_rate = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    BiLstmParams m;
    BiLstmParams v;
    std::uint64_t step = 0;

    static AdamState for_params(const BiLstmParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// One bias-corrected Adam update.
inline void adam_step(BiLstmParams& params, const BiLstmParams& grads, AdamState& st, const AdamConfig& cfg) {
    ++st.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = st.m.tensors();
    auto v = st.v.tensors();
    for (std::size_t k = 0; k < BiLstmParams::kTensorCount; ++k) {
        m[k]->array() = cfg.beta1 * m[k]->array() + (1.0 - cfg.beta1) * g[k]->array();
        v[k]->array() = cfg.beta2 * v[k]->array() + (1.0 - cfg.beta2) * g[k]->array().square();
        p[k]->array() -= cfg.learning_rate * (m[k]->array() / c1) / ((v[k]->array() / c2).sqrt() + cfg.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Evaluation

struct ConfusionMatrix {
    int classes = kNumClasses;
    std::vector<std::size_t> counts;  // row-major, rows = true class

    explicit ConfusionMatrix(int c = kNumClasses)
        : classes(c), counts(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0) {}

    std::size_t& at(int truth, int predicted) {
        return counts[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes) +
                      static_cast<std::size_t>(predicted)];
    }
    std::size_t at(int truth, int predicted) const { return const_cast<ConfusionMatrix*>(this)->at(truth, predicted); }

    std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
    std::size_t trace() const {
        std::size_t s = 0;
        for (int i = 0; i < classes; ++i) s += at(i, i);
        return s;
    }
    std::size_t row_sum(int truth) const {
        std::size_t s = 0;
        for (int j = 0; j < classes; ++j) s += at(truth, j);
        return s;
    }
    double accuracy() const { return total() ? static_cast<double>(trace()) / static_cast<double>(total()) : 0.0; }

    /// Header row "true\\pred,0,..,C-1" then one row per true class.
    std::string to_csv() const {
        std::ostringstream os;
        os << "true\\pred";
        for (int j = 0; j < classes; ++j) os << ',' << j;
        os << '\n';
        for (int i = 0; i < classes; ++i) {
            os << i;
            for (int j = 0; j < classes; ++j) os << ',' << at(i, j);
            os << '\n';
        }
        return os.str();
    }
};

struct EvalResult {
    double accuracy = 0;
    ConfusionMatrix confusion;
    std::vector<Prediction> predictions;
};

/// Classifies prepared inputs in chunks.
inline std::vector<Prediction> predict_prepared(const BiLstmParams& p, const std::vector<Matrix>& inputs,
                                                std::size_t chunk = 128) {
    std::vector<Prediction> out;
    out.reserve(inputs.size());
    for (std::size_t start = 0; start < inputs.size(); start += chunk) {
        std::vector<const Matrix*> part;
        for (std::size_t i = start; i < std::min(inputs.size(), start + chunk); ++i) part.push_back(&inputs[i]);
        auto preds = predictions_from(forward_batch(p, make_batch(part).steps, false).probs);
        out.insert(out.end(), std::make_move_iterator(preds.begin()), std::make_move_iterator(preds.end()));
    }
    return out;
}

inline std::vector<Prediction> predict(const BiLstmClassifier& model, const Dataset& ds) {
    std::vector<Matrix> inputs;
    inputs.reserve(ds.size());
    for (const auto& s : ds) inputs.push_back(model.prepare(s));
    return predict_prepared(model.params, inputs);
}

inline EvalResult evaluate(const BiLstmClassifier& model, const Dataset& ds) {
    if (ds.empty()) throw Error("cannot evaluate on an empty dataset");
    EvalResult r{0.0, ConfusionMatrix(model.dims().classes), predict(model, ds)};
    for (std::size_t i = 0; i < ds.size(); ++i) ++r.confusion.at(*ds[i].label, r.predictions[i].label);
    r.accuracy = r.confusion.accuracy();
    return r;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t epochs = 500;
    AdamConfig adam{};
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool shuffle = true;
    int hidden = 23;
    FeatureSet features = FeatureSet::Wrench;
    /// Validation accuracy is computed every this many epochs (and on the
    /// last); other history rows carry NaN.
    std::size_t validate_every = 1;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0;
    double train_accuracy = 0;
    double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    BiLstmClassifier model;
    std::vector<EpochStats> history;
};

/// "epoch,loss,train_acc,val_acc" rows.
inline std::string history_csv(const std::vector<EpochStats>& h) {
    std::ostringstream os;
    os.precision(10);
    os << "epoch,loss,train_acc,val_acc\n";
    for (const auto& e : h) {
        os << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',';
        if (!std::isnan(e.val_accuracy)) os << e.val_accuracy;
        os << '\n';
    }
    return os.str();
}

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on the mean cross-entropy. Normalization statistics come
/// from `train_set` only. Deterministic for a given seed.
inline TrainResult train(const Dataset& train_set, const Dataset* val_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
    if (train_set.empty()) throw Error("cannot train on an empty dataset");
    if (cfg.epochs == 0) throw Error("epochs must be >= 1");
    if (!(cfg.adam.learning_rate > 0)) throw Error("learning rate must be positive");
    if (cfg.batch_size == 0) throw Error("batch size must be >= 1");

    std::mt19937_64 rng(cfg.seed);
    const ModelDims dims{feature_count(cfg.features), cfg.hidden, kNumClasses};
    BiLstmClassifier model = BiLstmClassifier::create(dims, rng, cfg.features);

    std::vector<Matrix> raw;
    raw.reserve(train_set.size());
    for (const auto& s : train_set) raw.push_back(sequence_features(s, cfg.features));
    model.norm = Normalizer::fit(raw);
    std::vector<Matrix> inputs;
    inputs.reserve(raw.size());
    for (const auto& x : raw) inputs.push_back(model.norm.apply(x));
    raw.clear();

    std::vector<Matrix> val_inputs;
    if (val_set && !val_set->empty())
        for (const auto& s : *val_set) val_inputs.push_back(model.prepare(s));

    AdamState opt = AdamState::for_params(model.params);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<const Matrix*> part;
            std::vector<int> labels;
            for (std::size_t k = start; k < stop; ++k) {
                part.push_back(&inputs[order[k]]);
                labels.push_back(*train_set[order[k]].label);
            }
            const Batch b = make_batch(part, labels);
            const ForwardPass fp = forward_batch(model.params, b.steps, true);
            loss_sum += batch_loss(fp, b) * static_cast<double>(b.size());
            for (std::size_t j = 0; j < b.size(); ++j) {
                Eigen::Index arg;
                fp.probs.col(static_cast<Eigen::Index>(j)).maxCoeff(&arg);
                if (static_cast<int>(arg) == labels[j]) ++correct;
            }
            adam_step(model.params, backward(model.params, fp, b), opt, cfg.adam);
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss = loss_sum / static_cast<double>(order.size());
        st.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        const bool validate = cfg.validate_every > 0 && (epoch % cfg.validate_every == 0 || epoch == cfg.epochs);
        if (!val_inputs.empty() && validate) {
            const auto preds = predict_prepared(model.params, val_inputs);
            std::size_t ok = 0;
            for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i].label == *(*val_set)[i].label;
            st.val_accuracy = static_cast<double>(ok) / static_cast<double>(preds.size());
        }
        result.history.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckResult {
    double max_relative_error = 0;
    std::size_t coordinates = 0;
    /// (tensor index, flat element index) of every checked coordinate.
    std::vector<std::pair<std::size_t, Eigen::Index>> sampled;
};

/// Relative error |a - n| / max(|a| + |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
    return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

/// Compares analytic gradients with central differences on a random subset of
/// coordinates. Every tensor contributes at least `coords / 8` coordinates.
inline GradientCheckResult gradient_check(const BiLstmParams& params, const Batch& b, double step = 1e-5,
                                          std::size_t coords = 240, std::uint64_t seed = 0) {
    const BiLstmParams analytic = loss_and_gradient(params, b).second;
    BiLstmParams probe = params;
    auto probe_t = probe.tensors();
    const auto grad_t = analytic.tensors();

    std::mt19937_64 rng(seed);
    GradientCheckResult r;
    const std::size_t per_tensor = (coords + BiLstmParams::kTensorCount - 1) / BiLstmParams::kTensorCount;
    for (std::size_t k = 0; k < BiLstmParams::kTensorCount; ++k) {
        std::uniform_int_distribution<Eigen::Index> pick(0, probe_t[k]->size() - 1);
        for (std::size_t c = 0; c < per_tensor; ++c) {
            const Eigen::Index idx = pick(rng);
            double& x = probe_t[k]->data()[idx];
            const double saved = x;
            x = saved + step;
            const double up = batch_loss(forward_batch(probe, b.steps, false), b);
            x = saved - step;
            const double down = batch_loss(forward_batch(probe, b.steps, false), b);
            x = saved;
            const double numeric = (up - down) / (2 * step);
            r.max_relative_error = std::max(r.max_relative_error, relative_error(grad_t[k]->data()[idx], numeric));
            r.sampled.emplace_back(k, idx);
        }
    }
    r.coordinates = r.sampled.size();
    return r;
}

// ---------------------------------------------------------------------------
// Persistence
//
// Little-endian throughout:
//   magic "TCTLBLSM" | u32 version | u32 input | u32 hidden | u32 classes
//   | u32 feature set | f64[input] mean | f64[input] scale
//   | 8 tensors, each u32 rows, u32 cols, f64[rows*cols] column-major

inline constexpr std::array<char, 8> kModelMagic = {'T', 'C', 'T', 'L', 'B', 'L', 'S', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double d) {
        const auto v = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view b) : b_(b) {}
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() {
        need(8, "f64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    std::string_view raw(std::size_t n) {
        need(n, "header");
        auto s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (pos_ + n > b_.size())
            throw FormatError(std::string("model file truncated while reading ") + what + " at byte " +
                              std::to_string(pos_));
    }
    std::string_view b_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const BiLstmClassifier& m) {
    detail::ByteWriter w;
    w.raw(kModelMagic.data(), kModelMagic.size());
    w.u32(kModelVersion);
    const ModelDims d = m.dims();
    w.u32(static_cast<std::uint32_t>(d.input));
    w.u32(static_cast<std::uint32_t>(d.hidden));
    w.u32(static_cast<std::uint32_t>(d.classes));
    w.u32(static_cast<std::uint32_t>(m.features));
    for (Eigen::Index i = 0; i < d.input; ++i) w.f64(m.norm.mean(i));
    for (Eigen::Index i = 0; i < d.input; ++i) w.f64(m.norm.scale(i));
    for (const Matrix* t : m.params.tensors()) {
        w.u32(static_cast<std::uint32_t>(t->rows()));
        w.u32(static_cast<std::uint32_t>(t->cols()));
        for (Eigen::Index i = 0; i < t->size(); ++i) w.f64(t->data()[i]);
    }
    return w.bytes();
}

inline BiLstmClassifier deserialize_model(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < kModelMagic.size() ||
        std::memcmp(r.raw(kModelMagic.size()).data(), kModelMagic.data(), kModelMagic.size()) != 0)
        throw FormatError("not a model file (bad magic bytes)");
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelVersion) + ")");
    ModelDims d;
    d.input = static_cast<int>(r.u32());
    d.hidden = static_cast<int>(r.u32());
    d.classes = static_cast<int>(r.u32());
    const std::uint32_t fs = r.u32();
    if (fs > 1) throw FormatError("unknown feature set " + std::to_string(fs));
    if (d.input <= 0 || d.hidden <= 0 || d.classes <= 0 || d.input > 1024 || d.hidden > 65536 || d.classes > 65536)
        throw FormatError("implausible model dimensions");

    BiLstmClassifier m;
    m.features = static_cast<FeatureSet>(fs);
    if (feature_count(m.features) != d.input) throw FormatError("feature set does not match input dimension");
    m.params = BiLstmParams::zeros(d);
    m.norm = Normalizer::identity(d.input);
    for (Eigen::Index i = 0; i < d.input; ++i) m.norm.mean(i) = r.f64();
    for (Eigen::Index i = 0; i < d.input; ++i) m.norm.scale(i) = r.f64();
    auto tensors = m.params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const std::uint32_t rows = r.u32(), cols = r.u32();
        if (rows != tensors[k]->rows() || cols != tensors[k]->cols())
            throw FormatError(std::string("tensor ") + BiLstmParams::kTensorNames[k] + " has unexpected shape");
        for (Eigen::Index i = 0; i < tensors[k]->size(); ++i) tensors[k]->data()[i] = r.f64();
    }
    if (!r.done()) throw FormatError("trailing bytes after model data");
    return m;
}

inline void save_model(const BiLstmClassifier& m, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model to " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

inline BiLstmClassifier load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace tactile
