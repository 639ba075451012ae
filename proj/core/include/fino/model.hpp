#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fino/layers.hpp"

namespace fino {

enum class TaskMode { detection, standalone_classification, cascaded_classification };

inline std::string to_string(TaskMode t) {
    switch (t) {
        case TaskMode::detection: return "detection";
        case TaskMode::standalone_classification: return "standalone";
        case TaskMode::cascaded_classification: return "cascaded";
    }
    return "?";
}

inline TaskMode task_from_string(const std::string& s) {
    if (s == "detection") return TaskMode::detection;
    if (s == "standalone") return TaskMode::standalone_classification;
    if (s == "cascaded") return TaskMode::cascaded_classification;
    throw ConfigError("unknown task: " + s);
}

struct ModelConfig {
    bool use_rgb = true;
    bool use_depth = true;
    bool use_audio = true;
    TaskMode task = TaskMode::detection;
    std::array<int, 3> channel_plan = {32, 64, 128};
    int fusion_hidden = 256;
    int audio_filters = 64;
    int audio_kernel = 32;
    float dropout_rate = 0.4f;
    int image_size = 128;
    int t_a = 320;
    int n_mfcc = 20;
    uint64_t seed = 0;

    int num_classes() const {
        switch (task) {
            case TaskMode::detection: return 2;
            case TaskMode::standalone_classification: return 6;
            case TaskMode::cascaded_classification: return 5;
        }
        return 0;
    }
    bool use_vision() const { return use_rgb || use_depth; }
    int vision_channels() const { return (use_rgb ? 3 : 0) + (use_depth ? 1 : 0); }
    std::string modality_string() const {
        std::string s;
        if (use_rgb) s += "rgb";
        if (use_depth) s += s.empty() ? "d" : ",d";
        if (use_audio) s += s.empty() ? "a" : ",a";
        return s;
    }
    void validate() const {
        if (!use_rgb && !use_depth && !use_audio)
            throw ConfigError("modality set is empty");
        if (image_size % 8 != 0)
            throw ConfigError("image_size must be divisible by 8");
    }
};

// One visual block: conv -> bn -> relu (-> dropout), conv -> bn -> relu ->
// dropout, 2x2 maxpool, convLSTM over the 8 steps (-> dropout). The two
// placement exceptions (no dropout after block-1 conv1 and after block-3
// convLSTM) are wired by flags.
template <class T>
struct VisualBlock {
    Conv2d<T> conv1, conv2;
    BatchNorm<T> bn1, bn2;
    ReLU<T> relu1, relu2;
    MaxPool2x2<T> pool;
    ConvLstm<T> convlstm;
    Dropout<T> drop1, drop2, drop_lstm;
    bool dropout_after_conv1 = true;
    bool dropout_after_convlstm = true;
    int time_steps = 8;

    void init(int in_c, int out_c, float dropout_rate, Rng& rng) {
        conv1.init(in_c, out_c, rng);
        bn1.init(out_c);
        conv2.init(out_c, out_c, rng);
        bn2.init(out_c);
        convlstm.init(out_c, out_c, rng);
        drop1.rate = T(dropout_rate);
        drop2.rate = T(dropout_rate);
        drop_lstm.rate = T(dropout_rate);
    }

    // x: [N, t, H, W, in_c] -> [N, t, H/2, W/2, out_c]
    TensorT<T> forward(const TensorT<T>& x, bool train, Rng& rng) {
        const int n = x.dim(0), t = x.dim(1), h = x.dim(2), w = x.dim(3), c = x.dim(4);
        TensorT<T> flat = x.reshaped({n * t, h, w, c});
        TensorT<T> y = relu1.forward(bn1.forward(conv1.forward(flat), train));
        if (dropout_after_conv1) y = drop1.forward(y, train, rng);
        y = relu2.forward(bn2.forward(conv2.forward(y), train));
        y = drop2.forward(y, train, rng);
        y = pool.forward(y);
        TensorT<T> seq = y.reshaped({n, t, y.dim(1), y.dim(2), y.dim(3)});
        TensorT<T> h_seq = convlstm.forward(seq);
        if (dropout_after_convlstm) h_seq = drop_lstm.forward(h_seq, train, rng);
        return h_seq;
    }

    TensorT<T> backward(const TensorT<T>& d_out, bool train) {
        TensorT<T> d = d_out;
        if (dropout_after_convlstm) d = drop_lstm.backward(d, train);
        TensorT<T> d_seq = convlstm.backward(d);
        const int n = d_seq.dim(0), t = d_seq.dim(1);
        TensorT<T> d_flat =
            d_seq.reshaped({n * t, d_seq.dim(2), d_seq.dim(3), d_seq.dim(4)});
        TensorT<T> dy = pool.backward(d_flat);
        dy = drop2.backward(dy, train);
        dy = conv2.backward(bn2.backward(relu2.backward(dy)));
        if (dropout_after_conv1) dy = drop1.backward(dy, train);
        dy = conv1.backward(bn1.backward(relu1.backward(dy)));
        const int hh = dy.dim(1), ww = dy.dim(2), cc = dy.dim(3);
        return dy.reshaped({n, t, hh, ww, cc});
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        conv1.params(prefix + ".conv1", out);
        bn1.params(prefix + ".bn1", out);
        conv2.params(prefix + ".conv2", out);
        bn2.params(prefix + ".bn2", out);
        convlstm.params(prefix + ".convlstm", out);
    }

    void stats(const std::string& prefix, ParamList<T>& out) {
        bn1.stats(prefix + ".bn1", out);
        bn2.stats(prefix + ".bn2", out);
    }
};

template <class T>
struct VisualBranch {
    std::array<VisualBlock<T>, 3> blocks;
    GlobalAvgPool2d<T> readout_pool;
    std::array<int, 3> channel_plan{};
    std::vector<int> cache_hseq_shape;

    void init(int in_c, const std::array<int, 3>& plan, float dropout_rate, Rng& rng) {
        channel_plan = plan;
        int c = in_c;
        for (int b = 0; b < 3; ++b) {
            blocks[size_t(b)].init(c, plan[size_t(b)], dropout_rate, rng);
            c = plan[size_t(b)];
        }
        blocks[0].dropout_after_conv1 = false;  // first conv of block 1
        blocks[2].dropout_after_convlstm = false;  // last convLSTM of block 3
    }

    // x: [N, 8, H, W, C] -> feature [N, channel_plan[2]]
    TensorT<T> forward(const TensorT<T>& x, bool train, Rng& rng) {
        if (x.dim(2) % 8 != 0 || x.dim(3) % 8 != 0)
            throw ShapeError("visual input spatial dims must be divisible by 8");
        TensorT<T> y = x;
        for (auto& b : blocks) y = b.forward(y, train, rng);
        // readout: hidden state of the final step, spatially averaged
        cache_hseq_shape = y.shape();
        const int n = y.dim(0), t = y.dim(1), h = y.dim(2), w = y.dim(3), c = y.dim(4);
        TensorT<T> last({n, h, w, c});
        for (int ni = 0; ni < n; ++ni)
            std::copy_n(y.data() + ((size_t(ni) * t + (t - 1)) * size_t(h) * w) * c,
                        size_t(h) * w * c, last.data() + size_t(ni) * h * w * size_t(c));
        return readout_pool.forward(last);
    }

    TensorT<T> backward(const TensorT<T>& d_feature, bool train) {
        TensorT<T> d_last = readout_pool.backward(d_feature);
        TensorT<T> d_seq(cache_hseq_shape);
        const int n = cache_hseq_shape[0], t = cache_hseq_shape[1];
        const size_t frame = d_last.size() / size_t(n);
        for (int ni = 0; ni < n; ++ni)
            std::copy_n(d_last.data() + size_t(ni) * frame, frame,
                        d_seq.data() + (size_t(ni) * t + (t - 1)) * frame);
        TensorT<T> d = d_seq;
        for (int b = 2; b >= 0; --b) d = blocks[size_t(b)].backward(d, train);
        return d;
    }

    void params(ParamList<T>& out) {
        for (int b = 0; b < 3; ++b)
            blocks[size_t(b)].params("visual.block" + std::to_string(b + 1), out);
    }

    void stats(ParamList<T>& out) {
        for (int b = 0; b < 3; ++b)
            blocks[size_t(b)].stats("visual.block" + std::to_string(b + 1), out);
    }
};

template <class T>
struct AudioBranch {
    Conv1d<T> conv1, conv2;
    BatchNorm<T> bn1, bn2;
    ReLU<T> relu1, relu2;
    Dropout<T> drop1, drop2, drop_head;
    GlobalMaxPool1d<T> pool;
    Linear<T> head;  // audio-only variant
    ReLU<T> head_relu;
    bool use_head = false;

    void init(int n_mfcc, int filters, int kernel, float dropout_rate, bool with_head,
              Rng& rng) {
        conv1.init(n_mfcc, filters, kernel, rng);
        bn1.init(filters);
        conv2.init(filters, filters, kernel, rng);
        bn2.init(filters);
        drop1.rate = T(dropout_rate);
        drop2.rate = T(dropout_rate);
        drop_head.rate = T(dropout_rate);
        use_head = with_head;
        if (use_head) head.init(filters, 64, rng);
    }

    // x: [N, t_a, n_mfcc] -> [N, filters] (or [N,64] with head)
    TensorT<T> forward(const TensorT<T>& x, bool train, Rng& rng) {
        TensorT<T> y = relu1.forward(bn1.forward(conv1.forward(x), train));
        y = drop1.forward(y, train, rng);
        y = relu2.forward(bn2.forward(conv2.forward(y), train));
        y = drop2.forward(y, train, rng);
        y = pool.forward(y);
        if (use_head) {
            y = head_relu.forward(head.forward(y));
            y = drop_head.forward(y, train, rng);
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& d_out, bool train) {
        TensorT<T> d = d_out;
        if (use_head) {
            d = drop_head.backward(d, train);
            d = head.backward(head_relu.backward(d));
        }
        d = pool.backward(d);
        d = drop2.backward(d, train);
        d = conv2.backward(bn2.backward(relu2.backward(d)));
        d = drop1.backward(d, train);
        d = conv1.backward(bn1.backward(relu1.backward(d)));
        return d;
    }

    void params(ParamList<T>& out) {
        conv1.params("audio.conv1", out);
        bn1.params("audio.bn1", out);
        conv2.params("audio.conv2", out);
        bn2.params("audio.bn2", out);
        if (use_head) head.params("audio.head", out);
    }

    void stats(ParamList<T>& out) {
        bn1.stats("audio.bn1", out);
        bn2.stats("audio.bn2", out);
    }
};

template <class T>
struct FusionHead {
    Linear<T> fc1, fc2;
    ReLU<T> relu;
    Dropout<T> drop;

    void init(int in_f, int hidden, int classes, float dropout_rate, Rng& rng) {
        fc1.init(in_f, hidden, rng);
        fc2.init(hidden, classes, rng);
        drop.rate = T(dropout_rate);
    }

    TensorT<T> forward(const TensorT<T>& feat, bool train, Rng& rng) {
        TensorT<T> y = relu.forward(fc1.forward(feat));
        y = drop.forward(y, train, rng);
        return fc2.forward(y);
    }

    TensorT<T> backward(const TensorT<T>& d_logits, bool train) {
        TensorT<T> d = fc2.backward(d_logits);
        d = drop.backward(d, train);
        return fc1.backward(relu.backward(d));
    }

    void params(ParamList<T>& out) {
        fc1.params("head.fc1", out);
        fc2.params("head.fc2", out);
    }
};

// The full network for any modality subset. Missing-modality inputs are
// passed as empty tensors.
template <class T>
struct FinoNet {
    ModelConfig config;
    std::optional<VisualBranch<T>> visual;
    std::optional<AudioBranch<T>> audio;
    FusionHead<T> head;
    int feature_dim = 0;
    int cache_batch = 0;

    void init(const ModelConfig& cfg) {
        config = cfg;
        config.validate();
        Rng rng(cfg.seed);
        feature_dim = 0;
        if (cfg.use_vision()) {
            visual.emplace();
            visual->init(cfg.vision_channels(), cfg.channel_plan, cfg.dropout_rate, rng);
            feature_dim += cfg.channel_plan[2];
        }
        if (cfg.use_audio) {
            audio.emplace();
            bool audio_only = !cfg.use_vision();
            audio->init(cfg.n_mfcc, cfg.audio_filters, cfg.audio_kernel, cfg.dropout_rate,
                        audio_only, rng);
            feature_dim += audio_only ? 64 : cfg.audio_filters;
        }
        head.init(feature_dim, cfg.fusion_hidden, cfg.num_classes(), cfg.dropout_rate, rng);
    }

    // visual_in: [N,8,H,W,C] or empty; audio_in: [N,t_a,n_mfcc] or empty.
    TensorT<T> forward(const TensorT<T>& visual_in, const TensorT<T>& audio_in, bool train,
                       Rng& rng) {
        TensorT<T> vf, af;
        int n = 0;
        if (visual) {
            if (visual_in.empty()) throw MissingModality("visual input required");
            vf = visual->forward(visual_in, train, rng);
            n = vf.dim(0);
        }
        if (audio) {
            if (audio_in.empty()) throw MissingModality("audio input required");
            af = audio->forward(audio_in, train, rng);
            n = af.dim(0);
        }
        cache_batch = n;
        TensorT<T> feat({n, feature_dim});
        for (int i = 0; i < n; ++i) {
            T* dst = feat.data() + size_t(i) * feature_dim;
            int off = 0;
            if (visual) {
                std::copy_n(vf.data() + size_t(i) * vf.dim(1), vf.dim(1), dst);
                off += vf.dim(1);
            }
            if (audio) std::copy_n(af.data() + size_t(i) * af.dim(1), af.dim(1), dst + off);
        }
        return head.forward(feat, train, rng);
    }

    // Returns gradients with respect to the (present) inputs.
    std::pair<TensorT<T>, TensorT<T>> backward(const TensorT<T>& d_logits, bool train) {
        TensorT<T> d_feat = head.backward(d_logits, train);
        const int n = cache_batch;
        TensorT<T> d_visual, d_audio;
        int off = 0;
        if (visual) {
            int vd = config.channel_plan[2];
            TensorT<T> dv({n, vd});
            for (int i = 0; i < n; ++i)
                std::copy_n(d_feat.data() + size_t(i) * feature_dim, vd,
                            dv.data() + size_t(i) * vd);
            d_visual = visual->backward(dv, train);
            off += vd;
        }
        if (audio) {
            int ad = feature_dim - off;
            TensorT<T> da({n, ad});
            for (int i = 0; i < n; ++i)
                std::copy_n(d_feat.data() + size_t(i) * feature_dim + off, ad,
                            da.data() + size_t(i) * ad);
            d_audio = audio->backward(da, train);
        }
        return {std::move(d_visual), std::move(d_audio)};
    }

    ParamList<T> params() {
        ParamList<T> out;
        if (visual) visual->params(out);
        if (audio) audio->params(out);
        head.params(out);
        return out;
    }

    // parameters plus batch-norm running statistics (grad == nullptr)
    ParamList<T> named_tensors() {
        ParamList<T> out = params();
        if (visual) visual->stats(out);
        if (audio) audio->stats(out);
        return out;
    }

    void zero_grads() {
        for (auto& p : params()) p.grad->zero();
    }

    size_t param_count() {
        size_t n = 0;
        for (auto& p : params()) n += p.value->size();
        return n;
    }

    // Layer order with dropout placements, for structural checks and dumps.
    std::vector<std::string> layer_sequence() const {
        std::vector<std::string> seq;
        if (visual) {
            for (int b = 1; b <= 3; ++b) {
                std::string p = "visual.block" + std::to_string(b);
                seq.push_back(p + ".conv1");
                seq.push_back(p + ".bn1");
                seq.push_back(p + ".relu");
                if (visual->blocks[size_t(b - 1)].dropout_after_conv1)
                    seq.push_back(p + ".dropout");
                seq.push_back(p + ".conv2");
                seq.push_back(p + ".bn2");
                seq.push_back(p + ".relu");
                seq.push_back(p + ".dropout");
                seq.push_back(p + ".maxpool");
                seq.push_back(p + ".convlstm");
                if (visual->blocks[size_t(b - 1)].dropout_after_convlstm)
                    seq.push_back(p + ".dropout");
            }
        }
        if (audio) {
            seq.insert(seq.end(), {"audio.conv1", "audio.bn1", "audio.relu", "audio.dropout",
                                   "audio.conv2", "audio.bn2", "audio.relu", "audio.dropout",
                                   "audio.maxpool"});
            if (audio->use_head)
                seq.insert(seq.end(), {"audio.head", "audio.relu", "audio.dropout"});
        }
        seq.insert(seq.end(), {"head.fc1", "head.relu", "head.dropout", "head.fc2"});
        return seq;
    }
};

// Normalized exponential over the class axis of [N,K] logits.
template <class T>
TensorT<T> softmax(const TensorT<T>& logits) {
    TensorT<T> out(logits.shape());
    const int n = logits.dim(0), k = logits.dim(1);
    for (int i = 0; i < n; ++i) {
        T mx = logits.at2(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at2(i, j));
        T sum = T(0);
        for (int j = 0; j < k; ++j) {
            out.at2(i, j) = std::exp(logits.at2(i, j) - mx);
            sum += out.at2(i, j);
        }
        for (int j = 0; j < k; ++j) out.at2(i, j) /= sum;
    }
    return out;
}

}  // namespace fino
