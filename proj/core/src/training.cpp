#include "fino/training.hpp"

#include <algorithm>
#include <cmath>

#include "fino/adam.hpp"

namespace fino {

void PreprocCache::build(const std::vector<EpisodeRef>& refs, const VisionConfig& vision,
                         const AudioFrontEndConfig& audio) {
    for (const auto& ref : refs) add(load_episode(ref.path), vision, audio);
}

void PreprocCache::add(const Episode& episode, const VisionConfig& vision,
                       const AudioFrontEndConfig& audio) {
    PreprocessedEpisode p;
    p.id = episode.id;
    p.action = episode.action;
    p.label = episode.label;
    p.visual4 = preprocess_visual(episode, vision).data;
    p.mfcc = audio_features(episode.audio, audio).data;
    episodes_[p.id] = std::move(p);
}

const PreprocessedEpisode& PreprocCache::get(const std::string& id) const {
    auto it = episodes_.find(id);
    if (it == episodes_.end()) throw IoError("episode not in preprocessing cache: " + id);
    return it->second;
}

int task_label_index(Label label, TaskMode task) {
    switch (task) {
        case TaskMode::detection:
            return derive_detection_label(label) == DetectionLabel::success ? 0 : 1;
        case TaskMode::standalone_classification:
            for (size_t i = 0; i < kAllLabels.size(); ++i)
                if (kAllLabels[i] == label) return int(i);
            return -1;
        case TaskMode::cascaded_classification:
            for (size_t i = 0; i < kFailureLabels.size(); ++i)
                if (kFailureLabels[i] == label) return int(i);
            return -1;  // success excluded
    }
    return -1;
}

std::vector<std::string> task_class_names(TaskMode task) {
    switch (task) {
        case TaskMode::detection: return {"success", "fail"};
        case TaskMode::standalone_classification: {
            std::vector<std::string> names;
            for (Label l : kAllLabels) names.push_back(to_string(l));
            return names;
        }
        case TaskMode::cascaded_classification: {
            std::vector<std::string> names;
            for (Label l : kFailureLabels) names.push_back(to_string(l));
            return names;
        }
    }
    return {};
}

TaskDataset build_task_dataset(const DatasetIndex& index, const PreprocCache& cache,
                               TaskMode task, const ModelConfig& model,
                               const VisionConfig& vision) {
    TaskDataset out;
    out.class_names = task_class_names(task);
    out.use_rgb = model.use_rgb;
    out.use_depth = model.use_depth;
    out.use_audio = model.use_audio;
    out.vision = vision;

    for (const auto& ref : index.episodes) {
        int label = task_label_index(ref.label, task);
        if (label < 0) continue;
        TaskItem item{&cache.get(ref.id), label};
        switch (index.split_assignment.at(ref.id)) {
            case Split::train: out.train.push_back(item); break;
            case Split::val: out.val.push_back(item); break;
            case Split::test: out.test.push_back(item); break;
        }
    }
    if (out.train.empty() && out.val.empty() && out.test.empty())
        throw EmptyDataset("task dataset is empty (no episodes match the task)");
    return out;
}

Tensor slice_visual_channels(const Tensor& visual4, bool rgb, bool depth) {
    const int t = visual4.dim(0), h = visual4.dim(1), w = visual4.dim(2);
    const int out_c = (rgb ? 3 : 0) + (depth ? 1 : 0);
    Tensor out({t, h, w, out_c});
    for (int ti = 0; ti < t; ++ti)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float* src = visual4.data() + (((size_t(ti) * h + y) * w) + x) * 4;
                float* dst =
                    out.data() + (((size_t(ti) * h + y) * w) + x) * size_t(out_c);
                int o = 0;
                if (rgb)
                    for (int c = 0; c < 3; ++c) dst[o++] = src[c];
                if (depth) dst[o] = src[3];
            }
    return out;
}

namespace {

// Stacks items into batch tensors, optionally augmenting the visual stream.
void assemble_batch(const TaskDataset& data, const std::vector<TaskItem>& items,
                    size_t begin, size_t end, bool augment_visual, uint64_t augment_seed,
                    Tensor& visual, Tensor& audio, std::vector<int>& labels) {
    const int n = int(end - begin);
    const bool vis = data.use_rgb || data.use_depth;
    labels.clear();
    for (size_t i = begin; i < end; ++i) labels.push_back(items[i].label);

    if (vis) {
        const Tensor& sample0 = items[begin].episode->visual4;
        const int h = sample0.dim(1), w = sample0.dim(2);
        const int c = (data.use_rgb ? 3 : 0) + (data.use_depth ? 1 : 0);
        visual = Tensor({n, 8, h, w, c});
        for (int i = 0; i < n; ++i) {
            Tensor v4 = items[begin + size_t(i)].episode->visual4;
            if (augment_visual) {
                VisualTensor vt;
                vt.data = std::move(v4);
                v4 = augment(vt, split_seed(augment_seed, begin + size_t(i)), data.vision)
                         .data;
            }
            Tensor sliced = slice_visual_channels(v4, data.use_rgb, data.use_depth);
            std::copy_n(sliced.data(), sliced.size(),
                        visual.data() + size_t(i) * sliced.size());
        }
    } else {
        visual = Tensor();
    }
    if (data.use_audio) {
        const auto& m0 = items[begin].episode->mfcc;
        audio = Tensor({n, m0.dim(0), m0.dim(1)});
        for (int i = 0; i < n; ++i) {
            const auto& m = items[begin + size_t(i)].episode->mfcc;
            for (size_t j = 0; j < m.size(); ++j)
                audio[size_t(i) * m.size() + j] = float(m[j]);
        }
    } else {
        audio = Tensor();
    }
}

}  // namespace

std::vector<int> predict_labels(FinoNet<float>& net, const TaskDataset& data,
                                const std::vector<TaskItem>& items, int batch_size) {
    std::vector<int> preds;
    Rng rng(0);  // unused in evaluation mode
    for (size_t begin = 0; begin < items.size(); begin += size_t(batch_size)) {
        size_t end = std::min(items.size(), begin + size_t(batch_size));
        Tensor visual, audio;
        std::vector<int> labels;
        assemble_batch(data, items, begin, end, false, 0, visual, audio, labels);
        Tensor logits = net.forward(visual, audio, false, rng);
        for (int i = 0; i < logits.dim(0); ++i) {
            int best = 0;
            for (int k = 1; k < logits.dim(1); ++k)
                if (logits.at2(i, k) > logits.at2(i, best)) best = k;
            preds.push_back(best);
        }
    }
    return preds;
}

std::vector<double> predict_scores(FinoNet<float>& net, const TaskDataset& data,
                                   const PreprocessedEpisode& episode) {
    std::vector<TaskItem> one{{&episode, 0}};
    Tensor visual, audio;
    std::vector<int> labels;
    assemble_batch(data, one, 0, 1, false, 0, visual, audio, labels);
    Rng rng(0);
    Tensor probs = softmax(net.forward(visual, audio, false, rng));
    std::vector<double> out(size_t(probs.dim(1)));
    for (int k = 0; k < probs.dim(1); ++k) out[size_t(k)] = probs.at2(0, k);
    return out;
}

TrainReport train(FinoNet<float>& net, const TaskDataset& data, const TrainConfig& config,
                  const std::string& checkpoint_path) {
    config.validate();
    if (data.train.empty()) throw EmptyDataset("train split is empty");
    if (data.val.empty()) throw EmptyDataset("validation split is empty");

    const int num_classes = int(data.class_names.size());
    std::vector<float> class_weight(size_t(num_classes), 1.0f);
    if (config.class_weighting == ClassWeighting::inverse_frequency) {
        std::vector<int> counts(size_t(num_classes), 0);
        for (const auto& it : data.train) ++counts[size_t(it.label)];
        double mean_inv = 0;
        int present = 0;
        for (int c = 0; c < num_classes; ++c)
            if (counts[size_t(c)] > 0) {
                mean_inv += 1.0 / counts[size_t(c)];
                ++present;
            }
        mean_inv /= std::max(1, present);
        for (int c = 0; c < num_classes; ++c)
            class_weight[size_t(c)] =
                counts[size_t(c)] > 0 ? float(1.0 / counts[size_t(c)] / mean_inv) : 0.0f;
    }

    auto params = net.params();
    Adam<float> opt(params, float(config.learning_rate), float(config.beta1),
                    float(config.beta2), float(config.eps));

    TrainReport report;
    report.checkpoint_path = checkpoint_path;
    std::vector<Tensor> best_snapshot;
    int epochs_since_best = 0;
    std::vector<size_t> order(data.train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<int> val_true;
    for (const auto& it : data.val) val_true.push_back(it.label);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(split_seed(config.seed, uint64_t(epoch) * 3 + 0));
        Rng dropout_rng(split_seed(config.seed, uint64_t(epoch) * 3 + 1));
        uint64_t augment_seed = split_seed(config.seed, uint64_t(epoch) * 3 + 2);
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        std::vector<TaskItem> shuffled(order.size());
        for (size_t i = 0; i < order.size(); ++i) shuffled[i] = data.train[order[i]];

        double epoch_loss = 0;
        size_t batches = 0;
        for (size_t begin = 0; begin < shuffled.size(); begin += size_t(config.batch_size)) {
            size_t end = std::min(shuffled.size(), begin + size_t(config.batch_size));
            Tensor visual, audio;
            std::vector<int> labels;
            assemble_batch(data, shuffled, begin, end, config.augment, augment_seed, visual,
                           audio, labels);
            net.zero_grads();
            Tensor logits = net.forward(visual, audio, true, dropout_rng);
            Tensor probs = softmax(logits);
            const int n = logits.dim(0);
            double loss = 0, weight_sum = 0;
            Tensor d_logits(logits.shape());
            for (int i = 0; i < n; ++i) {
                float w = class_weight[size_t(labels[size_t(i)])];
                loss -= double(w) * std::log(std::max(
                            1e-12f, probs.at2(i, labels[size_t(i)])));
                weight_sum += double(w);
            }
            loss /= std::max(1e-12, weight_sum);
            for (int i = 0; i < n; ++i) {
                float w = class_weight[size_t(labels[size_t(i)])] / float(weight_sum);
                for (int k = 0; k < num_classes; ++k) {
                    float y = k == labels[size_t(i)] ? 1.0f : 0.0f;
                    d_logits.at2(i, k) = w * (probs.at2(i, k) - y);
                }
            }
            if (!std::isfinite(loss))
                throw TrainingDiverged("non-finite training loss", epoch);
            net.backward(d_logits, true);
            opt.step();
            epoch_loss += loss;
            ++batches;
        }

        EpochStats stats;
        stats.train_loss = epoch_loss / double(std::max<size_t>(1, batches));
        std::vector<int> val_pred = predict_labels(net, data, data.val);
        MetricsReport vm = compute_metrics(val_true, val_pred, data.class_names);
        stats.val_precision = vm.macro_precision;
        stats.val_recall = vm.macro_recall;
        stats.val_f1 = vm.macro_f1;
        report.epochs.push_back(stats);

        if (report.best_epoch < 0 || stats.val_f1 > report.best_val_f1) {
            report.best_epoch = epoch;
            report.best_val_f1 = stats.val_f1;
            best_snapshot.clear();
            for (auto& t : net.named_tensors()) best_snapshot.push_back(*t.value);
            epochs_since_best = 0;
        } else if (config.patience > 0 && ++epochs_since_best >= config.patience) {
            break;
        }
    }

    // restore the best-validation parameters before writing the checkpoint
    auto tensors = net.named_tensors();
    for (size_t i = 0; i < tensors.size(); ++i) *tensors[i].value = best_snapshot[i];
    if (!checkpoint_path.empty()) {
        CheckpointMeta meta;
        meta.step = report.best_epoch;
        meta.val_score = report.best_val_f1;
        save_checkpoint(checkpoint_path, net, meta);
    }
    return report;
}

}  // namespace fino
