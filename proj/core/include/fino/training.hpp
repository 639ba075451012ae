#pragma once

#include <map>
#include <string>
#include <vector>

#include "fino/audio.hpp"
#include "fino/checkpoint.hpp"
#include "fino/config.hpp"
#include "fino/dataset.hpp"
#include "fino/metrics.hpp"
#include "fino/model.hpp"
#include "fino/vision.hpp"

namespace fino {

enum class ClassWeighting { none, inverse_frequency };

struct TrainConfig {
    double learning_rate = 1e-5;
    int epochs = 250;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int batch_size = 8;
    ClassWeighting class_weighting = ClassWeighting::none;
    int patience = 0;  // 0: best-checkpoint selection over all epochs
    bool augment = true;
    uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
        if (learning_rate <= 0) throw ConfigError("train.learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    }
};

struct EpochStats {
    double train_loss = 0;
    double val_precision = 0, val_recall = 0, val_f1 = 0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // argmax validation macro-F1, ties to earliest
    double best_val_f1 = 0;
    std::string checkpoint_path;
};

// Fully preprocessed episode: the 4-channel visual stack plus the MFCC
// matrix, computed once and sliced per modality variant.
struct PreprocessedEpisode {
    std::string id;
    ActionName action = ActionName::push;
    Label label = Label::success;
    Tensor visual4;          // [8,H,W,4]
    TensorT<double> mfcc;    // [t_a, n_mfcc]
};

class PreprocCache {
public:
    void build(const std::vector<EpisodeRef>& refs, const VisionConfig& vision,
               const AudioFrontEndConfig& audio);
    void add(const Episode& episode, const VisionConfig& vision,
             const AudioFrontEndConfig& audio);
    const PreprocessedEpisode& get(const std::string& id) const;

private:
    std::map<std::string, PreprocessedEpisode> episodes_;
};

struct TaskItem {
    const PreprocessedEpisode* episode = nullptr;
    int label = 0;  // class index for the task
};

struct TaskDataset {
    std::vector<TaskItem> train, val, test;
    std::vector<std::string> class_names;
    bool use_rgb = true, use_depth = true, use_audio = true;
    VisionConfig vision;
};

// Task label index; -1 marks episodes excluded by the task (success under
// cascaded classification).
int task_label_index(Label label, TaskMode task);
std::vector<std::string> task_class_names(TaskMode task);

// Maps split members to labeled preprocessed streams for the task. Cascaded
// mode drops success episodes; raises EmptyDataset when nothing remains.
TaskDataset build_task_dataset(const DatasetIndex& index, const PreprocCache& cache,
                               TaskMode task, const ModelConfig& model,
                               const VisionConfig& vision);

// Channel slice of the 4-channel stack for a modality subset.
Tensor slice_visual_channels(const Tensor& visual4, bool rgb, bool depth);

// Batched evaluation-mode prediction; returns argmax class indices.
std::vector<int> predict_labels(FinoNet<float>& net, const TaskDataset& data,
                                const std::vector<TaskItem>& items, int batch_size = 16);

// Class scores (softmax) for a single preprocessed episode.
std::vector<double> predict_scores(FinoNet<float>& net, const TaskDataset& data,
                                   const PreprocessedEpisode& episode);

// Optimizes the network with the standard protocol: shuffled minibatches,
// cross-entropy, adaptive-moment updates, train-split-only augmentation,
// best-validation checkpoint selection. Deterministic for a fixed seed.
TrainReport train(FinoNet<float>& net, const TaskDataset& data, const TrainConfig& config,
                  const std::string& checkpoint_path);

}  // namespace fino
