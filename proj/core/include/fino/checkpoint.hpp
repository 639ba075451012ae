#pragma once

#include <string>

#include "fino/model.hpp"

namespace fino {

// Self-describing checkpoint container:
//   magic "FINOCKPT", format version, JSON header (model config echo,
//   training step, validation score, tensor directory), raw little-endian
//   float payload.
struct CheckpointMeta {
    int step = 0;
    double val_score = 0.0;
};

void save_checkpoint(const std::string& path, FinoNet<float>& net, const CheckpointMeta& meta);

// Rebuilds the network from the config echo and restores all tensors
// (parameters and batch-norm running statistics).
CheckpointMeta load_checkpoint(const std::string& path, FinoNet<float>& net);

// Reads just the config echo without loading tensors.
ModelConfig peek_checkpoint_config(const std::string& path);

}  // namespace fino
