#pragma once

#include <stdexcept>
#include <string>

namespace fino {

// Error taxonomy shared across the library. Each condition the pipeline can
// report maps to one exception type so callers can branch on what went wrong.

struct MissingModality : std::runtime_error {
    explicit MissingModality(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorruptEpisode : std::runtime_error {
    explicit CorruptEpisode(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaViolation : std::runtime_error {
    explicit SchemaViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientFrames : std::runtime_error {
    explicit InsufficientFrames(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegeneratePhase : std::runtime_error {
    explicit DegeneratePhase(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyAudio : std::runtime_error {
    explicit EmptyAudio(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigMismatch : std::runtime_error {
    explicit ConfigMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(const std::string& msg, int epoch)
        : std::runtime_error(msg), epoch(epoch) {}
    int epoch;
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fino
