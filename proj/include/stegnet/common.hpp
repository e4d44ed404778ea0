// Error taxonomy shared across the library. The CLI maps these onto its
// exit-code contract: DataError -> 2, IntegrityError -> 3, anything else -> 1.
#pragma once

#include <stdexcept>
#include <string>

namespace stegnet {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer dimension mismatches.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Bad user data: empty datasets, unreadable images, capacity exceeded.
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Corrupted files: bad magic, bad CRC, truncated checkpoints, broken frames.
struct IntegrityError : Error {
    explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Training diverged (non-finite loss).
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

} // namespace stegnet
