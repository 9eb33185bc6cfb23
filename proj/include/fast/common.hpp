#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <torch/torch.h>

namespace fast {

// Canonical working resolution for every image and mask in the pipeline.
inline constexpr int64_t kHeight = 64;
inline constexpr int64_t kWidth = 256;
inline constexpr int64_t kChannels = 3;

// A TensorImage is a float tensor laid out (C, H, W) with values in [-1, 1].
// Batched tensors add a leading N dimension.
using TensorImage = torch::Tensor;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error { using Error::Error; };
class ShapeMismatch : public Error { using Error::Error; };
class GlyphOverflow : public Error { using Error::Error; };
class MissingFont : public Error { using Error::Error; };
class InsufficientAssets : public Error { using Error::Error; };
class EmptyDataset : public Error { using Error::Error; };
class MissingCheckpoint : public Error { using Error::Error; };
class MissingStage1Checkpoint : public MissingCheckpoint { using MissingCheckpoint::MissingCheckpoint; };
class BackboneUnavailable : public Error { using Error::Error; };

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(int64_t iteration, const std::string& what)
        : Error("non-finite loss at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    int64_t iteration() const { return iteration_; }

private:
    int64_t iteration_;
};

// Throws ShapeMismatch unless `t` has exactly the given sizes.
void expect_shape(const torch::Tensor& t, c10::IntArrayRef sizes, const char* what);

// [-1, 1] <-> [0, 1] remaps used at every metric / loss boundary.
inline torch::Tensor to_unit(const torch::Tensor& t) { return (t + 1.0) * 0.5; }
inline torch::Tensor to_signed(const torch::Tensor& t) { return t * 2.0 - 1.0; }

} // namespace fast
