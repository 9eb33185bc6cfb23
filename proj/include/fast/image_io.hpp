#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "fast/common.hpp"

namespace fast {

// TensorImage (3, H, W) in [-1, 1], RGB order  <->  8-bit OpenCV matrices (BGR / gray).
cv::Mat to_bgr8(const TensorImage& image);
TensorImage from_bgr8(const cv::Mat& bgr);

// Masks: a TensorImage with values in {-1, +1}, stored on disk as one 8-bit channel {0, 255}.
// Loading replicates the channel three times; any stored value > 127 counts as text.
cv::Mat mask_to_gray8(const TensorImage& mask);
TensorImage mask_from_gray8(const cv::Mat& gray);

// Float alpha/probability field (H, W) in [0, 1] to a {-1,+1} three-channel mask.
TensorImage binary_mask_from_alpha(const torch::Tensor& alpha, double threshold = 0.5);

TensorImage read_image(const std::filesystem::path& path);
TensorImage read_mask(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const TensorImage& image);
void write_mask(const std::filesystem::path& path, const TensorImage& mask);

std::vector<std::uint8_t> encode_png(const cv::Mat& mat);
cv::Mat decode_image_bytes(const std::vector<std::uint8_t>& bytes, int flags);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
// Throws InvalidArgument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Bilinear resize of a (C, H, W) tensor.
TensorImage resize(const TensorImage& image, int64_t height, int64_t width);

// Writes `bytes` to `path` through a sibling temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

} // namespace fast
