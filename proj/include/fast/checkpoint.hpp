#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fast/common.hpp"
#include "fast/discriminator.hpp"
#include "fast/generator.hpp"
#include "fast/mask_unet.hpp"

namespace fast {

// A checkpoint is a directory holding gm.weights, gi.weights, dm.weights, di.weights, unet.weights
// (libtorch module archives written by torch::save) and config.json:
//   { "gm": GeneratorConfig, "gi": GeneratorConfig,
//     "dm": {"base_channels"}, "di": {"base_channels"}, "unet": {"base_channels"},
//     "loss_weights": LossWeights, "train": {"mask": TrainConfig, "image": ..., "unet": ...} }
// Sections are merged as stages are trained into the same directory.

inline constexpr const char* kConfigFile = "config.json";

nlohmann::json read_checkpoint_config(const std::filesystem::path& dir);
void merge_checkpoint_config(const std::filesystem::path& dir, const nlohmann::json& patch);

bool has_weights(const std::filesystem::path& dir, const std::string& name);

void save_module(const torch::nn::Module& module, const std::filesystem::path& dir, const std::string& name);

// Loaders throw MissingCheckpoint when the weights or their config section are absent.
// Returned modules are in eval mode.
Generator load_generator(const std::filesystem::path& dir, const std::string& name);
PatchDiscriminator load_discriminator(const std::filesystem::path& dir, const std::string& name);
MaskUNet load_unet(const std::filesystem::path& dir);

// Hex SHA-256 over config.json and every *.weights file, in name order.
std::string checkpoint_hash(const std::filesystem::path& dir);

} // namespace fast
