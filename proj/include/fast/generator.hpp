#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "fast/common.hpp"

namespace fast {

enum class Attention { Self, Sigmoid };
enum class ConditionKind { Image, Mask };

std::string to_string(Attention a);
std::string to_string(ConditionKind c);

struct GeneratorConfig {
    int64_t base_channels = 64;
    int64_t n_scales = 4;
    /// Decoder attention per level, ordered from the lowest to the highest resolution.
    std::array<Attention, 4> attention_schedule{Attention::Self, Attention::Self, Attention::Sigmoid,
                                                Attention::Sigmoid};
    ConditionKind condition_kind = ConditionKind::Image;
    /// Mask branch consumes (m_A, guide) when true, the guide alone otherwise.
    bool concat_source_mask = true;

    /// G_m: self-attention at the two coarsest levels, sigmoid gates above.
    static GeneratorConfig stage1();
    /// G_i: sigmoid gates everywhere.
    static GeneratorConfig stage2();

    int64_t mask_channels() const { return concat_source_mask ? 2 * kChannels : kChannels; }
    void validate() const;

    bool operator==(const GeneratorConfig&) const = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Encoder outputs: stem at full resolution, then four levels each halving H, W and doubling C.
struct FeaturePyramid {
    torch::Tensor stem;
    std::array<torch::Tensor, 4> levels;
};

// conv3x3-BN-ReLU-conv3x3-BN, identity skip, ReLU after the sum.
class ResidualBlockImpl : public torch::nn::Module {
public:
    explicit ResidualBlockImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
    torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

class EncoderImpl : public torch::nn::Module {
public:
    EncoderImpl(int64_t in_channels, int64_t base_channels);
    FeaturePyramid forward(const torch::Tensor& x);
    int64_t in_channels() const { return in_channels_; }

private:
    int64_t in_channels_;
    torch::nn::Sequential stem_{nullptr};
    std::array<torch::nn::Sequential, 4> down_;
};
TORCH_MODULE(Encoder);

/// SAGAN self-attention: query/key projections to C/8, value projection to C, softmax over key
/// positions, output = x + gamma * attended with gamma initialized to 0.
class SelfAttentionImpl : public torch::nn::Module {
public:
    explicit SelfAttentionImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);
    /// Row-stochastic (N, HW, HW) attention matrix for `x`.
    torch::Tensor attention_map(const torch::Tensor& x);
    torch::Tensor& gamma() { return gamma_; }

private:
    torch::nn::Conv2d query_{nullptr}, key_{nullptr}, value_{nullptr};
    torch::Tensor gamma_;
};
TORCH_MODULE(SelfAttention);

/// decoder ⊙ σ(mask). Throws ShapeMismatch when shapes differ.
torch::Tensor sigmoid_gate(const torch::Tensor& decoder_feat, const torch::Tensor& mask_feat);

class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(GeneratorConfig config);

    enum class Branch { Image, Mask };
    FeaturePyramid encode_branch(const torch::Tensor& input, Branch which);
    torch::Tensor decode(const FeaturePyramid& condition, const FeaturePyramid& mask);
    /// condition: (N, 3, 64, 256); masks: (N, mask_channels, 64, 256). Output (N, 3, 64, 256) in [-1, 1].
    torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& masks);

    const GeneratorConfig& config() const { return config_; }
    /// Self-attention module for decoder block k (0-based), or nullptr for sigmoid slots.
    SelfAttention attention(int k) const { return attention_[k]; }

private:
    GeneratorConfig config_;
    Encoder image_encoder_{nullptr}, mask_encoder_{nullptr};
    std::array<SelfAttention, 4> attention_{SelfAttention{nullptr}, SelfAttention{nullptr}, SelfAttention{nullptr},
                                            SelfAttention{nullptr}};
    std::array<torch::nn::Sequential, 4> up_;
    torch::nn::Sequential post_{nullptr};
    torch::nn::Conv2d project_{nullptr};
};
TORCH_MODULE(Generator);

/// Unbatched convenience: (3,64,256) condition and (k*3,64,256) masks, or batched tensors.
TensorImage generator_forward(Generator& generator, const TensorImage& condition, const TensorImage& masks);

int64_t parameter_count(const torch::nn::Module& module);

} // namespace fast
