#include "fast/generator.hpp"

namespace fast {

namespace nn = torch::nn;
using nlohmann::json;

std::string to_string(Attention a) { return a == Attention::Self ? "SELF" : "SIGMOID"; }
std::string to_string(ConditionKind c) { return c == ConditionKind::Image ? "IMAGE" : "MASK"; }

GeneratorConfig GeneratorConfig::stage1() { return GeneratorConfig{}; }

GeneratorConfig GeneratorConfig::stage2()
{
    GeneratorConfig c;
    c.attention_schedule.fill(Attention::Sigmoid);
    return c;
}

void GeneratorConfig::validate() const
{
    if (n_scales != 4)
        throw InvalidArgument("n_scales is fixed at 4");
    if (base_channels < 1)
        throw InvalidArgument("base_channels must be positive");
    for (int k = 0; k < 4; ++k) {
        // Decoder block k attends over mask level 4 - k, which has base * 2^(4 - k) channels.
        const int64_t channels = base_channels << (4 - k);
        if (attention_schedule[k] == Attention::Self && channels < 8)
            throw InvalidArgument("self-attention needs at least 8 channels; raise base_channels");
    }
}

void to_json(json& j, const GeneratorConfig& c)
{
    std::vector<std::string> schedule;
    for (auto a : c.attention_schedule)
        schedule.push_back(to_string(a));
    j = json{{"base_channels", c.base_channels},
             {"n_scales", c.n_scales},
             {"attention_schedule", schedule},
             {"condition_kind", to_string(c.condition_kind)},
             {"concat_source_mask", c.concat_source_mask}};
}

void from_json(const json& j, GeneratorConfig& c)
{
    GeneratorConfig d;
    c.base_channels = j.value("base_channels", d.base_channels);
    c.n_scales = j.value("n_scales", d.n_scales);
    c.attention_schedule = d.attention_schedule;
    if (j.contains("attention_schedule")) {
        auto names = j.at("attention_schedule").get<std::vector<std::string>>();
        if (names.size() != 4)
            throw InvalidArgument("attention_schedule must list 4 entries");
        for (size_t k = 0; k < 4; ++k) {
            if (names[k] == "SELF")
                c.attention_schedule[k] = Attention::Self;
            else if (names[k] == "SIGMOID")
                c.attention_schedule[k] = Attention::Sigmoid;
            else
                throw InvalidArgument("attention entries are SELF or SIGMOID, got " + names[k]);
        }
    }
    const std::string kind = j.value("condition_kind", std::string("IMAGE"));
    if (kind == "IMAGE")
        c.condition_kind = ConditionKind::Image;
    else if (kind == "MASK")
        c.condition_kind = ConditionKind::Mask;
    else
        throw InvalidArgument("condition_kind is IMAGE or MASK, got " + kind);
    c.concat_source_mask = j.value("concat_source_mask", d.concat_source_mask);
    c.validate();
}

// ---------------------------------------------------------------------------

static nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding)
{
    return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false));
}

ResidualBlockImpl::ResidualBlockImpl(int64_t channels)
{
    conv1_ = register_module("conv1", conv(channels, channels, 3, 1, 1));
    bn1_ = register_module("bn1", nn::BatchNorm2d(channels));
    conv2_ = register_module("conv2", conv(channels, channels, 3, 1, 1));
    bn2_ = register_module("bn2", nn::BatchNorm2d(channels));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x)
{
    auto y = torch::relu(bn1_(conv1_(x)));
    y = bn2_(conv2_(y));
    return torch::relu(y + x);
}

EncoderImpl::EncoderImpl(int64_t in_channels, int64_t base_channels) : in_channels_(in_channels)
{
    stem_ = register_module("stem", nn::Sequential(conv(in_channels, base_channels, 3, 1, 1),
                                                   nn::BatchNorm2d(base_channels), nn::ReLU()));
    int64_t ch = base_channels;
    for (int k = 0; k < 4; ++k) {
        down_[k] = register_module("down" + std::to_string(k + 1),
                                   nn::Sequential(conv(ch, ch * 2, 4, 2, 1), nn::BatchNorm2d(ch * 2), nn::ReLU(),
                                                  ResidualBlock(ch * 2)));
        ch *= 2;
    }
}

FeaturePyramid EncoderImpl::forward(const torch::Tensor& x)
{
    if (x.dim() != 4 || x.size(1) != in_channels_ || x.size(2) != kHeight || x.size(3) != kWidth)
        throw ShapeMismatch("encoder expects (N, " + std::to_string(in_channels_) + ", 64, 256), got " +
                            c10::str(x.sizes()));
    FeaturePyramid p;
    p.stem = stem_->forward(x);
    auto h = p.stem;
    for (int k = 0; k < 4; ++k) {
        h = down_[k]->forward(h);
        p.levels[k] = h;
    }
    return p;
}

// ---------------------------------------------------------------------------

SelfAttentionImpl::SelfAttentionImpl(int64_t channels)
{
    if (channels < 8)
        throw InvalidArgument("self-attention needs at least 8 channels");
    query_ = register_module("query", nn::Conv2d(nn::Conv2dOptions(channels, channels / 8, 1)));
    key_ = register_module("key", nn::Conv2d(nn::Conv2dOptions(channels, channels / 8, 1)));
    value_ = register_module("value", nn::Conv2d(nn::Conv2dOptions(channels, channels, 1)));
    gamma_ = register_parameter("gamma", torch::zeros({1}));
}

torch::Tensor SelfAttentionImpl::attention_map(const torch::Tensor& x)
{
    const int64_t n = x.size(0), hw = x.size(2) * x.size(3);
    auto q = query_(x).view({n, -1, hw}).permute({0, 2, 1}); // N, HW, C/8
    auto k = key_(x).view({n, -1, hw});                      // N, C/8, HW
    return torch::softmax(torch::bmm(q, k), -1);              // rows: query positions
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x)
{
    if (x.dim() != 4)
        throw ShapeMismatch("self_attention expects (N, C, H, W)");
    const int64_t n = x.size(0), c = x.size(1), hw = x.size(2) * x.size(3);
    auto attn = attention_map(x);
    auto v = value_(x).view({n, c, hw});
    auto out = torch::bmm(v, attn.permute({0, 2, 1})).view(x.sizes());
    return x + gamma_ * out;
}

torch::Tensor sigmoid_gate(const torch::Tensor& decoder_feat, const torch::Tensor& mask_feat)
{
    if (decoder_feat.sizes() != mask_feat.sizes())
        throw ShapeMismatch("sigmoid_gate: " + c10::str(decoder_feat.sizes()) + " vs " + c10::str(mask_feat.sizes()));
    return decoder_feat * torch::sigmoid(mask_feat);
}

// ---------------------------------------------------------------------------

GeneratorImpl::GeneratorImpl(GeneratorConfig config) : config_(config)
{
    config_.validate();
    const int64_t base = config_.base_channels;
    image_encoder_ = register_module("image_encoder", Encoder(kChannels, base));
    mask_encoder_ = register_module("mask_encoder", Encoder(config_.mask_channels(), base));

    int64_t ch = base << 4;
    for (int k = 0; k < 4; ++k) {
        if (config_.attention_schedule[k] == Attention::Self)
            attention_[k] = register_module("attention" + std::to_string(k + 1), SelfAttention(ch));
        up_[k] = register_module(
            "up" + std::to_string(k + 1),
            nn::Sequential(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(ch, ch / 2, 4).stride(2).padding(1).bias(false)),
                           nn::BatchNorm2d(ch / 2), nn::ReLU(), ResidualBlock(ch / 2)));
        ch /= 2;
    }
    post_ = register_module("post", nn::Sequential(ResidualBlock(base), ResidualBlock(base), ResidualBlock(base),
                                                   ResidualBlock(base)));
    project_ = register_module("project", conv(base, kChannels, 1, 1, 0));
}

FeaturePyramid GeneratorImpl::encode_branch(const torch::Tensor& input, Branch which)
{
    return which == Branch::Image ? image_encoder_->forward(input) : mask_encoder_->forward(input);
}

torch::Tensor GeneratorImpl::decode(const FeaturePyramid& condition, const FeaturePyramid& mask)
{
    torch::Tensor h = condition.levels[3];
    for (int k = 0; k < 4; ++k) {
        const auto& guide = mask.levels[3 - k];
        if (config_.attention_schedule[k] == Attention::Self) {
            auto attended = attention_[k]->forward(guide);
            if (h.sizes() != attended.sizes())
                throw ShapeMismatch("decode: decoder/mask features disagree at block " + std::to_string(k + 1));
            h = h * attended;
        } else {
            h = sigmoid_gate(h, guide);
        }
        h = up_[k]->forward(h);
    }
    return torch::tanh(project_(post_->forward(h)));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& condition, const torch::Tensor& masks)
{
    if (condition.dim() != 4 || masks.dim() != 4 || condition.size(0) != masks.size(0))
        throw ShapeMismatch("generator expects batched condition and masks with equal N");
    auto cond = encode_branch(condition, Branch::Image);
    auto guide = encode_branch(masks, Branch::Mask);
    return decode(cond, guide);
}

TensorImage generator_forward(Generator& generator, const TensorImage& condition, const TensorImage& masks)
{
    if (condition.dim() == 3 && masks.dim() == 3)
        return generator->forward(condition.unsqueeze(0), masks.unsqueeze(0)).squeeze(0);
    return generator->forward(condition, masks);
}

int64_t parameter_count(const torch::nn::Module& module)
{
    int64_t total = 0;
    for (const auto& p : module.parameters())
        total += p.numel();
    return total;
}

} // namespace fast
