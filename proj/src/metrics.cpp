#include "fast/metrics.hpp"

#include <cmath>

#include "fast/data_synth.hpp"
#include "fast/image_io.hpp"

namespace fast {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor gaussian_window(int size, double sigma, torch::Dtype dtype)
{
    auto x = torch::arange(size, torch::kDouble) - (size - 1) / 2.0;
    auto g = torch::exp(-(x * x) / (2.0 * sigma * sigma));
    return (g / g.sum()).to(dtype);
}

static torch::Tensor batched(const torch::Tensor& t)
{
    if (t.dim() == 3)
        return t.unsqueeze(0);
    if (t.dim() == 4)
        return t;
    throw ShapeMismatch("expected (C, H, W) or (N, C, H, W), got " + c10::str(t.sizes()));
}

// Depthwise separable Gaussian filter without padding.
static torch::Tensor gaussian_filter(const torch::Tensor& x, const torch::Tensor& g)
{
    const int64_t c = x.size(1), k = g.size(0);
    auto gh = g.view({1, 1, 1, k}).expand({c, 1, 1, k});
    auto gv = g.view({1, 1, k, 1}).expand({c, 1, k, 1});
    auto y = F::conv2d(x, gh, F::Conv2dFuncOptions().groups(c));
    return F::conv2d(y, gv, F::Conv2dFuncOptions().groups(c));
}

SsimTerms ssim_terms(const torch::Tensor& a_in, const torch::Tensor& b_in)
{
    auto a = batched(a_in), b = batched(b_in);
    if (a.sizes() != b.sizes())
        throw ShapeMismatch("ssim: " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
    if (a.size(2) < kSsimWindow || a.size(3) < kSsimWindow)
        throw ShapeMismatch("ssim: images smaller than the 11x11 window");
    auto g = gaussian_window(kSsimWindow, kSsimSigma, a.scalar_type()).to(a.device());
    const double c1 = std::pow(kSsimK1, 2), c2 = std::pow(kSsimK2, 2);

    auto mu_a = gaussian_filter(a, g), mu_b = gaussian_filter(b, g);
    auto mu_aa = mu_a * mu_a, mu_bb = mu_b * mu_b, mu_ab = mu_a * mu_b;
    auto var_a = gaussian_filter(a * a, g) - mu_aa;
    auto var_b = gaussian_filter(b * b, g) - mu_bb;
    auto cov = gaussian_filter(a * b, g) - mu_ab;

    auto cs_map = (2.0 * cov + c2) / (var_a + var_b + c2);
    auto ssim_map = ((2.0 * mu_ab + c1) / (mu_aa + mu_bb + c1)) * cs_map;
    return {ssim_map.mean({2, 3}), cs_map.mean({2, 3})};
}

torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b) { return ssim_terms(a, b).ssim.mean(); }

torch::Tensor ms_ssim_tensor(const torch::Tensor& a_in, const torch::Tensor& b_in)
{
    auto a = batched(a_in), b = batched(b_in);
    // Terms are clamped away from zero before the fractional powers; this keeps gradients finite.
    constexpr double floor = 1e-6;
    torch::Tensor product;
    for (int s = 0; s < kMsSsimScales; ++s) {
        auto terms = ssim_terms(a, b);
        const bool last = s == kMsSsimScales - 1;
        auto factor = (last ? terms.ssim : terms.cs).clamp_min(floor).pow(kMsSsimWeights[s]);
        product = product.defined() ? product * factor : factor;
        if (!last) {
            a = F::avg_pool2d(a, F::AvgPool2dFuncOptions(2));
            b = F::avg_pool2d(b, F::AvgPool2dFuncOptions(2));
        }
    }
    return product.mean();
}

double mse(const torch::Tensor& a, const torch::Tensor& b)
{
    if (a.sizes() != b.sizes())
        throw ShapeMismatch("mse: " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
    const torch::Tensor diff = a.to(torch::kDouble) - b.to(torch::kDouble);
    const torch::Tensor d = (diff * diff).contiguous().cpu();
    if (d.numel() == 0)
        return 0.0;
    const double* p = d.data_ptr<double>();
    long double sum = 0.0L, carry = 0.0L;
    for (int64_t i = 0; i < d.numel(); ++i) {
        const long double v = p[i], t = sum + v;
        carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    return static_cast<double>((sum + carry) / static_cast<long double>(d.numel()));
}

double psnr_from_mse(double mse_value)
{
    if (mse_value < 1e-10)
        return 100.0;
    return 10.0 * std::log10(1.0 / mse_value);
}

double psnr(const torch::Tensor& a, const torch::Tensor& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const torch::Tensor& a, const torch::Tensor& b)
{
    torch::NoGradGuard no_grad;
    return ssim_tensor(a.to(torch::kDouble), b.to(torch::kDouble)).item<double>();
}

double ms_ssim(const torch::Tensor& a, const torch::Tensor& b)
{
    torch::NoGradGuard no_grad;
    return ms_ssim_tensor(a.to(torch::kDouble), b.to(torch::kDouble)).item<double>();
}

// ---------------------------------------------------------------------------
// LPIPS
// ---------------------------------------------------------------------------

namespace {

class FireImpl : public nn::Module {
public:
    FireImpl(int64_t in, int64_t squeeze, int64_t expand1, int64_t expand3)
    {
        squeeze_ = register_module("squeeze", nn::Conv2d(nn::Conv2dOptions(in, squeeze, 1)));
        expand1_ = register_module("expand1x1", nn::Conv2d(nn::Conv2dOptions(squeeze, expand1, 1)));
        expand3_ = register_module("expand3x3", nn::Conv2d(nn::Conv2dOptions(squeeze, expand3, 3).padding(1)));
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        auto s = torch::relu(squeeze_(x));
        return torch::cat({torch::relu(expand1_(s)), torch::relu(expand3_(s))}, 1);
    }

private:
    nn::Conv2d squeeze_{nullptr}, expand1_{nullptr}, expand3_{nullptr};
};
TORCH_MODULE(Fire);

nn::MaxPool2d pool() { return nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).ceil_mode(true)); }

} // namespace

LpipsNetImpl::LpipsNetImpl()
{
    slices_ = {
        nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 64, 3).stride(2)), nn::ReLU()),
        nn::Sequential(pool(), Fire(64, 16, 64, 64), Fire(128, 16, 64, 64)),
        nn::Sequential(pool(), Fire(128, 32, 128, 128), Fire(256, 32, 128, 128)),
        nn::Sequential(pool(), Fire(256, 48, 192, 192)),
        nn::Sequential(Fire(384, 48, 192, 192)),
        nn::Sequential(Fire(384, 64, 256, 256)),
        nn::Sequential(Fire(512, 64, 256, 256)),
    };
    const int64_t channels[7] = {64, 128, 256, 384, 384, 512, 512};
    for (size_t i = 0; i < slices_.size(); ++i) {
        register_module("slice" + std::to_string(i + 1), slices_[i]);
        lins_.push_back(register_module("lin" + std::to_string(i),
                                        nn::Conv2d(nn::Conv2dOptions(channels[i], 1, 1).bias(false))));
    }
    shift_ = register_buffer("shift", torch::tensor({-0.030, -0.088, -0.188}).view({1, 3, 1, 1}));
    scale_ = register_buffer("scale", torch::tensor({0.458, 0.448, 0.450}).view({1, 3, 1, 1}));
}

torch::Tensor LpipsNetImpl::forward(const torch::Tensor& a, const torch::Tensor& b)
{
    auto ha = (a - shift_) / scale_, hb = (b - shift_) / scale_;
    torch::Tensor total;
    for (size_t i = 0; i < slices_.size(); ++i) {
        ha = slices_[i]->forward(ha);
        hb = slices_[i]->forward(hb);
        auto na = ha / (ha.pow(2).sum(1, true).sqrt() + 1e-10);
        auto nb = hb / (hb.pow(2).sum(1, true).sqrt() + 1e-10);
        auto d = lins_[i]((na - nb).pow(2)).mean({1, 2, 3});
        total = total.defined() ? total + d : d;
    }
    return total;
}

Lpips Lpips::load(const std::filesystem::path& weights)
{
    std::error_code ec;
    if (weights.empty() || !std::filesystem::is_regular_file(weights, ec))
        throw BackboneUnavailable("LPIPS weights not found at '" + weights.string() + "'");
    LpipsNet net;
    try {
        torch::load(net, weights.string());
    } catch (const c10::Error& e) {
        throw BackboneUnavailable("cannot read LPIPS weights '" + weights.string() + "': " + e.what_without_backtrace());
    }
    return Lpips(net);
}

double Lpips::distance(const torch::Tensor& a, const torch::Tensor& b) const
{
    torch::NoGradGuard no_grad;
    auto x = to_signed(batched(a).to(torch::kFloat)), y = to_signed(batched(b).to(torch::kFloat));
    return net_->forward(x, y).mean().item<double>();
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json to_report_json(const MetricReport& r)
{
    nlohmann::json j{{"mse", r.mse},
                     {"psnr", r.psnr_db},
                     {"ssim", r.ssim},
                     {"ms_ssim", r.ms_ssim},
                     {"n_samples", r.n_samples},
                     {"msssim_scales", kMsSsimScales},
                     {"msssim_weights", kMsSsimWeights}};
    j["lpips"] = r.lpips ? nlohmann::json(*r.lpips) : nlohmann::json(nullptr);
    j["lpips_backbone"] = r.lpips ? nlohmann::json(r.lpips_backbone) : nlohmann::json(nullptr);
    return j;
}

SampleMetrics evaluate_pair(const TensorImage& generated, const TensorImage& truth, const Lpips* lpips)
{
    auto g = to_unit(generated.to(torch::kDouble)).clamp(0, 1);
    auto t = to_unit(truth.to(torch::kDouble)).clamp(0, 1);
    SampleMetrics m{};
    m.mse = mse(g, t);
    m.psnr_db = psnr_from_mse(m.mse);
    m.ssim = ssim(g, t);
    m.ms_ssim = ms_ssim(g, t);
    if (lpips)
        m.lpips = lpips->distance(g, t);
    return m;
}

MetricReport evaluate_pairs(const PairedDataset& dataset, const std::filesystem::path& generated_dir,
                            const Lpips* lpips)
{
    if (dataset.empty())
        throw EmptyDataset("evaluate_pairs: empty dataset");
    MetricReport report;
    double lp = 0.0;
    for (int64_t i = 0; i < dataset.size(); ++i) {
        const auto& rec = dataset.record(i);
        auto generated = read_image(generated_dir / (rec.id + ".png"));
        const auto& truth = dataset.at(i).image_tgt;
        if (generated.sizes() != truth.sizes())
            generated = resize(generated, truth.size(1), truth.size(2));
        auto m = evaluate_pair(generated, truth, lpips);
        report.mse += m.mse;
        report.psnr_db += m.psnr_db;
        report.ssim += m.ssim;
        report.ms_ssim += m.ms_ssim;
        if (m.lpips)
            lp += *m.lpips;
    }
    const double n = static_cast<double>(dataset.size());
    report.n_samples = dataset.size();
    report.mse /= n;
    report.psnr_db /= n;
    report.ssim /= n;
    report.ms_ssim /= n;
    if (lpips) {
        report.lpips = lp / n;
        report.lpips_backbone = Lpips::kBackbone;
    }
    return report;
}

} // namespace fast
