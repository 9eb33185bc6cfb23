#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fast/common.hpp"

namespace fast {

class PairedDataset;

// All metric functions take images in [0, 1], shaped (C, H, W) or (N, C, H, W), and keep the
// autograd graph so the loss module can reuse them.

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// 64 / 2^4 = 4 < 11, so only three scales fit the 11x11 window at 64x256. Wang's first three
// weights (0.0448, 0.2856, 0.3001), renormalized to sum to one.
inline constexpr int kMsSsimScales = 3;
inline constexpr std::array<double, kMsSsimScales> kMsSsimWeights{0.0448 / 0.6305, 0.2856 / 0.6305, 0.3001 / 0.6305};

/// Normalized 1-D Gaussian taps.
torch::Tensor gaussian_window(int size = kSsimWindow, double sigma = kSsimSigma,
                              torch::Dtype dtype = torch::kDouble);

struct SsimTerms {
    torch::Tensor ssim; ///< (N, C) mean SSIM over valid window positions
    torch::Tensor cs;   ///< (N, C) mean contrast-structure term
};
SsimTerms ssim_terms(const torch::Tensor& a, const torch::Tensor& b);

torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b);
torch::Tensor ms_ssim_tensor(const torch::Tensor& a, const torch::Tensor& b);

double mse(const torch::Tensor& a, const torch::Tensor& b);
double psnr_from_mse(double mse_value);
double psnr(const torch::Tensor& a, const torch::Tensor& b);
double ssim(const torch::Tensor& a, const torch::Tensor& b);
double ms_ssim(const torch::Tensor& a, const torch::Tensor& b);

// ---------------------------------------------------------------------------
// LPIPS
// ---------------------------------------------------------------------------

// SqueezeNet 1.1 trunk with the seven LPIPS tap points and learned 1x1 linear heads.
class LpipsNetImpl : public torch::nn::Module {
public:
    LpipsNetImpl();
    /// a, b in [-1, 1], (N, 3, H, W). Returns (N) distances.
    torch::Tensor forward(const torch::Tensor& a, const torch::Tensor& b);

private:
    std::vector<torch::nn::Sequential> slices_;
    std::vector<torch::nn::Conv2d> lins_;
    torch::Tensor shift_, scale_;
};
TORCH_MODULE(LpipsNet);

class Lpips {
public:
    static constexpr const char* kBackbone = "squeezenet1_1/lpips-v0.1";

    // Throws BackboneUnavailable when the weight archive is missing or unreadable.
    static Lpips load(const std::filesystem::path& weights);
    explicit Lpips(LpipsNet net) : net_(std::move(net)) { net_->eval(); }

    /// a, b in [0, 1], (3, H, W).
    double distance(const torch::Tensor& a, const torch::Tensor& b) const;

private:
    mutable LpipsNet net_;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MetricReport {
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double ms_ssim = 0.0;
    std::optional<double> lpips;  ///< absent when no backbone weights are configured
    int64_t n_samples = 0;
    std::string lpips_backbone;
};

nlohmann::json to_report_json(const MetricReport& report);

struct SampleMetrics {
    double mse, psnr_db, ssim, ms_ssim;
    std::optional<double> lpips;
};
SampleMetrics evaluate_pair(const TensorImage& generated, const TensorImage& truth, const Lpips* lpips);

/// Compares <generated_dir>/<id>.png against each sample's target image I_B.
MetricReport evaluate_pairs(const PairedDataset& dataset, const std::filesystem::path& generated_dir,
                            const Lpips* lpips = nullptr);

} // namespace fast
