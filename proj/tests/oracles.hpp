#pragma once

// Reference implementations written directly from the textbook definitions, with plain loops and
// no tensor library calls, for cross-checking the vectorized code.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <torch/torch.h>

namespace fast::oracle {

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// (C, H, W) tensor to per-channel planes.
inline std::vector<Plane> planes(const torch::Tensor& t)
{
    auto d = t.to(torch::kDouble).contiguous();
    const int c = static_cast<int>(d.size(0)), h = static_cast<int>(d.size(1)), w = static_cast<int>(d.size(2));
    const double* p = d.data_ptr<double>();
    std::vector<Plane> out(c);
    for (int k = 0; k < c; ++k)
        out[k] = {h, w, std::vector<double>(p + static_cast<size_t>(k) * h * w, p + static_cast<size_t>(k + 1) * h * w)};
    return out;
}

// 11x11 Gaussian, sigma 1.5, built as a full 2-D kernel.
inline std::array<std::array<double, 11>, 11> window2d()
{
    std::array<std::array<double, 11>, 11> k{};
    double sum = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            const double dy = i - 5, dx = j - 5;
            k[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            sum += k[i][j];
        }
    for (auto& row : k)
        for (double& x : row)
            x /= sum;
    return k;
}

struct SsimCs {
    double ssim, cs;
};

// Mean SSIM and contrast-structure over every valid 11x11 window position.
inline SsimCs ssim_plane(const Plane& a, const Plane& b)
{
    static const auto k = window2d();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double s_sum = 0.0, cs_sum = 0.0;
    int count = 0;
    for (int y = 0; y + 11 <= a.h; ++y)
        for (int x = 0; x + 11 <= a.w; ++x) {
            double ma = 0, mb = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    ma += k[i][j] * a.at(y + i, x + j);
                    mb += k[i][j] * b.at(y + i, x + j);
                }
            double va = 0, vb = 0, cov = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double da = a.at(y + i, x + j) - ma, db = b.at(y + i, x + j) - mb;
                    va += k[i][j] * da * da;
                    vb += k[i][j] * db * db;
                    cov += k[i][j] * da * db;
                }
            const double cs = (2 * cov + c2) / (va + vb + c2);
            s_sum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
            cs_sum += cs;
            ++count;
        }
    return {s_sum / count, cs_sum / count};
}

inline Plane halve(const Plane& p)
{
    Plane out{p.h / 2, p.w / 2, {}};
    out.v.resize(static_cast<size_t>(out.h) * out.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.v[static_cast<size_t>(y) * out.w + x] =
                0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y + 1, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x + 1));
    return out;
}

// Channel-averaged SSIM of two (C, H, W) images in [0, 1].
inline double ssim(const torch::Tensor& a, const torch::Tensor& b)
{
    auto pa = planes(a), pb = planes(b);
    double sum = 0.0;
    for (size_t c = 0; c < pa.size(); ++c)
        sum += ssim_plane(pa[c], pb[c]).ssim;
    return sum / static_cast<double>(pa.size());
}

// Three-scale MS-SSIM with Wang's first three exponents renormalized to sum to one. Per channel:
// cs at scales 1 and 2, full SSIM at scale 3, each floored at 1e-6; channels averaged last.
inline double ms_ssim(const torch::Tensor& a, const torch::Tensor& b)
{
    const double wang[3] = {0.0448, 0.2856, 0.3001};
    const double total = wang[0] + wang[1] + wang[2];
    auto pa = planes(a), pb = planes(b);
    double sum = 0.0;
    for (size_t c = 0; c < pa.size(); ++c) {
        Plane x = pa[c], y = pb[c];
        double prod = 1.0;
        for (int s = 0; s < 3; ++s) {
            const auto t = ssim_plane(x, y);
            prod *= std::pow(std::max(s == 2 ? t.ssim : t.cs, 1e-6), wang[s] / total);
            x = halve(x);
            y = halve(y);
        }
        sum += prod;
    }
    return sum / static_cast<double>(pa.size());
}

inline double relative_error(double analytic, double numeric);

struct GradientProbe {
    int64_t index;
    double analytic, numeric;
};

// Compares `grad` (the analytic gradient of f at x) with central differences of step h at n random
// coordinates of x. A coordinate whose forward and backward one-sided differences disagree by more
// than `kink_tolerance` (relative) has a non-differentiable point (ReLU, max-pool or |.| kink)
// within h; the central difference there is off by half that disagreement, so the coordinate is
// redrawn. Returns fewer than n probes if `max_draws` is exhausted.
template <typename F, typename Rng>
std::vector<GradientProbe> gradient_probes(F&& f, torch::Tensor x, const torch::Tensor& grad, Rng& rng, int n = 5,
                                           double h = 1e-3, double kink_tolerance = 1e-2, int max_draws = 500)
{
    x = x.detach().clone().contiguous();
    auto flat = x.view({-1});
    auto g = grad.contiguous().view({-1});
    const double base = f(x);
    std::vector<GradientProbe> out;
    for (int draw = 0; draw < max_draws && static_cast<int>(out.size()) < n; ++draw) {
        const int64_t index = static_cast<int64_t>(rng() % static_cast<uint64_t>(flat.numel()));
        const double orig = flat[index].template item<double>();
        flat[index] = orig + h;
        const double up = f(x);
        flat[index] = orig - h;
        const double down = f(x);
        flat[index] = orig;
        const double forward = (up - base) / h, backward = (base - down) / h;
        if (relative_error(forward, backward) > kink_tolerance && std::abs(forward - backward) > 1e-9)
            continue;
        out.push_back({index, g[index].template item<double>(), (up - down) / (2.0 * h)});
    }
    return out;
}

inline double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

} // namespace fast::oracle
