#include "fast/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <opencv2/freetype.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fast/image_io.hpp"

namespace fast {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// StyleSpec
// ---------------------------------------------------------------------------

void StyleSpec::validate() const
{
    if (glyph_height_px < 8 || glyph_height_px > 56)
        throw InvalidArgument("glyph_height_px must be in [8, 56], got " + std::to_string(glyph_height_px));
    for (int c : fill_rgb)
        if (c < 0 || c > 255)
            throw InvalidArgument("fill_rgb components must be in [0, 255]");
    if (!std::isfinite(rotation_deg) || std::abs(rotation_deg) > 15.0)
        throw InvalidArgument("rotation_deg must be in [-15, 15]");
    if (!std::isfinite(curve_amplitude_px) || curve_amplitude_px < 0.0 || curve_amplitude_px > 8.0)
        throw InvalidArgument("curve_amplitude_px must be in [0, 8]");
    for (double v : perspective_warp)
        if (!std::isfinite(v))
            throw InvalidArgument("perspective_warp must be finite");
}

void to_json(json& j, const StyleSpec& s)
{
    j = json{{"font_id", s.font_id},
             {"glyph_height_px", s.glyph_height_px},
             {"fill_rgb", s.fill_rgb},
             {"rotation_deg", s.rotation_deg},
             {"curve_amplitude_px", s.curve_amplitude_px},
             {"perspective_warp", s.perspective_warp},
             {"background_id", s.background_id}};
}

void from_json(const json& j, StyleSpec& s)
{
    j.at("font_id").get_to(s.font_id);
    j.at("glyph_height_px").get_to(s.glyph_height_px);
    j.at("fill_rgb").get_to(s.fill_rgb);
    j.at("rotation_deg").get_to(s.rotation_deg);
    j.at("curve_amplitude_px").get_to(s.curve_amplitude_px);
    j.at("perspective_warp").get_to(s.perspective_warp);
    j.at("background_id").get_to(s.background_id);
}

// ---------------------------------------------------------------------------
// Fonts
// ---------------------------------------------------------------------------

namespace {

class HersheyFont final : public Font {
public:
    HersheyFont(int face, bool bold) : face_(face), bold_(bold)
    {
        cap_height_ = cv::getTextSize("H", face_, 1.0, 1, nullptr).height;
    }

    cv::Size measure(const std::string& text, int pixel_height, int& baseline) const override
    {
        return cv::getTextSize(text, face_, scale(pixel_height), thickness(pixel_height), &baseline);
    }

    void draw(cv::Mat& canvas, const std::string& text, cv::Point origin, int pixel_height) const override
    {
        cv::putText(canvas, text, origin, face_, scale(pixel_height), cv::Scalar(255), thickness(pixel_height),
                    cv::LINE_AA);
    }

private:
    double scale(int h) const { return static_cast<double>(h) / cap_height_; }
    int thickness(int h) const { return std::max(1, static_cast<int>(std::lround(h / (bold_ ? 7.0 : 14.0)))); }

    int face_;
    bool bold_;
    int cap_height_;
};

class TrueTypeFont final : public Font {
public:
    explicit TrueTypeFont(const fs::path& file) : ft_(cv::freetype::createFreeType2())
    {
        ft_->loadFontData(file.string(), 0);
        int baseline = 0;
        cap_ratio_ = static_cast<double>(ft_->getTextSize("H", 100, -1, &baseline).height) / 100.0;
        if (cap_ratio_ <= 0)
            throw MissingFont("font has no usable glyphs: " + file.string());
    }

    cv::Size measure(const std::string& text, int pixel_height, int& baseline) const override
    {
        std::lock_guard lock(mutex_);
        return ft_->getTextSize(text, em(pixel_height), -1, &baseline);
    }

    void draw(cv::Mat& canvas, const std::string& text, cv::Point origin, int pixel_height) const override
    {
        std::lock_guard lock(mutex_);
        cv::Mat rgb;
        cv::cvtColor(canvas, rgb, cv::COLOR_GRAY2BGR);
        ft_->putText(rgb, text, origin, em(pixel_height), cv::Scalar(255, 255, 255), -1, cv::LINE_AA, true);
        cv::extractChannel(rgb, canvas, 0);
    }

private:
    int em(int pixel_height) const { return std::max(1, static_cast<int>(std::lround(pixel_height / cap_ratio_))); }

    cv::Ptr<cv::freetype::FreeType2> ft_;
    double cap_ratio_ = 1.0;
    mutable std::mutex mutex_;
};

const std::vector<std::pair<std::string, int>>& hershey_faces()
{
    static const std::vector<std::pair<std::string, int>> faces = {
        {"simplex", cv::FONT_HERSHEY_SIMPLEX},
        {"plain", cv::FONT_HERSHEY_PLAIN},
        {"duplex", cv::FONT_HERSHEY_DUPLEX},
        {"complex", cv::FONT_HERSHEY_COMPLEX},
        {"triplex", cv::FONT_HERSHEY_TRIPLEX},
        {"complex_small", cv::FONT_HERSHEY_COMPLEX_SMALL},
        {"script_simplex", cv::FONT_HERSHEY_SCRIPT_SIMPLEX},
        {"script_complex", cv::FONT_HERSHEY_SCRIPT_COMPLEX},
    };
    return faces;
}

} // namespace

struct FontLibrary::Impl {
    std::map<std::string, std::unique_ptr<Font>> fonts;
    std::map<std::string, fs::path> registered;     // stem -> file, loaded lazily
    mutable std::map<std::string, std::unique_ptr<Font>> lazy;
    mutable std::mutex mutex;
};

FontLibrary::FontLibrary() : impl_(std::make_unique<Impl>())
{
    for (const auto& [name, face] : hershey_faces())
        for (bool italic : {false, true})
            for (bool bold : {false, true}) {
                std::string id = "hershey-" + name + (italic ? "-italic" : "") + (bold ? "-bold" : "");
                impl_->fonts.emplace(id, std::make_unique<HersheyFont>(face | (italic ? cv::FONT_ITALIC : 0), bold));
            }
}

FontLibrary::~FontLibrary() = default;
FontLibrary::FontLibrary(FontLibrary&&) noexcept = default;
FontLibrary& FontLibrary::operator=(FontLibrary&&) noexcept = default;

FontLibrary FontLibrary::with_system_fonts(const std::vector<fs::path>& font_dirs)
{
    FontLibrary lib;
    for (const auto& dir : font_dirs) {
        std::error_code ec;
        if (!fs::is_directory(dir, ec))
            continue;
        for (const auto& entry : fs::recursive_directory_iterator(dir, ec)) {
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (entry.is_regular_file() && (ext == ".ttf" || ext == ".otf"))
                lib.register_file(entry.path());
        }
    }
    return lib;
}

void FontLibrary::register_file(const fs::path& ttf)
{
    impl_->registered.emplace(ttf.stem().string(), ttf);
}

const Font& FontLibrary::resolve(const std::string& font_id) const
{
    if (auto it = impl_->fonts.find(font_id); it != impl_->fonts.end())
        return *it->second;

    fs::path file;
    if (font_id.rfind("ttf:", 0) == 0)
        file = font_id.substr(4);
    else if (auto it = impl_->registered.find(font_id); it != impl_->registered.end())
        file = it->second;
    else
        throw MissingFont("unknown font id '" + font_id + "'");

    std::lock_guard lock(impl_->mutex);
    if (auto it = impl_->lazy.find(font_id); it != impl_->lazy.end())
        return *it->second;
    std::error_code ec;
    if (!fs::is_regular_file(file, ec))
        throw MissingFont("font file not found: " + file.string());
    try {
        auto [it, _] = impl_->lazy.emplace(font_id, std::make_unique<TrueTypeFont>(file));
        return *it->second;
    } catch (const cv::Exception& e) {
        throw MissingFont("cannot load font " + file.string() + ": " + e.what());
    }
}

std::vector<std::string> FontLibrary::ids() const
{
    std::vector<std::string> out;
    for (const auto& [id, _] : impl_->fonts)
        out.push_back(id);
    for (const auto& [id, _] : impl_->registered)
        out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

const std::string& FontLibrary::fixed_font_id()
{
    static const std::string id = "hershey-simplex";
    return id;
}

// ---------------------------------------------------------------------------
// Layout and rasterization
// ---------------------------------------------------------------------------

static void check_text(const std::string& text)
{
    if (text.empty() || text.size() > 20)
        throw InvalidArgument("text must have 1 to 20 characters, got " + std::to_string(text.size()));
    bool any_visible = false;
    for (unsigned char c : text) {
        if (c < 0x20 || c > 0x7e)
            throw InvalidArgument("text must be printable Latin (ASCII) characters");
        any_visible |= c != ' ';
    }
    if (!any_visible)
        throw InvalidArgument("text must contain a visible character");
}

TextLayout layout_text(const Font& font, const std::string& text, int pixel_height)
{
    int baseline = 0;
    cv::Size size = font.measure(text, pixel_height, baseline);
    const int width = size.width;
    const int height = size.height + baseline;
    if (width > kWidth - 4 || height > kHeight - 2)
        throw GlyphOverflow("text '" + text + "' at " + std::to_string(pixel_height) + " px does not fit the canvas");
    TextLayout layout;
    layout.origin = cv::Point((static_cast<int>(kWidth) - width) / 2,
                              (static_cast<int>(kHeight) - height) / 2 + size.height);
    layout.box = cv::Rect(layout.origin.x, layout.origin.y - size.height, width, height);
    return layout;
}

static bool ink_touches_border(const cv::Mat& alpha)
{
    const int h = alpha.rows, w = alpha.cols;
    return cv::countNonZero(alpha.row(0)) || cv::countNonZero(alpha.row(h - 1)) ||
           cv::countNonZero(alpha.col(0)) || cv::countNonZero(alpha.col(w - 1));
}

cv::Mat rasterize_flat(const Font& font, const std::string& text, int pixel_height)
{
    check_text(text);
    TextLayout layout = layout_text(font, text, pixel_height);
    cv::Mat canvas = cv::Mat::zeros(static_cast<int>(kHeight), static_cast<int>(kWidth), CV_8UC1);
    font.draw(canvas, text, layout.origin, pixel_height);
    if (ink_touches_border(canvas))
        throw GlyphOverflow("text '" + text + "' touches the canvas border");
    return canvas;
}

TensorImage render_fixed_mask(const std::string& text)
{
    static const HersheyFont fixed(cv::FONT_HERSHEY_SIMPLEX, false);
    check_text(text);
    for (int h = 32; h >= 8; --h) {
        try {
            cv::Mat alpha = rasterize_flat(fixed, text, h);
            auto t = torch::from_blob(alpha.data, {alpha.rows, alpha.cols}, torch::kUInt8).to(torch::kFloat) / 255.0;
            return binary_mask_from_alpha(t);
        } catch (const GlyphOverflow&) {
        }
    }
    throw GlyphOverflow("text '" + text + "' cannot be rendered in the fixed font");
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

namespace {

struct Warp {
    double cx, cy, cos_t, sin_t;
    double amplitude, x0, x1;
    bool has_homography = false;
    cv::Matx33d fwd = cv::Matx33d::eye();
    cv::Matx33d inv = cv::Matx33d::eye();

    double curve(double x) const
    {
        if (amplitude == 0.0 || x1 <= x0)
            return 0.0;
        double t = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
        return amplitude * std::sin(std::numbers::pi * t);
    }

    cv::Point2d rotate(cv::Point2d p) const
    {
        double dx = p.x - cx, dy = p.y - cy;
        return {cx + cos_t * dx - sin_t * dy, cy + sin_t * dx + cos_t * dy};
    }

    cv::Point2d unrotate(cv::Point2d p) const
    {
        double dx = p.x - cx, dy = p.y - cy;
        return {cx + cos_t * dx + sin_t * dy, cy - sin_t * dx + cos_t * dy};
    }

    static cv::Point2d project(const cv::Matx33d& m, cv::Point2d p)
    {
        cv::Vec3d v = m * cv::Vec3d(p.x, p.y, 1.0);
        return {v[0] / v[2], v[1] / v[2]};
    }

    cv::Point2d forward(cv::Point2d p) const
    {
        cv::Point2d r = rotate(p);
        cv::Point2d c(r.x, r.y - curve(r.x));
        return has_homography ? project(fwd, c) : c;
    }

    cv::Point2d backward(cv::Point2d q) const
    {
        cv::Point2d c = has_homography ? project(inv, q) : q;
        cv::Point2d r(c.x, c.y + curve(c.x));
        return unrotate(r);
    }
};

} // namespace

torch::Tensor apply_geometric_transform(const torch::Tensor& canvas, const StyleSpec& style)
{
    if (canvas.dim() != 3)
        throw ShapeMismatch("apply_geometric_transform: expected (C, H, W), got " + c10::str(canvas.sizes()));
    const int64_t channels = canvas.size(0), height = canvas.size(1), width = canvas.size(2);
    auto src = canvas.detach().to(torch::kCPU, torch::kDouble).contiguous();
    const double* in = src.data_ptr<double>();
    const double* alpha = in + (channels - 1) * height * width;

    // Ink bounding box of the alpha channel.
    int64_t ix0 = width, ix1 = -1, iy0 = height, iy1 = -1;
    for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x)
            if (alpha[y * width + x] > 0.0) {
                ix0 = std::min(ix0, x), ix1 = std::max(ix1, x);
                iy0 = std::min(iy0, y), iy1 = std::max(iy1, y);
            }
    const bool has_ink = ix1 >= 0;

    Warp warp{};
    warp.cx = (width - 1) / 2.0;
    warp.cy = (height - 1) / 2.0;
    const double theta = style.rotation_deg * std::numbers::pi / 180.0;
    warp.cos_t = std::cos(theta);
    warp.sin_t = std::sin(theta);
    warp.amplitude = style.curve_amplitude_px;
    warp.x0 = warp.x1 = 0.0;
    if (has_ink) {
        double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
        for (auto [x, y] : {std::pair{ix0, iy0}, {ix1, iy0}, {ix1, iy1}, {ix0, iy1}}) {
            auto r = warp.rotate({static_cast<double>(x), static_cast<double>(y)});
            lo = std::min(lo, r.x), hi = std::max(hi, r.x);
        }
        warp.x0 = lo;
        warp.x1 = hi;
    }
    warp.has_homography = std::any_of(style.perspective_warp.begin(), style.perspective_warp.end(),
                                      [](double v) { return v != 0.0; });
    if (warp.has_homography) {
        const double w1 = width - 1.0, h1 = height - 1.0;
        std::array<cv::Point2f, 4> from{cv::Point2f(0, 0), cv::Point2f(w1, 0), cv::Point2f(w1, h1), cv::Point2f(0, h1)};
        std::array<cv::Point2f, 4> to;
        for (int i = 0; i < 4; ++i)
            to[i] = from[i] + cv::Point2f(static_cast<float>(style.perspective_warp[2 * i]),
                                          static_cast<float>(style.perspective_warp[2 * i + 1]));
        cv::Mat m = cv::getPerspectiveTransform(from.data(), to.data(), cv::DECOMP_LU);
        warp.fwd = cv::Matx33d(m);
        warp.inv = warp.fwd.inv();
    }

    if (has_ink) {
        // Trace the ink box outline through the forward map.
        auto inside = [&](cv::Point2d q) {
            return q.x >= 0.0 && q.x <= width - 1.0 && q.y >= 0.0 && q.y <= height - 1.0;
        };
        for (double x = static_cast<double>(ix0); x <= ix1; x += 0.5)
            for (double y : {static_cast<double>(iy0), static_cast<double>(iy1)})
                if (!inside(warp.forward({x, y})))
                    throw GlyphOverflow("transformed text leaves the canvas");
        for (double y = static_cast<double>(iy0); y <= iy1; y += 0.5)
            for (double x : {static_cast<double>(ix0), static_cast<double>(ix1)})
                if (!inside(warp.forward({x, y})))
                    throw GlyphOverflow("transformed text leaves the canvas");
    }

    auto dst = torch::zeros({channels, height, width}, torch::kDouble);
    double* out = dst.data_ptr<double>();
    const int64_t plane = height * width;
    for (int64_t y = 0; y < height; ++y) {
        for (int64_t x = 0; x < width; ++x) {
            cv::Point2d p = warp.backward({static_cast<double>(x), static_cast<double>(y)});
            const double fx = std::floor(p.x), fy = std::floor(p.y);
            const double ax = p.x - fx, ay = p.y - fy;
            const int64_t x0 = static_cast<int64_t>(fx), y0 = static_cast<int64_t>(fy);
            const double weights[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
            const int64_t xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int64_t ys[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int k = 0; k < 4; ++k) {
                if (weights[k] == 0.0 || xs[k] < 0 || xs[k] >= width || ys[k] < 0 || ys[k] >= height)
                    continue;
                const int64_t offset = ys[k] * width + xs[k];
                for (int64_t c = 0; c < channels; ++c)
                    out[c * plane + y * width + x] += weights[k] * in[c * plane + offset];
            }
        }
    }
    return dst.to(canvas.scalar_type());
}

// ---------------------------------------------------------------------------
// Compositing and pairing
// ---------------------------------------------------------------------------

std::pair<TensorImage, TensorImage> render_text_image(const std::string& text, const StyleSpec& style,
                                                      const TensorImage& background, const FontLibrary& fonts)
{
    check_text(text);
    expect_shape(background, {kChannels, kHeight, kWidth}, "render_text_image background");
    style.validate();
    const Font& font = fonts.resolve(style.font_id);

    cv::Mat flat = rasterize_flat(font, text, style.glyph_height_px);
    auto alpha = torch::from_blob(flat.data, {1, flat.rows, flat.cols}, torch::kUInt8).to(torch::kDouble) / 255.0;
    auto warped = apply_geometric_transform(alpha, style)[0].to(torch::kFloat);

    auto inside = warped > 0.5;
    auto effective = torch::where(inside, warped, torch::zeros_like(warped));
    auto fill = torch::tensor({style.fill_rgb[0], style.fill_rgb[1], style.fill_rgb[2]}, torch::kFloat)
                    .div(255.0)
                    .mul(2.0)
                    .sub(1.0)
                    .view({3, 1, 1});
    auto bg = background.to(torch::kFloat);
    TensorImage image = bg * (1.0 - effective) + fill * effective;
    TensorImage mask = binary_mask_from_alpha(warped);
    return {image.contiguous(), mask};
}

SceneTextSample make_paired_sample(const std::string& text_src, const std::string& text_tgt, const StyleSpec& style,
                                   const TensorImage& background, const FontLibrary& fonts)
{
    SceneTextSample s;
    std::tie(s.image_src, s.mask_src) = render_text_image(text_src, style, background, fonts);
    std::tie(s.image_tgt, s.mask_tgt) = render_text_image(text_tgt, style, background, fonts);
    s.mask_fixed = render_fixed_mask(text_tgt);
    s.text_src = text_src;
    s.text_tgt = text_tgt;
    s.style = style;
    return s;
}

double fill_contrast(const StyleSpec& style, const TensorImage& background)
{
    auto mean = to_unit(background.to(torch::kDouble)).mean({1, 2});
    double total = 0.0;
    for (int c = 0; c < 3; ++c)
        total += std::abs(style.fill_rgb[c] / 255.0 - mean[c].item<double>());
    return total / 3.0;
}

double mask_coverage(const TensorImage& mask)
{
    return (mask[0] > 0).to(torch::kDouble).mean().item<double>();
}

// ---------------------------------------------------------------------------
// Backgrounds
// ---------------------------------------------------------------------------

namespace {

uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64's raw output (std distributions are implementation-defined).
struct Rng {
    std::mt19937_64 engine;
    explicit Rng(uint64_t seed) : engine(seed) {}
    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int64_t integer(int64_t lo, int64_t hi) { return lo + static_cast<int64_t>(engine() % static_cast<uint64_t>(hi - lo + 1)); }
};

} // namespace

uint64_t sample_seed(uint64_t seed, uint64_t index)
{
    return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

TensorImage procedural_background(uint64_t index)
{
    Rng rng(splitmix64(index ^ 0x6a09e667f3bcc909ULL));
    const int64_t h = kHeight, w = kWidth;
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform();
        c1[c] = std::clamp(c0[c] + rng.uniform(-0.4, 0.4), 0.0, 1.0);
    }
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(angle), gy = std::sin(angle);
    struct Wave { double amp[3], fx, fy, phase; };
    Wave waves[3];
    for (auto& wv : waves) {
        for (double& a : wv.amp)
            a = rng.uniform(-0.12, 0.12);
        wv.fx = rng.uniform(0.5, 4.0);
        wv.fy = rng.uniform(0.25, 2.0);
        wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const double grain = rng.uniform(0.0, 0.04);

    auto out = torch::empty({3, h, w}, torch::kFloat);
    auto acc = out.accessor<float, 3>();
    const double half_diag = 0.5 * std::hypot(static_cast<double>(w), static_cast<double>(h));
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            const double t = std::clamp(0.5 + ((x - w / 2.0) * gx + (y - h / 2.0) * gy) / (2.0 * half_diag), 0.0, 1.0);
            const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
            const double noise = grain * (rng.uniform() - 0.5);
            for (int c = 0; c < 3; ++c) {
                double value = c0[c] + (c1[c] - c0[c]) * t + noise;
                for (const auto& wv : waves)
                    value += wv.amp[c] * std::sin(2.0 * std::numbers::pi * (wv.fx * u + wv.fy * v) + wv.phase);
                acc[c][y][x] = static_cast<float>(std::clamp(value, 0.0, 1.0) * 2.0 - 1.0);
            }
        }
    }
    return out;
}

BackgroundLibrary BackgroundLibrary::procedural(int count)
{
    std::vector<std::string> ids;
    ids.reserve(count);
    for (int i = 0; i < count; ++i)
        ids.push_back("proc:" + std::to_string(i));
    return BackgroundLibrary(std::move(ids));
}

BackgroundLibrary BackgroundLibrary::from_directory(const fs::path& dir)
{
    std::vector<std::string> ids;
    std::error_code ec;
    if (fs::is_directory(dir, ec)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (entry.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp"))
                ids.push_back("file:" + fs::absolute(entry.path()).string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return BackgroundLibrary(std::move(ids));
}

TensorImage BackgroundLibrary::load(const std::string& id)
{
    if (id.rfind("proc:", 0) == 0)
        return procedural_background(std::stoull(id.substr(5)));
    if (id.rfind("file:", 0) == 0) {
        cv::Mat m = cv::imread(id.substr(5), cv::IMREAD_COLOR);
        if (m.empty())
            throw InsufficientAssets("cannot read background " + id.substr(5));
        cv::Mat resized;
        cv::resize(m, resized, cv::Size(static_cast<int>(kWidth), static_cast<int>(kHeight)), 0, 0, cv::INTER_AREA);
        return from_bgr8(resized);
    }
    throw InvalidArgument("unknown background id '" + id + "'");
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

void to_json(json& j, const SynthRanges& r)
{
    j = json{{"glyph_height_min", r.glyph_height_min}, {"glyph_height_max", r.glyph_height_max},
             {"rotation_max_deg", r.rotation_max_deg}, {"curve_max_px", r.curve_max_px},
             {"perspective_max_px", r.perspective_max_px}, {"min_contrast", r.min_contrast},
             {"min_coverage", r.min_coverage}, {"max_coverage", r.max_coverage},
             {"max_attempts", r.max_attempts}};
}

void from_json(const json& j, SynthRanges& r)
{
    SynthRanges d;
    r.glyph_height_min = j.value("glyph_height_min", d.glyph_height_min);
    r.glyph_height_max = j.value("glyph_height_max", d.glyph_height_max);
    r.rotation_max_deg = j.value("rotation_max_deg", d.rotation_max_deg);
    r.curve_max_px = j.value("curve_max_px", d.curve_max_px);
    r.perspective_max_px = j.value("perspective_max_px", d.perspective_max_px);
    r.min_contrast = j.value("min_contrast", d.min_contrast);
    r.min_coverage = j.value("min_coverage", d.min_coverage);
    r.max_coverage = j.value("max_coverage", d.max_coverage);
    r.max_attempts = j.value("max_attempts", d.max_attempts);
}

void to_json(json& j, const ManifestRecord& r)
{
    j = json::object();
    if (r.style)
        j = *r.style;
    j["id"] = r.id;
    j["text_src"] = r.text_src;
    j["text_tgt"] = r.text_tgt;
    j["seed"] = r.seed;
    j["sample_seed"] = r.sample_seed;
}

void from_json(const json& j, ManifestRecord& r)
{
    j.at("id").get_to(r.id);
    r.text_src = j.value("text_src", std::string());
    j.at("text_tgt").get_to(r.text_tgt);
    r.seed = j.value("seed", uint64_t{0});
    r.sample_seed = j.value("sample_seed", uint64_t{0});
    if (j.contains("font_id"))
        r.style = j.get<StyleSpec>();
    else
        r.style.reset();
}

SceneTextSample sample_scene_text(uint64_t seed, uint64_t index, const std::vector<std::string>& font_ids,
                                  const BackgroundLibrary& backgrounds, const FontLibrary& fonts,
                                  const SynthRanges& ranges)
{
    if (font_ids.empty())
        throw InsufficientAssets("no fonts available");
    if (backgrounds.empty())
        throw InsufficientAssets("no backgrounds available");
    const auto& words = word_list();
    Rng rng(sample_seed(seed, index));

    for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
        std::string src = words[rng.integer(0, static_cast<int64_t>(words.size()) - 1)];
        std::string tgt = words[rng.integer(0, static_cast<int64_t>(words.size()) - 1)];
        StyleSpec style;
        style.font_id = font_ids[rng.integer(0, static_cast<int64_t>(font_ids.size()) - 1)];
        style.glyph_height_px = static_cast<int>(rng.integer(ranges.glyph_height_min, ranges.glyph_height_max));
        for (int& c : style.fill_rgb)
            c = static_cast<int>(rng.integer(0, 255));
        style.rotation_deg = rng.uniform(-ranges.rotation_max_deg, ranges.rotation_max_deg);
        style.curve_amplitude_px = rng.uniform(0.0, ranges.curve_max_px);
        for (double& v : style.perspective_warp)
            v = rng.uniform(-ranges.perspective_max_px, ranges.perspective_max_px);
        style.background_id = backgrounds.ids()[rng.integer(0, static_cast<int64_t>(backgrounds.ids().size()) - 1)];

        TensorImage background = BackgroundLibrary::load(style.background_id);
        if (fill_contrast(style, background) < ranges.min_contrast)
            continue;
        SceneTextSample sample;
        try {
            sample = make_paired_sample(src, tgt, style, background, fonts);
        } catch (const GlyphOverflow&) {
            continue;
        }
        const double cov_src = mask_coverage(sample.mask_src), cov_tgt = mask_coverage(sample.mask_tgt);
        if (cov_src <= ranges.min_coverage || cov_src >= ranges.max_coverage || cov_tgt <= ranges.min_coverage ||
            cov_tgt >= ranges.max_coverage)
            continue;
        return sample;
    }
    throw Error("no valid style found for sample " + std::to_string(index) + " after " +
                std::to_string(ranges.max_attempts) + " attempts");
}

std::string sample_file_name(int64_t index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(index));
    return buf;
}

static const char* const kLayoutDirs[] = {"i_s", "i_t", "mask_s", "mask_t", "mask_f"};

std::vector<ManifestRecord> generate_dataset(int64_t count, const std::vector<std::string>& font_ids,
                                             const BackgroundLibrary& backgrounds, uint64_t seed, const fs::path& root,
                                             const FontLibrary& fonts, const SynthRanges& ranges)
{
    if (font_ids.empty() || backgrounds.empty())
        throw InsufficientAssets("dataset generation needs at least one font and one background");
    if (count < 1)
        throw InvalidArgument("count must be >= 1");
    for (const auto& font : font_ids)
        fonts.resolve(font);
    for (const char* dir : kLayoutDirs)
        fs::create_directories(root / dir);

    std::vector<ManifestRecord> records;
    records.reserve(count);
    std::string manifest;
    for (int64_t i = 0; i < count; ++i) {
        SceneTextSample s = sample_scene_text(seed, static_cast<uint64_t>(i), font_ids, backgrounds, fonts, ranges);
        const std::string name = sample_file_name(i);
        write_image(root / "i_s" / (name + ".png"), s.image_src);
        write_image(root / "i_t" / (name + ".png"), s.image_tgt);
        write_mask(root / "mask_s" / (name + ".png"), s.mask_src);
        write_mask(root / "mask_t" / (name + ".png"), s.mask_tgt);
        write_mask(root / "mask_f" / (name + ".png"), s.mask_fixed);

        ManifestRecord rec{name, s.text_src, s.text_tgt, s.style, seed, sample_seed(seed, static_cast<uint64_t>(i))};
        manifest += json(rec).dump() + "\n";
        records.push_back(std::move(rec));
    }
    write_file_atomic(root / "manifest.jsonl", manifest);
    return records;
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

PairedDataset PairedDataset::open(const fs::path& root)
{
    std::ifstream in(root / "manifest.jsonl");
    if (!in)
        throw EmptyDataset("no manifest.jsonl under " + root.string());
    PairedDataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        ds.entries_.push_back(Entry{root, json::parse(line).get<ManifestRecord>(), nullptr});
    }
    if (ds.entries_.empty())
        throw EmptyDataset("manifest under " + root.string() + " has no records");
    return ds;
}

PairedDataset PairedDataset::concat(const std::vector<PairedDataset>& parts)
{
    PairedDataset ds;
    for (const auto& p : parts)
        ds.entries_.insert(ds.entries_.end(), p.entries_.begin(), p.entries_.end());
    if (ds.entries_.empty())
        throw EmptyDataset("concatenation of empty datasets");
    return ds;
}

PairedDataset PairedDataset::from_samples(std::vector<SceneTextSample> samples)
{
    PairedDataset ds;
    int64_t i = 0;
    for (auto& s : samples) {
        ManifestRecord rec{sample_file_name(i++), s.text_src, s.text_tgt, s.style, 0, 0};
        ds.entries_.push_back(Entry{{}, std::move(rec), std::make_shared<SceneTextSample>(std::move(s))});
    }
    return ds;
}

const SceneTextSample& PairedDataset::at(int64_t index) const
{
    const Entry& e = entries_.at(index);
    if (!e.cached) {
        auto s = std::make_shared<SceneTextSample>();
        const std::string file = e.record.id + ".png";
        s->image_src = read_image(e.root / "i_s" / file);
        s->image_tgt = read_image(e.root / "i_t" / file);
        s->mask_src = read_mask(e.root / "mask_s" / file);
        s->mask_tgt = read_mask(e.root / "mask_t" / file);
        s->mask_fixed = read_mask(e.root / "mask_f" / file);
        s->text_src = e.record.text_src;
        s->text_tgt = e.record.text_tgt;
        if (e.record.style)
            s->style = *e.record.style;
        for (const auto* t : {&s->image_src, &s->image_tgt, &s->mask_src, &s->mask_tgt, &s->mask_fixed})
            expect_shape(*t, {kChannels, kHeight, kWidth}, "dataset sample");
        e.cached = std::move(s);
    }
    return *e.cached;
}

SampleBatch make_batch(const PairedDataset& data, const std::vector<int64_t>& indices)
{
    std::vector<torch::Tensor> a, b, ma, mb, mf;
    for (int64_t i : indices) {
        const auto& s = data.at(i);
        a.push_back(s.image_src);
        b.push_back(s.image_tgt);
        ma.push_back(s.mask_src);
        mb.push_back(s.mask_tgt);
        mf.push_back(s.mask_fixed);
    }
    return {torch::stack(a), torch::stack(b), torch::stack(ma), torch::stack(mb), torch::stack(mf)};
}

// ---------------------------------------------------------------------------
// MOSTEL / SRNet layout adapter
// ---------------------------------------------------------------------------

static std::map<std::string, std::string> read_label_file(const fs::path& file)
{
    std::map<std::string, std::string> labels;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto space = line.find(' ');
        if (space == std::string::npos)
            continue;
        labels[line.substr(0, space)] = line.substr(space + 1);
    }
    return labels;
}

int64_t convert_mostel(const fs::path& src, const fs::path& dst)
{
    auto targets = read_label_file(src / "i_t.txt");
    if (targets.empty())
        throw EmptyDataset("no labels in " + (src / "i_t.txt").string());
    auto sources = read_label_file(src / "i_s.txt");
    for (const char* dir : kLayoutDirs)
        fs::create_directories(dst / dir);

    auto load_resized = [](const fs::path& p, bool mask) {
        cv::Mat m = cv::imread(p.string(), mask ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
        if (m.empty())
            throw InvalidArgument("cannot read " + p.string());
        cv::Mat r;
        cv::resize(m, r, cv::Size(static_cast<int>(kWidth), static_cast<int>(kHeight)), 0, 0,
                   mask ? cv::INTER_NEAREST : cv::INTER_AREA);
        return r;
    };

    std::string manifest;
    int64_t n = 0;
    for (const auto& [name, text] : targets) {
        TensorImage fixed;
        try {
            fixed = render_fixed_mask(text);
        } catch (const Error&) {
            continue; // target text outside the renderable alphabet
        }
        const std::string out = sample_file_name(n) + ".png";
        write_image(dst / "i_s" / out, from_bgr8(load_resized(src / "i_s" / name, false)));
        write_image(dst / "i_t" / out, from_bgr8(load_resized(src / "t_f" / name, false)));
        write_mask(dst / "mask_s" / out, mask_from_gray8(load_resized(src / "mask_s" / name, true)));
        write_mask(dst / "mask_t" / out, mask_from_gray8(load_resized(src / "mask_t" / name, true)));
        write_mask(dst / "mask_f" / out, fixed);
        ManifestRecord rec;
        rec.id = sample_file_name(n);
        rec.text_src = sources.count(name) ? sources[name] : std::string();
        rec.text_tgt = text;
        manifest += json(rec).dump() + "\n";
        ++n;
    }
    write_file_atomic(dst / "manifest.jsonl", manifest);
    return n;
}

} // namespace fast
