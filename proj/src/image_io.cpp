#include "fast/image_io.hpp"

#include <fstream>

#include <boost/beast/core/detail/base64.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fast {

namespace fs = std::filesystem;
namespace b64 = boost::beast::detail::base64;

void expect_shape(const torch::Tensor& t, c10::IntArrayRef sizes, const char* what)
{
    if (!t.defined() || t.sizes() != sizes) {
        std::string got = t.defined() ? c10::str(t.sizes()) : std::string("undefined");
        throw ShapeMismatch(std::string(what) + ": expected " + c10::str(sizes) + ", got " + got);
    }
}

cv::Mat to_bgr8(const TensorImage& image)
{
    if (image.dim() != 3 || image.size(0) != 3)
        throw ShapeMismatch("to_bgr8: expected (3, H, W), got " + c10::str(image.sizes()));
    auto u8 = (to_unit(image.detach().to(torch::kCPU, torch::kFloat)).clamp(0, 1) * 255.0)
                  .round()
                  .to(torch::kUInt8)
                  .permute({1, 2, 0})
                  .contiguous();
    cv::Mat rgb(static_cast<int>(u8.size(0)), static_cast<int>(u8.size(1)), CV_8UC3, u8.data_ptr<uint8_t>());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

TensorImage from_bgr8(const cv::Mat& bgr)
{
    cv::Mat rgb;
    if (bgr.channels() == 1)
        cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
    else if (bgr.channels() == 4)
        cv::cvtColor(bgr, rgb, cv::COLOR_BGRA2RGB);
    else
        cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    if (rgb.depth() != CV_8U)
        throw InvalidArgument("from_bgr8: only 8-bit images are supported");
    auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8)
                 .permute({2, 0, 1})
                 .to(torch::kFloat)
                 .div(255.0);
    return to_signed(t).contiguous();
}

cv::Mat mask_to_gray8(const TensorImage& mask)
{
    if (mask.dim() != 3)
        throw ShapeMismatch("mask_to_gray8: expected (C, H, W), got " + c10::str(mask.sizes()));
    auto u8 = (mask[0].detach().to(torch::kCPU) > 0).to(torch::kUInt8).mul(255).contiguous();
    cv::Mat view(static_cast<int>(u8.size(0)), static_cast<int>(u8.size(1)), CV_8UC1, u8.data_ptr<uint8_t>());
    return view.clone();
}

TensorImage mask_from_gray8(const cv::Mat& gray)
{
    cv::Mat g = gray;
    if (g.channels() == 3)
        cv::cvtColor(gray, g, cv::COLOR_BGR2GRAY);
    else if (g.channels() == 4)
        cv::cvtColor(gray, g, cv::COLOR_BGRA2GRAY);
    auto t = torch::from_blob(g.data, {g.rows, g.cols}, torch::kUInt8).clone();
    return binary_mask_from_alpha(t.to(torch::kFloat) / 255.0);
}

TensorImage binary_mask_from_alpha(const torch::Tensor& alpha, double threshold)
{
    auto plane = torch::where(alpha > threshold, torch::ones_like(alpha), -torch::ones_like(alpha))
                     .to(torch::kFloat);
    return plane.unsqueeze(0).repeat({3, 1, 1}).contiguous();
}

TensorImage read_image(const fs::path& path)
{
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty())
        throw InvalidArgument("cannot read image " + path.string());
    return from_bgr8(m);
}

TensorImage read_mask(const fs::path& path)
{
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty())
        throw InvalidArgument("cannot read mask " + path.string());
    return mask_from_gray8(m);
}

static void write_png(const fs::path& path, const cv::Mat& mat)
{
    auto bytes = encode_png(mat);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

void write_image(const fs::path& path, const TensorImage& image) { write_png(path, to_bgr8(image)); }

void write_mask(const fs::path& path, const TensorImage& mask) { write_png(path, mask_to_gray8(mask)); }

std::vector<std::uint8_t> encode_png(const cv::Mat& mat)
{
    std::vector<std::uint8_t> out;
    // Fixed compression level keeps output bytes reproducible.
    if (!cv::imencode(".png", mat, out, {cv::IMWRITE_PNG_COMPRESSION, 6}))
        throw Error("PNG encoding failed");
    return out;
}

cv::Mat decode_image_bytes(const std::vector<std::uint8_t>& bytes, int flags)
{
    if (bytes.empty())
        throw InvalidArgument("empty image payload");
    cv::Mat m = cv::imdecode(bytes, flags);
    if (m.empty())
        throw InvalidArgument("payload is not a decodable image");
    return m;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0)
        throw InvalidArgument("base64 payload length is not a multiple of 4");
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    auto [written, read] = b64::decode(out.data(), text.data(), text.size());
    const std::string_view rest = text.substr(read);
    if (rest.size() > 2 || rest.find_first_not_of('=') != std::string_view::npos)
        throw InvalidArgument("malformed base64 payload");
    out.resize(written);
    return out;
}

TensorImage resize(const TensorImage& image, int64_t height, int64_t width)
{
    if (image.size(1) == height && image.size(2) == width)
        return image;
    namespace F = torch::nn::functional;
    return F::interpolate(image.unsqueeze(0),
                          F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{height, width})
                              .mode(torch::kBilinear)
                              .align_corners(false))
        .squeeze(0);
}

void write_file_atomic(const fs::path& path, const std::string& bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace fast
