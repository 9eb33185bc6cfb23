#include "fast/service.hpp"

#include <chrono>
#include <cstring>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <opencv2/imgcodecs.hpp>

#include "fast/image_io.hpp"

namespace fast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr size_t kMaxPayload = 16u << 20;

const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>FAST</title></head><body>"
    "<p>The editing UI is not installed. Build the front end and start the service with --ui DIR.</p>"
    "</body></html>";

ServiceReply error_reply(int status, const std::string& message) { return {status, json{{"error", message}}}; }

json parse_body(const std::string& body)
{
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw InvalidArgument("request body must be a JSON object");
    return j;
}

std::string required_string(const json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_string())
        throw InvalidArgument(std::string("missing string field '") + key + "'");
    return j.at(key).get<std::string>();
}

cv::Mat decode_field(const json& j, const char* key, int flags)
{
    const auto bytes = base64_decode(required_string(j, key));
    cv::Mat mat = decode_image_bytes(bytes, flags);
    if (mat.empty())
        throw InvalidArgument(std::string("field '") + key + "' is not a decodable image");
    return mat;
}

std::string png_b64(const cv::Mat& mat) { return base64_encode(encode_png(mat)); }

// {-1,+1} mask at 64×256 to the original image size as an 8-bit PNG.
std::string mask_png_b64(const TensorImage& mask, int64_t height, int64_t width)
{
    auto resized = resize(mask.to(torch::kFloat), height, width);
    return png_b64(mask_to_gray8(torch::where(resized > 0, 1.0f, -1.0f)));
}

double elapsed_ms(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

template <typename F>
ServiceReply guarded(const Editor* editor, F&& body)
{
    if (!editor)
        return error_reply(503, "model weights are not loaded yet");
    try {
        return body();
    } catch (const GlyphOverflow& e) {
        return error_reply(422, std::string("text unrenderable: ") + e.what());
    } catch (const InvalidArgument& e) {
        return error_reply(400, e.what());
    } catch (const ShapeMismatch& e) {
        return error_reply(400, e.what());
    } catch (const MissingCheckpoint& e) {
        return error_reply(503, e.what());
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    }
}

} // namespace

ServiceReply handle_edit(const Editor* editor, const std::string& request_body)
{
    return guarded(editor, [&] {
        const auto start = std::chrono::steady_clock::now();
        const json j = parse_body(request_body);
        EditRequest request;
        request.image = from_bgr8(decode_field(j, "image_b64_png", cv::IMREAD_COLOR));
        request.target_text = required_string(j, "target_text");
        if (j.contains("mask_b64_png") && !j.at("mask_b64_png").is_null())
            request.source_mask = mask_from_gray8(decode_field(j, "mask_b64_png", cv::IMREAD_GRAYSCALE));
        MaskMode mode = MaskMode::Raw;
        if (j.contains("mask_mode")) {
            const auto m = required_string(j, "mask_mode");
            if (m == "binary")
                mode = MaskMode::Binary;
            else if (m != "raw")
                throw InvalidArgument("mask_mode must be 'raw' or 'binary'");
        }
        const auto result = editor->edit(request, mode);
        const int64_t h = request.image.size(1), w = request.image.size(2);
        json out{{"edited_b64_png", png_b64(to_bgr8(result.edited))},
                 {"estimated_mask_b64_png", mask_png_b64(result.source_mask, h, w)},
                 {"timing_ms", elapsed_ms(start)}};
        return ServiceReply{200, std::move(out)};
    });
}

ServiceReply handle_mask(const Editor* editor, const std::string& request_body)
{
    return guarded(editor, [&] {
        const auto start = std::chrono::steady_clock::now();
        const json j = parse_body(request_body);
        const TensorImage image = from_bgr8(decode_field(j, "image_b64_png", cv::IMREAD_COLOR));
        const auto estimate = editor->estimate(image);
        const int64_t h = image.size(1), w = image.size(2);
        auto soft = resize(estimate.soft.expand({kChannels, kHeight, kWidth}), h, w).slice(0, 0, 1).squeeze(0);
        cv::Mat soft8(static_cast<int>(h), static_cast<int>(w), CV_8UC1);
        auto bytes = (soft.clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).contiguous();
        std::memcpy(soft8.data, bytes.data_ptr<uint8_t>(), static_cast<size_t>(h * w));
        json out{{"mask_b64_png", mask_png_b64(to_signed(estimate.hard).expand({kChannels, kHeight, kWidth}), h, w)},
                 {"soft_mask_b64_png", png_b64(soft8)},
                 {"timing_ms", elapsed_ms(start)}};
        return ServiceReply{200, std::move(out)};
    });
}

struct Service::Impl {
    ServiceOptions options;
    httplib::Server server;
    std::mutex mutex;
    std::shared_ptr<const Editor> editor;
    std::string load_error;
    bool loading = false;
    std::thread loader;
    std::thread listener;

    std::shared_ptr<const Editor> current()
    {
        std::lock_guard lock(mutex);
        return editor;
    }

    static void reply(httplib::Response& res, const ServiceReply& r)
    {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    void install_routes()
    {
        server.set_payload_max_length(kMaxPayload);
        server.new_task_queue = [n = options.threads] { return new httplib::ThreadPool(static_cast<size_t>(n)); };

        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mutex);
            if (!editor) {
                json body{{"status", loading ? "loading" : "unavailable"}, {"version", kServiceVersion}};
                if (!load_error.empty())
                    body["error"] = load_error;
                reply(res, {503, body});
                return;
            }
            reply(res, {200,
                        {{"status", "ok"},
                         {"version", kServiceVersion},
                         {"checkpoint_hash", editor->checkpoint_hash()},
                         {"unet", editor->has_unet()}}});
        });
        server.Post("/edit", [this](const httplib::Request& req, httplib::Response& res) {
            auto e = current();
            reply(res, handle_edit(e.get(), req.body));
        });
        server.Post("/mask", [this](const httplib::Request& req, httplib::Response& res) {
            auto e = current();
            reply(res, handle_mask(e.get(), req.body));
        });

        std::error_code ec;
        if (!options.ui_dir.empty() && fs::is_directory(options.ui_dir, ec)) {
            server.set_mount_point("/ui", options.ui_dir.string());
            server.Get("/ui", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
        } else {
            auto placeholder = [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kPlaceholderPage, "text/html");
            };
            server.Get("/ui", placeholder);
            server.Get("/ui/", placeholder);
        }
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string message = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                message = e.what();
            } catch (...) {
            }
            reply(res, error_reply(500, message));
        });
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>())
{
    impl_->options = std::move(options);
    impl_->install_routes();
}

Service::~Service()
{
    stop();
    if (impl_->loader.joinable())
        impl_->loader.join();
}

void Service::set_editor(std::shared_ptr<const Editor> editor)
{
    std::lock_guard lock(impl_->mutex);
    impl_->editor = std::move(editor);
    impl_->loading = false;
}

void Service::load_async(const fs::path& checkpoint_dir)
{
    {
        std::lock_guard lock(impl_->mutex);
        impl_->loading = true;
        impl_->load_error.clear();
    }
    if (impl_->loader.joinable())
        impl_->loader.join();
    impl_->loader = std::thread([this, checkpoint_dir] {
        try {
            set_editor(std::make_shared<const Editor>(Editor::load(checkpoint_dir)));
        } catch (const std::exception& e) {
            std::lock_guard lock(impl_->mutex);
            impl_->loading = false;
            impl_->load_error = e.what();
        }
    });
}

int Service::bind()
{
    const int port = impl_->options.port == 0
                         ? impl_->server.bind_to_any_port(impl_->options.host)
                         : (impl_->server.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1);
    if (port < 0)
        throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

int Service::start()
{
    const int port = bind();
    impl_->listener = std::thread([this] { listen(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop()
{
    impl_->server.stop();
    if (impl_->listener.joinable())
        impl_->listener.join();
}

} // namespace fast
