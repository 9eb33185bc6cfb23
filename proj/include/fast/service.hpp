#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "fast/pipeline.hpp"

namespace fast {

// HTTP/JSON front end over an Editor.
//   GET  /healthz  200 {status, checkpoint_hash, version, unet} once weights are loaded, 503 before
//   POST /edit     {image_b64_png, target_text, mask_b64_png?, mask_mode?}
//                  -> {edited_b64_png, estimated_mask_b64_png, timing_ms}
//   POST /mask     {image_b64_png} -> {mask_b64_png, soft_mask_b64_png, timing_ms}
//   GET  /ui/...   static front-end assets
// Errors are {"error": message} with 400 (malformed payload), 422 (unrenderable text) or
// 503 (weights not loaded, or no U-Net for mask estimation).
struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    std::filesystem::path ui_dir; ///< static assets for /ui; a placeholder page when empty or missing
    int threads = 8;
};

inline constexpr const char* kServiceVersion = "fast 0.1.0";

class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Until an editor is installed every model endpoint answers 503.
    void set_editor(std::shared_ptr<const Editor> editor);
    // Loads `checkpoint_dir` on a background thread; failures are reported by /healthz.
    void load_async(const std::filesystem::path& checkpoint_dir);

    // Binds the listening socket and returns the port.
    int bind();
    // Serves until stop(); call bind() first.
    void listen();
    // bind() + listen() on a background thread; returns the port once ready.
    int start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Request handlers without the transport, for embedding and testing. Each returns (status, body).
struct ServiceReply {
    int status = 200;
    nlohmann::json body;
};
ServiceReply handle_edit(const Editor* editor, const std::string& request_body);
ServiceReply handle_mask(const Editor* editor, const std::string& request_body);

} // namespace fast
