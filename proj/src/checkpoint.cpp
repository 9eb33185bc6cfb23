#include "fast/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

#include "fast/image_io.hpp"

namespace fast {

namespace fs = std::filesystem;
using nlohmann::json;

json read_checkpoint_config(const fs::path& dir)
{
    std::ifstream in(dir / kConfigFile);
    if (!in)
        return json::object();
    return json::parse(in);
}

void merge_checkpoint_config(const fs::path& dir, const json& patch)
{
    fs::create_directories(dir);
    json config = read_checkpoint_config(dir);
    config.merge_patch(patch);
    write_file_atomic(dir / kConfigFile, config.dump(2) + "\n");
}

bool has_weights(const fs::path& dir, const std::string& name)
{
    std::error_code ec;
    return fs::is_regular_file(dir / (name + ".weights"), ec);
}

void save_module(const torch::nn::Module& module, const fs::path& dir, const std::string& name)
{
    fs::create_directories(dir);
    const fs::path target = dir / (name + ".weights");
    fs::path tmp = target;
    tmp += ".tmp";
    torch::serialize::OutputArchive archive;
    module.save(archive);
    archive.save_to(tmp.string());
    fs::rename(tmp, target);
}

template <typename Holder>
static void load_into(Holder& module, const fs::path& dir, const std::string& name)
{
    if (!has_weights(dir, name))
        throw MissingCheckpoint("missing " + (dir / (name + ".weights")).string());
    try {
        torch::load(module, (dir / (name + ".weights")).string());
    } catch (const c10::Error& e) {
        throw MissingCheckpoint("cannot load " + name + ".weights: " + e.what_without_backtrace());
    }
    module->eval();
}

static json section(const fs::path& dir, const std::string& name)
{
    json config = read_checkpoint_config(dir);
    if (!config.contains(name))
        throw MissingCheckpoint("config.json under " + dir.string() + " has no '" + name + "' section");
    return config.at(name);
}

Generator load_generator(const fs::path& dir, const std::string& name)
{
    if (!has_weights(dir, name))
        throw MissingCheckpoint("missing " + (dir / (name + ".weights")).string());
    Generator g(section(dir, name).get<GeneratorConfig>());
    load_into(g, dir, name);
    return g;
}

PatchDiscriminator load_discriminator(const fs::path& dir, const std::string& name)
{
    if (!has_weights(dir, name))
        throw MissingCheckpoint("missing " + (dir / (name + ".weights")).string());
    PatchDiscriminator d(section(dir, name).value("base_channels", int64_t{64}));
    load_into(d, dir, name);
    return d;
}

MaskUNet load_unet(const fs::path& dir)
{
    if (!has_weights(dir, "unet"))
        throw MissingCheckpoint("missing " + (dir / "unet.weights").string());
    MaskUNet u(section(dir, "unet").value("base_channels", int64_t{64}));
    load_into(u, dir, "unet");
    return u;
}

std::string checkpoint_hash(const fs::path& dir)
{
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && (name == kConfigFile || entry.path().extension() == ".weights"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buffer(1 << 16);
    for (const auto& file : files) {
        const auto name = file.filename().string();
        EVP_DigestUpdate(ctx.get(), name.data(), name.size());
        std::ifstream in(file, std::ios::binary);
        while (in) {
            in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
            EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<size_t>(in.gcount()));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &length);
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

} // namespace fast
