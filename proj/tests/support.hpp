#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "fast/data_synth.hpp"
#include "fast/trainer.hpp"

namespace fast::fixtures {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "fast")
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline const FontLibrary& hershey_fonts()
{
    static const FontLibrary fonts;
    return fonts;
}

inline std::vector<std::string> hershey_ids()
{
    return {"hershey-simplex", "hershey-duplex", "hershey-complex", "hershey-triplex"};
}

// `count` synthetic pairs from Hershey fonts and procedural backgrounds.
inline PairedDataset synthetic_dataset(int64_t count, uint64_t seed = 11)
{
    const auto backgrounds = BackgroundLibrary::procedural(16);
    std::vector<SceneTextSample> samples;
    for (int64_t i = 0; i < count; ++i)
        samples.push_back(sample_scene_text(seed, static_cast<uint64_t>(i), hershey_ids(), backgrounds, hershey_fonts()));
    return PairedDataset::from_samples(std::move(samples));
}

// The same recipe written to `root` and read back (8-bit PNG round trip).
inline PairedDataset disk_dataset(const std::filesystem::path& root, int64_t count, uint64_t seed = 11)
{
    generate_dataset(count, hershey_ids(), BackgroundLibrary::procedural(16), seed, root, hershey_fonts());
    return PairedDataset::open(root);
}

// Narrow networks for quick CPU runs.
inline TrainConfig small_config(Stage stage, int64_t base = 8)
{
    TrainConfig c = TrainConfig::defaults(stage);
    c.generator.base_channels = base;
    c.networks.discriminator_channels = 8;
    c.networks.unet_channels = 8;
    c.networks.extractor.width_divisor = 8;
    c.checkpoint_every = 0;
    c.eval_every = 0;
    return c;
}

// A complete checkpoint (gm, dm, gi, di, unet) after one training step of each narrow network.
inline void tiny_checkpoint(const std::filesystem::path& dir, const PairedDataset& data)
{
    for (Stage stage : {Stage::Mask, Stage::Image}) {
        TrainConfig c = small_config(stage, 4);
        c.batch_size = 2;
        GanTrainer t(c, data);
        t.step();
        t.save(dir);
    }
    UNetTrainOptions o;
    o.base_channels = 4;
    UNetTrainer u(o, data);
    u.step();
    u.save(dir);
}

inline torch::Tensor random_image(int64_t n = 1)
{
    return torch::rand({n, 3, 64, 256}, torch::kDouble) * 2.0 - 1.0;
}

} // namespace fast::fixtures
