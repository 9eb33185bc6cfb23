#include <gtest/gtest.h>

#include <cstdlib>

#include "fast/losses.hpp"
#include "fast/metrics.hpp"
#include "support.hpp"

using namespace fast;

namespace {

bool python_has_torchvision()
{
    return std::system("python3 -c 'import torchvision' > /dev/null 2>&1") == 0;
}

void run_export(const std::string& script, const std::filesystem::path& out)
{
    const std::string cmd =
        "python3 " + (std::filesystem::path(FAST_TOOLS_DIR) / script).string() + " --random " + out.string();
    ASSERT_EQ(std::system(cmd.c_str()), 0) << cmd;
}

} // namespace

TEST(Export, Vgg19ArchiveLoadsIntoExtractor)
{
    if (!python_has_torchvision())
        GTEST_SKIP() << "torchvision not importable";
    fixtures::TempDir dir("vgg");
    run_export("export_vgg19.py", dir / "vgg19.pt");
    auto loaded = make_feature_extractor({1, (dir / "vgg19.pt").string()});
    auto fixed = make_feature_extractor({1, ""});
    auto a = loaded->named_parameters(), b = fixed->named_parameters();
    ASSERT_EQ(a.size(), 18u);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_FALSE(torch::equal(a["features.0.weight"], b["features.0.weight"]));
    auto taps = loaded->forward(torch::rand({1, 3, 64, 256}) * 2 - 1);
    EXPECT_EQ(taps[0].sizes(), (std::vector<int64_t>{1, 128, 32, 128}));
    EXPECT_EQ(taps[1].sizes(), (std::vector<int64_t>{1, 512, 8, 32}));
}

TEST(Export, LpipsArchiveLoads)
{
    if (!python_has_torchvision())
        GTEST_SKIP() << "torchvision not importable";
    fixtures::TempDir dir("lpips");
    run_export("export_lpips.py", dir / "lpips.pt");
    Lpips lpips = Lpips::load(dir / "lpips.pt");
    torch::manual_seed(3);
    auto x = torch::rand({3, 64, 256}), y = torch::rand({3, 64, 256});
    EXPECT_NEAR(lpips.distance(x, x), 0.0, 1e-6);
    EXPECT_TRUE(std::isfinite(lpips.distance(x, y)));
    EXPECT_NE(lpips.distance(x, y), 0.0);
}
