#include <gtest/gtest.h>

#include <fstream>

#include "fast/checkpoint.hpp"
#include "support.hpp"

using namespace fast;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny(Stage stage)
{
    TrainConfig c = fixtures::small_config(stage, 4);
    c.batch_size = 2;
    c.iterations = 2;
    return c;
}

std::vector<torch::Tensor> snapshot(const torch::nn::Module& m)
{
    std::vector<torch::Tensor> out;
    for (const auto& p : m.parameters())
        out.push_back(p.detach().clone());
    for (const auto& b : m.buffers())
        out.push_back(b.detach().clone());
    return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b)
{
    if (a.size() != b.size())
        return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!torch::equal(a[i], b[i]))
            return false;
    return true;
}

const PairedDataset& data4()
{
    static const PairedDataset d = fixtures::synthetic_dataset(4);
    return d;
}

} // namespace

TEST(TrainConfig, StageDefaults)
{
    auto m = TrainConfig::defaults(Stage::Mask);
    EXPECT_EQ(m.generator, GeneratorConfig::stage1());
    EXPECT_EQ(m.lr, 1e-3);
    EXPECT_EQ(m.batch_size, 40);
    EXPECT_EQ(m.adam_beta1, 0.5);
    auto i = TrainConfig::defaults(Stage::Image);
    EXPECT_EQ(i.generator, GeneratorConfig::stage2());
    EXPECT_EQ(i.weights, LossWeights{});
    EXPECT_EQ(stage_from_string("unet"), Stage::UNet);
    EXPECT_THROW(stage_from_string("gan"), InvalidArgument);
}

TEST(TrainConfig, JsonRoundTripAndUnknownKeys)
{
    TrainConfig c = tiny(Stage::Image);
    c.networks.stage2_mode = Stage2Mode::Cascaded;
    c.networks.stage1_checkpoint = "/tmp/ck";
    nlohmann::json j = c;
    TrainConfig back = j.get<TrainConfig>();
    EXPECT_EQ(nlohmann::json(back), j);

    auto partial = nlohmann::json::parse(R"({"stage": "image", "generator": {"base_channels": 16}})").get<TrainConfig>();
    EXPECT_EQ(partial.generator.base_channels, 16);
    EXPECT_EQ(partial.generator.attention_schedule, GeneratorConfig::stage2().attention_schedule);

    EXPECT_THROW(nlohmann::json::parse(R"({"stage": "mask", "learning_rate": 1})").get<TrainConfig>(), InvalidArgument);
    EXPECT_THROW(nlohmann::json::parse(R"({"stage": "mask", "batch_size": 0})").get<TrainConfig>(), InvalidArgument);
    EXPECT_THROW(nlohmann::json::parse(R"({"stage": "image", "generator": {"concat_source_mask": false}})")
                     .get<TrainConfig>(),
                 InvalidArgument);

    fixtures::TempDir dir("cfg");
    std::ofstream(dir / "c.json") << R"({"stage": "mask", "iterations": 7})";
    EXPECT_EQ(load_train_config(dir / "c.json").iterations, 7);
    EXPECT_THROW(load_train_config(dir / "missing.json"), InvalidArgument);
}

TEST(BatchSampler, EpochsCoverEveryIndex)
{
    BatchSampler s(5, 3);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 5; ++i)
        for (int64_t k : s.next(2))
            ++seen[k];
    for (int v : seen)
        EXPECT_EQ(v, 2);
    BatchSampler a(7, 1), b(7, 1);
    EXPECT_EQ(a.next(7), b.next(7));
    EXPECT_THROW(BatchSampler(0, 1), EmptyDataset);
}

TEST(StageInputs, Routing)
{
    auto batch = make_batch(data4(), {0, 1});
    GeneratorConfig c = GeneratorConfig::stage1();
    auto in = stage1_inputs(c, batch);
    EXPECT_TRUE(torch::equal(in.condition, batch.image_src));
    EXPECT_TRUE(torch::equal(in.masks, torch::cat({batch.mask_src, batch.mask_fixed}, 1)));
    EXPECT_TRUE(torch::equal(in.target, batch.mask_tgt));
    c.condition_kind = ConditionKind::Mask;
    c.concat_source_mask = false;
    in = stage1_inputs(c, batch);
    EXPECT_TRUE(torch::equal(in.condition, batch.mask_src));
    EXPECT_TRUE(torch::equal(in.masks, batch.mask_fixed));

    auto guide = torch::zeros_like(batch.mask_tgt);
    auto s2 = stage2_inputs(GeneratorConfig::stage2(), batch, guide);
    EXPECT_TRUE(torch::equal(s2.masks, torch::cat({batch.mask_src, guide}, 1)));
    EXPECT_TRUE(torch::equal(s2.pair_source, batch.image_src));
    EXPECT_TRUE(torch::equal(s2.target, batch.image_tgt));
}

TEST(GanTrainer, OneIterationUpdatesBothNetworks)
{
    GanTrainer t(tiny(Stage::Mask), data4());
    auto g0 = snapshot(*t.generator()), d0 = snapshot(*t.discriminator());
    auto rec = t.step();
    EXPECT_EQ(rec.iter, 1);
    for (const char* key : {"l2", "ssim", "gan", "p4", "p9", "loss_g", "loss_d"})
        EXPECT_TRUE(rec.values.count(key)) << key;
    EXPECT_FALSE(same(g0, snapshot(*t.generator())));
    EXPECT_FALSE(same(d0, snapshot(*t.discriminator())));
}

TEST(GanTrainer, SeededRunsAreIdentical)
{
    TrainConfig c = tiny(Stage::Image);
    c.seed = 17;
    GanTrainer a(c, data4()), b(c, data4());
    for (int i = 0; i < 10; ++i) {
        auto ra = a.step(), rb = b.step();
        ASSERT_EQ(ra.values, rb.values) << "iteration " << i + 1;
    }
    EXPECT_TRUE(same(snapshot(*a.generator()), snapshot(*b.generator())));
    EXPECT_TRUE(same(snapshot(*a.discriminator()), snapshot(*b.discriminator())));
}

TEST(GanTrainer, CheckpointRoundTripIsBitExact)
{
    fixtures::TempDir dir("ckpt");
    GanTrainer t(tiny(Stage::Mask), data4());
    t.step();
    t.save(dir.path());
    for (const char* name : {"gm", "dm"})
        EXPECT_TRUE(has_weights(dir.path(), name)) << name;
    Generator g = load_generator(dir.path(), "gm");
    PatchDiscriminator d = load_discriminator(dir.path(), "dm");
    EXPECT_TRUE(same(snapshot(*g), snapshot(*t.generator())));
    EXPECT_TRUE(same(snapshot(*d), snapshot(*t.discriminator())));
    EXPECT_EQ(g->config(), t.generator()->config());

    auto cfg = read_checkpoint_config(dir.path());
    EXPECT_EQ(cfg["train"]["mask"]["stage"], "mask");
    EXPECT_EQ(cfg["loss_weights"]["lambda4"], 100.0);
    const std::string hash = checkpoint_hash(dir.path());
    EXPECT_EQ(hash.size(), 64u);
    EXPECT_EQ(hash, checkpoint_hash(dir.path()));
    EXPECT_THROW(load_generator(dir.path(), "gi"), MissingCheckpoint);
    EXPECT_THROW(load_unet(dir / "nowhere"), MissingCheckpoint);
}

TEST(GanTrainer, RunWritesLogAndStopsOnRequest)
{
    fixtures::TempDir dir("run");
    TrainConfig c = tiny(Stage::Mask);
    c.iterations = 5;
    GanTrainer t(c, data4());
    auto last = t.run(dir.path(), [](const LossRecord& r) { return r.iter < 3; });
    EXPECT_EQ(last.iter, 3);
    std::ifstream log(dir / "train_mask.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line);)
        if (nlohmann::json::parse(line).contains("loss_g"))
            ++lines;
    EXPECT_EQ(lines, 3);
    EXPECT_TRUE(has_weights(dir.path(), "gm"));
    auto metrics = t.evaluate(2);
    for (const char* key : {"eval_mse", "eval_psnr", "eval_ssim"})
        EXPECT_TRUE(metrics.count(key)) << key;
    EXPECT_GE(t.pixel_loss({0, 1}), 0.0);
    EXPECT_EQ(t.predict({0}).sizes(), (c10::IntArrayRef{1, 3, 64, 256}));
}

TEST(GanTrainer, CascadedStageTwoUsesFrozenStageOne)
{
    fixtures::TempDir dir("cascade");
    TrainConfig c = tiny(Stage::Image);
    c.networks.stage2_mode = Stage2Mode::Cascaded;
    EXPECT_THROW(make_stage2_trainer(c, data4(), dir.path()), MissingStage1Checkpoint);
    {
        GanTrainer direct(c, data4());
        EXPECT_THROW(direct.step(), MissingStage1Checkpoint);
    }

    GanTrainer s1(tiny(Stage::Mask), data4());
    s1.save(dir.path());
    auto t = make_stage2_trainer(c, data4(), dir.path());
    t.step();

    torch::manual_seed(3);
    Generator frozen(tiny(Stage::Mask).generator);
    auto before = snapshot(*frozen);
    GanTrainer u(c, data4());
    u.set_stage1(frozen);
    u.step();
    EXPECT_TRUE(same(before, snapshot(*frozen)));
    for (const auto& p : frozen->parameters())
        EXPECT_FALSE(p.requires_grad());
}

TEST(GanTrainer, NonFiniteLossIsReported)
{
    GanTrainer t(tiny(Stage::Mask), data4());
    {
        torch::NoGradGuard no_grad;
        t.generator()->parameters()[0].fill_(std::numeric_limits<float>::quiet_NaN());
    }
    try {
        t.step();
        FAIL() << "expected NonFiniteLoss";
    } catch (const NonFiniteLoss& e) {
        EXPECT_EQ(e.iteration(), 1);
    }
}

TEST(GanTrainer, EmptyDataset)
{
    EXPECT_THROW(GanTrainer(tiny(Stage::Mask), PairedDataset::from_samples({})), EmptyDataset);
    EXPECT_THROW(UNetTrainer(UNetTrainOptions{}, PairedDataset::from_samples({})), EmptyDataset);
    EXPECT_THROW(GanTrainer(tiny(Stage::UNet), data4()), InvalidArgument);
}

TEST(UNetTrainer, LossDecreasesAndSaves)
{
    fixtures::TempDir dir("unet");
    UNetTrainOptions o;
    o.base_channels = 4;
    o.batch_size = 4;
    o.seed = 2;
    UNetTrainer t(o, data4());
    const double before = t.loss({0, 1, 2, 3});
    for (int i = 0; i < 40; ++i)
        t.step();
    EXPECT_LT(t.loss({0, 1, 2, 3}), before);
    EXPECT_GT(t.accuracy({0, 1, 2, 3}), 0.5);
    t.save(dir.path());
    MaskUNet loaded = load_unet(dir.path());
    EXPECT_TRUE(same(snapshot(*loaded), snapshot(*t.model())));

    TrainConfig c = TrainConfig::defaults(Stage::UNet);
    c.networks.unet_channels = 16;
    c.networks.unet_epochs = 3;
    auto opts = unet_options(c);
    EXPECT_EQ(opts.base_channels, 16);
    EXPECT_EQ(opts.epochs, 3);
}

TEST(Ablation, MatricesMatchPublishedTables)
{
    TrainConfig base = tiny(Stage::Mask);
    auto rows = ablation_rows(base, "/data/a", "/data/b");
    int attention = 0, data = 0, inputs = 0;
    for (const auto& r : rows) {
        if (r.table == AblationTable::Attention) {
            ++attention;
            EXPECT_EQ(r.labels.size(), 4u);
            EXPECT_EQ(r.stage1.generator.condition_kind, ConditionKind::Mask);
            EXPECT_TRUE(r.stage1.generator.concat_source_mask);
        } else if (r.table == AblationTable::Data) {
            ++data;
            EXPECT_EQ(r.labels.size(), 1u);
        } else {
            ++inputs;
            EXPECT_EQ(r.labels.size(), 2u);
        }
        EXPECT_EQ(r.stage1.generator.base_channels, 4);
    }
    EXPECT_EQ(attention, 3);
    EXPECT_EQ(data, 2);
    EXPECT_EQ(inputs, 4);
    EXPECT_EQ(rows.back().labels, (std::vector<std::string>{"Image", "w/o Concat"}));
    EXPECT_EQ(ablation_rows(base, "/data/a", "").size(), 7u);
}

TEST(Ablation, TableFormatting)
{
    AblationResult a;
    a.row.table = AblationTable::Attention;
    a.row.labels = {"SA", "SA", "σ", "σ"};
    a.mse = 0.01234, a.psnr = 19.456, a.ssim = 0.7561;
    AblationResult b;
    b.row.table = AblationTable::Inputs;
    b.row.labels = {"Mask", "Concat"};
    b.mse = 0.1, b.psnr = 10.0, b.ssim = 0.5;
    const std::string md = format_ablation_tables({a, b});
    EXPECT_NE(md.find("| Block A | Block B | Block C | Block D | MSE | PSNR | SSIM |"), std::string::npos);
    EXPECT_NE(md.find("| SA | SA | σ | σ | 0.0123 | 19.46 | 0.756 |"), std::string::npos);
    EXPECT_NE(md.find("| Input Image Type | Mask (m_a) Concatenation | MSE | PSNR | SSIM |"), std::string::npos);
    EXPECT_NE(md.find("| Mask | Concat | 0.1000 | 10.00 | 0.500 |"), std::string::npos);
    EXPECT_EQ(md.find("| Dataset |"), std::string::npos);
    auto j = ablation_json({a, b});
    EXPECT_EQ(j.size(), 2u);
    EXPECT_EQ(j[1]["table"], "inputs");
}
