#include "fast/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fast/checkpoint.hpp"
#include "fast/metrics.hpp"

namespace fast {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Stage s)
{
    switch (s) {
    case Stage::Mask: return "mask";
    case Stage::Image: return "image";
    case Stage::UNet: return "unet";
    }
    return "?";
}

Stage stage_from_string(const std::string& s)
{
    if (s == "mask")
        return Stage::Mask;
    if (s == "image")
        return Stage::Image;
    if (s == "unet")
        return Stage::UNet;
    throw InvalidArgument("stage must be mask, image or unet; got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

TrainConfig TrainConfig::defaults(Stage stage)
{
    TrainConfig c;
    c.stage = stage;
    c.generator = stage == Stage::Image ? GeneratorConfig::stage2() : GeneratorConfig::stage1();
    return c;
}

void TrainConfig::validate() const
{
    if (iterations < 1)
        throw InvalidArgument("iterations must be >= 1");
    if (batch_size < 1)
        throw InvalidArgument("batch_size must be >= 1");
    if (!(lr > 0.0))
        throw InvalidArgument("lr must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw InvalidArgument("Adam betas must be in [0, 1)");
    weights.validate();
    generator.validate();
    if (stage == Stage::Image && !generator.concat_source_mask)
        throw InvalidArgument("stage II consumes (m_A, guide); concat_source_mask must be true");
    if (networks.discriminator_channels < 1 || networks.unet_channels < 1 || networks.unet_epochs < 1 ||
        networks.unet_batch_size < 1)
        throw InvalidArgument("network sizes and U-Net schedule must be positive");
}

void to_json(json& j, const NetworkOptions& n)
{
    j = json{{"discriminator_channels", n.discriminator_channels},
             {"unet_channels", n.unet_channels},
             {"extractor", n.extractor},
             {"stage2_mode", n.stage2_mode == Stage2Mode::Cascaded ? "cascaded" : "teacher_forced"},
             {"stage1_checkpoint", n.stage1_checkpoint},
             {"unet_epochs", n.unet_epochs},
             {"unet_batch_size", n.unet_batch_size}};
}

void from_json(const json& j, NetworkOptions& n)
{
    NetworkOptions d;
    n.discriminator_channels = j.value("discriminator_channels", d.discriminator_channels);
    n.unet_channels = j.value("unet_channels", d.unet_channels);
    n.extractor = j.contains("extractor") ? j.at("extractor").get<ExtractorConfig>() : d.extractor;
    const std::string mode = j.value("stage2_mode", std::string("teacher_forced"));
    if (mode == "teacher_forced")
        n.stage2_mode = Stage2Mode::TeacherForced;
    else if (mode == "cascaded")
        n.stage2_mode = Stage2Mode::Cascaded;
    else
        throw InvalidArgument("stage2_mode is teacher_forced or cascaded, got '" + mode + "'");
    n.stage1_checkpoint = j.value("stage1_checkpoint", d.stage1_checkpoint);
    n.unet_epochs = j.value("unet_epochs", d.unet_epochs);
    n.unet_batch_size = j.value("unet_batch_size", d.unet_batch_size);
}

void to_json(json& j, const TrainConfig& c)
{
    j = json{{"stage", to_string(c.stage)},
             {"iterations", c.iterations},
             {"batch_size", c.batch_size},
             {"lr", c.lr},
             {"adam_beta1", c.adam_beta1},
             {"adam_beta2", c.adam_beta2},
             {"weights", c.weights},
             {"generator", c.generator},
             {"seed", c.seed},
             {"checkpoint_every", c.checkpoint_every},
             {"eval_every", c.eval_every},
             {"networks", c.networks}};
}

void from_json(const json& j, TrainConfig& c)
{
    static const std::set<std::string> known = {"stage",     "iterations", "batch_size", "lr",
                                                "adam_beta1", "adam_beta2", "weights",    "generator",
                                                "seed",      "checkpoint_every", "eval_every", "networks"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw InvalidArgument("unknown training config field '" + key + "'");
    const Stage stage = stage_from_string(j.value("stage", std::string("mask")));
    const TrainConfig d = TrainConfig::defaults(stage);
    c.stage = stage;
    c.iterations = j.value("iterations", d.iterations);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.lr = j.value("lr", d.lr);
    c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    c.weights = j.contains("weights") ? j.at("weights").get<LossWeights>() : d.weights;
    c.generator = d.generator;
    if (j.contains("generator")) {
        // Fields absent from the file keep the stage's defaults.
        json merged = d.generator;
        merged.merge_patch(j.at("generator"));
        c.generator = merged.get<GeneratorConfig>();
    }
    c.seed = j.value("seed", d.seed);
    c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
    c.eval_every = j.value("eval_every", d.eval_every);
    c.networks = j.contains("networks") ? j.at("networks").get<NetworkOptions>() : d.networks;
    c.validate();
}

TrainConfig load_train_config(const fs::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw InvalidArgument("cannot read config " + file.string());
    return json::parse(in).get<TrainConfig>();
}

void to_json(json& j, const LossRecord& r)
{
    j = json{{"iter", r.iter}, {"wall_time", r.wall_time}};
    for (const auto& [k, v] : r.values)
        j[k] = v;
}

// ---------------------------------------------------------------------------
// Sampling and input assembly
// ---------------------------------------------------------------------------

BatchSampler::BatchSampler(int64_t dataset_size, uint64_t seed) : size_(dataset_size), rng_(seed)
{
    if (dataset_size < 1)
        throw EmptyDataset("cannot sample from an empty dataset");
    order_.resize(static_cast<size_t>(size_));
    reshuffle();
}

void BatchSampler::reshuffle()
{
    for (int64_t i = 0; i < size_; ++i)
        order_[static_cast<size_t>(i)] = i;
    // Fisher-Yates on raw engine output keeps the order identical across standard libraries.
    for (size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1], order_[rng_() % i]);
    cursor_ = 0;
}

std::vector<int64_t> BatchSampler::next(int64_t batch_size)
{
    std::vector<int64_t> out;
    out.reserve(static_cast<size_t>(batch_size));
    while (static_cast<int64_t>(out.size()) < batch_size) {
        if (cursor_ == order_.size())
            reshuffle();
        out.push_back(order_[cursor_++]);
    }
    return out;
}

StageInputs stage1_inputs(const GeneratorConfig& config, const SampleBatch& batch)
{
    StageInputs in;
    in.condition = config.condition_kind == ConditionKind::Image ? batch.image_src : batch.mask_src;
    in.masks = config.concat_source_mask ? torch::cat({batch.mask_src, batch.mask_fixed}, 1) : batch.mask_fixed;
    in.pair_source = batch.mask_src;
    in.target = batch.mask_tgt;
    return in;
}

StageInputs stage2_inputs(const GeneratorConfig& config, const SampleBatch& batch, const torch::Tensor& guide)
{
    StageInputs in;
    in.condition = config.condition_kind == ConditionKind::Image ? batch.image_src : batch.mask_src;
    in.masks = config.concat_source_mask ? torch::cat({batch.mask_src, guide}, 1) : guide;
    in.pair_source = batch.image_src;
    in.target = batch.image_tgt;
    return in;
}

static std::vector<int64_t> first_indices(int64_t n)
{
    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        idx[static_cast<size_t>(i)] = i;
    return idx;
}

// ---------------------------------------------------------------------------
// GanTrainer
// ---------------------------------------------------------------------------

GanTrainer::GanTrainer(TrainConfig config, PairedDataset data)
    : config_(std::move(config)), data_(std::move(data)), sampler_(data_.size(), config_.seed)
{
    config_.validate();
    if (config_.stage == Stage::UNet)
        throw InvalidArgument("GanTrainer handles the mask and image stages; use UNetTrainer");
    torch::manual_seed(config_.seed);
    generator_ = Generator(config_.generator);
    discriminator_ = PatchDiscriminator(config_.networks.discriminator_channels);
    extractor_ = make_feature_extractor(config_.networks.extractor);
    auto options = torch::optim::AdamOptions(config_.lr).betas({config_.adam_beta1, config_.adam_beta2});
    g_opt_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), options);
    d_opt_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(), options);
}

void GanTrainer::set_stage1(Generator stage1)
{
    stage1->eval();
    for (auto& p : stage1->parameters())
        p.set_requires_grad(false);
    stage1_ = std::move(stage1);
}

SampleBatch GanTrainer::next_batch() { return make_batch(data_, sampler_.next(config_.batch_size)); }

StageInputs GanTrainer::assemble(const SampleBatch& batch)
{
    if (config_.stage == Stage::Mask)
        return stage1_inputs(config_.generator, batch);
    torch::Tensor guide = batch.mask_tgt;
    if (config_.networks.stage2_mode == Stage2Mode::Cascaded) {
        if (!stage1_)
            throw MissingStage1Checkpoint("cascaded stage II needs a stage-I generator");
        torch::NoGradGuard no_grad;
        auto in = stage1_inputs((*stage1_)->config(), batch);
        guide = (*stage1_)->forward(in.condition, in.masks);
    }
    return stage2_inputs(config_.generator, batch, guide);
}

LossRecord GanTrainer::step()
{
    generator_->train();
    discriminator_->train();
    const int64_t iter = iteration_ + 1;
    auto in = assemble(next_batch());
    auto fake = generator_->forward(in.condition, in.masks);

    d_opt_->zero_grad();
    auto real_map = discriminator_->forward(in.pair_source, in.target);
    auto fake_map = discriminator_->forward(in.pair_source, fake.detach());
    auto loss_d = gan_loss_discriminator(real_map, fake_map);
    const double loss_d_value = loss_d.item<double>();
    if (!std::isfinite(loss_d_value))
        throw NonFiniteLoss(iter, "discriminator loss");
    loss_d.backward();
    d_opt_->step();

    g_opt_->zero_grad();
    LossRecord rec;
    rec.iter = iter;
    auto gan = gan_loss_generator(discriminator_->forward(in.pair_source, fake));
    auto [p4, p9] = perceptual_loss(fake, in.target, extractor_);
    torch::Tensor loss_g;
    if (config_.stage == Stage::Mask) {
        Stage1Terms t{pixel_l2(fake, in.target), gan, p4, p9, msssim_loss(fake, in.target)};
        loss_g = stage1_generator_objective(t, config_.weights);
        rec.values["l2"] = t.l2.item<double>();
        rec.values["ssim"] = t.ssim.item<double>();
    } else {
        Stage2Terms t{pixel_l1(fake, in.target), gan, p4, p9};
        loss_g = stage2_generator_objective(t, config_.weights);
        rec.values["l1"] = t.l1.item<double>();
    }
    const double loss_g_value = loss_g.item<double>();
    if (!std::isfinite(loss_g_value))
        throw NonFiniteLoss(iter, "generator loss");
    loss_g.backward();
    g_opt_->step();

    iteration_ = iter;
    rec.values["loss_d"] = loss_d_value;
    rec.values["loss_g"] = loss_g_value;
    rec.values["gan"] = gan.item<double>();
    rec.values["p4"] = p4.item<double>();
    rec.values["p9"] = p9.item<double>();
    return rec;
}

torch::Tensor GanTrainer::predict(const std::vector<int64_t>& indices)
{
    torch::NoGradGuard no_grad;
    generator_->eval();
    auto in = assemble(make_batch(data_, indices));
    auto out = generator_->forward(in.condition, in.masks);
    generator_->train();
    return out;
}

double GanTrainer::pixel_loss(const std::vector<int64_t>& indices)
{
    auto out = predict(indices);
    auto target = config_.stage == Stage::Mask ? make_batch(data_, indices).mask_tgt : make_batch(data_, indices).image_tgt;
    return (config_.stage == Stage::Mask ? pixel_l2(out, target) : pixel_l1(out, target)).item<double>();
}

std::map<std::string, double> GanTrainer::evaluate(int64_t limit)
{
    const int64_t n = std::min(limit, data_.size());
    double sum_mse = 0.0, sum_psnr = 0.0, sum_ssim = 0.0;
    for (int64_t start = 0; start < n; start += 8) {
        std::vector<int64_t> idx;
        for (int64_t i = start; i < std::min(n, start + 8); ++i)
            idx.push_back(i);
        auto out = predict(idx);
        auto batch = make_batch(data_, idx);
        auto truth = config_.stage == Stage::Mask ? batch.mask_tgt : batch.image_tgt;
        for (size_t k = 0; k < idx.size(); ++k) {
            auto m = evaluate_pair(out[static_cast<int64_t>(k)], truth[static_cast<int64_t>(k)], nullptr);
            sum_mse += m.mse;
            sum_psnr += m.psnr_db;
            sum_ssim += m.ssim;
        }
    }
    return {{"eval_mse", sum_mse / n}, {"eval_psnr", sum_psnr / n}, {"eval_ssim", sum_ssim / n}};
}

void GanTrainer::save(const fs::path& dir) const
{
    const bool mask = config_.stage == Stage::Mask;
    const std::string g = mask ? "gm" : "gi", d = mask ? "dm" : "di";
    save_module(*generator_, dir, g);
    save_module(*discriminator_, dir, d);
    json patch;
    patch[g] = config_.generator;
    patch[d] = json{{"base_channels", config_.networks.discriminator_channels}};
    patch["loss_weights"] = config_.weights;
    patch["train"][to_string(config_.stage)] = config_;
    merge_checkpoint_config(dir, patch);
}

LossRecord GanTrainer::run(const fs::path& out_dir, const std::function<bool(const LossRecord&)>& on_step)
{
    std::ofstream log;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log.open(out_dir / ("train_" + to_string(config_.stage) + ".jsonl"), std::ios::trunc);
    }
    const auto start = std::chrono::steady_clock::now();
    LossRecord rec;
    while (iteration_ < config_.iterations) {
        rec = step();
        if (config_.eval_every > 0 && iteration_ % config_.eval_every == 0)
            for (const auto& [k, v] : evaluate())
                rec.values[k] = v;
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (log)
            log << json(rec).dump() << '\n' << std::flush;
        if (!out_dir.empty() && config_.checkpoint_every > 0 && iteration_ % config_.checkpoint_every == 0)
            save(out_dir);
        if (on_step && !on_step(rec))
            break;
    }
    if (!out_dir.empty())
        save(out_dir);
    return rec;
}

GanTrainer make_stage2_trainer(const TrainConfig& config, PairedDataset data, const fs::path& out_dir)
{
    if (config.stage != Stage::Image)
        throw InvalidArgument("make_stage2_trainer expects stage 'image'");
    GanTrainer trainer(config, std::move(data));
    if (config.networks.stage2_mode == Stage2Mode::Cascaded) {
        const fs::path dir = config.networks.stage1_checkpoint.empty() ? out_dir : fs::path(config.networks.stage1_checkpoint);
        if (dir.empty() || !has_weights(dir, "gm"))
            throw MissingStage1Checkpoint("cascaded stage II needs gm.weights in '" + dir.string() + "'");
        trainer.set_stage1(load_generator(dir, "gm"));
    }
    return trainer;
}

// ---------------------------------------------------------------------------
// U-Net
// ---------------------------------------------------------------------------

UNetTrainOptions unet_options(const TrainConfig& config)
{
    UNetTrainOptions o;
    o.epochs = config.networks.unet_epochs;
    o.lr = config.lr;
    o.batch_size = config.networks.unet_batch_size;
    o.base_channels = config.networks.unet_channels;
    o.seed = config.seed;
    return o;
}

UNetTrainer::UNetTrainer(UNetTrainOptions options, PairedDataset data)
    : options_(options), data_(std::move(data)), sampler_(data_.size(), options.seed)
{
    if (options_.epochs < 1 || options_.batch_size < 1 || !(options_.lr > 0.0))
        throw InvalidArgument("U-Net training needs epochs >= 1, batch_size >= 1, lr > 0");
    torch::manual_seed(options_.seed);
    model_ = MaskUNet(options_.base_channels);
    opt_ = std::make_unique<torch::optim::Adam>(model_->parameters(), torch::optim::AdamOptions(options_.lr));
}

static torch::Tensor unet_target(const SampleBatch& batch)
{
    return (batch.mask_src.slice(1, 0, 1) > 0).to(torch::kFloat);
}

double UNetTrainer::step()
{
    model_->train();
    auto batch = make_batch(data_, sampler_.next(options_.batch_size));
    opt_->zero_grad();
    auto loss = torch::binary_cross_entropy_with_logits(model_->forward(batch.image_src), unet_target(batch));
    const double value = loss.item<double>();
    if (!std::isfinite(value))
        throw NonFiniteLoss(steps_ + 1, "U-Net BCE");
    loss.backward();
    opt_->step();
    ++steps_;
    return value;
}

double UNetTrainer::accuracy(const std::vector<int64_t>& indices)
{
    torch::NoGradGuard no_grad;
    model_->eval();
    auto batch = make_batch(data_, indices);
    auto hard = (torch::sigmoid(model_->forward(batch.image_src)) > 0.5).to(torch::kFloat);
    return (hard == unet_target(batch)).to(torch::kDouble).mean().item<double>();
}

double UNetTrainer::loss(const std::vector<int64_t>& indices)
{
    torch::NoGradGuard no_grad;
    model_->eval();
    auto batch = make_batch(data_, indices);
    return torch::binary_cross_entropy_with_logits(model_->forward(batch.image_src), unet_target(batch))
        .item<double>();
}

void UNetTrainer::save(const fs::path& dir) const
{
    save_module(*model_, dir, "unet");
    json opts{{"epochs", options_.epochs}, {"lr", options_.lr}, {"batch_size", options_.batch_size},
              {"seed", options_.seed}};
    merge_checkpoint_config(dir, json{{"unet", {{"base_channels", options_.base_channels}}}, {"train", {{"unet", opts}}}});
}

double UNetTrainer::run(const fs::path& out_dir)
{
    std::ofstream log;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        log.open(out_dir / "train_unet.jsonl", std::ios::trunc);
    }
    const int64_t per_epoch = (data_.size() + options_.batch_size - 1) / options_.batch_size;
    int64_t total = per_epoch * options_.epochs;
    if (options_.max_steps >= 0)
        total = std::min(total, options_.max_steps);
    const auto start = std::chrono::steady_clock::now();
    double last = 0.0;
    while (steps_ < total) {
        last = step();
        if (log) {
            LossRecord rec{steps_, {{"bce", last}},
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
            log << json(rec).dump() << '\n';
        }
    }
    if (!out_dir.empty())
        save(out_dir);
    return last;
}

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

std::vector<AblationRow> ablation_rows(const TrainConfig& base, const fs::path& data, const fs::path& mixed_with)
{
    TrainConfig stage1 = base;
    stage1.stage = Stage::Mask;
    const auto sigma = Attention::Sigmoid, self = Attention::Self;
    std::vector<AblationRow> rows;

    // Attention schedules, with the binary source mask as the condition image.
    const std::array<std::array<Attention, 4>, 3> schedules{{{sigma, sigma, sigma, sigma},
                                                             {self, self, self, self},
                                                             {self, self, sigma, sigma}}};
    for (const auto& schedule : schedules) {
        AblationRow row{AblationTable::Attention, {}, stage1, {data}};
        row.stage1.generator.attention_schedule = schedule;
        row.stage1.generator.condition_kind = ConditionKind::Mask;
        row.stage1.generator.concat_source_mask = true;
        for (auto a : schedule)
            row.labels.push_back(a == self ? "SA" : "σ");
        rows.push_back(row);
    }

    TrainConfig mixed = stage1;
    mixed.generator = GeneratorConfig::stage1();
    mixed.generator.base_channels = stage1.generator.base_channels;
    mixed.generator.condition_kind = ConditionKind::Mask;
    if (!mixed_with.empty()) {
        rows.push_back({AblationTable::Data, {data.filename().string()}, mixed, {data}});
        rows.push_back({AblationTable::Data, {"Mixed"}, mixed, {data, mixed_with}});
    }

    for (auto kind : {ConditionKind::Mask, ConditionKind::Image})
        for (bool concat : {true, false}) {
            AblationRow row{AblationTable::Inputs,
                            {kind == ConditionKind::Mask ? "Mask" : "Image", concat ? "Concat" : "w/o Concat"},
                            mixed,
                            mixed_with.empty() ? std::vector<fs::path>{data} : std::vector<fs::path>{data, mixed_with}};
            row.stage1.generator.condition_kind = kind;
            row.stage1.generator.concat_source_mask = concat;
            rows.push_back(row);
        }
    return rows;
}

static PairedDataset open_all(const std::vector<fs::path>& roots)
{
    std::vector<PairedDataset> parts;
    for (const auto& r : roots)
        parts.push_back(PairedDataset::open(r));
    return parts.size() == 1 ? parts.front() : PairedDataset::concat(parts);
}

std::vector<AblationResult> run_ablation(const std::vector<AblationRow>& rows, const TrainConfig& stage2,
                                         const PairedDataset& eval, const fs::path& work_dir)
{
    TrainConfig stage2_config = stage2;
    stage2_config.stage = Stage::Image;
    stage2_config.networks.stage2_mode = Stage2Mode::TeacherForced;

    std::map<std::string, Generator> stage2_cache;
    std::vector<AblationResult> results;
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        std::string key;
        for (const auto& d : row.data)
            key += fs::absolute(d).string() + ";";
        PairedDataset train = open_all(row.data);
        const fs::path row_dir = work_dir.empty() ? fs::path() : work_dir / ("row" + std::to_string(r));

        GanTrainer stage1(row.stage1, train);
        stage1.run(row_dir);

        if (!stage2_cache.count(key)) {
            GanTrainer t2(stage2_config, train);
            t2.run(row_dir);
            stage2_cache.emplace(key, t2.generator());
        }
        Generator gm = stage1.generator();
        Generator gi = stage2_cache.at(key);
        gm->eval();
        gi->eval();

        AblationResult result{row};
        torch::NoGradGuard no_grad;
        for (int64_t start = 0; start < eval.size(); start += 8) {
            std::vector<int64_t> idx;
            for (int64_t i = start; i < std::min(eval.size(), start + 8); ++i)
                idx.push_back(i);
            auto batch = make_batch(eval, idx);
            auto in1 = stage1_inputs(gm->config(), batch);
            auto guide = gm->forward(in1.condition, in1.masks);
            auto in2 = stage2_inputs(gi->config(), batch, guide);
            auto out = gi->forward(in2.condition, in2.masks);
            for (int64_t k = 0; k < out.size(0); ++k) {
                auto m = evaluate_pair(out[k], batch.image_tgt[k], nullptr);
                result.mse += m.mse;
                result.psnr += m.psnr_db;
                result.ssim += m.ssim;
            }
        }
        const double n = static_cast<double>(eval.size());
        result.mse /= n;
        result.psnr /= n;
        result.ssim /= n;
        results.push_back(std::move(result));
    }
    return results;
}

static std::string fixed(double v, int digits)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

std::string format_ablation_tables(const std::vector<AblationResult>& results)
{
    std::ostringstream out;
    const std::pair<AblationTable, std::string> kinds[] = {
        {AblationTable::Attention, "| Block A | Block B | Block C | Block D | MSE | PSNR | SSIM |\n"
                                   "|---|---|---|---|---|---|---|\n"},
        {AblationTable::Data, "| Dataset | MSE | PSNR | SSIM |\n|---|---|---|---|\n"},
        {AblationTable::Inputs, "| Input Image Type | Mask (m_a) Concatenation | MSE | PSNR | SSIM |\n"
                                "|---|---|---|---|---|\n"},
    };
    bool first = true;
    for (const auto& [kind, header] : kinds) {
        if (std::none_of(results.begin(), results.end(), [&](const auto& r) { return r.row.table == kind; }))
            continue;
        if (!first)
            out << '\n';
        first = false;
        out << header;
        for (const auto& r : results) {
            if (r.row.table != kind)
                continue;
            out << '|';
            for (const auto& label : r.row.labels)
                out << ' ' << label << " |";
            out << ' ' << fixed(r.mse, 4) << " | " << fixed(r.psnr, 2) << " | " << fixed(r.ssim, 3) << " |\n";
        }
    }
    return out.str();
}

json ablation_json(const std::vector<AblationResult>& results)
{
    json out = json::array();
    for (const auto& r : results) {
        const char* table = r.row.table == AblationTable::Attention ? "attention"
                            : r.row.table == AblationTable::Data    ? "data"
                                                                    : "inputs";
        out.push_back({{"table", table}, {"labels", r.row.labels}, {"mse", r.mse}, {"psnr", r.psnr}, {"ssim", r.ssim},
                       {"generator", r.row.stage1.generator}});
    }
    return out;
}

} // namespace fast
