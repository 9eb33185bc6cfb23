#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fast/data_synth.hpp"
#include "fast/discriminator.hpp"
#include "fast/generator.hpp"
#include "fast/losses.hpp"
#include "fast/mask_unet.hpp"

namespace fast {

enum class Stage { Mask, Image, UNet };
enum class Stage2Mode { TeacherForced, Cascaded };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

// Sizes of the auxiliary networks and stage-II data routing. Optional "networks" object in the
// training config; defaults are the full-size models.
struct NetworkOptions {
    int64_t discriminator_channels = 64;
    int64_t unet_channels = 64;
    ExtractorConfig extractor;
    Stage2Mode stage2_mode = Stage2Mode::TeacherForced;
    /// Cascaded mode: directory holding gm.weights; empty means the output directory.
    std::string stage1_checkpoint;
    int64_t unet_epochs = 20;
    int64_t unet_batch_size = 1;

    bool operator==(const NetworkOptions&) const = default;
};

struct TrainConfig {
    Stage stage = Stage::Mask;
    int64_t iterations = 100000;
    int64_t batch_size = 40;
    double lr = 1e-3;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    LossWeights weights;
    GeneratorConfig generator = GeneratorConfig::stage1();
    uint64_t seed = 0;
    int64_t checkpoint_every = 10000;
    int64_t eval_every = 5000;
    NetworkOptions networks;

    /// Defaults for a stage, including the stage's default generator attention schedule.
    static TrainConfig defaults(Stage stage);
    void validate() const;
};

void to_json(nlohmann::json& j, const NetworkOptions& n);
void from_json(const nlohmann::json& j, NetworkOptions& n);
void to_json(nlohmann::json& j, const TrainConfig& c);
// Rejects unknown keys.
void from_json(const nlohmann::json& j, TrainConfig& c);
TrainConfig load_train_config(const std::filesystem::path& file);

struct LossRecord {
    int64_t iter = 0;
    std::map<std::string, double> values;
    double wall_time = 0.0;
};
void to_json(nlohmann::json& j, const LossRecord& r);

// Iterates a dataset in seeded shuffled epochs; batches may span epoch boundaries.
class BatchSampler {
public:
    BatchSampler(int64_t dataset_size, uint64_t seed);
    std::vector<int64_t> next(int64_t batch_size);

private:
    void reshuffle();
    int64_t size_;
    std::mt19937_64 rng_;
    std::vector<int64_t> order_;
    size_t cursor_ = 0;
};

// Generator input assembly shared by training, evaluation and inference.
struct StageInputs {
    torch::Tensor condition, masks, pair_source, target;
};
StageInputs stage1_inputs(const GeneratorConfig& config, const SampleBatch& batch);
StageInputs stage2_inputs(const GeneratorConfig& config, const SampleBatch& batch, const torch::Tensor& guide);

// Adversarial trainer for stage I (G_m / D_m) or stage II (G_i / D_i). Each iteration takes one
// discriminator step followed by one generator step, with separate Adam optimizers.
class GanTrainer {
public:
    GanTrainer(TrainConfig config, PairedDataset data);

    // Stage II cascaded mode: guidance masks come from this frozen stage-I generator.
    void set_stage1(Generator stage1);

    LossRecord step();
    int64_t iteration() const { return iteration_; }

    /// Eval-mode generator output for the dataset samples at `indices`.
    torch::Tensor predict(const std::vector<int64_t>& indices);
    /// Eval-mode mean pixel loss on `indices` (L2 for stage I, L1 for stage II).
    double pixel_loss(const std::vector<int64_t>& indices);
    /// MSE / PSNR / SSIM on [0, 1] over up to `limit` samples.
    std::map<std::string, double> evaluate(int64_t limit = 64);

    void save(const std::filesystem::path& dir) const;

    /// Runs until config.iterations or until `on_step` returns false. Writes a JSONL log,
    /// periodic checkpoints and a final checkpoint into `out_dir` (when non-empty).
    LossRecord run(const std::filesystem::path& out_dir,
                   const std::function<bool(const LossRecord&)>& on_step = {});

    Generator& generator() { return generator_; }
    PatchDiscriminator& discriminator() { return discriminator_; }
    const TrainConfig& config() const { return config_; }

private:
    SampleBatch next_batch();
    StageInputs assemble(const SampleBatch& batch);

    TrainConfig config_;
    PairedDataset data_;
    Generator generator_{nullptr};
    PatchDiscriminator discriminator_{nullptr};
    FeatureExtractor extractor_{nullptr};
    std::optional<Generator> stage1_;
    std::unique_ptr<torch::optim::Adam> g_opt_, d_opt_;
    BatchSampler sampler_;
    int64_t iteration_ = 0;
};

// Stage II entry point: loads the frozen stage-I generator in cascaded mode
// (MissingStage1Checkpoint when absent).
GanTrainer make_stage2_trainer(const TrainConfig& config, PairedDataset data, const std::filesystem::path& out_dir);

struct UNetTrainOptions {
    int64_t epochs = 20;
    double lr = 1e-3;
    int64_t batch_size = 1;
    int64_t base_channels = 64;
    uint64_t seed = 0;
    int64_t max_steps = -1; ///< stop early after this many steps when >= 0
};

// Per-pixel BCE on (I_A, m_A) pairs with Adam.
class UNetTrainer {
public:
    UNetTrainer(UNetTrainOptions options, PairedDataset data);

    double step();
    int64_t steps() const { return steps_; }
    /// Fraction of pixels where the hard estimate matches m_A, eval mode.
    double accuracy(const std::vector<int64_t>& indices);
    /// Mean BCE on `indices`, eval mode.
    double loss(const std::vector<int64_t>& indices);

    void save(const std::filesystem::path& dir) const;
    double run(const std::filesystem::path& out_dir);

    MaskUNet& model() { return model_; }

private:
    UNetTrainOptions options_;
    PairedDataset data_;
    MaskUNet model_{nullptr};
    std::unique_ptr<torch::optim::Adam> opt_;
    BatchSampler sampler_;
    int64_t steps_ = 0;
};

UNetTrainOptions unet_options(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

enum class AblationTable { Attention, Data, Inputs };

struct AblationRow {
    AblationTable table = AblationTable::Attention;
    std::vector<std::string> labels;        ///< leading table columns for this row
    TrainConfig stage1;                     ///< stage-I configuration under test
    std::vector<std::filesystem::path> data; ///< training sets, concatenated when more than one
};

struct AblationResult {
    AblationRow row;
    double mse = 0.0, psnr = 0.0, ssim = 0.0;
};

// The three ablation matrices: attention schedules {σσσσ, SA×4, SA SA σ σ}, single vs mixed data,
// and {Mask, Image} × {Concat, w/o Concat}. `mixed_with` may be empty to skip the data table.
std::vector<AblationRow> ablation_rows(const TrainConfig& base, const std::filesystem::path& data,
                                             const std::filesystem::path& mixed_with);

// Trains each row's stage I, a teacher-forced stage II per distinct training set (shared across
// rows), and scores the cascaded output against I_B on `eval`.
std::vector<AblationResult> run_ablation(const std::vector<AblationRow>& rows, const TrainConfig& stage2,
                                         const PairedDataset& eval, const std::filesystem::path& work_dir = {});

// Markdown tables with the published column layout, one per table kind present in `results`.
std::string format_ablation_tables(const std::vector<AblationResult>& results);
nlohmann::json ablation_json(const std::vector<AblationResult>& results);

} // namespace fast
