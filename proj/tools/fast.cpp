// fast: command-line entry point for dataset synthesis, training, evaluation and editing.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fast/checkpoint.hpp"
#include "fast/data_synth.hpp"
#include "fast/image_io.hpp"
#include "fast/metrics.hpp"
#include "fast/pipeline.hpp"
#include "fast/service.hpp"
#include "fast/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fast;

namespace {

std::string env_or(const char* name, std::string fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

json read_json(const fs::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw InvalidArgument("cannot read " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw InvalidArgument(file.string() + " is not valid JSON");
    return j;
}

PairedDataset open_datasets(const std::vector<std::string>& roots)
{
    std::vector<PairedDataset> parts;
    for (const auto& r : roots)
        parts.push_back(PairedDataset::open(r));
    return parts.size() == 1 ? parts.front() : PairedDataset::concat(parts);
}

struct SynthArgs {
    std::string out;
    int64_t count = 1000;
    uint64_t seed = 0;
    std::vector<std::string> fonts;
    std::vector<std::string> font_dirs{"/usr/share/fonts"};
    std::string backgrounds;
    int procedural = 64;
    std::string ranges;
};

int run_synth(const SynthArgs& a)
{
    FontLibrary fonts = FontLibrary::with_system_fonts({a.font_dirs.begin(), a.font_dirs.end()});
    const auto font_ids = a.fonts.empty() ? fonts.ids() : a.fonts;
    BackgroundLibrary bgs =
        a.backgrounds.empty() ? BackgroundLibrary::procedural(a.procedural) : BackgroundLibrary::from_directory(a.backgrounds);
    SynthRanges ranges;
    if (!a.ranges.empty())
        ranges = read_json(a.ranges).get<SynthRanges>();
    auto records = generate_dataset(a.count, font_ids, bgs, a.seed, a.out, fonts, ranges);
    std::cout << "wrote " << records.size() << " samples to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string stage;
    std::string config;
    std::vector<std::string> data;
    std::string out;
    int64_t iterations = -1;
};

int run_train(const TrainArgs& a)
{
    const Stage stage = stage_from_string(a.stage);
    TrainConfig config = a.config.empty() ? TrainConfig::defaults(stage) : load_train_config(a.config);
    config.stage = stage;
    if (a.config.empty() || !read_json(a.config).contains("generator"))
        config.generator = TrainConfig::defaults(stage).generator;
    if (a.iterations > 0)
        config.iterations = a.iterations;
    config.validate();
    PairedDataset data = open_datasets(a.data);

    if (stage == Stage::UNet) {
        UNetTrainOptions options = unet_options(config);
        if (a.iterations > 0)
            options.max_steps = a.iterations;
        UNetTrainer trainer(options, data);
        const double last = trainer.run(a.out);
        std::cout << "unet: " << trainer.steps() << " steps, final bce " << last << "\n";
        return 0;
    }
    auto report = [](const LossRecord& r) {
        if (r.iter % 100 == 0) {
            std::cout << "iter " << r.iter;
            for (const auto& [k, v] : r.values)
                std::cout << ' ' << k << '=' << v;
            std::cout << std::endl;
        }
        return true;
    };
    if (stage == Stage::Mask) {
        GanTrainer trainer(config, data);
        trainer.run(a.out, report);
    } else {
        GanTrainer trainer = make_stage2_trainer(config, data, a.out);
        trainer.run(a.out, report);
    }
    std::cout << "checkpoint written to " << a.out << "\n";
    return 0;
}

// matrix.json:
// { "data": DIR, "mixed_with": DIR?, "eval": DIR, "stage1": TrainConfig?, "stage2": TrainConfig?,
//   "iterations": N?, "tables": ["attention", "data", "inputs"]?, "work_dir": DIR? }
int run_ablate(const std::string& matrix_file, const std::string& out)
{
    const json m = read_json(matrix_file);
    if (!m.contains("data") || !m.contains("eval"))
        throw InvalidArgument("ablation matrix needs 'data' and 'eval'");
    TrainConfig stage1 = m.contains("stage1") ? m.at("stage1").get<TrainConfig>() : TrainConfig::defaults(Stage::Mask);
    TrainConfig stage2 = m.contains("stage2") ? m.at("stage2").get<TrainConfig>() : TrainConfig::defaults(Stage::Image);
    if (m.contains("iterations")) {
        stage1.iterations = stage2.iterations = m.at("iterations").get<int64_t>();
    }
    auto rows = ablation_rows(stage1, m.at("data").get<std::string>(), m.value("mixed_with", std::string()));
    if (m.contains("tables")) {
        const auto tables = m.at("tables").get<std::vector<std::string>>();
        auto wanted = [&](AblationTable t) {
            const char* name = t == AblationTable::Attention ? "attention" : t == AblationTable::Data ? "data" : "inputs";
            return std::find(tables.begin(), tables.end(), name) != tables.end();
        };
        std::erase_if(rows, [&](const AblationRow& r) { return !wanted(r.table); });
    }
    PairedDataset eval = PairedDataset::open(m.at("eval").get<std::string>());
    auto results = run_ablation(rows, stage2, eval, m.value("work_dir", std::string()));
    const std::string tables = format_ablation_tables(results);
    std::cout << tables;
    if (!out.empty()) {
        write_file_atomic(out, tables);
        fs::path json_out = out;
        json_out.replace_extension(".json");
        write_file_atomic(json_out, ablation_json(results).dump(2) + "\n");
    }
    return 0;
}

int run_eval(const std::string& dataset, const std::string& generated, const std::string& out, const std::string& lpips)
{
    std::optional<Lpips> net;
    if (!lpips.empty())
        net = Lpips::load(lpips);
    auto report = evaluate_pairs(PairedDataset::open(dataset), generated, net ? &*net : nullptr);
    const std::string text = to_report_json(report).dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_file_atomic(out, text);
    return 0;
}

struct EditArgs {
    std::string image, text, mask, ckpt, out, debug_dir;
    bool binary_mask = false;
};

int run_edit(const EditArgs& a)
{
    if (a.ckpt.empty())
        throw MissingCheckpoint("no checkpoint: pass --ckpt or set FAST_CKPT_DIR");
    EditRequest request;
    request.image = read_image(a.image);
    request.target_text = a.text;
    if (!a.mask.empty())
        request.source_mask = read_mask(a.mask);
    const Editor editor = Editor::load(a.ckpt);
    const auto result = editor.edit(request, a.binary_mask ? MaskMode::Binary : MaskMode::Raw);
    write_image(a.out, result.edited);
    if (!a.debug_dir.empty())
        write_debug_images(result, a.debug_dir);
    return 0;
}

int run_generate(const std::string& ckpt, const std::string& dataset, const std::string& out, bool estimate,
                 bool binary_mask)
{
    const Editor editor = Editor::load(ckpt);
    PairedDataset data = PairedDataset::open(dataset);
    fs::create_directories(out);
    for (int64_t i = 0; i < data.size(); ++i) {
        const auto& s = data.at(i);
        EditRequest request{s.image_src, s.text_tgt, std::nullopt};
        if (!estimate)
            request.source_mask = s.mask_src;
        write_image(fs::path(out) / (data.record(i).id + ".png"),
                    editor.edit(request, binary_mask ? MaskMode::Binary : MaskMode::Raw).edited);
    }
    std::cout << "wrote " << data.size() << " edits to " << out << "\n";
    return 0;
}

int run_serve(const std::string& ckpt, const ServiceOptions& options)
{
    if (ckpt.empty())
        throw MissingCheckpoint("no checkpoint: pass --ckpt or set FAST_CKPT_DIR");
    Service service(options);
    const int port = service.bind();
    service.load_async(ckpt);
    std::cout << "listening on http://" << options.host << ":" << port << std::endl;
    service.listen();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-stage scene text editing: data synthesis, training, evaluation and inference"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic paired dataset");
    synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
    synth_cmd->add_option("--count", synth.count, "Number of samples");
    synth_cmd->add_option("--seed", synth.seed, "Generation seed");
    synth_cmd->add_option("--font", synth.fonts, "Font id to sample from (repeatable; default: all)");
    synth_cmd->add_option("--font-dir", synth.font_dirs, "Directories scanned for TrueType fonts");
    synth_cmd->add_option("--backgrounds", synth.backgrounds, "Directory of background images");
    synth_cmd->add_option("--procedural", synth.procedural, "Procedural background count when no directory is given");
    synth_cmd->add_option("--ranges", synth.ranges, "JSON file overriding the style sampling ranges");

    std::string mostel_src, mostel_dst;
    auto* mostel_cmd = app.add_subcommand("convert-mostel", "Convert a MOSTEL-style directory into the dataset layout");
    mostel_cmd->add_option("--src", mostel_src)->required();
    mostel_cmd->add_option("--dst", mostel_dst)->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train one stage");
    train_cmd->add_option("--stage", train.stage, "mask, image or unet")->required();
    train_cmd->add_option("--config", train.config, "Training config JSON");
    train_cmd->add_option("--data", train.data, "Dataset directory (repeat to mix)")->required();
    train_cmd->add_option("--out", train.out, "Checkpoint directory")->required();
    train_cmd->add_option("--iterations", train.iterations, "Override the configured iteration count");

    std::string matrix, ablate_out;
    auto* ablate_cmd = app.add_subcommand("ablate", "Run the ablation matrices");
    ablate_cmd->add_option("--matrix", matrix, "Ablation matrix JSON")->required();
    ablate_cmd->add_option("--out", ablate_out, "Markdown output (a .json twin is written beside it)");

    std::string eval_dataset, eval_generated, eval_out, eval_lpips;
    auto* eval_cmd = app.add_subcommand("eval", "Score generated images against a dataset's targets");
    eval_cmd->add_option("--dataset", eval_dataset)->required();
    eval_cmd->add_option("--generated", eval_generated, "Directory of <id>.png outputs")->required();
    eval_cmd->add_option("--out", eval_out, "report.json path (stdout when omitted)");
    eval_cmd->add_option("--lpips", eval_lpips, "LPIPS weight archive; LPIPS is reported as null without it");

    EditArgs edit;
    edit.ckpt = env_or("FAST_CKPT_DIR", "");
    auto* edit_cmd = app.add_subcommand("edit", "Replace the text in one crop");
    edit_cmd->add_option("--image", edit.image)->required();
    edit_cmd->add_option("--text", edit.text)->required();
    edit_cmd->add_option("--mask", edit.mask, "Source text mask; estimated with the U-Net when omitted");
    edit_cmd->add_option("--ckpt", edit.ckpt, "Checkpoint directory (default $FAST_CKPT_DIR)");
    edit_cmd->add_option("--out", edit.out)->required();
    edit_cmd->add_option("--debug-dir", edit.debug_dir, "Write m_A, m_F and m_B_bar here");
    auto* raw_flag = edit_cmd->add_flag("--raw-mask", "Feed the raw stage-I mask to stage II (default)");
    edit_cmd->add_flag("--binary-mask", edit.binary_mask, "Binarize the stage-I mask at 0 first")->excludes(raw_flag);

    std::string gen_ckpt = env_or("FAST_CKPT_DIR", ""), gen_dataset, gen_out;
    bool gen_estimate = false, gen_binary = false;
    auto* gen_cmd = app.add_subcommand("generate", "Edit every sample of a dataset into <id>.png files");
    gen_cmd->add_option("--ckpt", gen_ckpt);
    gen_cmd->add_option("--dataset", gen_dataset)->required();
    gen_cmd->add_option("--out", gen_out)->required();
    gen_cmd->add_flag("--estimate-mask", gen_estimate, "Use the U-Net instead of the stored source masks");
    gen_cmd->add_flag("--binary-mask", gen_binary);

    std::string serve_ckpt = env_or("FAST_CKPT_DIR", ""), serve_ui;
    ServiceOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP editing service");
    serve_cmd->add_option("--ckpt", serve_ckpt, "Checkpoint directory (default $FAST_CKPT_DIR)");
    serve_cmd->add_option("--host", serve.host);
    serve_cmd->add_option("--port", serve.port);
    serve_cmd->add_option("--ui", serve_ui, "Directory of built front-end assets served under /ui");
    serve_cmd->add_option("--threads", serve.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth_cmd)
            return run_synth(synth);
        if (*mostel_cmd) {
            std::cout << "converted " << convert_mostel(mostel_src, mostel_dst) << " samples\n";
            return 0;
        }
        if (*train_cmd)
            return run_train(train);
        if (*ablate_cmd)
            return run_ablate(matrix, ablate_out);
        if (*eval_cmd)
            return run_eval(eval_dataset, eval_generated, eval_out, eval_lpips);
        if (*edit_cmd)
            return run_edit(edit);
        if (*gen_cmd)
            return run_generate(gen_ckpt, gen_dataset, gen_out, gen_estimate, gen_binary);
        if (*serve_cmd) {
            serve.ui_dir = serve_ui;
            return run_serve(serve_ckpt, serve);
        }
    } catch (const NonFiniteLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        // Bad inputs, missing assets and missing checkpoints.
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
