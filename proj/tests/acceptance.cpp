// Acceptance suite: one PASS/FAIL line per criterion. Run with criterion numbers as arguments to
// select a subset; the exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "fast/checkpoint.hpp"
#include "fast/image_io.hpp"
#include "fast/metrics.hpp"
#include "fast/pipeline.hpp"
#include "fast/service.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fast;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances and budgets.
constexpr int kOraclePairs = 20;
constexpr double kOracleTolerance = 1e-4;
constexpr double kOracleSeconds = 60.0;
constexpr double kPsnrTolerance = 1e-6;
constexpr double kSsimIdentityTolerance = 1e-9;
constexpr double kFdStep = 1e-3;
constexpr int kFdCoordinates = 5;
constexpr double kFdTolerance = 1e-2;
constexpr int64_t kOverfitSamples = 8;
constexpr int64_t kOverfitIterations = 2000;
constexpr int64_t kOverfitCheckEvery = 25;
constexpr double kStage1L2Target = 0.02;
constexpr double kStage2L1Target = 0.03;
constexpr int64_t kStage1Width = 8;
constexpr int64_t kStage2Width = 32;
constexpr double kStage2LearningRate = 2e-4;
constexpr int64_t kDataSamples = 100;
constexpr int64_t kUNetSteps = 500;
constexpr double kUNetAccuracy = 0.98;
constexpr int64_t kUNetWidth = 16;
constexpr int64_t kAblationIterations = 100;
constexpr int kConcurrentCalls = 8;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::vector<int64_t> all_indices(int64_t n)
{
    std::vector<int64_t> v(static_cast<size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// Scratch space shared by the criteria that train models.
struct Workspace {
    fixtures::TempDir root{"acceptance"};
    std::optional<PairedDataset> overfit;
    fs::path checkpoint;

    const PairedDataset& overfit_data()
    {
        if (!overfit)
            overfit = fixtures::disk_dataset(root / "overfit", kOverfitSamples, 1);
        return *overfit;
    }
};

// 1
Outcome metric_oracles(Workspace&)
{
    torch::manual_seed(101);
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int i = 0; i < kOraclePairs; ++i) {
        auto a = torch::rand({3, 64, 256}, torch::kDouble);
        auto b = (a + (0.02 + 0.02 * i) * torch::randn_like(a)).clamp(0.0, 1.0);
        worst = std::max(worst, std::abs(ssim(a, b) - oracle::ssim(a, b)));
        worst = std::max(worst, std::abs(ms_ssim(a, b) - oracle::ms_ssim(a, b)));
    }
    const double elapsed = seconds_since(start);
    return {worst < kOracleTolerance && elapsed < kOracleSeconds,
            fmt("%d pairs, max |diff| %.2e (< %.0e), %.1f s (< %.0f s)", kOraclePairs, worst, kOracleTolerance, elapsed,
                kOracleSeconds)};
}

// 2
Outcome analytic_metrics(Workspace&)
{
    auto a = torch::full({3, 64, 256}, 0.1, torch::kDouble), b = torch::zeros({3, 64, 256}, torch::kDouble);
    const double m = mse(a, b), p = psnr(a, b);
    torch::manual_seed(102);
    auto x = torch::rand({3, 64, 256}, torch::kDouble);
    const double s = ssim(x, x);
    const bool ok = m == 0.1 * 0.1 && std::abs(p - 20.0) <= kPsnrTolerance && std::abs(s - 1.0) <= kSsimIdentityTolerance;
    return {ok, fmt("mse %.17g, psnr %.9f dB, ssim(x,x) %.12f", m, p, s)};
}

// 3
Outcome loss_composition(Workspace&)
{
    auto one = torch::ones({}, torch::kDouble);
    const LossWeights w;
    const double s1 = stage1_generator_objective({one, one, one, one, one}, w).item<double>();
    const double s2 = stage2_generator_objective({one, one, one, one}, w).item<double>();
    return {s1 == 108.0 && s2 == 16.0, fmt("stage-I objective = %.17g, stage-II objective = %.17g", s1, s2)};
}

// 4
Outcome gradient_checks(Workspace&)
{
    std::ostringstream detail;
    bool ok = true;
    auto check = [&](const char* name, auto&& loss, torch::Tensor x, uint64_t seed) {
        x = x.detach().clone().set_requires_grad(true);
        loss(x).backward();
        std::mt19937_64 rng(seed);
        auto probes = oracle::gradient_probes(
            [&](const torch::Tensor& y) {
                torch::NoGradGuard no_grad;
                return loss(y).template item<double>();
            },
            x.detach(), x.grad(), rng, kFdCoordinates, kFdStep);
        double worst = 0.0;
        for (const auto& p : probes)
            worst = std::max(worst, std::abs(p.analytic - p.numeric) < 1e-8 ? 0.0
                                                                             : oracle::relative_error(p.analytic, p.numeric));
        const bool good = static_cast<int>(probes.size()) == kFdCoordinates && worst < kFdTolerance;
        ok &= good;
        detail << name << " " << fmt("%.1e", worst) << (good ? "" : "!") << "; ";
    };
    torch::manual_seed(104);
    auto img = [](int64_t h, int64_t w) { return torch::rand({1, 3, h, w}, torch::kDouble) * 2 - 1; };
    auto target = img(64, 256);
    check("l2", [&](const torch::Tensor& x) { return pixel_l2(x, target); }, img(64, 256), 1);
    check("l1", [&](const torch::Tensor& x) { return pixel_l1(x, target); }, img(64, 256), 2);
    auto real = torch::rand({2, 4, 16}, torch::kDouble) * 0.9 + 0.05;
    auto fake = torch::rand({2, 4, 16}, torch::kDouble) * 0.9 + 0.05;
    check("bce_g", [](const torch::Tensor& m) { return gan_loss_generator(m); }, fake, 3);
    check("bce_d", [&](const torch::Tensor& m) { return gan_loss_discriminator(real, m); }, fake, 4);
    auto extractor = make_feature_extractor({});
    extractor->to(torch::kDouble);
    auto small = img(32, 64);
    check("perceptual",
          [&](const torch::Tensor& x) {
              auto [p4, p9] = perceptual_loss(x, small, extractor);
              return p4 + p9;
          },
          img(32, 64), 5);
    check("msssim", [&](const torch::Tensor& x) { return msssim_loss(x, target); },
          (target + 0.3 * torch::randn_like(target)).clamp(-1.0, 1.0), 6);
    return {ok, fmt("step %.0e, %d coords, max rel err: ", kFdStep, kFdCoordinates) + detail.str()};
}

// 5
Outcome architecture_contracts(Workspace& ws)
{
    torch::manual_seed(105);
    std::ostringstream detail;
    bool ok = true;

    Generator g(GeneratorConfig::stage1());
    g->eval();
    torch::Tensor out;
    {
        torch::NoGradGuard no_grad;
        out = g->forward(torch::rand({1, 3, 64, 256}) * 2 - 1, torch::rand({1, 6, 64, 256}).gt(0.5).to(torch::kFloat) * 2 - 1);
    }
    const bool g_ok = out.sizes() == c10::IntArrayRef{1, 3, 64, 256} && out.abs().max().item<float>() <= 1.0f;
    ok &= g_ok;
    detail << "G " << out.sizes() << (g_ok ? " in [-1,1]" : " BAD") << "; ";

    PatchDiscriminator d;
    d->eval();
    torch::Tensor map;
    {
        torch::NoGradGuard no_grad;
        map = patch_discriminate(d, torch::rand({3, 64, 256}) * 2 - 1, torch::rand({3, 64, 256}) * 2 - 1);
    }
    const bool d_ok = map.sizes() == c10::IntArrayRef{4, 16} && map.min().item<float>() >= 0.0f &&
                      map.max().item<float>() <= 1.0f;
    ok &= d_ok;
    detail << "D " << map.sizes() << (d_ok ? " in [0,1]" : " BAD") << "; ";

    SelfAttention sa(1024);
    auto feat = torch::randn({1, 1024, 4, 16});
    const bool sa_ok = torch::equal(sa->forward(feat), feat);
    ok &= sa_ok;
    detail << "SA(gamma=0) " << (sa_ok ? "identity" : "NOT identity") << "; ";

    // Full-width networks, stage objectives. The first update moves gamma off zero so that the
    // attention projections are in the graph of the second batch's loss.
    int zero = 0, total = 0;
    for (Stage stage : {Stage::Mask, Stage::Image}) {
        TrainConfig c = TrainConfig::defaults(stage);
        c.batch_size = 2;
        GanTrainer t(c, ws.overfit_data());
        t.step();
        t.step();
        for (auto* m : {static_cast<torch::nn::Module*>(t.generator().get()),
                        static_cast<torch::nn::Module*>(t.discriminator().get())})
            for (const auto& p : m->named_parameters()) {
                ++total;
                if (!p.value().grad().defined() || p.value().grad().abs().sum().item<double>() == 0.0) {
                    ++zero;
                    detail << "zero grad: " << to_string(stage) << "/" << p.key() << "; ";
                }
            }
    }
    ok &= zero == 0;
    detail << total << " parameter tensors, " << zero << " with zero gradient";
    return {ok, detail.str()};
}

// 6
Outcome overfit_smoke(Workspace& ws)
{
    const auto& data = ws.overfit_data();
    const auto idx = all_indices(data.size());
    std::ostringstream detail;
    bool ok = true;
    ws.checkpoint = ws.root / "overfit_ckpt";

    auto train = [&](Stage stage, int64_t width, double lr, double target, const char* name) {
        TrainConfig c = fixtures::small_config(stage, width);
        c.lr = lr;
        c.batch_size = kOverfitSamples;
        c.iterations = kOverfitIterations;
        GanTrainer t(c, data);
        double loss = t.pixel_loss(idx);
        const auto start = std::chrono::steady_clock::now();
        t.run({}, [&](const LossRecord& r) {
            if (r.iter % kOverfitCheckEvery != 0)
                return true;
            loss = t.pixel_loss(idx);
            return loss >= target;
        });
        loss = t.pixel_loss(idx);
        t.save(ws.checkpoint);
        const bool good = loss < target;
        ok &= good;
        detail << fmt("%s %.4f (< %.2f) at iter %lld, %.0f s; ", name, loss, target,
                      static_cast<long long>(t.iteration()), seconds_since(start));
    };
    train(Stage::Mask, kStage1Width, TrainConfig::defaults(Stage::Mask).lr, kStage1L2Target, "stage-I pixel_l2");
    train(Stage::Image, kStage2Width, kStage2LearningRate, kStage2L1Target, "stage-II pixel_l1");
    return {ok, detail.str()};
}

// 7
Outcome data_generator(Workspace& ws)
{
    const auto backgrounds = BackgroundLibrary::procedural(32);
    const auto fonts = fixtures::hershey_ids();
    generate_dataset(kDataSamples, fonts, backgrounds, 7, ws.root / "gen_a", fixtures::hershey_fonts());
    generate_dataset(kDataSamples, fonts, backgrounds, 7, ws.root / "gen_b", fixtures::hershey_fonts());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool manifests = slurp(ws.root / "gen_a" / "manifest.jsonl") == slurp(ws.root / "gen_b" / "manifest.jsonl");

    auto data = PairedDataset::open(ws.root / "gen_a");
    int background_bad = 0, fixed_bad = 0;
    for (int64_t i = 0; i < data.size(); ++i) {
        const auto& s = data.at(i);
        auto outside = ((s.mask_src[0] < 0) & (s.mask_tgt[0] < 0)).unsqueeze(0).expand({3, 64, 256});
        if (!torch::equal(s.image_src.masked_select(outside), s.image_tgt.masked_select(outside)))
            ++background_bad;
        if (!torch::equal(s.mask_fixed, render_fixed_mask(s.text_tgt)))
            ++fixed_bad;
    }
    return {data.size() == kDataSamples && manifests && background_bad == 0 && fixed_bad == 0,
            fmt("%lld samples; background mismatches %d; fixed-font mismatches %d; manifests %s",
                static_cast<long long>(data.size()), background_bad, fixed_bad,
                manifests ? "byte-identical" : "DIFFER")};
}

// 8
Outcome unet_overfit(Workspace& ws)
{
    UNetTrainOptions o;
    o.base_channels = kUNetWidth;
    o.batch_size = kOverfitSamples;
    UNetTrainer t(o, ws.overfit_data());
    const auto idx = all_indices(ws.overfit_data().size());
    double acc = t.accuracy(idx);
    while (t.steps() < kUNetSteps && acc <= kUNetAccuracy) {
        t.step();
        if (t.steps() % 25 == 0)
            acc = t.accuracy(idx);
    }
    acc = t.accuracy(idx);
    if (!ws.checkpoint.empty())
        t.save(ws.checkpoint);
    return {acc > kUNetAccuracy, fmt("accuracy %.4f (> %.2f) after %lld steps", acc, kUNetAccuracy,
                                     static_cast<long long>(t.steps()))};
}

// 9
Outcome ablation_harness(Workspace& ws)
{
    generate_dataset(6, fixtures::hershey_ids(), BackgroundLibrary::procedural(8), 21, ws.root / "abl_a",
                     fixtures::hershey_fonts());
    generate_dataset(6, {"hershey-complex", "hershey-triplex"}, BackgroundLibrary::procedural(8), 22,
                     ws.root / "abl_b", fixtures::hershey_fonts());
    TrainConfig s1 = fixtures::small_config(Stage::Mask, 4);
    s1.iterations = kAblationIterations;
    s1.batch_size = 2;
    TrainConfig s2 = fixtures::small_config(Stage::Image, 4);
    s2.iterations = kAblationIterations;
    s2.batch_size = 2;
    auto rows = ablation_rows(s1, ws.root / "abl_a", ws.root / "abl_b");
    const auto start = std::chrono::steady_clock::now();
    auto results = run_ablation(rows, s2, PairedDataset::open(ws.root / "abl_a"));
    const std::string md = format_ablation_tables(results);
    std::cout << md;

    bool ok = rows.size() == 9 && results.size() == rows.size();
    for (const char* header : {"| Block A | Block B | Block C | Block D | MSE | PSNR | SSIM |", "| Dataset | MSE | PSNR | SSIM |",
                               "| Input Image Type | Mask (m_a) Concatenation | MSE | PSNR | SSIM |"})
        ok &= md.find(header) != std::string::npos;
    for (const auto& r : results)
        ok &= std::isfinite(r.mse) && std::isfinite(r.psnr) && std::isfinite(r.ssim);
    return {ok, fmt("%zu rows x %lld iterations, 3 tables, %.0f s", results.size(),
                    static_cast<long long>(kAblationIterations), seconds_since(start))};
}

// 10
Outcome end_to_end_determinism(Workspace& ws)
{
    fs::path ckpt = ws.checkpoint;
    if (ckpt.empty() || !has_weights(ckpt, "gi") || !has_weights(ckpt, "unet")) {
        ckpt = ws.root / "tiny_ckpt";
        fixtures::tiny_checkpoint(ckpt, ws.overfit_data());
    }
    ServiceOptions o;
    o.port = 0;
    Service service(o);
    service.set_editor(std::make_shared<const Editor>(Editor::load(ckpt)));
    const int port = service.start();

    const auto& sample = ws.overfit_data().at(3);
    const json request{{"image_b64_png", base64_encode(encode_png(to_bgr8(resize(sample.image_src, 48, 200))))},
                       {"target_text", "Determinism"}};
    std::vector<std::string> outputs(kConcurrentCalls);
    std::vector<int> statuses(kConcurrentCalls, 0);
    std::vector<std::thread> threads;
    for (int i = 0; i < kConcurrentCalls; ++i)
        threads.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(600);
            if (auto r = c.Post("/edit", request.dump(), "application/json")) {
                statuses[i] = r->status;
                if (r->status == 200)
                    outputs[i] = json::parse(r->body)["edited_b64_png"];
            }
        });
    for (auto& t : threads)
        t.join();
    service.stop();
    std::set<std::string> distinct(outputs.begin(), outputs.end());
    const bool all_ok = std::all_of(statuses.begin(), statuses.end(), [](int s) { return s == 200; });
    return {all_ok && distinct.size() == 1 && !outputs[0].empty(),
            fmt("%d concurrent /edit calls, %zu distinct outputs, checkpoint %s", kConcurrentCalls, distinct.size(),
                ckpt.filename().c_str())};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome(Workspace&)>>> criteria = {
        {"Metric oracles", metric_oracles},
        {"Analytic metric checks", analytic_metrics},
        {"Loss composition", loss_composition},
        {"Gradient checks", gradient_checks},
        {"Architecture contracts", architecture_contracts},
        {"Overfit smoke", overfit_smoke},
        {"Data generator", data_generator},
        {"U-Net overfit", unet_overfit},
        {"Ablation harness", ablation_harness},
        {"End-to-end determinism", end_to_end_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::atoi(argv[i]));

    torch::set_num_threads(std::max(1u, std::thread::hardware_concurrency()));
    Workspace ws;
    int failures = 0;
    for (size_t k = 0; k < criteria.size(); ++k) {
        const int number = static_cast<int>(k + 1);
        if (!selected.empty() && !selected.count(number))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[k].second(ws);
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failures += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[k].first << ": "
                  << outcome.detail << fmt(" (%.0f s)", seconds_since(start)) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
