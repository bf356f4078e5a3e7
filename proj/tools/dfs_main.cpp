// dfs: generate synthetic multi-modal clip datasets, train/evaluate the
// shift-based video network, check gradients, and micro-benchmark the
// kernels. Exit codes: 0 success, 1 runtime or check failure, 2 usage or
// configuration error. DFS_SEED, when set, overrides any --seed flag.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfs/bench.hpp"
#include "dfs/error.hpp"
#include "dfs/gradcheck.hpp"
#include "dfs/metrics.hpp"
#include "dfs/model.hpp"
#include "dfs/runconfig.hpp"
#include "dfs/synthdata.hpp"
#include "dfs/train.hpp"

namespace {

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("DFS_SEED");
    if (!s || !*s) return std::nullopt;
    return std::strtoull(s, nullptr, 10);
}

int cmd_gen(const std::string& out_dir, const std::string& mode, std::size_t per_class,
            std::uint64_t seed, std::size_t t, std::size_t hw, double noise, double intensity) {
    dfs::GenConfig gc;
    gc.mode = dfs::gen_mode_from_string(mode);
    gc.samples_per_class = per_class;
    gc.seed = env_seed().value_or(seed);
    gc.frames = t;
    gc.extent = hw;
    gc.noise_std = noise;
    gc.dot_intensity = intensity;
    gc.flash_intensity = intensity;
    dfs::generate_dataset(gc, out_dir);
    std::cout << (std::filesystem::path(out_dir) / "manifest.json").string() << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::optional<std::size_t> epochs,
              std::optional<std::uint64_t> seed, const std::string& log_path) {
    std::ifstream is(config_path);
    if (!is) throw dfs::IoError("cannot open config " + config_path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw dfs::ConfigError(std::string("config: ") + e.what());
    }
    dfs::RunConfig rc = dfs::parse_run_config(j);
    if (!data_dir.empty()) rc.data_dir = data_dir;
    if (epochs) rc.train.epochs = *epochs;
    if (seed) rc.train.seed = *seed;
    if (auto es = env_seed()) rc.train.seed = *es;
    if (rc.data_dir.empty()) throw dfs::ConfigError("no data directory (config data.dir or --data)");

    const dfs::DatasetManifest manifest = dfs::load_manifest(rc.data_dir);
    if (manifest.classes.size() > rc.network.num_classes)
        throw dfs::ConfigError("dataset has more classes than the network");
    const auto samples = dfs::load_dataset(rc.data_dir, manifest);

    auto [params, log] = dfs::train_model(rc.network, rc.train, samples);
    dfs::save_model(params, rc.network, out_path);

    std::ofstream log_os;
    if (!log_path.empty()) {
        log_os.open(log_path);
        if (!log_os) throw dfs::IoError("cannot open log file " + log_path);
    }
    for (const auto& e : log) {
        nlohmann::json line = {
            {"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"train_top1", e.train_top1}};
        std::cout << line.dump() << "\n";
        if (log_os) log_os << line.dump() << "\n";
    }
    std::cerr << "model written to " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& report_path) {
    auto [params, cfg] = dfs::load_model(model_path);
    const dfs::DatasetManifest manifest = dfs::load_manifest(data_dir);
    if (manifest.classes.size() > cfg.num_classes)
        throw dfs::ConfigError("dataset has more classes than the model");
    const auto samples = dfs::load_dataset(data_dir, manifest);

    dfs::EvalReport report;
    try {
        report.confusion = dfs::evaluate_confusion(samples, cfg, params);
    } catch (const dfs::ShapeMismatch& e) {
        throw dfs::ConfigError(std::string("model/data dims incompatible: ") + e.what());
    }
    report.top1 = dfs::top1_accuracy(report.confusion);
    report.balanced = dfs::balanced_accuracy(report.confusion);
    report.num_samples = report.confusion.total();
    report.model_path = model_path;
    report.dataset_manifest =
        (std::filesystem::path(data_dir) / "manifest.json").string();
    report.seed = manifest.seed;

    if (!report_path.empty()) {
        std::ofstream os(report_path);
        if (!os) throw dfs::IoError("cannot open report file " + report_path);
        os << report.to_json().dump(2) << "\n";
    }
    std::printf("top1 %.6f\nbalanced %.6f\n", report.top1, report.balanced);
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, double eps, double tol, bool corrupt) {
    dfs::GradCheckOptions opt;
    opt.seed = env_seed().value_or(seed);
    opt.eps = eps;
    opt.tol = tol;
    opt.corrupt_temporal_adjoint = corrupt;

    bool all_pass = true;
    const std::pair<const char*, dfs::NetworkConfig> configs[] = {
        {"micro/all-sites", dfs::gradcheck_micro_config()},
        {"micro/no-shift", dfs::gradcheck_micro_config_noshift()},
    };
    for (const auto& [label, cfg] : configs) {
        const dfs::GradCheckReport report = dfs::run_gradcheck(cfg, opt);
        for (const auto& b : report.blocks)
            std::printf("%-18s %-22s max_rel_err %.3e  %s\n", label, b.name.c_str(),
                        b.max_rel_err, b.pass ? "pass" : "FAIL");
        if (!report.pass)
            std::printf("%-18s worst offender: %s (%.3e > tol %.1e)\n", label,
                        report.worst_block.c_str(), report.worst_err, tol);
        all_pass = all_pass && report.pass;
    }
    return all_pass ? 0 : 1;
}

int cmd_bench(const std::string& shape_str, std::size_t iters, std::size_t warmup,
              const std::string& report_path) {
    dfs::BenchShape shape;
    if (std::sscanf(shape_str.c_str(), "%zu,%zu,%zu,%zu", &shape.c, &shape.t, &shape.h,
                    &shape.w) != 4)
        throw dfs::ConfigError("--shape expects C,T,H,W");
    const dfs::BenchReport report = dfs::run_bench(shape, iters, warmup);
    for (const auto& k : report.kernels)
        std::printf("%-20s mean %.4f ms  min %.4f ms  bytes %llu  mults %llu\n", k.name.c_str(),
                    k.mean_ms, k.min_ms, static_cast<unsigned long long>(k.bytes_moved),
                    static_cast<unsigned long long>(k.mult_ops));
    for (const auto& c : report.configs)
        std::printf("%-20s params %llu  macs %llu\n", c.name.c_str(),
                    static_cast<unsigned long long>(c.params),
                    static_cast<unsigned long long>(c.macs));
    if (!report_path.empty()) {
        std::ofstream os(report_path);
        if (!os) throw dfs::IoError("cannot open report file " + report_path);
        os << report.to_json().dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual feature shift networks: data generation, training, evaluation"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate a synthetic clip dataset");
    std::string gen_out, gen_mode = "full";
    std::size_t gen_per_class = 50, gen_t = 8, gen_hw = 16;
    std::uint64_t gen_seed = 0;
    double gen_noise = 0.05, gen_intensity = 1.0;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--mode", gen_mode, "direction|sync|full");
    gen->add_option("--per-class", gen_per_class, "samples per class");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--t", gen_t, "frames per clip");
    gen->add_option("--hw", gen_hw, "spatial extent (H = W)");
    gen->add_option("--noise", gen_noise, "noise standard deviation");
    gen->add_option("--intensity", gen_intensity, "dot and flash intensity");

    auto* train = app.add_subcommand("train", "train a model on a generated dataset");
    std::string train_config, train_data, train_out = "model.bin", train_log;
    std::optional<std::size_t> train_epochs;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--config", train_config, "run config JSON")->required();
    train->add_option("--data", train_data, "dataset directory (overrides config)");
    train->add_option("--out", train_out, "output model file");
    train->add_option("--epochs", train_epochs, "override epochs");
    train->add_option("--seed", train_seed, "override training seed");
    train->add_option("--log", train_log, "also write the JSON-lines log here");

    auto* eval = app.add_subcommand("eval", "evaluate a model, write an eval report");
    std::string eval_model, eval_data, eval_report;
    eval->add_option("--model", eval_model, "model file")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--report", eval_report, "eval report JSON path");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::uint64_t gc_seed = 1;
    double gc_eps = 1e-5, gc_tol = 1e-4;
    bool gc_corrupt = false;
    gradcheck->add_option("--seed", gc_seed, "check seed");
    gradcheck->add_option("--eps", gc_eps, "finite-difference step");
    gradcheck->add_option("--tol", gc_tol, "max relative error");
    gradcheck->add_flag("--corrupt-temporal-adjoint", gc_corrupt,
                        "mutation-test hook: skip the temporal adjoint")
        ->group("");  // hidden

    auto* bench = app.add_subcommand("bench", "micro-benchmark kernels and accounting");
    std::string bench_shape = "8,8,16,16", bench_report;
    std::size_t bench_iters = 100, bench_warmup = 10;
    bench->add_option("--shape", bench_shape, "tensor shape C,T,H,W");
    bench->add_option("--iters", bench_iters, "measured iterations");
    bench->add_option("--warmup", bench_warmup, "warmup iterations");
    bench->add_option("--report", bench_report, "bench report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_out, gen_mode, gen_per_class, gen_seed, gen_t, gen_hw, gen_noise,
                           gen_intensity);
        if (train->parsed())
            return cmd_train(train_config, train_data, train_out, train_epochs, train_seed,
                             train_log);
        if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_report);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_eps, gc_tol, gc_corrupt);
        if (bench->parsed()) return cmd_bench(bench_shape, bench_iters, bench_warmup, bench_report);
    } catch (const dfs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dfs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
