#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfs/model.hpp"
#include "dfs/opcount.hpp"
#include "dfs/rng.hpp"
#include "dfs/shift.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

// Latency/bytes/op-count micro-benchmark for the shift kernels and one full
// forward pass. Latency is reported, never gated: correctness claims ride on
// the exact mult-op and bytes-moved columns.

struct BenchKernelResult {
    std::string name;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    std::uint64_t bytes_moved = 0;  // bytes read + bytes written per invocation
    std::uint64_t mult_ops = 0;     // instrumented multiplications per invocation
};

struct BenchConfigRow {
    std::string name;
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
};

struct BenchShape {
    std::size_t c = 8, t = 8, h = 16, w = 16;
    std::size_t volume() const { return c * t * h * w; }
};

struct BenchReport {
    BenchShape shape;
    std::size_t iters = 0;
    std::size_t warmup = 0;
    std::vector<BenchKernelResult> kernels;
    std::vector<BenchConfigRow> configs;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["shape"] = {{"c", shape.c}, {"t", shape.t}, {"h", shape.h}, {"w", shape.w}};
        j["iters"] = iters;
        j["warmup"] = warmup;
        auto& ks = j["kernels"] = nlohmann::json::array();
        for (const auto& k : kernels)
            ks.push_back({{"name", k.name},
                          {"mean_ms", k.mean_ms},
                          {"min_ms", k.min_ms},
                          {"bytes_moved", k.bytes_moved},
                          {"mult_ops", k.mult_ops}});
        auto& cs = j["configs"] = nlohmann::json::array();
        for (const auto& c : configs)
            cs.push_back({{"name", c.name}, {"params", c.params}, {"macs", c.macs}});
        return j;
    }
};

// Exact traffic of the out-of-place kernels: every input element read once,
// every output element written once, f64.
inline std::uint64_t shift_bytes_moved(const BenchShape& s, std::size_t tensors_in_out) {
    return static_cast<std::uint64_t>(2) * tensors_in_out * s.volume() * sizeof(double);
}

namespace detail {

template <typename Fn>
BenchKernelResult time_kernel(const std::string& name, std::size_t iters, std::size_t warmup,
                              std::uint64_t bytes, Fn&& fn) {
    using clock = std::chrono::steady_clock;
    for (std::size_t n = 0; n < warmup; ++n) fn();
    OpTrace trace;
    double total_ms = 0.0;
    double min_ms = 0.0;
    for (std::size_t n = 0; n < iters; ++n) {
        const auto t0 = clock::now();
        fn();
        const auto t1 = clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        total_ms += ms;
        if (n == 0 || ms < min_ms) min_ms = ms;
    }
    BenchKernelResult r;
    r.name = name;
    r.mean_ms = total_ms / static_cast<double>(iters);
    r.min_ms = min_ms;
    r.bytes_moved = bytes;
    r.mult_ops = trace.mult_ops() / iters;
    return r;
}

}  // namespace detail

inline BenchReport run_bench(const BenchShape& shape, std::size_t iters, std::size_t warmup) {
    if (iters < 1) throw ConfigError("bench: iters must be >= 1");
    BenchReport report;
    report.shape = shape;
    report.iters = iters;
    report.warmup = warmup;

    std::mt19937_64 rng(mix_seed(0xbe5c, shape.volume()));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    ClipTensor a(shape.c, shape.t, shape.h, shape.w, 0.0);
    ClipTensor b = a;
    for (double& v : a.data) v = unit(rng);
    for (double& v : b.data) v = unit(rng);

    ShiftConfig sc;
    sc.sites = {1};
    const std::size_t k = sc.k_at(shape.c);
    const std::size_t i = sc.i_at(shape.c);
    if (2 * i + k > shape.c) throw ConfigError("bench: shape too narrow for default bands");

    volatile double sink = 0.0;
    report.kernels.push_back(detail::time_kernel(
        "modality_shift_pair", iters, warmup, shift_bytes_moved(shape, 2), [&] {
            auto [p, q] = modality_shift_pair(a, b, k);
            sink = p.data[0] + q.data[0];
        }));
    report.kernels.push_back(detail::time_kernel(
        "temporal_shift", iters, warmup, shift_bytes_moved(shape, 1), [&] {
            ClipTensor y = temporal_shift(a, i);
            sink = y.data[0];
        }));
    report.kernels.push_back(detail::time_kernel(
        "dual_shift", iters, warmup, shift_bytes_moved(shape, 4), [&] {
            auto ys = dual_shift({a, b}, sc, 1);
            sink = ys[0].data[0];
        }));

    NetworkConfig net = default_network_config(2, 4);
    net.input_c = shape.c;
    net.input_t = shape.t;
    net.input_h = shape.h;
    net.input_w = shape.w;
    net.stages[0].in_channels = shape.c;
    net.validate();
    ParamStore params = ParamStore::init(net, 7);
    MultiModalSample sample;
    sample.clips = {a, b};
    sample.label = 0;
    report.kernels.push_back(
        detail::time_kernel("forward_full", iters, warmup, 0, [&] {
            auto [logits, tape] = forward_full(sample, net, params);
            sink = logits[0];
        }));
    (void)sink;

    NetworkConfig single = default_network_config(1, 4);
    single.input_c = shape.c;
    single.input_t = shape.t;
    single.input_h = shape.h;
    single.input_w = shape.w;
    single.stages[0].in_channels = shape.c;
    NetworkConfig dual_nonshared = net;
    for (auto& s : dual_nonshared.stages) s.shared = false;
    report.configs.push_back({"single", param_count(single), mac_count(single)});
    report.configs.push_back({"dual_shared", param_count(net), mac_count(net)});
    report.configs.push_back(
        {"dual_nonshared", param_count(dual_nonshared), mac_count(dual_nonshared)});
    return report;
}

}  // namespace dfs
