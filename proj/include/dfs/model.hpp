#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dfs/conv.hpp"
#include "dfs/error.hpp"
#include "dfs/opcount.hpp"
#include "dfs/sample.hpp"
#include "dfs/shift.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct StageSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t stride = 1;  // 1 or 2; kernel is fixed 3x3
    bool shared = false;     // one weight set across modalities when true
};

struct NetworkConfig {
    std::size_t modalities = 2;
    std::size_t num_classes = 4;
    // Input dims; t/h/w of 0 mean "taken from the data" (models loaded from
    // file carry no spatial/temporal dims).
    std::size_t input_c = 1;
    std::size_t input_t = 8;
    std::size_t input_h = 16;
    std::size_t input_w = 16;
    std::vector<StageSpec> stages;
    ShiftConfig shift;

    std::size_t feature_dim() const { return stages.back().out_channels; }

    void validate() const {
        if (modalities < 1) throw ConfigError("NetworkConfig: modalities must be >= 1");
        if (num_classes < 2) throw ConfigError("NetworkConfig: need at least 2 classes");
        if (stages.empty()) throw ConfigError("NetworkConfig: no stages");
        if (stages.front().in_channels != input_c)
            throw ConfigError("NetworkConfig: stage 1 input channels disagree with input_c");
        for (std::size_t s = 0; s < stages.size(); ++s) {
            if (stages[s].stride != 1 && stages[s].stride != 2)
                throw ConfigError("NetworkConfig: stride must be 1 or 2");
            if (stages[s].out_channels == 0)
                throw ConfigError("NetworkConfig: zero-width stage");
            if (s > 0 && stages[s].in_channels != stages[s - 1].out_channels)
                throw ConfigError("NetworkConfig: stage channel chain broken");
        }
        for (int gap : shift.sites) {
            if (gap < 1 || gap >= static_cast<int>(stages.size()))
                throw ConfigError("NetworkConfig: shift site out of range");
            shift.validate_bands(stages[gap - 1].out_channels, gap);
        }
    }
};

// Five 3x3 stages, strides 2,2,2,1,1, middle two shared: in->16->32->64->64->64.
inline NetworkConfig default_network_config(std::size_t modalities = 2,
                                            std::size_t num_classes = 4) {
    NetworkConfig cfg;
    cfg.modalities = modalities;
    cfg.num_classes = num_classes;
    cfg.stages = {
        {1, 16, 2, false}, {16, 32, 2, true}, {32, 64, 2, true}, {64, 64, 1, false},
        {64, 64, 1, false},
    };
    return cfg;
}

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 0;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
        if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct ConvParams {
    std::vector<double> w;  // [out][in][3][3]
    std::vector<double> b;  // [out]
};

// All trainable weights. Separate stages keep one ConvParams per modality,
// shared stages exactly one. The classifier is a feature_dim x num_classes
// matrix (row-major, feature-major) plus bias.
struct ParamStore {
    std::vector<std::vector<ConvParams>> stages;
    std::vector<double> fc_w;
    std::vector<double> fc_b;

    static ParamStore zeros(const NetworkConfig& cfg) {
        ParamStore ps;
        ps.stages.resize(cfg.stages.size());
        for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
            const auto& spec = cfg.stages[s];
            const std::size_t sets = spec.shared ? 1 : cfg.modalities;
            ps.stages[s].resize(sets);
            for (auto& p : ps.stages[s]) {
                p.w.assign(spec.out_channels * spec.in_channels * kKernel * kKernel, 0.0);
                p.b.assign(spec.out_channels, 0.0);
            }
        }
        ps.fc_w.assign(cfg.feature_dim() * cfg.num_classes, 0.0);
        ps.fc_b.assign(cfg.num_classes, 0.0);
        return ps;
    }

    // Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
    static ParamStore init(const NetworkConfig& cfg, std::uint64_t seed) {
        ParamStore ps = zeros(cfg);
        std::mt19937_64 rng(seed);
        for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
            const auto& spec = cfg.stages[s];
            const double fan_in = static_cast<double>(spec.in_channels * kKernel * kKernel);
            const double fan_out = static_cast<double>(spec.out_channels * kKernel * kKernel);
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (auto& p : ps.stages[s])
                for (auto& v : p.w) v = dist(rng);
        }
        const double fan_in = static_cast<double>(cfg.feature_dim());
        const double fan_out = static_cast<double>(cfg.num_classes);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : ps.fc_w) v = dist(rng);
        return ps;
    }

    bool same_shape(const ParamStore& o) const {
        if (stages.size() != o.stages.size() || fc_w.size() != o.fc_w.size() ||
            fc_b.size() != o.fc_b.size())
            return false;
        for (std::size_t s = 0; s < stages.size(); ++s) {
            if (stages[s].size() != o.stages[s].size()) return false;
            for (std::size_t p = 0; p < stages[s].size(); ++p)
                if (stages[s][p].w.size() != o.stages[s][p].w.size() ||
                    stages[s][p].b.size() != o.stages[s][p].b.size())
                    return false;
        }
        return true;
    }

    template <typename Fn>
    void for_each_array(Fn&& fn) {
        for (auto& st : stages)
            for (auto& p : st) {
                fn(p.w);
                fn(p.b);
            }
        fn(fc_w);
        fn(fc_b);
    }
    template <typename Fn>
    void for_each_array(Fn&& fn) const {
        for (const auto& st : stages)
            for (const auto& p : st) {
                fn(p.w);
                fn(p.b);
            }
        fn(fc_w);
        fn(fc_b);
    }
};

using GradStore = ParamStore;

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

namespace detail {

// Total order on non-NaN doubles (-0.0 before +0.0) so sorting is canonical.
inline bool total_less(double a, double b) {
    if (a < b) return true;
    if (b < a) return false;
    return std::signbit(a) && !std::signbit(b);
}

// Mean with a canonical summation order: sorting first makes the result
// exactly invariant under any permutation of the inputs, which the frame
// consensus and modality fusion rely on at the bit level.
inline double canonical_mean(std::vector<double>& vals) {
    std::sort(vals.begin(), vals.end(), total_less);
    double sum = 0.0;
    for (double v : vals) sum += v;
    return sum / static_cast<double>(vals.size());
}

inline void relu_inplace(ClipTensor& x) {
    for (double& v : x.data) v = v > 0.0 ? v : 0.0;
}

inline void relu_mask_multiply(const ClipTensor& preact, ClipTensor& grad) {
    for (std::size_t n = 0; n < grad.data.size(); ++n)
        if (!(preact.data[n] > 0.0)) grad.data[n] = 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

// Everything backward_full needs to replay the pass: per-stage inputs
// (post-shift) and pre-activation outputs per modality, the fused feature and
// the logits.
struct ForwardTape {
    std::vector<std::vector<ClipTensor>> stage_inputs;   // [stage][modality]
    std::vector<std::vector<ClipTensor>> stage_preacts;  // [stage][modality]
    std::vector<double> fused;
    std::vector<double> logits;
};

// One stage applied to every modality branch: conv + bias + ReLU. Shared
// stages apply sets[0] to every branch.
inline std::vector<ClipTensor> stage_forward(const std::vector<ClipTensor>& xs,
                                             const StageSpec& spec,
                                             const std::vector<ConvParams>& sets) {
    if (!spec.shared && sets.size() != xs.size())
        throw ShapeMismatch("stage_forward: one weight set per modality required");
    std::vector<ClipTensor> out;
    out.reserve(xs.size());
    for (std::size_t p = 0; p < xs.size(); ++p) {
        const ConvParams& params = spec.shared ? sets[0] : sets[p];
        ClipTensor y = conv2d_forward(xs[p], params.w.data(), params.b.data(), spec.in_channels,
                                      spec.out_channels, spec.stride);
        detail::relu_inplace(y);
        out.push_back(std::move(y));
    }
    return out;
}

namespace detail {

// Spatial mean per channel per frame, then mean over frames in canonical
// order: the clip feature of one modality branch.
inline std::vector<double> pooled_clip_feature(const ClipTensor& x) {
    const std::size_t plane = x.plane_size();
    std::vector<double> feat(x.channels);
    std::vector<double> per_frame(x.frames);
    for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t t = 0; t < x.frames; ++t) {
            const double* p = x.plane_ptr(t, c);
            double sum = 0.0;
            for (std::size_t n = 0; n < plane; ++n) sum += p[n];
            per_frame[t] = sum / static_cast<double>(plane);
        }
        feat[c] = canonical_mean(per_frame);
    }
    return feat;
}

}  // namespace detail

inline void validate_params(const NetworkConfig& cfg, const ParamStore& params) {
    if (params.stages.size() != cfg.stages.size())
        throw StateError("params: stage count does not match config");
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
        const auto& spec = cfg.stages[s];
        const std::size_t want_sets = spec.shared ? 1 : cfg.modalities;
        if (params.stages[s].size() != want_sets)
            throw StateError("params: weight set count does not match config");
        for (const auto& p : params.stages[s])
            if (p.w.size() != spec.out_channels * spec.in_channels * kKernel * kKernel ||
                p.b.size() != spec.out_channels)
                throw StateError("params: stage array sizes do not match config");
    }
    if (params.fc_w.size() != cfg.feature_dim() * cfg.num_classes ||
        params.fc_b.size() != cfg.num_classes)
        throw StateError("params: classifier sizes do not match config");
}

inline std::pair<std::vector<double>, ForwardTape> forward_full(const MultiModalSample& sample,
                                                                const NetworkConfig& cfg,
                                                                const ParamStore& params) {
    sample.validate();
    cfg.validate();
    validate_params(cfg, params);
    if (sample.clips.size() != cfg.modalities)
        throw ShapeMismatch("forward_full: modality count mismatch");
    if (sample.clips[0].channels != cfg.input_c)
        throw ShapeMismatch("forward_full: input channel mismatch");
    if (cfg.input_t && sample.clips[0].frames != cfg.input_t)
        throw ShapeMismatch("forward_full: frame count mismatch");
    if (cfg.input_h && sample.clips[0].height != cfg.input_h)
        throw ShapeMismatch("forward_full: height mismatch");
    if (cfg.input_w && sample.clips[0].width != cfg.input_w)
        throw ShapeMismatch("forward_full: width mismatch");

    ForwardTape tape;
    const std::size_t n_stages = cfg.stages.size();
    tape.stage_inputs.resize(n_stages);
    tape.stage_preacts.resize(n_stages);

    std::vector<ClipTensor> xs = sample.clips;
    for (std::size_t s = 0; s < n_stages; ++s) {
        tape.stage_inputs[s] = xs;
        const auto& spec = cfg.stages[s];
        std::vector<ClipTensor> act;
        act.reserve(xs.size());
        for (std::size_t p = 0; p < xs.size(); ++p) {
            const ConvParams& pr = spec.shared ? params.stages[s][0] : params.stages[s][p];
            ClipTensor pre = conv2d_forward(xs[p], pr.w.data(), pr.b.data(), spec.in_channels,
                                            spec.out_channels, spec.stride);
            tape.stage_preacts[s].push_back(pre);
            detail::relu_inplace(pre);
            act.push_back(std::move(pre));
        }
        const int gap = static_cast<int>(s) + 1;
        if (s + 1 < n_stages && cfg.shift.has_site(gap))
            xs = dual_shift(act, cfg.shift, gap);
        else
            xs = std::move(act);
    }

    // Per-modality clip features, then modality fusion by element-wise mean.
    const std::size_t fdim = cfg.feature_dim();
    std::vector<std::vector<double>> feats;
    feats.reserve(cfg.modalities);
    for (const auto& x : xs) feats.push_back(detail::pooled_clip_feature(x));
    tape.fused.resize(fdim);
    std::vector<double> col(cfg.modalities);
    for (std::size_t f = 0; f < fdim; ++f) {
        for (std::size_t p = 0; p < cfg.modalities; ++p) col[p] = feats[p][f];
        tape.fused[f] = detail::canonical_mean(col);
    }

    const std::size_t K = cfg.num_classes;
    tape.logits.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) tape.logits[k] = params.fc_b[k];
    for (std::size_t f = 0; f < fdim; ++f) {
        const double v = tape.fused[f];
        const double* row = params.fc_w.data() + f * K;
        for (std::size_t k = 0; k < K; ++k) tape.logits[k] += v * row[k];
    }
    opcount::add_mults(static_cast<std::uint64_t>(fdim) * K);

    return {tape.logits, std::move(tape)};
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

inline double cross_entropy_loss(const std::vector<double>& logits, std::size_t label) {
    if (label >= logits.size()) throw InvalidLabel("cross_entropy_loss: label out of range");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    return m + std::log(sum) - logits[label];
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

inline GradStore backward_full(const ForwardTape& tape, std::size_t label,
                               const NetworkConfig& cfg, const ParamStore& params) {
    if (label >= cfg.num_classes) throw InvalidLabel("backward_full: label out of range");
    if (tape.stage_inputs.size() != cfg.stages.size() || tape.fused.size() != cfg.feature_dim())
        throw StateError("backward_full: tape does not match config");
    GradStore grads = ParamStore::zeros(cfg);
    if (!grads.same_shape(params)) throw StateError("backward_full: params do not match config");

    const std::size_t K = cfg.num_classes;
    const std::size_t fdim = cfg.feature_dim();
    const std::size_t N = cfg.modalities;

    std::vector<double> dlogits = softmax(tape.logits);
    dlogits[label] -= 1.0;

    std::vector<double> dfused(fdim, 0.0);
    for (std::size_t f = 0; f < fdim; ++f) {
        const double* wrow = params.fc_w.data() + f * K;
        double* gwrow = grads.fc_w.data() + f * K;
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            gwrow[k] += tape.fused[f] * dlogits[k];
            acc += wrow[k] * dlogits[k];
        }
        dfused[f] = acc;
    }
    for (std::size_t k = 0; k < K; ++k) grads.fc_b[k] += dlogits[k];
    opcount::add_mults(2 * static_cast<std::uint64_t>(fdim) * K);

    // Fusion and pooling are means, so the gradient is a uniform broadcast.
    const std::size_t n_stages = cfg.stages.size();
    const auto& last_pre = tape.stage_preacts[n_stages - 1];
    std::vector<ClipTensor> dout;
    dout.reserve(N);
    for (std::size_t p = 0; p < N; ++p) {
        const ClipTensor& shape = last_pre[p];
        ClipTensor g(shape.channels, shape.frames, shape.height, shape.width, 0.0);
        const double scale = 1.0 / (static_cast<double>(N) * static_cast<double>(shape.frames) *
                                    static_cast<double>(shape.plane_size()));
        for (std::size_t t = 0; t < shape.frames; ++t)
            for (std::size_t c = 0; c < shape.channels; ++c) {
                double* gp = g.plane_ptr(t, c);
                const double v = dfused[c] * scale;
                std::fill(gp, gp + shape.plane_size(), v);
            }
        dout.push_back(std::move(g));
    }

    for (std::size_t si = n_stages; si-- > 0;) {
        const auto& spec = cfg.stages[si];
        const int gap = static_cast<int>(si) + 1;
        if (si + 1 < n_stages && cfg.shift.has_site(gap))
            dout = dual_shift_backward(dout, cfg.shift, gap);

        std::vector<ClipTensor> din;
        din.reserve(N);
        for (std::size_t p = 0; p < N; ++p) {
            detail::relu_mask_multiply(tape.stage_preacts[si][p], dout[p]);
            const std::size_t set = spec.shared ? 0 : p;
            const ConvParams& pr = params.stages[si][set];
            ConvParams& gp = grads.stages[si][set];
            conv2d_backward_params(dout[p], tape.stage_inputs[si][p], spec.stride, gp.w.data(),
                                   gp.b.data());
            if (si > 0)
                din.push_back(conv2d_backward_input(dout[p], pr.w.data(), spec.in_channels,
                                                    spec.stride, tape.stage_inputs[si][p].height,
                                                    tape.stage_inputs[si][p].width));
        }
        dout = std::move(din);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// SGD
// ---------------------------------------------------------------------------

// Plain SGD step, with the classic momentum recursion v <- m*v + g,
// w <- w - lr*v when momentum > 0. Non-finite gradients abort the step.
struct SgdOptimizer {
    TrainConfig tc;
    ParamStore velocity;
    bool has_velocity = false;

    explicit SgdOptimizer(const TrainConfig& t) : tc(t) { tc.validate(); }

    void step(ParamStore& params, const GradStore& grads) {
        if (!params.same_shape(grads)) throw StateError("sgd_step: shape mismatch");
        grads.for_each_array([](const std::vector<double>& a) {
            for (double v : a)
                if (!std::isfinite(v)) throw NumericsError("sgd_step: non-finite gradient");
        });
        if (tc.momentum > 0.0) {
            if (!has_velocity) {
                velocity = params;
                velocity.for_each_array(
                    [](std::vector<double>& a) { std::fill(a.begin(), a.end(), 0.0); });
                has_velocity = true;
            }
            apply_momentum(params.stages, grads.stages, velocity.stages);
            apply_momentum_vec(params.fc_w, grads.fc_w, velocity.fc_w);
            apply_momentum_vec(params.fc_b, grads.fc_b, velocity.fc_b);
        } else {
            apply_plain(params.stages, grads.stages);
            apply_plain_vec(params.fc_w, grads.fc_w);
            apply_plain_vec(params.fc_b, grads.fc_b);
        }
    }

  private:
    void apply_plain_vec(std::vector<double>& w, const std::vector<double>& g) {
        for (std::size_t n = 0; n < w.size(); ++n) w[n] -= tc.learning_rate * g[n];
    }
    void apply_plain(std::vector<std::vector<ConvParams>>& ws,
                     const std::vector<std::vector<ConvParams>>& gs) {
        for (std::size_t s = 0; s < ws.size(); ++s)
            for (std::size_t p = 0; p < ws[s].size(); ++p) {
                apply_plain_vec(ws[s][p].w, gs[s][p].w);
                apply_plain_vec(ws[s][p].b, gs[s][p].b);
            }
    }
    void apply_momentum_vec(std::vector<double>& w, const std::vector<double>& g,
                            std::vector<double>& v) {
        for (std::size_t n = 0; n < w.size(); ++n) {
            v[n] = tc.momentum * v[n] + g[n];
            w[n] -= tc.learning_rate * v[n];
        }
    }
    void apply_momentum(std::vector<std::vector<ConvParams>>& ws,
                        const std::vector<std::vector<ConvParams>>& gs,
                        std::vector<std::vector<ConvParams>>& vs) {
        for (std::size_t s = 0; s < ws.size(); ++s)
            for (std::size_t p = 0; p < ws[s].size(); ++p) {
                apply_momentum_vec(ws[s][p].w, gs[s][p].w, vs[s][p].w);
                apply_momentum_vec(ws[s][p].b, gs[s][p].b, vs[s][p].b);
            }
    }
};

// Momentum-free convenience form.
inline void sgd_step(ParamStore& params, const GradStore& grads, const TrainConfig& tc) {
    SgdOptimizer opt(tc);
    opt.step(params, grads);
}

// ---------------------------------------------------------------------------
// Accounting
// ---------------------------------------------------------------------------

// Exact trainable-parameter total; shared stages count once regardless of N.
inline std::uint64_t param_count(const NetworkConfig& cfg) {
    std::uint64_t total = 0;
    for (const auto& s : cfg.stages) {
        const std::uint64_t one = static_cast<std::uint64_t>(kKernel) * kKernel * s.in_channels *
                                      s.out_channels +
                                  s.out_channels;
        total += s.shared ? one : one * cfg.modalities;
    }
    total += static_cast<std::uint64_t>(cfg.feature_dim()) * cfg.num_classes + cfg.num_classes;
    return total;
}

// Exact multiply count of one forward pass under the padded-tap rule:
// convolutions run per branch per frame whether or not weights are shared,
// shift sites contribute nothing, the classifier runs once.
inline std::uint64_t mac_count(const NetworkConfig& cfg) {
    if (cfg.input_t == 0 || cfg.input_h == 0 || cfg.input_w == 0)
        throw ConfigError("mac_count: input dims required");
    std::uint64_t total = 0;
    std::size_t h = cfg.input_h;
    std::size_t w = cfg.input_w;
    for (const auto& s : cfg.stages) {
        h = conv_out_dim(h, s.stride);
        w = conv_out_dim(w, s.stride);
        total += static_cast<std::uint64_t>(kKernel) * kKernel * s.in_channels * s.out_channels *
                 h * w * cfg.input_t * cfg.modalities;
    }
    total += static_cast<std::uint64_t>(cfg.feature_dim()) * cfg.num_classes;
    return total;
}

// ---------------------------------------------------------------------------
// Model file: magic "DFSM", version, topology header, then f64 blobs in
// declared order (per stage, per weight set: weights then bias; classifier
// weights then bias last). Little-endian throughout. A disabled shift
// mechanism is stored as the fraction 0/1.
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "model/clip file formats assume a little-endian host");

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("model file: truncated header");
    return v;
}
inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("model file: truncated blob header");
    return v;
}

inline void write_blob(std::ostream& os, const std::vector<double>& a) {
    write_u64(os, a.size());
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(double)));
}

inline void read_blob(std::istream& is, std::vector<double>& a, std::size_t expected) {
    const std::uint64_t n = read_u64(is);
    if (n != expected) throw FormatError("model file: blob length disagrees with declared dims");
    a.resize(n);
    is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw FormatError("model file: truncated blob");
}

}  // namespace detail

constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const ParamStore& params, const NetworkConfig& cfg,
                       const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_model: cannot open " + path);
    os.write("DFSM", 4);
    detail::write_u32(os, kModelVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(cfg.modalities));
    detail::write_u32(os, static_cast<std::uint32_t>(cfg.num_classes));
    detail::write_u32(os, static_cast<std::uint32_t>(cfg.stages.size()));
    for (const auto& s : cfg.stages) {
        detail::write_u32(os, static_cast<std::uint32_t>(s.in_channels));
        detail::write_u32(os, static_cast<std::uint32_t>(s.out_channels));
        detail::write_u32(os, static_cast<std::uint32_t>(s.stride));
        detail::write_u32(os, s.shared ? 1u : 0u);
    }
    const auto& sh = cfg.shift;
    detail::write_u32(os, sh.modality_enabled ? sh.k_fraction.num : 0u);
    detail::write_u32(os, sh.modality_enabled ? sh.k_fraction.den : 1u);
    detail::write_u32(os, sh.temporal_enabled ? sh.i_fraction.num : 0u);
    detail::write_u32(os, sh.temporal_enabled ? sh.i_fraction.den : 1u);
    std::uint32_t mask = 0;
    for (int g : sh.sites) mask |= 1u << (g - 1);
    detail::write_u32(os, mask);
    for (const auto& st : params.stages)
        for (const auto& p : st) {
            detail::write_blob(os, p.w);
            detail::write_blob(os, p.b);
        }
    detail::write_blob(os, params.fc_w);
    detail::write_blob(os, params.fc_b);
    if (!os) throw IoError("save_model: write failed for " + path);
}

inline std::pair<ParamStore, NetworkConfig> load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_model: cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DFSM", 4) != 0)
        throw FormatError("load_model: bad magic");
    if (detail::read_u32(is) != kModelVersion) throw FormatError("load_model: bad version");

    NetworkConfig cfg;
    cfg.modalities = detail::read_u32(is);
    cfg.num_classes = detail::read_u32(is);
    const std::uint32_t n_stages = detail::read_u32(is);
    if (cfg.modalities == 0 || n_stages == 0) throw FormatError("load_model: empty topology");
    if (cfg.modalities > 64 || n_stages > 64 || cfg.num_classes > 1u << 20)
        throw FormatError("load_model: implausible topology header");
    cfg.stages.resize(n_stages);
    for (auto& s : cfg.stages) {
        s.in_channels = detail::read_u32(is);
        s.out_channels = detail::read_u32(is);
        s.stride = detail::read_u32(is);
        s.shared = detail::read_u32(is) != 0;
        if (s.in_channels == 0 || s.out_channels == 0 || s.in_channels > 1u << 16 ||
            s.out_channels > 1u << 16 || (s.stride != 1 && s.stride != 2))
            throw FormatError("load_model: implausible stage header");
    }
    cfg.input_c = cfg.stages.front().in_channels;
    cfg.input_t = cfg.input_h = cfg.input_w = 0;  // dims come from the data

    ShiftConfig& sh = cfg.shift;
    const std::uint32_t kn = detail::read_u32(is);
    const std::uint32_t kd = detail::read_u32(is);
    const std::uint32_t in = detail::read_u32(is);
    const std::uint32_t id = detail::read_u32(is);
    if (kd == 0 || id == 0) throw FormatError("load_model: zero fraction denominator");
    sh.modality_enabled = kn != 0;
    if (sh.modality_enabled) sh.k_fraction = {kn, kd};
    sh.temporal_enabled = in != 0;
    if (sh.temporal_enabled) sh.i_fraction = {in, id};
    const std::uint32_t mask = detail::read_u32(is);
    sh.sites.clear();
    for (std::uint32_t g = 1; g < n_stages; ++g)
        if (mask & (1u << (g - 1))) sh.sites.push_back(static_cast<int>(g));

    ParamStore ps = ParamStore::zeros(cfg);
    for (std::size_t s = 0; s < cfg.stages.size(); ++s)
        for (auto& p : ps.stages[s]) {
            detail::read_blob(is, p.w,
                              cfg.stages[s].out_channels * cfg.stages[s].in_channels * kKernel *
                                  kKernel);
            detail::read_blob(is, p.b, cfg.stages[s].out_channels);
        }
    detail::read_blob(is, ps.fc_w, cfg.feature_dim() * cfg.num_classes);
    detail::read_blob(is, ps.fc_b, cfg.num_classes);

    is.peek();
    if (!is.eof()) throw FormatError("load_model: trailing bytes");
    return {std::move(ps), std::move(cfg)};
}

}  // namespace dfs
