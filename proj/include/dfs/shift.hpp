#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "dfs/error.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

struct Fraction {
    std::uint32_t num = 0;
    std::uint32_t den = 1;
};

// Shift widths and placement. k is the modality band (last k channels swapped
// across modalities per frame), i the temporal band (first i channels pulled
// from the previous frame, next i from the following frame). Widths derive
// from the channel count entering each site; the two bands must stay disjoint:
// 2i + k <= C.
struct ShiftConfig {
    Fraction k_fraction{1, 8};
    Fraction i_fraction{1, 8};
    std::vector<int> sites{1, 2, 3, 4};  // stage gaps, 1-based: site g sits after stage g
    bool modality_enabled = true;
    bool temporal_enabled = true;

    // Width rounding: max(1, floor(C*fraction)) while the mechanism is
    // enabled, so a configured shift is never silently inactive. Disabling
    // sets the band to literal zero width.
    std::size_t k_at(std::size_t channels) const {
        if (!modality_enabled) return 0;
        return derive_width(channels, k_fraction);
    }
    std::size_t i_at(std::size_t channels) const {
        if (!temporal_enabled) return 0;
        return derive_width(channels, i_fraction);
    }

    bool has_site(int gap) const {
        return std::find(sites.begin(), sites.end(), gap) != sites.end();
    }

    void validate_bands(std::size_t channels, int gap) const {
        const std::size_t k = k_at(channels);
        const std::size_t i = i_at(channels);
        if (2 * i + k > channels)
            throw ConfigError("shift bands overlap at site " + std::to_string(gap) + ": 2*" +
                              std::to_string(i) + " + " + std::to_string(k) + " > " +
                              std::to_string(channels));
    }

  private:
    static std::size_t derive_width(std::size_t channels, Fraction f) {
        if (f.den == 0) throw ConfigError("shift fraction: zero denominator");
        const std::size_t w = (channels * f.num) / f.den;
        return std::max<std::size_t>(1, w);
    }
};

// ---------------------------------------------------------------------------
// Modality feature interaction: per frame, the last k channels of each
// modality are replaced by the same band of the partner modality. Pure block
// copies, no arithmetic.
// ---------------------------------------------------------------------------

inline std::pair<ClipTensor, ClipTensor> modality_shift_pair(const ClipTensor& xp,
                                                             const ClipTensor& xq,
                                                             std::size_t k) {
    if (!xp.same_shape(xq)) throw ShapeMismatch("modality_shift_pair: shape mismatch");
    if (k > xp.channels) throw RangeError("modality_shift_pair: k exceeds channel count");
    ClipTensor outp = xp;
    ClipTensor outq = xq;
    if (k == 0) return {outp, outq};
    const std::size_t band = k * xp.plane_size();
    const std::size_t lead = xp.channels - k;
    for (std::size_t t = 0; t < xp.frames; ++t) {
        const double* src_q = xq.plane_ptr(t, lead);
        const double* src_p = xp.plane_ptr(t, lead);
        std::copy(src_q, src_q + band, outp.plane_ptr(t, lead));
        std::copy(src_p, src_p + band, outq.plane_ptr(t, lead));
    }
    return {outp, outq};
}

// N-modality generalization: cyclic rotation of the last-k band, output p
// taking the band of modality (p+1) mod N. N=2 reduces to the pairwise swap.
inline std::vector<ClipTensor> modality_shift_group(const std::vector<ClipTensor>& xs,
                                                    std::size_t k) {
    if (xs.size() < 2) throw InvalidInput("modality_shift_group: need at least 2 modalities");
    for (const auto& x : xs)
        if (!x.same_shape(xs[0])) throw ShapeMismatch("modality_shift_group: shape mismatch");
    if (k > xs[0].channels) throw RangeError("modality_shift_group: k exceeds channel count");

    std::vector<ClipTensor> out = xs;
    if (k == 0) return out;
    const std::size_t band = k * xs[0].plane_size();
    const std::size_t lead = xs[0].channels - k;
    const std::size_t n = xs.size();
    for (std::size_t p = 0; p < n; ++p) {
        const ClipTensor& donor = xs[(p + 1) % n];
        for (std::size_t t = 0; t < xs[p].frames; ++t) {
            const double* src = donor.plane_ptr(t, lead);
            std::copy(src, src + band, out[p].plane_ptr(t, lead));
        }
    }
    return out;
}

// Adjoint of the cyclic rotation, i.e. the inverse rotation: gradient band of
// modality q comes from output slot (q-1) mod N.
inline std::vector<ClipTensor> modality_shift_backward(const std::vector<ClipTensor>& gps,
                                                       std::size_t k) {
    if (gps.size() < 2) throw InvalidInput("modality_shift_backward: need at least 2 modalities");
    for (const auto& g : gps)
        if (!g.same_shape(gps[0])) throw ShapeMismatch("modality_shift_backward: shape mismatch");
    if (k > gps[0].channels) throw RangeError("modality_shift_backward: k exceeds channel count");

    std::vector<ClipTensor> out = gps;
    if (k == 0) return out;
    const std::size_t band = k * gps[0].plane_size();
    const std::size_t lead = gps[0].channels - k;
    const std::size_t n = gps.size();
    for (std::size_t q = 0; q < n; ++q) {
        const ClipTensor& donor = gps[(q + n - 1) % n];
        for (std::size_t t = 0; t < gps[q].frames; ++t) {
            const double* src = donor.plane_ptr(t, lead);
            std::copy(src, src + band, out[q].plane_ptr(t, lead));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Neighbour feature propagation: channels [0,i) come from the previous frame,
// [i,2i) from the next frame, the rest stay. Clip edges zero-fill the band
// that has no neighbour, which keeps the map linear.
// ---------------------------------------------------------------------------

inline ClipTensor temporal_shift(const ClipTensor& x, std::size_t i) {
    if (2 * i > x.channels) throw RangeError("temporal_shift: 2i exceeds channel count");
    ClipTensor out = x;
    if (i == 0) return out;
    const std::size_t band = i * x.plane_size();
    const std::size_t t_last = x.frames - 1;
    for (std::size_t t = 0; t < x.frames; ++t) {
        double* fwd_dst = out.plane_ptr(t, 0);
        if (t == 0) {
            std::fill(fwd_dst, fwd_dst + band, 0.0);
        } else {
            const double* src = x.plane_ptr(t - 1, 0);
            std::copy(src, src + band, fwd_dst);
        }
        double* bwd_dst = out.plane_ptr(t, i);
        if (t == t_last) {
            std::fill(bwd_dst, bwd_dst + band, 0.0);
        } else {
            const double* src = x.plane_ptr(t + 1, i);
            std::copy(src, src + band, bwd_dst);
        }
    }
    return out;
}

// Exact adjoint of temporal_shift: the two directions exchanged.
// gin_t[0,i) = gout_{t+1}[0,i) (zero at the last frame), gin_t[i,2i) =
// gout_{t-1}[i,2i) (zero at the first frame).
inline ClipTensor temporal_shift_backward(const ClipTensor& gout, std::size_t i) {
    if (2 * i > gout.channels) throw RangeError("temporal_shift_backward: 2i exceeds channel count");
    ClipTensor gin = gout;
    if (i == 0) return gin;
    const std::size_t band = i * gout.plane_size();
    const std::size_t t_last = gout.frames - 1;
    for (std::size_t t = 0; t < gout.frames; ++t) {
        double* fwd_dst = gin.plane_ptr(t, 0);
        if (t == t_last) {
            std::fill(fwd_dst, fwd_dst + band, 0.0);
        } else {
            const double* src = gout.plane_ptr(t + 1, 0);
            std::copy(src, src + band, fwd_dst);
        }
        double* bwd_dst = gin.plane_ptr(t, i);
        if (t == 0) {
            std::fill(bwd_dst, bwd_dst + band, 0.0);
        } else {
            const double* src = gout.plane_ptr(t - 1, i);
            std::copy(src, src + band, bwd_dst);
        }
    }
    return gin;
}

// ---------------------------------------------------------------------------
// Dual feature shift at one stage gap: modality rotation first (the temporal
// shift consumes the modality-shifted features), then the temporal shift per
// modality. A single modality skips the modality half.
// ---------------------------------------------------------------------------

inline std::vector<ClipTensor> dual_shift(const std::vector<ClipTensor>& xs,
                                          const ShiftConfig& cfg, int site) {
    if (xs.empty()) throw InvalidInput("dual_shift: no modalities");
    if (!cfg.has_site(site)) throw ConfigError("dual_shift: gap is not a configured site");
    const std::size_t channels = xs[0].channels;
    cfg.validate_bands(channels, site);
    const std::size_t k = cfg.k_at(channels);
    const std::size_t i = cfg.i_at(channels);

    std::vector<ClipTensor> mixed =
        (xs.size() >= 2 && k > 0) ? modality_shift_group(xs, k) : xs;
    for (auto& m : mixed) m = temporal_shift(m, i);
    return mixed;
}

namespace testhook {

// Gradient-check mutation hook: when set, dual_shift_backward skips the
// temporal adjoint, which must make shift-adjacent parameter blocks fail the
// finite-difference comparison. Never set outside tests.
inline bool& skip_temporal_adjoint() {
    static bool v = false;
    return v;
}

}  // namespace testhook

// Adjoint of dual_shift: temporal adjoint per modality, then the inverse
// modality rotation.
inline std::vector<ClipTensor> dual_shift_backward(const std::vector<ClipTensor>& gs,
                                                   const ShiftConfig& cfg, int site) {
    if (gs.empty()) throw InvalidInput("dual_shift_backward: no modalities");
    if (!cfg.has_site(site)) throw ConfigError("dual_shift_backward: gap is not a configured site");
    const std::size_t channels = gs[0].channels;
    cfg.validate_bands(channels, site);
    const std::size_t k = cfg.k_at(channels);
    const std::size_t i = cfg.i_at(channels);

    std::vector<ClipTensor> out = gs;
    if (!testhook::skip_temporal_adjoint())
        for (auto& g : out) g = temporal_shift_backward(g, i);
    if (out.size() >= 2 && k > 0) out = modality_shift_backward(out, k);
    return out;
}

}  // namespace dfs
