#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "dfs/error.hpp"

namespace dfs {

struct ChannelRange {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive
};

// Dense rank-4 feature volume: C channels x T frames x H x W, doubles.
//
// Canonical layout: index(t,c,h,w) = t*(C*H*W) + c*(H*W) + h*W + w.
// The frame axis is outermost so one frame is a contiguous slab and a
// channel band within a frame is contiguous too; every kernel and the
// clip/model file formats assume exactly this order.
struct ClipTensor {
    std::size_t channels = 0;
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    ClipTensor() = default;

    ClipTensor(std::size_t c, std::size_t t, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), frames(t), height(h), width(w) {
        if (c == 0 || t == 0 || h == 0 || w == 0)
            throw InvalidDims("ClipTensor: all dims must be >= 1");
        data.assign(c * t * h * w, fill);
    }

    std::size_t size() const { return channels * frames * height * width; }
    std::size_t frame_size() const { return channels * height * width; }
    std::size_t plane_size() const { return height * width; }

    std::size_t index(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const {
        return t * frame_size() + c * plane_size() + h * width + w;
    }

    double& at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) {
        return data[index(t, c, h, w)];
    }
    double at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const {
        return data[index(t, c, h, w)];
    }

    // Contiguous frame slab (C*H*W values).
    double* frame_ptr(std::size_t t) { return data.data() + t * frame_size(); }
    const double* frame_ptr(std::size_t t) const { return data.data() + t * frame_size(); }

    // Contiguous channel plane within a frame (H*W values).
    double* plane_ptr(std::size_t t, std::size_t c) {
        return data.data() + t * frame_size() + c * plane_size();
    }
    const double* plane_ptr(std::size_t t, std::size_t c) const {
        return data.data() + t * frame_size() + c * plane_size();
    }

    bool same_shape(const ClipTensor& o) const {
        return channels == o.channels && frames == o.frames && height == o.height &&
               width == o.width;
    }
};

inline ClipTensor make_clip(std::size_t c, std::size_t t, std::size_t h, std::size_t w,
                            double fill) {
    return ClipTensor(c, t, h, w, fill);
}

namespace detail {

// Zero-channel band with the shape metadata of its source; only slice() may
// build one, so the dims>=1 invariant of constructed tensors stays intact.
inline ClipTensor empty_band(const ClipTensor& x) {
    ClipTensor out;
    out.channels = 0;
    out.frames = x.frames;
    out.height = x.height;
    out.width = x.width;
    return out;
}

}  // namespace detail

// Copy of channels [r.start, r.end) for every frame. Always a copy, never a view.
// An empty range yields a zero-channel band (useful as a concat no-op).
inline ClipTensor slice_channels(const ClipTensor& x, ChannelRange r) {
    if (r.start > r.end || r.end > x.channels)
        throw RangeError("slice_channels: range out of bounds");
    if (r.end == r.start)
        return detail::empty_band(x);
    ClipTensor out(r.end - r.start, x.frames, x.height, x.width, 0.0);
    const std::size_t band = out.frame_size();
    for (std::size_t t = 0; t < x.frames; ++t) {
        const double* src = x.plane_ptr(t, r.start);
        std::copy(src, src + band, out.frame_ptr(t));
    }
    return out;
}

// Channel-wise concatenation; list order then per-part order.
inline ClipTensor concat_channels(const std::vector<ClipTensor>& parts) {
    if (parts.empty())
        throw InvalidInput("concat_channels: empty list");
    std::size_t c_total = 0;
    for (const auto& p : parts) {
        if (p.frames != parts[0].frames || p.height != parts[0].height ||
            p.width != parts[0].width)
            throw ShapeMismatch("concat_channels: parts disagree on T/H/W");
        c_total += p.channels;
    }
    if (c_total == 0)
        throw InvalidInput("concat_channels: all parts empty");
    ClipTensor out(c_total, parts[0].frames, parts[0].height, parts[0].width, 0.0);
    for (std::size_t t = 0; t < out.frames; ++t) {
        double* dst = out.frame_ptr(t);
        for (const auto& p : parts) {
            const double* src = p.frame_ptr(t);
            dst = std::copy(src, src + p.frame_size(), dst);
        }
    }
    return out;
}

}  // namespace dfs
