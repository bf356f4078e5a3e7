#pragma once

#include <cstddef>
#include <vector>

#include "dfs/error.hpp"
#include "dfs/opcount.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

// 3x3 cross-correlation with zero padding 1, stride 1 or 2.
//
// The kernels run over an im2col gather of the zero-padded input, so every
// output position executes the full 9*Cin taps (padding zeros included).
// That is the padded-tap accounting rule: the instrumented multiplication
// count, mac_count, and the arithmetic actually executed all agree at
// out_h * out_w * 9 * Cin * Cout per frame.
//
// Weight layout: w[co][ci][ky][kx], row-major.

constexpr std::size_t kKernel = 3;
constexpr std::size_t kPad = 1;
constexpr std::size_t kTaps = kKernel * kKernel;

inline std::size_t conv_out_dim(std::size_t in, std::size_t stride) {
    return (in - 1) / stride + 1;  // == ceil(in/stride) for 3x3, pad 1
}

namespace detail {

// Reusable buffers so per-frame work allocates nothing.
struct ConvScratch {
    std::vector<double> pad;   // Cin x (H+2) x (W+2)
    std::vector<double> cols;  // (oh*ow) x (Cin*9) im2col matrix
    std::vector<double> wt;    // (Cin*9) x Cout transposed weights
    std::vector<double> row;   // Cout accumulator row
    const double* wt_src = nullptr;
};

inline void pad_frame(const double* in, std::size_t cin, std::size_t h, std::size_t w,
                      std::vector<double>& pad) {
    const std::size_t pw = w + 2 * kPad;
    const std::size_t ph = h + 2 * kPad;
    pad.assign(cin * ph * pw, 0.0);
    for (std::size_t c = 0; c < cin; ++c) {
        const double* src = in + c * h * w;
        double* dst = pad.data() + c * ph * pw + kPad * pw + kPad;
        for (std::size_t y = 0; y < h; ++y)
            std::copy(src + y * w, src + (y + 1) * w, dst + y * pw);
    }
}

// cols[pos][ci*9 + ky*3 + kx] = padded(ci, oy*stride+ky, ox*stride+kx)
inline void im2col(const std::vector<double>& pad, std::size_t cin, std::size_t w,
                   std::size_t oh, std::size_t ow, std::size_t stride,
                   std::vector<double>& cols) {
    const std::size_t pw = w + 2 * kPad;
    const std::size_t pplane = pad.size() / cin;
    const std::size_t ncols = cin * kTaps;
    cols.resize(oh * ow * ncols);
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            double* mrow = cols.data() + (oy * ow + ox) * ncols;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double* base = pad.data() + ci * pplane + oy * stride * pw + ox * stride;
                double* dst = mrow + ci * kTaps;
                for (std::size_t ky = 0; ky < kKernel; ++ky) {
                    const double* src = base + ky * pw;
                    dst[ky * kKernel + 0] = src[0];
                    dst[ky * kKernel + 1] = src[1];
                    dst[ky * kKernel + 2] = src[2];
                }
            }
        }
    }
}

}  // namespace detail

// One frame: out[co][oy][ox] = bias[co] + sum_col cols[pos][col] * wt[col][co].
inline void conv2d_forward_frame(const double* in, std::size_t cin, std::size_t h, std::size_t w,
                                 const double* weights, const double* bias, std::size_t cout,
                                 std::size_t stride, double* out, detail::ConvScratch& scratch) {
    if (stride != 1 && stride != 2) throw ConfigError("conv2d: stride must be 1 or 2");
    const std::size_t oh = conv_out_dim(h, stride);
    const std::size_t ow = conv_out_dim(w, stride);
    const std::size_t npos = oh * ow;
    const std::size_t ncols = cin * kTaps;

    detail::pad_frame(in, cin, h, w, scratch.pad);
    detail::im2col(scratch.pad, cin, w, oh, ow, stride, scratch.cols);

    // wt[col][co] = weights[co][col]; cached across the frames of one clip.
    if (scratch.wt_src != weights || scratch.wt.size() != ncols * cout) {
        scratch.wt.resize(ncols * cout);
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t col = 0; col < ncols; ++col)
                scratch.wt[col * cout + co] = weights[co * ncols + col];
        scratch.wt_src = weights;
    }

    scratch.row.resize(cout);
    double* row = scratch.row.data();
    for (std::size_t pos = 0; pos < npos; ++pos) {
        if (bias)
            std::copy(bias, bias + cout, row);
        else
            std::fill(row, row + cout, 0.0);
        const double* mrow = scratch.cols.data() + pos * ncols;
        for (std::size_t col = 0; col < ncols; ++col) {
            const double v = mrow[col];
            const double* wrow = scratch.wt.data() + col * cout;
            for (std::size_t co = 0; co < cout; ++co) row[co] += v * wrow[co];
        }
        for (std::size_t co = 0; co < cout; ++co) out[co * npos + pos] = row[co];
    }
    opcount::add_mults(static_cast<std::uint64_t>(npos) * ncols * cout);
}

// Whole clip, frame by frame. Checks the declared input channel count.
inline ClipTensor conv2d_forward(const ClipTensor& in, const double* weights, const double* bias,
                                 std::size_t cin, std::size_t cout, std::size_t stride) {
    if (in.channels != cin) throw ShapeMismatch("conv2d_forward: input channel mismatch");
    ClipTensor out(cout, in.frames, conv_out_dim(in.height, stride),
                   conv_out_dim(in.width, stride), 0.0);
    detail::ConvScratch scratch;
    for (std::size_t t = 0; t < in.frames; ++t)
        conv2d_forward_frame(in.frame_ptr(t), cin, in.height, in.width, weights, bias, cout,
                             stride, out.frame_ptr(t), scratch);
    return out;
}

// Gradient w.r.t. the input: gcols = gout^T x W, then col2im scatter-add.
inline ClipTensor conv2d_backward_input(const ClipTensor& gout, const double* weights,
                                        std::size_t cin, std::size_t stride, std::size_t in_h,
                                        std::size_t in_w) {
    if (stride != 1 && stride != 2) throw ConfigError("conv2d: stride must be 1 or 2");
    const std::size_t cout = gout.channels;
    const std::size_t oh = gout.height;
    const std::size_t ow = gout.width;
    if (oh != conv_out_dim(in_h, stride) || ow != conv_out_dim(in_w, stride))
        throw ShapeMismatch("conv2d_backward_input: output dims inconsistent with input dims");
    const std::size_t npos = oh * ow;
    const std::size_t ncols = cin * kTaps;
    const std::size_t pw = in_w + 2 * kPad;
    const std::size_t pplane = (in_h + 2 * kPad) * pw;

    ClipTensor gin(cin, gout.frames, in_h, in_w, 0.0);
    std::vector<double> gcols(npos * ncols);
    std::vector<double> gpad(cin * pplane);
    for (std::size_t t = 0; t < gout.frames; ++t) {
        const double* gframe = gout.frame_ptr(t);
        std::fill(gcols.begin(), gcols.end(), 0.0);
        for (std::size_t pos = 0; pos < npos; ++pos) {
            double* grow = gcols.data() + pos * ncols;
            for (std::size_t co = 0; co < cout; ++co) {
                const double g = gframe[co * npos + pos];
                const double* wrow = weights + co * ncols;
                for (std::size_t col = 0; col < ncols; ++col) grow[col] += g * wrow[col];
            }
        }
        opcount::add_mults(static_cast<std::uint64_t>(npos) * ncols * cout);

        // col2im
        std::fill(gpad.begin(), gpad.end(), 0.0);
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double* grow = gcols.data() + (oy * ow + ox) * ncols;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    double* base = gpad.data() + ci * pplane + oy * stride * pw + ox * stride;
                    const double* src = grow + ci * kTaps;
                    for (std::size_t ky = 0; ky < kKernel; ++ky) {
                        double* dst = base + ky * pw;
                        dst[0] += src[ky * kKernel + 0];
                        dst[1] += src[ky * kKernel + 1];
                        dst[2] += src[ky * kKernel + 2];
                    }
                }
            }
        }
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* src = gpad.data() + ci * pplane + kPad * pw + kPad;
            double* dst = gin.plane_ptr(t, ci);
            for (std::size_t y = 0; y < in_h; ++y)
                std::copy(src + y * pw, src + y * pw + in_w, dst + y * in_w);
        }
    }
    return gin;
}

// Gradient w.r.t. weights and bias, accumulated into gw/gb (callers zero them
// once; shared stages sum the contributions of every modality branch here).
inline void conv2d_backward_params(const ClipTensor& gout, const ClipTensor& in,
                                   std::size_t stride, double* gw, double* gb) {
    if (stride != 1 && stride != 2) throw ConfigError("conv2d: stride must be 1 or 2");
    const std::size_t cin = in.channels;
    const std::size_t cout = gout.channels;
    const std::size_t oh = gout.height;
    const std::size_t ow = gout.width;
    if (gout.frames != in.frames)
        throw ShapeMismatch("conv2d_backward_params: frame count mismatch");
    if (oh != conv_out_dim(in.height, stride) || ow != conv_out_dim(in.width, stride))
        throw ShapeMismatch("conv2d_backward_params: output dims inconsistent with input dims");
    const std::size_t npos = oh * ow;
    const std::size_t ncols = cin * kTaps;

    detail::ConvScratch scratch;
    for (std::size_t t = 0; t < in.frames; ++t) {
        detail::pad_frame(in.frame_ptr(t), cin, in.height, in.width, scratch.pad);
        detail::im2col(scratch.pad, cin, in.width, oh, ow, stride, scratch.cols);
        const double* gframe = gout.frame_ptr(t);
        for (std::size_t co = 0; co < cout; ++co) {
            const double* gmap = gframe + co * npos;
            double* gwrow = gw + co * ncols;
            double gsum = 0.0;
            for (std::size_t pos = 0; pos < npos; ++pos) {
                const double g = gmap[pos];
                gsum += g;
                const double* mrow = scratch.cols.data() + pos * ncols;
                for (std::size_t col = 0; col < ncols; ++col) gwrow[col] += g * mrow[col];
            }
            gb[co] += gsum;
        }
        opcount::add_mults(static_cast<std::uint64_t>(npos) * ncols * cout);
    }
}

}  // namespace dfs
