#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dfs/conv.hpp"
#include "dfs/opcount.hpp"

using namespace dfs;

namespace {

ClipTensor random_clip(std::size_t c, std::size_t t, std::size_t h, std::size_t w,
                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ClipTensor x(c, t, h, w, 0.0);
    for (double& v : x.data) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("identity kernel reproduces the input") {
    std::mt19937_64 rng(2);
    ClipTensor x = random_clip(1, 2, 5, 7, rng);
    std::vector<double> w(9, 0.0);
    w[4] = 1.0;  // centre tap
    std::vector<double> b = {0.0};
    ClipTensor y = conv2d_forward(x, w.data(), b.data(), 1, 1, 1);
    REQUIRE(y.data == x.data);
}

TEST_CASE("zero weights give a constant bias map") {
    std::mt19937_64 rng(3);
    ClipTensor x = random_clip(3, 1, 4, 4, rng);
    std::vector<double> w(2 * 3 * 9, 0.0);
    std::vector<double> b = {0.5, -1.25};
    ClipTensor y = conv2d_forward(x, w.data(), b.data(), 3, 2, 1);
    for (std::size_t n = 0; n < 16; ++n) {
        REQUIRE(y.plane_ptr(0, 0)[n] == 0.5);
        REQUIRE(y.plane_ptr(0, 1)[n] == -1.25);
    }
}

TEST_CASE("all-ones 3x3: centre 9, edge 6, corner 4") {
    ClipTensor x(1, 1, 3, 3, 1.0);
    std::vector<double> w(9, 1.0);
    ClipTensor y = conv2d_forward(x, w.data(), nullptr, 1, 1, 1);
    REQUIRE(y.at(0, 0, 1, 1) == 9.0);
    REQUIRE(y.at(0, 0, 0, 1) == 6.0);
    REQUIRE(y.at(0, 0, 1, 0) == 6.0);
    REQUIRE(y.at(0, 0, 0, 0) == 4.0);
    REQUIRE(y.at(0, 0, 2, 2) == 4.0);
}

TEST_CASE("stride-2 output dims are ceil(in/2)") {
    REQUIRE(conv_out_dim(16, 2) == 8);
    REQUIRE(conv_out_dim(15, 2) == 8);
    REQUIRE(conv_out_dim(1, 2) == 1);
    REQUIRE(conv_out_dim(5, 1) == 5);

    std::mt19937_64 rng(5);
    ClipTensor x = random_clip(1, 8, 16, 16, rng);
    std::vector<double> w(16 * 9, 0.1), b(16, 0.0);
    ClipTensor y = conv2d_forward(x, w.data(), b.data(), 1, 16, 2);
    REQUIRE(y.channels == 16);
    REQUIRE(y.frames == 8);
    REQUIRE(y.height == 8);
    REQUIRE(y.width == 8);
}

TEST_CASE("padded-tap accounting: 4x4 single-channel conv executes 144 multiplications") {
    std::mt19937_64 rng(7);
    ClipTensor x = random_clip(1, 1, 4, 4, rng);
    std::vector<double> w(9, 0.3), b(1, 0.0);
    const auto n = count_mult_ops(
        [&] { (void)conv2d_forward(x, w.data(), b.data(), 1, 1, 1); });
    REQUIRE(n == 144);
}

TEST_CASE("channel mismatch raises ShapeMismatch") {
    std::mt19937_64 rng(11);
    ClipTensor x = random_clip(2, 1, 4, 4, rng);
    std::vector<double> w(3 * 9, 0.0), b(3, 0.0);
    REQUIRE_THROWS_AS(conv2d_forward(x, w.data(), b.data(), 3, 1, 1), ShapeMismatch);
}

TEST_CASE("conv backward matches central finite differences") {
    // Scalar probe loss L = <out, r> for a fixed random r; dL/dw and dL/dx
    // from the backward kernels must match (L(p+eps)-L(p-eps))/2eps.
    std::mt19937_64 rng(13);
    for (std::size_t stride : {std::size_t{1}, std::size_t{2}}) {
        const std::size_t cin = 2, cout = 3, h = 5, w = 4, t = 2;
        ClipTensor x = random_clip(cin, t, h, w, rng);
        std::vector<double> wts(cout * cin * 9), b(cout);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : wts) v = u(rng);
        for (auto& v : b) v = u(rng);

        ClipTensor out = conv2d_forward(x, wts.data(), b.data(), cin, cout, stride);
        ClipTensor r = random_clip(out.channels, out.frames, out.height, out.width, rng);

        // analytic
        ClipTensor gin = conv2d_backward_input(r, wts.data(), cin, stride, h, w);
        std::vector<double> gw(wts.size(), 0.0), gb(b.size(), 0.0);
        conv2d_backward_params(r, x, stride, gw.data(), gb.data());

        auto probe = [&]() {
            ClipTensor o = conv2d_forward(x, wts.data(), b.data(), cin, cout, stride);
            double s = 0.0;
            for (std::size_t n = 0; n < o.data.size(); ++n) s += o.data[n] * r.data[n];
            return s;
        };
        const double eps = 1e-6;
        auto fd_check = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + eps;
            const double lp = probe();
            slot = keep - eps;
            const double lm = probe();
            slot = keep;
            const double fd = (lp - lm) / (2 * eps);
            REQUIRE(analytic == Catch::Approx(fd).margin(1e-6));
        };
        std::uniform_int_distribution<std::size_t> wi(0, wts.size() - 1);
        for (int probe_n = 0; probe_n < 20; ++probe_n) {
            const std::size_t n = wi(rng);
            fd_check(wts[n], gw[n]);
        }
        fd_check(b[1], gb[1]);
        std::uniform_int_distribution<std::size_t> xi(0, x.data.size() - 1);
        for (int probe_n = 0; probe_n < 20; ++probe_n) {
            const std::size_t n = xi(rng);
            fd_check(x.data[n], gin.data[n]);
        }
    }
}
