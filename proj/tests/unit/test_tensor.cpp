#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dfs/tensor.hpp"

using namespace dfs;

namespace {

// Channel c of every frame holds the value base + c, so channels are
// distinguishable after slicing/concatenation.
ClipTensor labelled_channels(std::size_t c, std::size_t t, std::size_t h, std::size_t w,
                             double base = 0.0) {
    ClipTensor x(c, t, h, w, 0.0);
    for (std::size_t ti = 0; ti < t; ++ti)
        for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t hi = 0; hi < h; ++hi)
                for (std::size_t wi = 0; wi < w; ++wi) x.at(ti, ci, hi, wi) = base + ci;
    return x;
}

ClipTensor random_clip(std::size_t c, std::size_t t, std::size_t h, std::size_t w,
                       std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    ClipTensor x(c, t, h, w, 0.0);
    for (double& v : x.data) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("make_clip fills and sizes") {
    ClipTensor a = make_clip(1, 1, 1, 1, 0.0);
    REQUIRE(a.data == std::vector<double>{0.0});

    ClipTensor b = make_clip(2, 3, 4, 4, 1.0);
    REQUIRE(b.size() == 96);
    for (double v : b.data) REQUIRE(v == 1.0);

    ClipTensor c = make_clip(8, 8, 16, 16, 0.0);
    REQUIRE(c.size() == 16384);

    REQUIRE_THROWS_AS(make_clip(0, 1, 1, 1, 0.0), InvalidDims);
    REQUIRE_THROWS_AS(make_clip(1, 1, 0, 1, 0.0), InvalidDims);
}

TEST_CASE("slice_channels semantics") {
    ClipTensor x = labelled_channels(4, 2, 3, 3);  // channels a=0,b=1,c=2,d=3

    ClipTensor d = slice_channels(x, {3, 4});
    REQUIRE(d.channels == 1);
    REQUIRE(d.frames == 2);
    for (double v : d.data) REQUIRE(v == 3.0);

    ClipTensor full = slice_channels(x, {0, 4});
    REQUIRE(full.data == x.data);

    ClipTensor bc = slice_channels(x, {1, 3});
    REQUIRE(bc.channels == 2);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t hw = 0; hw < 9; ++hw) {
            REQUIRE(bc.plane_ptr(t, 0)[hw] == 1.0);
            REQUIRE(bc.plane_ptr(t, 1)[hw] == 2.0);
        }

    REQUIRE_THROWS_AS(slice_channels(x, {2, 5}), RangeError);
    REQUIRE_THROWS_AS(slice_channels(x, {3, 2}), RangeError);
}

TEST_CASE("slice leaves the input untouched") {
    std::mt19937_64 rng(7);
    ClipTensor x = random_clip(5, 3, 4, 4, rng);
    const std::vector<double> before = x.data;
    (void)slice_channels(x, {1, 4});
    REQUIRE(x.data == before);
}

TEST_CASE("concat_channels semantics") {
    ClipTensor ab = labelled_channels(2, 2, 2, 2);
    ClipTensor c = labelled_channels(1, 2, 2, 2, 10.0);

    ClipTensor abc = concat_channels({ab, c});
    REQUIRE(abc.channels == 3);
    REQUIRE(abc.plane_ptr(0, 0)[0] == 0.0);
    REQUIRE(abc.plane_ptr(0, 1)[0] == 1.0);
    REQUIRE(abc.plane_ptr(0, 2)[0] == 10.0);
    REQUIRE(abc.plane_ptr(1, 2)[3] == 10.0);

    ClipTensor solo = concat_channels({ab});
    REQUIRE(solo.data == ab.data);

    ClipTensor wrong(1, 2, 3, 2, 0.0);
    REQUIRE_THROWS_AS(concat_channels({ab, wrong}), ShapeMismatch);
    REQUIRE_THROWS_AS(concat_channels({}), InvalidInput);
}

TEST_CASE("slice/concat round-trip is bit-exact for every split point") {
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 25; ++iter) {
        std::uniform_int_distribution<std::size_t> dim(1, 6);
        ClipTensor x = random_clip(dim(rng), dim(rng), dim(rng), dim(rng), rng);
        for (std::size_t k = 0; k <= x.channels; ++k) {
            ClipTensor lo = slice_channels(x, {0, k});
            ClipTensor hi = slice_channels(x, {k, x.channels});
            ClipTensor back = concat_channels({lo, hi});
            REQUIRE(back.channels == x.channels);
            REQUIRE(back.data == x.data);
        }
    }
}

TEST_CASE("canonical layout law") {
    std::mt19937_64 rng(13);
    for (int iter = 0; iter < 25; ++iter) {
        std::uniform_int_distribution<std::size_t> dim(1, 5);
        const std::size_t c = dim(rng), t = dim(rng), h = dim(rng), w = dim(rng);
        ClipTensor x = random_clip(c, t, h, w, rng);
        for (std::size_t ti = 0; ti < t; ++ti)
            for (std::size_t ci = 0; ci < c; ++ci)
                for (std::size_t hi = 0; hi < h; ++hi)
                    for (std::size_t wi = 0; wi < w; ++wi) {
                        const std::size_t flat = ti * (c * h * w) + ci * (h * w) + hi * w + wi;
                        REQUIRE(x.data[flat] == x.at(ti, ci, hi, wi));
                    }
        REQUIRE(x.data.size() == c * t * h * w);
    }
}

TEST_CASE("slice writes exactly the declared band") {
    // Canary: every output element must come from the sliced band, so a
    // sentinel outside the band can never appear in the result.
    ClipTensor x = labelled_channels(6, 2, 2, 2);
    x.at(0, 0, 0, 0) = -999.0;  // outside [2,5)
    ClipTensor mid = slice_channels(x, {2, 5});
    for (double v : mid.data) REQUIRE(v != -999.0);
}
