#include <catch2/catch_amalgamated.hpp>

#include "dfs/bench.hpp"

using namespace dfs;

TEST_CASE("bench reports zero shift multiplications and positive latencies") {
    BenchShape shape{8, 4, 8, 8};
    BenchReport r = run_bench(shape, 5, 1);
    REQUIRE(r.kernels.size() == 4);
    for (const auto& k : r.kernels) {
        REQUIRE(k.mean_ms > 0.0);
        REQUIRE(k.min_ms > 0.0);
        if (k.name != "forward_full") REQUIRE(k.mult_ops == 0);
    }
    // the forward pass does real arithmetic
    REQUIRE(r.kernels.back().name == "forward_full");
    REQUIRE(r.kernels.back().mult_ops > 0);
}

TEST_CASE("bytes moved scale exactly 4x when H and W double") {
    BenchShape small{8, 4, 8, 8};
    BenchShape big{8, 4, 16, 16};
    REQUIRE(shift_bytes_moved(big, 1) == 4 * shift_bytes_moved(small, 1));
    REQUIRE(shift_bytes_moved(big, 2) == 4 * shift_bytes_moved(small, 2));
    // exact arithmetic: read + write of every f64 element per tensor
    REQUIRE(shift_bytes_moved(small, 1) == 2ull * 8 * 4 * 8 * 8 * sizeof(double));
}

TEST_CASE("bench accounting table separates storage from compute") {
    BenchShape shape{8, 4, 8, 8};
    BenchReport r = run_bench(shape, 2, 0);
    REQUIRE(r.configs.size() == 3);
    const auto& single = r.configs[0];
    const auto& dual_shared = r.configs[1];
    const auto& dual_nonshared = r.configs[2];
    REQUIRE(dual_shared.params < dual_nonshared.params);
    REQUIRE(dual_shared.macs == dual_nonshared.macs);
    REQUIRE(single.macs < dual_shared.macs);

    const auto j = r.to_json();
    REQUIRE(j.at("kernels").size() == 4);
    REQUIRE(j.at("configs")[1].at("name").get<std::string>() == "dual_shared");
}
