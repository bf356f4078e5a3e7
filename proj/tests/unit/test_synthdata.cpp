#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "dfs/synthdata.hpp"

using namespace dfs;
namespace fs = std::filesystem;

namespace {

GenConfig quiet_config(GenMode mode, double noise = 0.0) {
    GenConfig gc;
    gc.mode = mode;
    gc.samples_per_class = 4;
    gc.seed = 99;
    gc.noise_std = noise;
    return gc;
}

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("noise-free direction pair: reversal is bit-exact by construction") {
    GenConfig gc = quiet_config(GenMode::direction);
    std::mt19937_64 rng(1);
    MultiModalSample left = render_clip(gc, Direction::left, SyncKind::none, 5, 12, rng);
    MultiModalSample right = reverse_frames(left);
    MultiModalSample back = reverse_frames(right);
    for (std::size_t p = 0; p < left.clips.size(); ++p)
        REQUIRE(back.clips[p].data == left.clips[p].data);

    // the reversed clip moves the other way: frame t of right equals frame
    // T-1-t of left
    for (std::size_t t = 0; t < gc.frames; ++t)
        REQUIRE(right.clips[0].frame_ptr(t)[5 * gc.extent + (12 - (gc.frames - 1 - t))] == 1.0);
}

TEST_CASE("paired noise keeps the reversal exact with sigma > 0") {
    GenConfig gc = quiet_config(GenMode::direction, 0.05);
    const fs::path dir = fresh_dir("dfs_dirpair");
    DatasetManifest m = generate_dataset(gc, dir.string());
    REQUIRE(m.files.size() == 8);

    // each right clip (label 1) is the exact frame reversal of its left twin
    for (std::size_t j = 0; j < gc.samples_per_class; ++j) {
        MultiModalSample l = read_clip_file((dir / m.files[2 * j].path).string());
        MultiModalSample r = read_clip_file((dir / m.files[2 * j + 1].path).string());
        REQUIRE(l.label == 0);
        REQUIRE(r.label == 1);
        MultiModalSample rev = reverse_frames(l);
        for (std::size_t p = 0; p < l.clips.size(); ++p)
            REQUIRE(rev.clips[p].data == r.clips[p].data);
    }
    fs::remove_all(dir);
}

TEST_CASE("sync pair shares modality A bit-exactly at sigma=0") {
    GenConfig gc = quiet_config(GenMode::sync);
    std::mt19937_64 rng_a(7), rng_b(7);
    MultiModalSample same = render_clip(gc, Direction::right, SyncKind::same, 9, 3, rng_a);
    MultiModalSample next = render_clip(gc, Direction::right, SyncKind::next, 9, 3, rng_b);
    REQUIRE(same.clips[0].data == next.clips[0].data);
    REQUIRE(same.clips[1].data != next.clips[1].data);

    // flash lands at tau then tau+1 (dot starts at col 3, centre 8 -> tau 5)
    REQUIRE(same.clips[1].at(5, 0, 0, 0) == 1.0);
    REQUIRE(same.clips[1].at(5, 0, 1, 1) == 1.0);
    REQUIRE(next.clips[1].at(6, 0, 0, 0) == 1.0);
    REQUIRE(next.clips[1].at(5, 0, 0, 0) == 0.0);
}

TEST_CASE("sigma=0 direction clip has exactly T bright pixels in modality A") {
    GenConfig gc = quiet_config(GenMode::direction);
    std::mt19937_64 rng(3);
    MultiModalSample s = render_clip(gc, Direction::right, SyncKind::none, 2, 1, rng);
    std::size_t bright = 0;
    for (double v : s.clips[0].data)
        if (v == 1.0) ++bright;
    REQUIRE(bright == gc.frames);
    for (double v : s.clips[1].data) REQUIRE(v == 0.0);
}

TEST_CASE("render_clip bounds checks") {
    GenConfig gc = quiet_config(GenMode::direction);
    std::mt19937_64 rng(5);
    REQUIRE_THROWS_AS(render_clip(gc, Direction::right, SyncKind::none, 3, 12, rng), GenError);
    REQUIRE_THROWS_AS(render_clip(gc, Direction::left, SyncKind::none, 3, 4, rng), GenError);
    REQUIRE_THROWS_AS(render_clip(gc, Direction::right, SyncKind::none, 99, 0, rng), GenError);
    // no crossing: a rightward dot from column 0 stops short of the centre
    REQUIRE_THROWS_AS(render_clip(gc, Direction::right, SyncKind::same, 3, 0, rng), GenError);
    // crossing at the last frame leaves no room for sync=next
    REQUIRE_THROWS_AS(render_clip(gc, Direction::right, SyncKind::next, 3, 1, rng), GenError);
}

TEST_CASE("generate_dataset is deterministic and balanced") {
    GenConfig gc = quiet_config(GenMode::direction, 0.05);
    gc.samples_per_class = 10;
    const fs::path d1 = fresh_dir("dfs_gen1");
    const fs::path d2 = fresh_dir("dfs_gen2");
    DatasetManifest m1 = generate_dataset(gc, d1.string());
    DatasetManifest m2 = generate_dataset(gc, d2.string());

    REQUIRE(m1.files.size() == 20);
    REQUIRE(m1.classes == std::vector<std::string>{"left", "right"});
    std::size_t per_class[2] = {0, 0};
    for (const auto& f : m1.files) ++per_class[f.label];
    REQUIRE(per_class[0] == 10);
    REQUIRE(per_class[1] == 10);

    for (std::size_t n = 0; n < m1.files.size(); ++n) {
        REQUIRE(m1.files[n].path == m2.files[n].path);
        REQUIRE(slurp(d1 / m1.files[n].path) == slurp(d2 / m2.files[n].path));
    }
    REQUIRE(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("full mode: four balanced classes") {
    GenConfig gc = quiet_config(GenMode::full, 0.05);
    gc.samples_per_class = 25;
    const fs::path dir = fresh_dir("dfs_full");
    DatasetManifest m = generate_dataset(gc, dir.string());
    REQUIRE(m.files.size() == 100);
    REQUIRE(m.classes.size() == 4);
    std::size_t per_class[4] = {0, 0, 0, 0};
    for (const auto& f : m.files) ++per_class[f.label];
    for (std::size_t c = 0; c < 4; ++c) REQUIRE(per_class[c] == 25);

    // loading agrees with the manifest
    auto samples = load_dataset(dir.string(), m);
    REQUIRE(samples.size() == 100);
    REQUIRE(samples[0].clips.size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("clip file round-trip is bit-exact and sized as declared") {
    GenConfig gc = quiet_config(GenMode::sync, 0.05);
    std::mt19937_64 rng(11);
    MultiModalSample s = render_clip(gc, Direction::right, SyncKind::same, 8, 4, rng);
    s.label = 1;
    const fs::path path = fs::temp_directory_path() / "dfs_clip_roundtrip.dfsb";
    write_clip_file(s, path.string());

    // magic(4) + 7 u32 header fields + 2 * 1*8*16*16 f32 payload
    REQUIRE(fs::file_size(path) == 4 + 28 + 2 * 8 * 16 * 16 * 4);

    MultiModalSample r = read_clip_file(path.string());
    REQUIRE(r.label == 1);
    REQUIRE(r.clips.size() == 2);
    for (std::size_t p = 0; p < 2; ++p) REQUIRE(r.clips[p].data == s.clips[p].data);
    fs::remove(path);
}

TEST_CASE("malformed clip files raise FormatError") {
    GenConfig gc = quiet_config(GenMode::direction);
    std::mt19937_64 rng(13);
    MultiModalSample s = render_clip(gc, Direction::left, SyncKind::none, 4, 10, rng);
    const fs::path path = fs::temp_directory_path() / "dfs_clip_malformed.dfsb";
    write_clip_file(s, path.string());
    const std::string good = slurp(path);

    auto write_all = [&](const std::string& bytes) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    };

    write_all(good.substr(0, good.size() - 17));  // payload shorter than header claims
    REQUIRE_THROWS_AS(read_clip_file(path.string()), FormatError);

    write_all(good + "x");  // payload longer than header claims
    REQUIRE_THROWS_AS(read_clip_file(path.string()), FormatError);

    std::string bad = good;
    bad[2] = 'Z';
    write_all(bad);
    REQUIRE_THROWS_AS(read_clip_file(path.string()), FormatError);

    fs::remove(path);
}

TEST_CASE("temporal stride sampling") {
    ClipTensor raw(2, 64, 3, 3, 0.0);
    for (std::size_t t = 0; t < 64; ++t) raw.frame_ptr(t)[0] = static_cast<double>(t);

    ClipTensor id = temporal_stride_sample(raw, 1);
    REQUIRE(id.data == raw.data);

    ClipTensor s8 = temporal_stride_sample(raw, 8);
    REQUIRE(s8.frames == 8);
    for (std::size_t t = 0; t < 8; ++t) REQUIRE(s8.frame_ptr(t)[0] == static_cast<double>(8 * t));

    ClipTensor raw10(1, 10, 2, 2, 0.0);
    for (std::size_t t = 0; t < 10; ++t) raw10.frame_ptr(t)[0] = static_cast<double>(t);
    ClipTensor s2 = temporal_stride_sample(raw10, 8);
    REQUIRE(s2.frames == 2);
    REQUIRE(s2.frame_ptr(0)[0] == 0.0);
    REQUIRE(s2.frame_ptr(1)[0] == 8.0);

    REQUIRE_THROWS_AS(temporal_stride_sample(raw, 0), InvalidInput);
}

TEST_CASE("manifest load validates content") {
    const fs::path dir = fresh_dir("dfs_manifest");
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "manifest.json");
        os << R"({"version":1,"mode":"direction","seed":5,"classes":["a","b"],)"
           << R"("files":[{"path":"x.dfsb","label":7}]})";
    }
    REQUIRE_THROWS_AS(load_manifest(dir.string()), FormatError);  // label out of range
    {
        std::ofstream os(dir / "manifest.json", std::ios::trunc);
        os << "{ not json";
    }
    REQUIRE_THROWS_AS(load_manifest(dir.string()), FormatError);
    REQUIRE_THROWS_AS(load_manifest((dir / "nope").string()), IoError);
    fs::remove_all(dir);
}
