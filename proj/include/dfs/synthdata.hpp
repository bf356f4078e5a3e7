#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfs/error.hpp"
#include "dfs/rng.hpp"
#include "dfs/sample.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

// ---------------------------------------------------------------------------
// Synthetic multi-modal benchmark. Modality A carries a single bright dot
// moving one pixel per frame along a row; modality B is background except,
// in the sync modes, a 2x2 flash block at the top-left corner that fires the
// frame the dot crosses the centre column (sync=same) or one frame later
// (sync=next). Class structure:
//   direction: left vs right, where every right clip is the exact frame
//              reversal of a generated left clip (same noise, reversed) —
//              so the two classes are mutual time reversals by construction;
//   sync:      same vs next, generated as pairs sharing trajectory and noise;
//   full:      direction x sync, four classes, independent draws.
// All pixel arithmetic runs in f32 so the f32 clip files round-trip exactly.
// ---------------------------------------------------------------------------

enum class GenMode { direction, sync, full };
enum class Direction { left, right };
enum class SyncKind { none, same, next };

inline std::string to_string(GenMode m) {
    switch (m) {
        case GenMode::direction: return "direction";
        case GenMode::sync: return "sync";
        default: return "full";
    }
}

inline GenMode gen_mode_from_string(const std::string& s) {
    if (s == "direction") return GenMode::direction;
    if (s == "sync") return GenMode::sync;
    if (s == "full") return GenMode::full;
    throw ConfigError("unknown generator mode: " + s);
}

struct GenConfig {
    GenMode mode = GenMode::full;
    std::size_t samples_per_class = 50;
    std::uint64_t seed = 0;
    std::size_t frames = 8;   // T
    std::size_t extent = 16;  // H == W
    std::size_t modalities = 2;
    double dot_intensity = 1.0;
    double flash_intensity = 1.0;
    double background = 0.0;
    double noise_std = 0.05;

    std::size_t num_classes() const { return mode == GenMode::full ? 4 : 2; }

    std::vector<std::string> class_names() const {
        switch (mode) {
            case GenMode::direction: return {"left", "right"};
            case GenMode::sync: return {"same", "next"};
            default: return {"left_same", "left_next", "right_same", "right_next"};
        }
    }

    void validate() const {
        if (frames < 4) throw ConfigError("GenConfig: T must be >= 4");
        if (extent < 8) throw ConfigError("GenConfig: H=W must be >= 8");
        if (modalities < 2) throw ConfigError("GenConfig: need >= 2 modalities");
        if (samples_per_class == 0) throw ConfigError("GenConfig: samples_per_class >= 1");
        if (noise_std < 0) throw ConfigError("GenConfig: negative noise_std");
    }
};

struct ManifestEntry {
    std::string path;
    std::size_t label = 0;
};

struct DatasetManifest {
    std::uint32_t version = 1;
    GenMode mode = GenMode::full;
    std::uint64_t seed = 0;
    std::vector<std::string> classes;
    std::vector<ManifestEntry> files;
};

// ---------------------------------------------------------------------------
// Clip rendering
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::size_t kFlashExtent = 2;  // 2x2 block at rows/cols [0,2)

// Fills one single-channel clip with background + N(0, sigma) noise, f32 math.
inline ClipTensor noise_clip(const GenConfig& gc, std::mt19937_64& rng) {
    ClipTensor x(1, gc.frames, gc.extent, gc.extent, 0.0);
    const float bg = static_cast<float>(gc.background);
    if (gc.noise_std > 0) {
        std::normal_distribution<double> dist(0.0, gc.noise_std);
        for (double& v : x.data) v = bg + static_cast<float>(dist(rng));
    } else {
        for (double& v : x.data) v = bg;
    }
    return x;
}

inline void add_f32(ClipTensor& x, std::size_t t, std::size_t c, std::size_t h, std::size_t w,
                    double amount) {
    double& v = x.at(t, c, h, w);
    v = static_cast<float>(static_cast<float>(v) + static_cast<float>(amount));
}

}  // namespace detail

// Centre column; the dot "crosses" when its column equals this.
inline std::size_t centre_col(const GenConfig& gc) { return gc.extent / 2; }

// Frame at which the dot sits on the centre column, or the sentinel T if the
// trajectory never crosses it.
inline std::size_t crossing_frame(const GenConfig& gc, Direction dir, std::size_t start_col) {
    const long centre = static_cast<long>(centre_col(gc));
    const long start = static_cast<long>(start_col);
    const long tau = dir == Direction::right ? centre - start : start - centre;
    if (tau < 0 || tau >= static_cast<long>(gc.frames)) return gc.frames;
    return static_cast<std::size_t>(tau);
}

// Renders one sample. The dot travels (row, start_col +- t) on modality A;
// for sync kinds the flash lands on modality B at the crossing frame (same)
// or one frame later (next). Remaining modalities are background + noise.
inline MultiModalSample render_clip(const GenConfig& gc, Direction dir, SyncKind sync,
                                    std::size_t row, std::size_t start_col,
                                    std::mt19937_64& rng) {
    gc.validate();
    if (row >= gc.extent) throw GenError("render_clip: row out of bounds");
    for (std::size_t t = 0; t < gc.frames; ++t) {
        const long col = static_cast<long>(start_col) +
                         (dir == Direction::right ? static_cast<long>(t) : -static_cast<long>(t));
        if (col < 0 || col >= static_cast<long>(gc.extent))
            throw GenError("render_clip: trajectory leaves the frame");
    }

    std::size_t flash_frame = gc.frames;
    if (sync != SyncKind::none) {
        const std::size_t tau = crossing_frame(gc, dir, start_col);
        if (tau >= gc.frames) throw GenError("render_clip: trajectory never crosses centre");
        flash_frame = sync == SyncKind::same ? tau : tau + 1;
        if (flash_frame >= gc.frames) throw GenError("render_clip: flash frame beyond clip");
    }

    MultiModalSample s;
    s.clips.reserve(gc.modalities);
    for (std::size_t p = 0; p < gc.modalities; ++p) s.clips.push_back(detail::noise_clip(gc, rng));

    for (std::size_t t = 0; t < gc.frames; ++t) {
        const long col = static_cast<long>(start_col) +
                         (dir == Direction::right ? static_cast<long>(t) : -static_cast<long>(t));
        detail::add_f32(s.clips[0], t, 0, row, static_cast<std::size_t>(col), gc.dot_intensity);
    }
    if (sync != SyncKind::none) {
        for (std::size_t y = 0; y < detail::kFlashExtent; ++y)
            for (std::size_t x = 0; x < detail::kFlashExtent; ++x)
                detail::add_f32(s.clips[1], flash_frame, 0, y, x, gc.flash_intensity);
    }
    return s;
}

// Exact frame-order reversal of every modality (the direction-mode pairing).
inline MultiModalSample reverse_frames(const MultiModalSample& s) {
    MultiModalSample r = s;
    for (std::size_t p = 0; p < s.clips.size(); ++p) {
        const ClipTensor& src = s.clips[p];
        ClipTensor& dst = r.clips[p];
        const std::size_t fs = src.frame_size();
        for (std::size_t t = 0; t < src.frames; ++t)
            std::copy(src.frame_ptr(src.frames - 1 - t), src.frame_ptr(src.frames - 1 - t) + fs,
                      dst.frame_ptr(t));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Clip files: magic "DFSB", u32 version, N, C, T, H, W, label, then N blocks
// of C*T*H*W f32 values in canonical layout. Values must be f32-representable
// (the generator guarantees it), so the round-trip is bit-exact.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kClipVersion = 1;

inline void write_clip_file(const MultiModalSample& s, const std::string& path) {
    s.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_clip_file: cannot open " + path);
    const ClipTensor& c0 = s.clips[0];
    os.write("DFSB", 4);
    const std::uint32_t header[7] = {
        kClipVersion,
        static_cast<std::uint32_t>(s.clips.size()),
        static_cast<std::uint32_t>(c0.channels),
        static_cast<std::uint32_t>(c0.frames),
        static_cast<std::uint32_t>(c0.height),
        static_cast<std::uint32_t>(c0.width),
        static_cast<std::uint32_t>(s.label),
    };
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    std::vector<float> buf(c0.size());
    for (const auto& clip : s.clips) {
        for (std::size_t n = 0; n < clip.data.size(); ++n)
            buf[n] = static_cast<float>(clip.data[n]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) throw IoError("write_clip_file: write failed for " + path);
}

inline MultiModalSample read_clip_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_clip_file: cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DFSB", 4) != 0) throw FormatError("clip file: bad magic");
    std::uint32_t header[7] = {};
    is.read(reinterpret_cast<char*>(header), sizeof header);
    if (!is) throw FormatError("clip file: truncated header");
    if (header[0] != kClipVersion) throw FormatError("clip file: bad version");
    const std::uint32_t n = header[1], c = header[2], t = header[3], h = header[4], w = header[5];
    if (n == 0 || c == 0 || t == 0 || h == 0 || w == 0 || n > 64 || c > 4096 || t > 1u << 20 ||
        h > 1u << 16 || w > 1u << 16)
        throw FormatError("clip file: implausible dims");

    MultiModalSample s;
    s.label = header[6];
    const std::size_t count = static_cast<std::size_t>(c) * t * h * w;
    std::vector<float> buf(count);
    for (std::uint32_t p = 0; p < n; ++p) {
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (!is) throw FormatError("clip file: payload shorter than declared dims");
        ClipTensor clip(c, t, h, w, 0.0);
        for (std::size_t i = 0; i < count; ++i) clip.data[i] = buf[i];
        s.clips.push_back(std::move(clip));
    }
    is.peek();
    if (!is.eof()) throw FormatError("clip file: payload longer than declared dims");
    return s;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

namespace detail {

// Trajectory draw used by the flash modes: crossing frame tau lands strictly
// inside the clip (flash fits even for sync=next) and the dot row stays away
// from the flash corner so spatial pooling cannot conflate the two.
struct Trajectory {
    Direction dir;
    std::size_t row;
    std::size_t start_col;
};

inline Trajectory draw_flash_trajectory(const GenConfig& gc, Direction dir,
                                        std::mt19937_64& rng) {
    const std::size_t centre = centre_col(gc);
    std::uniform_int_distribution<std::size_t> row_dist(gc.extent / 4, gc.extent - 1);
    std::uniform_int_distribution<std::size_t> tau_dist(2, gc.frames - 3);
    const std::size_t tau = tau_dist(rng);
    const std::size_t start =
        dir == Direction::right ? centre - tau : centre + tau;
    return {dir, row_dist(rng), start};
}

}  // namespace detail

inline DatasetManifest generate_dataset(const GenConfig& gc, const std::string& out_dir) {
    gc.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("generate_dataset: cannot create " + out_dir);

    // The flash modes place the crossing at tau in [2, T-3]. Every such
    // trajectory stays in-bounds iff centre >= T-3 (start columns exist) and
    // T <= W/2 + 2 (the far end of the longest trajectory fits).
    if (gc.mode != GenMode::direction &&
        (centre_col(gc) + 3 < gc.frames || gc.frames > gc.extent / 2 + 2))
        throw GenError("generate_dataset: extent too small for the crossing trajectories");

    DatasetManifest m;
    m.mode = gc.mode;
    m.seed = gc.seed;
    m.classes = gc.class_names();

    auto emit = [&](const MultiModalSample& s, std::size_t label, std::size_t index) {
        char name[64];
        std::snprintf(name, sizeof name, "clip_c%zu_%05zu.dfsb", label, index);
        MultiModalSample tagged = s;
        tagged.label = label;
        write_clip_file(tagged, (fs::path(out_dir) / name).string());
        m.files.push_back({name, label});
    };

    const std::size_t n = gc.samples_per_class;
    if (gc.mode == GenMode::direction) {
        for (std::size_t j = 0; j < n; ++j) {
            std::mt19937_64 rng(mix_seed(gc.seed, j));
            std::uniform_int_distribution<std::size_t> row_dist(0, gc.extent - 1);
            std::uniform_int_distribution<std::size_t> col_dist(gc.frames - 1, gc.extent - 1);
            const std::size_t row = row_dist(rng);
            const std::size_t start = col_dist(rng);
            MultiModalSample left =
                render_clip(gc, Direction::left, SyncKind::none, row, start, rng);
            emit(left, 0, j);
            emit(reverse_frames(left), 1, j);
        }
    } else if (gc.mode == GenMode::sync) {
        for (std::size_t j = 0; j < n; ++j) {
            std::mt19937_64 rng(mix_seed(gc.seed, j));
            const Direction dir = (rng() & 1) ? Direction::right : Direction::left;
            const auto tr = detail::draw_flash_trajectory(gc, dir, rng);
            // Same noise for both members of the pair: clone the stream.
            std::mt19937_64 rng_b = rng;
            emit(render_clip(gc, tr.dir, SyncKind::same, tr.row, tr.start_col, rng), 0, j);
            emit(render_clip(gc, tr.dir, SyncKind::next, tr.row, tr.start_col, rng_b), 1, j);
        }
    } else {
        for (std::size_t cls = 0; cls < 4; ++cls) {
            const Direction dir = (cls / 2 == 0) ? Direction::left : Direction::right;
            const SyncKind sync = (cls % 2 == 0) ? SyncKind::same : SyncKind::next;
            for (std::size_t j = 0; j < n; ++j) {
                std::mt19937_64 rng(mix_seed(gc.seed, cls * n + j));
                const auto tr = detail::draw_flash_trajectory(gc, dir, rng);
                emit(render_clip(gc, tr.dir, sync, tr.row, tr.start_col, rng), cls, j);
            }
        }
    }

    // Manifest
    nlohmann::json j;
    j["version"] = m.version;
    j["mode"] = to_string(m.mode);
    j["seed"] = m.seed;
    j["classes"] = m.classes;
    auto& files = j["files"] = nlohmann::json::array();
    for (const auto& f : m.files) files.push_back({{"path", f.path}, {"label", f.label}});
    std::ofstream os(fs::path(out_dir) / "manifest.json");
    if (!os) throw IoError("generate_dataset: cannot write manifest");
    os << j.dump(2) << "\n";
    return m;
}

inline DatasetManifest load_manifest(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw IoError("load_manifest: no manifest.json under " + dir);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
    DatasetManifest m;
    try {
        m.version = j.at("version").get<std::uint32_t>();
        m.mode = gen_mode_from_string(j.at("mode").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.classes = j.at("classes").get<std::vector<std::string>>();
        for (const auto& f : j.at("files")) {
            m.files.push_back(
                {f.at("path").get<std::string>(), f.at("label").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
    for (const auto& f : m.files)
        if (f.label >= m.classes.size()) throw FormatError("manifest.json: label out of range");
    return m;
}

// Loads every clip listed by the manifest, in manifest order.
inline std::vector<MultiModalSample> load_dataset(const std::string& dir,
                                                  const DatasetManifest& m) {
    namespace fs = std::filesystem;
    std::vector<MultiModalSample> out;
    out.reserve(m.files.size());
    for (const auto& f : m.files) {
        MultiModalSample s = read_clip_file((fs::path(dir) / f.path).string());
        if (s.label != f.label) throw FormatError("dataset: file label disagrees with manifest");
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Temporal stride sampling: keep frames 0, stride, 2*stride, ...
// ---------------------------------------------------------------------------

inline ClipTensor temporal_stride_sample(const ClipTensor& raw, std::size_t stride) {
    if (stride == 0) throw InvalidInput("temporal_stride_sample: stride must be >= 1");
    const std::size_t t_out = (raw.frames + stride - 1) / stride;
    ClipTensor out(raw.channels, t_out, raw.height, raw.width, 0.0);
    const std::size_t fs = raw.frame_size();
    for (std::size_t t = 0; t < t_out; ++t)
        std::copy(raw.frame_ptr(t * stride), raw.frame_ptr(t * stride) + fs, out.frame_ptr(t));
    return out;
}

}  // namespace dfs
