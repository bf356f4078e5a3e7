#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dfs/error.hpp"
#include "dfs/model.hpp"
#include "dfs/synthdata.hpp"

namespace dfs {

// JSON run configuration: {network, train, shift, data}. Every section is
// optional and falls back to the library defaults; the shift section carries
// the ablation switches (modality/temporal enables plus share_stages, which
// overrides the per-stage shared flags). The four ablation presets are
// exactly:
//   M+T shared:  both enables on,  share_stages [2,3]
//   T shared:    modality off,     share_stages [2,3]
//   T nonshared: modality off,     share_stages []
//   nonshift:    both off,         share_stages []
struct RunConfig {
    NetworkConfig network = default_network_config();
    TrainConfig train;
    std::string data_dir;
    GenMode data_mode = GenMode::full;

    void validate() const {
        network.validate();
        train.validate();
    }
};

namespace detail {

inline Fraction parse_fraction(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(std::string(name) + ": expected [numerator, denominator]");
    Fraction f{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
    if (f.den == 0) throw ConfigError(std::string(name) + ": zero denominator");
    return f;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig rc;
    try {
        if (j.contains("network")) {
            const auto& n = j.at("network");
            auto& net = rc.network;
            if (n.contains("modalities")) net.modalities = n.at("modalities").get<std::size_t>();
            if (n.contains("num_classes")) net.num_classes = n.at("num_classes").get<std::size_t>();
            if (n.contains("input")) {
                const auto& in = n.at("input");
                if (in.contains("c")) net.input_c = in.at("c").get<std::size_t>();
                if (in.contains("t")) net.input_t = in.at("t").get<std::size_t>();
                if (in.contains("h")) net.input_h = in.at("h").get<std::size_t>();
                if (in.contains("w")) net.input_w = in.at("w").get<std::size_t>();
            }
            if (n.contains("stages")) {
                net.stages.clear();
                std::size_t in_ch = net.input_c;
                for (const auto& s : n.at("stages")) {
                    StageSpec spec;
                    spec.in_channels = in_ch;
                    spec.out_channels = s.at("out_channels").get<std::size_t>();
                    spec.stride = s.value("stride", 1);
                    spec.shared = s.value("shared", false);
                    in_ch = spec.out_channels;
                    net.stages.push_back(spec);
                }
            } else {
                net.stages.front().in_channels = net.input_c;
            }
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            if (t.contains("learning_rate"))
                rc.train.learning_rate = t.at("learning_rate").get<double>();
            if (t.contains("epochs")) rc.train.epochs = t.at("epochs").get<std::size_t>();
            if (t.contains("batch_size")) rc.train.batch_size = t.at("batch_size").get<std::size_t>();
            if (t.contains("seed")) rc.train.seed = t.at("seed").get<std::uint64_t>();
            if (t.contains("momentum")) rc.train.momentum = t.at("momentum").get<double>();
        }
        if (j.contains("shift")) {
            const auto& s = j.at("shift");
            auto& sh = rc.network.shift;
            if (s.contains("k_fraction"))
                sh.k_fraction = detail::parse_fraction(s.at("k_fraction"), "k_fraction");
            if (s.contains("i_fraction"))
                sh.i_fraction = detail::parse_fraction(s.at("i_fraction"), "i_fraction");
            if (s.contains("sites")) sh.sites = s.at("sites").get<std::vector<int>>();
            if (s.contains("modality_shift_enabled"))
                sh.modality_enabled = s.at("modality_shift_enabled").get<bool>();
            if (s.contains("temporal_shift_enabled"))
                sh.temporal_enabled = s.at("temporal_shift_enabled").get<bool>();
            if (s.contains("share_stages")) {
                for (auto& st : rc.network.stages) st.shared = false;
                for (const auto& idx : s.at("share_stages")) {
                    const std::size_t one_based = idx.get<std::size_t>();
                    if (one_based < 1 || one_based > rc.network.stages.size())
                        throw ConfigError("share_stages: stage index out of range");
                    rc.network.stages[one_based - 1].shared = true;
                }
            }
        }
        if (j.contains("data")) {
            const auto& d = j.at("data");
            if (d.contains("dir")) rc.data_dir = d.at("dir").get<std::string>();
            if (d.contains("mode")) rc.data_mode = gen_mode_from_string(d.at("mode").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    rc.validate();
    return rc;
}

// The four named ablation settings over a base config.
inline RunConfig ablation_config(const RunConfig& base, const std::string& name) {
    RunConfig rc = base;
    auto share = [&](bool on) {
        for (std::size_t s = 0; s < rc.network.stages.size(); ++s)
            rc.network.stages[s].shared = on && (s == 1 || s == 2);
    };
    if (name == "mt_shared") {
        rc.network.shift.modality_enabled = true;
        rc.network.shift.temporal_enabled = true;
        share(true);
    } else if (name == "t_shared") {
        rc.network.shift.modality_enabled = false;
        rc.network.shift.temporal_enabled = true;
        share(true);
    } else if (name == "t_nonshared") {
        rc.network.shift.modality_enabled = false;
        rc.network.shift.temporal_enabled = true;
        share(false);
    } else if (name == "nonshift") {
        rc.network.shift.modality_enabled = false;
        rc.network.shift.temporal_enabled = false;
        share(false);
    } else {
        throw ConfigError("unknown ablation setting: " + name);
    }
    return rc;
}

}  // namespace dfs
