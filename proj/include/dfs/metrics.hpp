#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfs/error.hpp"

namespace dfs {

// K x K confusion counts, row = true class, column = predicted class.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts;  // row-major

    explicit ConfusionMatrix(std::size_t k = 0) : num_classes(k), counts(k * k, 0) {}

    std::uint64_t& at(std::size_t truth, std::size_t pred) {
        return counts[truth * num_classes + pred];
    }
    std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * num_classes + pred];
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }

    void update(std::size_t truth, std::size_t pred) {
        if (truth >= num_classes || pred >= num_classes)
            throw InvalidLabel("confusion_update: label out of range");
        ++at(truth, pred);
    }

    // Cell-wise sum, for reducing per-worker matrices.
    void merge(const ConfusionMatrix& other) {
        if (other.num_classes != num_classes)
            throw ShapeMismatch("ConfusionMatrix::merge: size mismatch");
        for (std::size_t n = 0; n < counts.size(); ++n) counts[n] += other.counts[n];
    }
};

inline void confusion_update(ConfusionMatrix& cm, std::size_t truth, std::size_t pred) {
    cm.update(truth, pred);
}

// trace / total
inline double top1_accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw EmptyEval("top1_accuracy: no samples");
    std::uint64_t diag = 0;
    for (std::size_t k = 0; k < cm.num_classes; ++k) diag += cm.at(k, k);
    return static_cast<double>(diag) / static_cast<double>(total);
}

// Macro-averaged recall; classes with no true samples are excluded.
inline double balanced_accuracy(const ConfusionMatrix& cm) {
    double sum = 0.0;
    std::size_t rows = 0;
    for (std::size_t k = 0; k < cm.num_classes; ++k) {
        std::uint64_t row = 0;
        for (std::size_t j = 0; j < cm.num_classes; ++j) row += cm.at(k, j);
        if (row == 0) continue;
        sum += static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
        ++rows;
    }
    if (rows == 0) throw EmptyEval("balanced_accuracy: no samples");
    return sum / static_cast<double>(rows);
}

struct EvalReport {
    double top1 = 0.0;
    double balanced = 0.0;
    ConfusionMatrix confusion;
    std::uint64_t num_samples = 0;
    std::string model_path;
    std::string dataset_manifest;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["top1"] = top1;
        j["balanced"] = balanced;
        auto& rows = j["confusion"] = nlohmann::json::array();
        for (std::size_t t = 0; t < confusion.num_classes; ++t) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t p = 0; p < confusion.num_classes; ++p)
                row.push_back(confusion.at(t, p));
            rows.push_back(std::move(row));
        }
        j["num_samples"] = num_samples;
        j["model_path"] = model_path;
        j["dataset_manifest"] = dataset_manifest;
        j["seed"] = seed;
        return j;
    }
};

}  // namespace dfs
