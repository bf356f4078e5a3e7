#pragma once

#include <cstddef>
#include <vector>

#include "dfs/error.hpp"
#include "dfs/tensor.hpp"

namespace dfs {

// One dataset element: N per-modality clips of equal dims plus a class label.
struct MultiModalSample {
    std::vector<ClipTensor> clips;
    std::size_t label = 0;

    void validate() const {
        if (clips.empty()) throw InvalidInput("MultiModalSample: no clips");
        for (const auto& c : clips)
            if (!c.same_shape(clips[0]))
                throw ShapeMismatch("MultiModalSample: clips disagree on dims");
    }
};

}  // namespace dfs
