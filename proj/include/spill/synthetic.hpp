#pragma once

#include <cstddef>
#include <cstdint>

#include "spill/core.hpp"

namespace spill {

struct GaussianIntentsSpec {
    std::size_t intents = 10;
    std::size_t per_intent = 50;
    std::size_t dim = 64;
    /// Per-coordinate standard deviation of intent centers around the origin.
    double center_spread = 1.0;
    /// Per-coordinate standard deviation of utterances around their center.
    double noise = 1.0;
    std::uint64_t seed = 0;
};

/// Labeled Gaussian blobs with unique texts "intent <c> utterance <i>".
/// Rows are interleaved across intents so neighbouring ids differ in label.
LabeledDataset make_gaussian_intents(const GaussianIntentsSpec& spec);

}  // namespace spill
