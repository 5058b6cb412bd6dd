#pragma once

#include <cstdint>

#include "vmfkd/dataset.hpp"

namespace vmfkd {

// Procedurally rendered 28x28 handwritten-style digit images (white strokes
// on black, anti-aliased, randomly jittered in pose, stroke width, warp, and
// ink). Balanced over the 10 classes and deterministic in the seed. Serves
// as the offline stand-in for a real IDX digit corpus; files written from it
// go through exactly the same loaders and transforms.
Dataset make_digits(std::size_t n, std::uint64_t seed,
                    Dataset::Split split = Dataset::Split::train);

}  // namespace vmfkd
