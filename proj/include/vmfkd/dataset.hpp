#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vmfkd/linalg.hpp"

namespace vmfkd {

struct Dataset {
    enum class Split { train, test };

    Matrix features;  // n x m, values in [0, 1]
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    Split split = Split::train;
    // Set for image data (IDX); 0 when the features are not images.
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols; }
    void validate() const;
};

// Big-endian IDX (magic 0x803 for images, 0x801 for labels). Pixels are
// scaled to [0, 1]. Distinct errors for bad magic, truncation, and
// image/label count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes pixels back as rounded bytes; loading IDX and saving it again is
// value-identical.
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path);

struct SyntheticSpec {
    enum class Kind { blobs, ring };
    Kind kind = Kind::blobs;
    std::size_t classes = 2;
    std::size_t n_per_class = 100;
    std::size_t d_in = 2;
    double noise_scale = 0.1;
    std::uint64_t seed = 0;
};

// blobs: Gaussian clusters around circle-arranged means; ring: angular
// sectors in the plane (embedded in d_in). Exactly balanced, deterministic.
Dataset make_synthetic(const SyntheticSpec& spec);

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed,
                  bool stratified);

// Per-class fraction of the dataset (balance is reported, never enforced).
std::vector<double> class_balance(const Dataset& ds);

}  // namespace vmfkd
