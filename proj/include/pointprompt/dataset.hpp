#pragma once

#include "pointprompt/geometry.hpp"
#include "pointprompt/rng.hpp"
#include "pointprompt/shapes.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pointprompt {

/// One aligned training triplet: point cloud, depth render, caption.
struct Sample {
    std::string id;
    PointCloud cloud;
    MatrixR depth;        // [H x W] depth image of the same object
    std::string caption;  // templated description
    Index label = 0;
    std::string source;   // generator spec or file path
    bool test_split = false;
};

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<Sample> samples;

    Index class_count() const { return static_cast<Index>(class_names.size()); }
    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
    std::vector<std::size_t> class_train_indices(Index label) const;
    void validate() const;  // labels in range, names unique and non-empty
};

struct FewShotSpec {
    Index shots = 1;
    std::uint64_t seed = 0;
};

// The caption templates. [CLASS] is the substitution point.
const std::vector<std::string>& caption_templates();
std::string make_caption(const std::string& class_name, std::size_t template_id);

/// Exactly k seeded draws per class from the train split, without
/// replacement; the test split rides along untouched.
Dataset few_shot_subset(const Dataset& ds, const FewShotSpec& spec);

/// Per-class stratified prefix of ceil(fraction * class_size) samples. Same
/// seed nests: the 5% subset is contained in the 10% subset.
Dataset fraction_subset(const Dataset& ds, Scalar fraction, std::uint64_t seed);

struct SyntheticSpec {
    Index train_per_class = 64;
    Index test_per_class = 32;
    Index points = 256;
    Scalar noise_sigma = 0.02;
    Index image_size = 32;
    std::uint64_t seed = 0;
    // Per-sample pose jitter: uniform azimuth, bounded tilt.
    Scalar max_tilt = 0.5;
    // Depth render view.
    Scalar view_azimuth = 0.7;
    Scalar view_elevation = 0.5;
};

/// Procedural 8-class dataset over the analytic shape suite: per-sample
/// rotation augmentation, depth render, rotating caption templates.
Dataset build_synthetic_dataset(const SyntheticSpec& spec);

/// Loads `<root>/<class_name>/<split>/*.off` (splits "train" and "test"),
/// surface-sampling each mesh to `points` (seeded per file). Classes are the
/// sorted subdirectory names.
Dataset load_off_dataset(const std::string& root, Index points, Index image_size,
                         Scalar view_azimuth, Scalar view_elevation, std::uint64_t seed);

// Line-delimited manifest records {id, source, class, split}.
void write_manifest(const Dataset& ds, const std::string& path);
struct ManifestEntry {
    std::string id;
    std::string source;
    std::string class_name;
    std::string split;
};
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace pointprompt
