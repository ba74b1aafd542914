#include "pointprompt/dataset.hpp"

#include "pointprompt/errors.hpp"
#include "pointprompt/mesh.hpp"
#include "pointprompt/render.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace pointprompt {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> Dataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!samples[i].test_split) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].test_split) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::class_train_indices(Index label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!samples[i].test_split && samples[i].label == label) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    if (class_names.empty()) throw DataError("dataset: no classes");
    std::set<std::string> seen;
    for (const auto& name : class_names) {
        if (name.empty()) throw DataError("dataset: empty class name");
        if (!seen.insert(name).second) throw DataError("dataset: duplicate class '" + name + "'");
    }
    for (const auto& s : samples) {
        if (s.label < 0 || s.label >= class_count()) {
            throw DataError("dataset: sample '" + s.id + "' has label " +
                            std::to_string(s.label) + " outside [0, " +
                            std::to_string(class_count()) + ")");
        }
    }
}

const std::vector<std::string>& caption_templates() {
    static const std::vector<std::string> templates = {
        "a point cloud of a [CLASS]",
        "a 3D shape of a [CLASS]",
        "point cloud of a [CLASS]",
        "a point cloud model of [CLASS]",
    };
    return templates;
}

std::string make_caption(const std::string& class_name, std::size_t template_id) {
    const auto& templates = caption_templates();
    if (template_id >= templates.size()) {
        throw ArgumentError("make_caption: unknown template id " + std::to_string(template_id));
    }
    std::string out = templates[template_id];
    const std::string placeholder = "[CLASS]";
    const auto pos = out.find(placeholder);
    out.replace(pos, placeholder.size(), class_name);
    return out;
}

Dataset few_shot_subset(const Dataset& ds, const FewShotSpec& spec) {
    if (spec.shots < 1) throw ArgumentError("few_shot_subset: shots must be >= 1");
    Dataset out;
    out.class_names = ds.class_names;
    Rng rng(spec.seed);
    for (Index c = 0; c < ds.class_count(); ++c) {
        std::vector<std::size_t> pool = ds.class_train_indices(c);
        if (static_cast<Index>(pool.size()) < spec.shots) {
            throw DataError("few_shot_subset: class '" + ds.class_names[c] + "' has only " +
                            std::to_string(pool.size()) + " train samples, need " +
                            std::to_string(spec.shots));
        }
        Rng class_rng = rng.derive(static_cast<std::uint64_t>(c));
        class_rng.shuffle(pool);
        for (Index k = 0; k < spec.shots; ++k)
            out.samples.push_back(ds.samples[pool[static_cast<std::size_t>(k)]]);
    }
    for (std::size_t i : ds.test_indices()) out.samples.push_back(ds.samples[i]);
    return out;
}

Dataset fraction_subset(const Dataset& ds, Scalar fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ArgumentError("fraction_subset: fraction must lie in (0, 1]");
    }
    Dataset out;
    out.class_names = ds.class_names;
    Rng rng(seed);
    for (Index c = 0; c < ds.class_count(); ++c) {
        std::vector<std::size_t> pool = ds.class_train_indices(c);
        if (pool.empty()) {
            throw DataError("fraction_subset: class '" + ds.class_names[c] +
                            "' has no train samples");
        }
        const auto keep = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<Scalar>(pool.size())));
        if (keep == 0) {
            throw DataError("fraction_subset: class '" + ds.class_names[c] +
                            "' empty after rounding");
        }
        // A seeded per-class permutation taken as a prefix makes subsets
        // nested across fractions.
        Rng class_rng = rng.derive(static_cast<std::uint64_t>(c));
        class_rng.shuffle(pool);
        for (std::size_t k = 0; k < keep; ++k) out.samples.push_back(ds.samples[pool[k]]);
    }
    for (std::size_t i : ds.test_indices()) out.samples.push_back(ds.samples[i]);
    return out;
}

Dataset build_synthetic_dataset(const SyntheticSpec& spec) {
    Dataset ds;
    for (ShapeKind kind : all_shape_kinds()) ds.class_names.emplace_back(shape_kind_name(kind));

    Rng root(spec.seed);
    std::size_t ordinal = 0;
    for (std::size_t c = 0; c < all_shape_kinds().size(); ++c) {
        const ShapeKind kind = all_shape_kinds()[c];
        const Index total = spec.train_per_class + spec.test_per_class;
        for (Index i = 0; i < total; ++i, ++ordinal) {
            Rng rng = root.derive(static_cast<std::uint64_t>(ordinal));
            Sample s;
            s.label = static_cast<Index>(c);
            s.test_split = i >= spec.train_per_class;
            s.id = std::string(shape_kind_name(kind)) + (s.test_split ? "/test/" : "/train/") +
                   std::to_string(s.test_split ? i - spec.train_per_class : i);
            s.source = "generator:" + std::string(shape_kind_name(kind));
            s.cloud = generate_shape(kind, spec.points, spec.noise_sigma, rng);
            // Pose augmentation: objects show up in arbitrary yaw and a
            // bounded tilt, so classes are not separable by raw orientation.
            const Scalar yaw = rng.uniform(0.0, 2.0 * M_PI);
            const Scalar tilt = rng.uniform(-spec.max_tilt, spec.max_tilt);
            rotate_cloud(s.cloud, view_rotation(yaw, tilt));
            s.cloud.label = s.label;
            s.depth = render_depth(s.cloud, spec.view_azimuth, spec.view_elevation,
                                   spec.image_size, spec.image_size);
            s.caption = make_caption(ds.class_names[c], ordinal % caption_templates().size());
            ds.samples.push_back(std::move(s));
        }
    }
    ds.validate();
    return ds;
}

Dataset load_off_dataset(const std::string& root, Index points, Index image_size,
                         Scalar view_azimuth, Scalar view_elevation, std::uint64_t seed) {
    if (!fs::is_directory(root)) throw DataError("data root '" + root + "' is not a directory");
    Dataset ds;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) ds.class_names.push_back(entry.path().filename().string());
    }
    std::sort(ds.class_names.begin(), ds.class_names.end());
    if (ds.class_names.empty()) throw DataError("data root '" + root + "' has no class dirs");

    Rng rng(seed);
    std::size_t ordinal = 0;
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
        for (const char* split : {"train", "test"}) {
            const fs::path dir = fs::path(root) / ds.class_names[c] / split;
            if (!fs::is_directory(dir)) continue;
            std::vector<fs::path> files;
            for (const auto& f : fs::directory_iterator(dir)) {
                if (f.path().extension() == ".off") files.push_back(f.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& path : files) {
                Rng file_rng = rng.derive(static_cast<std::uint64_t>(ordinal++));
                Sample s;
                s.label = static_cast<Index>(c);
                s.test_split = std::string(split) == "test";
                s.id = ds.class_names[c] + "/" + split + "/" + path.filename().string();
                s.source = path.string();
                Mesh mesh = load_off(path.string());
                s.cloud = sample_surface(mesh, points, file_rng);
                s.cloud.label = s.label;
                s.depth = render_depth(s.cloud, view_azimuth, view_elevation, image_size,
                                       image_size);
                // Class names like "night_stand" read as words in captions.
                std::string readable = ds.class_names[c];
                std::replace(readable.begin(), readable.end(), '_', ' ');
                s.caption = make_caption(readable, ordinal % caption_templates().size());
                ds.samples.push_back(std::move(s));
            }
        }
    }
    if (ds.samples.empty()) throw DataError("data root '" + root + "' has no .off files");
    ds.validate();
    return ds;
}

void write_manifest(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest '" + path + "'");
    for (const auto& s : ds.samples) {
        json record = {
            {"id", s.id},
            {"source", s.source},
            {"class", ds.class_names[static_cast<std::size_t>(s.label)]},
            {"split", s.test_split ? "test" : "train"},
        };
        out << record.dump() << "\n";
    }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest '" + path + "'");
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            throw ParseError("manifest parse error at line " + std::to_string(line_no));
        }
        ManifestEntry e;
        e.id = record.at("id").get<std::string>();
        e.source = record.at("source").get<std::string>();
        e.class_name = record.at("class").get<std::string>();
        e.split = record.at("split").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace pointprompt
