#pragma once

#include "pointprompt/geometry.hpp"
#include "pointprompt/rng.hpp"

#include <string>
#include <vector>

namespace pointprompt {

enum class ShapeKind {
    kSphere,
    kCube,
    kCylinder,
    kCone,
    kTorus,
    kPlane,
    kPyramid,
    kHelix,
};

ShapeKind parse_shape_kind(const std::string& s);
const char* shape_kind_name(ShapeKind k);
const std::vector<ShapeKind>& all_shape_kinds();

// Uniform surface sampling of the analytic shape in its canonical pose and
// scale, before jitter or normalization. Exposed so geometric identities
// (cube faces, torus tube radius) can be checked exactly.
MatrixR sample_shape_raw(ShapeKind kind, Index n, Rng& rng);

// sample_shape_raw + Gaussian jitter sigma + normalization.
PointCloud generate_shape(ShapeKind kind, Index n, Scalar noise_sigma, Rng& rng);

}  // namespace pointprompt
