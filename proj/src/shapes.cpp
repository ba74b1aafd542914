#include "pointprompt/shapes.hpp"

#include "pointprompt/errors.hpp"
#include "pointprompt/mesh.hpp"

#include <cmath>

namespace pointprompt {

ShapeKind parse_shape_kind(const std::string& s) {
    if (s == "sphere") return ShapeKind::kSphere;
    if (s == "cube") return ShapeKind::kCube;
    if (s == "cylinder") return ShapeKind::kCylinder;
    if (s == "cone") return ShapeKind::kCone;
    if (s == "torus") return ShapeKind::kTorus;
    if (s == "plane") return ShapeKind::kPlane;
    if (s == "pyramid") return ShapeKind::kPyramid;
    if (s == "helix") return ShapeKind::kHelix;
    throw ArgumentError("unknown shape kind '" + s + "'");
}

const char* shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::kSphere: return "sphere";
        case ShapeKind::kCube: return "cube";
        case ShapeKind::kCylinder: return "cylinder";
        case ShapeKind::kCone: return "cone";
        case ShapeKind::kTorus: return "torus";
        case ShapeKind::kPlane: return "plane";
        case ShapeKind::kPyramid: return "pyramid";
        case ShapeKind::kHelix: return "helix";
    }
    return "?";
}

const std::vector<ShapeKind>& all_shape_kinds() {
    static const std::vector<ShapeKind> kinds = {
        ShapeKind::kSphere, ShapeKind::kCube,  ShapeKind::kCylinder, ShapeKind::kCone,
        ShapeKind::kTorus,  ShapeKind::kPlane, ShapeKind::kPyramid,  ShapeKind::kHelix,
    };
    return kinds;
}

namespace {

constexpr Scalar kTorusMajor = 1.0;
constexpr Scalar kTorusMinor = 0.3;

Vector3 sphere_point(Rng& rng) {
    const Scalar z = rng.uniform(-1.0, 1.0);
    const Scalar phi = rng.uniform(0.0, 2.0 * M_PI);
    const Scalar r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Vector3 cube_point(Rng& rng) {
    const auto face = static_cast<int>(rng.uniform_index(6));
    const Scalar u = rng.uniform(-1.0, 1.0);
    const Scalar v = rng.uniform(-1.0, 1.0);
    const Scalar s = (face % 2 == 0) ? 1.0 : -1.0;
    switch (face / 2) {
        case 0: return {s, u, v};
        case 1: return {u, s, v};
        default: return {u, v, s};
    }
}

Vector3 cylinder_point(Rng& rng) {
    // Radius 1, z in [-1, 1], capped. Side area 4pi vs 2 caps of pi each.
    const Scalar pick = rng.uniform() * 6.0;
    if (pick < 4.0) {
        const Scalar phi = rng.uniform(0.0, 2.0 * M_PI);
        return {std::cos(phi), std::sin(phi), rng.uniform(-1.0, 1.0)};
    }
    const Scalar r = std::sqrt(rng.uniform());
    const Scalar phi = rng.uniform(0.0, 2.0 * M_PI);
    const Scalar z = pick < 5.0 ? 1.0 : -1.0;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Vector3 cone_point(Rng& rng) {
    // Base disk radius 1 at z = 0, apex at z = 1.2.
    const Scalar height = 1.2;
    const Scalar lateral = M_PI * std::sqrt(1.0 + height * height);
    const Scalar base = M_PI;
    const Scalar pick = rng.uniform() * (lateral + base);
    const Scalar phi = rng.uniform(0.0, 2.0 * M_PI);
    if (pick < lateral) {
        const Scalar s = std::sqrt(rng.uniform());  // area element grows with radius
        return {s * std::cos(phi), s * std::sin(phi), height * (1.0 - s)};
    }
    const Scalar r = std::sqrt(rng.uniform());
    return {r * std::cos(phi), r * std::sin(phi), 0.0};
}

Vector3 torus_point(Rng& rng) {
    // Uniform over the surface needs rejection on the minor angle: the area
    // element carries a (R + r cos theta) factor.
    Scalar theta;
    for (;;) {
        theta = rng.uniform(0.0, 2.0 * M_PI);
        const Scalar accept = (kTorusMajor + kTorusMinor * std::cos(theta)) /
                              (kTorusMajor + kTorusMinor);
        if (rng.uniform() < accept) break;
    }
    const Scalar phi = rng.uniform(0.0, 2.0 * M_PI);
    const Scalar ring = kTorusMajor + kTorusMinor * std::cos(theta);
    return {ring * std::cos(phi), ring * std::sin(phi), kTorusMinor * std::sin(theta)};
}

Vector3 plane_point(Rng& rng) {
    return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
}

Vector3 helix_point(Rng& rng) {
    // Two turns, radius 1, constant pitch, thin tube. Arc length is linear
    // in the parameter for a constant-pitch helix, so uniform t is uniform
    // along the curve.
    const Scalar turns = 2.0;
    const Scalar t = rng.uniform(0.0, turns * 2.0 * M_PI);
    const Scalar z = -0.8 + 1.6 * t / (turns * 2.0 * M_PI);
    const Scalar tube = 0.1;
    const Scalar a = rng.uniform(0.0, 2.0 * M_PI);
    // Tube offset in the plane spanned by the radial direction and z.
    const Scalar radial = 1.0 + tube * std::cos(a);
    return {radial * std::cos(t), radial * std::sin(t), z + tube * std::sin(a)};
}

Mesh pyramid_mesh() {
    Mesh m;
    m.vertices.resize(5, 3);
    m.vertices << -1, -1, 0,
                   1, -1, 0,
                   1,  1, 0,
                  -1,  1, 0,
                   0,  0, 1.3;
    m.faces = {{0, 2, 1}, {0, 3, 2}, {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
    return m;
}

bool centrally_symmetric(ShapeKind k) {
    switch (k) {
        case ShapeKind::kSphere:
        case ShapeKind::kCube:
        case ShapeKind::kCylinder:
        case ShapeKind::kTorus:
        case ShapeKind::kPlane:
            return true;
        default:
            return false;
    }
}

}  // namespace

MatrixR sample_shape_raw(ShapeKind kind, Index n, Rng& rng) {
    if (n < 8) throw ArgumentError("sample_shape_raw: need at least 8 points");

    if (kind == ShapeKind::kPyramid) {
        static const Mesh pyramid = pyramid_mesh();
        return sample_mesh_surface_raw(pyramid, n, rng);
    }

    auto draw = [&](Rng& r) -> Vector3 {
        switch (kind) {
            case ShapeKind::kSphere: return sphere_point(r);
            case ShapeKind::kCube: return cube_point(r);
            case ShapeKind::kCylinder: return cylinder_point(r);
            case ShapeKind::kCone: return cone_point(r);
            case ShapeKind::kTorus: return torus_point(r);
            case ShapeKind::kPlane: return plane_point(r);
            case ShapeKind::kHelix: return helix_point(r);
            default: throw ArgumentError("sample_shape_raw: unhandled kind");
        }
    };

    MatrixR points(n, 3);
    if (centrally_symmetric(kind) && n % 2 == 0) {
        // Antithetic pairs keep the sample centroid at the origin exactly, so
        // normalization does not smear analytic identities (e.g. equal sphere
        // norms).
        for (Index i = 0; i < n / 2; ++i) {
            const Vector3 p = draw(rng);
            points.row(2 * i) = p.transpose();
            points.row(2 * i + 1) = (-p).transpose();
        }
    } else {
        for (Index i = 0; i < n; ++i) points.row(i) = draw(rng).transpose();
    }
    return points;
}

PointCloud generate_shape(ShapeKind kind, Index n, Scalar noise_sigma, Rng& rng) {
    if (noise_sigma < 0) throw ArgumentError("generate_shape: noise sigma must be >= 0");
    PointCloud pc;
    pc.points = sample_shape_raw(kind, n, rng);
    if (noise_sigma > 0) {
        for (Index i = 0; i < pc.points.rows(); ++i)
            for (Index c = 0; c < 3; ++c) pc.points(i, c) += rng.gaussian(0.0, noise_sigma);
    }
    normalize_cloud(pc);
    return pc;
}

}  // namespace pointprompt
