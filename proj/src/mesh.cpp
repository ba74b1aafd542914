#include "pointprompt/mesh.hpp"

#include "pointprompt/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pointprompt {

namespace {

struct LineReader {
    std::istringstream stream;
    int line_no = 0;

    explicit LineReader(const std::string& content) : stream(content) {}

    // Next meaningful line: blank lines and '#' comments skipped, inline
    // comments stripped.
    bool next(std::string& out) {
        std::string line;
        while (std::getline(stream, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            bool blank = true;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) {
                    blank = false;
                    break;
                }
            if (blank) continue;
            out = line;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("OFF parse error at line " + std::to_string(line_no) + ": " + what);
    }
};

}  // namespace

Mesh parse_off(const std::string& content) {
    LineReader reader(content);
    std::string line;
    if (!reader.next(line)) reader.fail("empty file");

    // Header handling: "OFF", or the fused "OFF<counts>" variant, or a bare
    // counts line.
    std::string counts_line;
    std::string trimmed = line;
    const auto first = trimmed.find_first_not_of(" \t\r");
    if (first != std::string::npos) trimmed.erase(0, first);
    if (trimmed.rfind("OFF", 0) == 0) {
        std::string rest = trimmed.substr(3);
        bool has_counts = false;
        for (char c : rest)
            if (!std::isspace(static_cast<unsigned char>(c))) has_counts = true;
        if (has_counts) {
            counts_line = rest;  // fused "OFF490 518 0"
        } else if (!reader.next(counts_line)) {
            reader.fail("missing counts line after OFF header");
        }
    } else {
        counts_line = trimmed;
    }

    long long v = 0, f = 0, e = 0;
    {
        std::istringstream is(counts_line);
        if (!(is >> v >> f)) reader.fail("malformed counts line '" + counts_line + "'");
        is >> e;  // edge count optional, ignored
        if (v < 0 || f < 0) reader.fail("negative counts");
    }

    Mesh mesh;
    mesh.vertices.resize(static_cast<Index>(v), 3);
    for (long long i = 0; i < v; ++i) {
        if (!reader.next(line)) reader.fail("truncated file: expected vertex " + std::to_string(i));
        std::istringstream is(line);
        Scalar x, y, z;
        if (!(is >> x >> y >> z)) reader.fail("malformed vertex line '" + line + "'");
        mesh.vertices(static_cast<Index>(i), 0) = x;
        mesh.vertices(static_cast<Index>(i), 1) = y;
        mesh.vertices(static_cast<Index>(i), 2) = z;
    }
    for (long long i = 0; i < f; ++i) {
        if (!reader.next(line)) reader.fail("truncated file: expected face " + std::to_string(i));
        std::istringstream is(line);
        long long arity = 0;
        if (!(is >> arity) || arity < 3) reader.fail("face with fewer than 3 vertices");
        std::vector<Index> poly;
        poly.reserve(static_cast<std::size_t>(arity));
        for (long long j = 0; j < arity; ++j) {
            long long idx;
            if (!(is >> idx)) reader.fail("truncated face line '" + line + "'");
            if (idx < 0 || idx >= v) {
                reader.fail("vertex index " + std::to_string(idx) + " out of range [0, " +
                            std::to_string(v) + ")");
            }
            poly.push_back(static_cast<Index>(idx));
        }
        // Fan decomposition: [0,1,2], [0,2,3], ...
        for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
            mesh.faces.push_back({poly[0], poly[j], poly[j + 1]});
        }
    }
    return mesh;
}

Mesh load_off(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open OFF file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_off(buf.str());
}

MatrixR sample_mesh_surface_raw(const Mesh& mesh, Index n, Rng& rng) {
    if (mesh.faces.empty()) throw DataError("sample_surface: mesh has no faces");
    if (n < 1) throw ArgumentError("sample_surface: need at least one sample");

    std::vector<Scalar> cumulative;
    cumulative.reserve(mesh.faces.size());
    Scalar total = 0.0;
    for (const auto& face : mesh.faces) {
        const Vector3 a = mesh.vertices.row(face[0]);
        const Vector3 b = mesh.vertices.row(face[1]);
        const Vector3 c = mesh.vertices.row(face[2]);
        total += 0.5 * (b - a).cross(c - a).norm();
        cumulative.push_back(total);
    }
    if (total <= 0.0) throw DataError("sample_surface: mesh has zero surface area");

    MatrixR points(n, 3);
    for (Index i = 0; i < n; ++i) {
        const Scalar pick = rng.uniform() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t face_idx =
            std::min(static_cast<std::size_t>(it - cumulative.begin()), mesh.faces.size() - 1);
        const auto& face = mesh.faces[face_idx];
        const Vector3 a = mesh.vertices.row(face[0]);
        const Vector3 b = mesh.vertices.row(face[1]);
        const Vector3 c = mesh.vertices.row(face[2]);
        Scalar u = rng.uniform();
        Scalar w = rng.uniform();
        if (u + w > 1.0) {  // reflect into the triangle
            u = 1.0 - u;
            w = 1.0 - w;
        }
        points.row(i) = (a + u * (b - a) + w * (c - a)).transpose();
    }
    return points;
}

PointCloud sample_surface(const Mesh& mesh, Index n, Rng& rng) {
    PointCloud pc;
    pc.points = sample_mesh_surface_raw(mesh, n, rng);
    normalize_cloud(pc);
    return pc;
}

PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open XYZ file '" + path + "'");
    std::vector<Vector3> pts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (blank) continue;
        std::istringstream is(line);
        Scalar x, y, z;
        if (!(is >> x >> y >> z)) {
            throw ParseError("XYZ parse error at line " + std::to_string(line_no) + ": '" +
                             line + "'");
        }
        pts.emplace_back(x, y, z);
    }
    if (pts.empty()) throw DataError("XYZ file '" + path + "' has no points");
    PointCloud pc;
    pc.points.resize(static_cast<Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i)
        pc.points.row(static_cast<Index>(i)) = pts[i].transpose();
    normalize_cloud(pc);
    return pc;
}

}  // namespace pointprompt
