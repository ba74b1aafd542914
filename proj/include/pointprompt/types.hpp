#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace pointprompt {

// Computation precision. Everything numeric in this project runs in 64-bit
// reals; gradient checking against central differences needs the headroom.
using Scalar = double;
using Index = Eigen::Index;

// Flat row-major storage plus shape metadata is the universal tensor layout.
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatrixR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

using MatMap = Eigen::Map<MatrixR>;
using ConstMatMap = Eigen::Map<const MatrixR>;
using VecMap = Eigen::Map<VectorX>;
using ConstVecMap = Eigen::Map<const VectorX>;

using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
}

}  // namespace pointprompt
