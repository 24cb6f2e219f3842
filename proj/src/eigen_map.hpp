#pragma once

#include <Eigen/Core>
#include <span>

namespace fakenews::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedConstMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

inline ConstMatrixMap cmap(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline MatrixMap map(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MatrixMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace fakenews::detail
