#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace romcut {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Spatial dimension handled by the library.
inline constexpr int kDim = 2;

/// A point in the shape-parameter space.
using ParameterPoint = std::vector<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration / input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (singular system, non-bijective map, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Axis-aligned bounds of the parameter space D.
struct ParameterBox {
    ParameterPoint lower;
    ParameterPoint upper;

    [[nodiscard]] std::size_t dim() const { return lower.size(); }
    [[nodiscard]] bool contains(const ParameterPoint& mu, double tol = 1e-12) const {
        if (mu.size() != lower.size()) return false;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (mu[i] < lower[i] - tol || mu[i] > upper[i] + tol) return false;
        return true;
    }
};

}  // namespace romcut
