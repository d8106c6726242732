#pragma once

#include <vector>

#include "romcut/core.hpp"

namespace romcut::quadrature {

/// Gauss-Legendre rule on [0, 1].
struct Rule1D {
    std::vector<double> points;
    std::vector<double> weights;
};

/// Points/weights in the plane (weights carry the measure, e.g. area units).
struct Rule2D {
    std::vector<Point> points;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] double total_weight() const;
    void append(const Rule2D& other);
};

/// n-point Gauss-Legendre rule on [0,1]; exact for degree 2n-1.
Rule1D gauss_legendre(int n);

/// Tensor Gauss rule with n points per axis on the box [lo, lo + size].
Rule2D tensor_rule(const Point& lo, const Point& size, int n);

/// Collapsed (Duffy) Gauss rule on triangle (a, b, c), exact for total degree `order`.
/// All weights are positive.
Rule2D triangle_rule(const Point& a, const Point& b, const Point& c, int order);

/// Gauss rule on the segment [a, b]; weights in length units.
Rule2D segment_rule(const Point& a, const Point& b, int n);

/// Number of 1D Gauss points needed to integrate degree `order` exactly.
inline int points_for_order(int order) { return (order + 2) / 2; }

}  // namespace romcut::quadrature
