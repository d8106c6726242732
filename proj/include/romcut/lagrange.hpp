#pragma once

#include "romcut/core.hpp"

namespace romcut::lagrange {

/// Equispaced 1D Lagrange basis of degree p on [0,1] with nodes k/p.
/// Evaluation outside [0,1] extrapolates the polynomials.
void basis_1d(int p, double t, double* values, double* derivs);

/// Tensor-product Q_p shape functions on the unit square.
/// Local index of node (a, b) is a + (p+1) b.
struct ShapeQp {
    int p = 1;
    Vector values;                            // (p+1)^2
    Eigen::Matrix<double, 2, Eigen::Dynamic> grads;  // d/dxi, d/deta

    ShapeQp() = default;
    explicit ShapeQp(int order) : p(order), values((order + 1) * (order + 1)), grads(2, (order + 1) * (order + 1)) {}

    void evaluate(double xi, double eta);
    [[nodiscard]] int size() const { return (p + 1) * (p + 1); }
};

inline int n_local(int p) { return (p + 1) * (p + 1); }

}  // namespace romcut::lagrange
