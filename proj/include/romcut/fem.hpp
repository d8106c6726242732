#pragma once

#include <array>
#include <functional>
#include <memory>

#include "romcut/core.hpp"
#include "romcut/deformation.hpp"
#include "romcut/lagrange.hpp"
#include "romcut/space.hpp"

namespace romcut {

/// Local (uncondensed) cell contributions as functions of the cell quadrature
/// and the deformation's local nodal values (2 x n_local).
using MatrixKernel = std::function<Matrix(const CellQuad&, const Matrix& psi_local)>;
using VectorKernel = std::function<Vector(const CellQuad&, const Matrix& psi_local)>;

struct MatrixOperator {
    const FESpace* rows = nullptr;
    const FESpace* cols = nullptr;
    std::shared_ptr<const SparsityPattern> pattern;
    MatrixKernel kernel;
};

struct VectorOperator {
    const FESpace* rows = nullptr;
    VectorKernel kernel;
};

/// Values aligned with the pattern; cells accumulated in ascending order.
Vector assemble_values(const CutMesh& mesh, const MatrixOperator& op, const DeformationField& def);
Vector assemble_vector(const CutMesh& mesh, const VectorOperator& op, const DeformationField& def);

/// Geometry and shape data at one reference quadrature point.
struct QPoint {
    MappedPoint m;
    Vector N;
    Eigen::Matrix<double, 2, Eigen::Dynamic> G;  // physical gradients J^{-T} grad~ N
};

class PointEvaluator {
public:
    PointEvaluator(int p, int pdef) : shape_(p), sdef_(pdef), same_(p == pdef) {}
    void eval(const CellQuad& q, const Point& xt, const Matrix& psi_local, QPoint& out);
    /// Physics-order shape values/gradients only (second space on the same point).
    void eval_extra(const CellQuad& q, const Point& xt, const MappedPoint& m, lagrange::ShapeQp& shape, Vector& N,
                    Eigen::Matrix<double, 2, Eigen::Dynamic>& G) const;

private:
    lagrange::ShapeQp shape_;
    lagrange::ShapeQp sdef_;
    bool same_;
};

struct PoissonData {
    std::function<double(const Point&)> f = [](const Point&) { return 0.0; };
    std::function<double(const Point&)> u_D = [](const Point&) { return 0.0; };
    std::function<double(const Point&, const Point&)> u_N = [](const Point&, const Point&) { return 0.0; };
    std::array<bool, kNumTags> dirichlet{true, false, false, false, true};
};

inline double default_eta(int p) { return 10.0 * p * p; }
double nitsche_tau(double eta, const BackgroundGrid& grid);

/// grad-grad (+ Nitsche) matrix kernel for a `comps`-component Q_p field.
/// With `consistency` false only the tau-mass boundary term is added (norm form).
MatrixKernel laplace_kernel(int p, int pdef, int comps, double tau, std::array<bool, kNumTags> dirichlet,
                            bool consistency);
VectorKernel poisson_rhs_kernel(int p, int pdef, double tau, const PoissonData& data);
MatrixKernel mass_kernel(int p, int pdef);

struct AssembledSystem {
    std::shared_ptr<const SparsityPattern> pattern;
    Vector values;
    Vector rhs;

    [[nodiscard]] SparseMatrix matrix() const { return pattern->to_sparse(values); }
};

AssembledSystem assemble_poisson(const CutMesh& mesh, const FESpace& space,
                                 const std::shared_ptr<const SparsityPattern>& pattern, const DeformationField& def,
                                 const PoissonData& data, double eta);

enum class NormKind { XRef, XMu, XHat, Y };

struct NormMatrix {
    NormKind kind = NormKind::XRef;
    SparseMatrix matrix;
};

/// X_ref / X_mu: grad-grad + tau mass on Dirichlet parts (def = zero for X_ref).
/// Y: L2 mass on the (deformed) domain.
NormMatrix assemble_norm(const CutMesh& mesh, const FESpace& space, const DeformationField& def, NormKind kind,
                         std::array<bool, kNumTags> dirichlet, double tau);
/// X_hat: background H1 seminorm + h^d mass.
NormMatrix assemble_background_norm(const BackgroundGrid& grid, int p);
void require_spd(const SparseMatrix& M, const char* what);

/// Direct sparse solve with a relative residual check of 1e-10.
Vector solve_fom(const SparseMatrix& A, const Vector& rhs);

/// Discrete harmonic extension of aggregated solutions to the background grid.
class HarmonicExtension {
public:
    HarmonicExtension(const CutMesh& mesh, const FESpace& space);
    ~HarmonicExtension();
    HarmonicExtension(HarmonicExtension&&) noexcept;

    [[nodiscard]] Vector extend(const Vector& u) const;
    /// Max |(K u)_i| over inactive nodes of a background vector.
    [[nodiscard]] double residual(const Vector& uhat) const;
    [[nodiscard]] int n_background() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace romcut
