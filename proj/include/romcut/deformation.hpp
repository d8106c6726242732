#pragma once

#include <array>
#include <functional>
#include <memory>
#include <utility>

#include "romcut/core.hpp"
#include "romcut/lagrange.hpp"
#include "romcut/space.hpp"

namespace romcut {

struct ElasticMaterial {
    double young_modulus = 1.0;
    double poisson_ratio = 0.3;
    /// Cell stiffness scaled by (h / max(|phi(x_K)|, h/2))^stiffening.
    double stiffening = 0.0;

    [[nodiscard]] double lame_lambda() const;
    [[nodiscard]] double lame_mu() const;
};

/// Lamé coefficients (lambda, mu) from Young modulus and Poisson ratio.
std::pair<double, double> lame_coefficients(double E, double nu);

/// Displacement prescribed on the reference hole boundary.
struct BoundaryDisplacement {
    std::function<Point(const Point&)> evaluate;
};

/// Hole displacement mapping the circle (c_ref, R_ref) onto (c, R):
/// x -> (c - c_ref) + (R / R_ref - 1)(x - c_ref).
BoundaryDisplacement hole_displacement(const Point& c, double R, const Point& c_ref, double R_ref);

/// Benchmark family: hole centred at (mu1, mu1) with radius mu2.
BoundaryDisplacement hole_boundary_displacement(const ParameterPoint& mu, const ParameterPoint& mu_ref);

/// Pulled-back geometric quantities at one reference point.
struct MappedPoint {
    Point x;        // deformed point x~ + psi(x~)
    Mat2 J;         // I + grad psi
    double detJ = 1.0;
    Mat2 JinvT;
};

/// Map a reference point given the deformation's local nodal values (2 x n_local)
/// and shape gradients of the deformation space in reference cell units.
MappedPoint map_point(const Matrix& psi_local, const lagrange::ShapeQp& shape, const Point& xt, const Point& h);

struct Pullback {
    Point gradient;
    double volume_scale = 1.0;
    double surface_scale = 1.0;
    Point normal;
};

/// Nodal displacement field on the reference active mesh (Q_p, background numbering).
class DeformationField {
public:
    DeformationField() = default;
    DeformationField(const BackgroundGrid& grid, int p, Matrix nodal);
    static DeformationField zero(const BackgroundGrid& grid, int p);

    [[nodiscard]] int order() const { return p_; }
    [[nodiscard]] const BackgroundGrid& grid() const { return grid_; }
    [[nodiscard]] const Matrix& nodal() const { return nodal_; }  // n_nodes x 2
    [[nodiscard]] Matrix local(int cell) const;                   // 2 x n_local
    [[nodiscard]] MappedPoint at(int cell, const Point& xt) const;
    [[nodiscard]] Point displacement(int cell, const Point& xt) const;

private:
    BackgroundGrid grid_;
    int p_ = 1;
    Matrix nodal_;
};

Pullback pullback(const DeformationField& def, int cell, const Point& xt, const Point& ref_gradient,
                  const Point& ref_normal);

struct JacobianBounds {
    double C1 = 1.0;
    double Cd = 1.0;
};

/// Singular-value bounds of J over the given points (cell, reference point).
JacobianBounds jacobian_bounds(const DeformationField& def, const std::vector<std::pair<int, Point>>& samples);
/// All bulk and boundary quadrature points of the mesh.
std::vector<std::pair<int, Point>> quadrature_samples(const CutMesh& mesh);

/// Throws "deformation not bijective" if det J <= 0 at any quadrature point.
void check_bijective(const DeformationField& def, const CutMesh& mesh);

/// Linear elasticity on the internal cells of the reference mesh. Dirichlet
/// data is interpolated at every node of a cut cell (hole data) and at every
/// node on the box boundary (outer data). Factorized once.
class ElasticDeformationSolver {
public:
    ElasticDeformationSolver(const CutMesh& mesh, int p, const ElasticMaterial& mat);
    ~ElasticDeformationSolver();
    ElasticDeformationSolver(ElasticDeformationSolver&&) noexcept;
    ElasticDeformationSolver& operator=(ElasticDeformationSolver&&) noexcept;

    [[nodiscard]] DeformationField solve(const BoundaryDisplacement& hole,
                                         const std::function<Point(const Point&)>& outer = {}) const;
    /// Residual of the interior equations for a nodal field (rigid/patch tests).
    [[nodiscard]] double interior_residual(const DeformationField& def) const;
    [[nodiscard]] int order() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

DeformationField solve_elastic_deformation(const CutMesh& mesh, const BoundaryDisplacement& bc,
                                           const ElasticMaterial& mat, int p);

/// psi(mu) = sum_k coef_k Psi_k for the hole family x -> c + s (x - c_ref):
/// coefficients (c_x - c_ref_x, c_y - c_ref_y, s - 1).
class AffineHoleDeformation {
public:
    AffineHoleDeformation(const ElasticDeformationSolver& solver, const BackgroundGrid& grid, const Point& c_ref,
                          double R_ref);

    [[nodiscard]] std::array<double, 3> coefficients(const Point& c, double R) const;
    [[nodiscard]] DeformationField field(const std::array<double, 3>& coef) const;
    [[nodiscard]] const std::array<Matrix, 3>& modes() const { return modes_; }
    [[nodiscard]] const Point& center_ref() const { return c_ref_; }
    [[nodiscard]] double radius_ref() const { return R_ref_; }

private:
    BackgroundGrid grid_;
    int p_ = 1;
    Point c_ref_;
    double R_ref_ = 1.0;
    std::array<Matrix, 3> modes_;
};

}  // namespace romcut
