#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>

#include "romcut/fem.hpp"
#include "romcut/rom.hpp"

namespace romcut {

struct StokesData {
    std::function<Point(const Point&)> f = [](const Point&) { return Point(0.0, 0.0); };
    std::function<Point(const Point&)> u_D = [](const Point&) { return Point(0.0, 0.0); };
    // inlet, walls and hole; the outlet (right) is traction free
    std::array<bool, kNumTags> dirichlet{true, false, true, true, true};
};

/// Taylor-Hood Q2/Q1 aggregated pair on a reference cut mesh.
struct StokesSpaces {
    CutMesh mesh;
    AggregationMap agg_u;
    AggregationMap agg_p;
    FESpace velocity;
    FESpace pressure;
    std::shared_ptr<const SparsityPattern> a_pattern;
    std::shared_ptr<const SparsityPattern> b_pattern;

    static StokesSpaces build(const BackgroundGrid& grid, const LevelSet& geo);
};

/// n_p x 2 n_u local coupling: bulk q div v and/or the -q v.n Dirichlet term.
MatrixKernel coupling_kernel(int pu, int pp, int pdef, std::array<bool, kNumTags> dirichlet, bool bulk,
                             bool boundary);
VectorKernel stokes_rhs_kernel(int pu, int pdef, double tau, const StokesData& data);
VectorKernel pressure_rhs_kernel(int pu, int pp, int pdef, const StokesData& data);

struct StokesOperators {
    MatrixOperator A;
    MatrixOperator B;
    VectorOperator l;
    VectorOperator k;
};
StokesOperators stokes_operators(const StokesSpaces& s, int pdef, const StokesData& data, double tau);

struct StokesSystem {
    std::shared_ptr<const SparsityPattern> a_pattern;
    std::shared_ptr<const SparsityPattern> b_pattern;
    Vector A;
    Vector B;
    Vector l;
    Vector k;

    /// [A -B^T; B 0]
    [[nodiscard]] SparseMatrix matrix() const;
    [[nodiscard]] Vector rhs() const;
};

StokesSystem assemble_stokes(const StokesSpaces& s, const DeformationField& def, const StokesData& data, double eta);

struct StokesSolution {
    Vector u;
    Vector p;
};
StokesSolution solve_stokes(const StokesSystem& sys);

/// Bulk coupling on the reference configuration, int q div v.
SparseMatrix reference_coupling_bulk(const StokesSpaces& s);

/// Modified Gram-Schmidt in the X inner product with one re-orthogonalization pass.
Matrix gram_schmidt(const Matrix& V, const SparseMatrix& X, int* dropped = nullptr);

enum class SupremizerKind { Cholesky, Riesz };  // H^-1 B^T q  or  X^-1 B^T q

struct SupremizerSet {
    Matrix S;
    Matrix Phi_u;
    int dropped = 0;
    double sigma_min = 0.0;  // of Phi_p^T B Phi_u
};

double reduced_coupling_sigma_min(const Matrix& Phi_p, const SparseMatrix& B, const Matrix& Phi_u);
SupremizerSet enrich(const Matrix& Phi_u, const Matrix& Phi_p, const SparseMatrix& X, const SparseMatrix& B,
                     SupremizerKind kind = SupremizerKind::Cholesky);

struct CouplingCheck {
    std::vector<int> cells;
    std::vector<double> c;          // per cell mean ratio
    std::vector<double> deviation;  // per cell max - min
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Ratio of deformed to reference bulk coupling integrals over random local pairs.
CouplingCheck coupling_constant_check(const StokesSpaces& s, const DeformationField& def, int sample_pairs,
                                      std::uint64_t seed);

/// Layout of the reduced saddle system: fields (u, p); A, B blocks; l, k vectors.
BlockLayout stokes_layout();

struct ReducedStokesSolution {
    Vector u;
    Vector p;
    double residual = 0.0;
};
ReducedStokesSolution solve_reduced_stokes(const ReducedOperator& ro, int n_u, int n_p, const Vector& theta_A,
                                           const Vector& theta_B, const Vector& theta_l, const Vector& theta_k);

}  // namespace romcut
