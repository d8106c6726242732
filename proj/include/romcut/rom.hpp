#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "romcut/core.hpp"
#include "romcut/fem.hpp"

namespace romcut {

struct SvdOptions {
    bool deterministic = true;  // exact thin SVD instead of the randomized sketch
    std::uint64_t seed = 0;
    int oversample = 10;
    int power_iters = 2;
};

struct TruncatedSvd {
    Matrix U;
    Vector S;
    Matrix V;
};

/// Smallest m with 1 - sum_{i<=m} s_i^2 / total <= eps^2 (total defaults to sum s_i^2).
int energy_rank(const Vector& sv, double eps, double total_energy = -1.0);

/// Thin SVD of a dense matrix (QR then Jacobi on the small factor).
TruncatedSvd exact_svd(const Matrix& M);
/// Randomized range finder; rank by energy_rank against the exact Frobenius energy.
TruncatedSvd rsvd(const Matrix& M, double eps, const SvdOptions& opt);
/// Exact or randomized truncated SVD according to opt.deterministic.
TruncatedSvd truncated_svd(const Matrix& M, double eps, const SvdOptions& opt);

struct ReducedBasis {
    Matrix Phi;
    Vector singular_values;
    std::string norm = "euclidean";

    [[nodiscard]] int size() const { return static_cast<int>(Phi.cols()); }
};

/// X-orthonormal POD basis via the Cholesky factor of X.
ReducedBasis tpod(const Matrix& U, const SparseMatrix& X, double eps, const SvdOptions& opt);

struct ProjectionError {
    double error = 0.0;   // sum_k |u_k - Phi Phi^T X u_k|_X^2
    double energy = 0.0;  // sum_k |u_k|_X^2

    [[nodiscard]] bool within(double eps, double factor = 1.0) const { return error <= factor * eps * eps * energy; }
};
ProjectionError projection_error(const Matrix& U, const Matrix& Phi, const SparseMatrix& X);

/// Tensor train of the spatial axes. Core i is stored as (r_{i-1} n_i) x r_i with
/// row index a + r_{i-1} j; Phi caches the contraction (prod n_i) x r_d.
struct TTBasis {
    std::vector<int> dims;
    std::vector<int> ranks;  // r_1 .. r_d
    std::vector<Matrix> cores;
    Matrix Phi;
    int dropped = 0;
};

/// TT-SVD of snapshots whose rows follow the split axes `dims` (first axis fastest);
/// per-step tolerance eps / sqrt(d). The trailing parameter core is discarded.
TTBasis ttsvd(const Matrix& U, const std::vector<int>& dims, double eps, const SvdOptions& opt);
Matrix tt_contract(const TTBasis& tt);
/// Re-orthonormalize the contraction in the X inner product (Cholesky-QR, twice).
TTBasis tt_orthogonalize(TTBasis tt, const SparseMatrix& X);

struct HyperReduction {
    Matrix basis;              // N x m, l2-orthonormal
    std::vector<int> indices;  // greedy interpolation indices
    Matrix PtPhi;              // basis rows at indices
    Eigen::PartialPivLU<Matrix> lu;

    [[nodiscard]] int size() const { return static_cast<int>(indices.size()); }
    void factorize();
};

HyperReduction mdeim(const Matrix& S, double eps, const SvdOptions& opt);
HyperReduction make_hyper_reduction(Matrix basis, std::vector<int> indices);
Vector online_coefficients(const HyperReduction& hr, const Vector& sampled);

/// Cells whose condensed contribution reaches a sampled matrix position / vector dof.
std::vector<int> matrix_sample_cells(const SparsityPattern& pattern, const std::vector<int>& positions);
std::vector<int> vector_sample_cells(const FESpace& space, const std::vector<int>& dofs);

/// Placement of operator blocks in the reduced system, one field per unknown block.
struct BlockLayout {
    struct MatrixBlock {
        int row_field = 0;
        int col_field = 0;
        double sign = 1.0;
        double transpose_sign = 0.0;  // nonzero: also place sign * op^T at (col, row)
    };
    std::vector<MatrixBlock> matrices;
    std::vector<int> vector_fields;
};

/// Galerkin projections of every MDEIM component.
struct ReducedOperator {
    std::vector<std::vector<Matrix>> matrices;  // [op][component] n_row x n_col
    std::vector<Matrix> vectors;                // [op] n_field x m
};

Matrix project_matrix_component(const SparsityPattern& pattern, const Vector& values, const Matrix& Phi_rows,
                                const Matrix& Phi_cols);
ReducedOperator project(const BlockLayout& layout, const std::vector<Matrix>& bases,
                        const std::vector<const SparsityPattern*>& patterns,
                        const std::vector<const HyperReduction*>& matrix_hr,
                        const std::vector<const HyperReduction*>& vector_hr);

/// Dense reduced solve; returns the coefficient vector of every field stacked.
Vector solve_online(const BlockLayout& layout, const std::vector<int>& field_sizes, const ReducedOperator& ro,
                    const std::vector<Vector>& theta_matrices, const std::vector<Vector>& theta_vectors,
                    double* residual = nullptr);

/// Sampled entries of every hyper-reduced operator at a deformation coefficient vector.
class OnlineAssembler {
public:
    virtual ~OnlineAssembler() = default;
    virtual void sample(const std::array<double, 3>& coef, std::vector<Vector>& matrix_samples,
                        std::vector<Vector>& vector_samples) const = 0;
};

/// Assembles only the reduced integration cells. Holds copies of the cell
/// quadratures, expansions and local deformation modes of those cells, so the
/// full mesh, spaces and patterns may be destroyed after construction.
class ReducedIntegrationAssembler final : public OnlineAssembler {
public:
    struct MatrixInput {
        MatrixOperator op;
        std::vector<int> positions;
    };
    struct VectorInput {
        VectorOperator op;
        std::vector<int> dofs;
    };

    ReducedIntegrationAssembler(const CutMesh& mesh, const std::array<Matrix, 3>& modes, int pdef,
                                const std::vector<MatrixInput>& matrices, const std::vector<VectorInput>& vectors);

    void sample(const std::array<double, 3>& coef, std::vector<Vector>& matrix_samples,
                std::vector<Vector>& vector_samples) const override;

    [[nodiscard]] const std::vector<int>& cells() const { return cells_; }
    /// Largest length of any array held (for locality checks).
    [[nodiscard]] std::size_t footprint() const;

private:
    struct CellData {
        CellQuad quad;
        std::array<Matrix, 3> psi;
    };
    struct Contribution {
        int local;   // flat index into the condensed cell result
        int sample;  // sampled entry it accumulates into
    };
    struct CellTerm {
        int slot;  // into cell_data_
        CellExpansion rows;
        CellExpansion cols;
        std::vector<Contribution> targets;
    };
    struct MatrixTerm {
        MatrixKernel kernel;
        int comps_r = 1, comps_c = 1;
        int n_samples = 0;
        std::vector<CellTerm> cells;
    };
    struct VectorTerm {
        VectorKernel kernel;
        int comps = 1;
        int n_samples = 0;
        std::vector<CellTerm> cells;
    };

    std::vector<int> cells_;
    std::vector<CellData> cell_data_;
    std::vector<MatrixTerm> matrices_;
    std::vector<VectorTerm> vectors_;
};

}  // namespace romcut
