#pragma once

#include <array>
#include <vector>

#include "romcut/core.hpp"
#include "romcut/geometry.hpp"
#include "romcut/quadrature.hpp"

namespace romcut {

/// Boundary tags: box faces -x, +x, -y, +y and the embedded interface.
enum BoundaryTag : int { kLeft = 0, kRight = 1, kBottom = 2, kTop = 3, kInterface = 4 };
inline constexpr int kNumTags = 5;

/// Reference-configuration quadrature of one active cell.
struct CellQuad {
    int cell = -1;
    Point lo{0.0, 0.0};
    Point h{1.0, 1.0};
    bool cut = false;
    quadrature::Rule2D bulk;
    std::vector<Point> bpoints;
    std::vector<double> bweights;
    std::vector<Point> bnormals;  // unit, outward
    std::vector<int> btags;

    [[nodiscard]] Point to_reference(const Point& x) const {
        return Point((x.x() - lo.x()) / h.x(), (x.y() - lo.y()) / h.y());
    }
};

/// Reference cut mesh: grid, geometry, classification and per-cell quadrature.
struct CutMesh {
    BackgroundGrid grid;
    LevelSet geo;
    CellClassification cls;
    int order = 1;                  // FE order the rules are sized for
    std::vector<CellQuad> quads;    // one per active cell, ascending cell id
    std::vector<int> slot_of_cell;  // -1 for external cells

    [[nodiscard]] const CellQuad& quad(int cell) const { return quads[slot_of_cell[cell]]; }
    [[nodiscard]] double measure() const;
};

CutMesh build_cut_mesh(const BackgroundGrid& grid, const LevelSet& geo, int p);

enum class SpaceFlavor { Internal, Active, Aggregated, Background, External };

/// Per-cell map from local (uncondensed) shape functions to free nodes.
struct CellExpansion {
    std::vector<int> nodes;  // free-node ids, ascending
    Matrix C;                // n_local x nodes.size()
};

/// Lagrangian Q_p space (scalar or vector) over a subset of background cells.
/// Vector dof layout: dof = comp * n_free_nodes + free_node.
class FESpace {
public:
    static FESpace aggregated(const BackgroundGrid& grid, const CellClassification& cls, const AggregationMap& agg,
                              int p, int components);
    static FESpace background(const BackgroundGrid& grid, int p, int components);
    static FESpace internal(const BackgroundGrid& grid, const CellClassification& cls, int p, int components);
    static FESpace active(const BackgroundGrid& grid, const CellClassification& cls, int p, int components);
    static FESpace external(const BackgroundGrid& grid, const CellClassification& cls, int p, int components);

    [[nodiscard]] SpaceFlavor flavor() const { return flavor_; }
    [[nodiscard]] int order() const { return p_; }
    [[nodiscard]] int components() const { return comps_; }
    [[nodiscard]] int n_free_nodes() const { return static_cast<int>(free_nodes_.size()); }
    [[nodiscard]] int n_dofs() const { return comps_ * n_free_nodes(); }
    [[nodiscard]] int n_local() const { return (p_ + 1) * (p_ + 1); }
    [[nodiscard]] const std::vector<int>& cells() const { return cells_; }
    [[nodiscard]] const std::vector<int>& free_nodes() const { return free_nodes_; }
    [[nodiscard]] int free_index(int node) const { return free_index_[node]; }
    [[nodiscard]] bool has_cell(int cell) const { return slot_[cell] >= 0; }
    [[nodiscard]] const CellExpansion& expansion(int cell) const { return expansions_[slot_[cell]]; }
    [[nodiscard]] const std::vector<NodeConstraint>& constraints() const { return constraints_; }
    [[nodiscard]] const BackgroundGrid& grid() const { return grid_; }
    /// Expanded global dofs of a cell, layout comp * k + j.
    [[nodiscard]] std::vector<int> cell_dofs(int cell) const;

    /// Nodal values on the background numbering (rows: nodes, cols: components);
    /// constrained nodes get extrapolated values, nodes outside the space get 0.
    [[nodiscard]] Matrix nodal_values(const Vector& u) const;

private:
    void finalize(const std::vector<int>& cells, const std::vector<char>& free_mask,
                  const std::vector<NodeConstraint>& constraints);

    BackgroundGrid grid_;
    SpaceFlavor flavor_ = SpaceFlavor::Aggregated;
    int p_ = 1;
    int comps_ = 1;
    std::vector<int> cells_;
    std::vector<int> slot_;
    std::vector<CellExpansion> expansions_;
    std::vector<int> free_nodes_;
    std::vector<int> free_index_;
    std::vector<NodeConstraint> constraints_;
};

/// CSR pattern of a (rows x cols) operator fixed by space connectivity.
/// cell_positions[s][i * n_cols_local + j] is the CSR slot of the condensed
/// local entry (i, j) of cells[s].
struct SparsityPattern {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;
    std::vector<int> col_idx;
    std::vector<int> cells;
    std::vector<std::vector<int>> cell_positions;

    static SparsityPattern build(const FESpace& row_space, const FESpace& col_space, const std::vector<int>& cells);

    [[nodiscard]] int nnz() const { return static_cast<int>(col_idx.size()); }
    [[nodiscard]] int position(int row, int col) const;
    [[nodiscard]] int row_of(int position) const;
    [[nodiscard]] Eigen::Map<const RowSparseMatrix> view(const Vector& values) const;
    [[nodiscard]] SparseMatrix to_sparse(const Vector& values) const;
};

/// Condensed local operator Cr^T K Cc for (possibly vector) spaces.
Matrix condense(const CellExpansion& er, int comps_r, const Matrix& K, const CellExpansion& ec, int comps_c);
Vector condense(const CellExpansion& er, int comps_r, const Vector& F);

}  // namespace romcut
