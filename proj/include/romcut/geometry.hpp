#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "romcut/core.hpp"
#include "romcut/quadrature.hpp"

namespace romcut {

/// Cartesian background grid. Cells are numbered x-fastest, nodes of an
/// order-p Lagrange space as well: node (I, J) -> I + (dims[0] p + 1) J.
struct BackgroundGrid {
    Point origin{0.0, 0.0};
    Point spacing{1.0, 1.0};
    std::array<int, 2> dims{1, 1};

    static BackgroundGrid box(const Point& lo, const Point& hi, int nx, int ny);

    [[nodiscard]] int d() const { return kDim; }
    [[nodiscard]] int n_cells() const { return dims[0] * dims[1]; }
    [[nodiscard]] int cell_index(int i, int j) const { return i + dims[0] * j; }
    [[nodiscard]] std::array<int, 2> cell_ij(int c) const { return {c % dims[0], c / dims[0]}; }
    [[nodiscard]] Point cell_lo(int c) const;
    [[nodiscard]] Point cell_center(int c) const { return cell_lo(c) + 0.5 * spacing; }
    [[nodiscard]] Point upper() const { return origin + Point(dims[0] * spacing.x(), dims[1] * spacing.y()); }
    [[nodiscard]] double h() const { return std::max(spacing.x(), spacing.y()); }

    [[nodiscard]] int nodes_per_axis(int axis, int p) const { return dims[axis] * p + 1; }
    [[nodiscard]] int n_nodes(int p) const { return nodes_per_axis(0, p) * nodes_per_axis(1, p); }
    [[nodiscard]] Point node(int n, int p) const;
    /// Background node indices of cell c, local order a + (p+1) b.
    [[nodiscard]] std::vector<int> cell_nodes(int c, int p) const;
    /// Facet neighbours (-1 where the facet lies on the box boundary), order: -x, +x, -y, +y.
    [[nodiscard]] std::array<int, 4> neighbors(int c) const;
    /// Reference coordinates of a point with respect to cell c (unit square map).
    [[nodiscard]] Point to_reference(int c, const Point& x) const;
};

/// Analytic level set, negative inside the physical domain.
class LevelSet {
public:
    enum class Family { BoxMinusBall, FullBox, Custom };

    static LevelSet box_minus_ball(const Point& center, double radius);
    static LevelSet full_box();
    static LevelSet custom(std::function<double(const Point&)> fn, std::string name = "custom");

    double operator()(const Point& x) const { return fn_(x); }
    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] const Point& center() const { return center_; }
    [[nodiscard]] double radius() const { return radius_; }
    [[nodiscard]] const std::string& name() const { return name_; }

private:
    std::function<double(const Point&)> fn_;
    Family family_ = Family::Custom;
    Point center_{0.0, 0.0};
    double radius_ = 0.0;
    std::string name_;
};

enum class CellLabel : unsigned char { Internal, Cut, External };

struct CellClassification {
    std::vector<CellLabel> labels;
    std::vector<int> active_cells;    // internal + cut, ascending
    std::vector<int> internal_cells;
    std::vector<int> cut_cells;
    std::vector<int> external_cells;

    [[nodiscard]] bool is_active(int c) const { return labels[c] != CellLabel::External; }
};

/// Node sets of an order-p Lagrange space induced by a classification.
struct NodeSets {
    int order = 1;
    std::vector<int> active_nodes;    // ascending background node ids
    std::vector<int> internal_nodes;  // ascending
    std::vector<char> is_active;      // per background node
    std::vector<char> is_internal;
};

CellClassification classify_cells(const BackgroundGrid& grid, const LevelSet& geo);
NodeSets node_sets(const BackgroundGrid& grid, const CellClassification& cls, int p);

/// Quadrature for one cell: bulk rule in area units, interface rule in
/// length units with unit outward normals.
struct CutQuadrature {
    quadrature::Rule2D bulk;
    quadrature::Rule2D surface;
    std::vector<Point> normals;
};

CutQuadrature build_cut_quadrature(const BackgroundGrid& grid, int cell, const LevelSet& geo, int order);

/// Part of a cell face where the level set (linearly interpolated between the
/// face vertices) is <= 0. Faces ordered -x, +x, -y, +y.
std::optional<std::array<Point, 2>> clipped_face(const BackgroundGrid& grid, int cell, int face, const LevelSet& geo);

struct NodeConstraint {
    int node = -1;                 // constrained background node
    int root = -1;                 // root (internal) cell
    std::vector<int> masters;      // background nodes of the root cell
    std::vector<double> weights;   // root-cell shape functions evaluated at the node
};

struct AggregationMap {
    int order = 1;
    std::vector<int> root_of;      // per cell, -1 unless cut
    std::vector<NodeConstraint> constraints;  // ascending by node

    [[nodiscard]] bool empty() const { return constraints.empty(); }
};

AggregationMap aggregate(const CellClassification& cls, const BackgroundGrid& grid, int p);

}  // namespace romcut
