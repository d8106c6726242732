#include "romcut/space.hpp"

#include <algorithm>
#include <unordered_map>

namespace romcut {

double CutMesh::measure() const {
    double s = 0.0;
    for (const auto& q : quads) s += q.bulk.total_weight();
    return s;
}

CutMesh build_cut_mesh(const BackgroundGrid& grid, const LevelSet& geo, int p) {
    if (p < 1) throw ConfigError("FE order must be >= 1");
    CutMesh mesh;
    mesh.grid = grid;
    mesh.geo = geo;
    mesh.cls = classify_cells(grid, geo);
    mesh.order = p;
    mesh.slot_of_cell.assign(grid.n_cells(), -1);
    const int tri_order = 2 * p + 2;
    const int npts = p + 2;
    for (int c : mesh.cls.active_cells) {
        CellQuad q;
        q.cell = c;
        q.lo = grid.cell_lo(c);
        q.h = grid.spacing;
        q.cut = mesh.cls.labels[c] == CellLabel::Cut;
        if (q.cut) {
            CutQuadrature cq = build_cut_quadrature(grid, c, geo, tri_order);
            q.bulk = std::move(cq.bulk);
            q.bpoints = std::move(cq.surface.points);
            q.bweights = std::move(cq.surface.weights);
            q.bnormals = std::move(cq.normals);
            q.btags.assign(q.bpoints.size(), kInterface);
        } else {
            q.bulk = quadrature::tensor_rule(q.lo, q.h, npts);
        }
        const auto nb = grid.neighbors(c);
        static const Point face_normals[4] = {Point(-1, 0), Point(1, 0), Point(0, -1), Point(0, 1)};
        for (int f = 0; f < 4; ++f) {
            if (nb[f] >= 0) continue;
            std::optional<std::array<Point, 2>> seg;
            if (q.cut) {
                seg = clipped_face(grid, c, f, geo);
            } else {
                const Point hi = q.lo + q.h;
                switch (f) {
                    case kLeft: seg = std::array<Point, 2>{q.lo, Point(q.lo.x(), hi.y())}; break;
                    case kRight: seg = std::array<Point, 2>{Point(hi.x(), q.lo.y()), hi}; break;
                    case kBottom: seg = std::array<Point, 2>{q.lo, Point(hi.x(), q.lo.y())}; break;
                    default: seg = std::array<Point, 2>{Point(q.lo.x(), hi.y()), hi}; break;
                }
            }
            if (!seg) continue;
            const auto rule = quadrature::segment_rule((*seg)[0], (*seg)[1], npts);
            for (std::size_t k = 0; k < rule.size(); ++k) {
                q.bpoints.push_back(rule.points[k]);
                q.bweights.push_back(rule.weights[k]);
                q.bnormals.push_back(face_normals[f]);
                q.btags.push_back(f);
            }
        }
        mesh.slot_of_cell[c] = static_cast<int>(mesh.quads.size());
        mesh.quads.push_back(std::move(q));
    }
    return mesh;
}

namespace {

std::vector<char> mask_of_cells(const BackgroundGrid& grid, const std::vector<int>& cells, int p) {
    std::vector<char> mask(grid.n_nodes(p), 0);
    for (int c : cells)
        for (int n : grid.cell_nodes(c, p)) mask[n] = 1;
    return mask;
}

}  // namespace

void FESpace::finalize(const std::vector<int>& cells, const std::vector<char>& free_mask,
                       const std::vector<NodeConstraint>& constraints) {
    if (p_ < 1) throw ConfigError("FE order must be >= 1");
    if (comps_ < 1) throw ConfigError("component count must be >= 1");
    cells_ = cells;
    constraints_ = constraints;
    const int n_nodes = grid_.n_nodes(p_);
    free_index_.assign(n_nodes, -1);
    free_nodes_.clear();
    for (int n = 0; n < n_nodes; ++n)
        if (free_mask[n]) {
            free_index_[n] = static_cast<int>(free_nodes_.size());
            free_nodes_.push_back(n);
        }
    std::unordered_map<int, int> con_of;
    for (std::size_t i = 0; i < constraints_.size(); ++i) con_of[constraints_[i].node] = static_cast<int>(i);
    slot_.assign(grid_.n_cells(), -1);
    expansions_.clear();
    expansions_.reserve(cells_.size());
    const int nloc = n_local();
    for (int c : cells_) {
        const auto nodes = grid_.cell_nodes(c, p_);
        std::vector<std::pair<int, std::pair<int, double>>> entries;  // (free node, (local, weight))
        for (int a = 0; a < nloc; ++a) {
            const int n = nodes[a];
            if (free_index_[n] >= 0) {
                entries.push_back({free_index_[n], {a, 1.0}});
                continue;
            }
            auto it = con_of.find(n);
            if (it == con_of.end()) throw NumericalError("FE space: node is neither free nor constrained");
            const auto& con = constraints_[it->second];
            for (std::size_t m = 0; m < con.masters.size(); ++m) {
                const int f = free_index_[con.masters[m]];
                if (f < 0) throw NumericalError("FE space: constraint master is not free");
                entries.push_back({f, {a, con.weights[m]}});
            }
        }
        CellExpansion ex;
        for (const auto& e : entries) ex.nodes.push_back(e.first);
        std::sort(ex.nodes.begin(), ex.nodes.end());
        ex.nodes.erase(std::unique(ex.nodes.begin(), ex.nodes.end()), ex.nodes.end());
        ex.C = Matrix::Zero(nloc, static_cast<Eigen::Index>(ex.nodes.size()));
        for (const auto& e : entries) {
            const auto j = std::lower_bound(ex.nodes.begin(), ex.nodes.end(), e.first) - ex.nodes.begin();
            ex.C(e.second.first, j) += e.second.second;
        }
        slot_[c] = static_cast<int>(expansions_.size());
        expansions_.push_back(std::move(ex));
    }
}

FESpace FESpace::aggregated(const BackgroundGrid& grid, const CellClassification& cls, const AggregationMap& agg,
                            int p, int components) {
    if (agg.order != p) throw ConfigError("aggregation order does not match space order");
    FESpace s;
    s.grid_ = grid;
    s.flavor_ = SpaceFlavor::Aggregated;
    s.p_ = p;
    s.comps_ = components;
    const NodeSets ns = node_sets(grid, cls, p);
    s.finalize(cls.active_cells, ns.is_internal, agg.constraints);
    return s;
}

FESpace FESpace::background(const BackgroundGrid& grid, int p, int components) {
    FESpace s;
    s.grid_ = grid;
    s.flavor_ = SpaceFlavor::Background;
    s.p_ = p;
    s.comps_ = components;
    std::vector<int> cells(grid.n_cells());
    for (int c = 0; c < grid.n_cells(); ++c) cells[c] = c;
    s.finalize(cells, std::vector<char>(grid.n_nodes(p), 1), {});
    return s;
}

FESpace FESpace::internal(const BackgroundGrid& grid, const CellClassification& cls, int p, int components) {
    FESpace s;
    s.grid_ = grid;
    s.flavor_ = SpaceFlavor::Internal;
    s.p_ = p;
    s.comps_ = components;
    s.finalize(cls.internal_cells, mask_of_cells(grid, cls.internal_cells, p), {});
    return s;
}

FESpace FESpace::active(const BackgroundGrid& grid, const CellClassification& cls, int p, int components) {
    FESpace s;
    s.grid_ = grid;
    s.flavor_ = SpaceFlavor::Active;
    s.p_ = p;
    s.comps_ = components;
    s.finalize(cls.active_cells, mask_of_cells(grid, cls.active_cells, p), {});
    return s;
}

FESpace FESpace::external(const BackgroundGrid& grid, const CellClassification& cls, int p, int components) {
    FESpace s;
    s.grid_ = grid;
    s.flavor_ = SpaceFlavor::External;
    s.p_ = p;
    s.comps_ = components;
    s.finalize(cls.external_cells, mask_of_cells(grid, cls.external_cells, p), {});
    return s;
}

std::vector<int> FESpace::cell_dofs(int cell) const {
    const auto& ex = expansion(cell);
    std::vector<int> dofs;
    dofs.reserve(comps_ * ex.nodes.size());
    for (int c = 0; c < comps_; ++c)
        for (int n : ex.nodes) dofs.push_back(c * n_free_nodes() + n);
    return dofs;
}

Matrix FESpace::nodal_values(const Vector& u) const {
    if (u.size() != n_dofs()) throw ConfigError("nodal_values: vector size does not match the space");
    const int nf = n_free_nodes();
    Matrix out = Matrix::Zero(grid_.n_nodes(p_), comps_);
    for (int c = 0; c < comps_; ++c) {
        for (int i = 0; i < nf; ++i) out(free_nodes_[i], c) = u[c * nf + i];
        for (const auto& con : constraints_) {
            double v = 0.0;
            for (std::size_t m = 0; m < con.masters.size(); ++m)
                v += con.weights[m] * u[c * nf + free_index_[con.masters[m]]];
            out(con.node, c) = v;
        }
    }
    return out;
}

SparsityPattern SparsityPattern::build(const FESpace& row_space, const FESpace& col_space,
                                       const std::vector<int>& cells) {
    SparsityPattern sp;
    sp.rows = row_space.n_dofs();
    sp.cols = col_space.n_dofs();
    sp.cells = cells;
    std::vector<std::vector<int>> rows(sp.rows);
    std::vector<std::vector<int>> rdofs(cells.size()), cdofs(cells.size());
    for (std::size_t s = 0; s < cells.size(); ++s) {
        rdofs[s] = row_space.cell_dofs(cells[s]);
        cdofs[s] = col_space.cell_dofs(cells[s]);
        for (int r : rdofs[s]) rows[r].insert(rows[r].end(), cdofs[s].begin(), cdofs[s].end());
    }
    sp.row_ptr.assign(sp.rows + 1, 0);
    for (int r = 0; r < sp.rows; ++r) {
        auto& v = rows[r];
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        sp.row_ptr[r + 1] = sp.row_ptr[r] + static_cast<int>(v.size());
    }
    sp.col_idx.reserve(sp.row_ptr.back());
    for (auto& v : rows) sp.col_idx.insert(sp.col_idx.end(), v.begin(), v.end());
    sp.cell_positions.resize(cells.size());
    for (std::size_t s = 0; s < cells.size(); ++s) {
        auto& pos = sp.cell_positions[s];
        pos.reserve(rdofs[s].size() * cdofs[s].size());
        for (int r : rdofs[s])
            for (int c : cdofs[s]) pos.push_back(sp.position(r, c));
    }
    return sp;
}

int SparsityPattern::position(int row, int col) const {
    const auto b = col_idx.begin() + row_ptr[row];
    const auto e = col_idx.begin() + row_ptr[row + 1];
    const auto it = std::lower_bound(b, e, col);
    if (it == e || *it != col) return -1;
    return static_cast<int>(it - col_idx.begin());
}

int SparsityPattern::row_of(int position) const {
    const auto it = std::upper_bound(row_ptr.begin(), row_ptr.end(), position);
    return static_cast<int>(it - row_ptr.begin()) - 1;
}

Eigen::Map<const RowSparseMatrix> SparsityPattern::view(const Vector& values) const {
    if (values.size() != nnz()) throw ConfigError("pattern view: value count mismatch");
    return Eigen::Map<const RowSparseMatrix>(rows, cols, nnz(), row_ptr.data(), col_idx.data(), values.data());
}

SparseMatrix SparsityPattern::to_sparse(const Vector& values) const {
    return SparseMatrix(view(values));
}

Matrix condense(const CellExpansion& er, int comps_r, const Matrix& K, const CellExpansion& ec, int comps_c) {
    const Eigen::Index nr = er.C.rows(), nc = ec.C.rows();
    const Eigen::Index kr = er.C.cols(), kc = ec.C.cols();
    Matrix out(comps_r * kr, comps_c * kc);
    for (int a = 0; a < comps_r; ++a)
        for (int b = 0; b < comps_c; ++b)
            out.block(a * kr, b * kc, kr, kc).noalias() =
                er.C.transpose() * K.block(a * nr, b * nc, nr, nc) * ec.C;
    return out;
}

Vector condense(const CellExpansion& er, int comps_r, const Vector& F) {
    const Eigen::Index nr = er.C.rows(), kr = er.C.cols();
    Vector out(comps_r * kr);
    for (int a = 0; a < comps_r; ++a) out.segment(a * kr, kr).noalias() = er.C.transpose() * F.segment(a * nr, nr);
    return out;
}

}  // namespace romcut
