#include "romcut/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <spdlog/spdlog.h>

#include "romcut/lagrange.hpp"

namespace romcut {

BackgroundGrid BackgroundGrid::box(const Point& lo, const Point& hi, int nx, int ny) {
    if (nx < 1 || ny < 1) throw ConfigError("grid needs at least one cell per axis");
    if (!(hi.x() > lo.x() && hi.y() > lo.y())) throw ConfigError("grid box is empty");
    BackgroundGrid g;
    g.origin = lo;
    g.spacing = Point((hi.x() - lo.x()) / nx, (hi.y() - lo.y()) / ny);
    g.dims = {nx, ny};
    return g;
}

Point BackgroundGrid::cell_lo(int c) const {
    const auto [i, j] = cell_ij(c);
    return origin + Point(i * spacing.x(), j * spacing.y());
}

Point BackgroundGrid::node(int n, int p) const {
    const int nxn = nodes_per_axis(0, p);
    const int I = n % nxn;
    const int J = n / nxn;
    return origin + Point(I * spacing.x() / p, J * spacing.y() / p);
}

std::vector<int> BackgroundGrid::cell_nodes(int c, int p) const {
    const auto [i, j] = cell_ij(c);
    const int nxn = nodes_per_axis(0, p);
    std::vector<int> out;
    out.reserve((p + 1) * (p + 1));
    for (int b = 0; b <= p; ++b)
        for (int a = 0; a <= p; ++a) out.push_back((i * p + a) + nxn * (j * p + b));
    return out;
}

std::array<int, 4> BackgroundGrid::neighbors(int c) const {
    const auto [i, j] = cell_ij(c);
    return {i > 0 ? c - 1 : -1, i + 1 < dims[0] ? c + 1 : -1, j > 0 ? c - dims[0] : -1,
            j + 1 < dims[1] ? c + dims[0] : -1};
}

Point BackgroundGrid::to_reference(int c, const Point& x) const {
    const Point lo = cell_lo(c);
    return Point((x.x() - lo.x()) / spacing.x(), (x.y() - lo.y()) / spacing.y());
}

LevelSet LevelSet::box_minus_ball(const Point& center, double radius) {
    if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
    LevelSet ls;
    ls.fn_ = [center, radius](const Point& x) { return radius - (x - center).norm(); };
    ls.family_ = Family::BoxMinusBall;
    ls.center_ = center;
    ls.radius_ = radius;
    ls.name_ = "box-minus-ball";
    return ls;
}

LevelSet LevelSet::full_box() {
    LevelSet ls;
    ls.fn_ = [](const Point&) { return -1.0; };
    ls.family_ = Family::FullBox;
    ls.name_ = "full-box";
    return ls;
}

LevelSet LevelSet::custom(std::function<double(const Point&)> fn, std::string name) {
    LevelSet ls;
    ls.fn_ = std::move(fn);
    ls.family_ = Family::Custom;
    ls.name_ = std::move(name);
    return ls;
}

namespace {

std::array<Point, 4> cell_vertices(const BackgroundGrid& grid, int c) {
    const Point lo = grid.cell_lo(c);
    const Point& h = grid.spacing;
    return {lo, lo + Point(h.x(), 0.0), lo + h, lo + Point(0.0, h.y())};
}

}  // namespace

CellClassification classify_cells(const BackgroundGrid& grid, const LevelSet& geo) {
    CellClassification cls;
    cls.labels.resize(grid.n_cells());
    for (int c = 0; c < grid.n_cells(); ++c) {
        const auto v = cell_vertices(grid, c);
        int neg = 0, pos = 0;
        auto tally = [&](double phi) {
            if (phi < 0.0) ++neg;
            else if (phi > 0.0) ++pos;
        };
        for (const Point& x : v) tally(geo(x));
        tally(geo(grid.cell_center(c)));
        CellLabel label = CellLabel::Cut;
        if (neg == 5) label = CellLabel::Internal;
        else if (pos == 5) label = CellLabel::External;
        cls.labels[c] = label;
        switch (label) {
            case CellLabel::Internal:
                cls.internal_cells.push_back(c);
                cls.active_cells.push_back(c);
                break;
            case CellLabel::Cut:
                cls.cut_cells.push_back(c);
                cls.active_cells.push_back(c);
                break;
            case CellLabel::External:
                cls.external_cells.push_back(c);
                break;
        }
    }
    if (cls.internal_cells.empty()) throw ConfigError("geometry has no interior at this resolution");
    return cls;
}

NodeSets node_sets(const BackgroundGrid& grid, const CellClassification& cls, int p) {
    NodeSets ns;
    ns.order = p;
    const int n = grid.n_nodes(p);
    ns.is_active.assign(n, 0);
    ns.is_internal.assign(n, 0);
    for (int c : cls.active_cells) {
        const bool internal = cls.labels[c] == CellLabel::Internal;
        for (int node : grid.cell_nodes(c, p)) {
            ns.is_active[node] = 1;
            if (internal) ns.is_internal[node] = 1;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (ns.is_active[i]) ns.active_nodes.push_back(i);
        if (ns.is_internal[i]) ns.internal_nodes.push_back(i);
    }
    return ns;
}

namespace {

double triangle_area(const Point& a, const Point& b, const Point& c) {
    const Point e1 = b - a, e2 = c - a;
    return 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
}

// Clip triangle (p, phi) against {phi <= 0}; appends bulk and interface rules.
void clip_triangle(const std::array<Point, 3>& p, const std::array<double, 3>& phi, int order, CutQuadrature& q) {
    std::vector<Point> poly;
    std::vector<Point> crossings;
    for (int k = 0; k < 3; ++k) {
        const int l = (k + 1) % 3;
        const double fa = phi[k], fb = phi[l];
        if (fa <= 0.0) poly.push_back(p[k]);
        if (fa == 0.0) crossings.push_back(p[k]);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
            const double t = fa / (fa - fb);
            const Point x = p[k] + t * (p[l] - p[k]);
            poly.push_back(x);
            crossings.push_back(x);
        }
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        if (triangle_area(poly[0], poly[k], poly[k + 1]) <= 0.0) continue;
        q.bulk.append(quadrature::triangle_rule(poly[0], poly[k], poly[k + 1], order));
    }
    const bool has_neg = phi[0] < 0.0 || phi[1] < 0.0 || phi[2] < 0.0;
    if (!has_neg || crossings.size() != 2) return;
    if ((crossings[0] - crossings[1]).norm() <= 0.0) return;
    // gradient of the linear interpolant points from Omega outwards
    const Point e1 = p[1] - p[0], e2 = p[2] - p[0];
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    const double d1 = phi[1] - phi[0], d2 = phi[2] - phi[0];
    Point grad((d1 * e2.y() - d2 * e1.y()) / det, (d2 * e1.x() - d1 * e2.x()) / det);
    const double gn = grad.norm();
    if (gn <= 0.0) return;
    grad /= gn;
    const auto seg = quadrature::segment_rule(crossings[0], crossings[1], quadrature::points_for_order(order));
    q.surface.append(seg);
    for (std::size_t i = 0; i < seg.size(); ++i) q.normals.push_back(grad);
}

}  // namespace

CutQuadrature build_cut_quadrature(const BackgroundGrid& grid, int cell, const LevelSet& geo, int order) {
    if (order < 1) throw ConfigError("quadrature order must be >= 1");
    const auto v = cell_vertices(grid, cell);
    std::array<double, 4> phi{};
    for (int k = 0; k < 4; ++k) phi[k] = geo(v[k]);
    const Point center = grid.cell_center(cell);
    const double phic = geo(center);
    CutQuadrature q;
    const bool all_zero = phi[0] == 0.0 && phi[1] == 0.0 && phi[2] == 0.0 && phi[3] == 0.0;
    const bool all_neg = phi[0] < 0.0 && phi[1] < 0.0 && phi[2] < 0.0 && phi[3] < 0.0 && phic < 0.0;
    if (all_zero || all_neg) {
        if (all_zero) spdlog::warn("cell {}: level set vanishes at all vertices, treated as internal", cell);
        q.bulk = quadrature::tensor_rule(v[0], grid.spacing, quadrature::points_for_order(order));
        return q;
    }
    for (int k = 0; k < 4; ++k) {
        const int l = (k + 1) % 4;
        clip_triangle({v[k], v[l], center}, {phi[k], phi[l], phic}, order, q);
    }
    return q;
}

std::optional<std::array<Point, 2>> clipped_face(const BackgroundGrid& grid, int cell, int face, const LevelSet& geo) {
    const auto v = cell_vertices(grid, cell);
    static constexpr int ends[4][2] = {{0, 3}, {1, 2}, {0, 1}, {3, 2}};
    const Point a = v[ends[face][0]];
    const Point b = v[ends[face][1]];
    const double fa = geo(a), fb = geo(b);
    if (fa <= 0.0 && fb <= 0.0) return std::array<Point, 2>{a, b};
    if (fa > 0.0 && fb > 0.0) return std::nullopt;
    const double t = fa / (fa - fb);
    const Point x = a + t * (b - a);
    std::array<Point, 2> seg = fa <= 0.0 ? std::array<Point, 2>{a, x} : std::array<Point, 2>{x, b};
    if ((seg[1] - seg[0]).norm() <= 0.0) return std::nullopt;
    return seg;
}

AggregationMap aggregate(const CellClassification& cls, const BackgroundGrid& grid, int p) {
    if (cls.internal_cells.empty()) throw ConfigError("geometry has no interior at this resolution");
    AggregationMap agg;
    agg.order = p;
    agg.root_of.assign(grid.n_cells(), -1);

    std::vector<int> dist(grid.n_cells(), -1);
    for (int cut : cls.cut_cells) {
        std::fill(dist.begin(), dist.end(), -1);
        std::deque<int> frontier{cut};
        dist[cut] = 0;
        int best = -1;
        int best_layer = std::numeric_limits<int>::max();
        while (!frontier.empty()) {
            const int c = frontier.front();
            frontier.pop_front();
            if (dist[c] > best_layer) break;
            if (cls.labels[c] == CellLabel::Internal) {
                if (dist[c] < best_layer || c < best) best = c;
                best_layer = dist[c];
                continue;
            }
            for (int nb : grid.neighbors(c)) {
                if (nb < 0 || dist[nb] >= 0 || !cls.is_active(nb)) continue;
                dist[nb] = dist[c] + 1;
                frontier.push_back(nb);
            }
        }
        if (best < 0) throw NumericalError("isolated cut component");
        agg.root_of[cut] = best;
    }

    const NodeSets ns = node_sets(grid, cls, p);
    const int n = grid.n_nodes(p);
    std::vector<int> owner(n, -1);  // chosen cut cell per constrained node
    std::vector<double> owner_dist(n, std::numeric_limits<double>::infinity());
    for (int cut : cls.cut_cells) {
        const Point rc = grid.cell_center(agg.root_of[cut]);
        for (int node : grid.cell_nodes(cut, p)) {
            if (ns.is_internal[node]) continue;
            const double dd = (grid.node(node, p) - rc).norm();
            if (dd < owner_dist[node]) {
                owner_dist[node] = dd;
                owner[node] = cut;
            }
        }
    }
    lagrange::ShapeQp shape(p);
    for (int node : ns.active_nodes) {
        if (ns.is_internal[node]) continue;
        NodeConstraint con;
        con.node = node;
        con.root = agg.root_of[owner[node]];
        con.masters = grid.cell_nodes(con.root, p);
        const Point xi = grid.to_reference(con.root, grid.node(node, p));
        shape.evaluate(xi.x(), xi.y());
        con.weights.assign(shape.values.data(), shape.values.data() + shape.size());
        agg.constraints.push_back(std::move(con));
    }
    return agg;
}

}  // namespace romcut
