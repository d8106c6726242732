#include "romcut/deformation.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace romcut {

std::pair<double, double> lame_coefficients(double E, double nu) {
    if (!(E > 0.0)) throw ConfigError("Young modulus must be positive");
    if (nu == 0.5) throw ConfigError("incompressible limit");
    if (!(nu > -1.0 && nu < 0.5)) throw ConfigError("Poisson ratio must lie in (-1, 0.5)");
    const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = E / (2.0 * (1.0 + nu));
    return {lambda, mu};
}

double ElasticMaterial::lame_lambda() const { return lame_coefficients(young_modulus, poisson_ratio).first; }
double ElasticMaterial::lame_mu() const { return lame_coefficients(young_modulus, poisson_ratio).second; }

BoundaryDisplacement hole_displacement(const Point& c, double R, const Point& c_ref, double R_ref) {
    if (!(R_ref > 0.0)) throw ConfigError("reference radius must be positive");
    const double s = R / R_ref;
    return {[=](const Point& x) -> Point { return (c - c_ref) + (s - 1.0) * (x - c_ref); }};
}

BoundaryDisplacement hole_boundary_displacement(const ParameterPoint& mu, const ParameterPoint& mu_ref) {
    if (mu.size() != 2 || mu_ref.size() != 2) throw ConfigError("hole family needs two parameters");
    if (!(mu_ref[1] > 0.0)) throw ConfigError("reference radius must be positive");
    return hole_displacement(Point(mu[0], mu[0]), mu[1], Point(mu_ref[0], mu_ref[0]), mu_ref[1]);
}

MappedPoint map_point(const Matrix& psi_local, const lagrange::ShapeQp& shape, const Point& xt, const Point& h) {
    MappedPoint m;
    Mat2 grad = Mat2::Zero();
    Point disp = Point::Zero();
    for (int a = 0; a < shape.size(); ++a) {
        const Point g(shape.grads(0, a) / h.x(), shape.grads(1, a) / h.y());
        const Point v = psi_local.col(a);
        disp += shape.values[a] * v;
        grad += v * g.transpose();
    }
    m.x = xt + disp;
    m.J = Mat2::Identity() + grad;
    m.detJ = m.J.determinant();
    m.JinvT = m.J.inverse().transpose();
    return m;
}

DeformationField::DeformationField(const BackgroundGrid& grid, int p, Matrix nodal)
    : grid_(grid), p_(p), nodal_(std::move(nodal)) {
    if (nodal_.rows() != grid_.n_nodes(p_) || nodal_.cols() != 2)
        throw ConfigError("deformation field: nodal array has wrong shape");
}

DeformationField DeformationField::zero(const BackgroundGrid& grid, int p) {
    return DeformationField(grid, p, Matrix::Zero(grid.n_nodes(p), 2));
}

Matrix DeformationField::local(int cell) const {
    const auto nodes = grid_.cell_nodes(cell, p_);
    Matrix out(2, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t a = 0; a < nodes.size(); ++a) out.col(a) = nodal_.row(nodes[a]).transpose();
    return out;
}

MappedPoint DeformationField::at(int cell, const Point& xt) const {
    lagrange::ShapeQp shape(p_);
    const Point xi = grid_.to_reference(cell, xt);
    shape.evaluate(xi.x(), xi.y());
    return map_point(local(cell), shape, xt, grid_.spacing);
}

Point DeformationField::displacement(int cell, const Point& xt) const { return at(cell, xt).x - xt; }

Pullback pullback(const DeformationField& def, int cell, const Point& xt, const Point& ref_gradient,
                  const Point& ref_normal) {
    const MappedPoint m = def.at(cell, xt);
    if (!(m.detJ > 0.0)) throw NumericalError("deformation not bijective");
    Pullback pb;
    pb.gradient = m.JinvT * ref_gradient;
    pb.volume_scale = m.detJ;
    const Point jn = m.JinvT * ref_normal;
    const double nn = jn.norm();
    pb.normal = jn / nn;
    pb.surface_scale = nn * m.detJ;
    return pb;
}

std::vector<std::pair<int, Point>> quadrature_samples(const CutMesh& mesh) {
    std::vector<std::pair<int, Point>> out;
    for (const auto& q : mesh.quads) {
        for (const auto& x : q.bulk.points) out.emplace_back(q.cell, x);
        for (const auto& x : q.bpoints) out.emplace_back(q.cell, x);
    }
    return out;
}

JacobianBounds jacobian_bounds(const DeformationField& def, const std::vector<std::pair<int, Point>>& samples) {
    JacobianBounds b{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& [cell, x] : samples) {
        const MappedPoint m = def.at(cell, x);
        Eigen::JacobiSVD<Mat2> svd(m.J);
        const auto& s = svd.singularValues();
        b.C1 = std::min(b.C1, s(1));
        b.Cd = std::max(b.Cd, s(0));
    }
    if (samples.empty()) b = JacobianBounds{};
    return b;
}

void check_bijective(const DeformationField& def, const CutMesh& mesh) {
    for (const auto& [cell, x] : quadrature_samples(mesh)) {
        const double d = def.at(cell, x).detJ;
        if (!(d > 0.0))
            throw NumericalError(fmt::format("deformation not bijective (det J = {:.3e} in cell {})", d, cell));
    }
}

struct ElasticDeformationSolver::Impl {
    BackgroundGrid grid;
    CellClassification cls;
    CutMesh mesh;
    int p = 1;
    FESpace space;                // internal cells, 2 components
    SparseMatrix K;               // on all internal-space dofs
    std::vector<char> dirichlet;  // per internal-space free node
    std::vector<char> hole_node;  // per background node: node of a cut cell
    std::vector<char> box_node;   // per background node: on the box boundary
    std::vector<int> unknown_of;  // per free dof -> unknown index, -1 if Dirichlet
    std::vector<int> unknowns;
    SparseMatrix Kii, Kid;
    Eigen::SimplicialLDLT<SparseMatrix> solver;
};

namespace {

Matrix elastic_cell_matrix(const CellQuad& q, int p, double lambda, double mu) {
    lagrange::ShapeQp shape(p);
    const int n = shape.size();
    Matrix K = Matrix::Zero(2 * n, 2 * n);
    Matrix B(3, 2 * n);
    Eigen::Matrix3d D;
    D << lambda + 2 * mu, lambda, 0, lambda, lambda + 2 * mu, 0, 0, 0, mu;
    for (std::size_t k = 0; k < q.bulk.size(); ++k) {
        const Point xi = q.to_reference(q.bulk.points[k]);
        shape.evaluate(xi.x(), xi.y());
        B.setZero();
        for (int a = 0; a < n; ++a) {
            const double gx = shape.grads(0, a) / q.h.x();
            const double gy = shape.grads(1, a) / q.h.y();
            B(0, a) = gx;
            B(1, n + a) = gy;
            B(2, a) = gy;
            B(2, n + a) = gx;
        }
        K.noalias() += q.bulk.weights[k] * B.transpose() * D * B;
    }
    return K;
}

}  // namespace

ElasticDeformationSolver::ElasticDeformationSolver(const CutMesh& mesh, int p, const ElasticMaterial& mat)
    : impl_(std::make_unique<Impl>()) {
    auto& I = *impl_;
    const auto [lambda, mu] = lame_coefficients(mat.young_modulus, mat.poisson_ratio);
    I.grid = mesh.grid;
    I.cls = mesh.cls;
    I.mesh = mesh;
    I.p = p;
    I.space = FESpace::internal(I.grid, I.cls, p, 2);
    const int n_nodes = I.grid.n_nodes(p);
    I.hole_node.assign(n_nodes, 0);
    I.box_node.assign(n_nodes, 0);
    for (int c : I.cls.cut_cells)
        for (int node : I.grid.cell_nodes(c, p)) I.hole_node[node] = 1;
    const int nxn = I.grid.nodes_per_axis(0, p), nyn = I.grid.nodes_per_axis(1, p);
    for (int node = 0; node < n_nodes; ++node) {
        const int ix = node % nxn, iy = node / nxn;
        if (ix == 0 || iy == 0 || ix == nxn - 1 || iy == nyn - 1) I.box_node[node] = 1;
        if (I.box_node[node] && I.hole_node[node])
            throw ConfigError("hole must stay strictly inside the box (cut cell touches the box boundary)");
    }

    const int nf = I.space.n_free_nodes();
    const int ndof = I.space.n_dofs();
    std::vector<Eigen::Triplet<double>> trip;
    for (int c : I.cls.internal_cells) {
        const CellQuad& q = mesh.quad(c);
        double scale = 1.0;
        if (mat.stiffening != 0.0) {
            const double h = I.grid.h();
            scale = std::pow(h / std::max(std::abs(mesh.geo(I.grid.cell_center(c))), 0.5 * h), mat.stiffening);
        }
        const Matrix Ke = scale * elastic_cell_matrix(q, p, lambda, mu);
        const auto& ex = I.space.expansion(c);
        const Matrix Kc = condense(ex, 2, Ke, ex, 2);
        const auto dofs = I.space.cell_dofs(c);
        for (std::size_t i = 0; i < dofs.size(); ++i)
            for (std::size_t j = 0; j < dofs.size(); ++j) trip.emplace_back(dofs[i], dofs[j], Kc(i, j));
    }
    I.K.resize(ndof, ndof);
    I.K.setFromTriplets(trip.begin(), trip.end());

    I.unknown_of.assign(ndof, -1);
    for (int comp = 0; comp < 2; ++comp)
        for (int i = 0; i < nf; ++i) {
            const int node = I.space.free_nodes()[i];
            if (I.hole_node[node] || I.box_node[node]) continue;
            const int dof = comp * nf + i;
            I.unknown_of[dof] = static_cast<int>(I.unknowns.size());
            I.unknowns.push_back(dof);
        }
    std::vector<int> dir_index(ndof, -1);
    int nd = 0;
    for (int dof = 0; dof < ndof; ++dof)
        if (I.unknown_of[dof] < 0) dir_index[dof] = nd++;
    std::vector<Eigen::Triplet<double>> tii, tid;
    for (int col = 0; col < I.K.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(I.K, col); it; ++it) {
            const int r = I.unknown_of[it.row()];
            if (r < 0) continue;
            const int cu = I.unknown_of[col];
            if (cu >= 0) tii.emplace_back(r, cu, it.value());
            else tid.emplace_back(r, dir_index[col], it.value());
        }
    const int nu = static_cast<int>(I.unknowns.size());
    I.Kii.resize(nu, nu);
    I.Kii.setFromTriplets(tii.begin(), tii.end());
    I.Kid.resize(nu, nd);
    I.Kid.setFromTriplets(tid.begin(), tid.end());
    if (nu > 0) {
        I.solver.compute(I.Kii);
        if (I.solver.info() != Eigen::Success) throw NumericalError("elasticity stiffness is singular");
    }
}

ElasticDeformationSolver::~ElasticDeformationSolver() = default;
ElasticDeformationSolver::ElasticDeformationSolver(ElasticDeformationSolver&&) noexcept = default;
ElasticDeformationSolver& ElasticDeformationSolver::operator=(ElasticDeformationSolver&&) noexcept = default;

int ElasticDeformationSolver::order() const { return impl_->p; }

DeformationField ElasticDeformationSolver::solve(const BoundaryDisplacement& hole,
                                                 const std::function<Point(const Point&)>& outer) const {
    const auto& I = *impl_;
    const int n_nodes = I.grid.n_nodes(I.p);
    Matrix nodal = Matrix::Zero(n_nodes, 2);
    for (int node = 0; node < n_nodes; ++node) {
        const Point x = I.grid.node(node, I.p);
        if (I.hole_node[node]) nodal.row(node) = hole.evaluate(x).transpose();
        else if (I.box_node[node] && outer) nodal.row(node) = outer(x).transpose();
    }
    const int nf = I.space.n_free_nodes();
    const int ndof = I.space.n_dofs();
    Vector ud(I.Kid.cols());
    int nd = 0;
    for (int dof = 0; dof < ndof; ++dof)
        if (I.unknown_of[dof] < 0) ud[nd++] = nodal(I.space.free_nodes()[dof % nf], dof / nf);
    if (!I.unknowns.empty()) {
        const Vector rhs = -(I.Kid * ud);
        const Vector ui = I.solver.solve(rhs);
        if (I.solver.info() != Eigen::Success) throw NumericalError("elasticity solve failed");
        for (std::size_t k = 0; k < I.unknowns.size(); ++k) {
            const int dof = I.unknowns[k];
            nodal(I.space.free_nodes()[dof % nf], dof / nf) = ui[static_cast<Eigen::Index>(k)];
        }
    }
    return DeformationField(I.grid, I.p, std::move(nodal));
}

double ElasticDeformationSolver::interior_residual(const DeformationField& def) const {
    const auto& I = *impl_;
    const int nf = I.space.n_free_nodes();
    Vector u(I.space.n_dofs());
    for (int dof = 0; dof < u.size(); ++dof) u[dof] = def.nodal()(I.space.free_nodes()[dof % nf], dof / nf);
    const Vector r = I.K * u;
    double m = 0.0;
    for (int dof : I.unknowns) m = std::max(m, std::abs(r[dof]));
    return m;
}

DeformationField solve_elastic_deformation(const CutMesh& mesh, const BoundaryDisplacement& bc,
                                           const ElasticMaterial& mat, int p) {
    ElasticDeformationSolver solver(mesh, p, mat);
    DeformationField def = solver.solve(bc);
    check_bijective(def, mesh);
    return def;
}

AffineHoleDeformation::AffineHoleDeformation(const ElasticDeformationSolver& solver, const BackgroundGrid& grid,
                                             const Point& c_ref, double R_ref)
    : grid_(grid), p_(solver.order()), c_ref_(c_ref), R_ref_(R_ref) {
    if (!(R_ref > 0.0)) throw ConfigError("reference radius must be positive");
    modes_[0] = solver.solve({[](const Point&) { return Point(1.0, 0.0); }}).nodal();
    modes_[1] = solver.solve({[](const Point&) { return Point(0.0, 1.0); }}).nodal();
    modes_[2] = solver.solve({[c_ref](const Point& x) -> Point { return x - c_ref; }}).nodal();
}

std::array<double, 3> AffineHoleDeformation::coefficients(const Point& c, double R) const {
    return {c.x() - c_ref_.x(), c.y() - c_ref_.y(), R / R_ref_ - 1.0};
}

DeformationField AffineHoleDeformation::field(const std::array<double, 3>& coef) const {
    Matrix nodal = coef[0] * modes_[0] + coef[1] * modes_[1] + coef[2] * modes_[2];
    return DeformationField(grid_, p_, std::move(nodal));
}

}  // namespace romcut
