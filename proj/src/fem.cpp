#include "romcut/fem.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace romcut {

Vector assemble_values(const CutMesh& mesh, const MatrixOperator& op, const DeformationField& def) {
    const SparsityPattern& sp = *op.pattern;
    Vector values = Vector::Zero(sp.nnz());
    for (std::size_t s = 0; s < sp.cells.size(); ++s) {
        const int c = sp.cells[s];
        if (mesh.slot_of_cell[c] < 0) throw NumericalError(fmt::format("missing quadrature for cell {}", c));
        const Matrix Ke = op.kernel(mesh.quad(c), def.local(c));
        const Matrix Kc = condense(op.rows->expansion(c), op.rows->components(), Ke, op.cols->expansion(c),
                                   op.cols->components());
        const auto& pos = sp.cell_positions[s];
        const Eigen::Index nc = Kc.cols();
        for (Eigen::Index i = 0; i < Kc.rows(); ++i)
            for (Eigen::Index j = 0; j < nc; ++j) values[pos[i * nc + j]] += Kc(i, j);
    }
    return values;
}

Vector assemble_vector(const CutMesh& mesh, const VectorOperator& op, const DeformationField& def) {
    const FESpace& sp = *op.rows;
    Vector out = Vector::Zero(sp.n_dofs());
    for (int c : sp.cells()) {
        if (mesh.slot_of_cell[c] < 0) throw NumericalError(fmt::format("missing quadrature for cell {}", c));
        const Vector Fe = op.kernel(mesh.quad(c), def.local(c));
        const Vector Fc = condense(sp.expansion(c), sp.components(), Fe);
        const auto dofs = sp.cell_dofs(c);
        for (std::size_t i = 0; i < dofs.size(); ++i) out[dofs[i]] += Fc[static_cast<Eigen::Index>(i)];
    }
    return out;
}

void PointEvaluator::eval(const CellQuad& q, const Point& xt, const Matrix& psi_local, QPoint& out) {
    const Point xi = q.to_reference(xt);
    sdef_.evaluate(xi.x(), xi.y());
    out.m = map_point(psi_local, sdef_, xt, q.h);
    if (!same_) shape_.evaluate(xi.x(), xi.y());
    const lagrange::ShapeQp& s = same_ ? sdef_ : shape_;
    const int n = s.size();
    out.N = s.values;
    out.G.resize(2, n);
    for (int a = 0; a < n; ++a) {
        const Point g(s.grads(0, a) / q.h.x(), s.grads(1, a) / q.h.y());
        out.G.col(a) = out.m.JinvT * g;
    }
}

void PointEvaluator::eval_extra(const CellQuad& q, const Point& xt, const MappedPoint& m, lagrange::ShapeQp& shape,
                                Vector& N, Eigen::Matrix<double, 2, Eigen::Dynamic>& G) const {
    const Point xi = q.to_reference(xt);
    shape.evaluate(xi.x(), xi.y());
    const int n = shape.size();
    N = shape.values;
    G.resize(2, n);
    for (int a = 0; a < n; ++a) {
        const Point g(shape.grads(0, a) / q.h.x(), shape.grads(1, a) / q.h.y());
        G.col(a) = m.JinvT * g;
    }
}

double nitsche_tau(double eta, const BackgroundGrid& grid) {
    if (!(eta > 0.0)) throw ConfigError("Nitsche parameter eta must be positive");
    return eta / grid.h();
}

MatrixKernel laplace_kernel(int p, int pdef, int comps, double tau, std::array<bool, kNumTags> dirichlet,
                            bool consistency) {
    return [=](const CellQuad& q, const Matrix& psi) -> Matrix {
        PointEvaluator ev(p, pdef);
        QPoint qp;
        const int n = lagrange::n_local(p);
        Matrix S = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < q.bulk.size(); ++k) {
            ev.eval(q, q.bulk.points[k], psi, qp);
            S.noalias() += (q.bulk.weights[k] * qp.m.detJ) * qp.G.transpose() * qp.G;
        }
        for (std::size_t k = 0; k < q.bpoints.size(); ++k) {
            if (!dirichlet[q.btags[k]]) continue;
            ev.eval(q, q.bpoints[k], psi, qp);
            const Point jn = qp.m.JinvT * q.bnormals[k];
            const double nn = jn.norm();
            const Point nrm = jn / nn;
            const double ws = q.bweights[k] * nn * qp.m.detJ;
            S.noalias() += (ws * tau) * qp.N * qp.N.transpose();
            if (consistency) {
                const Vector dn = qp.G.transpose() * nrm;
                S.noalias() -= ws * (qp.N * dn.transpose() + dn * qp.N.transpose());
            }
        }
        if (comps == 1) return S;
        Matrix K = Matrix::Zero(comps * n, comps * n);
        for (int c = 0; c < comps; ++c) K.block(c * n, c * n, n, n) = S;
        return K;
    };
}

VectorKernel poisson_rhs_kernel(int p, int pdef, double tau, const PoissonData& data) {
    return [=](const CellQuad& q, const Matrix& psi) -> Vector {
        PointEvaluator ev(p, pdef);
        QPoint qp;
        Vector F = Vector::Zero(lagrange::n_local(p));
        for (std::size_t k = 0; k < q.bulk.size(); ++k) {
            ev.eval(q, q.bulk.points[k], psi, qp);
            F.noalias() += (q.bulk.weights[k] * qp.m.detJ * data.f(qp.m.x)) * qp.N;
        }
        for (std::size_t k = 0; k < q.bpoints.size(); ++k) {
            ev.eval(q, q.bpoints[k], psi, qp);
            const Point jn = qp.m.JinvT * q.bnormals[k];
            const double nn = jn.norm();
            const Point nrm = jn / nn;
            const double ws = q.bweights[k] * nn * qp.m.detJ;
            if (data.dirichlet[q.btags[k]]) {
                const double ud = data.u_D(qp.m.x);
                if (ud == 0.0) continue;
                const Vector dn = qp.G.transpose() * nrm;
                F.noalias() += (ws * tau * ud) * qp.N - (ws * ud) * dn;
            } else {
                const double un = data.u_N(qp.m.x, nrm);
                if (un == 0.0) continue;
                F.noalias() += (ws * un) * qp.N;
            }
        }
        return F;
    };
}

MatrixKernel mass_kernel(int p, int pdef) {
    return [=](const CellQuad& q, const Matrix& psi) -> Matrix {
        PointEvaluator ev(p, pdef);
        QPoint qp;
        const int n = lagrange::n_local(p);
        Matrix M = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < q.bulk.size(); ++k) {
            ev.eval(q, q.bulk.points[k], psi, qp);
            M.noalias() += (q.bulk.weights[k] * qp.m.detJ) * qp.N * qp.N.transpose();
        }
        return M;
    };
}

AssembledSystem assemble_poisson(const CutMesh& mesh, const FESpace& space,
                                 const std::shared_ptr<const SparsityPattern>& pattern, const DeformationField& def,
                                 const PoissonData& data, double eta) {
    const double tau = nitsche_tau(eta, mesh.grid);
    const int p = space.order();
    MatrixOperator A{&space, &space, pattern, laplace_kernel(p, def.order(), 1, tau, data.dirichlet, true)};
    VectorOperator l{&space, poisson_rhs_kernel(p, def.order(), tau, data)};
    AssembledSystem sys;
    sys.pattern = pattern;
    sys.values = assemble_values(mesh, A, def);
    sys.rhs = assemble_vector(mesh, l, def);
    return sys;
}

void require_spd(const SparseMatrix& M, const char* what) {
    Eigen::SimplicialLLT<SparseMatrix> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError(fmt::format("{} is not positive definite", what));
}

NormMatrix assemble_norm(const CutMesh& mesh, const FESpace& space, const DeformationField& def, NormKind kind,
                         std::array<bool, kNumTags> dirichlet, double tau) {
    auto pattern = std::make_shared<SparsityPattern>(SparsityPattern::build(space, space, space.cells()));
    MatrixOperator op{&space, &space, pattern, {}};
    const int p = space.order();
    switch (kind) {
        case NormKind::XRef:
        case NormKind::XMu:
            op.kernel = laplace_kernel(p, def.order(), space.components(), tau, dirichlet, false);
            break;
        case NormKind::Y:
            if (space.components() != 1) throw ConfigError("Y norm is defined for scalar spaces");
            op.kernel = mass_kernel(p, def.order());
            break;
        case NormKind::XHat:
            throw ConfigError("use assemble_background_norm for X_hat");
    }
    NormMatrix out;
    out.kind = kind;
    out.matrix = pattern->to_sparse(assemble_values(mesh, op, def));
    require_spd(out.matrix, "norm matrix");
    return out;
}

namespace {

// Reference Q_p stiffness and mass on an axis-aligned cell of size h.
std::pair<Matrix, Matrix> reference_cell_matrices(int p, const Point& h) {
    const auto rule = quadrature::tensor_rule(Point(0, 0), Point(1, 1), p + 2);
    lagrange::ShapeQp s(p);
    const int n = s.size();
    Matrix K = Matrix::Zero(n, n), M = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        s.evaluate(rule.points[k].x(), rule.points[k].y());
        Eigen::Matrix<double, 2, Eigen::Dynamic> G(2, n);
        G.row(0) = s.grads.row(0) / h.x();
        G.row(1) = s.grads.row(1) / h.y();
        const double w = rule.weights[k] * h.x() * h.y();
        K.noalias() += w * G.transpose() * G;
        M.noalias() += w * s.values * s.values.transpose();
    }
    return {K, M};
}

SparseMatrix background_operator(const BackgroundGrid& grid, int p, const std::vector<int>& cells, double kscale,
                                 double mscale) {
    const auto [K, M] = reference_cell_matrices(p, grid.spacing);
    const Matrix E = kscale * K + mscale * M;
    std::vector<Eigen::Triplet<double>> trip;
    for (int c : cells) {
        const auto nodes = grid.cell_nodes(c, p);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = 0; j < nodes.size(); ++j) trip.emplace_back(nodes[i], nodes[j], E(i, j));
    }
    SparseMatrix out(grid.n_nodes(p), grid.n_nodes(p));
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace

NormMatrix assemble_background_norm(const BackgroundGrid& grid, int p) {
    std::vector<int> cells(grid.n_cells());
    for (int c = 0; c < grid.n_cells(); ++c) cells[c] = c;
    const double h = grid.h();
    NormMatrix out;
    out.kind = NormKind::XHat;
    out.matrix = background_operator(grid, p, cells, 1.0, h * h);
    require_spd(out.matrix, "background norm");
    return out;
}

Vector solve_fom(const SparseMatrix& A, const Vector& rhs) {
    if (A.rows() != A.cols() || A.rows() != rhs.size()) throw ConfigError("solve_fom: dimension mismatch");
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw NumericalError("FOM matrix is singular");
    Vector u = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw NumericalError("FOM solve failed");
    const double rn = rhs.norm();
    double res = (A * u - rhs).norm();
    if (res > 1e-10 * rn) {
        // one step of iterative refinement
        u += lu.solve(rhs - A * u);
        res = (A * u - rhs).norm();
    }
    if (res > 1e-10 * rn && rn > 0.0)
        throw NumericalError(fmt::format("FOM residual {:.3e} exceeds tolerance", res / rn));
    return u;
}

struct HarmonicExtension::Impl {
    const FESpace* space = nullptr;
    int n_nodes = 0;
    SparseMatrix Kext;
    std::vector<int> unknown_of;
    std::vector<int> unknowns;
    SparseMatrix Kuu, Kud;
    std::vector<int> known;
    Eigen::SimplicialLDLT<SparseMatrix> solver;
    FESpace space_copy;
};

HarmonicExtension::HarmonicExtension(const CutMesh& mesh, const FESpace& space) : impl_(std::make_unique<Impl>()) {
    if (space.components() != 1) throw ConfigError("harmonic extension expects a scalar space");
    auto& I = *impl_;
    I.space_copy = space;
    I.space = &I.space_copy;
    const BackgroundGrid& grid = mesh.grid;
    const int p = space.order();
    I.n_nodes = grid.n_nodes(p);
    I.Kext = background_operator(grid, p, mesh.cls.external_cells, 1.0, 0.0);
    const NodeSets ns = node_sets(grid, mesh.cls, p);
    I.unknown_of.assign(I.n_nodes, -1);
    std::vector<int> known_of(I.n_nodes, -1);
    for (int n = 0; n < I.n_nodes; ++n) {
        if (ns.is_active[n]) {
            known_of[n] = static_cast<int>(I.known.size());
            I.known.push_back(n);
        } else {
            I.unknown_of[n] = static_cast<int>(I.unknowns.size());
            I.unknowns.push_back(n);
        }
    }
    if (I.unknowns.empty()) return;
    std::vector<Eigen::Triplet<double>> tu, td;
    for (int col = 0; col < I.Kext.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(I.Kext, col); it; ++it) {
            const int r = I.unknown_of[it.row()];
            if (r < 0) continue;
            if (I.unknown_of[col] >= 0) tu.emplace_back(r, I.unknown_of[col], it.value());
            else td.emplace_back(r, known_of[col], it.value());
        }
    I.Kuu.resize(static_cast<Eigen::Index>(I.unknowns.size()), static_cast<Eigen::Index>(I.unknowns.size()));
    I.Kuu.setFromTriplets(tu.begin(), tu.end());
    I.Kud.resize(static_cast<Eigen::Index>(I.unknowns.size()), static_cast<Eigen::Index>(I.known.size()));
    I.Kud.setFromTriplets(td.begin(), td.end());
    I.solver.compute(I.Kuu);
    if (I.solver.info() != Eigen::Success) throw NumericalError("harmonic extension operator is singular");
}

HarmonicExtension::~HarmonicExtension() = default;
HarmonicExtension::HarmonicExtension(HarmonicExtension&&) noexcept = default;

int HarmonicExtension::n_background() const { return impl_->n_nodes; }

Vector HarmonicExtension::extend(const Vector& u) const {
    const auto& I = *impl_;
    Vector uhat = I.space->nodal_values(u).col(0);
    if (I.unknowns.empty()) return uhat;
    Vector ud(static_cast<Eigen::Index>(I.known.size()));
    for (std::size_t k = 0; k < I.known.size(); ++k) ud[static_cast<Eigen::Index>(k)] = uhat[I.known[k]];
    const Vector x = I.solver.solve(-(I.Kud * ud));
    for (std::size_t k = 0; k < I.unknowns.size(); ++k) uhat[I.unknowns[k]] = x[static_cast<Eigen::Index>(k)];
    return uhat;
}

double HarmonicExtension::residual(const Vector& uhat) const {
    const auto& I = *impl_;
    const Vector r = I.Kext * uhat;
    double m = 0.0;
    for (int n : I.unknowns) m = std::max(m, std::abs(r[n]));
    return m;
}

}  // namespace romcut
