#include "romcut/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fmt/format.h>

namespace romcut {

StokesSpaces StokesSpaces::build(const BackgroundGrid& grid, const LevelSet& geo) {
    StokesSpaces s{build_cut_mesh(grid, geo, 2), {}, {}, {}, {}, nullptr, nullptr};
    s.agg_u = aggregate(s.mesh.cls, grid, 2);
    s.agg_p = aggregate(s.mesh.cls, grid, 1);
    s.velocity = FESpace::aggregated(grid, s.mesh.cls, s.agg_u, 2, 2);
    s.pressure = FESpace::aggregated(grid, s.mesh.cls, s.agg_p, 1, 1);
    s.a_pattern = std::make_shared<SparsityPattern>(SparsityPattern::build(s.velocity, s.velocity, s.velocity.cells()));
    s.b_pattern = std::make_shared<SparsityPattern>(SparsityPattern::build(s.pressure, s.velocity, s.velocity.cells()));
    return s;
}

namespace {

struct BoundaryFrame {
    Point nrm;
    double ws;
};

BoundaryFrame boundary_frame(const CellQuad& q, std::size_t k, const QPoint& qp) {
    const Point jn = qp.m.JinvT * q.bnormals[k];
    const double nn = jn.norm();
    return {jn / nn, q.bweights[k] * nn * qp.m.detJ};
}

}  // namespace

MatrixKernel coupling_kernel(int pu, int pp, int pdef, std::array<bool, kNumTags> dirichlet, bool bulk,
                             bool boundary) {
    return [=](const CellQuad& q, const Matrix& psi) -> Matrix {
        PointEvaluator ev(pu, pdef);
        lagrange::ShapeQp ps(pp);
        QPoint qp;
        Vector Np;
        Eigen::Matrix<double, 2, Eigen::Dynamic> Gp;
        const int nu = lagrange::n_local(pu), np = lagrange::n_local(pp);
        Matrix B = Matrix::Zero(np, 2 * nu);
        if (bulk) {
            for (std::size_t k = 0; k < q.bulk.size(); ++k) {
                ev.eval(q, q.bulk.points[k], psi, qp);
                ev.eval_extra(q, q.bulk.points[k], qp.m, ps, Np, Gp);
                const double w = q.bulk.weights[k] * qp.m.detJ;
                for (int c = 0; c < 2; ++c) B.middleCols(c * nu, nu).noalias() += w * Np * qp.G.row(c);
            }
        }
        if (boundary) {
            for (std::size_t k = 0; k < q.bpoints.size(); ++k) {
                if (!dirichlet[q.btags[k]]) continue;
                ev.eval(q, q.bpoints[k], psi, qp);
                ev.eval_extra(q, q.bpoints[k], qp.m, ps, Np, Gp);
                const auto [nrm, ws] = boundary_frame(q, k, qp);
                for (int c = 0; c < 2; ++c)
                    B.middleCols(c * nu, nu).noalias() -= (ws * nrm[c]) * Np * qp.N.transpose();
            }
        }
        return B;
    };
}

VectorKernel stokes_rhs_kernel(int pu, int pdef, double tau, const StokesData& data) {
    return [=](const CellQuad& q, const Matrix& psi) -> Vector {
        PointEvaluator ev(pu, pdef);
        QPoint qp;
        const int n = lagrange::n_local(pu);
        Vector F = Vector::Zero(2 * n);
        for (std::size_t k = 0; k < q.bulk.size(); ++k) {
            ev.eval(q, q.bulk.points[k], psi, qp);
            const Point f = data.f(qp.m.x);
            const double w = q.bulk.weights[k] * qp.m.detJ;
            for (int c = 0; c < 2; ++c) F.segment(c * n, n).noalias() += (w * f[c]) * qp.N;
        }
        for (std::size_t k = 0; k < q.bpoints.size(); ++k) {
            if (!data.dirichlet[q.btags[k]]) continue;
            ev.eval(q, q.bpoints[k], psi, qp);
            const Point ud = data.u_D(qp.m.x);
            if (ud.isZero(0.0)) continue;
            const auto [nrm, ws] = boundary_frame(q, k, qp);
            const Vector dn = qp.G.transpose() * nrm;
            for (int c = 0; c < 2; ++c)
                F.segment(c * n, n).noalias() += (ws * tau * ud[c]) * qp.N - (ws * ud[c]) * dn;
        }
        return F;
    };
}

VectorKernel pressure_rhs_kernel(int pu, int pp, int pdef, const StokesData& data) {
    return [=](const CellQuad& q, const Matrix& psi) -> Vector {
        PointEvaluator ev(pu, pdef);
        lagrange::ShapeQp ps(pp);
        QPoint qp;
        Vector Np;
        Eigen::Matrix<double, 2, Eigen::Dynamic> Gp;
        Vector K = Vector::Zero(lagrange::n_local(pp));
        for (std::size_t k = 0; k < q.bpoints.size(); ++k) {
            if (!data.dirichlet[q.btags[k]]) continue;
            ev.eval(q, q.bpoints[k], psi, qp);
            const Point ud = data.u_D(qp.m.x);
            if (ud.isZero(0.0)) continue;
            ev.eval_extra(q, q.bpoints[k], qp.m, ps, Np, Gp);
            const auto [nrm, ws] = boundary_frame(q, k, qp);
            K.noalias() -= (ws * ud.dot(nrm)) * Np;
        }
        return K;
    };
}

StokesOperators stokes_operators(const StokesSpaces& s, int pdef, const StokesData& data, double tau) {
    StokesOperators ops;
    ops.A = {&s.velocity, &s.velocity, s.a_pattern, laplace_kernel(2, pdef, 2, tau, data.dirichlet, true)};
    ops.B = {&s.pressure, &s.velocity, s.b_pattern, coupling_kernel(2, 1, pdef, data.dirichlet, true, true)};
    ops.l = {&s.velocity, stokes_rhs_kernel(2, pdef, tau, data)};
    ops.k = {&s.pressure, pressure_rhs_kernel(2, 1, pdef, data)};
    return ops;
}

SparseMatrix StokesSystem::matrix() const {
    const SparseMatrix Am = a_pattern->to_sparse(A);
    const SparseMatrix Bm = b_pattern->to_sparse(B);
    const int nu = a_pattern->rows, np = b_pattern->rows;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(Am.nonZeros() + 2 * Bm.nonZeros()));
    for (int j = 0; j < Am.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(Am, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < Bm.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(Bm, j); it; ++it) {
            t.emplace_back(nu + it.row(), it.col(), it.value());
            t.emplace_back(it.col(), nu + it.row(), -it.value());
        }
    SparseMatrix M(nu + np, nu + np);
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

Vector StokesSystem::rhs() const {
    Vector b(l.size() + k.size());
    b << l, k;
    return b;
}

StokesSystem assemble_stokes(const StokesSpaces& s, const DeformationField& def, const StokesData& data, double eta) {
    const auto ops = stokes_operators(s, def.order(), data, nitsche_tau(eta, s.mesh.grid));
    StokesSystem sys;
    sys.a_pattern = s.a_pattern;
    sys.b_pattern = s.b_pattern;
    sys.A = assemble_values(s.mesh, ops.A, def);
    sys.B = assemble_values(s.mesh, ops.B, def);
    sys.l = assemble_vector(s.mesh, ops.l, def);
    sys.k = assemble_vector(s.mesh, ops.k, def);
    return sys;
}

StokesSolution solve_stokes(const StokesSystem& sys) {
    const Vector x = solve_fom(sys.matrix(), sys.rhs());
    const Eigen::Index nu = sys.l.size();
    return {x.head(nu), x.tail(x.size() - nu)};
}

SparseMatrix reference_coupling_bulk(const StokesSpaces& s) {
    const MatrixOperator op{&s.pressure, &s.velocity, s.b_pattern, coupling_kernel(2, 1, 1, {}, true, false)};
    return s.b_pattern->to_sparse(assemble_values(s.mesh, op, DeformationField::zero(s.mesh.grid, 1)));
}

Matrix gram_schmidt(const Matrix& V, const SparseMatrix& X, int* dropped) {
    std::vector<Vector> kept;
    int drop = 0;
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        Vector v = V.col(j);
        const double in = std::sqrt(std::max(v.dot(X * v), 0.0));
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : kept) v -= q.dot(X * v) * q;
        const double out = std::sqrt(std::max(v.dot(X * v), 0.0));
        if (!(in > 0.0) || out < 1e-10 * in) {
            ++drop;
            continue;
        }
        kept.push_back(v / out);
    }
    if (dropped) *dropped = drop;
    Matrix Q(V.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) Q.col(static_cast<Eigen::Index>(j)) = kept[j];
    return Q;
}

double reduced_coupling_sigma_min(const Matrix& Phi_p, const SparseMatrix& B, const Matrix& Phi_u) {
    if (Phi_p.cols() == 0) return 0.0;
    const Matrix Bn = Phi_p.transpose() * (B * Phi_u);
    if (Bn.rows() > Bn.cols()) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(Bn);
    return svd.singularValues()[svd.singularValues().size() - 1];
}

SupremizerSet enrich(const Matrix& Phi_u, const Matrix& Phi_p, const SparseMatrix& X, const SparseMatrix& B,
                     SupremizerKind kind) {
    Eigen::SimplicialLLT<SparseMatrix> llt(X);
    if (llt.info() != Eigen::Success) throw NumericalError("velocity norm matrix is not positive definite");
    const Matrix BtP = B.transpose() * Phi_p;
    SupremizerSet out;
    if (kind == SupremizerKind::Riesz) {
        out.S = llt.solve(BtP);
    } else {
        const SparseMatrix Lt = llt.matrixU();
        out.S = llt.permutationPinv() * Matrix(Lt.triangularView<Eigen::Upper>().solve(BtP));
    }
    Matrix V(Phi_u.rows(), Phi_u.cols() + out.S.cols());
    V << Phi_u, out.S;
    out.Phi_u = gram_schmidt(V, X, &out.dropped);
    out.sigma_min = reduced_coupling_sigma_min(Phi_p, B, out.Phi_u);
    if (!(out.sigma_min > 1e-10))
        throw NumericalError(fmt::format("enrichment insufficient (sigma_min {:.3e})", out.sigma_min));
    return out;
}

CouplingCheck coupling_constant_check(const StokesSpaces& s, const DeformationField& def, int sample_pairs,
                                      std::uint64_t seed) {
    if (sample_pairs < 1) throw ConfigError("coupling check needs at least one sample pair");
    const auto kernel = coupling_kernel(2, 1, def.order(), {}, true, false);
    const Matrix zero = Matrix::Zero(2, lagrange::n_local(def.order()));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CouplingCheck out;
    double sum = 0.0;
    for (int c : s.velocity.cells()) {
        const CellQuad& q = s.mesh.quad(c);
        const Matrix Bref = kernel(q, zero);
        const Matrix Bdef = kernel(q, def.local(c));
        double lo = 0.0, hi = 0.0, acc = 0.0;
        int n = 0;
        for (int k = 0; k < sample_pairs; ++k) {
            Vector v(Bref.cols()), p(Bref.rows());
            for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
            for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = u(rng);
            const double ref = p.dot(Bref * v);
            if (std::abs(ref) <= 1e-12) continue;
            const double r = p.dot(Bdef * v) / ref;
            lo = n ? std::min(lo, r) : r;
            hi = n ? std::max(hi, r) : r;
            acc += r;
            ++n;
        }
        if (n == 0) continue;
        out.cells.push_back(c);
        out.c.push_back(acc / n);
        out.deviation.push_back(hi - lo);
        sum += acc / n;
    }
    if (!out.c.empty()) {
        out.min = *std::min_element(out.c.begin(), out.c.end());
        out.max = *std::max_element(out.c.begin(), out.c.end());
        out.mean = sum / static_cast<double>(out.c.size());
    }
    return out;
}

BlockLayout stokes_layout() {
    BlockLayout layout;
    layout.matrices.push_back({0, 0, 1.0, 0.0});
    layout.matrices.push_back({1, 0, 1.0, -1.0});
    layout.vector_fields = {0, 1};
    return layout;
}

ReducedStokesSolution solve_reduced_stokes(const ReducedOperator& ro, int n_u, int n_p, const Vector& theta_A,
                                           const Vector& theta_B, const Vector& theta_l, const Vector& theta_k) {
    ReducedStokesSolution out;
    Vector x;
    try {
        x = solve_online(stokes_layout(), {n_u, n_p}, ro, {theta_A, theta_B}, {theta_l, theta_k}, &out.residual);
    } catch (const NumericalError&) {
        Matrix Bn = Matrix::Zero(n_p, n_u);
        for (std::size_t i = 0; i < ro.matrices[1].size(); ++i)
            Bn += theta_B[static_cast<Eigen::Index>(i)] * ro.matrices[1][i];
        double smin = 0.0;
        if (n_p > 0 && n_p <= n_u) {
            Eigen::JacobiSVD<Matrix> svd(Bn);
            smin = svd.singularValues()[n_p - 1];
        }
        throw NumericalError(fmt::format("singular reduced saddle system (reduced coupling sigma_min {:.3e})", smin));
    }
    out.u = x.head(n_u);
    out.p = x.tail(n_p);
    return out;
}

}  // namespace romcut
