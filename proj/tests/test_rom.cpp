#include <cmath>
#include <memory>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "romcut/deformation.hpp"
#include "romcut/fem.hpp"
#include "romcut/rom.hpp"

using namespace romcut;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) M(i, j) = g(rng);
    return M;
}

Matrix orthonormal(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(r, c, seed));
    return qr.householderQ() * Matrix::Identity(r, c);
}

SparseMatrix random_spd(int n, std::uint64_t seed) {
    // 1D stiffness plus a random positive diagonal
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0 + u(rng));
        if (i + 1 < n) {
            t.emplace_back(i, i + 1, -1.0);
            t.emplace_back(i + 1, i, -1.0);
        }
    }
    SparseMatrix X(n, n);
    X.setFromTriplets(t.begin(), t.end());
    return X;
}

SparseMatrix identity(int n) {
    SparseMatrix I(n, n);
    I.setIdentity();
    return I;
}

// Independent TT oracle: plain full SVD of every unfolding.
std::vector<int> oracle_tt_ranks(const Matrix& U, const std::vector<int>& dims, double eps) {
    const double step = eps / std::sqrt(static_cast<double>(dims.size()));
    std::vector<int> ranks;
    Matrix cur = U;
    Eigen::Index r = 1;
    for (int n : dims) {
        const Eigen::Index rows = r * n;
        const Matrix W = Eigen::Map<const Matrix>(cur.data(), rows, cur.size() / rows);
        Eigen::BDCSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& s = svd.singularValues();
        const double total = s.squaredNorm();
        Eigen::Index m = 0;
        double kept = 0.0;
        while (m < s.size()) {
            kept += s[m] * s[m];
            ++m;
            if (total - kept <= step * step * total) break;
        }
        ranks.push_back(static_cast<int>(m));
        cur = s.head(m).asDiagonal() * svd.matrixV().leftCols(m).transpose();
        r = m;
    }
    return ranks;
}

struct Poisson {
    CutMesh mesh;
    AggregationMap agg;
    FESpace space;
    std::shared_ptr<const SparsityPattern> pattern;
    ElasticDeformationSolver solver;
    AffineHoleDeformation family;
    PoissonData data;
    double tau;
    MatrixOperator A;
    VectorOperator l;

    Poisson()
        : mesh(build_cut_mesh(BackgroundGrid::box(Point(-1, -1), Point(1, 1), 12, 12),
                              LevelSet::box_minus_ball(Point(0.1, 0.3), 0.3), 2)),
          agg(aggregate(mesh.cls, mesh.grid, 2)),
          space(FESpace::aggregated(mesh.grid, mesh.cls, agg, 2, 1)),
          pattern(std::make_shared<SparsityPattern>(SparsityPattern::build(space, space, space.cells()))),
          solver(mesh, 2, {1.0, 0.3, 1.0}),
          family(solver, mesh.grid, Point(0.1, 0.3), 0.3),
          tau(nitsche_tau(default_eta(2), mesh.grid)) {
        data.f = [](const Point& x) { return 1.0 + x.x() * x.y(); };
        data.u_D = [](const Point& x) { return 0.5 * x.x() - x.y(); };
        A = {&space, &space, pattern, laplace_kernel(2, 2, 1, tau, data.dirichlet, true)};
        l = {&space, poisson_rhs_kernel(2, 2, tau, data)};
    }

    std::array<double, 3> coef(double cx, double cy) const { return family.coefficients(Point(cx, cy), 0.3); }
};

std::vector<std::array<double, 3>> training_coefs(const Poisson& P) {
    std::vector<std::array<double, 3>> out;
    for (double cx : {-0.1, 0.05, 0.2, 0.3})
        for (double cy : {0.26, 0.3, 0.34}) out.push_back(P.coef(cx, cy));
    return out;
}

}  // namespace

TEST(EnergyRank, Examples) {
    EXPECT_EQ(energy_rank(Vector{{10.0, 1.0, 0.1}}, 0.05), 2);
    EXPECT_EQ(energy_rank(Vector{{10.0, 1.0, 0.1}}, 1.0), 1);
    EXPECT_EQ(energy_rank(Vector{{3.0, 2.0, 1.0, 0.5}}, 1.0), 1);
    EXPECT_EQ(energy_rank(Vector{{5.0}}, 1e-8), 1);
    EXPECT_EQ(energy_rank(Vector{{1.0, 1.0, 1.0, 1.0}}, 1e-8), 4);
}

TEST(Rsvd, RankOneExact) {
    const Matrix u = random_matrix(40, 1, 1), v = random_matrix(15, 1, 2);
    const Matrix M = u * v.transpose();
    SvdOptions opt;
    opt.deterministic = false;
    const auto s = rsvd(M, 1e-6, opt);
    ASSERT_EQ(s.S.size(), 1);
    EXPECT_LT((M - s.U * s.S.asDiagonal() * s.V.transpose()).norm(), 1e-10 * M.norm());
}

TEST(Rsvd, KnownSpectrumMatchesExact) {
    const Eigen::Index m = 200, n = 50;
    Vector sig(n);
    for (Eigen::Index k = 0; k < n; ++k) sig[k] = std::pow(2.0, -static_cast<double>(k));
    const Matrix M = orthonormal(m, n, 3) * sig.asDiagonal() * orthonormal(n, n, 4).transpose();
    SvdOptions opt;
    opt.deterministic = false;
    opt.seed = 7;
    const double eps = 1e-3;
    const auto r = rsvd(M, eps, opt);
    Eigen::JacobiSVD<Matrix> full(M);
    const int exact = energy_rank(full.singularValues(), eps);
    EXPECT_LE(std::abs(static_cast<int>(r.S.size()) - exact), 1);
    double tail = 0.0;
    for (Eigen::Index k = r.S.size(); k < n; ++k) tail += sig[k] * sig[k];
    EXPECT_LE((M - r.U * r.S.asDiagonal() * r.V.transpose()).norm(), 1.1 * std::sqrt(tail));
    EXPECT_THROW(rsvd(M, 0.0, opt), ConfigError);
}

TEST(Rsvd, DeterministicModeIsExactAndBitStable) {
    const Matrix M = random_matrix(30, 12, 5);
    const auto a = truncated_svd(M, 1e-3, SvdOptions{});
    const auto b = truncated_svd(M, 1e-3, SvdOptions{});
    EXPECT_EQ(a.U, b.U);
    EXPECT_EQ(a.S, b.S);
    Eigen::JacobiSVD<Matrix> full(M);
    EXPECT_EQ(a.S.size(), energy_rank(full.singularValues(), 1e-3));
    EXPECT_LT((a.S - full.singularValues().head(a.S.size())).norm(), 1e-12 * full.singularValues()[0]);
    const auto w = exact_svd(M.transpose());
    EXPECT_LT((M.transpose() - w.U * w.S.asDiagonal() * w.V.transpose()).norm(), 1e-12 * M.norm());
}

TEST(Tpod, EqualColumns) {
    const int n = 25;
    const SparseMatrix X = random_spd(n, 11);
    const Matrix u = random_matrix(n, 1, 12);
    const Matrix U = u.replicate(1, 6);
    const auto b = tpod(U, X, 1e-6, SvdOptions{});
    ASSERT_EQ(b.size(), 1);
    const double nu = std::sqrt(u.col(0).dot(X * u.col(0)));
    const Vector e = u.col(0) / nu;
    EXPECT_LT(std::min((b.Phi.col(0) - e).norm(), (b.Phi.col(0) + e).norm()), 1e-12);
}

TEST(Tpod, IdentityNormMatchesSvd) {
    const Matrix U = random_matrix(20, 8, 13);
    const auto b = tpod(U, identity(20), 1e-2, SvdOptions{});
    Eigen::JacobiSVD<Matrix> svd(U, Eigen::ComputeThinU);
    ASSERT_EQ(b.size(), energy_rank(svd.singularValues(), 1e-2));
    for (int k = 0; k < b.size(); ++k) {
        const Vector a = b.Phi.col(k), s = svd.matrixU().col(k);
        EXPECT_LT(std::min((a - s).norm(), (a + s).norm()), 1e-10);
    }
}

TEST(Tpod, RankThreeBoundReplay) {
    const int n = 60;
    const SparseMatrix X = random_spd(n, 21);
    const Matrix U = random_matrix(n, 3, 22) * random_matrix(3, 15, 23);
    const auto b = tpod(U, X, 1e-10, SvdOptions{});
    ASSERT_EQ(b.size(), 3);
    EXPECT_LT((b.Phi.transpose() * (X * b.Phi) - Matrix::Identity(3, 3)).norm(), 1e-10);
    // brute-force projection, column by column
    double err = 0.0, energy = 0.0;
    for (Eigen::Index k = 0; k < U.cols(); ++k) {
        const Vector u = U.col(k);
        const Vector r = u - b.Phi * (b.Phi.transpose() * (X * u));
        err += r.dot(X * r);
        energy += u.dot(X * u);
    }
    EXPECT_LE(err, 1e-20 * energy);
    const auto pe = projection_error(U, b.Phi, X);
    EXPECT_NEAR(pe.energy, energy, 1e-10 * energy);
    EXPECT_TRUE(pe.within(1e-10));
}

TEST(Tpod, BoundOnGeneralSnapshots) {
    const int n = 40;
    const SparseMatrix X = random_spd(n, 31);
    Matrix U = random_matrix(n, 25, 32);
    for (Eigen::Index k = 0; k < U.cols(); ++k) U.col(k) *= std::pow(0.7, static_cast<double>(k));
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        for (bool det : {true, false}) {
            SvdOptions opt;
            opt.deterministic = det;
            const auto b = tpod(U, X, eps, opt);
            EXPECT_TRUE(projection_error(U, b.Phi, X).within(eps)) << eps << " " << det;
        }
    }
}

TEST(Tpod, RejectsIndefiniteNorm) {
    SparseMatrix X = identity(5);
    X.coeffRef(2, 2) = -1.0;
    EXPECT_THROW(tpod(random_matrix(5, 2, 1), X, 1e-3, SvdOptions{}), NumericalError);
}

TEST(TtSvd, AllOnes) {
    const std::vector<int> dims{4, 5};
    const auto tt = ttsvd(Matrix::Ones(20, 7), dims, 1e-8, SvdOptions{});
    EXPECT_EQ(tt.ranks, (std::vector<int>{1, 1}));
    ASSERT_EQ(tt.cores.size(), 2U);
    EXPECT_EQ(tt.cores[0].rows(), 4);
    EXPECT_EQ(tt.cores[1].rows(), 5);
}

TEST(TtSvd, OuterProductIsRankOne) {
    const Vector a = random_matrix(3, 1, 1), b = random_matrix(4, 1, 2), c = random_matrix(5, 1, 3),
                 m = random_matrix(6, 1, 4);
    Matrix U(60, 6);
    for (int q = 0; q < 6; ++q)
        for (int k = 0; k < 5; ++k)
            for (int j = 0; j < 4; ++j)
                for (int i = 0; i < 3; ++i) U(i + 3 * j + 12 * k, q) = a[i] * b[j] * c[k] * m[q];
    const auto tt = ttsvd(U, {3, 4, 5}, 1e-8, SvdOptions{});
    EXPECT_EQ(tt.ranks, (std::vector<int>{1, 1, 1}));
    const Matrix R = tt.Phi * (tt.Phi.transpose() * U);
    EXPECT_LT((U - R).norm(), 1e-10 * U.norm());
}

TEST(TtSvd, RandomTensorBoundAndOracleRanks) {
    // smooth-decay 8 x 8 x 20 tensor
    Matrix U(64, 20);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g;
    for (int q = 0; q < 20; ++q)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i)
                U(i + 8 * j, q) = std::exp(-0.4 * (i + j)) * std::cos(0.3 * q * (i - j)) + 1e-3 * g(rng);
    const double eps = 1e-2;
    const std::vector<int> dims{8, 8};
    const auto tt = ttsvd(U, dims, eps, SvdOptions{});
    const auto oracle = oracle_tt_ranks(U, dims, eps);
    ASSERT_EQ(tt.ranks.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_LE(std::abs(tt.ranks[i] - oracle[i]), 1);
    EXPECT_LT((tt.Phi.transpose() * tt.Phi - Matrix::Identity(tt.Phi.cols(), tt.Phi.cols())).norm(), 1e-10);
    EXPECT_LE((U - tt.Phi * (tt.Phi.transpose() * U)).norm(), eps * U.norm());
    EXPECT_LT((tt_contract(tt) - tt.Phi).norm(), 1e-14);
    EXPECT_THROW(ttsvd(U, {8, 7}, eps, SvdOptions{}), ConfigError);
}

TEST(TtOrthogonalize, AlreadyOrthonormalIsIdentity) {
    const Matrix U = random_matrix(48, 10, 51);
    const auto tt = ttsvd(U, {6, 8}, 1e-3, SvdOptions{});
    const auto o = tt_orthogonalize(tt, identity(48));
    EXPECT_LT((o.Phi - tt.Phi).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(o.ranks, tt.ranks);
}

TEST(TtOrthogonalize, WeightedOrthonormality) {
    const Matrix U = random_matrix(48, 10, 52);
    const SparseMatrix X = random_spd(48, 53);
    const auto tt = ttsvd(U, {6, 8}, 1e-2, SvdOptions{});
    const auto o = tt_orthogonalize(tt, X);
    EXPECT_EQ(o.Phi.cols(), tt.Phi.cols());
    EXPECT_EQ(o.dropped, 0);
    EXPECT_LT((o.Phi.transpose() * (X * o.Phi) - Matrix::Identity(o.Phi.cols(), o.Phi.cols())).norm(), 1e-8);
    EXPECT_LT((tt_contract(o) - o.Phi).norm(), 1e-10);
    // same span as the euclidean contraction
    const Matrix P = o.Phi * (o.Phi.transpose() * (X * tt.Phi));
    EXPECT_LT((P - tt.Phi).norm(), 1e-10);
}

TEST(Mdeim, SingleSnapshot) {
    const Vector v{{0.3, -2.0, 1.5, 2.0, 0.1}};
    const auto hr = mdeim(v, 1e-8, SvdOptions{});
    ASSERT_EQ(hr.size(), 1);
    EXPECT_EQ(hr.indices[0], 1);  // |-2| ties |2|: lowest index
    const Vector e = v / v.norm();
    EXPECT_LT(std::min((hr.basis.col(0) - e).norm(), (hr.basis.col(0) + e).norm()), 1e-14);
    const Vector th = online_coefficients(hr, Vector{{v[1]}});
    EXPECT_NEAR(th[0], v[1] / hr.basis(1, 0), 1e-15);
    EXPECT_LT((hr.basis * th - v).norm(), 1e-14);
}

TEST(Mdeim, TwoOrthogonalDirections) {
    const Matrix Q = orthonormal(30, 2, 61);
    const Matrix S = Q * random_matrix(2, 9, 62);
    const auto hr = mdeim(S, 1e-10, SvdOptions{});
    ASSERT_EQ(hr.size(), 2);
    for (Eigen::Index k = 0; k < S.cols(); ++k) {
        Vector s(2);
        for (int a = 0; a < 2; ++a) s[a] = S(hr.indices[a], k);
        EXPECT_LE((hr.basis * online_coefficients(hr, s) - S.col(k)).norm(), 1e-8 * S.col(k).norm());
    }
    EXPECT_THROW(online_coefficients(hr, Vector::Ones(3)), ConfigError);
}

TEST(Mdeim, InterpolatesAtIndicesForAnyInput) {
    Matrix S = random_matrix(50, 12, 71);
    for (Eigen::Index k = 0; k < S.cols(); ++k) S.col(k) *= std::pow(0.3, static_cast<double>(k));
    const auto hr = mdeim(S, 1e-4, SvdOptions{});
    const Vector x = random_matrix(50, 1, 72);
    Vector s(hr.size());
    for (int a = 0; a < hr.size(); ++a) s[a] = x[hr.indices[a]];
    const Vector y = hr.basis * online_coefficients(hr, s);
    for (int a = 0; a < hr.size(); ++a) EXPECT_NEAR(y[hr.indices[a]], x[hr.indices[a]], 1e-12 * x.cwiseAbs().maxCoeff());
    // greedy selection is reproducible
    EXPECT_EQ(mdeim(S, 1e-4, SvdOptions{}).indices, hr.indices);
}

TEST(Mdeim, DegenerateSampling) {
    Matrix basis = Matrix::Zero(4, 2);
    basis(0, 0) = 1.0;
    basis(1, 1) = 1.0;
    try {
        make_hyper_reduction(basis, {0, 2});
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_STREQ(e.what(), "degenerate sampling");
    }
}

TEST(Mdeim, MatrixSnapshotsOwnACellSubset) {
    const Poisson P;
    const auto coefs = training_coefs(P);
    Matrix S(P.pattern->nnz(), static_cast<Eigen::Index>(coefs.size()));
    Matrix F(P.space.n_dofs(), static_cast<Eigen::Index>(coefs.size()));
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        const auto def = P.family.field(coefs[k]);
        S.col(static_cast<Eigen::Index>(k)) = assemble_values(P.mesh, P.A, def);
        F.col(static_cast<Eigen::Index>(k)) = assemble_vector(P.mesh, P.l, def);
    }
    const auto hr = mdeim(S, 1e-4, SvdOptions{});
    const auto cells = matrix_sample_cells(*P.pattern, hr.indices);
    ASSERT_FALSE(cells.empty());
    EXPECT_LT(cells.size(), P.space.cells().size());
    // oracle: cells whose condensed block couples a sampled (row, col) pair
    std::vector<int> oracle;
    for (int c : P.space.cells()) {
        const auto dofs = P.space.cell_dofs(c);
        bool hit = false;
        for (int idx : hr.indices) {
            const int r = P.pattern->row_of(idx), col = P.pattern->col_idx[idx];
            hit = hit || (std::find(dofs.begin(), dofs.end(), r) != dofs.end() &&
                          std::find(dofs.begin(), dofs.end(), col) != dofs.end());
        }
        if (hit) oracle.push_back(c);
    }
    EXPECT_EQ(cells, oracle);
    const auto hv = mdeim(F, 1e-4, SvdOptions{});
    std::vector<int> voracle;
    for (int c : P.space.cells()) {
        const auto dofs = P.space.cell_dofs(c);
        for (int d : hv.indices)
            if (std::find(dofs.begin(), dofs.end(), d) != dofs.end()) {
                voracle.push_back(c);
                break;
            }
    }
    EXPECT_EQ(vector_sample_cells(P.space, hv.indices), voracle);
    // training replay through the hyper-reduced expansion
    for (Eigen::Index k = 0; k < S.cols(); ++k) {
        Vector s(hr.size());
        for (int a = 0; a < hr.size(); ++a) s[a] = S(hr.indices[a], k);
        EXPECT_LE((hr.basis * online_coefficients(hr, s) - S.col(k)).norm(), 10 * 1e-4 * S.col(k).norm());
    }
}

TEST(Project, SingleModeEqualsForms) {
    const Matrix K = random_matrix(6, 6, 81);
    const Matrix A = K * K.transpose() + Matrix::Identity(6, 6);
    const Vector b = random_matrix(6, 1, 82);
    SparsityPattern sp;
    sp.rows = sp.cols = 6;
    sp.row_ptr.resize(7);
    for (int i = 0; i < 6; ++i) {
        sp.row_ptr[i] = 6 * i;
        for (int j = 0; j < 6; ++j) sp.col_idx.push_back(j);
    }
    sp.row_ptr[6] = 36;
    Vector vals(36);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) vals[6 * i + j] = A(i, j);
    const auto hA = make_hyper_reduction(vals / vals.norm(), {0});
    const auto hl = make_hyper_reduction(b / b.norm(), {0});
    const Vector phi = random_matrix(6, 1, 83);
    BlockLayout layout;
    layout.matrices.push_back({});
    layout.vector_fields.push_back(0);
    const auto ro = project(layout, {phi}, {&sp}, {&hA}, {&hl});
    ASSERT_EQ(ro.matrices.size(), 1U);
    ASSERT_EQ(ro.matrices[0].size(), 1U);
    EXPECT_NEAR(ro.matrices[0][0](0, 0), phi.dot(A * phi) / vals.norm(), 1e-12 * std::abs(phi.dot(A * phi)));
    EXPECT_NEAR(ro.vectors[0](0, 0), phi.dot(b) / b.norm(), 1e-12);
    double res = 1.0;
    const Vector un = solve_online(layout, {1}, ro, {Vector::Constant(1, vals.norm())}, {Vector::Constant(1, b.norm())},
                                   &res);
    EXPECT_NEAR(un[0], phi.dot(b) / phi.dot(A * phi), 1e-12 * std::abs(un[0]));
    EXPECT_LT(res, 1e-12);
}

TEST(Project, HyperReducedOperatorMatchesFullProjection) {
    const Poisson P;
    const auto coefs = training_coefs(P);
    Matrix S(P.pattern->nnz(), static_cast<Eigen::Index>(coefs.size()));
    Matrix F(P.space.n_dofs(), static_cast<Eigen::Index>(coefs.size()));
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        const auto def = P.family.field(coefs[k]);
        S.col(static_cast<Eigen::Index>(k)) = assemble_values(P.mesh, P.A, def);
        F.col(static_cast<Eigen::Index>(k)) = assemble_vector(P.mesh, P.l, def);
    }
    // lossless expansions so every training operator lies in the span
    const auto hA = mdeim(S, 1e-13, SvdOptions{});
    const auto hl = mdeim(F, 1e-13, SvdOptions{});
    const Matrix Phi = orthonormal(P.space.n_dofs(), 5, 84);
    BlockLayout layout;
    layout.matrices.push_back({});
    layout.vector_fields.push_back(0);
    const auto ro = project(layout, {Phi}, {P.pattern.get()}, {&hA}, {&hl});
    EXPECT_EQ(static_cast<int>(ro.matrices[0].size()), hA.size());
    EXPECT_EQ(static_cast<int>(ro.vectors[0].cols()), hl.size());
    for (Eigen::Index k : {Eigen::Index{0}, Eigen::Index{5}}) {
        Vector s(hA.size());
        for (int a = 0; a < hA.size(); ++a) s[a] = S(hA.indices[a], k);
        const Vector th = online_coefficients(hA, s);
        Matrix An = Matrix::Zero(5, 5);
        for (int a = 0; a < hA.size(); ++a) An += th[a] * ro.matrices[0][a];
        const Matrix full = Phi.transpose() * (P.pattern->to_sparse(S.col(k)) * Phi);
        EXPECT_LE((An - full).norm(), 1e-8 * full.norm());
    }
}

TEST(SolveOnline, UntruncatedBasisReproducesFom) {
    const int n = 10;
    const SparseMatrix X = random_spd(n, 91);
    const Matrix A = Matrix(X) + 0.1 * Matrix::Identity(n, n);
    const Vector b = random_matrix(n, 1, 92);
    const Vector u = A.partialPivLu().solve(b);
    const Matrix U = random_matrix(n, n, 93);
    const auto basis = tpod(U, X, 1e-14, SvdOptions{});
    ASSERT_EQ(basis.size(), n);
    SparsityPattern sp;
    sp.rows = sp.cols = n;
    for (int i = 0; i < n; ++i) {
        sp.row_ptr.push_back(static_cast<int>(sp.col_idx.size()));
        for (int j = 0; j < n; ++j) sp.col_idx.push_back(j);
    }
    sp.row_ptr.push_back(n * n);
    Vector vals(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) vals[n * i + j] = A(i, j);
    const auto hA = make_hyper_reduction(vals / vals.norm(), {0});
    const auto hl = make_hyper_reduction(b / b.norm(), {0});
    BlockLayout layout;
    layout.matrices.push_back({});
    layout.vector_fields.push_back(0);
    const auto ro = project(layout, {basis.Phi}, {&sp}, {&hA}, {&hl});
    double res = 1.0;
    const Vector un =
        solve_online(layout, {n}, ro, {Vector::Constant(1, vals.norm())}, {Vector::Constant(1, b.norm())}, &res);
    EXPECT_LE((basis.Phi * un - u).norm(), 1e-8 * u.norm());
    EXPECT_LE(res, 1e-10);
    EXPECT_THROW(solve_online(layout, {n}, ro, {Vector::Zero(1)}, {Vector::Constant(1, 1.0)}), NumericalError);
    EXPECT_THROW(solve_online(layout, {n}, ro, {Vector::Zero(2)}, {Vector::Constant(1, 1.0)}), ConfigError);
}

TEST(ReducedIntegration, SamplesMatchFullAssemblyAfterFomIsGone) {
    std::optional<Poisson> P(std::in_place);
    const auto coefs = training_coefs(*P);
    Matrix S(P->pattern->nnz(), static_cast<Eigen::Index>(coefs.size()));
    Matrix F(P->space.n_dofs(), static_cast<Eigen::Index>(coefs.size()));
    for (std::size_t k = 0; k < coefs.size(); ++k) {
        const auto def = P->family.field(coefs[k]);
        S.col(static_cast<Eigen::Index>(k)) = assemble_values(P->mesh, P->A, def);
        F.col(static_cast<Eigen::Index>(k)) = assemble_vector(P->mesh, P->l, def);
    }
    const auto hA = mdeim(S, 1e-4, SvdOptions{});
    const auto hl = mdeim(F, 1e-4, SvdOptions{});
    const std::array<double, 3> probe = P->coef(0.12, 0.31);
    const auto def = P->family.field(probe);
    const Vector full_A = assemble_values(P->mesh, P->A, def);
    const Vector full_l = assemble_vector(P->mesh, P->l, def);
    const int n_h = P->space.n_dofs(), nnz = P->pattern->nnz();
    const int n_active = static_cast<int>(P->space.cells().size());

    auto red = std::make_unique<ReducedIntegrationAssembler>(P->mesh, P->family.modes(), 2,
                                                             std::vector<ReducedIntegrationAssembler::MatrixInput>{
                                                                 {P->A, hA.indices}},
                                                             std::vector<ReducedIntegrationAssembler::VectorInput>{
                                                                 {P->l, hl.indices}});
    std::vector<int> expected = matrix_sample_cells(*P->pattern, hA.indices);
    const auto vc = vector_sample_cells(P->space, hl.indices);
    expected.insert(expected.end(), vc.begin(), vc.end());
    std::sort(expected.begin(), expected.end());
    expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
    EXPECT_EQ(red->cells(), expected);
    EXPECT_LT(static_cast<int>(red->cells().size()), n_active);

    P.reset();  // mesh, spaces, patterns and deformation modes destroyed

    std::vector<Vector> ms, vs;
    red->sample(probe, ms, vs);
    ASSERT_EQ(ms.size(), 1U);
    ASSERT_EQ(vs.size(), 1U);
    for (int a = 0; a < hA.size(); ++a) EXPECT_EQ(ms[0][a], full_A[hA.indices[a]]);
    for (int a = 0; a < hl.size(); ++a) EXPECT_EQ(vs[0][a], full_l[hl.indices[a]]);
    EXPECT_LT(red->footprint(), static_cast<std::size_t>(std::min(n_h, nnz)));
}
