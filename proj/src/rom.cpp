#include "romcut/rom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace romcut {

int energy_rank(const Vector& sv, double eps, double total_energy) {
    const Eigen::Index n = sv.size();
    if (n == 0) return 0;
    const double total = total_energy >= 0.0 ? total_energy : sv.squaredNorm();
    if (!(total > 0.0)) return 1;
    double kept = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        kept += sv[m] * sv[m];
        if (1.0 - kept / total <= eps * eps) return static_cast<int>(m + 1);
    }
    return static_cast<int>(n);
}

namespace {

TruncatedSvd tall_svd(const Matrix& M) {
    Eigen::HouseholderQR<Matrix> qr(M);
    const Eigen::Index k = M.cols();
    const Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    TruncatedSvd out;
    out.U = qr.householderQ() * Matrix::Identity(M.rows(), k);
    out.U = out.U * svd.matrixU();
    out.S = svd.singularValues();
    out.V = svd.matrixV();
    return out;
}

TruncatedSvd truncate(TruncatedSvd s, int r) {
    s.U = s.U.leftCols(r).eval();
    s.S = s.S.head(r).eval();
    s.V = s.V.leftCols(r).eval();
    return s;
}

Matrix orthonormal_range(const Matrix& Y) {
    Eigen::HouseholderQR<Matrix> qr(Y);
    return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

}  // namespace

TruncatedSvd exact_svd(const Matrix& M) {
    if (M.rows() >= M.cols()) return tall_svd(M);
    TruncatedSvd t = tall_svd(M.transpose());
    std::swap(t.U, t.V);
    return t;
}

TruncatedSvd rsvd(const Matrix& M, double eps, const SvdOptions& opt) {
    if (!(eps > 0.0)) throw ConfigError("svd tolerance must be positive");
    const Eigen::Index full = std::min(M.rows(), M.cols());
    const double total = M.squaredNorm();
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Index target = std::min<Eigen::Index>(full, 10);
    for (;;) {
        const Eigen::Index l = std::min<Eigen::Index>(full, target + opt.oversample);
        Matrix Omega(M.cols(), l);
        for (Eigen::Index j = 0; j < l; ++j)
            for (Eigen::Index i = 0; i < M.cols(); ++i) Omega(i, j) = gauss(rng);
        Matrix Q = orthonormal_range(M * Omega);
        for (int it = 0; it < opt.power_iters; ++it) {
            const Matrix Z = orthonormal_range(M.transpose() * Q);
            Q = orthonormal_range(M * Z);
        }
        const Matrix B = Q.transpose() * M;
        TruncatedSvd s = exact_svd(B);
        s.U = Q * s.U;
        const int r = energy_rank(s.S, eps, total);
        const double captured = s.S.squaredNorm();
        const bool enough = total <= 0.0 || 1.0 - captured / total <= eps * eps;
        if ((enough && r < l) || l == full) return truncate(std::move(s), std::max(1, r));
        target *= 2;
    }
}

TruncatedSvd truncated_svd(const Matrix& M, double eps, const SvdOptions& opt) {
    if (!(eps > 0.0)) throw ConfigError("svd tolerance must be positive");
    if (M.size() == 0) throw NumericalError("empty snapshot matrix");
    if (!opt.deterministic) return rsvd(M, eps, opt);
    TruncatedSvd s = exact_svd(M);
    return truncate(std::move(s), std::max(1, energy_rank(s.S, eps)));
}

ReducedBasis tpod(const Matrix& U, const SparseMatrix& X, double eps, const SvdOptions& opt) {
    if (X.rows() != U.rows()) throw ConfigError("tpod: norm and snapshot sizes differ");
    Eigen::SimplicialLLT<SparseMatrix> llt(X);
    if (llt.info() != Eigen::Success) throw NumericalError("tpod: norm matrix is not positive definite");
    const SparseMatrix Lt = llt.matrixU();
    const Matrix Uc = Lt * (llt.permutationP() * U);
    const TruncatedSvd s = truncated_svd(Uc, eps, opt);
    ReducedBasis b;
    b.Phi = llt.permutationPinv() * Matrix(Lt.triangularView<Eigen::Upper>().solve(s.U));
    b.singular_values = s.S;
    b.norm = "X";
    return b;
}

ProjectionError projection_error(const Matrix& U, const Matrix& Phi, const SparseMatrix& X) {
    const Matrix XU = X * U;
    const Matrix R = U - Phi * (Phi.transpose() * XU);
    ProjectionError e;
    e.energy = (U.cwiseProduct(XU)).sum();
    e.error = (R.cwiseProduct(X * R)).sum();
    return e;
}

TTBasis ttsvd(const Matrix& U, const std::vector<int>& dims, double eps, const SvdOptions& opt) {
    if (dims.empty()) throw ConfigError("ttsvd: no spatial axes");
    Eigen::Index prod = 1;
    for (int n : dims) prod *= n;
    if (prod != U.rows()) throw ConfigError("ttsvd: split-axes shape does not match snapshot length");
    const double step = eps / std::sqrt(static_cast<double>(dims.size()));
    TTBasis tt;
    tt.dims = dims;
    Matrix cur = U;
    Eigen::Index r_prev = 1;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const Eigen::Index rows = r_prev * dims[i];
        const Eigen::Index cols = cur.size() / rows;
        const Matrix unfold = Eigen::Map<const Matrix>(cur.data(), rows, cols);
        const TruncatedSvd s = truncated_svd(unfold, step, opt);
        tt.cores.push_back(s.U);
        tt.ranks.push_back(static_cast<int>(s.U.cols()));
        cur = s.S.asDiagonal() * s.V.transpose();
        r_prev = s.U.cols();
    }
    tt.Phi = tt_contract(tt);
    return tt;
}

Matrix tt_contract(const TTBasis& tt) {
    Matrix Phi = Matrix::Ones(1, 1);
    Eigen::Index r_prev = 1;
    for (std::size_t i = 0; i < tt.cores.size(); ++i) {
        const Matrix& core = tt.cores[i];
        const Eigen::Index n = tt.dims[i], r = core.cols();
        if (core.rows() != r_prev * n) throw ConfigError("tt: rank mismatch between cores");
        Matrix next(Phi.rows() * n, r);
        for (Eigen::Index j = 0; j < n; ++j)
            next.middleRows(Phi.rows() * j, Phi.rows()) = Phi * core.middleRows(r_prev * j, r_prev);
        Phi = std::move(next);
        r_prev = r;
    }
    return Phi;
}

TTBasis tt_orthogonalize(TTBasis tt, const SparseMatrix& X) {
    if (tt.Phi.rows() != X.rows()) throw ConfigError("tt_orthogonalize: norm size mismatch");
    for (int pass = 0; pass < 2; ++pass) {
        const Matrix G = tt.Phi.transpose() * (X * tt.Phi);
        Matrix T;
        Eigen::LLT<Matrix> llt(G);
        const bool ok = llt.info() == Eigen::Success &&
                        llt.matrixL().toDenseMatrix().diagonal().minCoeff() >
                            1e-12 * llt.matrixL().toDenseMatrix().diagonal().maxCoeff();
        if (ok) {
            T = llt.matrixU().solve(Matrix::Identity(G.rows(), G.cols()));
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> es(G);
            const Vector& lam = es.eigenvalues();
            const double top = lam.maxCoeff();
            std::vector<Eigen::Index> keep;
            for (Eigen::Index k = lam.size() - 1; k >= 0; --k)
                if (lam[k] > 1e-24 * top) keep.push_back(k);
            T.resize(G.rows(), static_cast<Eigen::Index>(keep.size()));
            for (std::size_t c = 0; c < keep.size(); ++c)
                T.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
            tt.dropped += static_cast<int>(G.rows() - T.cols());
        }
        tt.Phi = tt.Phi * T;
        tt.cores.back() = tt.cores.back() * T;
        tt.ranks.back() = static_cast<int>(T.cols());
    }
    return tt;
}

void HyperReduction::factorize() {
    PtPhi.resize(static_cast<Eigen::Index>(indices.size()), basis.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) PtPhi.row(static_cast<Eigen::Index>(k)) = basis.row(indices[k]);
    Eigen::JacobiSVD<Matrix> svd(PtPhi);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || !(s[s.size() - 1] > 1e-13 * s[0])) throw NumericalError("degenerate sampling");
    lu.compute(PtPhi);
}

HyperReduction make_hyper_reduction(Matrix basis, std::vector<int> indices) {
    HyperReduction hr;
    hr.basis = std::move(basis);
    hr.indices = std::move(indices);
    hr.factorize();
    return hr;
}

HyperReduction mdeim(const Matrix& S, double eps, const SvdOptions& opt) {
    const TruncatedSvd s = truncated_svd(S, eps, opt);
    const Matrix& Phi = s.U;
    const Eigen::Index m = Phi.cols();
    if (m > Phi.rows()) throw NumericalError("mdeim: more modes than entries");
    auto argmax = [](const Vector& r) {
        Eigen::Index best = 0;
        double v = -1.0;
        for (Eigen::Index i = 0; i < r.size(); ++i)
            if (std::abs(r[i]) > v) {
                v = std::abs(r[i]);
                best = i;
            }
        return static_cast<int>(best);
    };
    std::vector<int> idx{argmax(Phi.col(0))};
    for (Eigen::Index l = 1; l < m; ++l) {
        Matrix P(l, l);
        Vector rhs(l);
        for (Eigen::Index a = 0; a < l; ++a) {
            P.row(a) = Phi.row(idx[a]).head(l);
            rhs[a] = Phi(idx[a], l);
        }
        const Vector c = P.partialPivLu().solve(rhs);
        const Vector r = Phi.col(l) - Phi.leftCols(l) * c;
        const int next = argmax(r);
        if (std::find(idx.begin(), idx.end(), next) != idx.end()) throw NumericalError("degenerate sampling");
        idx.push_back(next);
    }
    return make_hyper_reduction(Phi, std::move(idx));
}

Vector online_coefficients(const HyperReduction& hr, const Vector& sampled) {
    if (sampled.size() != hr.size())
        throw ConfigError(fmt::format("mdeim: {} sampled values for {} indices", sampled.size(), hr.size()));
    return hr.lu.solve(sampled);
}

std::vector<int> matrix_sample_cells(const SparsityPattern& pattern, const std::vector<int>& positions) {
    std::vector<char> wanted(static_cast<std::size_t>(pattern.nnz()), 0);
    for (int p : positions) wanted[static_cast<std::size_t>(p)] = 1;
    std::vector<int> out;
    for (std::size_t s = 0; s < pattern.cells.size(); ++s)
        for (int p : pattern.cell_positions[s])
            if (wanted[static_cast<std::size_t>(p)]) {
                out.push_back(pattern.cells[s]);
                break;
            }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> vector_sample_cells(const FESpace& space, const std::vector<int>& dofs) {
    std::vector<char> wanted(static_cast<std::size_t>(space.n_dofs()), 0);
    for (int d : dofs) wanted[static_cast<std::size_t>(d)] = 1;
    std::vector<int> out;
    for (int c : space.cells())
        for (int d : space.cell_dofs(c))
            if (wanted[static_cast<std::size_t>(d)]) {
                out.push_back(c);
                break;
            }
    std::sort(out.begin(), out.end());
    return out;
}

Matrix project_matrix_component(const SparsityPattern& pattern, const Vector& values, const Matrix& Phi_rows,
                                const Matrix& Phi_cols) {
    const SparseMatrix A = pattern.to_sparse(values);
    return Phi_rows.transpose() * (A * Phi_cols);
}

ReducedOperator project(const BlockLayout& layout, const std::vector<Matrix>& bases,
                        const std::vector<const SparsityPattern*>& patterns,
                        const std::vector<const HyperReduction*>& matrix_hr,
                        const std::vector<const HyperReduction*>& vector_hr) {
    if (patterns.size() != layout.matrices.size() || matrix_hr.size() != layout.matrices.size() ||
        vector_hr.size() != layout.vector_fields.size())
        throw ConfigError("project: operator counts do not match the block layout");
    ReducedOperator ro;
    for (std::size_t o = 0; o < layout.matrices.size(); ++o) {
        const auto& blk = layout.matrices[o];
        std::vector<Matrix> comps;
        for (Eigen::Index i = 0; i < matrix_hr[o]->basis.cols(); ++i)
            comps.push_back(project_matrix_component(*patterns[o], matrix_hr[o]->basis.col(i),
                                                     bases[blk.row_field], bases[blk.col_field]));
        ro.matrices.push_back(std::move(comps));
    }
    for (std::size_t o = 0; o < layout.vector_fields.size(); ++o)
        ro.vectors.push_back(bases[layout.vector_fields[o]].transpose() * vector_hr[o]->basis);
    return ro;
}

Vector solve_online(const BlockLayout& layout, const std::vector<int>& field_sizes, const ReducedOperator& ro,
                    const std::vector<Vector>& theta_matrices, const std::vector<Vector>& theta_vectors,
                    double* residual) {
    std::vector<int> offset(field_sizes.size() + 1, 0);
    for (std::size_t f = 0; f < field_sizes.size(); ++f) offset[f + 1] = offset[f] + field_sizes[f];
    const int n = offset.back();
    Matrix A = Matrix::Zero(n, n);
    Vector b = Vector::Zero(n);
    for (std::size_t o = 0; o < layout.matrices.size(); ++o) {
        const auto& blk = layout.matrices[o];
        if (theta_matrices[o].size() != static_cast<Eigen::Index>(ro.matrices[o].size()))
            throw ConfigError("solve_online: coefficient count mismatch");
        Matrix M = Matrix::Zero(field_sizes[blk.row_field], field_sizes[blk.col_field]);
        for (std::size_t i = 0; i < ro.matrices[o].size(); ++i) M += theta_matrices[o][static_cast<Eigen::Index>(i)] * ro.matrices[o][i];
        A.block(offset[blk.row_field], offset[blk.col_field], M.rows(), M.cols()) += blk.sign * M;
        if (blk.transpose_sign != 0.0)
            A.block(offset[blk.col_field], offset[blk.row_field], M.cols(), M.rows()) +=
                blk.transpose_sign * M.transpose();
    }
    for (std::size_t o = 0; o < layout.vector_fields.size(); ++o) {
        if (theta_vectors[o].size() != ro.vectors[o].cols())
            throw ConfigError("solve_online: coefficient count mismatch");
        const int f = layout.vector_fields[o];
        b.segment(offset[f], field_sizes[f]) += ro.vectors[o] * theta_vectors[o];
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) {
        Eigen::JacobiSVD<Matrix> svd(A);
        const auto& s = svd.singularValues();
        throw NumericalError(fmt::format("singular reduced system (condition estimate {:.3e})",
                                         s.size() ? s[0] / std::max(s[s.size() - 1], 1e-300) : 0.0));
    }
    Vector x = lu.solve(b);
    if (residual) *residual = (A * x - b).norm() / std::max(b.norm(), 1e-300);
    return x;
}

ReducedIntegrationAssembler::ReducedIntegrationAssembler(const CutMesh& mesh, const std::array<Matrix, 3>& modes,
                                                         int pdef, const std::vector<MatrixInput>& matrices,
                                                         const std::vector<VectorInput>& vectors) {
    std::map<int, int> slot_of;
    auto slot = [&](int c) {
        auto it = slot_of.find(c);
        if (it != slot_of.end()) return it->second;
        CellData d;
        d.quad = mesh.quad(c);
        const auto nodes = mesh.grid.cell_nodes(c, pdef);
        for (int k = 0; k < 3; ++k) {
            d.psi[k].resize(2, static_cast<Eigen::Index>(nodes.size()));
            for (std::size_t a = 0; a < nodes.size(); ++a)
                d.psi[k].col(static_cast<Eigen::Index>(a)) = modes[k].row(nodes[a]).transpose();
        }
        const int s = static_cast<int>(cell_data_.size());
        cell_data_.push_back(std::move(d));
        slot_of.emplace(c, s);
        return s;
    };

    for (const auto& in : matrices) {
        const SparsityPattern& sp = *in.op.pattern;
        std::map<int, int> sample_of;
        for (std::size_t k = 0; k < in.positions.size(); ++k) sample_of.emplace(in.positions[k], static_cast<int>(k));
        MatrixTerm term;
        term.kernel = in.op.kernel;
        term.comps_r = in.op.rows->components();
        term.comps_c = in.op.cols->components();
        term.n_samples = static_cast<int>(in.positions.size());
        for (std::size_t s = 0; s < sp.cells.size(); ++s) {
            CellTerm ct;
            const auto& pos = sp.cell_positions[s];
            for (std::size_t l = 0; l < pos.size(); ++l) {
                auto it = sample_of.find(pos[l]);
                if (it != sample_of.end()) ct.targets.push_back({static_cast<int>(l), it->second});
            }
            if (ct.targets.empty()) continue;
            const int c = sp.cells[s];
            ct.slot = slot(c);
            ct.rows = in.op.rows->expansion(c);
            ct.cols = in.op.cols->expansion(c);
            term.cells.push_back(std::move(ct));
        }
        matrices_.push_back(std::move(term));
    }
    for (const auto& in : vectors) {
        const FESpace& sp = *in.op.rows;
        std::map<int, int> sample_of;
        for (std::size_t k = 0; k < in.dofs.size(); ++k) sample_of.emplace(in.dofs[k], static_cast<int>(k));
        VectorTerm term;
        term.kernel = in.op.kernel;
        term.comps = sp.components();
        term.n_samples = static_cast<int>(in.dofs.size());
        for (int c : sp.cells()) {
            CellTerm ct;
            const auto dofs = sp.cell_dofs(c);
            for (std::size_t l = 0; l < dofs.size(); ++l) {
                auto it = sample_of.find(dofs[l]);
                if (it != sample_of.end()) ct.targets.push_back({static_cast<int>(l), it->second});
            }
            if (ct.targets.empty()) continue;
            ct.slot = slot(c);
            ct.rows = sp.expansion(c);
            term.cells.push_back(std::move(ct));
        }
        vectors_.push_back(std::move(term));
    }
    for (const auto& [c, s] : slot_of) cells_.push_back(c);
}

void ReducedIntegrationAssembler::sample(const std::array<double, 3>& coef, std::vector<Vector>& matrix_samples,
                                         std::vector<Vector>& vector_samples) const {
    std::vector<Matrix> psi(cell_data_.size());
    for (std::size_t s = 0; s < cell_data_.size(); ++s) {
        const auto& m = cell_data_[s].psi;
        psi[s] = coef[0] * m[0] + coef[1] * m[1] + coef[2] * m[2];
    }
    matrix_samples.resize(matrices_.size());
    for (std::size_t o = 0; o < matrices_.size(); ++o) {
        const MatrixTerm& t = matrices_[o];
        Vector& out = matrix_samples[o];
        out = Vector::Zero(t.n_samples);
        for (const CellTerm& ct : t.cells) {
            const Matrix Ke = t.kernel(cell_data_[ct.slot].quad, psi[ct.slot]);
            const Matrix Kc = condense(ct.rows, t.comps_r, Ke, ct.cols, t.comps_c);
            const Eigen::Index nc = Kc.cols();
            for (const auto& tg : ct.targets) out[tg.sample] += Kc(tg.local / nc, tg.local % nc);
        }
    }
    vector_samples.resize(vectors_.size());
    for (std::size_t o = 0; o < vectors_.size(); ++o) {
        const VectorTerm& t = vectors_[o];
        Vector& out = vector_samples[o];
        out = Vector::Zero(t.n_samples);
        for (const CellTerm& ct : t.cells) {
            const Vector Fe = t.kernel(cell_data_[ct.slot].quad, psi[ct.slot]);
            const Vector Fc = condense(ct.rows, t.comps, Fe);
            for (const auto& tg : ct.targets) out[tg.sample] += Fc[tg.local];
        }
    }
}

std::size_t ReducedIntegrationAssembler::footprint() const {
    std::size_t m = cells_.size();
    auto upd = [&](std::size_t v) { m = std::max(m, v); };
    for (const auto& d : cell_data_) {
        upd(d.quad.bulk.size());
        upd(d.quad.bpoints.size());
        for (const auto& p : d.psi) upd(static_cast<std::size_t>(p.size()));
    }
    for (const auto& t : matrices_) {
        upd(t.cells.size());
        for (const auto& ct : t.cells) {
            upd(ct.targets.size());
            upd(static_cast<std::size_t>(ct.rows.C.size()));
            upd(static_cast<std::size_t>(ct.cols.C.size()));
        }
    }
    for (const auto& t : vectors_) {
        upd(t.cells.size());
        for (const auto& ct : t.cells) upd(static_cast<std::size_t>(ct.rows.C.size()));
    }
    return m;
}

}  // namespace romcut
