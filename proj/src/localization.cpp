#include "romcut/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

namespace romcut {

Matrix to_matrix(const std::vector<ParameterPoint>& points) {
    if (points.empty()) return {};
    Matrix M(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(points[0].size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != points[0].size()) throw ConfigError("parameter points differ in dimension");
        for (std::size_t d = 0; d < points[i].size(); ++d)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = points[i][d];
    }
    return M;
}

namespace {

int nearest_row(const Matrix& centroids, const Eigen::RowVectorXd& x, double* dist2 = nullptr) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < bd) {
            bd = d;
            best = static_cast<int>(c);
        }
    }
    if (dist2) *dist2 = bd;
    return best;
}

void check_k(const Matrix& points, int k) {
    if (k <= 0) throw ConfigError("number of clusters must be positive");
    if (k > points.rows())
        throw ConfigError(fmt::format("{} clusters requested for {} points", k, points.rows()));
}

}  // namespace

Matrix kmeanspp_init(const Matrix& points, int k, std::uint64_t seed) {
    check_k(points, k);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Eigen::Index n = points.rows();
    Matrix C(k, points.cols());
    const auto first = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(unif(rng) * static_cast<double>(n)));
    C.row(0) = points.row(first);
    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - C.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double r = unif(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        C.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - C.row(c)).squaredNorm());
    }
    return C;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iters) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    KMeansResult r;
    r.assignment.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = nearest_row(centroids, points.row(i));
            if (a != r.assignment[static_cast<std::size_t>(i)]) changed = true;
            r.assignment[static_cast<std::size_t>(i)] = a;
        }
        r.iterations = it + 1;
        if (!changed && it > 0) break;
        Matrix sum = Matrix::Zero(k, points.cols());
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum.row(r.assignment[static_cast<std::size_t>(i)]) += points.row(i);
            ++count[static_cast<std::size_t>(r.assignment[static_cast<std::size_t>(i)])];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
                continue;
            }
            Eigen::Index far = 0;
            double fd = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = (points.row(i) - centroids.row(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            centroids.row(c) = points.row(far);
            r.assignment[static_cast<std::size_t>(far)] = static_cast<int>(c);
        }
    }
    r.centroids = std::move(centroids);
    r.distortion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        r.distortion += (points.row(i) - r.centroids.row(r.assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return r;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
    check_k(points, k);
    if (max_iters < 1) throw ConfigError("k-means needs at least one iteration");
    return lloyd(points, kmeanspp_init(points, k, seed), max_iters);
}

int nearest_centroid(const Matrix& centroids, const ParameterPoint& mu) {
    if (static_cast<Eigen::Index>(mu.size()) != centroids.cols())
        throw ConfigError(fmt::format("parameter of dimension {} for centroids of dimension {}", mu.size(),
                                      centroids.cols()));
    return nearest_row(centroids, Eigen::Map<const Eigen::RowVectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())));
}

Vector FomDriver::extend(const Vector& u) const { return u; }

SnapshotSet generate_snapshots(const FomDriver& driver, const std::vector<ParameterPoint>& params) {
    if (params.empty()) throw ConfigError("no training parameters");
    SnapshotSet s;
    s.params = params;
    const auto n = static_cast<Eigen::Index>(params.size());
    for (Eigen::Index q = 0; q < n; ++q) {
        FomSnapshot f;
        try {
            f = driver.solve(params[static_cast<std::size_t>(q)]);
        } catch (const Error& e) {
            const auto& mu = params[static_cast<std::size_t>(q)];
            throw NumericalError(fmt::format("snapshot at mu = ({}): {}", fmt::join(mu, ", "), e.what()));
        }
        auto put = [&](std::vector<Matrix>& dst, const std::vector<Vector>& src) {
            if (q == 0)
                for (const auto& v : src) dst.emplace_back(v.size(), n);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i].col(q) = src[i];
        };
        put(s.fields, f.fields);
        put(s.matrices, f.matrices);
        put(s.vectors, f.vectors);
    }
    return s;
}

std::vector<int> ClusterModel::field_sizes(int j) const {
    std::vector<int> out;
    for (const auto& b : bases[static_cast<std::size_t>(j)]) out.push_back(static_cast<int>(b.cols()));
    return out;
}

namespace {

Matrix select_columns(const Matrix& M, const std::vector<int>& cols) {
    Matrix out(M.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = M.col(cols[i]);
    return out;
}

std::vector<std::vector<int>> members(const std::vector<int>& assignment, int k, const char* what) {
    std::vector<std::vector<int>> m(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < assignment.size(); ++i) m[static_cast<std::size_t>(assignment[i])].push_back(static_cast<int>(i));
    for (int c = 0; c < k; ++c)
        if (m[static_cast<std::size_t>(c)].empty()) throw NumericalError(fmt::format("{} cluster {} has no snapshots", what, c));
    return m;
}

Matrix column_mean(const Matrix& points) {
    Matrix c = Matrix::Zero(1, points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i) c.row(0) += points.row(i);
    return c / static_cast<double>(points.rows());
}

std::vector<Matrix> compress(const SnapshotSet& snaps, const std::vector<int>& cols, const FomDriver& driver,
                             const OfflineOptions& opt, ClusterDiagnostics& diag) {
    std::vector<Matrix> bases;
    for (int f = 0; f < driver.n_fields(); ++f) {
        const Matrix U = select_columns(snaps.fields[static_cast<std::size_t>(f)], cols);
        if (opt.method == Method::TTRB && f == 0) {
            const TensorLayout* tl = driver.tensor_layout();
            if (!tl) throw ConfigError("method ttrb needs a background tensor layout");
            Matrix Uh(tl->Xhat.rows(), U.cols());
            for (Eigen::Index q = 0; q < U.cols(); ++q) Uh.col(q) = driver.extend(U.col(q));
            const double d = static_cast<double>(tl->dims.size());
            double eps = opt.eps;
            TTBasis tt;
            ProjectionError pe;
            for (int attempt = 0;; ++attempt) {
                tt = tt_orthogonalize(ttsvd(Uh, tl->dims, eps, opt.svd), tl->Xhat);
                pe = projection_error(Uh, tt.Phi, tl->Xhat);
                if (pe.within(opt.eps, 1.5 * d) || attempt == 30) break;
                eps *= 0.5;
            }
            if (eps != opt.eps)
                spdlog::debug("tt-svd tolerance tightened from {:.2e} to {:.2e} to meet the X-hat bound", opt.eps, eps);
            diag.tt_ranks = tt.ranks;
            diag.tt_tolerance = eps;
            diag.projection.push_back(pe);
            Matrix Phi(U.rows(), tt.Phi.cols());
            for (std::size_t r = 0; r < tl->rows.size(); ++r) Phi.row(static_cast<Eigen::Index>(r)) = tt.Phi.row(tl->rows[r]);
            bases.push_back(std::move(Phi));
            continue;
        }
        const SparseMatrix& X = driver.norm(f);
        ReducedBasis b = tpod(U, X, opt.eps, opt.svd);
        diag.projection.push_back(projection_error(U, b.Phi, X));
        bases.push_back(std::move(b.Phi));
    }
    if (const SparseMatrix* B = driver.coupling(); B && bases.size() == 2) {
        diag.sigma_min_plain = reduced_coupling_sigma_min(bases[1], *B, bases[0]);
        diag.sigma_min = diag.sigma_min_plain;
        if (opt.enrich) {
            SupremizerSet e = enrich(bases[0], bases[1], driver.norm(0), *B, opt.supremizer);
            bases[0] = std::move(e.Phi_u);
            diag.supremizers_dropped = e.dropped;
            diag.sigma_min = e.sigma_min;
        }
    }
    return bases;
}

std::vector<HyperReduction> hyper_reduce(const std::vector<Matrix>& snaps, const std::vector<int>& cols,
                                         const OfflineOptions& opt) {
    std::vector<HyperReduction> out;
    for (const auto& S : snaps) out.push_back(mdeim(select_columns(S, cols), opt.hyper_tolerance(), opt.svd));
    return out;
}

template <class T>
std::vector<const T*> pointers(const std::vector<T>& v) {
    std::vector<const T*> out;
    for (const auto& x : v) out.push_back(&x);
    return out;
}

ClusterModel build(const SnapshotSet& snaps, const FomDriver& driver, const OfflineOptions& opt, Matrix alpha,
                   std::vector<int> subspace_of, Matrix beta, std::vector<int> hyper_of) {
    if (!(opt.eps > 0.0 && opt.eps < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
    ClusterModel m;
    m.layout = driver.layout();
    m.alpha = std::move(alpha);
    m.beta = std::move(beta);
    m.subspace_of = std::move(subspace_of);
    m.hyper_of = std::move(hyper_of);
    const auto sub = members(m.subspace_of, static_cast<int>(m.alpha.rows()), "subspace");
    const auto hyp = members(m.hyper_of, static_cast<int>(m.beta.rows()), "hyper-reduction");
    for (const auto& cols : sub) {
        ClusterDiagnostics d;
        m.bases.push_back(compress(snaps, cols, driver, opt, d));
        m.diagnostics.push_back(std::move(d));
    }
    for (const auto& cols : hyp) {
        m.matrix_hr.push_back(hyper_reduce(snaps.matrices, cols, opt));
        m.vector_hr.push_back(hyper_reduce(snaps.vectors, cols, opt));
    }
    const auto patterns = driver.patterns();
    for (std::size_t j = 0; j < m.bases.size(); ++j) {
        std::vector<ReducedOperator> row;
        for (std::size_t k = 0; k < m.matrix_hr.size(); ++k)
            row.push_back(project(m.layout, m.bases[j], patterns, pointers(m.matrix_hr[k]), pointers(m.vector_hr[k])));
        m.projections.push_back(std::move(row));
    }
    return m;
}

}  // namespace

ClusterModel offline(const SnapshotSet& snaps, const FomDriver& driver, const OfflineOptions& opt) {
    const Matrix P = to_matrix(snaps.params);
    auto a = kmeans(P, opt.n_clusters, opt.seed, opt.max_iters);
    auto b = kmeans(P, opt.n_hyper_clusters, opt.seed + 1, opt.max_iters);
    return build(snaps, driver, opt, std::move(a.centroids), std::move(a.assignment), std::move(b.centroids),
                 std::move(b.assignment));
}

ClusterModel global_offline(const SnapshotSet& snaps, const FomDriver& driver, const OfflineOptions& opt) {
    const Matrix P = to_matrix(snaps.params);
    const std::vector<int> all(snaps.params.size(), 0);
    return build(snaps, driver, opt, column_mean(P), all, column_mean(P), all);
}

std::vector<std::unique_ptr<OnlineAssembler>> online_assemblers(const ClusterModel& model, const FomDriver& driver) {
    std::vector<std::unique_ptr<OnlineAssembler>> out;
    for (int k = 0; k < model.n_hyper_clusters(); ++k) {
        std::vector<std::vector<int>> mi, vi;
        for (const auto& hr : model.matrix_hr[static_cast<std::size_t>(k)]) mi.push_back(hr.indices);
        for (const auto& hr : model.vector_hr[static_cast<std::size_t>(k)]) vi.push_back(hr.indices);
        out.push_back(driver.reduced_assembler(mi, vi));
    }
    return out;
}

OnlineResult online(const ParameterPoint& mu, const std::array<double, 3>& deformation, const ClusterModel& model,
                    const std::vector<std::unique_ptr<OnlineAssembler>>& assemblers) {
    OnlineResult r;
    r.j = nearest_centroid(model.alpha, mu);
    r.k = nearest_centroid(model.beta, mu);
    const auto k = static_cast<std::size_t>(r.k);
    if (k >= assemblers.size() || !assemblers[k]) throw ConfigError("missing reduced assembler");
    std::vector<Vector> ms, vs;
    assemblers[k]->sample(deformation, ms, vs);
    std::vector<Vector> ta, tl;
    for (std::size_t o = 0; o < ms.size(); ++o) ta.push_back(online_coefficients(model.matrix_hr[k][o], ms[o]));
    for (std::size_t o = 0; o < vs.size(); ++o) tl.push_back(online_coefficients(model.vector_hr[k][o], vs[o]));
    const auto sizes = model.field_sizes(r.j);
    Vector x;
    try {
        x = solve_online(model.layout, sizes, model.projections[static_cast<std::size_t>(r.j)][k], ta, tl,
                         &r.residual);
    } catch (const NumericalError& e) {
        throw NumericalError(fmt::format("cluster pair ({}, {}): {}", r.j, r.k, e.what()));
    }
    Eigen::Index off = 0;
    for (int n : sizes) {
        r.coefficients.push_back(x.segment(off, n));
        off += n;
    }
    return r;
}

std::vector<Vector> reconstruct(const ClusterModel& model, const OnlineResult& r) {
    std::vector<Vector> out;
    const auto& b = model.bases[static_cast<std::size_t>(r.j)];
    for (std::size_t f = 0; f < b.size(); ++f) out.push_back(b[f] * r.coefficients[f]);
    return out;
}

}  // namespace romcut
