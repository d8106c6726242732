#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "romcut/rom.hpp"
#include "romcut/saddle.hpp"

namespace romcut {

struct KMeansResult {
    Matrix centroids;  // k x dim
    std::vector<int> assignment;
    double distortion = 0.0;
    int iterations = 0;
};

Matrix to_matrix(const std::vector<ParameterPoint>& points);

/// k-means++ seeding (first centre uniform, then D^2 sampling).
Matrix kmeanspp_init(const Matrix& points, int k, std::uint64_t seed);
/// Lloyd iterations from the given centres; empty clusters re-seeded to the farthest point.
KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iters);
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);
/// Nearest centroid by Euclidean distance, ties to the lowest index.
int nearest_centroid(const Matrix& centroids, const ParameterPoint& mu);

/// One FOM evaluation: solution fields and vectorized operators.
struct FomSnapshot {
    std::vector<Vector> fields;    // u (and p)
    std::vector<Vector> matrices;  // operator values over their patterns
    std::vector<Vector> vectors;   // right-hand sides
};

/// Split-axes description of a scalar field extended to the background grid.
struct TensorLayout {
    std::vector<int> dims;   // first axis fastest
    SparseMatrix Xhat;       // background norm
    std::vector<int> rows;   // background row of every free dof
};

/// Problem-specific hooks used by the offline and online phases.
class FomDriver {
public:
    virtual ~FomDriver() = default;

    [[nodiscard]] virtual BlockLayout layout() const = 0;
    [[nodiscard]] virtual int n_fields() const = 0;
    [[nodiscard]] virtual FomSnapshot solve(const ParameterPoint& mu) const = 0;
    /// Reference (mu-independent) norm of a field.
    [[nodiscard]] virtual const SparseMatrix& norm(int field) const = 0;
    [[nodiscard]] virtual std::vector<const SparsityPattern*> patterns() const = 0;
    /// Bulk reference coupling for supremizer enrichment (saddle problems only).
    [[nodiscard]] virtual const SparseMatrix* coupling() const { return nullptr; }
    /// Background tensor layout and extension (TT-RB only).
    [[nodiscard]] virtual const TensorLayout* tensor_layout() const { return nullptr; }
    [[nodiscard]] virtual Vector extend(const Vector& u) const;
    [[nodiscard]] virtual std::array<double, 3> deformation(const ParameterPoint& mu) const = 0;
    [[nodiscard]] virtual std::unique_ptr<OnlineAssembler> reduced_assembler(
        const std::vector<std::vector<int>>& matrix_indices, const std::vector<std::vector<int>>& vector_indices) const = 0;
};

enum class Method { TPOD, TTRB };

struct OfflineOptions {
    int n_clusters = 1;
    int n_hyper_clusters = 1;
    double eps = 1e-3;
    double hyper_eps = -1.0;  // default eps / 100
    Method method = Method::TPOD;
    SvdOptions svd;
    std::uint64_t seed = 0;
    int max_iters = 100;
    bool enrich = true;
    SupremizerKind supremizer = SupremizerKind::Cholesky;

    [[nodiscard]] double hyper_tolerance() const { return hyper_eps > 0.0 ? hyper_eps : eps / 100.0; }
};

/// Training snapshots in parameter order.
struct SnapshotSet {
    std::vector<ParameterPoint> params;
    std::vector<Matrix> fields;    // [field] N x N_mu
    std::vector<Matrix> matrices;  // [op] nnz x N_mu
    std::vector<Matrix> vectors;   // [op] N x N_mu
};

SnapshotSet generate_snapshots(const FomDriver& driver, const std::vector<ParameterPoint>& params);

struct ClusterDiagnostics {
    std::vector<ProjectionError> projection;  // per field, in the compression norm
    std::vector<int> tt_ranks;
    double tt_tolerance = 0.0;  // per-step tolerance actually used
    int supremizers_dropped = 0;
    double sigma_min = -1.0;        // enriched reduced coupling (saddle)
    double sigma_min_plain = -1.0;  // before enrichment
};

struct ClusterModel {
    BlockLayout layout;
    Matrix alpha;  // subspace centroids
    Matrix beta;   // hyper-reduction centroids
    std::vector<int> subspace_of;
    std::vector<int> hyper_of;
    std::vector<std::vector<Matrix>> bases;                 // [j][field]
    std::vector<std::vector<HyperReduction>> matrix_hr;     // [k][op]
    std::vector<std::vector<HyperReduction>> vector_hr;     // [k][op]
    std::vector<std::vector<ReducedOperator>> projections;  // [j][k]
    std::vector<ClusterDiagnostics> diagnostics;            // [j]

    [[nodiscard]] int n_clusters() const { return static_cast<int>(bases.size()); }
    [[nodiscard]] int n_hyper_clusters() const { return static_cast<int>(matrix_hr.size()); }
    [[nodiscard]] std::vector<int> field_sizes(int j) const;
};

ClusterModel offline(const SnapshotSet& snaps, const FomDriver& driver, const OfflineOptions& opt);
/// Single subspace and hyper-reduction over all snapshots, without clustering.
ClusterModel global_offline(const SnapshotSet& snaps, const FomDriver& driver, const OfflineOptions& opt);

/// Reduced-integration assemblers, one per hyper-reduction cluster.
std::vector<std::unique_ptr<OnlineAssembler>> online_assemblers(const ClusterModel& model, const FomDriver& driver);

struct OnlineResult {
    int j = 0;
    int k = 0;
    std::vector<Vector> coefficients;  // per field
    double residual = 0.0;
};

/// Alg. ONLINE: dispatch, sample, interpolate, solve. Reads only centroids, the
/// sampled-entry factorizations and the projected components of (j, k).
OnlineResult online(const ParameterPoint& mu, const std::array<double, 3>& deformation, const ClusterModel& model,
                    const std::vector<std::unique_ptr<OnlineAssembler>>& assemblers);

/// Phi_j x per field.
std::vector<Vector> reconstruct(const ClusterModel& model, const OnlineResult& r);

}  // namespace romcut
