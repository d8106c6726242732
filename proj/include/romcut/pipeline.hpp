#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "romcut/config.hpp"
#include "romcut/fem.hpp"
#include "romcut/localization.hpp"

namespace romcut {

/// Radical-inverse Halton points (bases 2, 3, 5, 7, 11, 13) mapped into the box.
std::vector<ParameterPoint> halton(int count, const ParameterBox& box, int skip = 20);
/// Seeded uniform samples of the box.
std::vector<ParameterPoint> uniform_samples(int count, const ParameterBox& box, std::uint64_t seed);

/// A benchmark FOM on its reference mesh, with error norms and output hooks.
class BenchmarkDriver : public FomDriver {
public:
    [[nodiscard]] virtual const CutMesh& mesh() const = 0;
    [[nodiscard]] virtual DeformationField deformation_field(const ParameterPoint& mu) const = 0;
    /// X(mu) for the velocity / scalar field, Y(mu) for the pressure.
    [[nodiscard]] virtual std::vector<SparseMatrix> error_norms(const ParameterPoint& mu) const = 0;
    [[nodiscard]] virtual std::vector<std::string> field_names() const = 0;
    [[nodiscard]] virtual int fom_dimension() const = 0;
    [[nodiscard]] int n_active_cells() const { return static_cast<int>(mesh().cls.active_cells.size()); }
    /// Legacy VTK file of the deformed active mesh with the given fields.
    virtual void write_vtk(const std::filesystem::path& file, const ParameterPoint& mu,
                           const std::vector<std::pair<std::string, std::vector<Vector>>>& fields) const = 0;
    /// Problem-specific map diagnostics for the given parameters (CSV).
    virtual void write_diagnostics(const std::filesystem::path& file, const std::vector<ParameterPoint>& params) const = 0;
};

std::unique_ptr<BenchmarkDriver> make_driver(const Config& c);

/// Concurrent snapshot loop (worker count from the config); same result as generate_snapshots.
SnapshotSet generate_snapshots(const FomDriver& driver, const std::vector<ParameterPoint>& params, int workers);

/// Relative errors per field in the driver's error norms.
std::vector<double> relative_errors(const std::vector<SparseMatrix>& norms, const std::vector<Vector>& approx,
                                    const std::vector<Vector>& exact);

struct FomRun {
    ParameterPoint mu;
    int dofs = 0;
    int active_cells = 0;
    double seconds = 0.0;
    std::vector<double> norms;  // per field, error norm of the solution
};
FomRun run_fom(const Config& c, const std::optional<ParameterPoint>& mu);

struct OfflineRun {
    std::vector<ClusterModel> models;  // per eps
    double snapshot_seconds = 0.0;
    std::vector<double> offline_seconds;
};
/// Snapshots, per-eps models, offline.csv with the bound replay, manifest with the config hash.
OfflineRun run_offline(const Config& c);

/// One online parameter at one tolerance.
struct Metrics {
    double eps = 0.0;
    int sample = 0;
    ParameterPoint mu;
    int j = 0;
    int k = 0;
    int rom_dim = 0;
    int fom_dim = 0;
    std::vector<double> errors;  // E^u (and E^p)
    double residual = 0.0;
    double cell_fraction = 0.0;
    double fom_seconds = 0.0;
    double rom_seconds = 0.0;
    std::size_t fom_bytes = 0;
    std::size_t rom_bytes = 0;
};

/// Column order of metrics.csv (deterministic quantities only).
const std::vector<std::string>& metrics_columns();
/// Column order of timings.csv.
const std::vector<std::string>& timing_columns();

/// Requires the manifest's config hash to match. Writes metrics.csv, timings.csv, report.txt, VTK.
std::vector<Metrics> run_online(const Config& c, const std::optional<ParameterPoint>& mu);

/// Per-eps table (E/eps, RF, cell fraction, timings) from an output directory.
std::string report(const std::filesystem::path& dir);

ParameterPoint parse_mu(const std::string& text);

}  // namespace romcut
