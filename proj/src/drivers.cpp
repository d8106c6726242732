#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "romcut/deformation.hpp"
#include "romcut/pipeline.hpp"
#include "romcut/saddle.hpp"

namespace fs = std::filesystem;

namespace romcut {

namespace {

double radical_inverse(long long i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

}  // namespace

std::vector<ParameterPoint> halton(int count, const ParameterBox& box, int skip) {
    static constexpr int kBases[] = {2, 3, 5, 7, 11, 13};
    const std::size_t d = box.dim();
    if (d == 0 || d > 6) throw ConfigError(fmt::format("halton: dimension {} not in 1..6", d));
    if (count < 0 || skip < 0) throw ConfigError("halton: negative count or skip");
    std::vector<ParameterPoint> out;
    for (int q = 0; q < count; ++q) {
        ParameterPoint mu(d);
        for (std::size_t a = 0; a < d; ++a) {
            const double t = radical_inverse(static_cast<long long>(skip) + q + 1, kBases[a]);
            mu[a] = box.lower[a] + t * (box.upper[a] - box.lower[a]);
        }
        out.push_back(std::move(mu));
    }
    return out;
}

std::vector<ParameterPoint> uniform_samples(int count, const ParameterBox& box, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ParameterPoint> out;
    for (int q = 0; q < count; ++q) {
        ParameterPoint mu(box.dim());
        for (std::size_t a = 0; a < box.dim(); ++a) mu[a] = box.lower[a] + u(rng) * (box.upper[a] - box.lower[a]);
        out.push_back(std::move(mu));
    }
    return out;
}

SnapshotSet generate_snapshots(const FomDriver& driver, const std::vector<ParameterPoint>& params, int workers) {
    if (workers <= 1 || params.size() < 2) return generate_snapshots(driver, params);
    const std::size_t n = params.size();
    std::vector<FomSnapshot> res(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t q = next++; q < n; q = next++) {
            try {
                res[q] = driver.solve(params[q]);
            } catch (...) {
                errs[q] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(workers, static_cast<int>(n)); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (std::size_t q = 0; q < n; ++q) {
        if (!errs[q]) continue;
        try {
            std::rethrow_exception(errs[q]);
        } catch (const Error& e) {
            throw NumericalError(fmt::format("snapshot at mu = ({}): {}", fmt::join(params[q], ", "), e.what()));
        }
    }
    SnapshotSet s;
    s.params = params;
    const auto cols = static_cast<Eigen::Index>(n);
    auto put = [&](std::vector<Matrix>& dst, const std::vector<Vector>& src, Eigen::Index q) {
        if (q == 0)
            for (const auto& v : src) dst.emplace_back(v.size(), cols);
        for (std::size_t i = 0; i < src.size(); ++i) dst[i].col(q) = src[i];
    };
    for (Eigen::Index q = 0; q < cols; ++q) {
        const auto& f = res[static_cast<std::size_t>(q)];
        put(s.fields, f.fields, q);
        put(s.matrices, f.matrices, q);
        put(s.vectors, f.vectors, q);
    }
    return s;
}

std::vector<double> relative_errors(const std::vector<SparseMatrix>& norms, const std::vector<Vector>& approx,
                                    const std::vector<Vector>& exact) {
    if (norms.size() != approx.size() || approx.size() != exact.size())
        throw ConfigError("relative_errors: field count mismatch");
    std::vector<double> out;
    for (std::size_t f = 0; f < norms.size(); ++f) {
        const Vector d = approx[f] - exact[f];
        const double den = std::sqrt(exact[f].dot(norms[f] * exact[f]));
        const double num = std::sqrt(std::max(0.0, d.dot(norms[f] * d)));
        out.push_back(den > 0.0 ? num / den : num);
    }
    return out;
}

namespace {

/// Q2 background nodal values of a Q1 field (bilinear midpoints).
Vector q1_to_q2(const BackgroundGrid& grid, const Vector& v1) {
    const int n1 = grid.nodes_per_axis(0, 1), n2 = grid.nodes_per_axis(0, 2), m2 = grid.nodes_per_axis(1, 2);
    Vector out(static_cast<Eigen::Index>(n2) * m2);
    for (int J = 0; J < m2; ++J)
        for (int I = 0; I < n2; ++I) {
            double s = 0.0;
            const int i0 = I / 2, i1 = (I + 1) / 2, j0 = J / 2, j1 = (J + 1) / 2;
            s += v1[i0 + n1 * j0] + v1[i1 + n1 * j0] + v1[i0 + n1 * j1] + v1[i1 + n1 * j1];
            out[I + n2 * J] = 0.25 * s;
        }
    return out;
}

struct VtkField {
    std::string name;
    Matrix values;  // n_nodes x (1 or 2)
};

void write_vtk_file(const fs::path& file, const CutMesh& mesh, const DeformationField& def,
                    const std::vector<VtkField>& fields) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", file.string()));
    const auto& grid = mesh.grid;
    const int nn = grid.n_nodes(2), nx = grid.nodes_per_axis(0, 2);
    out << "# vtk DataFile Version 3.0\nromcut\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nn << " double\n";
    for (int n = 0; n < nn; ++n) {
        const Point x = grid.node(n, 2) + def.nodal().row(n).transpose();
        out << fmt::format("{} {} 0\n", x.x(), x.y());
    }
    const auto& act = mesh.cls.active_cells;
    out << "CELLS " << 4 * act.size() << ' ' << 20 * act.size() << '\n';
    for (int c : act) {
        const auto [i, j] = grid.cell_ij(c);
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const int n0 = (2 * i + a) + nx * (2 * j + b);
                out << fmt::format("4 {} {} {} {}\n", n0, n0 + 1, n0 + 1 + nx, n0 + nx);
            }
    }
    out << "CELL_TYPES " << 4 * act.size() << '\n';
    for (std::size_t k = 0; k < 4 * act.size(); ++k) out << "9\n";
    out << "CELL_DATA " << 4 * act.size() << "\nSCALARS cut int 1\nLOOKUP_TABLE default\n";
    for (int c : act)
        for (int k = 0; k < 4; ++k) out << (mesh.cls.labels[c] == CellLabel::Cut ? 1 : 0) << '\n';
    out << "POINT_DATA " << nn << '\n';
    for (const auto& f : fields) {
        if (f.values.cols() == 1) {
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (int n = 0; n < nn; ++n) out << fmt::format("{}\n", f.values(n, 0));
        } else {
            out << "VECTORS " << f.name << " double\n";
            for (int n = 0; n < nn; ++n) out << fmt::format("{} {} 0\n", f.values(n, 0), f.values(n, 1));
        }
    }
}

std::array<double, 3> jacobian_row(const DeformationField& def, const CutMesh& mesh) {
    const auto samples = quadrature_samples(mesh);
    const auto b = jacobian_bounds(def, samples);
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& [cell, x] : samples) dmin = std::min(dmin, def.at(cell, x).detJ);
    return {b.C1, b.Cd, dmin};
}

ElasticMaterial material(const Config& c) { return {c.young, c.poisson_ratio, c.stiffening}; }

BackgroundGrid grid_of(const Config& c) { return BackgroundGrid::box(c.box_lo, c.box_hi, c.nx, c.ny); }

class PoissonDriver final : public BenchmarkDriver {
public:
    explicit PoissonDriver(const Config& c)
        : mesh_(build_cut_mesh(grid_of(c), LevelSet::box_minus_ball(Point(c.mu_ref[0], c.mu_ref[0]), c.mu_ref[1]), 2)),
          agg_(aggregate(mesh_.cls, mesh_.grid, 2)),
          space_(FESpace::aggregated(mesh_.grid, mesh_.cls, agg_, 2, 1)),
          pattern_(std::make_shared<SparsityPattern>(SparsityPattern::build(space_, space_, space_.cells()))),
          solver_(mesh_, 2, material(c)),
          family_(solver_, mesh_.grid, Point(c.mu_ref[0], c.mu_ref[0]), c.mu_ref[1]),
          tau_(nitsche_tau(c.eta, mesh_.grid)),
          extension_(mesh_, space_) {
        data_.f = [](const Point& x) { return 2.0 * x.x() * x.y(); };
        A_ = {&space_, &space_, pattern_, laplace_kernel(2, 2, 1, tau_, data_.dirichlet, true)};
        l_ = {&space_, poisson_rhs_kernel(2, 2, tau_, data_)};
        X_ = assemble_norm(mesh_, space_, DeformationField::zero(mesh_.grid, 2), NormKind::XRef, data_.dirichlet, tau_)
                 .matrix;
        tensor_.dims = {mesh_.grid.nodes_per_axis(0, 2), mesh_.grid.nodes_per_axis(1, 2)};
        tensor_.Xhat = assemble_background_norm(mesh_.grid, 2).matrix;
        tensor_.rows = space_.free_nodes();
    }

    [[nodiscard]] BlockLayout layout() const override { return {{{0, 0, 1.0, 0.0}}, {0}}; }
    [[nodiscard]] int n_fields() const override { return 1; }

    [[nodiscard]] FomSnapshot solve(const ParameterPoint& mu) const override {
        const auto def = deformation_field(mu);
        check_bijective(def, mesh_);
        FomSnapshot s;
        s.matrices.push_back(assemble_values(mesh_, A_, def));
        s.vectors.push_back(assemble_vector(mesh_, l_, def));
        s.fields.push_back(solve_fom(pattern_->to_sparse(s.matrices[0]), s.vectors[0]));
        return s;
    }

    [[nodiscard]] const SparseMatrix& norm(int) const override { return X_; }
    [[nodiscard]] std::vector<const SparsityPattern*> patterns() const override { return {pattern_.get()}; }
    [[nodiscard]] const TensorLayout* tensor_layout() const override { return &tensor_; }
    [[nodiscard]] Vector extend(const Vector& u) const override { return extension_.extend(u); }

    [[nodiscard]] std::array<double, 3> deformation(const ParameterPoint& mu) const override {
        if (mu.size() != 2) throw ConfigError("poisson parameters are (centre coordinate, radius)");
        return family_.coefficients(Point(mu[0], mu[0]), mu[1]);
    }

    [[nodiscard]] std::unique_ptr<OnlineAssembler> reduced_assembler(
        const std::vector<std::vector<int>>& mi, const std::vector<std::vector<int>>& vi) const override {
        return std::make_unique<ReducedIntegrationAssembler>(
            mesh_, family_.modes(), 2, std::vector<ReducedIntegrationAssembler::MatrixInput>{{A_, mi.at(0)}},
            std::vector<ReducedIntegrationAssembler::VectorInput>{{l_, vi.at(0)}});
    }

    [[nodiscard]] const CutMesh& mesh() const override { return mesh_; }
    [[nodiscard]] DeformationField deformation_field(const ParameterPoint& mu) const override {
        return family_.field(deformation(mu));
    }
    [[nodiscard]] std::vector<SparseMatrix> error_norms(const ParameterPoint& mu) const override {
        return {assemble_norm(mesh_, space_, deformation_field(mu), NormKind::XMu, data_.dirichlet, tau_).matrix};
    }
    [[nodiscard]] std::vector<std::string> field_names() const override { return {"u"}; }
    [[nodiscard]] int fom_dimension() const override { return space_.n_dofs(); }

    void write_vtk(const fs::path& file, const ParameterPoint& mu,
                   const std::vector<std::pair<std::string, std::vector<Vector>>>& fields) const override {
        std::vector<VtkField> vf;
        for (const auto& [label, vals] : fields) vf.push_back({label + "_u", space_.nodal_values(vals.at(0))});
        write_vtk_file(file, mesh_, deformation_field(mu), vf);
    }

    void write_diagnostics(const fs::path& file, const std::vector<ParameterPoint>& params) const override {
        std::ofstream out(file);
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", file.string()));
        out << "mu1,mu2,C1,Cd,min_detJ\n";
        for (const auto& mu : params) {
            const auto r = jacobian_row(deformation_field(mu), mesh_);
            out << fmt::format("{},{},{},{},{}\n", mu[0], mu[1], r[0], r[1], r[2]);
        }
    }

private:
    CutMesh mesh_;
    AggregationMap agg_;
    FESpace space_;
    std::shared_ptr<const SparsityPattern> pattern_;
    ElasticDeformationSolver solver_;
    AffineHoleDeformation family_;
    PoissonData data_;
    double tau_;
    HarmonicExtension extension_;
    MatrixOperator A_;
    VectorOperator l_;
    SparseMatrix X_;
    TensorLayout tensor_;
};

StokesData channel_data(const Config& c) {
    StokesData d;
    const double x0 = c.box_lo.x(), y0 = c.box_lo.y(), y1 = c.box_hi.y();
    const double tol = 1e-9 * (c.box_hi - c.box_lo).norm();
    d.u_D = [=](const Point& x) {
        if (std::abs(x.x() - x0) > tol) return Point(0.0, 0.0);
        return Point((x.y() - y0) * (y1 - x.y()), 0.0);
    };
    return d;
}

class StokesDriver final : public BenchmarkDriver {
public:
    explicit StokesDriver(const Config& c)
        : radius_(c.radius),
          s_(StokesSpaces::build(grid_of(c), LevelSet::box_minus_ball(Point(c.mu_ref[0], c.mu_ref[1]), c.radius))),
          solver_(s_.mesh, 2, material(c)),
          family_(solver_, s_.mesh.grid, Point(c.mu_ref[0], c.mu_ref[1]), c.radius),
          data_(channel_data(c)),
          eta_(c.eta),
          ops_(stokes_operators(s_, 2, data_, nitsche_tau(c.eta, s_.mesh.grid))) {
        const auto zero = DeformationField::zero(s_.mesh.grid, 2);
        const double tau = nitsche_tau(c.eta, s_.mesh.grid);
        X_ = assemble_norm(s_.mesh, s_.velocity, zero, NormKind::XRef, data_.dirichlet, tau).matrix;
        Y_ = assemble_norm(s_.mesh, s_.pressure, zero, NormKind::Y, data_.dirichlet, tau).matrix;
        B_ = reference_coupling_bulk(s_);
        tau_ = tau;
    }

    [[nodiscard]] BlockLayout layout() const override { return stokes_layout(); }
    [[nodiscard]] int n_fields() const override { return 2; }

    [[nodiscard]] FomSnapshot solve(const ParameterPoint& mu) const override {
        const auto def = deformation_field(mu);
        check_bijective(def, s_.mesh);
        auto sys = assemble_stokes(s_, def, data_, eta_);
        auto sol = solve_stokes(sys);
        FomSnapshot f;
        f.fields = {std::move(sol.u), std::move(sol.p)};
        f.matrices = {std::move(sys.A), std::move(sys.B)};
        f.vectors = {std::move(sys.l), std::move(sys.k)};
        return f;
    }

    [[nodiscard]] const SparseMatrix& norm(int field) const override { return field == 0 ? X_ : Y_; }
    [[nodiscard]] std::vector<const SparsityPattern*> patterns() const override {
        return {s_.a_pattern.get(), s_.b_pattern.get()};
    }
    [[nodiscard]] const SparseMatrix* coupling() const override { return &B_; }

    [[nodiscard]] std::array<double, 3> deformation(const ParameterPoint& mu) const override {
        if (mu.size() != 2) throw ConfigError("stokes parameters are the hole centre (x, y)");
        return family_.coefficients(Point(mu[0], mu[1]), radius_);
    }

    [[nodiscard]] std::unique_ptr<OnlineAssembler> reduced_assembler(
        const std::vector<std::vector<int>>& mi, const std::vector<std::vector<int>>& vi) const override {
        return std::make_unique<ReducedIntegrationAssembler>(
            s_.mesh, family_.modes(), 2,
            std::vector<ReducedIntegrationAssembler::MatrixInput>{{ops_.A, mi.at(0)}, {ops_.B, mi.at(1)}},
            std::vector<ReducedIntegrationAssembler::VectorInput>{{ops_.l, vi.at(0)}, {ops_.k, vi.at(1)}});
    }

    [[nodiscard]] const CutMesh& mesh() const override { return s_.mesh; }
    [[nodiscard]] DeformationField deformation_field(const ParameterPoint& mu) const override {
        return family_.field(deformation(mu));
    }
    [[nodiscard]] std::vector<SparseMatrix> error_norms(const ParameterPoint& mu) const override {
        const auto def = deformation_field(mu);
        return {assemble_norm(s_.mesh, s_.velocity, def, NormKind::XMu, data_.dirichlet, tau_).matrix,
                assemble_norm(s_.mesh, s_.pressure, def, NormKind::Y, data_.dirichlet, tau_).matrix};
    }
    [[nodiscard]] std::vector<std::string> field_names() const override { return {"u", "p"}; }
    [[nodiscard]] int fom_dimension() const override { return s_.velocity.n_dofs() + s_.pressure.n_dofs(); }

    void write_vtk(const fs::path& file, const ParameterPoint& mu,
                   const std::vector<std::pair<std::string, std::vector<Vector>>>& fields) const override {
        std::vector<VtkField> vf;
        for (const auto& [label, vals] : fields) {
            vf.push_back({label + "_u", s_.velocity.nodal_values(vals.at(0))});
            vf.push_back({label + "_p", q1_to_q2(s_.mesh.grid, s_.pressure.nodal_values(vals.at(1)).col(0))});
        }
        write_vtk_file(file, s_.mesh, deformation_field(mu), vf);
    }

    void write_diagnostics(const fs::path& file, const std::vector<ParameterPoint>& params) const override {
        std::ofstream out(file);
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", file.string()));
        out << "mu1,mu2,C1,Cd,min_detJ,coupling_min,coupling_max,coupling_mean\n";
        for (const auto& mu : params) {
            const auto def = deformation_field(mu);
            const auto r = jacobian_row(def, s_.mesh);
            const auto cc = coupling_constant_check(s_, def, 4, 1);
            out << fmt::format("{},{},{},{},{},{},{},{}\n", mu[0], mu[1], r[0], r[1], r[2], cc.min, cc.max, cc.mean);
        }
    }

private:
    double radius_;
    StokesSpaces s_;
    ElasticDeformationSolver solver_;
    AffineHoleDeformation family_;
    StokesData data_;
    double eta_;
    double tau_ = 0.0;
    StokesOperators ops_;
    SparseMatrix X_;
    SparseMatrix Y_;
    SparseMatrix B_;
};

}  // namespace

std::unique_ptr<BenchmarkDriver> make_driver(const Config& c) {
    if (c.problem == Problem::Poisson) return std::make_unique<PoissonDriver>(c);
    return std::make_unique<StokesDriver>(c);
}

}  // namespace romcut
