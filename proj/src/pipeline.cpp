#include "romcut/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "romcut/memory.hpp"
#include "romcut/store.hpp"

namespace fs = std::filesystem;

namespace romcut {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string model_dir_name(std::size_t i) { return fmt::format("eps_{}", i); }

std::ofstream open_out(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", file.string()));
    return out;
}

void check_mu(const Config& c, const ParameterPoint& mu) {
    if (!c.params.contains(mu))
        throw ConfigError(fmt::format("mu = ({}) lies outside the parameter box", fmt::join(mu, ", ")));
}

Matrix columns(const Matrix& M, const std::vector<int>& cols) {
    Matrix out(M.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = M.col(cols[i]);
    return out;
}

/// Mean relative X-distance of the member snapshots to their mean.
double spread(const Matrix& U, const SparseMatrix& X) {
    const Vector mean = U.rowwise().mean();
    const double ref = std::sqrt(mean.dot(X * mean));
    double s = 0.0;
    for (Eigen::Index q = 0; q < U.cols(); ++q) {
        const Vector d = U.col(q) - mean;
        s += std::sqrt(std::max(0.0, d.dot(X * d)));
    }
    return ref > 0.0 ? s / (static_cast<double>(U.cols()) * ref) : 0.0;
}

std::vector<int> members_of(const std::vector<int>& assignment, int j) {
    std::vector<int> m;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == j) m.push_back(static_cast<int>(i));
    return m;
}

/// Mean relative error per field of the model's online solutions at the given parameters.
std::vector<double> mean_online_error(const ClusterModel& model, const BenchmarkDriver& driver,
                                      const std::vector<ParameterPoint>& params, const std::vector<std::vector<Vector>>& exact,
                                      const std::vector<std::vector<SparseMatrix>>& norms) {
    const auto assemblers = online_assemblers(model, driver);
    std::vector<double> mean(static_cast<std::size_t>(driver.n_fields()), 0.0);
    for (std::size_t q = 0; q < params.size(); ++q) {
        const auto r = online(params[q], driver.deformation(params[q]), model, assemblers);
        const auto e = relative_errors(norms[q], reconstruct(model, r), exact[q]);
        for (std::size_t f = 0; f < e.size(); ++f) mean[f] += e[f] / static_cast<double>(params.size());
    }
    return mean;
}

int rom_dimension(const ClusterModel& m, int j) {
    int n = 0;
    for (int s : m.field_sizes(j)) n += s;
    return n;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", file.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.emplace_back();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

ParameterPoint parse_mu(const std::string& text) {
    ParameterPoint mu;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError(fmt::format("--mu: empty entry in '{}'", text));
        const std::string t = item.substr(b, e - b + 1);
        double x = 0.0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size())
            throw ConfigError(fmt::format("--mu: '{}' is not a number", t));
        mu.push_back(x);
    }
    if (mu.size() != 2) throw ConfigError("--mu expects two comma-separated values");
    return mu;
}

FomRun run_fom(const Config& c, const std::optional<ParameterPoint>& mu_in) {
    const ParameterPoint mu = mu_in.value_or(c.mu_ref);
    check_mu(c, mu);
    const auto driver = make_driver(c);
    FomRun r;
    r.mu = mu;
    r.dofs = driver->fom_dimension();
    r.active_cells = driver->n_active_cells();
    const auto t0 = Clock::now();
    const FomSnapshot s = driver->solve(mu);
    r.seconds = seconds_since(t0);
    const auto N = driver->error_norms(mu);
    for (std::size_t f = 0; f < s.fields.size(); ++f) r.norms.push_back(std::sqrt(s.fields[f].dot(N[f] * s.fields[f])));
    const fs::path dir = fs::path(c.output) / "fom";
    fs::create_directories(dir);
    if (c.write_vtk) driver->write_vtk(dir / "fom.vtk", mu, {{"fom", s.fields}});
    auto out = open_out(dir / "fom.txt");
    out << fmt::format("mu = ({})\ndofs = {}\nactive cells = {}\nsolve seconds = {:.4f}\n", fmt::join(mu, ", "),
                       r.dofs, r.active_cells, r.seconds);
    const auto names = driver->field_names();
    for (std::size_t f = 0; f < r.norms.size(); ++f) out << fmt::format("|{}| = {}\n", names[f], r.norms[f]);
    return r;
}

OfflineRun run_offline(const Config& c) {
    const fs::path dir = c.output;
    fs::create_directories(dir);
    const auto driver = make_driver(c);
    const auto params = halton(c.n_train, c.params, c.halton_skip);
    driver->write_diagnostics(dir / "deformation.csv", params);

    OfflineRun run;
    auto t0 = Clock::now();
    const SnapshotSet snaps = generate_snapshots(*driver, params, c.workers);
    run.snapshot_seconds = seconds_since(t0);
    save_snapshots(dir / "snapshots", snaps);
    spdlog::info("{} snapshots in {:.2f} s (fom dimension {})", params.size(), run.snapshot_seconds,
                 driver->fom_dimension());

    const auto names = driver->field_names();
    auto csv = open_out(dir / "offline.csv");
    csv << "eps,cluster,field,members,rank,error,energy,ratio,bound,within,spread,tt_ranks,tt_tolerance,"
           "sigma_min_plain,sigma_min,supremizers_dropped\n";

    // training-set comparison of the localized and the global model
    std::vector<std::vector<Vector>> exact(params.size());
    std::vector<std::vector<SparseMatrix>> norms(params.size());
    const bool localized = c.n_clusters > 1 || c.n_hyper_clusters > 1;
    if (localized)
        for (std::size_t q = 0; q < params.size(); ++q) {
            for (const auto& F : snaps.fields) exact[q].push_back(F.col(static_cast<Eigen::Index>(q)));
            norms[q] = driver->error_norms(params[q]);
        }
    auto train = open_out(dir / "training.csv");
    train << "eps,field,local_mean_error,global_mean_error,flagged\n";

    for (std::size_t i = 0; i < c.eps.size(); ++i) {
        const double eps = c.eps[i];
        const OfflineOptions opt = c.offline_options(eps);
        t0 = Clock::now();
        ClusterModel model = offline(snaps, *driver, opt);
        run.offline_seconds.push_back(seconds_since(t0));
        save_model(dir / model_dir_name(i), model);
        const double d = static_cast<double>(driver->mesh().grid.d());
        for (int j = 0; j < model.n_clusters(); ++j) {
            const auto mem = members_of(model.subspace_of, j);
            const auto& dg = model.diagnostics[static_cast<std::size_t>(j)];
            for (int f = 0; f < driver->n_fields(); ++f) {
                const auto& pe = dg.projection[static_cast<std::size_t>(f)];
                const bool tt = c.method == Method::TTRB && f == 0;
                const double bound = tt ? 1.5 * std::sqrt(d) : 1.0;
                const double ratio = pe.energy > 0.0 ? std::sqrt(pe.error / pe.energy) / eps : 0.0;
                const double sp = spread(columns(snaps.fields[static_cast<std::size_t>(f)], mem), driver->norm(f));
                csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", exact_str(eps), j, names[f],
                                   mem.size(), model.bases[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)].cols(),
                                   exact_str(pe.error), exact_str(pe.energy), exact_str(ratio), exact_str(bound),
                                   ratio <= bound ? 1 : 0, exact_str(sp), fmt::join(dg.tt_ranks, ";"),
                                   exact_str(dg.tt_tolerance), exact_str(dg.sigma_min_plain), exact_str(dg.sigma_min),
                                   dg.supremizers_dropped);
            }
        }
        if (localized) {
            const ClusterModel global = global_offline(snaps, *driver, opt);
            const auto el = mean_online_error(model, *driver, params, exact, norms);
            const auto eg = mean_online_error(global, *driver, params, exact, norms);
            for (std::size_t f = 0; f < el.size(); ++f) {
                const bool flagged = el[f] > eg[f];
                if (flagged)
                    spdlog::warn("eps {}: localized training error of {} ({:.3e}) exceeds the global one ({:.3e})", eps,
                                 names[f], el[f], eg[f]);
                train << fmt::format("{},{},{},{},{}\n", exact_str(eps), names[f], exact_str(el[f]), exact_str(eg[f]),
                                     flagged ? 1 : 0);
            }
        }
        spdlog::info("eps {:.0e}: {} subspace / {} hyper-reduction clusters in {:.2f} s", eps, model.n_clusters(),
                     model.n_hyper_clusters(), run.offline_seconds.back());
        run.models.push_back(std::move(model));
    }

    std::map<std::string, std::string> manifest;
    manifest["config_hash"] = c.hash_hex();
    manifest["problem"] = c.problem == Problem::Poisson ? "poisson" : "stokes";
    manifest["method"] = c.method == Method::TPOD ? "tpod" : "ttrb";
    std::string eps_list;
    for (double e : c.eps) eps_list += (eps_list.empty() ? "" : ",") + exact_str(e);
    manifest["eps"] = eps_list;
    manifest["models"] = std::to_string(c.eps.size());
    manifest["fom_dimension"] = std::to_string(driver->fom_dimension());
    manifest["active_cells"] = std::to_string(driver->n_active_cells());
    manifest["training_count"] = std::to_string(params.size());
    write_key_values(dir / "manifest.txt", manifest);

    auto tm = open_out(dir / "offline_timings.csv");
    tm << "eps,snapshot_seconds,offline_seconds\n";
    for (std::size_t i = 0; i < c.eps.size(); ++i)
        tm << fmt::format("{},{},{}\n", c.eps[i], run.snapshot_seconds, run.offline_seconds[i]);
    return run;
}

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols{"eps",     "sample",  "mu1",     "mu2",         "cluster",
                                               "hyper",   "rom_dim", "fom_dim", "error_u",     "error_p",
                                               "error_u_over_eps", "error_p_over_eps", "residual", "cell_fraction"};
    return cols;
}

const std::vector<std::string>& timing_columns() {
    static const std::vector<std::string> cols{"eps",         "sample",          "fom_seconds", "rom_seconds",
                                               "speedup_wt",  "fom_peak_bytes",  "rom_peak_bytes",
                                               "speedup_mem_proxy"};
    return cols;
}

std::vector<Metrics> run_online(const Config& c, const std::optional<ParameterPoint>& mu) {
    const fs::path dir = c.output;
    if (!fs::exists(dir / "manifest.txt"))
        throw ConfigError(fmt::format("no offline model in '{}' (run offline first)", dir.string()));
    const auto manifest = read_key_values(dir / "manifest.txt");
    const auto it = manifest.find("config_hash");
    if (it == manifest.end() || it->second != c.hash_hex())
        throw ConfigError(fmt::format("model in '{}' was built from a different configuration (hash {} vs {})",
                                      dir.string(), it == manifest.end() ? "none" : it->second, c.hash_hex()));
    std::vector<ParameterPoint> mus;
    if (mu) {
        check_mu(c, *mu);
        mus.push_back(*mu);
    } else {
        mus = uniform_samples(c.n_online, c.params, c.online_seed);
    }
    const auto driver = make_driver(c);
    const int n_active = driver->n_active_cells();

    std::vector<FomSnapshot> fom(mus.size());
    std::vector<double> fom_seconds(mus.size());
    std::vector<std::size_t> fom_bytes(mus.size());
    std::vector<std::vector<SparseMatrix>> norms(mus.size());
    for (std::size_t q = 0; q < mus.size(); ++q) {
        const memory::PeakScope scope;
        const auto t0 = Clock::now();
        fom[q] = driver->solve(mus[q]);
        fom_seconds[q] = seconds_since(t0);
        fom_bytes[q] = scope.bytes();
        norms[q] = driver->error_norms(mus[q]);
    }

    std::vector<Metrics> out;
    for (std::size_t i = 0; i < c.eps.size(); ++i) {
        const ClusterModel model = load_model(dir / model_dir_name(i));
        const auto assemblers = online_assemblers(model, *driver);
        std::vector<double> fraction;
        for (const auto& a : assemblers) {
            const auto* r = dynamic_cast<const ReducedIntegrationAssembler*>(a.get());
            fraction.push_back(r ? static_cast<double>(r->cells().size()) / n_active : 1.0);
        }
        for (std::size_t q = 0; q < mus.size(); ++q) {
            Metrics m;
            m.eps = c.eps[i];
            m.sample = static_cast<int>(q);
            m.mu = mus[q];
            const auto coef = driver->deformation(mus[q]);
            OnlineResult r;
            {
                const memory::PeakScope scope;
                const auto t0 = Clock::now();
                r = online(mus[q], coef, model, assemblers);
                m.rom_seconds = seconds_since(t0);
                m.rom_bytes = scope.bytes();
            }
            const auto approx = reconstruct(model, r);
            m.j = r.j;
            m.k = r.k;
            m.rom_dim = rom_dimension(model, r.j);
            m.fom_dim = driver->fom_dimension();
            m.errors = relative_errors(norms[q], approx, fom[q].fields);
            m.residual = r.residual;
            m.cell_fraction = fraction[static_cast<std::size_t>(r.k)];
            m.fom_seconds = fom_seconds[q];
            m.fom_bytes = fom_bytes[q];
            if (c.write_vtk && q == 0) {
                std::vector<Vector> err;
                for (std::size_t f = 0; f < approx.size(); ++f) err.push_back(approx[f] - fom[q].fields[f]);
                driver->write_vtk(dir / "vtk" / fmt::format("online_{}_sample_0.vtk", model_dir_name(i)), mus[q],
                                  {{"fom", fom[q].fields}, {"rom", approx}, {"error", err}});
            }
            out.push_back(std::move(m));
        }
    }

    auto mcsv = open_out(dir / "metrics.csv");
    mcsv << fmt::format("{}\n", fmt::join(metrics_columns(), ","));
    for (const auto& m : out) {
        const std::string ep = m.errors.size() > 1 ? exact_str(m.errors[1]) : "";
        const std::string epr = m.errors.size() > 1 ? exact_str(m.errors[1] / m.eps) : "";
        mcsv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", exact_str(m.eps), m.sample, exact_str(m.mu[0]),
                            exact_str(m.mu[1]), m.j, m.k, m.rom_dim, m.fom_dim, exact_str(m.errors[0]), ep,
                            exact_str(m.errors[0] / m.eps), epr, exact_str(m.residual), exact_str(m.cell_fraction));
    }
    auto tcsv = open_out(dir / "timings.csv");
    tcsv << fmt::format("{}\n", fmt::join(timing_columns(), ","));
    for (const auto& m : out)
        tcsv << fmt::format("{},{},{},{},{},{},{},{}\n", m.eps, m.sample, m.fom_seconds, m.rom_seconds,
                            m.rom_seconds > 0.0 ? m.fom_seconds / m.rom_seconds : 0.0, m.fom_bytes, m.rom_bytes,
                            m.rom_bytes > 0 ? static_cast<double>(m.fom_bytes) / static_cast<double>(m.rom_bytes) : 0.0);
    auto rep = open_out(dir / "report.txt");
    rep << report(dir);
    return out;
}

std::string report(const fs::path& dir) {
    const auto manifest = read_key_values(dir / "manifest.txt");
    const auto metrics = read_csv(dir / "metrics.csv");
    const bool have_timings = fs::exists(dir / "timings.csv");
    const auto timings = have_timings ? read_csv(dir / "timings.csv") : std::vector<std::vector<std::string>>{};
    std::map<std::string, double> offline_seconds;
    if (fs::exists(dir / "offline_timings.csv"))
        for (const auto& row : read_csv(dir / "offline_timings.csv"))
            if (row.size() == 3 && row[0] != "eps") offline_seconds[fmt::format("{:.0e}", std::stod(row[0]))] = std::stod(row[2]);

    struct Acc {
        int n = 0;
        double eu = 0, ep = 0, frac = 0, fom_s = 0, rom_s = 0, fom_b = 0, rom_b = 0;
        bool has_p = false;
        int fom_dim = 0;
    };
    std::map<double, Acc> acc;
    for (std::size_t r = 1; r < metrics.size(); ++r) {
        const auto& row = metrics[r];
        if (row.size() < metrics_columns().size()) continue;
        auto& a = acc[std::stod(row[0])];
        ++a.n;
        a.eu += std::stod(row[10]);
        if (!row[11].empty()) {
            a.ep += std::stod(row[11]);
            a.has_p = true;
        }
        a.frac += std::stod(row[13]);
        a.fom_dim = std::stoi(row[7]);
    }
    for (std::size_t r = 1; r < timings.size(); ++r) {
        const auto& row = timings[r];
        if (row.size() < timing_columns().size()) continue;
        auto& a = acc[std::stod(row[0])];
        a.fom_s += std::stod(row[2]);
        a.rom_s += std::stod(row[3]);
        a.fom_b += std::stod(row[5]);
        a.rom_b += std::stod(row[6]);
    }

    const auto eps = split_doubles(manifest.at("eps"));
    std::string out = fmt::format("problem {} ({}), fom dimension {}, active cells {}, config {}\n",
                                  manifest.at("problem"), manifest.at("method"), manifest.at("fom_dimension"),
                                  manifest.at("active_cells"), manifest.at("config_hash"));
    out += fmt::format("{:>8} {:>10} {:>10} {:>8} {:>10} {:>10} {:>10} {:>8} {:>12}\n", "eps", "E_u/eps", "E_p/eps", "RF",
                       "cells", "offline_s", "online_s", "SU-WT", "SU-MEM*");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto f = acc.find(eps[i]);
        if (f == acc.end() || f->second.n == 0) continue;
        const Acc& a = f->second;
        const ClusterModel model = load_model(dir / model_dir_name(i));
        int max_dim = 1;
        for (int j = 0; j < model.n_clusters(); ++j) max_dim = std::max(max_dim, rom_dimension(model, j));
        const double n = a.n;
        const auto off = offline_seconds.find(fmt::format("{:.0e}", eps[i]));
        out += fmt::format("{:>8.0e} {:>10.3f} {:>10} {:>8.1f} {:>10.3f} {:>10} {:>10.2e} {:>8.2f} {:>12.2f}\n", eps[i],
                           a.eu / n, a.has_p ? fmt::format("{:.3f}", a.ep / n) : std::string("-"),
                           static_cast<double>(a.fom_dim) / max_dim, a.frac / n,
                           off == offline_seconds.end() ? std::string("-") : fmt::format("{:.2f}", off->second),
                           a.rom_s / n, a.rom_s > 0 ? a.fom_s / a.rom_s : 0.0, a.rom_b > 0 ? a.fom_b / a.rom_b : 0.0);
    }
    out += "RF = fom dimension / largest local subspace; cells = reduced integration cells / active cells.\n";
    out += "SU-MEM* is a proxy: peak heap bytes of the FOM solve over peak heap bytes of the online solve.\n";
    if (fs::exists(dir / "training.csv")) {
        const auto tr = read_csv(dir / "training.csv");
        for (std::size_t r = 1; r < tr.size(); ++r)
            if (tr[r].size() == 5 && tr[r][4] == "1")
                out += fmt::format("FLAG: at eps {} the localized training error of {} exceeds the global model's\n",
                                   tr[r][0], tr[r][1]);
    }
    return out;
}

}  // namespace romcut
