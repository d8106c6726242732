#include "romcut/store.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace fs = std::filesystem;

namespace romcut {

static_assert(std::endian::native == std::endian::little, "snapshot store expects a little-endian host");

std::string exact_str(double x) { return fmt::format("{}", x); }

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("bad integer '{}' in store", item));
        }
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("bad number '{}' in store", item));
        }
    }
    return out;
}

std::map<std::string, std::string> read_key_values(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", file.string()));
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("malformed line in '{}'", file.string()));
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_key_values(const fs::path& file, const std::map<std::string, std::string>& kv) {
    std::ofstream out(file);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", file.string()));
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

namespace {

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key, const fs::path& where) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(fmt::format("'{}' lacks key '{}'", where.string(), key));
    return it->second;
}

}  // namespace

void write_matrix(const fs::path& dir, const std::string& kind, const Matrix& M,
                  const std::map<std::string, std::string>& meta) {
    fs::create_directories(dir);
    auto kv = meta;
    kv["kind"] = kind;
    kv["shape"] = fmt::format("{},{}", M.rows(), M.cols());
    kv["dtype"] = "f64";
    kv["endianness"] = "little";
    write_key_values(dir / "manifest.txt", kv);
    std::ofstream out(dir / "data.bin", std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir / "data.bin").string()));
    out.write(reinterpret_cast<const char*>(M.data()), static_cast<std::streamsize>(M.size() * sizeof(double)));
}

StoredMatrix read_matrix(const fs::path& dir) {
    StoredMatrix s;
    s.meta = read_key_values(dir / "manifest.txt");
    if (need(s.meta, "dtype", dir) != "f64" || need(s.meta, "endianness", dir) != "little")
        throw ConfigError(fmt::format("'{}': unsupported storage format", dir.string()));
    const auto shape = split_ints(need(s.meta, "shape", dir));
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw ConfigError(fmt::format("'{}': bad shape", dir.string()));
    s.data.resize(shape[0], shape[1]);
    std::ifstream in(dir / "data.bin", std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", (dir / "data.bin").string()));
    in.read(reinterpret_cast<char*>(s.data.data()), static_cast<std::streamsize>(s.data.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(s.data.size() * sizeof(double)))
        throw ConfigError(fmt::format("'{}': truncated data", dir.string()));
    return s;
}

void save_snapshots(const fs::path& dir, const SnapshotSet& s) {
    fs::create_directories(dir);
    Matrix P = to_matrix(s.params).transpose();
    write_matrix(dir / "params", "parameters", P);
    for (std::size_t i = 0; i < s.fields.size(); ++i) write_matrix(dir / fmt::format("field_{}", i), "solution", s.fields[i]);
    for (std::size_t i = 0; i < s.matrices.size(); ++i)
        write_matrix(dir / fmt::format("lhs_{}", i), "lhs-vectorized", s.matrices[i]);
    for (std::size_t i = 0; i < s.vectors.size(); ++i) write_matrix(dir / fmt::format("rhs_{}", i), "rhs", s.vectors[i]);
    write_key_values(dir / "manifest.txt", {{"fields", std::to_string(s.fields.size())},
                                            {"lhs", std::to_string(s.matrices.size())},
                                            {"rhs", std::to_string(s.vectors.size())},
                                            {"count", std::to_string(s.params.size())}});
}

SnapshotSet load_snapshots(const fs::path& dir) {
    const auto kv = read_key_values(dir / "manifest.txt");
    SnapshotSet s;
    const Matrix P = read_matrix(dir / "params").data;
    for (Eigen::Index q = 0; q < P.cols(); ++q) {
        ParameterPoint mu(static_cast<std::size_t>(P.rows()));
        for (Eigen::Index d = 0; d < P.rows(); ++d) mu[static_cast<std::size_t>(d)] = P(d, q);
        s.params.push_back(std::move(mu));
    }
    const int nf = std::stoi(need(kv, "fields", dir)), nl = std::stoi(need(kv, "lhs", dir)),
              nr = std::stoi(need(kv, "rhs", dir));
    for (int i = 0; i < nf; ++i) s.fields.push_back(read_matrix(dir / fmt::format("field_{}", i)).data);
    for (int i = 0; i < nl; ++i) s.matrices.push_back(read_matrix(dir / fmt::format("lhs_{}", i)).data);
    for (int i = 0; i < nr; ++i) s.vectors.push_back(read_matrix(dir / fmt::format("rhs_{}", i)).data);
    return s;
}

namespace {

void write_centroids(std::ofstream& out, const char* name, const Matrix& C) {
    out << name << ' ' << C.rows() << ' ' << C.cols() << '\n';
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
        for (Eigen::Index j = 0; j < C.cols(); ++j) out << (j ? " " : "") << exact_str(C(i, j));
        out << '\n';
    }
}

Matrix read_centroids(std::istream& in, const std::string& name) {
    std::string tag;
    Eigen::Index r = 0, c = 0;
    in >> tag >> r >> c;
    if (!in || tag != name) throw ConfigError(fmt::format("clusters.txt: expected '{}'", name));
    Matrix C(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            std::string v;
            in >> v;
            C(i, j) = std::stod(v);
        }
    return C;
}

std::vector<int> read_assignment(std::istream& in, const std::string& name) {
    std::string tag;
    std::size_t n = 0;
    in >> tag >> n;
    if (!in || tag != name) throw ConfigError(fmt::format("clusters.txt: expected '{}'", name));
    std::vector<int> a(n);
    for (auto& x : a) in >> x;
    return a;
}

Matrix hstack(const std::vector<Matrix>& blocks, Eigen::Index rows, Eigen::Index cols) {
    Matrix out(rows, cols * static_cast<Eigen::Index>(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i) out.middleCols(cols * static_cast<Eigen::Index>(i), cols) = blocks[i];
    return out;
}

}  // namespace

void save_model(const fs::path& dir, const ClusterModel& m) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "clusters.txt");
        if (!out) throw ConfigError(fmt::format("cannot write '{}'", (dir / "clusters.txt").string()));
        write_centroids(out, "alpha", m.alpha);
        write_centroids(out, "beta", m.beta);
        out << "subspace_of " << m.subspace_of.size();
        for (int a : m.subspace_of) out << ' ' << a;
        out << "\nhyper_of " << m.hyper_of.size();
        for (int a : m.hyper_of) out << ' ' << a;
        out << '\n';
    }
    std::map<std::string, std::string> kv;
    kv["clusters"] = std::to_string(m.n_clusters());
    kv["hyper_clusters"] = std::to_string(m.n_hyper_clusters());
    kv["matrix_ops"] = std::to_string(m.layout.matrices.size());
    kv["vector_fields"] = join_ints(m.layout.vector_fields);
    for (std::size_t o = 0; o < m.layout.matrices.size(); ++o) {
        const auto& b = m.layout.matrices[o];
        kv[fmt::format("matrix_{}", o)] =
            fmt::format("{},{},{},{}", b.row_field, b.col_field, exact_str(b.sign), exact_str(b.transpose_sign));
    }
    for (std::size_t j = 0; j < m.diagnostics.size(); ++j) {
        const auto& d = m.diagnostics[j];
        std::string pe;
        for (const auto& p : d.projection) pe += (pe.empty() ? "" : ",") + exact_str(p.error) + "," + exact_str(p.energy);
        kv[fmt::format("diag_{}_projection", j)] = pe;
        kv[fmt::format("diag_{}_tt_ranks", j)] = join_ints(d.tt_ranks);
        kv[fmt::format("diag_{}_tt_tolerance", j)] = exact_str(d.tt_tolerance);
        kv[fmt::format("diag_{}_dropped", j)] = std::to_string(d.supremizers_dropped);
        kv[fmt::format("diag_{}_sigma_min", j)] = exact_str(d.sigma_min);
        kv[fmt::format("diag_{}_sigma_min_plain", j)] = exact_str(d.sigma_min_plain);
    }
    write_key_values(dir / "model.txt", kv);
    for (std::size_t j = 0; j < m.bases.size(); ++j)
        for (std::size_t f = 0; f < m.bases[j].size(); ++f)
            write_matrix(dir / fmt::format("basis_{}", j) / fmt::format("field_{}", f), "basis", m.bases[j][f]);
    auto save_hr = [&](const fs::path& d, const HyperReduction& hr) {
        write_matrix(d, "mdeim-basis", hr.basis, {{"indices", join_ints(hr.indices)}});
    };
    for (std::size_t k = 0; k < m.matrix_hr.size(); ++k) {
        for (std::size_t o = 0; o < m.matrix_hr[k].size(); ++o)
            save_hr(dir / fmt::format("hyper_{}", k) / fmt::format("lhs_{}", o), m.matrix_hr[k][o]);
        for (std::size_t o = 0; o < m.vector_hr[k].size(); ++o)
            save_hr(dir / fmt::format("hyper_{}", k) / fmt::format("rhs_{}", o), m.vector_hr[k][o]);
    }
    for (std::size_t j = 0; j < m.projections.size(); ++j)
        for (std::size_t k = 0; k < m.projections[j].size(); ++k) {
            const auto& ro = m.projections[j][k];
            const fs::path d = dir / fmt::format("proj_{}_{}", j, k);
            for (std::size_t o = 0; o < ro.matrices.size(); ++o) {
                const auto& comps = ro.matrices[o];
                const Eigen::Index r = comps.empty() ? 0 : comps[0].rows(), c = comps.empty() ? 0 : comps[0].cols();
                write_matrix(d / fmt::format("lhs_{}", o), "projected-lhs", hstack(comps, r, c),
                             {{"components", std::to_string(comps.size())}, {"block_cols", std::to_string(c)}});
            }
            for (std::size_t o = 0; o < ro.vectors.size(); ++o)
                write_matrix(d / fmt::format("rhs_{}", o), "projected-rhs", ro.vectors[o]);
        }
}

ClusterModel load_model(const fs::path& dir) {
    ClusterModel m;
    {
        std::ifstream in(dir / "clusters.txt");
        if (!in) throw ConfigError(fmt::format("cannot read '{}'", (dir / "clusters.txt").string()));
        m.alpha = read_centroids(in, "alpha");
        m.beta = read_centroids(in, "beta");
        m.subspace_of = read_assignment(in, "subspace_of");
        m.hyper_of = read_assignment(in, "hyper_of");
    }
    const auto kv = read_key_values(dir / "model.txt");
    const int nc = std::stoi(need(kv, "clusters", dir)), nh = std::stoi(need(kv, "hyper_clusters", dir));
    const int nops = std::stoi(need(kv, "matrix_ops", dir));
    m.layout.vector_fields = split_ints(need(kv, "vector_fields", dir));
    int n_fields = 0;
    for (int o = 0; o < nops; ++o) {
        const auto v = split_doubles(need(kv, fmt::format("matrix_{}", o), dir));
        if (v.size() != 4) throw ConfigError("model.txt: malformed block layout");
        m.layout.matrices.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3]});
        n_fields = std::max({n_fields, static_cast<int>(v[0]) + 1, static_cast<int>(v[1]) + 1});
    }
    for (int j = 0; j < nc; ++j) {
        std::vector<Matrix> b;
        for (int f = 0; f < n_fields; ++f)
            b.push_back(read_matrix(dir / fmt::format("basis_{}", j) / fmt::format("field_{}", f)).data);
        m.bases.push_back(std::move(b));
        ClusterDiagnostics d;
        const auto pe = split_doubles(need(kv, fmt::format("diag_{}_projection", j), dir));
        for (std::size_t i = 0; i + 1 < pe.size(); i += 2) d.projection.push_back({pe[i], pe[i + 1]});
        d.tt_ranks = split_ints(need(kv, fmt::format("diag_{}_tt_ranks", j), dir));
        d.tt_tolerance = std::stod(need(kv, fmt::format("diag_{}_tt_tolerance", j), dir));
        d.supremizers_dropped = std::stoi(need(kv, fmt::format("diag_{}_dropped", j), dir));
        d.sigma_min = std::stod(need(kv, fmt::format("diag_{}_sigma_min", j), dir));
        d.sigma_min_plain = std::stod(need(kv, fmt::format("diag_{}_sigma_min_plain", j), dir));
        m.diagnostics.push_back(std::move(d));
    }
    auto load_hr = [](const fs::path& d) {
        auto s = read_matrix(d);
        return make_hyper_reduction(std::move(s.data), split_ints(need(s.meta, "indices", d)));
    };
    for (int k = 0; k < nh; ++k) {
        std::vector<HyperReduction> mh, vh;
        for (int o = 0; o < nops; ++o) mh.push_back(load_hr(dir / fmt::format("hyper_{}", k) / fmt::format("lhs_{}", o)));
        for (std::size_t o = 0; o < m.layout.vector_fields.size(); ++o)
            vh.push_back(load_hr(dir / fmt::format("hyper_{}", k) / fmt::format("rhs_{}", o)));
        m.matrix_hr.push_back(std::move(mh));
        m.vector_hr.push_back(std::move(vh));
    }
    for (int j = 0; j < nc; ++j) {
        std::vector<ReducedOperator> row;
        for (int k = 0; k < nh; ++k) {
            const fs::path d = dir / fmt::format("proj_{}_{}", j, k);
            ReducedOperator ro;
            for (int o = 0; o < nops; ++o) {
                const auto s = read_matrix(d / fmt::format("lhs_{}", o));
                const int nco = std::stoi(need(s.meta, "components", d));
                const Eigen::Index c = std::stoi(need(s.meta, "block_cols", d));
                std::vector<Matrix> comps;
                for (int i = 0; i < nco; ++i) comps.push_back(s.data.middleCols(c * i, c));
                ro.matrices.push_back(std::move(comps));
            }
            for (std::size_t o = 0; o < m.layout.vector_fields.size(); ++o)
                ro.vectors.push_back(read_matrix(d / fmt::format("rhs_{}", o)).data);
            row.push_back(std::move(ro));
        }
        m.projections.push_back(std::move(row));
    }
    return m;
}

}  // namespace romcut
