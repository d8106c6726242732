#include "romcut/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace romcut {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(fmt::format("{}: '{}' is not a number", key, v));
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
    return x;
}

int to_count(const std::string& key, const std::string& v, int lo) {
    const long long x = to_int(key, v);
    if (x < lo || x > 1000000) throw ConfigError(fmt::format("{}: {} out of range", key, x));
    return static_cast<int>(x);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

Point to_point(const std::string& key, const std::string& v) {
    const auto l = to_list(key, v);
    if (l.size() != 2) throw ConfigError(fmt::format("{}: expected two values", key));
    return {l[0], l[1]};
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

void set_problem_defaults(Config& c) {
    if (c.problem == Problem::Stokes) {
        c.box_lo = {0.0, 0.0};
        c.box_hi = {1.25, 1.25};
        c.nx = c.ny = 16;
        c.params = {{0.425, 0.425}, {0.825, 0.825}};
        c.mu_ref = {0.625, 0.625};
        c.radius = 0.25;
        c.stiffening = 0.75;
        c.eps = {1e-2, 1e-3};
    }
}

}  // namespace

void Config::apply(const std::string& key, const std::string& v) {
    raw[key] = v;
    if (key == "problem") {
        if (v == "poisson")
            problem = Problem::Poisson;
        else if (v == "stokes")
            problem = Problem::Stokes;
        else
            throw ConfigError(fmt::format("problem: unknown value '{}'", v));
    } else if (key == "method") {
        if (v == "tpod")
            method = Method::TPOD;
        else if (v == "ttrb")
            method = Method::TTRB;
        else
            throw ConfigError(fmt::format("method: unknown value '{}'", v));
    } else if (key == "box.lower") {
        box_lo = to_point(key, v);
    } else if (key == "box.upper") {
        box_hi = to_point(key, v);
    } else if (key == "grid.nx") {
        nx = to_count(key, v, 1);
    } else if (key == "grid.ny") {
        ny = to_count(key, v, 1);
    } else if (key == "order") {
        order = to_count(key, v, 1);
    } else if (key == "eta") {
        eta = to_double(key, v);
    } else if (key == "mu.lower") {
        params.lower = to_list(key, v);
    } else if (key == "mu.upper") {
        params.upper = to_list(key, v);
    } else if (key == "mu.ref") {
        mu_ref = to_list(key, v);
    } else if (key == "geometry.radius") {
        radius = to_double(key, v);
    } else if (key == "train.count") {
        n_train = to_count(key, v, 1);
    } else if (key == "train.halton_skip") {
        halton_skip = to_count(key, v, 0);
    } else if (key == "clusters") {
        n_clusters = to_count(key, v, 1);
    } else if (key == "hyper_clusters") {
        n_hyper_clusters = to_count(key, v, 1);
    } else if (key == "eps") {
        eps = to_list(key, v);
    } else if (key == "hyper_ratio") {
        hyper_ratio = to_double(key, v);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(to_int(key, v));
    } else if (key == "kmeans.iters") {
        kmeans_iters = to_count(key, v, 1);
    } else if (key == "online.count") {
        n_online = to_count(key, v, 1);
    } else if (key == "online.seed") {
        online_seed = static_cast<std::uint64_t>(to_int(key, v));
    } else if (key == "material.young") {
        young = to_double(key, v);
    } else if (key == "material.poisson") {
        poisson_ratio = to_double(key, v);
    } else if (key == "material.stiffening") {
        stiffening = to_double(key, v);
    } else if (key == "deterministic") {
        deterministic = to_bool(key, v);
    } else if (key == "svd.oversample") {
        oversample = to_count(key, v, 5);
    } else if (key == "svd.power_iters") {
        power_iters = to_count(key, v, 0);
    } else if (key == "enrich") {
        enrich = to_bool(key, v);
    } else if (key == "supremizer") {
        if (v == "cholesky")
            supremizer = SupremizerKind::Cholesky;
        else if (v == "riesz")
            supremizer = SupremizerKind::Riesz;
        else
            throw ConfigError(fmt::format("supremizer: unknown value '{}'", v));
    } else if (key == "vtk") {
        write_vtk = to_bool(key, v);
    } else if (key == "workers") {
        workers = to_count(key, v, 1);
    } else if (key == "output") {
        output = v;
    } else {
        raw.erase(key);
        throw ConfigError(fmt::format("unknown key '{}'", key));
    }
}

Config Config::parse(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", lineno));
        entries.emplace_back(key, value);
    }
    Config c;
    // the problem fixes the defaults every other key overrides
    for (const auto& [k, v] : entries)
        if (k == "problem") c.apply(k, v);
    set_problem_defaults(c);
    for (const auto& [k, v] : entries)
        if (k != "problem") c.apply(k, v);

    if (c.params.lower.size() != 2 || c.params.upper.size() != 2 || c.mu_ref.size() != 2)
        throw ConfigError("parameters are two-dimensional");
    for (std::size_t i = 0; i < 2; ++i)
        if (!(c.params.lower[i] <= c.params.upper[i])) throw ConfigError("mu.lower exceeds mu.upper");
    if (!c.params.contains(c.mu_ref)) throw ConfigError("mu.ref lies outside the parameter box");
    for (double e : c.eps)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps values must lie in (0, 1)");
    if (c.order != 2) throw ConfigError("order: the benchmarks use Q2 (Taylor-Hood Q2/Q1 for stokes)");
    if (!(c.eta > 0.0)) throw ConfigError("eta must be positive");
    if (c.n_clusters > c.n_train || c.n_hyper_clusters > c.n_train)
        throw ConfigError("more clusters than training parameters");
    if (c.method == Method::TTRB && c.problem != Problem::Poisson)
        throw ConfigError("method ttrb requires problem = poisson");
    if (!(c.hyper_ratio >= 1.0)) throw ConfigError("hyper_ratio must be at least 1");
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Config::hash() const {
    const auto pt = [](const auto& v) { return fmt::format("{},{}", v[0], v[1]); };
    std::string canon = fmt::format("problem={}\nmethod={}\nbox={};{}\ngrid={}x{}\norder={}\neta={}\n",
                                    problem == Problem::Poisson ? "poisson" : "stokes",
                                    method == Method::TPOD ? "tpod" : "ttrb", pt(box_lo), pt(box_hi), nx, ny, order, eta);
    canon += fmt::format("mu={};{};{}\nradius={}\ntrain={},{}\nclusters={},{}\nhyper_ratio={}\n", pt(params.lower),
                         pt(params.upper), pt(mu_ref), radius, n_train, halton_skip, n_clusters, n_hyper_clusters,
                         hyper_ratio);
    for (double e : eps) canon += fmt::format("eps={}\n", e);
    canon += fmt::format("seed={}\nkmeans={}\nmaterial={},{},{}\nsvd={},{},{}\nenrich={},{}\n", seed, kmeans_iters,
                         young, poisson_ratio, stiffening, deterministic, oversample, power_iters, enrich,
                         supremizer == SupremizerKind::Cholesky ? "cholesky" : "riesz");
    return fnv1a(canon);
}

std::string Config::hash_hex() const { return fmt::format("{:016x}", hash()); }

OfflineOptions Config::offline_options(double e) const {
    OfflineOptions o;
    o.n_clusters = n_clusters;
    o.n_hyper_clusters = n_hyper_clusters;
    o.eps = e;
    o.hyper_eps = e / hyper_ratio;
    o.method = method;
    o.svd.deterministic = deterministic;
    o.svd.seed = seed;
    o.svd.oversample = oversample;
    o.svd.power_iters = power_iters;
    o.seed = seed;
    o.max_iters = kmeans_iters;
    o.enrich = enrich;
    o.supremizer = supremizer;
    return o;
}

}  // namespace romcut
