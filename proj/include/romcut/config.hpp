#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "romcut/core.hpp"
#include "romcut/localization.hpp"

namespace romcut {

enum class Problem { Poisson, Stokes };

/// Flat key=value benchmark configuration ('#' starts a comment).
struct Config {
    std::map<std::string, std::string> raw;

    Problem problem = Problem::Poisson;
    Method method = Method::TPOD;
    Point box_lo{-1.0, -1.0};
    Point box_hi{1.0, 1.0};
    int nx = 20;
    int ny = 20;
    int order = 2;
    double eta = 40.0;
    ParameterBox params{{-0.15, 0.25}, {0.35, 0.35}};
    ParameterPoint mu_ref{0.1, 0.3};
    double radius = 0.25;  // stokes: fixed hole radius
    int n_train = 50;
    int halton_skip = 20;
    int n_clusters = 4;
    int n_hyper_clusters = 4;
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    double hyper_ratio = 100.0;
    std::uint64_t seed = 1;
    int kmeans_iters = 100;
    int n_online = 10;
    std::uint64_t online_seed = 7;
    double young = 1.0;
    double poisson_ratio = 0.3;
    double stiffening = 1.0;
    bool deterministic = true;
    int oversample = 10;
    int power_iters = 2;
    bool enrich = true;
    SupremizerKind supremizer = SupremizerKind::Cholesky;
    bool write_vtk = true;
    int workers = 1;
    std::string output = "out";

    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    /// Set one key; unknown keys and bad values raise ConfigError.
    void apply(const std::string& key, const std::string& value);

    /// FNV-1a over the effective values that shape the offline model.
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] std::string hash_hex() const;
    [[nodiscard]] OfflineOptions offline_options(double eps) const;
};

std::uint64_t fnv1a(const std::string& s);

}  // namespace romcut
