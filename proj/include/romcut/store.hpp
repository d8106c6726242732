#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "romcut/localization.hpp"

namespace romcut {

/// Directory holding manifest.txt (key=value) and data.bin (column-major f64, little endian).
struct StoredMatrix {
    Matrix data;
    std::map<std::string, std::string> meta;
};

void write_matrix(const std::filesystem::path& dir, const std::string& kind, const Matrix& M,
                  const std::map<std::string, std::string>& meta = {});
StoredMatrix read_matrix(const std::filesystem::path& dir);

void save_snapshots(const std::filesystem::path& dir, const SnapshotSet& s);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

/// clusters.txt, model.txt, basis_j/, hyper_k/, proj_j_k/.
void save_model(const std::filesystem::path& dir, const ClusterModel& m);
ClusterModel load_model(const std::filesystem::path& dir);

/// Exact decimal form of a double (round-trips bit for bit).
std::string exact_str(double x);
std::string join_ints(const std::vector<int>& v);
std::vector<int> split_ints(const std::string& s);
std::vector<double> split_doubles(const std::string& s);

std::map<std::string, std::string> read_key_values(const std::filesystem::path& file);
void write_key_values(const std::filesystem::path& file, const std::map<std::string, std::string>& kv);

}  // namespace romcut
