#ifndef LFS_ANALYSIS_HPP
#define LFS_ANALYSIS_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lfs {

// Kendall's tau-b (tie-corrected) over two equal-length score lists.
// Returns a value in [-1, 1]; 0 when either list is fully tied.
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

// Accuracy per (genome, augmentation). Missing cells stay absent rather than
// defaulting to zero.
struct ScoreTable {
    // genome hash -> augmentation id -> accuracy
    std::map<std::uint64_t, std::map<std::string, double>> cells;

    void set(std::uint64_t genome, const std::string& aug, double acc);
    bool has(std::uint64_t genome, const std::string& aug) const;
    double get(std::uint64_t genome, const std::string& aug) const;
    std::vector<std::string> augmentations() const;   // sorted, union over rows
};

std::string score_table_csv(const ScoreTable& t);
ScoreTable parse_score_table_csv(const std::string& text);

// Pairwise tau over genomes present in both columns. Symmetric, unit
// diagonal; order of rows/columns follows `augs`.
std::vector<std::vector<double>> correlation_matrix(const ScoreTable& t,
                                                    const std::vector<std::string>& augs);

std::string matrix_csv(const std::vector<std::string>& augs,
                       const std::vector<std::vector<double>>& m);

// Intersection of the top-k genomes (by accuracy, ties by lower hash) of two
// columns.
std::set<std::uint64_t> best_k_intersection(const ScoreTable& t, const std::string& aug1,
                                            const std::string& aug2, std::size_t k);

// Average-linkage agglomerative clustering of 2-D points down to k clusters.
// Deterministic: among equal-distance pairs the one with the lowest cluster
// indices merges first. Labels are 0..k-1 in order of first point.
std::vector<std::size_t> agglomerative_cluster(
    const std::vector<std::pair<double, double>>& points, std::size_t k);

} // namespace lfs

#endif
