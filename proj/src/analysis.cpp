#include "lfs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lfs {

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("kendall_tau: length mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("kendall_tau: need at least 2 entries");
    const std::size_t n = a.size();
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0) ++ties_a;
            if (db == 0) ++ties_b;
            if (da * db > 0)
                ++concordant;
            else if (da * db < 0)
                ++discordant;
        }
    const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double denom = std::sqrt((n0 - static_cast<double>(ties_a)) *
                                   (n0 - static_cast<double>(ties_b)));
    if (denom == 0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

void ScoreTable::set(std::uint64_t genome, const std::string& aug, double acc) {
    cells[genome][aug] = acc;
}

bool ScoreTable::has(std::uint64_t genome, const std::string& aug) const {
    auto it = cells.find(genome);
    return it != cells.end() && it->second.count(aug) != 0;
}

double ScoreTable::get(std::uint64_t genome, const std::string& aug) const {
    return cells.at(genome).at(aug);
}

std::vector<std::string> ScoreTable::augmentations() const {
    std::set<std::string> s;
    for (const auto& [hash, row] : cells)
        for (const auto& [aug, acc] : row) s.insert(aug);
    return {s.begin(), s.end()};
}

std::string score_table_csv(const ScoreTable& t) {
    std::ostringstream os;
    os.precision(17);
    os << "genome_hash,augmentation,accuracy\n";
    for (const auto& [hash, row] : t.cells)
        for (const auto& [aug, acc] : row)
            os << hash << ',' << aug << ',' << acc << '\n';
    return os.str();
}

ScoreTable parse_score_table_csv(const std::string& text) {
    ScoreTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || lineno == 1) continue;   // header
        std::istringstream row(line);
        std::string hash, aug, acc;
        if (!std::getline(row, hash, ',') || !std::getline(row, aug, ',') ||
            !std::getline(row, acc))
            throw std::runtime_error("score table line " + std::to_string(lineno) +
                                     ": expected genome_hash,augmentation,accuracy");
        t.set(std::stoull(hash), aug, std::stod(acc));
    }
    return t;
}

std::vector<std::vector<double>> correlation_matrix(const ScoreTable& t,
                                                    const std::vector<std::string>& augs) {
    const std::size_t m = augs.size();
    std::vector<std::vector<double>> out(m, std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            std::vector<double> a, b;
            for (const auto& [hash, row] : t.cells) {
                auto ia = row.find(augs[i]);
                auto ib = row.find(augs[j]);
                if (ia != row.end() && ib != row.end()) {
                    a.push_back(ia->second);
                    b.push_back(ib->second);
                }
            }
            const double tau = a.size() >= 2 ? kendall_tau(a, b) : 0.0;
            out[i][j] = out[j][i] = tau;
        }
    return out;
}

std::string matrix_csv(const std::vector<std::string>& augs,
                       const std::vector<std::vector<double>>& m) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& a : augs) os << ',' << a;
    os << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << augs[i];
        for (double v : m[i]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

namespace {

std::set<std::uint64_t> top_k(const ScoreTable& t, const std::string& aug,
                              std::size_t k) {
    std::vector<std::pair<double, std::uint64_t>> ranked;
    for (const auto& [hash, row] : t.cells) {
        auto it = row.find(aug);
        if (it != row.end()) ranked.emplace_back(it->second, hash);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::set<std::uint64_t> out;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
        out.insert(ranked[i].second);
    return out;
}

} // namespace

std::set<std::uint64_t> best_k_intersection(const ScoreTable& t, const std::string& aug1,
                                            const std::string& aug2, std::size_t k) {
    const auto s1 = top_k(t, aug1, k);
    const auto s2 = top_k(t, aug2, k);
    std::set<std::uint64_t> out;
    std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(),
                          std::inserter(out, out.begin()));
    return out;
}

std::vector<std::size_t> agglomerative_cluster(
    const std::vector<std::pair<double, double>>& points, std::size_t k) {
    const std::size_t n = points.size();
    if (k == 0 || k > n)
        throw std::invalid_argument("agglomerative_cluster: need 1 <= k <= n");
    std::vector<std::vector<std::size_t>> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

    auto linkage = [&](const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
        double sum = 0.0;
        for (std::size_t i : a)
            for (std::size_t j : b)
                sum += std::hypot(points[i].first - points[j].first,
                                  points[i].second - points[j].second);
        return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    };

    while (clusters.size() > k) {
        std::size_t bi = 0, bj = 1;
        double best = linkage(clusters[0], clusters[1]);
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                if (i == 0 && j == 1) continue;
                const double d = linkage(clusters[i], clusters[j]);
                if (d < best) {   // strict: ties keep the lowest (i, j)
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                            clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    // Label clusters 0..k-1 by their smallest point index.
    std::vector<std::size_t> order(clusters.size());
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return clusters[a].front() < clusters[b].front();
    });
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        for (std::size_t i : clusters[order[rank]]) labels[i] = rank;
    return labels;
}

} // namespace lfs
