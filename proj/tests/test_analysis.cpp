#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lfs/analysis.hpp"
#include "lfs/rng.hpp"

using namespace lfs;

namespace {

// Independent tau-b oracle: explicit pair counts plugged into the textbook
// formula.
double tau_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double c = 0, d = 0, ta = 0, tb = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const int sa = a[i] < a[j] ? -1 : (a[i] > a[j] ? 1 : 0);
            const int sb = b[i] < b[j] ? -1 : (b[i] > b[j] ? 1 : 0);
            if (sa == 0) ta += 1;
            if (sb == 0) tb += 1;
            if (sa * sb == 1) c += 1;
            if (sa * sb == -1) d += 1;
        }
    const double n0 = n * (n - 1) / 2.0;
    const double denom = std::sqrt((n0 - ta) * (n0 - tb));
    return denom == 0 ? 0.0 : (c - d) / denom;
}

} // namespace

TEST_CASE("kendall tau endpoints and the worked example") {
    const std::vector<double> a = {1, 2, 3, 4};
    CHECK(kendall_tau(a, a) == doctest::Approx(1.0));
    const std::vector<double> rev = {4, 3, 2, 1};
    CHECK(kendall_tau(a, rev) == doctest::Approx(-1.0));
    const std::vector<double> b = {1, 3, 2, 4};
    CHECK(kendall_tau(a, b) == doctest::Approx(2.0 / 3));
    CHECK_THROWS_AS(kendall_tau({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(kendall_tau({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("tau matches the oracle on all permutations of n <= 6") {
    for (std::size_t n = 2; n <= 6; ++n) {
        std::vector<double> base(n);
        std::iota(base.begin(), base.end(), 1.0);
        std::vector<double> perm = base;
        do {
            CHECK(kendall_tau(base, perm) == tau_oracle(base, perm));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("tau matches the oracle on random tied lists") {
    RngStream rng(0x7A0, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.next_below(20);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.next_below(5));   // heavy ties
            b[i] = static_cast<double>(rng.next_below(5));
        }
        CHECK(kendall_tau(a, b) == tau_oracle(a, b));
    }
}

TEST_CASE("tau is symmetric and monotone-transform invariant") {
    RngStream rng(0x7A1, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(10), b(10);
        for (std::size_t i = 0; i < 10; ++i) {
            a[i] = rng.next_double();
            b[i] = rng.next_double();
        }
        CHECK(kendall_tau(a, b) == doctest::Approx(kendall_tau(b, a)));
        std::vector<double> ta(10), tb(10);
        for (std::size_t i = 0; i < 10; ++i) {
            ta[i] = std::exp(3 * a[i]);     // strictly increasing
            tb[i] = std::atan(5 * b[i] - 1);
        }
        CHECK(kendall_tau(ta, tb) == doctest::Approx(kendall_tau(a, b)));
    }
}

TEST_CASE("correlation matrix is symmetric with unit diagonal") {
    ScoreTable t;
    RngStream rng(0x7A2, 0);
    for (std::uint64_t g = 0; g < 40; ++g) {
        const double base = rng.next_double();
        t.set(g, "base", base);
        t.set(g, "copy", base);             // duplicated column
        t.set(g, "noise", rng.next_double());
    }
    const std::vector<std::string> augs = {"base", "copy", "noise"};
    const auto m = correlation_matrix(t, augs);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m[i][i] == 1.0);
        for (std::size_t j = 0; j < 3; ++j) CHECK(m[i][j] == m[j][i]);
    }
    CHECK(m[0][1] == doctest::Approx(1.0));
}

TEST_CASE("independent columns correlate near zero") {
    ScoreTable t;
    RngStream rng(0x7A3, 0);
    for (std::uint64_t g = 0; g < 1000; ++g) {
        t.set(g, "x", rng.next_double());
        t.set(g, "y", rng.next_double());
    }
    const auto m = correlation_matrix(t, {"x", "y"});
    CHECK(std::abs(m[0][1]) < 0.1);
}

TEST_CASE("missing cells are skipped, not defaulted") {
    ScoreTable t;
    t.set(1, "a", 0.9);
    t.set(1, "b", 0.8);
    t.set(2, "a", 0.5);   // no "b" for genome 2
    t.set(3, "a", 0.1);
    t.set(3, "b", 0.2);
    CHECK_FALSE(t.has(2, "b"));
    const auto m = correlation_matrix(t, {"a", "b"});
    CHECK(m[0][1] == doctest::Approx(1.0));   // genomes 1, 3 agree in order
}

TEST_CASE("best-k intersection") {
    ScoreTable t;
    for (std::uint64_t g = 0; g < 6; ++g) {
        t.set(g, "base", static_cast<double>(g));         // top-3: 5, 4, 3
        t.set(g, "all", static_cast<double>(5 - g));      // top-3: 0, 1, 2
        t.set(g, "same", static_cast<double>(g));
    }
    CHECK(best_k_intersection(t, "base", "all", 3).empty());
    CHECK(best_k_intersection(t, "base", "same", 3) ==
          std::set<std::uint64_t>{3, 4, 5});
    // crafted overlap
    ScoreTable u;
    u.set(10, "p", 0.9); u.set(10, "q", 0.9);
    u.set(11, "p", 0.8); u.set(11, "q", 0.1);
    u.set(12, "p", 0.7); u.set(12, "q", 0.8);
    u.set(13, "p", 0.1); u.set(13, "q", 0.7);
    u.set(14, "p", 0.2); u.set(14, "q", 0.2);
    u.set(15, "p", 0.3); u.set(15, "q", 0.3);
    CHECK(best_k_intersection(u, "p", "q", 3) == std::set<std::uint64_t>{10, 12});
}

TEST_CASE("ties in the top-k cut resolve by lower hash") {
    ScoreTable t;
    t.set(5, "a", 0.5);
    t.set(9, "a", 0.5);
    t.set(2, "a", 0.5);
    t.set(5, "b", 0.5);
    t.set(9, "b", 0.5);
    t.set(2, "b", 0.5);
    CHECK(best_k_intersection(t, "a", "b", 2) == std::set<std::uint64_t>{2, 5});
}

namespace {

// Exhaustive oracle: the same average-linkage definition executed by a
// separate scan-all-pairs implementation.
std::vector<std::size_t> cluster_oracle(
    const std::vector<std::pair<double, double>>& pts, std::size_t k) {
    std::vector<std::vector<std::size_t>> cl(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) cl[i] = {i};
    while (cl.size() > k) {
        double best = 1e300;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < cl.size(); ++i)
            for (std::size_t j = i + 1; j < cl.size(); ++j) {
                double s = 0;
                for (auto p : cl[i])
                    for (auto q : cl[j])
                        s += std::sqrt(
                            (pts[p].first - pts[q].first) * (pts[p].first - pts[q].first) +
                            (pts[p].second - pts[q].second) * (pts[p].second - pts[q].second));
                s /= static_cast<double>(cl[i].size() * cl[j].size());
                if (s < best) {
                    best = s;
                    bi = i;
                    bj = j;
                }
            }
        for (auto q : cl[bj]) cl[bi].push_back(q);
        cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    std::vector<std::size_t> min_idx(cl.size());
    for (std::size_t i = 0; i < cl.size(); ++i)
        min_idx[i] = *std::min_element(cl[i].begin(), cl[i].end());
    std::vector<std::size_t> order(cl.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return min_idx[x] < min_idx[y]; });
    std::vector<std::size_t> labels(pts.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        for (auto p : cl[order[r]]) labels[p] = r;
    return labels;
}

} // namespace

TEST_CASE("clustering matches the exhaustive merge oracle") {
    RngStream rng(0xC1, 0);
    for (int inst = 0; inst < 20; ++inst) {
        std::vector<std::pair<double, double>> pts(8);
        for (auto& p : pts) p = {rng.next_double() * 10, rng.next_double() * 10};
        const std::size_t k = 1 + rng.next_below(4);
        CHECK(agglomerative_cluster(pts, k) == cluster_oracle(pts, k));
    }
}

TEST_CASE("clustering trivia: k = n and two separated blobs") {
    std::vector<std::pair<double, double>> pts = {{0, 0}, {1, 1}, {2, 2}};
    const auto singles = agglomerative_cluster(pts, 3);
    CHECK(singles == std::vector<std::size_t>{0, 1, 2});

    RngStream rng(0xC2, 0);
    std::vector<std::pair<double, double>> blobs;
    for (int i = 0; i < 10; ++i)
        blobs.push_back({rng.next_gaussian() * 0.2, rng.next_gaussian() * 0.2});
    for (int i = 0; i < 10; ++i)
        blobs.push_back({50 + rng.next_gaussian() * 0.2, rng.next_gaussian() * 0.2});
    const auto labels = agglomerative_cluster(blobs, 2);
    for (int i = 0; i < 10; ++i) {
        CHECK(labels[static_cast<std::size_t>(i)] == labels[0]);
        CHECK(labels[static_cast<std::size_t>(10 + i)] == labels[10]);
    }
    CHECK(labels[0] != labels[10]);
    CHECK_THROWS_AS(agglomerative_cluster(blobs, 0), std::invalid_argument);
    CHECK_THROWS_AS(agglomerative_cluster(blobs, 21), std::invalid_argument);
}

TEST_CASE("score tables round-trip through csv") {
    ScoreTable t;
    t.set(123, "base", 0.875);
    t.set(123, "all", 0.625);
    t.set(456, "base", 0.25);
    const ScoreTable back = parse_score_table_csv(score_table_csv(t));
    CHECK(back.cells == t.cells);
    CHECK(back.augmentations() == std::vector<std::string>{"all", "base"});
}
