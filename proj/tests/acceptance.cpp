// Acceptance gate: one line per criterion, exit 0 only when all pass.
// argv[1] is the path to the CLI binary (used by the determinism and
// end-to-end criteria).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "lfs/analysis.hpp"
#include "lfs/augment.hpp"
#include "lfs/evolution.hpp"
#include "lfs/losses.hpp"
#include "lfs/rng.hpp"
#include "lfs/trainer.hpp"

using namespace lfs;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool ok,
            const std::string& detail = "") {
    std::printf("%s criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- criterion 1: op gradients vs finite differences ----------------------
void crit_op_gradients() {
    const auto t0 = clock_type::now();
    double worst = 0;
    for (int i = 0; i < num::kOpCount; ++i) {
        RngStream rng(0xACC1, static_cast<std::uint64_t>(i));
        worst = std::max(worst, testing::max_fd_error(static_cast<num::Op>(i), 100, rng));
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "worst rel err " << worst << ", " << secs << " s";
    report(1, "34 op kernels match finite differences (rel err < 1e-5, < 10 s)",
           worst < 1e-5 && secs < 10.0, d.str());
}

// ---- criterion 2: cross entropy = kl + entropy ----------------------------
void crit_information_identity() {
    RngStream rng(0xACC2, 0);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t dim = 2 + rng.next_below(63);
        std::vector<double> p(dim), q(dim);
        double sp = 0, sq = 0;
        for (auto& v : p) sp += v = rng.next_double() + 1e-4;
        for (auto& v : q) sq += v = rng.next_double() + 1e-4;
        for (auto& v : p) v /= sp;
        for (auto& v : q) v /= sq;
        worst = std::max(worst, std::abs(num::cross_entropy(p, q) -
                                         (num::kl(p, q) + num::entropy(p))));
    }
    std::ostringstream d;
    d << "worst gap " << worst;
    report(2, "cross entropy equals kl + entropy over 1000 random pairs (1e-10)",
           worst < 1e-10, d.str());
}

// ---- criterion 3: builtin genomes vs closed forms -------------------------
void crit_builtin_fidelity() {
    double worst = 0;
    std::string worst_name;
    for (const auto& name : builtin_names()) {
        const BuiltinLoss& l = builtin(name);
        for (int i = 0; i <= 100; ++i)
            for (int j = 0; j <= 100; ++j) {
                const double y = i / 100.0, yhat = j / 100.0;
                const double gap = std::abs(
                    l.genome.sign * eval_element(l.genome, y, yhat) -
                    l.closed_form(y, yhat));
                if (gap > worst) {
                    worst = gap;
                    worst_name = name;
                }
            }
    }
    std::ostringstream d;
    d << "worst gap " << worst << " (" << worst_name << ")";
    report(3, "16 builtin genomes match closed forms on the 101x101 grid (1e-9)",
           worst < 1e-9, d.str());
}

// ---- criterion 4: genome backward vs finite differences -------------------
void crit_genome_backward() {
    RngStream rng(0xACC4, 0);
    const double h = 1e-6;
    double worst = 0;
    std::size_t checked = 0;
    for (int gi = 0; gi < 50; ++gi) {
        const LossGenome g = random_genome(7000 + static_cast<std::uint64_t>(gi));
        for (int pt = 0; pt < 20; ++pt) {
            Tensor y = Tensor::matrix(1, 3), yhat = Tensor::matrix(1, 3);
            for (std::size_t i = 0; i < 3; ++i) {
                y[i] = 0.1 + 0.8 * rng.next_double();
                yhat[i] = 0.1 + 0.8 * rng.next_double();
            }
            Tensor grad;
            try {
                grad = backward(g, y, yhat);
            } catch (const degenerate_loss_error&) {
                continue;
            }
            for (std::size_t i = 0; i < 3; ++i) {
                Tensor up = yhat, dn = yhat, up2 = yhat, dn2 = yhat;
                up[i] += h;
                dn[i] -= h;
                up2[i] += h / 2;
                dn2[i] -= h / 2;
                double fd, fd2;
                try {
                    fd = (forward_reduced(g, y, up) - forward_reduced(g, y, dn)) / (2 * h);
                    fd2 = (forward_reduced(g, y, up2) - forward_reduced(g, y, dn2)) / h;
                } catch (const degenerate_loss_error&) {
                    continue;
                }
                if (std::abs(fd - fd2) > 1e-3 * std::max(1.0, std::abs(fd)))
                    continue;   // kink between the probes: excluded by contract
                worst = std::max(worst, testing::rel_err(grad[i], fd));
                ++checked;
            }
        }
    }
    std::ostringstream d;
    d << "worst rel err " << worst << " over " << checked << " points";
    report(4, "genome backward matches finite differences (rel err < 1e-4)",
           worst < 1e-4 && checked > 500, d.str());
}

// ---- criterion 5: kendall tau vs brute-force oracle -----------------------
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

void crit_kendall_tau() {
    bool ok = true;
    for (std::size_t n = 2; n <= 6 && ok; ++n) {
        std::vector<double> base(n), perm;
        std::iota(base.begin(), base.end(), 1.0);
        perm = base;
        do {
            if (kendall_tau(base, perm) != tau_oracle(base, perm)) ok = false;
        } while (ok && std::next_permutation(perm.begin(), perm.end()));
    }
    RngStream rng(0xACC5, 0);
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t n = 3 + rng.next_below(20);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.next_below(5));
            b[i] = static_cast<double>(rng.next_below(5));
        }
        if (kendall_tau(a, b) != tau_oracle(a, b)) ok = false;
    }
    report(5, "tau-b equals the pair-count oracle on all permutations and tied lists",
           ok);
}

// ---- criterion 6: clustering vs exhaustive oracle -------------------------
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
                        s += std::hypot(pts[p].first - pts[q].first,
                                        pts[p].second - pts[q].second);
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

void crit_clustering() {
    RngStream rng(0xACC6, 0);
    bool ok = true;
    for (int inst = 0; inst < 20 && ok; ++inst) {
        std::vector<std::pair<double, double>> pts(8);
        for (auto& p : pts) p = {rng.next_double() * 10, rng.next_double() * 10};
        const std::size_t k = 1 + rng.next_below(4);
        if (agglomerative_cluster(pts, k) != cluster_oracle(pts, k)) ok = false;
    }
    std::vector<std::pair<double, double>> blobs;
    for (int i = 0; i < 15; ++i)
        blobs.push_back({rng.next_gaussian() * 0.3, rng.next_gaussian() * 0.3});
    for (int i = 0; i < 15; ++i)
        blobs.push_back({40 + rng.next_gaussian() * 0.3, rng.next_gaussian() * 0.3});
    const auto labels = agglomerative_cluster(blobs, 2);
    for (int i = 1; i < 15; ++i) {
        if (labels[static_cast<std::size_t>(i)] != labels[0]) ok = false;
        if (labels[static_cast<std::size_t>(15 + i)] != labels[15]) ok = false;
    }
    if (labels[0] == labels[15]) ok = false;
    report(6, "average-linkage clustering matches the merge oracle and recovers blobs",
           ok);
}

// ---- criterion 7: evolution beats random search ---------------------------
void crit_evolution_efficacy() {
    const auto t0 = clock_type::now();
    // (a) deterministic mock landscape: fitness = active-node count capped at N
    const auto mock = [](const LossGenome& g) {
        std::size_t n = 0;
        for (bool b : active_nodes(g)) n += b ? 1 : 0;
        return EvalResult{static_cast<double>(std::min(n, g.nodes.size())), false};
    };
    int mock_wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        EvolutionConfig cfg;
        cfg.seed = seed;
        cfg.random_pool_size = 20;
        cfg.population_size = 10;
        cfg.tournament_size = 4;
        Population pop = seed_population(cfg, mock);
        double evo = 0;
        for (const auto& m : pop.members) evo = std::max(evo, m.fitness);
        for (std::size_t it = 0; it < 200; ++it)
            evo = std::max(evo, evolve_step(pop, cfg, mock, it).fitness);
        RngStream rng(seed, 0xACC7);
        double rnd = 0;
        for (int i = 0; i < 220; ++i)
            rnd = std::max(rnd, mock(random_genome(rng.next_u64())).fitness);
        mock_wins += evo >= rnd ? 1 : 0;
    }

    // (b) real training on blobs, 100 evaluations per arm
    const Dataset ds = gaussian_blobs(360, 3, 2, 4.0, 7);
    TrainConfig tc;
    tc.steps = 240;
    tc.warmup_steps = 60;
    tc.batch_size = 64;
    int real_wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto train_eval = [&](const LossGenome& g) {
            const FitnessRecord rec = train_and_score(
                g, ModelKind::Mlp, 32, ds, AugmentId::Base, {}, tc, seed);
            return EvalResult{rec.degenerate ? 0.0 : rec.best_val_acc, rec.degenerate};
        };
        EvolutionConfig cfg;
        cfg.seed = seed;
        cfg.random_pool_size = 30;
        cfg.population_size = 12;
        cfg.tournament_size = 4;
        Population pop = seed_population(cfg, train_eval);
        double evo = 0;
        for (const auto& m : pop.members) evo = std::max(evo, m.fitness);
        for (std::size_t it = 0; it < 70; ++it)   // 30 + 70 = 100 evaluations
            evo = std::max(evo, evolve_step(pop, cfg, train_eval, it).fitness);

        RngStream rng(seed, 0xACC8);
        double rnd = 0;
        for (int i = 0; i < 100; ++i) {
            try {
                rnd = std::max(rnd, train_eval(random_genome(rng.next_u64())).fitness);
            } catch (const std::exception&) {
            }
        }
        real_wins += evo >= rnd ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "mock " << mock_wins << "/5, trained " << real_wins << "/5, " << secs
      << " s";
    report(7, "evolution >= equal-budget random search (mock 4/5, trained 3/5, < 30 min)",
           mock_wins >= 4 && real_wins >= 3 && secs < 1800, d.str());
}

// ---- criterion 8: training baselines --------------------------------------
void crit_training_baseline() {
    const Dataset ds = gaussian_blobs(600, 3, 2, 4.0, 7);
    TrainConfig cfg;
    cfg.steps = 2000;
    cfg.warmup_steps = 1000;
    cfg.batch_size = 128;
    cfg.peak_lr = 1e-3;
    const auto t0 = clock_type::now();
    const FitnessRecord ce = train_and_score(builtin("CE").genome, ModelKind::Mlp,
                                             32, ds, AugmentId::Base, {}, cfg, 1);
    const double ce_secs = seconds_since(t0);
    const auto t1 = clock_type::now();
    const FitnessRecord a2 = train_and_score(builtin("A2").genome, ModelKind::Mlp,
                                             32, ds, AugmentId::Base, {}, cfg, 1);
    const double a2_secs = seconds_since(t1);
    std::ostringstream d;
    d << "CE " << ce.best_val_acc << " in " << ce_secs << " s, A2 "
      << a2.best_val_acc << " in " << a2_secs << " s";
    report(8, "blobs baselines: CE >= 0.95, A2 >= 0.90, each < 30 s",
           ce.best_val_acc >= 0.95 && a2.best_val_acc >= 0.90 && ce_secs < 30 &&
               a2_secs < 30,
           d.str());
}

// ---- criterion 9: phenotype claims ----------------------------------------
void crit_phenotypes() {
    const PhenotypeGrid diff =
        difference_surface(builtin("A2").genome, builtin("CE").genome);
    const GridMax m = normalized_max(diff);
    const bool region_ok = m.yhat < 0.05 && m.y > 0.95;
    const bool magnitude_ok = std::abs(m.value - 0.188) < 0.06;

    const BinaryPhenotype r0 = binary_phenotype(builtin("R0").genome);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < r0.raw.size(); ++i)
        if (r0.raw[i] > r0.raw[argmax]) argmax = i;
    const bool r0_ok = argmax == r0.raw.size() - 1;

    std::ostringstream d;
    d << "A2-CE max " << m.value << " at (y=" << m.y << ", yhat=" << m.yhat
      << "), R0 argmax at yhat=" << r0.yhat[argmax];
    report(9, "A2-CE peak in (yhat<0.05, y>0.95) at 0.188+-0.06; R0 peak at yhat=1",
           region_ok && magnitude_ok && r0_ok, d.str());
}

// ---- criterion 10: augmentation property suite ----------------------------
void crit_augmentations() {
    const auto t0 = clock_type::now();
    bool ok = true;
    RngStream init(0xACCA, 0);
    for (std::uint64_t trial = 0; trial < 10 && ok; ++trial) {
        Batch in;
        in.images = Tensor({6, 12, 12, 1});
        in.labels = Tensor::matrix(6, 4);
        for (std::size_t i = 0; i < in.images.size(); ++i)
            in.images[i] = init.next_double();
        for (std::size_t i = 0; i < 6; ++i) in.labels.at(i, init.next_below(4)) = 1.0;
        for (AugmentId id : {AugmentId::Base, AugmentId::Cutout, AugmentId::Mixup,
                             AugmentId::RandAug, AugmentId::All}) {
            const Batch out = apply_pipeline(id, in, {}, trial * 13 + 5);
            if (out.images.shape() != in.images.shape()) ok = false;
            for (std::size_t i = 0; i < out.images.size(); ++i)
                if (!std::isfinite(out.images[i]) || out.images[i] < 0 ||
                    out.images[i] > 1)
                    ok = false;
            for (std::size_t i = 0; i < 6; ++i) {
                double sum = 0;
                for (std::size_t c = 0; c < 4; ++c) {
                    if (out.labels.at(i, c) < 0) ok = false;
                    sum += out.labels.at(i, c);
                }
                if (std::abs(sum - 1.0) > 1e-9) ok = false;
            }
        }
    }
    // cutout zero count on an all-ones batch
    {
        Batch in;
        in.images = Tensor({8, 12, 12, 1});
        in.labels = Tensor::matrix(8, 2);
        for (std::size_t i = 0; i < in.images.size(); ++i) in.images[i] = 1.0;
        for (std::size_t i = 0; i < 8; ++i) in.labels.at(i, 0) = 1.0;
        AugmentParams p;
        p.cutout_size = 6;
        RngStream rng(0xACCB, 0);
        const Batch out = cutout_augment(in, p, rng);
        for (std::size_t s = 0; s < 8; ++s) {
            std::size_t zeros = 0;
            for (std::size_t i = 0; i < 144; ++i)
                zeros += out.images[s * 144 + i] == 0.0 ? 1 : 0;
            if (zeros < 9 || zeros > 36) ok = false;
        }
    }
    // mixup convexity with recoverable weights
    {
        Batch in;
        in.images = Tensor({2, 4, 4, 1});
        in.labels = Tensor::matrix(2, 2);
        for (std::size_t i = 16; i < 32; ++i) in.images[i] = 1.0;
        in.labels.at(0, 0) = 1.0;
        in.labels.at(1, 1) = 1.0;
        AugmentParams p;
        RngStream rng(0xACCC, 0);
        const Batch out = mixup_augment(in, p, rng);
        for (std::size_t s = 0; s < 2; ++s) {
            const double w1 = out.labels.at(s, 1);
            for (std::size_t i = 0; i < 16; ++i)
                if (std::abs(out.images[s * 16 + i] - w1) > 1e-12) ok = false;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << secs << " s";
    report(10, "augmentation invariants (simplex, shape, range, cutout, mixup) < 5 s",
           ok && secs < 5.0, d.str());
}

// ---- criterion 11: learning-rate schedule ---------------------------------
void crit_lr_schedule() {
    TrainConfig cfg;
    cfg.steps = 2000;
    cfg.warmup_steps = 1000;
    cfg.peak_lr = 1e-3;
    const bool start_ok = lr_at(0, cfg) == 0.0;
    const bool peak_ok = std::abs(lr_at(1000, cfg) - cfg.peak_lr) <= 1e-15;
    const bool end_ok = lr_at(2000, cfg) <= 1e-12 * cfg.peak_lr;
    // gap between the ramp branch and the decay branch at the boundary
    const double decay_at_boundary = cfg.peak_lr * 0.5 * (1.0 + std::cos(0.0));
    const bool continuous = std::abs(lr_at(1000, cfg) - decay_at_boundary) <
                            1e-9 * cfg.peak_lr;
    report(11, "one-cycle schedule: lr(0)=0, lr(warmup)=peak, lr(end)~0, continuous",
           start_ok && peak_ok && end_ok && continuous);
}

// ---- criteria 12-13: CLI determinism and end-to-end -----------------------
int run(const std::string& cmd) { return std::system(cmd.c_str()); }

void write_config(const std::string& path, const std::string& out_dir,
                  std::size_t pool, std::size_t iterations) {
    std::ofstream out(path);
    out << R"({
  "seed": 5,
  "output_dir": ")" << out_dir << R"(",
  "dataset": {"kind": "shapes", "n": 240, "classes": 4, "height": 12, "seed": 9},
  "trainer": {"steps": 150, "batch_size": 16, "peak_lr": 0.003, "warmup_steps": 30,
              "eval_every": 50},
  "evolution": {"population_size": 8, "tournament_size": 3, "iterations": )"
        << iterations << R"(, "random_pool_size": )" << pool << R"(,
                "checkpoint_every": 5},
  "augmentation": {"pipelines": ["base", "cutout", "mixup", "randaug", "all"]}
})";
}

void crit_determinism(const std::string& cli) {
    const fs::path dir = fs::temp_directory_path() / "lfs_acc12";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cfg = (dir / "cfg.json").string();
    write_config(cfg, (dir / "out").string(), 12, 8);

    bool ok = true;
    std::string first_scores, first_ledger;
    ok &= run(cli + " rank-random --config " + cfg + " --jobs 4 > /dev/null") == 0;
    first_scores = slurp((dir / "out/scores.csv").string());
    ok &= run(cli + " rank-random --config " + cfg + " > /dev/null") == 0;
    ok &= !first_scores.empty() &&
          slurp((dir / "out/scores.csv").string()) == first_scores;

    ok &= run(cli + " search --config " + cfg + " > /dev/null") == 0;
    first_ledger = slurp((dir / "out/search_ledger.csv").string());
    fs::remove(dir / "out/checkpoint.json");
    ok &= run(cli + " search --config " + cfg + " > /dev/null") == 0;
    ok &= !first_ledger.empty() &&
          slurp((dir / "out/search_ledger.csv").string()) == first_ledger;
    report(12, "rank-random (incl. --jobs 4) and search ledgers are byte-identical",
           ok);
}

void crit_end_to_end(const std::string& cli) {
    const auto t0 = clock_type::now();
    const fs::path dir = fs::temp_directory_path() / "lfs_acc13";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cfg = (dir / "cfg.json").string();
    write_config(cfg, (dir / "out").string(), 50, 5);

    bool ok = run(cli + " rank-random --config " + cfg + " --jobs 4 > /dev/null") == 0;
    ok &= run(cli + " analyze --config " + cfg + " --scores " +
              (dir / "out/scores.csv").string() + " > /dev/null") == 0;

    // the emitted matrix must be 5x5, symmetric, unit diagonal
    std::istringstream in(slurp((dir / "out/correlation.csv").string()));
    std::string line;
    std::vector<std::vector<double>> m;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');   // augmentation name
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        m.push_back(vals);
    }
    ok &= m.size() == 5;
    for (std::size_t i = 0; i < m.size(); ++i) {
        ok &= m[i].size() == 5;
        if (m[i].size() != 5) break;
        ok &= m[i][i] == 1.0;
        for (std::size_t j = 0; j < 5; ++j) ok &= m[i][j] == m[j][i];
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << secs << " s";
    report(13, "end-to-end rank-random + analyze emits a symmetric 5x5 tau matrix < 20 min",
           ok && secs < 1200, d.str());
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "./lfs";
    crit_op_gradients();
    crit_information_identity();
    crit_builtin_fidelity();
    crit_genome_backward();
    crit_kendall_tau();
    crit_clustering();
    crit_evolution_efficacy();
    crit_training_baseline();
    crit_phenotypes();
    crit_augmentations();
    crit_lr_schedule();
    crit_determinism(cli);
    crit_end_to_end(cli);
    std::printf("%d of 13 criteria passed\n", 13 - failures);
    return failures == 0 ? 0 : 1;
}
