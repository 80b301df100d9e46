// Experiment driver: every pipeline stage as a subcommand over one JSON
// config. Exit codes: 0 success, 1 runtime failure, 2 config/usage error.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfs/analysis.hpp"
#include "lfs/config.hpp"
#include "lfs/evolution.hpp"
#include "lfs/losses.hpp"
#include "lfs/parallel.hpp"
#include "lfs/rng.hpp"

namespace fs = std::filesystem;
using namespace lfs;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_manifest(const ExperimentConfig& cfg) {
    nlohmann::json m;
    m["config_hash"] = config_hash(cfg);
    m["genome_schema"] = kGenomeSchemaVersion;
    m["config"] = nlohmann::json::parse(dump_config(cfg));
    write_file(cfg.output_dir + "/manifest.json", m.dump(2) + "\n");
}

// One fitness evaluation under the configured trainer; the fitness of a
// degenerate candidate is 0.
EvalResult evaluate_fitness(const LossGenome& g, const ExperimentConfig& cfg,
                            const Dataset& ds, AugmentId pipeline,
                            std::uint64_t run_seed, FitnessCache* cache) {
    const std::string key =
        FitnessCache::key(active_hash(g), augment_name(pipeline), ds.id,
                          config_hash(cfg) ^ run_seed);
    EvalResult r;
    if (cache && cache->lookup(key, r)) return r;
    const FitnessRecord rec =
        train_and_score(g, resolve_model(cfg.trainer, ds), cfg.trainer.hidden, ds,
                        pipeline, cfg.augment, cfg.trainer.train, run_seed);
    r.fitness = rec.degenerate ? 0.0 : rec.best_val_acc;
    r.degenerate = rec.degenerate;
    if (cache) cache->store(key, r);
    return r;
}

int cmd_rank_random(const std::string& config_path, std::size_t jobs) {
    const ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(cfg.output_dir);
    const Dataset ds = build_dataset(cfg.dataset);

    RngStream rng(cfg.seed, 0x73656564ULL);   // same pool as seed_population
    std::vector<LossGenome> pool(cfg.search.evolution.random_pool_size);
    for (auto& g : pool)
        g = random_genome(rng.next_u64(), cfg.search.evolution.genome_length);

    FitnessCache cache;
    const std::size_t n_aug = cfg.pipelines.size();
    const std::size_t n_tasks = pool.size() * n_aug;
    const auto results = parallel_map<EvalResult>(n_tasks, jobs, [&](std::size_t i) {
        const LossGenome& g = pool[i / n_aug];
        const AugmentId aug = cfg.pipelines[i % n_aug];
        try {
            return evaluate_fitness(g, cfg, ds, aug, cfg.seed, &cache);
        } catch (const std::exception&) {
            return EvalResult{0.0, true};
        }
    });

    ScoreTable table;
    for (std::size_t i = 0; i < n_tasks; ++i)
        table.set(active_hash(pool[i / n_aug]),
                  augment_name(cfg.pipelines[i % n_aug]), results[i].fitness);
    write_file(cfg.output_dir + "/scores.csv", score_table_csv(table));

    std::ofstream genomes(cfg.output_dir + "/pool.jsonl");
    for (const auto& g : pool) genomes << serialize(g) << '\n';
    write_manifest(cfg);
    std::cout << "rank-random: " << pool.size() << " genomes x " << n_aug
              << " pipelines -> " << cfg.output_dir << "/scores.csv\n";
    return 0;
}

void flush_ledger(const std::string& path, const std::vector<std::string>& rows) {
    std::ostringstream os;
    os << step_csv_header() << '\n';
    for (const auto& r : rows) os << r << '\n';
    write_file(path, os.str());
}

int cmd_search(const std::string& config_path, bool resume) {
    const ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(cfg.output_dir);
    const Dataset ds = build_dataset(cfg.dataset);
    // Evolution searches under the first configured pipeline.
    const AugmentId aug = cfg.pipelines.front();

    FitnessCache cache;
    const Evaluator eval = [&](const LossGenome& g) {
        return evaluate_fitness(g, cfg, ds, aug, cfg.seed, &cache);
    };

    const std::string ckpt_path = cfg.output_dir + "/checkpoint.json";
    const std::string ledger_path = cfg.output_dir + "/search_ledger.csv";
    Population pop;
    std::size_t done = 0;
    std::vector<std::string> ledger;
    if (resume && fs::exists(ckpt_path)) {
        pop = parse_population(read_file(ckpt_path), done);
        std::istringstream in(read_file(ledger_path));
        std::string line;
        std::getline(in, line);   // header
        while (std::getline(in, line) && ledger.size() < done)
            if (!line.empty()) ledger.push_back(line);
    } else {
        pop = seed_population(cfg.search.evolution, eval);
    }

    for (std::size_t it = done; it < cfg.search.evolution.iterations; ++it) {
        const StepRecord rec = evolve_step(pop, cfg.search.evolution, eval, it);
        ledger.push_back(step_csv_row(rec));
        if ((it + 1) % cfg.search.checkpoint_every == 0) {
            write_file(ckpt_path, serialize_population(pop, it + 1));
            flush_ledger(ledger_path, ledger);
        }
    }
    write_file(ckpt_path, serialize_population(pop, cfg.search.evolution.iterations));
    flush_ledger(ledger_path, ledger);

    const auto best = std::max_element(
        pop.members.begin(), pop.members.end(),
        [](const PopulationMember& a, const PopulationMember& b) {
            if (a.fitness != b.fitness) return a.fitness < b.fitness;
            return a.age > b.age;   // prefer the older on ties
        });
    write_file(cfg.output_dir + "/best_genome.json", serialize(best->genome) + "\n");
    write_manifest(cfg);
    std::cout << "search: " << cfg.search.evolution.iterations
              << " iterations, best fitness " << best->fitness << " -> "
              << cfg.output_dir << "/best_genome.json\n";
    return 0;
}

int cmd_eliminate(const std::string& config_path,
                  const std::vector<std::string>& genome_files) {
    const ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(cfg.output_dir);
    const Dataset ds = build_dataset(cfg.dataset);
    const AugmentId aug = cfg.pipelines.front();

    std::vector<LossGenome> candidates;
    for (const auto& f : genome_files) candidates.push_back(parse_genome(read_file(f)));

    const StageEvaluator eval = [&](const LossGenome& g, std::size_t run) {
        // Fresh seed per run so stage means average independent trainings.
        return evaluate_fitness(g, cfg, ds, aug, cfg.seed + 1 + run, nullptr).fitness;
    };
    std::vector<std::string> warnings;
    const auto survivors =
        eliminate(candidates, default_elimination_stages(), eval, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

    std::ostringstream os;
    os.precision(17);
    os << "rank,genome_hash,mean,scores\n";
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        os << i << ',' << active_hash(survivors[i].genome) << ','
           << survivors[i].mean << ',';
        for (std::size_t s = 0; s < survivors[i].scores.size(); ++s)
            os << (s ? ";" : "") << survivors[i].scores[s];
        os << '\n';
    }
    write_file(cfg.output_dir + "/elimination.csv", os.str());
    for (std::size_t i = 0; i < survivors.size(); ++i)
        write_file(cfg.output_dir + "/survivor_" + std::to_string(i) + ".json",
                   serialize(survivors[i].genome) + "\n");
    std::cout << "eliminate: " << candidates.size() << " candidates -> "
              << survivors.size() << " survivors\n";
    return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& scores_path) {
    const ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(cfg.output_dir);
    const ScoreTable table = parse_score_table_csv(read_file(scores_path));
    const auto augs = table.augmentations();
    if (augs.size() < 2) throw std::runtime_error("score table has fewer than 2 columns");

    const auto matrix = correlation_matrix(table, augs);
    write_file(cfg.output_dir + "/correlation.csv", matrix_csv(augs, matrix));

    // Scatter data (acc under first vs last column) with cluster labels.
    const std::string ax = augs.front(), ay = augs.back();
    std::vector<std::pair<double, double>> points;
    std::vector<std::uint64_t> hashes;
    for (const auto& [hash, row] : table.cells)
        if (row.count(ax) && row.count(ay)) {
            points.emplace_back(row.at(ax), row.at(ay));
            hashes.push_back(hash);
        }
    std::ostringstream os;
    os.precision(17);
    os << "genome_hash,acc_" << ax << ",acc_" << ay << ",cluster\n";
    if (points.size() >= cfg.analysis.cluster_k) {
        const auto labels = agglomerative_cluster(points, cfg.analysis.cluster_k);
        for (std::size_t i = 0; i < points.size(); ++i)
            os << hashes[i] << ',' << points[i].first << ',' << points[i].second
               << ',' << labels[i] << '\n';
    }
    write_file(cfg.output_dir + "/clusters.csv", os.str());

    const auto inter = best_k_intersection(table, ax, ay, cfg.analysis.best_k);
    std::cout << "analyze: " << augs.size() << "x" << augs.size()
              << " correlation matrix; |top-" << cfg.analysis.best_k << " "
              << ax << " ∩ " << ay << "| = " << inter.size() << '\n';
    return 0;
}

int cmd_phenotype(const std::vector<std::string>& names, bool diff,
                  std::size_t samples, const std::string& out_path) {
    std::ostringstream os;
    os.precision(17);
    if (diff) {
        if (names.size() != 2)
            throw config_error("--diff needs exactly two loss names");
        const BuiltinLoss a = builtin(names[0]), b = builtin(names[1]);
        const PhenotypeGrid g = difference_surface(a.genome, b.genome, samples);
        os << "y,yhat,raw_diff,normalized_diff\n";
        for (std::size_t i = 0; i < g.y_axis.size(); ++i)
            for (std::size_t j = 0; j < g.yhat_axis.size(); ++j)
                os << g.y_axis[i] << ',' << g.yhat_axis[j] << ','
                   << g.raw.at(i, j) << ',' << g.normalized.at(i, j) << '\n';
        const GridMax m = normalized_max(g);
        os << "max," << m.y << ',' << m.yhat << ',' << m.value << '\n';
        std::cout << "max |" << names[0] << "-" << names[1] << "| = " << m.value
                  << " at y=" << m.y << " yhat=" << m.yhat << '\n';
    } else {
        os << "loss,yhat,raw,normalized\n";
        for (const auto& name : names) {
            const BuiltinLoss l = builtin(name);
            const BinaryPhenotype ph = binary_phenotype(l.genome, samples);
            for (std::size_t i = 0; i < ph.yhat.size(); ++i)
                os << name << ',' << ph.yhat[i] << ',' << ph.raw[i] << ','
                   << ph.normalized[i] << '\n';
        }
    }
    if (out_path.empty())
        std::cout << os.str();
    else
        write_file(out_path, os.str());
    return 0;
}

int cmd_losses_list() {
    for (const auto& name : builtin_names()) {
        const BuiltinLoss l = builtin(name);
        std::cout << name << '\t' << active_hash(l.genome) << '\t'
                  << (l.genome.sign < 0 ? '-' : '+') << '\n';
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& loss_name,
              const std::string& genome_file, const std::string& aug_name) {
    const ExperimentConfig cfg = load_config(config_path);
    const Dataset ds = build_dataset(cfg.dataset);
    LossGenome g = genome_file.empty() ? builtin(loss_name).genome
                                       : parse_genome(read_file(genome_file));
    const AugmentId aug =
        aug_name.empty() ? cfg.pipelines.front() : augment_from_name(aug_name);
    const FitnessRecord rec =
        train_and_score(g, resolve_model(cfg.trainer, ds), cfg.trainer.hidden, ds,
                        aug, cfg.augment, cfg.trainer.train, cfg.seed);
    std::cout << fitness_csv_header() << '\n' << fitness_csv_row(rec) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"loss-function search pipeline"};
    app.require_subcommand(1);

    std::string config_path, scores_path, genome_file, loss_name = "CE";
    std::string aug_name, out_path;
    std::vector<std::string> names, genome_files;
    std::size_t jobs = 1, samples = 101;
    bool diff = false, resume = false;

    auto* rank = app.add_subcommand("rank-random", "score a random pool per pipeline");
    rank->add_option("--config", config_path)->required();
    rank->add_option("--jobs", jobs);

    auto* search = app.add_subcommand("search", "regularized evolution");
    search->add_option("--config", config_path)->required();
    search->add_flag("--resume", resume);

    auto* elim = app.add_subcommand("eliminate", "staged elimination tournament");
    elim->add_option("--config", config_path)->required();
    elim->add_option("genomes", genome_files, "candidate genome files")->required();

    auto* analyze = app.add_subcommand("analyze", "correlation + clustering");
    analyze->add_option("--config", config_path)->required();
    analyze->add_option("--scores", scores_path)->required();

    auto* pheno = app.add_subcommand("phenotype", "loss curves / difference surface");
    pheno->add_option("names", names, "builtin loss names")->required();
    pheno->add_flag("--diff", diff);
    pheno->add_option("--samples", samples);
    pheno->add_option("--out", out_path);

    auto* losses = app.add_subcommand("losses", "builtin losses");
    auto* list = losses->add_subcommand("list", "list builtin losses");
    losses->require_subcommand(1);

    auto* train = app.add_subcommand("train", "train one loss on the config dataset");
    train->add_option("--config", config_path)->required();
    train->add_option("--loss", loss_name);
    train->add_option("--genome", genome_file);
    train->add_option("--aug", aug_name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (rank->parsed()) return cmd_rank_random(config_path, jobs);
        if (search->parsed()) return cmd_search(config_path, resume);
        if (elim->parsed()) return cmd_eliminate(config_path, genome_files);
        if (analyze->parsed()) return cmd_analyze(config_path, scores_path);
        if (pheno->parsed()) return cmd_phenotype(names, diff, samples, out_path);
        if (list->parsed()) return cmd_losses_list();
        if (train->parsed())
            return cmd_train(config_path, loss_name, genome_file, aug_name);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
