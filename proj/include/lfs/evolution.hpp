#ifndef LFS_EVOLUTION_HPP
#define LFS_EVOLUTION_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfs/genome.hpp"

namespace lfs {

struct EvalResult {
    double fitness = 0.0;
    bool degenerate = false;
};

// Fitness of one genome. Throwing is equivalent to returning a degenerate
// zero-fitness result.
using Evaluator = std::function<EvalResult(const LossGenome&)>;

struct PopulationMember {
    LossGenome genome;
    double fitness = 0.0;
    std::uint64_t age = 0;   // insertion counter; lower = older
    bool degenerate = false;
};

// Age-ordered queue: front is the oldest member and the next to be evicted.
struct Population {
    std::deque<PopulationMember> members;
    std::uint64_t next_age = 0;

    void insert(PopulationMember m) {
        m.age = next_age++;
        members.push_back(std::move(m));
    }
};

struct EvolutionConfig {
    std::size_t population_size = 20;
    std::size_t tournament_size = 5;
    std::size_t iterations = 200;
    std::size_t random_pool_size = 200;
    std::size_t genome_length = kDefaultGenomeLength;
    std::uint64_t seed = 0;
};

// One ledger row per evolution step.
struct StepRecord {
    std::size_t iteration = 0;
    std::uint64_t parent_hash = 0;
    std::uint64_t child_hash = 0;
    double fitness = 0.0;
    bool degenerate = false;
};

// Evaluates random_pool_size random genomes and keeps the best
// population_size, oldest-first in pool order.
Population seed_population(const EvolutionConfig& cfg, const Evaluator& eval);

// Tournament of tournament_size members sampled without replacement; ties go
// to the oldest. The winner's mutant replaces the oldest member. Randomness
// is a pure function of (cfg.seed, iteration) so interrupted runs resume
// bit-exactly.
StepRecord evolve_step(Population& pop, const EvolutionConfig& cfg,
                       const Evaluator& eval, std::size_t iteration);

// Elimination tournament: each stage re-evaluates every survivor extra_runs
// more times, ranks by the mean of all scores accumulated so far, and keeps
// the best top_k.
struct EliminationStage {
    std::size_t top_k = 0;
    std::size_t extra_runs = 1;
};

std::vector<EliminationStage> default_elimination_stages();   // 24/12/6/3

struct EliminationEntry {
    LossGenome genome;
    std::vector<double> scores;
    double mean = 0.0;
};

// run_index increases across stages so every evaluation gets a fresh seed.
using StageEvaluator = std::function<double(const LossGenome&, std::size_t run_index)>;

// Returns the final ranked survivors (best first) with full score history.
// A stage whose top_k exceeds the candidate count passes everything through;
// the warning (if any) is appended to *warnings when given.
std::vector<EliminationEntry> eliminate(const std::vector<LossGenome>& candidates,
                                        const std::vector<EliminationStage>& stages,
                                        const StageEvaluator& eval,
                                        std::vector<std::string>* warnings = nullptr);

// Thread-safe memo of fitness results keyed by (active-subgraph hash,
// augmentation id, dataset id, config hash).
class FitnessCache {
public:
    bool lookup(const std::string& key, EvalResult& out) const;
    void store(const std::string& key, const EvalResult& r);
    static std::string key(std::uint64_t genome_hash, const std::string& augmentation,
                           const std::string& dataset_id, std::uint64_t cfg_hash);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, EvalResult> map_;
};

// Checkpoint (population + completed iteration count) as versioned JSON.
std::string serialize_population(const Population& pop, std::size_t iterations_done);
Population parse_population(const std::string& text, std::size_t& iterations_done);

std::string step_csv_header();
std::string step_csv_row(const StepRecord& r);

} // namespace lfs

#endif
