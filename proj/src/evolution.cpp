#include "lfs/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lfs/rng.hpp"

namespace lfs {

namespace {

EvalResult safe_eval(const Evaluator& eval, const LossGenome& g) {
    try {
        return eval(g);
    } catch (const std::exception&) {
        return {0.0, true};
    }
}

} // namespace

Population seed_population(const EvolutionConfig& cfg, const Evaluator& eval) {
    RngStream rng(cfg.seed, 0x73656564ULL);   // "seed"
    std::vector<PopulationMember> pool(cfg.random_pool_size);
    for (auto& m : pool) {
        m.genome = random_genome(rng.next_u64(), cfg.genome_length);
        const EvalResult r = safe_eval(eval, m.genome);
        m.fitness = r.fitness;
        m.degenerate = r.degenerate;
    }
    // Keep the best P, preserving pool order so the earliest good genome is
    // the oldest member.
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool[a].fitness > pool[b].fitness;
    });
    order.resize(std::min(cfg.population_size, order.size()));
    std::sort(order.begin(), order.end());
    Population pop;
    for (std::size_t i : order) pop.insert(std::move(pool[i]));
    return pop;
}

StepRecord evolve_step(Population& pop, const EvolutionConfig& cfg,
                       const Evaluator& eval, std::size_t iteration) {
    RngStream rng(cfg.seed, 0x8000000000000000ULL | iteration);
    const std::size_t n = pop.members.size();
    const std::size_t t = std::min(cfg.tournament_size, n);

    // Partial Fisher-Yates over member indices: first t entries are a
    // uniform sample without replacement.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < t; ++i)
        std::swap(idx[i], idx[i + rng.next_below(n - i)]);

    std::size_t winner = idx[0];
    for (std::size_t i = 1; i < t; ++i) {
        const auto& c = pop.members[idx[i]];
        const auto& w = pop.members[winner];
        if (c.fitness > w.fitness || (c.fitness == w.fitness && c.age < w.age))
            winner = idx[i];
    }

    StepRecord rec;
    rec.iteration = iteration;
    rec.parent_hash = active_hash(pop.members[winner].genome);

    PopulationMember child;
    child.genome = mutate(pop.members[winner].genome, rng.next_u64());
    const EvalResult r = safe_eval(eval, child.genome);
    child.fitness = r.fitness;
    child.degenerate = r.degenerate;

    rec.child_hash = active_hash(child.genome);
    rec.fitness = child.fitness;
    rec.degenerate = child.degenerate;

    pop.members.pop_front();
    pop.insert(std::move(child));
    return rec;
}

std::vector<EliminationStage> default_elimination_stages() {
    return {{24, 1}, {12, 1}, {6, 1}, {3, 1}};
}

std::vector<EliminationEntry> eliminate(const std::vector<LossGenome>& candidates,
                                        const std::vector<EliminationStage>& stages,
                                        const StageEvaluator& eval,
                                        std::vector<std::string>* warnings) {
    std::vector<EliminationEntry> pool;
    pool.reserve(candidates.size());
    for (const auto& g : candidates) pool.push_back({g, {}, 0.0});

    std::size_t run_index = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& stage = stages[s];
        for (std::size_t r = 0; r < stage.extra_runs; ++r) {
            for (auto& e : pool) e.scores.push_back(eval(e.genome, run_index));
            ++run_index;
        }
        for (auto& e : pool)
            e.mean = std::accumulate(e.scores.begin(), e.scores.end(), 0.0) /
                     static_cast<double>(e.scores.size());
        std::stable_sort(pool.begin(), pool.end(),
                         [](const EliminationEntry& a, const EliminationEntry& b) {
                             if (a.mean != b.mean) return a.mean > b.mean;
                             return active_hash(a.genome) < active_hash(b.genome);
                         });
        if (stage.top_k < pool.size()) {
            pool.resize(stage.top_k);
        } else if (stage.top_k > pool.size() && warnings) {
            warnings->push_back("stage " + std::to_string(s) + ": top_k " +
                                std::to_string(stage.top_k) + " exceeds " +
                                std::to_string(pool.size()) +
                                " candidates; passing all through");
        }
    }
    return pool;
}

bool FitnessCache::lookup(const std::string& key, EvalResult& out) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return false;
    out = it->second;
    return true;
}

void FitnessCache::store(const std::string& key, const EvalResult& r) {
    std::lock_guard<std::mutex> lock(mu_);
    map_[key] = r;
}

std::string FitnessCache::key(std::uint64_t genome_hash, const std::string& augmentation,
                              const std::string& dataset_id, std::uint64_t cfg_hash) {
    return std::to_string(genome_hash) + '|' + augmentation + '|' + dataset_id + '|' +
           std::to_string(cfg_hash);
}

std::size_t FitnessCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
}

std::string serialize_population(const Population& pop, std::size_t iterations_done) {
    nlohmann::json j;
    j["version"] = 1;
    j["iterations_done"] = iterations_done;
    j["next_age"] = pop.next_age;
    j["members"] = nlohmann::json::array();
    for (const auto& m : pop.members) {
        nlohmann::json e;
        e["genome"] = nlohmann::json::parse(serialize(m.genome));
        e["fitness"] = m.fitness;
        e["age"] = m.age;
        e["degenerate"] = m.degenerate;
        j["members"].push_back(std::move(e));
    }
    return j.dump(2);
}

Population parse_population(const std::string& text, std::size_t& iterations_done) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw genome_parse_error(std::string("population checkpoint: ") + e.what());
    }
    if (!j.is_object() || j.value("version", 0) != 1)
        throw genome_parse_error("population checkpoint: unsupported version");
    Population pop;
    iterations_done = j.at("iterations_done").get<std::size_t>();
    pop.next_age = j.at("next_age").get<std::uint64_t>();
    for (const auto& e : j.at("members")) {
        PopulationMember m;
        m.genome = parse_genome(e.at("genome").dump());
        m.fitness = e.at("fitness").get<double>();
        m.age = e.at("age").get<std::uint64_t>();
        m.degenerate = e.at("degenerate").get<bool>();
        pop.members.push_back(std::move(m));
    }
    return pop;
}

std::string step_csv_header() {
    return "iteration,parent_hash,child_hash,fitness,degenerate";
}

std::string step_csv_row(const StepRecord& r) {
    std::ostringstream os;
    os.precision(17);
    os << r.iteration << ',' << r.parent_hash << ',' << r.child_hash << ','
       << r.fitness << ',' << (r.degenerate ? 1 : 0);
    return os.str();
}

} // namespace lfs
