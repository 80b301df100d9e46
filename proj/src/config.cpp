#include "lfs/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lfs/rng.hpp"

namespace lfs {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (allowed.count(key) == 0)
            throw config_error(where + ": unknown key \"" + key + "\"");
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw config_error(std::string("key \"") + key + "\" has the wrong type");
        }
    }
}

void parse_dataset(const json& j, DatasetConfig& dc) {
    reject_unknown(j, "dataset", {"kind", "n", "classes", "dim", "separation",
                                  "height", "paths", "seed"});
    read(j, "kind", dc.kind);
    if (dc.kind != "blobs" && dc.kind != "shapes" && dc.kind != "cifar")
        throw config_error("dataset.kind must be blobs, shapes, or cifar");
    read(j, "n", dc.n);
    read(j, "classes", dc.classes);
    read(j, "dim", dc.dim);
    read(j, "separation", dc.separation);
    read(j, "height", dc.height);
    read(j, "paths", dc.paths);
    read(j, "seed", dc.seed);
    if (dc.kind == "cifar" && dc.paths.empty())
        throw config_error("dataset.kind cifar requires dataset.paths");
}

void parse_trainer(const json& j, TrainerConfig& tc) {
    reject_unknown(j, "trainer",
                   {"model", "hidden", "steps", "batch_size", "peak_lr",
                    "warmup_steps", "optimizer", "momentum", "beta1", "beta2",
                    "label_smoothing", "eval_every", "early_stop_check_step",
                    "early_stop_min_val_acc"});
    read(j, "model", tc.model);
    if (!tc.model.empty()) model_from_name(tc.model);   // validates
    read(j, "hidden", tc.hidden);
    read(j, "steps", tc.train.steps);
    read(j, "batch_size", tc.train.batch_size);
    read(j, "peak_lr", tc.train.peak_lr);
    read(j, "warmup_steps", tc.train.warmup_steps);
    std::string opt;
    read(j, "optimizer", opt);
    if (!opt.empty()) {
        if (opt == "adam")
            tc.train.optimizer = OptimizerKind::Adam;
        else if (opt == "sgd_nesterov")
            tc.train.optimizer = OptimizerKind::SgdNesterov;
        else
            throw config_error("trainer.optimizer must be adam or sgd_nesterov");
    }
    read(j, "momentum", tc.train.momentum);
    read(j, "beta1", tc.train.beta1);
    read(j, "beta2", tc.train.beta2);
    read(j, "label_smoothing", tc.train.label_smoothing);
    read(j, "eval_every", tc.train.eval_every);
    read(j, "early_stop_check_step", tc.train.early_stop_check_step);
    read(j, "early_stop_min_val_acc", tc.train.early_stop_min_val_acc);
    if (tc.train.warmup_steps >= tc.train.steps)
        throw config_error("trainer.warmup_steps must be below trainer.steps");
    if (tc.train.batch_size < 1) throw config_error("trainer.batch_size must be >= 1");
}

void parse_augment(const json& j, ExperimentConfig& cfg) {
    reject_unknown(j, "augmentation", {"pipelines", "pad", "cutout_size",
                                       "mixup_alpha", "randaug_n", "randaug_m"});
    if (auto it = j.find("pipelines"); it != j.end()) {
        cfg.pipelines.clear();
        for (const auto& name : *it) {
            try {
                cfg.pipelines.push_back(augment_from_name(name.get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw config_error(std::string("augmentation.pipelines: ") + e.what());
            }
        }
        if (cfg.pipelines.empty())
            throw config_error("augmentation.pipelines must not be empty");
    }
    read(j, "pad", cfg.augment.pad);
    read(j, "cutout_size", cfg.augment.cutout_size);
    read(j, "mixup_alpha", cfg.augment.mixup_alpha);
    read(j, "randaug_n", cfg.augment.randaug_n);
    read(j, "randaug_m", cfg.augment.randaug_m);
}

void parse_search(const json& j, SearchConfig& sc) {
    reject_unknown(j, "evolution",
                   {"population_size", "tournament_size", "iterations",
                    "random_pool_size", "genome_length", "checkpoint_every"});
    read(j, "population_size", sc.evolution.population_size);
    read(j, "tournament_size", sc.evolution.tournament_size);
    read(j, "iterations", sc.evolution.iterations);
    read(j, "random_pool_size", sc.evolution.random_pool_size);
    read(j, "genome_length", sc.evolution.genome_length);
    read(j, "checkpoint_every", sc.checkpoint_every);
    if (sc.evolution.tournament_size > sc.evolution.population_size)
        throw config_error("evolution.tournament_size must not exceed population_size");
    if (sc.evolution.random_pool_size < sc.evolution.population_size)
        throw config_error("evolution.random_pool_size must be >= population_size");
    if (sc.evolution.genome_length < 2)
        throw config_error("evolution.genome_length must be >= 2");
}

void parse_analysis(const json& j, AnalysisConfig& ac) {
    reject_unknown(j, "analysis", {"cluster_k", "best_k"});
    read(j, "cluster_k", ac.cluster_k);
    read(j, "best_k", ac.best_k);
    if (ac.cluster_k < 1) throw config_error("analysis.cluster_k must be >= 1");
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config: top level must be an object");
    reject_unknown(j, "config", {"seed", "output_dir", "dataset", "augmentation",
                                 "trainer", "evolution", "analysis"});
    ExperimentConfig cfg;
    read(j, "seed", cfg.seed);
    read(j, "output_dir", cfg.output_dir);
    if (auto it = j.find("dataset"); it != j.end()) parse_dataset(*it, cfg.dataset);
    if (auto it = j.find("augmentation"); it != j.end()) parse_augment(*it, cfg);
    if (auto it = j.find("trainer"); it != j.end()) parse_trainer(*it, cfg.trainer);
    if (auto it = j.find("evolution"); it != j.end()) parse_search(*it, cfg.search);
    if (auto it = j.find("analysis"); it != j.end()) parse_analysis(*it, cfg.analysis);
    cfg.search.evolution.seed = cfg.seed;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = parse_config(ss.str());
    for (const auto& p : cfg.dataset.paths)
        if (!std::filesystem::exists(p))
            throw config_error("dataset path does not exist: " + p);
    return cfg;
}

std::string dump_config(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    auto& d = j["dataset"];
    d["kind"] = cfg.dataset.kind;
    d["n"] = cfg.dataset.n;
    d["classes"] = cfg.dataset.classes;
    d["dim"] = cfg.dataset.dim;
    d["separation"] = cfg.dataset.separation;
    d["height"] = cfg.dataset.height;
    d["paths"] = cfg.dataset.paths;
    d["seed"] = cfg.dataset.seed;
    auto& a = j["augmentation"];
    a["pipelines"] = json::array();
    for (auto id : cfg.pipelines) a["pipelines"].push_back(augment_name(id));
    a["pad"] = cfg.augment.pad;
    a["cutout_size"] = cfg.augment.cutout_size;
    a["mixup_alpha"] = cfg.augment.mixup_alpha;
    a["randaug_n"] = cfg.augment.randaug_n;
    a["randaug_m"] = cfg.augment.randaug_m;
    auto& t = j["trainer"];
    t["model"] = cfg.trainer.model;
    t["hidden"] = cfg.trainer.hidden;
    t["steps"] = cfg.trainer.train.steps;
    t["batch_size"] = cfg.trainer.train.batch_size;
    t["peak_lr"] = cfg.trainer.train.peak_lr;
    t["warmup_steps"] = cfg.trainer.train.warmup_steps;
    t["optimizer"] =
        cfg.trainer.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd_nesterov";
    t["momentum"] = cfg.trainer.train.momentum;
    t["beta1"] = cfg.trainer.train.beta1;
    t["beta2"] = cfg.trainer.train.beta2;
    t["label_smoothing"] = cfg.trainer.train.label_smoothing;
    t["eval_every"] = cfg.trainer.train.eval_every;
    t["early_stop_check_step"] = cfg.trainer.train.early_stop_check_step;
    t["early_stop_min_val_acc"] = cfg.trainer.train.early_stop_min_val_acc;
    auto& e = j["evolution"];
    e["population_size"] = cfg.search.evolution.population_size;
    e["tournament_size"] = cfg.search.evolution.tournament_size;
    e["iterations"] = cfg.search.evolution.iterations;
    e["random_pool_size"] = cfg.search.evolution.random_pool_size;
    e["genome_length"] = cfg.search.evolution.genome_length;
    e["checkpoint_every"] = cfg.search.checkpoint_every;
    auto& an = j["analysis"];
    an["cluster_k"] = cfg.analysis.cluster_k;
    an["best_k"] = cfg.analysis.best_k;
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a(dump_config(cfg));
}

Dataset build_dataset(const DatasetConfig& dc) {
    if (dc.kind == "blobs")
        return gaussian_blobs(dc.n, dc.classes, dc.dim, dc.separation, dc.seed);
    if (dc.kind == "shapes")
        return synthetic_shapes(dc.n, dc.classes, dc.height, dc.seed);
    return load_cifar_binary(dc.paths);
}

ModelKind resolve_model(const TrainerConfig& tc, const Dataset& ds) {
    if (!tc.model.empty()) return model_from_name(tc.model);
    return ds.is_image() ? ModelKind::TinyConvnet : ModelKind::Mlp;
}

} // namespace lfs
