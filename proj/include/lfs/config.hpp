#ifndef LFS_CONFIG_HPP
#define LFS_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfs/augment.hpp"
#include "lfs/evolution.hpp"
#include "lfs/trainer.hpp"

namespace lfs {

// Any invalid config (malformed file, unknown key, missing dataset path)
// maps to CLI exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetConfig {
    std::string kind = "blobs";   // blobs | shapes | cifar
    std::size_t n = 600;
    std::size_t classes = 3;
    std::size_t dim = 2;           // blobs
    double separation = 4.0;       // blobs
    std::size_t height = 16;       // shapes
    std::vector<std::string> paths;   // cifar binary files
    std::uint64_t seed = 7;
};

struct TrainerConfig {
    std::string model;   // empty: mlp for vector data, tiny_convnet for images
    std::size_t hidden = 32;
    TrainConfig train;
};

struct SearchConfig {
    EvolutionConfig evolution;
    std::size_t checkpoint_every = 50;
};

struct AnalysisConfig {
    std::size_t cluster_k = 4;
    std::size_t best_k = 50;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DatasetConfig dataset;
    std::vector<AugmentId> pipelines = {AugmentId::Base, AugmentId::Cutout,
                                        AugmentId::Mixup, AugmentId::RandAug,
                                        AugmentId::All};
    AugmentParams augment;
    TrainerConfig trainer;
    SearchConfig search;
    AnalysisConfig analysis;
};

// Parses and validates a JSON config. Unknown keys anywhere are errors, as
// are nonexistent dataset paths.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

// Canonical re-serialization (stable key order and formatting).
std::string dump_config(const ExperimentConfig& cfg);

// Hash of the canonical dump; keys fitness caches and the run manifest.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Builds the dataset the config describes.
Dataset build_dataset(const DatasetConfig& dc);

// Model kind for a dataset: explicit trainer.model if set, else by data rank.
ModelKind resolve_model(const TrainerConfig& tc, const Dataset& ds);

} // namespace lfs

#endif
