#ifndef LFS_TRAINER_HPP
#define LFS_TRAINER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lfs/augment.hpp"
#include "lfs/data.hpp"
#include "lfs/genome.hpp"
#include "lfs/tensor.hpp"

namespace lfs {

enum class ModelKind { Mlp, TinyConvnet };
ModelKind model_from_name(const std::string& name);
std::string model_name(ModelKind kind);

// Softmax classifier with manually derived gradients. forward produces
// probabilities (rows sum to 1); backward consumes dL/dprobs and fills the
// parameter gradient vector.
class SurrogateModel {
public:
    virtual ~SurrogateModel() = default;
    virtual Tensor forward(const Tensor& batch) = 0;          // (B, C) softmax rows
    virtual void backward(const Tensor& dprobs) = 0;          // after forward
    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& grads() const = 0;
    virtual void zero_grads() = 0;
};

// MLP: input -> hidden(tanh) -> classes. For vector datasets.
std::unique_ptr<SurrogateModel> make_mlp(std::size_t input_dim, std::size_t hidden,
                                         std::size_t classes, std::uint64_t init_seed);

// Tiny convnet: conv3x3(8) relu, avgpool2, conv3x3(16) relu, global avg
// pool, dense. For image datasets.
std::unique_ptr<SurrogateModel> make_tiny_convnet(std::size_t height, std::size_t width,
                                                  std::size_t channels, std::size_t classes,
                                                  std::uint64_t init_seed);

enum class OptimizerKind { SgdNesterov, Adam };

struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch_size = 128;
    double peak_lr = 1e-3;
    std::size_t warmup_steps = 1000;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double momentum = 0.9;           // SGD+Nesterov
    double beta1 = 0.9, beta2 = 0.999;
    double label_smoothing = 0.0;    // y <- y(1-a) + a/C
    std::size_t eval_every = 100;
    // Early stop: abort at check_step if val accuracy is below min_val_acc.
    std::size_t early_stop_check_step = 0;   // 0: steps/4
    double early_stop_min_val_acc = -1.0;    // <0: chance + 0.05
};

// One-cycle cosine schedule: linear ramp 0 -> peak over warmup_steps, then
// cosine decay back to 0 at `steps`.
double lr_at(std::size_t step, const TrainConfig& cfg);

struct FitnessRecord {
    std::uint64_t genome_hash = 0;
    std::string augmentation;
    std::uint64_t seed = 0;
    double best_val_acc = 0.0;
    std::size_t best_step = 0;
    bool degenerate = false;
};

// Trains the model with the genome's backward as dL/dyhat and reports the
// best validation accuracy seen. Any non-finite loss, gradient, or parameter
// marks the candidate degenerate (accuracy 0). Deterministic in
// (genome, dataset, pipeline, cfg, seed).
FitnessRecord train_and_score(const LossGenome& genome, ModelKind model_kind,
                              std::size_t hidden, const Dataset& dataset,
                              AugmentId pipeline, const AugmentParams& aug_params,
                              const TrainConfig& cfg, std::uint64_t seed,
                              std::vector<double>* loss_trace = nullptr);

// Label smoothing target transform.
Tensor smooth_labels(const Tensor& labels, double alpha);

// Accuracy of argmax predictions against one-hot labels.
double accuracy(const Tensor& probs, const Tensor& labels);

std::string fitness_csv_header();
std::string fitness_csv_row(const FitnessRecord& r);

} // namespace lfs

#endif
