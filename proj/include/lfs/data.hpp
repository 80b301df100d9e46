#ifndef LFS_DATA_HPP
#define LFS_DATA_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfs/tensor.hpp"

namespace lfs {

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Immutable dataset: features are rank 2 (n x dim) for vector data or rank 4
// (n x H x W x C) for images, labels are one-hot rows, splits are disjoint
// index lists.
struct Dataset {
    Tensor features;
    Tensor labels;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    std::vector<std::size_t> test_idx;
    std::size_t classes = 0;
    std::string id;   // stable identifier for fitness-cache keys

    bool is_image() const { return features.shape().size() == 4; }
    std::size_t size() const { return features.dim(0); }
};

// C isotropic Gaussian clusters in dim dimensions with centers `separation`
// apart along the axes. val_fraction of the samples (shuffled by seed) go to
// the validation split.
Dataset gaussian_blobs(std::size_t n, std::size_t classes, std::size_t dim,
                       double separation, std::uint64_t seed,
                       double val_fraction = 1.0 / 6.0);

// H x H x 1 images of procedurally drawn shapes (bar, disc, cross, ...),
// one shape family per class, pixels in [0, 1]. Supports up to 6 classes.
Dataset synthetic_shapes(std::size_t n, std::size_t classes, std::size_t height,
                         std::uint64_t seed, double val_fraction = 1.0 / 6.0);

// CIFAR-10 binary layout: 3073-byte records, one label byte then 3072 pixel
// bytes (row-major R, G, B planes). Pixels normalized to [0, 1]; a tenth of
// the records held out as validation by fixed seed.
Dataset load_cifar_binary(const std::vector<std::string>& paths,
                          std::uint64_t split_seed = 0xC1FA);

// Re-encode images+labels in the CIFAR binary layout. Requires 32x32 images
// with 1 or 3 channels (grayscale is replicated across R, G, B).
std::vector<std::uint8_t> encode_cifar_binary(const Dataset& ds);
void save_cifar_binary(const Dataset& ds, const std::string& path);

// Gather rows of a dataset into batch tensors.
Tensor gather_features(const Dataset& ds, const std::vector<std::size_t>& idx);
Tensor gather_labels(const Dataset& ds, const std::vector<std::size_t>& idx);

} // namespace lfs

#endif
