#ifndef LFS_AUGMENT_HPP
#define LFS_AUGMENT_HPP

#include <cstdint>
#include <string>

#include "lfs/rng.hpp"
#include "lfs/tensor.hpp"

namespace lfs {

// A training batch: images (B x H x W x C) plus one-hot or mixed labels
// (B x classes).
struct Batch {
    Tensor images;
    Tensor labels;
};

enum class AugmentId { Base, Cutout, Mixup, RandAug, All };

std::string augment_name(AugmentId id);
AugmentId augment_from_name(const std::string& name);   // throws std::invalid_argument

struct AugmentParams {
    int pad = -1;            // -1: ceil(H/8) (4 for 32-px images)
    int cutout_size = -1;    // -1: H/2
    double mixup_alpha = 1.0;
    int randaug_n = 2;
    double randaug_m = 5.0;  // strength in [0, 10]
};

// Individual stages. Each is a pure function of (batch, params, rng state).
Batch base_augment(const Batch& b, const AugmentParams& p, RngStream& rng);
Batch cutout_augment(const Batch& b, const AugmentParams& p, RngStream& rng);
Batch mixup_augment(const Batch& b, const AugmentParams& p, RngStream& rng);
Batch randaug_augment(const Batch& b, const AugmentParams& p, RngStream& rng);

// Configured pipeline. Every pipeline other than base composes base first;
// "all" is base -> randaug -> cutout -> mixup (mixup last so labels are
// mixed exactly once).
Batch apply_pipeline(AugmentId id, const Batch& b, const AugmentParams& p,
                     std::uint64_t seed);

} // namespace lfs

#endif
