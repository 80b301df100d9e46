#include "lfs/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace lfs {

namespace {

std::size_t batch_size(const Batch& b) { return b.images.dim(0); }

int default_pad(std::size_t h) {
    return static_cast<int>((h + 7) / 8);   // 4 for 32-px images
}

double px(const Tensor& img, std::size_t s, long y, long x, std::size_t c) {
    const long h = static_cast<long>(img.dim(1));
    const long w = static_cast<long>(img.dim(2));
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return img.at(s, static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
}

void clamp_pixels(Tensor& img) {
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::clamp(img[i], 0.0, 1.0);
}

// ---- RandAug ops --------------------------------------------------------

using ImageOp = void (*)(Tensor&, std::size_t, double, RngStream&);

void op_invert(Tensor& img, std::size_t s, double, RngStream&) {
    const std::size_t row = img.size() / img.dim(0);
    double* p = img.data() + s * row;
    for (std::size_t i = 0; i < row; ++i) p[i] = 1.0 - p[i];
}

void op_solarize(Tensor& img, std::size_t s, double m, RngStream&) {
    const double threshold = 1.0 - m / 10.0;
    const std::size_t row = img.size() / img.dim(0);
    double* p = img.data() + s * row;
    for (std::size_t i = 0; i < row; ++i)
        if (p[i] > threshold) p[i] = 1.0 - p[i];
}

void op_posterize(Tensor& img, std::size_t s, double m, RngStream&) {
    const int bits = 8 - static_cast<int>(m / 10.0 * 4.0);
    const double levels = static_cast<double>((1 << bits) - 1);
    const std::size_t row = img.size() / img.dim(0);
    double* p = img.data() + s * row;
    for (std::size_t i = 0; i < row; ++i)
        p[i] = std::floor(p[i] * levels + 0.5) / levels;
}

void op_contrast(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const double f = 1.0 + 0.9 * (m / 10.0) * (rng.next_bool() ? 1.0 : -1.0);
    const std::size_t row = img.size() / img.dim(0);
    double* p = img.data() + s * row;
    double mean = 0.0;
    for (std::size_t i = 0; i < row; ++i) mean += p[i];
    mean /= static_cast<double>(row);
    for (std::size_t i = 0; i < row; ++i)
        p[i] = std::clamp(mean + f * (p[i] - mean), 0.0, 1.0);
}

void op_brightness(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const double f = 1.0 + 0.9 * (m / 10.0) * (rng.next_bool() ? 1.0 : -1.0);
    const std::size_t row = img.size() / img.dim(0);
    double* p = img.data() + s * row;
    for (std::size_t i = 0; i < row; ++i) p[i] = std::clamp(f * p[i], 0.0, 1.0);
}

void op_sharpness(Tensor& img, std::size_t s, double m, RngStream& rng) {
    // Blend the image against a 3x3 box blur of itself.
    const double alpha = 0.9 * (m / 10.0) * (rng.next_bool() ? 1.0 : -1.0);
    const std::size_t h = img.dim(1), w = img.dim(2), ch = img.dim(3);
    Tensor orig = img;   // untouched source for the blur
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c) {
                double sum = 0.0;
                int cnt = 0;
                for (long dy = -1; dy <= 1; ++dy)
                    for (long dx = -1; dx <= 1; ++dx) {
                        const long yy = static_cast<long>(y) + dy;
                        const long xx = static_cast<long>(x) + dx;
                        if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 ||
                            xx >= static_cast<long>(w))
                            continue;
                        sum += orig.at(s, static_cast<std::size_t>(yy),
                                       static_cast<std::size_t>(xx), c);
                        ++cnt;
                    }
                const double blur = sum / cnt;
                const double v = orig.at(s, y, x, c);
                img.at(s, y, x, c) = std::clamp(v + alpha * (v - blur), 0.0, 1.0);
            }
}

void op_equalize(Tensor& img, std::size_t s, double, RngStream&) {
    const std::size_t h = img.dim(1), w = img.dim(2), ch = img.dim(3);
    const std::size_t npix = h * w;
    for (std::size_t c = 0; c < ch; ++c) {
        std::array<std::size_t, 256> hist{};
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const int bin = static_cast<int>(
                    std::clamp(img.at(s, y, x, c), 0.0, 1.0) * 255.0);
                ++hist[static_cast<std::size_t>(bin)];
            }
        std::array<double, 256> cdf{};
        std::size_t run = 0;
        for (std::size_t b = 0; b < 256; ++b) {
            run += hist[b];
            cdf[b] = static_cast<double>(run) / static_cast<double>(npix);
        }
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const int bin = static_cast<int>(
                    std::clamp(img.at(s, y, x, c), 0.0, 1.0) * 255.0);
                img.at(s, y, x, c) = cdf[static_cast<std::size_t>(bin)];
            }
    }
}

void translate(Tensor& img, std::size_t s, long dy, long dx) {
    const std::size_t h = img.dim(1), w = img.dim(2), ch = img.dim(3);
    Tensor orig = img;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < ch; ++c)
                img.at(s, y, x, c) = px(orig, s, static_cast<long>(y) - dy,
                                        static_cast<long>(x) - dx, c);
}

void op_translate_x(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const long shift = std::lround(0.3 * (m / 10.0) * static_cast<double>(img.dim(2)));
    translate(img, s, 0, rng.next_bool() ? shift : -shift);
}

void op_translate_y(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const long shift = std::lround(0.3 * (m / 10.0) * static_cast<double>(img.dim(1)));
    translate(img, s, rng.next_bool() ? shift : -shift, 0);
}

void shear(Tensor& img, std::size_t s, double fy, double fx) {
    const std::size_t h = img.dim(1), w = img.dim(2), ch = img.dim(3);
    const double cy = (static_cast<double>(h) - 1) / 2.0;
    const double cx = (static_cast<double>(w) - 1) / 2.0;
    Tensor orig = img;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // Inverse map with nearest-neighbor sampling.
            const double sy = static_cast<double>(y) + fy * (static_cast<double>(x) - cx);
            const double sx = static_cast<double>(x) + fx * (static_cast<double>(y) - cy);
            const long iy = std::lround(sy);
            const long ix = std::lround(sx);
            for (std::size_t c = 0; c < ch; ++c)
                img.at(s, y, x, c) = px(orig, s, iy, ix, c);
        }
}

void op_shear_x(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const double f = 0.3 * (m / 10.0) * (rng.next_bool() ? 1.0 : -1.0);
    shear(img, s, 0.0, f);
}

void op_shear_y(Tensor& img, std::size_t s, double m, RngStream& rng) {
    const double f = 0.3 * (m / 10.0) * (rng.next_bool() ? 1.0 : -1.0);
    shear(img, s, f, 0.0);
}

constexpr std::array<ImageOp, 11> kRandaugOps = {
    op_invert,      op_solarize,   op_posterize, op_contrast,
    op_brightness,  op_sharpness,  op_equalize,  op_translate_x,
    op_translate_y, op_shear_x,    op_shear_y,
};

} // namespace

std::string augment_name(AugmentId id) {
    switch (id) {
    case AugmentId::Base: return "base";
    case AugmentId::Cutout: return "cutout";
    case AugmentId::Mixup: return "mixup";
    case AugmentId::RandAug: return "randaug";
    default: return "all";
    }
}

AugmentId augment_from_name(const std::string& name) {
    if (name == "base") return AugmentId::Base;
    if (name == "cutout") return AugmentId::Cutout;
    if (name == "mixup") return AugmentId::Mixup;
    if (name == "randaug") return AugmentId::RandAug;
    if (name == "all") return AugmentId::All;
    throw std::invalid_argument("unknown augmentation: " + name);
}

Batch base_augment(const Batch& b, const AugmentParams& p, RngStream& rng) {
    const std::size_t n = batch_size(b);
    const std::size_t h = b.images.dim(1), w = b.images.dim(2), ch = b.images.dim(3);
    const int pad = p.pad >= 0 ? p.pad : default_pad(h);
    Batch out{Tensor(b.images.shape()), b.labels};
    for (std::size_t s = 0; s < n; ++s) {
        // Crop offset into the zero-padded image, then optional flip.
        const long oy = static_cast<long>(rng.next_below(2 * pad + 1)) - pad;
        const long ox = static_cast<long>(rng.next_below(2 * pad + 1)) - pad;
        const bool flip = rng.next_bool();
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t dst_x = flip ? w - 1 - x : x;
                for (std::size_t c = 0; c < ch; ++c)
                    out.images.at(s, y, dst_x, c) =
                        px(b.images, s, static_cast<long>(y) + oy,
                           static_cast<long>(x) + ox, c);
            }
    }
    return out;
}

Batch cutout_augment(const Batch& b, const AugmentParams& p, RngStream& rng) {
    const std::size_t n = batch_size(b);
    const std::size_t h = b.images.dim(1), w = b.images.dim(2), ch = b.images.dim(3);
    const int size = p.cutout_size >= 0 ? p.cutout_size : static_cast<int>(h / 2);
    Batch out{b.images, b.labels};
    if (size == 0) return out;
    for (std::size_t s = 0; s < n; ++s) {
        const long cy = static_cast<long>(rng.next_below(h));
        const long cx = static_cast<long>(rng.next_below(w));
        const long lo_y = std::max(cy - size / 2, 0L);
        const long hi_y = std::min(cy - size / 2 + size, static_cast<long>(h));
        const long lo_x = std::max(cx - size / 2, 0L);
        const long hi_x = std::min(cx - size / 2 + size, static_cast<long>(w));
        for (long y = lo_y; y < hi_y; ++y)
            for (long x = lo_x; x < hi_x; ++x)
                for (std::size_t c = 0; c < ch; ++c)
                    out.images.at(s, static_cast<std::size_t>(y),
                                  static_cast<std::size_t>(x), c) = 0.0;
    }
    return out;
}

Batch mixup_augment(const Batch& b, const AugmentParams& p, RngStream& rng) {
    const std::size_t n = batch_size(b);
    Batch out{Tensor(b.images.shape()), Tensor(b.labels.shape())};
    const std::size_t img_row = b.images.size() / n;
    const std::size_t lab_row = b.labels.size() / n;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t partner = rng.next_below(n);
        const double lam = p.mixup_alpha > 0.0
                               ? rng.next_beta_symmetric(p.mixup_alpha)
                               : 1.0;
        for (std::size_t i = 0; i < img_row; ++i)
            out.images[s * img_row + i] =
                lam * b.images[s * img_row + i] +
                (1.0 - lam) * b.images[partner * img_row + i];
        for (std::size_t i = 0; i < lab_row; ++i)
            out.labels[s * lab_row + i] =
                lam * b.labels[s * lab_row + i] +
                (1.0 - lam) * b.labels[partner * lab_row + i];
    }
    return out;
}

Batch randaug_augment(const Batch& b, const AugmentParams& p, RngStream& rng) {
    Batch out{b.images, b.labels};
    const std::size_t n = batch_size(b);
    for (std::size_t s = 0; s < n; ++s)
        for (int k = 0; k < p.randaug_n; ++k) {
            const auto op = kRandaugOps[rng.next_below(kRandaugOps.size())];
            op(out.images, s, p.randaug_m, rng);
        }
    clamp_pixels(out.images);
    return out;
}

Batch apply_pipeline(AugmentId id, const Batch& b, const AugmentParams& p,
                     std::uint64_t seed) {
    RngStream rng(seed, 0x617567ULL);   // "aug"
    Batch out = base_augment(b, p, rng);
    switch (id) {
    case AugmentId::Base:
        break;
    case AugmentId::Cutout:
        out = cutout_augment(out, p, rng);
        break;
    case AugmentId::Mixup:
        out = mixup_augment(out, p, rng);
        break;
    case AugmentId::RandAug:
        out = randaug_augment(out, p, rng);
        break;
    case AugmentId::All:
        out = randaug_augment(out, p, rng);
        out = cutout_augment(out, p, rng);
        out = mixup_augment(out, p, rng);
        break;
    }
    return out;
}

} // namespace lfs
