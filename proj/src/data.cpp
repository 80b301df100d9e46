#include "lfs/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lfs/rng.hpp"

namespace lfs {

namespace {

void make_split(Dataset& ds, std::uint64_t seed, double val_fraction) {
    const std::size_t n = ds.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    RngStream rng(seed, 0x73706c6974ULL);   // "split"
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
    std::size_t n_val = static_cast<std::size_t>(std::lround(val_fraction * n));
    n_val = std::min(std::max<std::size_t>(n_val, 1), n - 1);
    ds.val_idx.assign(idx.begin(), idx.begin() + n_val);
    ds.train_idx.assign(idx.begin() + n_val, idx.end());
    std::sort(ds.val_idx.begin(), ds.val_idx.end());
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
}

} // namespace

Dataset gaussian_blobs(std::size_t n, std::size_t classes, std::size_t dim,
                       double separation, std::uint64_t seed,
                       double val_fraction) {
    Dataset ds;
    ds.classes = classes;
    ds.id = "blobs_n" + std::to_string(n) + "_c" + std::to_string(classes) +
            "_d" + std::to_string(dim) + "_s" + std::to_string(seed);
    ds.features = Tensor::matrix(n, dim);
    ds.labels = Tensor::matrix(n, classes);
    RngStream rng(seed, 0x626c6f62ULL);   // "blob"
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        // Axis-aligned centers; classes beyond dim alternate sign.
        const std::size_t ax = c % dim;
        const double cs = (c / dim) % 2 == 0 ? 1.0 : -1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double center = d == ax ? cs * separation : 0.0;
            ds.features.at(i, d) = center + rng.next_gaussian();
        }
        ds.labels.at(i, c) = 1.0;
    }
    make_split(ds, seed, val_fraction);
    return ds;
}

namespace {

// One shape family per class, drawn into an H x H mask.
void draw_shape(Tensor& img, std::size_t sample, std::size_t cls, std::size_t h,
                RngStream& rng) {
    const auto H = static_cast<long>(h);
    const long cx = H / 2 + static_cast<long>(rng.next_below(5)) - 2;
    const long cy = H / 2 + static_cast<long>(rng.next_below(5)) - 2;
    const long r = H / 4;
    const double v = 0.75 + 0.25 * rng.next_double();
    auto put = [&](long y, long x) {
        if (y >= 0 && y < H && x >= 0 && x < H)
            img.at(sample, static_cast<std::size_t>(y),
                   static_cast<std::size_t>(x), 0) = v;
    };
    switch (cls) {
    case 0:   // vertical bar
        for (long y = cy - r; y <= cy + r; ++y)
            for (long x = cx - 1; x <= cx + 1; ++x) put(y, x);
        break;
    case 1:   // horizontal bar
        for (long x = cx - r; x <= cx + r; ++x)
            for (long y = cy - 1; y <= cy + 1; ++y) put(y, x);
        break;
    case 2:   // disc
        for (long y = cy - r; y <= cy + r; ++y)
            for (long x = cx - r; x <= cx + r; ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) put(y, x);
        break;
    case 3:   // cross
        for (long y = cy - r; y <= cy + r; ++y)
            for (long x = cx - 1; x <= cx + 1; ++x) put(y, x);
        for (long x = cx - r; x <= cx + r; ++x)
            for (long y = cy - 1; y <= cy + 1; ++y) put(y, x);
        break;
    case 4:   // diagonal
        for (long t = -r; t <= r; ++t)
            for (long w = -1; w <= 1; ++w) put(cy + t, cx + t + w);
        break;
    default:  // square ring
        for (long y = cy - r; y <= cy + r; ++y)
            for (long x = cx - r; x <= cx + r; ++x)
                if (std::abs(y - cy) >= r - 1 || std::abs(x - cx) >= r - 1)
                    put(y, x);
        break;
    }
}

} // namespace

Dataset synthetic_shapes(std::size_t n, std::size_t classes, std::size_t height,
                         std::uint64_t seed, double val_fraction) {
    if (classes > 6)
        throw std::invalid_argument("synthetic_shapes supports at most 6 classes");
    Dataset ds;
    ds.classes = classes;
    ds.id = "shapes_n" + std::to_string(n) + "_c" + std::to_string(classes) +
            "_h" + std::to_string(height) + "_s" + std::to_string(seed);
    ds.features = Tensor({n, height, height, 1});
    ds.labels = Tensor::matrix(n, classes);
    RngStream rng(seed, 0x7368617065ULL);   // "shape"
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        draw_shape(ds.features, i, c, height, rng);
        // Light pixel noise, clamped to [0, 1].
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < height; ++x) {
                double& p = ds.features.at(i, y, x, 0);
                p = std::clamp(p + 0.05 * rng.next_double(), 0.0, 1.0);
            }
        ds.labels.at(i, c) = 1.0;
    }
    make_split(ds, seed, val_fraction);
    return ds;
}

Dataset load_cifar_binary(const std::vector<std::string>& paths,
                          std::uint64_t split_seed) {
    constexpr std::size_t kRecord = 3073;
    std::vector<std::uint8_t> bytes;
    std::vector<std::string> record_file;   // which file each record came from
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw format_error("cannot open " + path);
        std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
        if (file.empty() || file.size() % kRecord != 0)
            throw format_error(path + ": size " + std::to_string(file.size()) +
                               " is not a multiple of 3073 bytes");
        bytes.insert(bytes.end(), file.begin(), file.end());
        record_file.insert(record_file.end(), file.size() / kRecord, path);
    }
    const std::size_t n = bytes.size() / kRecord;
    Dataset ds;
    ds.classes = 10;
    ds.id = "cifar10_n" + std::to_string(n);
    ds.features = Tensor({n, 32, 32, 3});
    ds.labels = Tensor::matrix(n, 10);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * kRecord;
        if (rec[0] >= 10)
            throw format_error(record_file[i] + ": record " + std::to_string(i) +
                               " has label byte " + std::to_string(rec[0]));
        ds.labels.at(i, rec[0]) = 1.0;
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x)
                    ds.features.at(i, y, x, c) =
                        rec[1 + c * 1024 + y * 32 + x] / 255.0;
    }
    make_split(ds, split_seed, 0.1);
    return ds;
}

std::vector<std::uint8_t> encode_cifar_binary(const Dataset& ds) {
    const auto& shape = ds.features.shape();
    if (shape.size() != 4 || shape[1] != 32 || shape[2] != 32 ||
        (shape[3] != 1 && shape[3] != 3))
        throw format_error("CIFAR encoding requires 32x32 images with 1 or 3 channels");
    const std::size_t n = shape[0];
    const std::size_t ch = shape[3];
    std::vector<std::uint8_t> out;
    out.reserve(n * 3073);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t label = 0;
        for (std::size_t c = 0; c < ds.classes; ++c)
            if (ds.labels.at(i, c) > 0.5) label = c;
        out.push_back(static_cast<std::uint8_t>(label));
        for (std::size_t plane = 0; plane < 3; ++plane)
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x) {
                    const double v = ds.features.at(i, y, x, ch == 3 ? plane : 0);
                    out.push_back(static_cast<std::uint8_t>(
                        std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
                }
    }
    return out;
}

void save_cifar_binary(const Dataset& ds, const std::string& path) {
    const auto bytes = encode_cifar_binary(ds);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw format_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Tensor gather_features(const Dataset& ds, const std::vector<std::size_t>& idx) {
    auto shape = ds.features.shape();
    shape[0] = idx.size();
    Tensor out(shape);
    std::size_t row = ds.features.size() / ds.features.dim(0);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(ds.features.data() + idx[i] * row, row, out.data() + i * row);
    return out;
}

Tensor gather_labels(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Tensor out = Tensor::matrix(idx.size(), ds.classes);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(ds.labels.data() + idx[i] * ds.classes, ds.classes,
                    out.data() + i * ds.classes);
    return out;
}

} // namespace lfs
