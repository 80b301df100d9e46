#ifndef LFS_TENSOR_HPP
#define LFS_TENSOR_HPP

#include <cassert>
#include <cstddef>
#include <numeric>
#include <vector>

namespace lfs {

// Dense row-major tensor of doubles. Rank is dynamic; the codebase only uses
// rank 2 (batch x classes, batch x features) and rank 4 (batch x H x W x C).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)),
          data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                [](std::size_t a, std::size_t b) { return a * b; }),
                fill) {}

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) {
        assert(shape_.size() == 2);
        return data_[r * shape_[1] + c];
    }
    double at(std::size_t r, std::size_t c) const {
        assert(shape_.size() == 2);
        return data_[r * shape_[1] + c];
    }

    double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
        assert(shape_.size() == 4);
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    double at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
        assert(shape_.size() == 4);
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace lfs

#endif
