#ifndef LFS_LOSSES_HPP
#define LFS_LOSSES_HPP

#include <functional>
#include <string>
#include <vector>

#include "lfs/genome.hpp"
#include "lfs/tensor.hpp"

namespace lfs {

// A named loss with its genome encoding and an independent closed-form
// evaluator. closed_form(y, yhat) is the signed per-element summand, i.e.
// genome.sign * eval_element(genome, y, yhat).
struct BuiltinLoss {
    std::string name;
    LossGenome genome;
    std::function<double(double, double)> closed_form;
};

// Names: B0..B2, C0..C2, M0..M2, R0..R2, A0..A2, CE.
const std::vector<std::string>& builtin_names();
const BuiltinLoss& builtin(const std::string& name);   // throws std::invalid_argument
bool is_builtin(const std::string& name);

// Loss value as a function of yhat with y fixed at 1.
struct BinaryPhenotype {
    std::vector<double> yhat;
    std::vector<double> raw;
    std::vector<double> normalized;   // min-max to [0,1]; zeros when constant
    bool constant = false;
};

BinaryPhenotype binary_phenotype(const LossGenome& g, std::size_t samples = 101,
                                 double delta = 1e-3);

// Loss values over a (y, yhat) grid with per-grid min-max normalization.
struct PhenotypeGrid {
    std::vector<double> y_axis;
    std::vector<double> yhat_axis;
    Tensor raw;          // y_axis.size() x yhat_axis.size()
    Tensor normalized;
    bool constant = false;
};

// delta = 0 includes the exact endpoints; the epsilon guards keep every
// builtin finite there.
PhenotypeGrid surface(const LossGenome& g, std::size_t samples = 101,
                      double delta = 0.0);

// Difference of the per-surface-normalized values (and of the raw values).
PhenotypeGrid difference_surface(const LossGenome& a, const LossGenome& b,
                                 std::size_t samples = 101, double delta = 0.0);

// Location and value of the maximum of a grid's normalized field.
struct GridMax {
    double y = 0.0;
    double yhat = 0.0;
    double value = 0.0;
};
GridMax normalized_max(const PhenotypeGrid& grid);

} // namespace lfs

#endif
