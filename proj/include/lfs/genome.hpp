#ifndef LFS_GENOME_HPP
#define LFS_GENOME_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfs/numerics.hpp"
#include "lfs/tensor.hpp"

namespace lfs {

// A candidate produced a non-finite loss or gradient; the caller treats the
// candidate as failed.
struct degenerate_loss_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct genome_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Where a node reads its argument from: one of the two inputs, or an
// earlier node (strict DAG by construction).
struct SourceRef {
    enum class Kind { InputY, InputYhat, Node };
    Kind kind = Kind::InputY;
    std::size_t index = 0;   // meaningful when kind == Node

    static SourceRef y() { return {Kind::InputY, 0}; }
    static SourceRef yhat() { return {Kind::InputYhat, 0}; }
    static SourceRef node(std::size_t i) { return {Kind::Node, i}; }

    bool operator==(const SourceRef& o) const {
        return kind == o.kind && (kind != Kind::Node || index == o.index);
    }
};

// A free-floating node applying one op to earlier values. in_b is present
// iff the op is binary.
struct HiddenStateNode {
    num::Op op = num::Op::Neg;
    SourceRef in_a;
    std::optional<SourceRef> in_b;

    bool operator==(const HiddenStateNode&) const = default;
};

// Fixed-length expression graph over inputs y and yhat, with a designated
// root and a sign applied to the reduced output. Nodes not reachable from
// the root are inactive but preserved as neutral genetic material.
struct LossGenome {
    std::vector<HiddenStateNode> nodes;
    std::size_t root = 0;
    int sign = 1;   // +1 or -1

    bool operator==(const LossGenome&) const = default;
};

inline constexpr std::size_t kDefaultGenomeLength = 10;
inline constexpr int kGenomeSchemaVersion = 1;

// Throws corrupt_genome_error if any invariant is violated.
void validate(const LossGenome& g);

// Flags of nodes reachable backward from the root.
std::vector<bool> active_nodes(const LossGenome& g);

LossGenome random_genome(std::uint64_t seed, std::size_t length = kDefaultGenomeLength);

// Applies exactly one mutation: op resample, input rewire, root move, or
// sign flip, chosen uniformly.
LossGenome mutate(const LossGenome& g, std::uint64_t seed);

// Elementwise evaluation of the active subgraph (no sign, no reduction).
double eval_element(const LossGenome& g, double y, double yhat);

// Elementwise forward over the whole tensor. Throws degenerate_loss_error
// if any position is non-finite.
Tensor forward(const LossGenome& g, const Tensor& y, const Tensor& yhat);

// Mean over all elements times the genome sign.
double reduce(const LossGenome& g, const Tensor& t);

double forward_reduced(const LossGenome& g, const Tensor& y, const Tensor& yhat);

// d(reduce(forward))/d yhat at every position. Throws degenerate_loss_error
// on a non-finite gradient.
Tensor backward(const LossGenome& g, const Tensor& y, const Tensor& yhat);

// Canonical hash of the active subgraph (plus root op and sign); two genomes
// that compute the same function by construction share a hash, so fitness
// caches can deduplicate phenotypic twins.
std::uint64_t active_hash(const LossGenome& g);

std::string serialize(const LossGenome& g);
LossGenome parse_genome(const std::string& text);

} // namespace lfs

#endif
