#include "lfs/genome.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "lfs/rng.hpp"

namespace lfs {

using num::Op;

namespace {

SourceRef random_source(RngStream& rng, std::size_t node_index) {
    const std::uint64_t k = rng.next_below(node_index + 2);
    if (k == 0) return SourceRef::y();
    if (k == 1) return SourceRef::yhat();
    return SourceRef::node(k - 2);
}

Op random_op(RngStream& rng) {
    return static_cast<Op>(rng.next_below(num::kOpCount));
}

void check_source(const SourceRef& s, std::size_t node_index, std::size_t n_nodes) {
    if (s.kind == SourceRef::Kind::Node && s.index >= node_index)
        throw num::corrupt_genome_error(
            "node " + std::to_string(node_index) + " references node " +
            std::to_string(s.index) + " (DAG rule violated)");
    (void)n_nodes;
}

} // namespace

void validate(const LossGenome& g) {
    if (g.nodes.size() < 2)
        throw num::corrupt_genome_error("genome must have at least 2 nodes");
    if (g.root >= g.nodes.size())
        throw num::corrupt_genome_error("root index out of range");
    if (g.sign != 1 && g.sign != -1)
        throw num::corrupt_genome_error("sign must be +1 or -1");
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& n = g.nodes[i];
        const int a = num::arity(n.op);
        if ((a == 2) != n.in_b.has_value())
            throw num::corrupt_genome_error(
                "node " + std::to_string(i) + ": arity of " +
                std::string(num::op_name(n.op)) + " does not match inputs");
        check_source(n.in_a, i, g.nodes.size());
        if (n.in_b) check_source(*n.in_b, i, g.nodes.size());
    }
}

std::vector<bool> active_nodes(const LossGenome& g) {
    std::vector<bool> active(g.nodes.size(), false);
    // Reverse index order suffices: sources always point backward.
    active[g.root] = true;
    for (std::size_t i = g.nodes.size(); i-- > 0;) {
        if (!active[i]) continue;
        const auto& n = g.nodes[i];
        if (n.in_a.kind == SourceRef::Kind::Node) active[n.in_a.index] = true;
        if (n.in_b && n.in_b->kind == SourceRef::Kind::Node) active[n.in_b->index] = true;
    }
    return active;
}

LossGenome random_genome(std::uint64_t seed, std::size_t length) {
    RngStream rng(seed, 0x67656e6f6d65ULL);   // "genome" stream tag
    LossGenome g;
    g.nodes.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        auto& n = g.nodes[i];
        n.op = random_op(rng);
        n.in_a = random_source(rng, i);
        if (num::arity(n.op) == 2)
            n.in_b = random_source(rng, i);
    }
    g.root = rng.next_below(length);
    g.sign = rng.next_bool() ? 1 : -1;
    return g;
}

LossGenome mutate(const LossGenome& g, std::uint64_t seed) {
    RngStream rng(seed, 0x6d757461ULL);   // "muta" stream tag
    LossGenome child = g;
    switch (rng.next_below(4)) {
    case 0: {   // resample one node's op
        const std::size_t i = rng.next_below(child.nodes.size());
        auto& n = child.nodes[i];
        n.op = random_op(rng);
        if (num::arity(n.op) == 2) {
            if (!n.in_b) n.in_b = random_source(rng, i);
        } else {
            n.in_b.reset();
        }
        break;
    }
    case 1: {   // rewire one input of one node
        const std::size_t i = rng.next_below(child.nodes.size());
        auto& n = child.nodes[i];
        if (n.in_b && rng.next_bool())
            n.in_b = random_source(rng, i);
        else
            n.in_a = random_source(rng, i);
        break;
    }
    case 2:   // move the root
        child.root = rng.next_below(child.nodes.size());
        break;
    default:  // flip the sign
        child.sign = -child.sign;
        break;
    }
    return child;
}

namespace {

struct ElementEval {
    std::vector<double> values;
    std::vector<bool> active;
};

double source_value(const SourceRef& s, double y, double yhat,
                    const std::vector<double>& values) {
    switch (s.kind) {
    case SourceRef::Kind::InputY: return y;
    case SourceRef::Kind::InputYhat: return yhat;
    default: return values[s.index];
    }
}

// Forward pass over the active subgraph for one tensor position.
void eval_nodes(const LossGenome& g, const std::vector<bool>& active,
                double y, double yhat, std::vector<double>& values) {
    values.assign(g.nodes.size(), 0.0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!active[i]) continue;
        const auto& n = g.nodes[i];
        const double a = source_value(n.in_a, y, yhat, values);
        if (n.in_b) {
            const double b = source_value(*n.in_b, y, yhat, values);
            values[i] = num::eval_binary(n.op, a, b);
        } else {
            values[i] = num::eval_unary(n.op, a);
        }
    }
}

} // namespace

double eval_element(const LossGenome& g, double y, double yhat) {
    const auto active = active_nodes(g);
    std::vector<double> values;
    eval_nodes(g, active, y, yhat, values);
    return values[g.root];
}

Tensor forward(const LossGenome& g, const Tensor& y, const Tensor& yhat) {
    if (!y.same_shape(yhat))
        throw std::invalid_argument("forward: y and yhat shapes differ");
    const auto active = active_nodes(g);
    Tensor out(y.shape());
    std::vector<double> values;
    for (std::size_t i = 0; i < y.size(); ++i) {
        eval_nodes(g, active, y[i], yhat[i], values);
        const double v = values[g.root];
        if (!std::isfinite(v))
            throw degenerate_loss_error("non-finite loss at position " +
                                        std::to_string(i));
        out[i] = v;
    }
    return out;
}

double reduce(const LossGenome& g, const Tensor& t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) sum += t[i];
    return g.sign * sum / static_cast<double>(t.size());
}

double forward_reduced(const LossGenome& g, const Tensor& y, const Tensor& yhat) {
    return reduce(g, forward(g, y, yhat));
}

Tensor backward(const LossGenome& g, const Tensor& y, const Tensor& yhat) {
    if (!y.same_shape(yhat))
        throw std::invalid_argument("backward: y and yhat shapes differ");
    const auto active = active_nodes(g);
    const double scale = g.sign / static_cast<double>(y.size());
    Tensor grad(y.shape());
    std::vector<double> values;
    std::vector<double> adjoint(g.nodes.size());
    for (std::size_t p = 0; p < y.size(); ++p) {
        eval_nodes(g, active, y[p], yhat[p], values);
        if (!std::isfinite(values[g.root]))
            throw degenerate_loss_error("non-finite loss at position " +
                                        std::to_string(p));
        adjoint.assign(g.nodes.size(), 0.0);
        adjoint[g.root] = 1.0;
        double dyhat = 0.0;
        for (std::size_t i = g.nodes.size(); i-- > 0;) {
            if (!active[i] || adjoint[i] == 0.0) continue;
            const auto& n = g.nodes[i];
            const double a = source_value(n.in_a, y[p], yhat[p], values);
            double da, db = 0.0;
            if (n.in_b) {
                const double b = source_value(*n.in_b, y[p], yhat[p], values);
                num::grad_binary(n.op, a, b, da, db);
            } else {
                da = num::grad_unary(n.op, a);
            }
            auto push = [&](const SourceRef& s, double d) {
                if (d == 0.0) return;
                switch (s.kind) {
                case SourceRef::Kind::InputYhat: dyhat += d; break;
                case SourceRef::Kind::Node: adjoint[s.index] += d; break;
                default: break;   // d/dy is not propagated
                }
            };
            push(n.in_a, adjoint[i] * da);
            if (n.in_b) push(*n.in_b, adjoint[i] * db);
        }
        const double gv = scale * dyhat;
        if (!std::isfinite(gv))
            throw degenerate_loss_error("non-finite gradient at position " +
                                        std::to_string(p));
        grad[p] = gv;
    }
    return grad;
}

std::uint64_t active_hash(const LossGenome& g) {
    const auto active = active_nodes(g);
    // Renumber active nodes so layout of inactive material does not matter.
    std::vector<std::size_t> renum(g.nodes.size(), 0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (active[i]) renum[i] = next++;

    std::ostringstream os;
    os << g.sign << '|' << renum[g.root] << '|';
    auto put = [&](const SourceRef& s) {
        switch (s.kind) {
        case SourceRef::Kind::InputY: os << 'y'; break;
        case SourceRef::Kind::InputYhat: os << 'p'; break;
        default: os << renum[s.index]; break;
        }
        os << ',';
    };
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!active[i]) continue;
        os << num::op_name(g.nodes[i].op) << ':';
        put(g.nodes[i].in_a);
        if (g.nodes[i].in_b) put(*g.nodes[i].in_b);
        os << ';';
    }
    return fnv1a(os.str());
}

namespace {

using nlohmann::json;

json ref_to_json(const SourceRef& s) {
    switch (s.kind) {
    case SourceRef::Kind::InputY: return "y";
    case SourceRef::Kind::InputYhat: return "yhat";
    default: return s.index;
    }
}

SourceRef ref_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "y") return SourceRef::y();
        if (s == "yhat") return SourceRef::yhat();
        throw genome_parse_error("bad source ref \"" + s + "\"");
    }
    if (j.is_number_unsigned())
        return SourceRef::node(j.get<std::size_t>());
    throw genome_parse_error("source ref must be \"y\", \"yhat\" or an index");
}

} // namespace

std::string serialize(const LossGenome& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json jn;
        jn["op"] = std::string(num::op_name(n.op));
        jn["in_a"] = ref_to_json(n.in_a);
        if (n.in_b) jn["in_b"] = ref_to_json(*n.in_b);
        nodes.push_back(std::move(jn));
    }
    json j;
    j["version"] = kGenomeSchemaVersion;
    j["length"] = g.nodes.size();
    j["nodes"] = std::move(nodes);
    j["root"] = g.root;
    j["sign"] = g.sign;
    return j.dump();
}

LossGenome parse_genome(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw genome_parse_error(e.what());   // message carries byte position
    }
    try {
        if (j.at("version").get<int>() != kGenomeSchemaVersion)
            throw genome_parse_error("unsupported genome schema version");
        LossGenome g;
        const auto& nodes = j.at("nodes");
        for (const auto& jn : nodes) {
            HiddenStateNode n;
            n.op = num::op_from_name(jn.at("op").get<std::string>());
            n.in_a = ref_from_json(jn.at("in_a"));
            if (jn.contains("in_b")) n.in_b = ref_from_json(jn.at("in_b"));
            g.nodes.push_back(std::move(n));
        }
        if (j.at("length").get<std::size_t>() != g.nodes.size())
            throw genome_parse_error("length field does not match node count");
        g.root = j.at("root").get<std::size_t>();
        g.sign = j.at("sign").get<int>();
        validate(g);
        return g;
    } catch (const json::exception& e) {
        throw genome_parse_error(e.what());
    } catch (const num::corrupt_genome_error& e) {
        throw genome_parse_error(e.what());
    }
}

} // namespace lfs
