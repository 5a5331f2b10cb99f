#pragma once

// Lowers every node kind to the exchange subset {Input, Parameter, Affine,
// ReLU, Add, Concat}. Linear kinds (negate, scale, subtract, slice, select)
// become affine maps and evaluate to the same doubles as the originals.
// Piecewise-linear kinds (min/max/clamp/reduce_max) are expanded through
// their ReLU identities; at non-tie points those may differ from the exact
// min/max by one rounding, which is why composed problems are built from the
// ReLU-form gadgets in the first place.

#include <cstddef>
#include <vector>

#include "hyperspec/gadgets.hpp"
#include "hyperspec/graph.hpp"

namespace hyperspec {

// One scalar piecewise-linear decision: element `elem` of ReLU node `node`
// in the lowered graph.
struct PwlUnit {
    NodeId node = kNoNode;
    std::size_t elem = 0;
};

struct LoweredGraph {
    Graph graph;
    std::vector<NodeId> node_map;  // original node id -> lowered equivalent
    std::vector<PwlUnit> units;    // every ReLU element, topological order
};

namespace detail {

class LoweringBuilder {
public:
    NodeId emit(Node n) {
        nodes_.push_back(std::move(n));
        elems_.push_back(elem_of(nodes_.back()));
        return nodes_.size() - 1;
    }

    NodeId affine(NodeId pred, Matrix w, std::vector<double> b) {
        return emit(Node{AffineKind{std::move(w), std::move(b)}, {pred}});
    }
    NodeId relu(NodeId pred) { return emit(Node{ReluKind{}, {pred}}); }
    NodeId add(NodeId a, NodeId b) { return emit(Node{AddKind{}, {a, b}}); }

    NodeId neg(NodeId pred) {
        std::size_t d = elems_[pred];
        return affine(pred, Matrix::scaled_identity(d, -1.0), std::vector<double>(d, 0.0));
    }

    std::size_t elems(NodeId id) const { return elems_[id]; }

    Graph build(NodeId input, NodeId sink) { return Graph(std::move(nodes_), input, sink); }

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    std::size_t elem_of(const Node& n) const {
        std::vector<std::size_t> pe;
        for (NodeId p : n.preds) pe.push_back(elems_[p]);
        auto e = infer_elems(n.kind, pe, nullptr);
        if (!e) throw ShapeError("lowering produced an inconsistent node");
        return *e;
    }

    std::vector<Node> nodes_;
    std::vector<std::size_t> elems_;
};

// max(a, b) = ReLU(a - b) + b
inline NodeId lower_max_pair(LoweringBuilder& b, NodeId a, NodeId bb) {
    NodeId d = b.add(a, b.neg(bb));
    return b.add(b.relu(d), bb);
}

// min(a, b) = b - ReLU(b - a)
inline NodeId lower_min_pair(LoweringBuilder& b, NodeId a, NodeId bb) {
    NodeId d = b.add(bb, b.neg(a));
    return b.add(bb, b.neg(b.relu(d)));
}

// Pairwise max-tree over the elements of one vector node.
inline NodeId lower_reduce_max(LoweringBuilder& b, NodeId v) {
    while (b.elems(v) > 1) {
        const std::size_t k = b.elems(v);
        const std::size_t out = (k + 1) / 2;
        Matrix diff(out, k), keep(out, k);
        for (std::size_t i = 0; i < out; ++i) {
            if (2 * i + 1 < k) {
                diff.at(i, 2 * i) = 1.0;
                diff.at(i, 2 * i + 1) = -1.0;
                keep.at(i, 2 * i + 1) = 1.0;
            } else {
                keep.at(i, 2 * i) = 1.0;
            }
        }
        NodeId d = b.affine(v, std::move(diff), std::vector<double>(out, 0.0));
        NodeId r = b.relu(d);
        NodeId s = b.affine(v, std::move(keep), std::vector<double>(out, 0.0));
        v = b.add(r, s);
    }
    return v;
}

}  // namespace detail

inline LoweredGraph lower_to_affine_relu(const Graph& g) {
    if (!g.shapes_known() || !g.is_acyclic()) throw ShapeError("lower: graph malformed");

    detail::LoweringBuilder b;
    std::vector<NodeId> map(g.node_count(), kNoNode);

    for (NodeId id : g.topological_order()) {
        const Node& n = g.node(id);
        auto p = [&](std::size_t i) { return map[n.preds[i]]; };
        const std::size_t d = g.elems(id);

        struct V {
            detail::LoweringBuilder& b;
            const Node& n;
            decltype(p)& pred;
            std::size_t d;
            const Graph& g;
            NodeId id;

            NodeId operator()(const InputKind& k) { return b.emit(Node{InputKind{k.shape}, {}}); }
            NodeId operator()(const ParameterKind& k) {
                return b.emit(Node{ParameterKind{k.value}, {}});
            }
            NodeId operator()(const AffineKind& k) { return b.affine(pred(0), k.weight, k.bias); }
            NodeId operator()(const ReluKind&) { return b.relu(pred(0)); }
            NodeId operator()(const MaxPairwiseKind&) {
                return detail::lower_max_pair(b, pred(0), pred(1));
            }
            NodeId operator()(const MinPairwiseKind&) {
                return detail::lower_min_pair(b, pred(0), pred(1));
            }
            NodeId operator()(const AddKind&) { return b.add(pred(0), pred(1)); }
            NodeId operator()(const SubtractKind&) { return b.add(pred(0), b.neg(pred(1))); }
            NodeId operator()(const NegateKind&) { return b.neg(pred(0)); }
            NodeId operator()(const ScaleConstKind& k) {
                return b.affine(pred(0), Matrix::scaled_identity(d, k.factor),
                                std::vector<double>(d, 0.0));
            }
            NodeId operator()(const ConcatKind&) {
                Node copy = g.node(id);
                for (std::size_t i = 0; i < copy.preds.size(); ++i) copy.preds[i] = pred(i);
                return b.emit(std::move(copy));
            }
            NodeId operator()(const SliceKind& k) {
                const std::size_t pd = g.elems(n.preds[0]);
                Matrix sel(d, pd);
                for (std::size_t i = 0; i < d; ++i) sel.at(i, k.begin + i) = 1.0;
                return b.affine(pred(0), std::move(sel), std::vector<double>(d, 0.0));
            }
            NodeId operator()(const SelectIndicesKind& k) {
                const std::size_t pd = g.elems(n.preds[0]);
                Matrix sel(d, pd);
                for (std::size_t i = 0; i < d; ++i) sel.at(i, k.indices[i]) = 1.0;
                return b.affine(pred(0), std::move(sel), std::vector<double>(d, 0.0));
            }
            NodeId operator()(const ClampConstKind& k) {
                // hi - ReLU(hi - lo - ReLU(z - lo))
                std::vector<double> neg_lo(d), span(d);
                for (std::size_t i = 0; i < d; ++i) {
                    neg_lo[i] = -k.lower[i];
                    span[i] = k.upper[i] - k.lower[i];
                }
                NodeId t1 = b.affine(pred(0), Matrix::identity(d), std::move(neg_lo));
                NodeId r1 = b.relu(t1);
                NodeId t2 = b.affine(r1, Matrix::scaled_identity(d, -1.0), std::move(span));
                NodeId r2 = b.relu(t2);
                return b.affine(r2, Matrix::scaled_identity(d, -1.0), k.upper);
            }
            NodeId operator()(const ReduceMaxKind&) {
                return detail::lower_reduce_max(b, pred(0));
            }
        };
        map[id] = std::visit(V{b, n, p, d, g, id}, n.kind);
    }

    LoweredGraph out{b.build(map[g.input_id()], map[g.sink_id()]), std::move(map), {}};
    for (NodeId id : out.graph.topological_order()) {
        if (std::holds_alternative<ReluKind>(out.graph.node(id).kind)) {
            for (std::size_t e = 0; e < out.graph.elems(id); ++e)
                out.units.push_back(PwlUnit{id, e});
        }
    }
    return out;
}

// Number of scalar piecewise-linear units a graph lowers to.
inline std::size_t pwl_unit_count(const Graph& g) { return lower_to_affine_relu(g).units.size(); }

}  // namespace hyperspec
