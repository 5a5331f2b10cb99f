#pragma once

// Exact piecewise-linear gadget sub-graphs built from affine/ReLU nodes only:
//   max(a, b) = ReLU(a - b) + b
//   min(a, b) = b - ReLU(b - a)
//   |a|       = ReLU(2a) - a
//   clamp(z)  = hi - ReLU(hi - lo - ReLU(z - lo))
// Reductions over a vector use balanced pairwise trees (depth ceil(log2 d)).

#include <cstddef>
#include <vector>

#include "hyperspec/graph.hpp"

namespace hyperspec {

namespace detail {

// One max-tree reduction layer: pairs (v0,v1), (v2,v3), ... with an odd
// leftover passed through unchanged. Nodes used: Affine, ReLU, Add.
inline NodeId append_pairwise_max_layer(GraphBuilder& b, NodeId v) {
    const std::size_t k = b.elems(v);
    const std::size_t out = (k + 1) / 2;
    Matrix diff(out, k);   // rows e_{2i} - e_{2i+1}; zero row for leftover
    Matrix keep(out, k);   // rows e_{2i+1};          e_last for leftover
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
    return b.add(r, s);
}

inline NodeId append_pairwise_min_layer(GraphBuilder& b, NodeId v) {
    const std::size_t k = b.elems(v);
    const std::size_t out = (k + 1) / 2;
    Matrix diff(out, k);  // rows e_{2i+1} - e_{2i}
    Matrix keep(out, k);  // rows e_{2i+1}; e_last for leftover
    for (std::size_t i = 0; i < out; ++i) {
        if (2 * i + 1 < k) {
            diff.at(i, 2 * i + 1) = 1.0;
            diff.at(i, 2 * i) = -1.0;
            keep.at(i, 2 * i + 1) = 1.0;
        } else {
            keep.at(i, 2 * i) = 1.0;
        }
    }
    NodeId d = b.affine(v, std::move(diff), std::vector<double>(out, 0.0));
    NodeId r = b.relu(d);
    NodeId nr = b.negate(r);
    NodeId s = b.affine(v, std::move(keep), std::vector<double>(out, 0.0));
    return b.add(s, nr);
}

// Reduce a vector to its maximum with a balanced tree of pairwise maxes.
inline NodeId append_max_tree(GraphBuilder& b, NodeId v) {
    while (b.elems(v) > 1) v = append_pairwise_max_layer(b, v);
    return v;
}

inline NodeId append_min_tree(GraphBuilder& b, NodeId v) {
    while (b.elems(v) > 1) v = append_pairwise_min_layer(b, v);
    return v;
}

// Elementwise |z| = ReLU(2z) - z.
inline NodeId append_abs(GraphBuilder& b, NodeId z) {
    const std::size_t d = b.elems(z);
    NodeId two = b.affine(z, Matrix::scaled_identity(d, 2.0), std::vector<double>(d, 0.0));
    NodeId r = b.relu(two);
    NodeId nz = b.negate(z);
    return b.add(r, nz);
}

}  // namespace detail

// Elementwise max of two stacked dim-vectors: input (a || b), output max(a, b).
inline Graph max_gadget(std::size_t dim) {
    if (dim < 1) throw ShapeError("max_gadget: dim must be >= 1");
    GraphBuilder b;
    NodeId in = b.input(2 * dim);
    Matrix diff(dim, 2 * dim);  // a - b
    Matrix keep(dim, 2 * dim);  // b
    for (std::size_t i = 0; i < dim; ++i) {
        diff.at(i, i) = 1.0;
        diff.at(i, dim + i) = -1.0;
        keep.at(i, dim + i) = 1.0;
    }
    NodeId d = b.affine(in, std::move(diff), std::vector<double>(dim, 0.0));
    NodeId r = b.relu(d);
    NodeId s = b.affine(in, std::move(keep), std::vector<double>(dim, 0.0));
    return b.build(b.add(r, s));
}

// Elementwise min of two stacked dim-vectors: min(a, b) = b - ReLU(b - a).
inline Graph min_gadget(std::size_t dim) {
    if (dim < 1) throw ShapeError("min_gadget: dim must be >= 1");
    GraphBuilder b;
    NodeId in = b.input(2 * dim);
    Matrix diff(dim, 2 * dim);  // b - a
    Matrix keep(dim, 2 * dim);  // b
    for (std::size_t i = 0; i < dim; ++i) {
        diff.at(i, i) = -1.0;
        diff.at(i, dim + i) = 1.0;
        keep.at(i, dim + i) = 1.0;
    }
    NodeId d = b.affine(in, std::move(diff), std::vector<double>(dim, 0.0));
    NodeId r = b.relu(d);
    NodeId nr = b.negate(r);
    NodeId s = b.affine(in, std::move(keep), std::vector<double>(dim, 0.0));
    return b.build(b.add(s, nr));
}

// Elementwise absolute value.
inline Graph abs_gadget(std::size_t dim) {
    if (dim < 1) throw ShapeError("abs_gadget: dim must be >= 1");
    GraphBuilder b;
    NodeId in = b.input(dim);
    return b.build(detail::append_abs(b, in));
}

// L-infinity norm of a difference vector: scalar max_i |z_i|.
inline Graph linf_norm_gadget(std::size_t dim) {
    if (dim < 1) throw ShapeError("linf_norm_gadget: dim must be >= 1");
    GraphBuilder b;
    NodeId in = b.input(dim);
    NodeId a = detail::append_abs(b, in);
    return b.build(detail::append_max_tree(b, a));
}

// Projection (clamp) into a box: hi - ReLU(hi - lo - ReLU(z - lo)).
inline Graph project_gadget(const Hyperrectangle& box) {
    const std::size_t n = box.dim();
    if (n < 1) throw ShapeError("project_gadget: box must have dimension >= 1");
    GraphBuilder b;
    NodeId in = b.input(n);
    std::vector<double> neg_lo(n), span(n);
    for (std::size_t i = 0; i < n; ++i) {
        neg_lo[i] = -box.lower[i];
        span[i] = box.upper[i] - box.lower[i];
    }
    NodeId t1 = b.affine(in, Matrix::identity(n), std::move(neg_lo));
    NodeId r1 = b.relu(t1);
    NodeId t2 = b.affine(r1, Matrix::scaled_identity(n, -1.0), std::move(span));
    NodeId r2 = b.relu(t2);
    NodeId out = b.affine(r2, Matrix::scaled_identity(n, -1.0), box.upper.data);
    return b.build(out);
}

// Functional composition: feed `inner`'s output into `outer`'s input.
// `at` must name outer's input node; node ids are renumbered in the result.
inline Graph stitch(const Graph& outer, const Graph& inner, NodeId at) {
    if (!outer.shapes_known() || !inner.shapes_known() || !outer.is_acyclic() ||
        !inner.is_acyclic())
        throw ComposeError("stitch: malformed graph");
    if (at != outer.input_id())
        throw ComposeError("stitch: replacement point must be the outer graph's input node");
    if (inner.elems(inner.sink_id()) != outer.elems(outer.input_id()))
        throw ComposeError("stitch: inner output size " +
                           std::to_string(inner.elems(inner.sink_id())) +
                           " does not match outer input size " +
                           std::to_string(outer.elems(outer.input_id())));

    std::vector<Node> nodes;
    nodes.reserve(inner.node_count() + outer.node_count());
    // Inner nodes keep their ids.
    for (NodeId id = 0; id < inner.node_count(); ++id) nodes.push_back(inner.node(id));
    // Outer nodes are appended, dropping outer's input; references to it are
    // redirected to inner's sink.
    std::vector<NodeId> map(outer.node_count(), kNoNode);
    map[outer.input_id()] = inner.sink_id();
    for (NodeId id = 0; id < outer.node_count(); ++id) {
        if (id == outer.input_id()) continue;
        map[id] = nodes.size();
        nodes.push_back(outer.node(id));
    }
    for (NodeId id = inner.node_count(); id < nodes.size(); ++id) {
        for (NodeId& p : nodes[id].preds) p = map[p];
    }
    NodeId sink = map[outer.sink_id()];
    return Graph(std::move(nodes), inner.input_id(), sink);
}

}  // namespace hyperspec
