#pragma once

// Certified bound propagation over the computational graph.
//
// interval_bounds: forward interval arithmetic with per-node exact
// transformers. The affine transformer accumulates terms in the same order
// as evaluation, so float-evaluated node values are always contained.
//
// backward_linear_bounds: backward propagation of linear bounding functions
// from the sink, relaxing each unstable ReLU with the triangle relaxation
// chosen from its interval pre-activation bounds. Runs on the lowered
// affine/ReLU form of the graph and is intersected with the interval result
// at the sink, so it can only tighten it.

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "hyperspec/graph.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/tensor.hpp"

namespace hyperspec {

struct Bounds {
    std::vector<Value> lower;  // per node
    std::vector<Value> upper;
};

namespace detail {

struct IntervalResult {
    std::vector<std::vector<double>> lo, up;
};

inline IntervalResult interval_pass(const Graph& g, const Hyperrectangle& box) {
    if (!g.shapes_known() || !g.is_acyclic()) throw EvalError("interval_pass: graph malformed");
    if (box.dim() != g.input_dim())
        throw ShapeError("interval_pass: box dimension does not match graph input");

    IntervalResult r;
    r.lo.resize(g.node_count());
    r.up.resize(g.node_count());

    for (NodeId id : g.topological_order()) {
        const Node& n = g.node(id);
        std::vector<double>&lo = r.lo[id], &up = r.up[id];
        lo.assign(g.elems(id), 0.0);
        up.assign(g.elems(id), 0.0);
        auto plo = [&](std::size_t i) -> const std::vector<double>& { return r.lo[n.preds[i]]; };
        auto pup = [&](std::size_t i) -> const std::vector<double>& { return r.up[n.preds[i]]; };

        struct V {
            const Graph& g;
            const Node& n;
            const Hyperrectangle& box;
            std::vector<double>&lo, &up;
            decltype(plo)& pl;
            decltype(pup)& pu;

            void operator()(const InputKind&) {
                lo = box.lower.data;
                up = box.upper.data;
            }
            void operator()(const ParameterKind& k) {
                lo = k.value.data;
                up = k.value.data;
            }
            void operator()(const AffineKind& k) {
                const std::vector<double>&xl = pl(0), &xu = pu(0);
                for (std::size_t rr = 0; rr < k.weight.rows; ++rr) {
                    double accl = k.bias[rr], accu = k.bias[rr];
                    const double* w = &k.weight.a[rr * k.weight.cols];
                    for (std::size_t c = 0; c < k.weight.cols; ++c) {
                        if (w[c] >= 0.0) {
                            accl += w[c] * xl[c];
                            accu += w[c] * xu[c];
                        } else {
                            accl += w[c] * xu[c];
                            accu += w[c] * xl[c];
                        }
                    }
                    lo[rr] = accl;
                    up[rr] = accu;
                }
            }
            void operator()(const ReluKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = std::max(0.0, pl(0)[i]);
                    up[i] = std::max(0.0, pu(0)[i]);
                }
            }
            void operator()(const MaxPairwiseKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = std::max(pl(0)[i], pl(1)[i]);
                    up[i] = std::max(pu(0)[i], pu(1)[i]);
                }
            }
            void operator()(const MinPairwiseKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = std::min(pl(0)[i], pl(1)[i]);
                    up[i] = std::min(pu(0)[i], pu(1)[i]);
                }
            }
            void operator()(const AddKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = pl(0)[i] + pl(1)[i];
                    up[i] = pu(0)[i] + pu(1)[i];
                }
            }
            void operator()(const SubtractKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = pl(0)[i] - pu(1)[i];
                    up[i] = pu(0)[i] - pl(1)[i];
                }
            }
            void operator()(const NegateKind&) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = -pu(0)[i];
                    up[i] = -pl(0)[i];
                }
            }
            void operator()(const ScaleConstKind& k) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    if (k.factor >= 0.0) {
                        lo[i] = k.factor * pl(0)[i];
                        up[i] = k.factor * pu(0)[i];
                    } else {
                        lo[i] = k.factor * pu(0)[i];
                        up[i] = k.factor * pl(0)[i];
                    }
                }
            }
            void operator()(const ConcatKind&) {
                std::size_t at = 0;
                for (std::size_t pi = 0; pi < n.preds.size(); ++pi) {
                    for (std::size_t i = 0; i < pl(pi).size(); ++i, ++at) {
                        lo[at] = pl(pi)[i];
                        up[at] = pu(pi)[i];
                    }
                }
            }
            void operator()(const SliceKind& k) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = pl(0)[k.begin + i];
                    up[i] = pu(0)[k.begin + i];
                }
            }
            void operator()(const SelectIndicesKind& k) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = pl(0)[k.indices[i]];
                    up[i] = pu(0)[k.indices[i]];
                }
            }
            void operator()(const ClampConstKind& k) {
                for (std::size_t i = 0; i < lo.size(); ++i) {
                    lo[i] = std::min(k.upper[i], std::max(k.lower[i], pl(0)[i]));
                    up[i] = std::min(k.upper[i], std::max(k.lower[i], pu(0)[i]));
                }
            }
            void operator()(const ReduceMaxKind&) {
                double ml = pl(0)[0], mu = pu(0)[0];
                for (std::size_t i = 1; i < pl(0).size(); ++i) {
                    ml = std::max(ml, pl(0)[i]);
                    mu = std::max(mu, pu(0)[i]);
                }
                lo[0] = ml;
                up[0] = mu;
            }
        };
        std::visit(V{g, n, box, lo, up, plo, pup}, n.kind);
    }
    return r;
}

// Backward linear bound for one side of the sink of a lowered (affine/ReLU)
// graph. `iv` must be the interval pass over the same lowered graph.
inline std::vector<double> crown_sink_side(const Graph& lg, const Hyperrectangle& box,
                                           const IntervalResult& iv, bool want_lower) {
    const std::size_t S = lg.output_dim();
    const NodeId sink = lg.sink_id();

    // Coefficient matrices, allocated on demand: coef[node][s * elems + e].
    std::vector<std::vector<double>> coef(lg.node_count());
    std::vector<double> constant(S, 0.0);
    auto ensure = [&](NodeId id) {
        if (coef[id].empty()) coef[id].assign(S * lg.elems(id), 0.0);
    };
    ensure(sink);
    for (std::size_t s = 0; s < S; ++s) coef[sink][s * S + s] = 1.0;

    const std::vector<NodeId>& topo = lg.topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const NodeId id = *it;
        if (coef[id].empty()) continue;
        const Node& n = lg.node(id);
        const std::vector<double>& A = coef[id];
        const std::size_t d = lg.elems(id);

        if (const auto* k = std::get_if<AffineKind>(&n.kind)) {
            NodeId p = n.preds[0];
            ensure(p);
            const std::size_t pd = lg.elems(p);
            for (std::size_t s = 0; s < S; ++s) {
                for (std::size_t e = 0; e < d; ++e) {
                    const double a = A[s * d + e];
                    if (a == 0.0) continue;
                    constant[s] += a * k->bias[e];
                    const double* wrow = &k->weight.a[e * k->weight.cols];
                    for (std::size_t c = 0; c < pd; ++c) coef[p][s * pd + c] += a * wrow[c];
                }
            }
        } else if (std::holds_alternative<ReluKind>(n.kind)) {
            NodeId p = n.preds[0];
            ensure(p);
            const std::vector<double>&pl = iv.lo[p], &pu = iv.up[p];
            for (std::size_t e = 0; e < d; ++e) {
                const double l = pl[e], u = pu[e];
                for (std::size_t s = 0; s < S; ++s) {
                    const double a = A[s * d + e];
                    if (a == 0.0) continue;
                    if (u <= 0.0) continue;  // inactive: zero function
                    if (l >= 0.0) {          // active: identity
                        coef[p][s * d + e] += a;
                        continue;
                    }
                    // Unstable: triangle relaxation. Upper line is the chord,
                    // lower line passes through the origin with slope 0 or 1.
                    const double s_up = u / (u - l);
                    const double b_up = -l * u / (u - l);
                    const double s_lo = (u >= -l) ? 1.0 : 0.0;
                    const bool use_lower_line = want_lower ? (a >= 0.0) : (a < 0.0);
                    if (use_lower_line) {
                        coef[p][s * d + e] += a * s_lo;
                    } else {
                        coef[p][s * d + e] += a * s_up;
                        constant[s] += a * b_up;
                    }
                }
            }
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            for (NodeId p : n.preds) {
                ensure(p);
                for (std::size_t i = 0; i < A.size(); ++i) coef[p][i] += A[i];
            }
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::size_t at = 0;
            for (NodeId p : n.preds) {
                ensure(p);
                const std::size_t pd = lg.elems(p);
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t e = 0; e < pd; ++e)
                        coef[p][s * pd + e] += A[s * d + at + e];
                at += pd;
            }
        } else if (const auto* k = std::get_if<ParameterKind>(&n.kind)) {
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t e = 0; e < d; ++e) constant[s] += A[s * d + e] * k->value.data[e];
        } else if (std::holds_alternative<InputKind>(n.kind)) {
            // handled after the walk
        } else {
            throw EvalError("crown: unexpected node kind in lowered graph");
        }
    }

    std::vector<double> out(S, 0.0);
    const std::vector<double>& Ain = coef[lg.input_id()];
    const std::size_t w = lg.input_dim();
    for (std::size_t s = 0; s < S; ++s) {
        double acc = constant[s];
        if (!Ain.empty()) {
            for (std::size_t j = 0; j < w; ++j) {
                const double a = Ain[s * w + j];
                const bool take_lo = want_lower ? (a >= 0.0) : (a < 0.0);
                acc += a * (take_lo ? box.lower[j] : box.upper[j]);
            }
        }
        out[s] = acc;
    }
    return out;
}

// Sink bounds of a lowered graph: CROWN backward pass intersected with the
// lowered interval pass.
inline std::pair<std::vector<double>, std::vector<double>> crown_sink_bounds(
    const Graph& lg, const Hyperrectangle& box) {
    IntervalResult iv = interval_pass(lg, box);
    std::vector<double> lo = crown_sink_side(lg, box, iv, /*want_lower=*/true);
    std::vector<double> up = crown_sink_side(lg, box, iv, /*want_lower=*/false);
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = std::max(lo[i], iv.lo[lg.sink_id()][i]);
        up[i] = std::min(up[i], iv.up[lg.sink_id()][i]);
    }
    return {std::move(lo), std::move(up)};
}

}  // namespace detail

inline Bounds interval_bounds(const Graph& g, const Hyperrectangle& box) {
    detail::IntervalResult r = detail::interval_pass(g, box);
    Bounds b;
    b.lower.reserve(g.node_count());
    b.upper.reserve(g.node_count());
    for (NodeId id = 0; id < g.node_count(); ++id) {
        b.lower.push_back(Value(TensorShape::vector(g.elems(id)), std::move(r.lo[id])));
        b.upper.push_back(Value(TensorShape::vector(g.elems(id)), std::move(r.up[id])));
    }
    return b;
}

inline Bounds backward_linear_bounds(const Graph& g, const Hyperrectangle& box) {
    Bounds b = interval_bounds(g, box);
    LoweredGraph lg = lower_to_affine_relu(g);
    auto [lo, up] = detail::crown_sink_bounds(lg.graph, box);
    Value& slo = b.lower[g.sink_id()];
    Value& sup = b.upper[g.sink_id()];
    for (std::size_t i = 0; i < slo.size(); ++i) {
        slo[i] = std::max(slo[i], lo[i]);
        sup[i] = std::min(sup[i], up[i]);
    }
    return b;
}

}  // namespace hyperspec
