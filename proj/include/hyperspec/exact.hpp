#pragma once

// Exact (rational) linear algebra over lowered graphs: affine forms of node
// outputs as functions of the graph input, under a fixed activation pattern.
// Two extraction routes are provided: a forward node-by-node propagation used
// by the enumeration oracle, and a backward substitution from a target
// element used by the verifier's exact leaf decision.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "hyperspec/graph.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/rational.hpp"
#include "hyperspec/tensor.hpp"

namespace hyperspec {

// constant + sum_j coeff[j] * w_j
struct RationalAffine {
    std::vector<Rational> coeff;
    Rational constant;

    explicit RationalAffine(std::size_t dim = 0) : coeff(dim), constant(0) {}

    Rational eval(const std::vector<Rational>& w) const {
        Rational acc = constant;
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            if (!coeff[j].is_zero()) acc += coeff[j] * w[j];
        }
        return acc;
    }
};

struct RationalBox {
    std::vector<Rational> lo, hi;

    static RationalBox from(const Hyperrectangle& box) {
        RationalBox r;
        r.lo.reserve(box.dim());
        r.hi.reserve(box.dim());
        for (std::size_t i = 0; i < box.dim(); ++i) {
            r.lo.push_back(Rational::from_double(box.lower[i]));
            r.hi.push_back(Rational::from_double(box.upper[i]));
        }
        return r;
    }

    std::size_t dim() const { return lo.size(); }
};

// Exact range of an affine form over a box.
inline std::pair<Rational, Rational> affine_range(const RationalAffine& f, const RationalBox& box) {
    Rational lo = f.constant, hi = f.constant;
    for (std::size_t j = 0; j < f.coeff.size(); ++j) {
        const Rational& c = f.coeff[j];
        if (c.is_zero()) continue;
        if (c.sign() > 0) {
            lo += c * box.lo[j];
            hi += c * box.hi[j];
        } else {
            lo += c * box.hi[j];
            hi += c * box.lo[j];
        }
    }
    return {std::move(lo), std::move(hi)};
}

// Per-graph cache of constant payloads converted to rationals once.
struct RationalGraphCache {
    std::vector<std::vector<Rational>> affine_w;  // row-major, per node
    std::vector<std::vector<Rational>> affine_b;
    std::vector<std::vector<Rational>> constants;  // parameter values

    static RationalGraphCache make(const Graph& g) {
        RationalGraphCache c;
        c.affine_w.resize(g.node_count());
        c.affine_b.resize(g.node_count());
        c.constants.resize(g.node_count());
        for (NodeId id = 0; id < g.node_count(); ++id) {
            if (const auto* a = std::get_if<AffineKind>(&g.node(id).kind)) {
                c.affine_w[id].reserve(a->weight.a.size());
                for (double x : a->weight.a) c.affine_w[id].push_back(Rational::from_double(x));
                for (double x : a->bias) c.affine_b[id].push_back(Rational::from_double(x));
            } else if (const auto* p = std::get_if<ParameterKind>(&g.node(id).kind)) {
                for (double x : p->value.data) c.constants[id].push_back(Rational::from_double(x));
            }
        }
        return c;
    }
};

// Fast lookup from (relu node, element) to the flat unit index.
struct UnitIndex {
    std::vector<std::ptrdiff_t> base;  // node -> first unit index, or -1
    std::size_t count = 0;

    static UnitIndex make(const LoweredGraph& lg) {
        UnitIndex u;
        u.base.assign(lg.graph.node_count(), -1);
        for (std::size_t i = 0; i < lg.units.size(); ++i) {
            if (u.base[lg.units[i].node] < 0)
                u.base[lg.units[i].node] = static_cast<std::ptrdiff_t>(i);
        }
        u.count = lg.units.size();
        return u;
    }

    std::size_t of(NodeId node, std::size_t elem) const {
        return static_cast<std::size_t>(base[node]) + elem;
    }
};

// Affine form of element `elem` of node `target` as a function of the input,
// with ReLU phases fixed by `active` (per unit: true = identity, false = 0).
// Backward substitution from the target through the lowered graph.
inline RationalAffine backward_affine_form(const Graph& lg, const RationalGraphCache& cache,
                                           const UnitIndex& units, const std::vector<char>& active,
                                           NodeId target, std::size_t elem) {
    const std::size_t w = lg.input_dim();
    std::vector<std::vector<Rational>> coef(lg.node_count());
    auto ensure = [&](NodeId id) {
        if (coef[id].empty()) coef[id].assign(lg.elems(id), Rational(0));
    };
    ensure(target);
    coef[target][elem] = Rational(1);
    Rational constant(0);

    const std::vector<NodeId>& topo = lg.topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const NodeId id = *it;
        if (coef[id].empty()) continue;
        const Node& n = lg.node(id);
        std::vector<Rational>& A = coef[id];

        if (const auto* k = std::get_if<AffineKind>(&n.kind)) {
            NodeId p = n.preds[0];
            ensure(p);
            const std::size_t cols = k->weight.cols;
            for (std::size_t e = 0; e < A.size(); ++e) {
                if (A[e].is_zero()) continue;
                constant += A[e] * cache.affine_b[id][e];
                for (std::size_t c = 0; c < cols; ++c) {
                    const Rational& wv = cache.affine_w[id][e * cols + c];
                    if (!wv.is_zero()) coef[p][c] += A[e] * wv;
                }
            }
        } else if (std::holds_alternative<ReluKind>(n.kind)) {
            NodeId p = n.preds[0];
            ensure(p);
            for (std::size_t e = 0; e < A.size(); ++e) {
                if (A[e].is_zero()) continue;
                if (active[units.of(id, e)]) coef[p][e] += A[e];
            }
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            for (NodeId p : n.preds) {
                ensure(p);
                for (std::size_t e = 0; e < A.size(); ++e)
                    if (!A[e].is_zero()) coef[p][e] += A[e];
            }
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::size_t at = 0;
            for (NodeId p : n.preds) {
                ensure(p);
                for (std::size_t e = 0; e < lg.elems(p); ++e)
                    if (!A[at + e].is_zero()) coef[p][e] += A[at + e];
                at += lg.elems(p);
            }
        } else if (std::holds_alternative<ParameterKind>(n.kind)) {
            for (std::size_t e = 0; e < A.size(); ++e)
                if (!A[e].is_zero()) constant += A[e] * cache.constants[id][e];
        } else if (std::holds_alternative<InputKind>(n.kind)) {
            // terminal; collected below
        } else {
            throw EvalError("backward_affine_form: unexpected kind in lowered graph");
        }
    }

    RationalAffine out(w);
    out.constant = std::move(constant);
    if (!coef[lg.input_id()].empty()) {
        for (std::size_t j = 0; j < w; ++j) out.coeff[j] = std::move(coef[lg.input_id()][j]);
    }
    return out;
}

// Forward propagation of affine forms through the lowered graph for a fully
// fixed activation pattern. Returns per-node element forms.
inline std::vector<std::vector<RationalAffine>> forward_affine_forms(
    const Graph& lg, const RationalGraphCache& cache, const UnitIndex& units,
    const std::vector<char>& active) {
    const std::size_t w = lg.input_dim();
    std::vector<std::vector<RationalAffine>> forms(lg.node_count());

    for (NodeId id : lg.topological_order()) {
        const Node& n = lg.node(id);
        std::vector<RationalAffine>& out = forms[id];
        out.assign(lg.elems(id), RationalAffine(w));

        if (std::holds_alternative<InputKind>(n.kind)) {
            for (std::size_t e = 0; e < out.size(); ++e) out[e].coeff[e] = Rational(1);
        } else if (std::holds_alternative<ParameterKind>(n.kind)) {
            for (std::size_t e = 0; e < out.size(); ++e) out[e].constant = cache.constants[id][e];
        } else if (const auto* k = std::get_if<AffineKind>(&n.kind)) {
            const std::vector<RationalAffine>& x = forms[n.preds[0]];
            const std::size_t cols = k->weight.cols;
            for (std::size_t r = 0; r < out.size(); ++r) {
                RationalAffine acc(w);
                acc.constant = cache.affine_b[id][r];
                for (std::size_t c = 0; c < cols; ++c) {
                    const Rational& wv = cache.affine_w[id][r * cols + c];
                    if (wv.is_zero()) continue;
                    acc.constant += wv * x[c].constant;
                    for (std::size_t j = 0; j < w; ++j)
                        if (!x[c].coeff[j].is_zero()) acc.coeff[j] += wv * x[c].coeff[j];
                }
                out[r] = std::move(acc);
            }
        } else if (std::holds_alternative<ReluKind>(n.kind)) {
            const std::vector<RationalAffine>& x = forms[n.preds[0]];
            for (std::size_t e = 0; e < out.size(); ++e) {
                if (active[units.of(id, e)]) out[e] = x[e];
            }
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            const std::vector<RationalAffine>& a = forms[n.preds[0]];
            const std::vector<RationalAffine>& b = forms[n.preds[1]];
            for (std::size_t e = 0; e < out.size(); ++e) {
                out[e].constant = a[e].constant + b[e].constant;
                for (std::size_t j = 0; j < w; ++j) out[e].coeff[j] = a[e].coeff[j] + b[e].coeff[j];
            }
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::size_t at = 0;
            for (NodeId p : n.preds) {
                for (std::size_t e = 0; e < lg.elems(p); ++e) out[at + e] = forms[p][e];
                at += lg.elems(p);
            }
        } else {
            throw EvalError("forward_affine_forms: unexpected kind in lowered graph");
        }
    }
    return forms;
}

}  // namespace hyperspec
