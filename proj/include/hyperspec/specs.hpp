#pragma once

// Builders for the five global-specification hyperproperties. Each builder
// produces an NNDH: a box W together with two auxiliary networks. N_in
// generates the tuples of network inputs from a point of W, and N_sat is a
// satisfaction function that is non-negative exactly on the output set.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hyperspec/dnf.hpp"
#include "hyperspec/gadgets.hpp"
#include "hyperspec/graph.hpp"

namespace hyperspec {

enum class SpecKind {
    monotonicity,
    robustness_katz,
    robustness_extra_class,
    lipschitz,
    dependency_fairness,
};

inline const char* spec_kind_name(SpecKind k) {
    switch (k) {
        case SpecKind::monotonicity: return "monotonicity";
        case SpecKind::robustness_katz: return "robustness_katz";
        case SpecKind::robustness_extra_class: return "robustness_extra_class";
        case SpecKind::lipschitz: return "lipschitz";
        case SpecKind::dependency_fairness: return "dependency_fairness";
    }
    return "?";
}

enum class MonotonicityDirection { non_increasing, non_decreasing };

struct SpecParams {
    Hyperrectangle domain;  // X, the network's input domain (dimension n)
    std::size_t output_dim = 1;  // m: network output dimension; for the
                                 // extra-class spec this counts the real
                                 // classes (the network then has m+1 outputs)

    // Monotonicity.
    std::size_t input_index = 1;   // i, 1-based
    std::size_t output_index = 1;  // j, 1-based
    MonotonicityDirection direction = MonotonicityDirection::non_increasing;

    // Robustness.
    double delta = 0.0;    // L-infinity ball radius
    double epsilon = 0.0;  // permitted output change

    // Lipschitz.
    double lipschitz_k = 0.0;

    // Dependency fairness.
    std::size_t attribute_values = 0;  // A, cardinality of the sensitive attribute
};

// Neural-network-defined hyperproperty: input tuples are N_in(w) for w in
// w_box, outputs are accepted when N_sat(x..., y...) >= 0.
struct NNDH {
    SpecKind kind = SpecKind::monotonicity;
    SpecParams params;

    Hyperrectangle w_box;        // W, dimension w
    Graph n_in;                  // R^w -> R^{v*n}
    Graph n_sat;                 // R^{v*n + v*m} -> R
    std::size_t copies = 0;      // v
    std::size_t input_dim = 0;   // n
    std::size_t output_dim = 0;  // m (actual network output dimension)

    void check() const {
        if (n_in.input_dim() != w_box.dim())
            throw SpecError("NNDH: n_in input dimension does not match W");
        if (n_in.output_dim() != copies * input_dim)
            throw SpecError("NNDH: n_in output dimension is not v*n");
        if (n_sat.input_dim() != copies * (input_dim + output_dim))
            throw SpecError("NNDH: n_sat input dimension is not v*(n+m)");
        if (n_sat.output_dim() != 1) throw SpecError("NNDH: n_sat must produce a scalar");
    }
};

namespace detail {

// Pieces of the n-vector starting at `off` inside `w`, with coordinate `idx`
// (0-based, relative to the block) replaced by node `repl`. Slices are only
// created for non-empty prefix/suffix so no node ends up dangling.
inline void push_replaced_pieces(GraphBuilder& b, NodeId w, std::size_t off, std::size_t n,
                                 std::size_t idx, NodeId repl, std::vector<NodeId>& pieces) {
    if (idx > 0) pieces.push_back(b.slice(w, off, off + idx));
    pieces.push_back(repl);
    if (idx + 1 < n) pieces.push_back(b.slice(w, off + idx + 1, off + n));
}

inline void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw SpecError(std::string(what) + " must be strictly positive");
}

}  // namespace detail

// --- Example: global monotonicity -----------------------------------------
// W = X x X. N_in copies both points but replaces coordinate i of the first
// by min(x1_i, x2_i) and of the second by max(x1_i, x2_i). N_sat selects
// y1_j - y2_j (flipped for the non-decreasing direction).
inline NNDH build_monotonicity(const SpecParams& params) {
    const std::size_t n = params.domain.dim();
    const std::size_t m = params.output_dim;
    if (n < 1 || m < 1) throw SpecError("monotonicity: empty domain or output");
    if (params.input_index < 1 || params.input_index > n)
        throw SpecError("monotonicity: input index out of range");
    if (params.output_index < 1 || params.output_index > m)
        throw SpecError("monotonicity: output index out of range");
    const std::size_t i = params.input_index - 1;
    const std::size_t j = params.output_index - 1;

    GraphBuilder ib;
    NodeId w = ib.input(2 * n);
    NodeId pair = ib.select(w, {i, n + i});
    NodeId lo = ib.splice(min_gadget(1), pair);
    NodeId hi = ib.splice(max_gadget(1), pair);
    std::vector<NodeId> pieces;
    detail::push_replaced_pieces(ib, w, 0, n, i, lo, pieces);
    detail::push_replaced_pieces(ib, w, n, n, i, hi, pieces);
    Graph n_in = ib.build(pieces.size() == 1 ? pieces.front() : ib.concat(pieces));

    GraphBuilder sb;
    NodeId sat_in = sb.input(2 * n + 2 * m);
    Matrix row(1, 2 * n + 2 * m);
    const double sign = params.direction == MonotonicityDirection::non_increasing ? 1.0 : -1.0;
    row.at(0, 2 * n + j) = sign;
    row.at(0, 2 * n + m + j) = -sign;
    Graph n_sat = sb.build(sb.affine(sat_in, row, {0.0}));

    NNDH spec{SpecKind::monotonicity, params,
              Hyperrectangle::concat(params.domain, params.domain), std::move(n_in),
              std::move(n_sat), 2, n, m};
    spec.check();
    return spec;
}

// --- Example: global L-infinity robustness (bounded output change) --------
// W = X x [-delta, delta]^n. N_in(x, tau) = (x, project_X(x + tau)).
// N_sat = epsilon - ||y1 - y2||_inf.
inline NNDH build_global_robustness_katz(const SpecParams& params) {
    const std::size_t n = params.domain.dim();
    const std::size_t m = params.output_dim;
    if (n < 1 || m < 1) throw SpecError("robustness: empty domain or output");
    detail::require_positive(params.delta, "robustness radius delta");
    detail::require_positive(params.epsilon, "robustness magnitude epsilon");

    GraphBuilder ib;
    NodeId w = ib.input(2 * n);
    NodeId x = ib.slice(w, 0, n);
    NodeId tau = ib.slice(w, n, 2 * n);
    NodeId shifted = ib.add(x, tau);
    NodeId projected = ib.splice(project_gadget(params.domain), shifted);
    Graph n_in = ib.build(ib.concat({x, projected}));

    GraphBuilder sb;
    NodeId sat_in = sb.input(2 * n + 2 * m);
    NodeId y1 = sb.slice(sat_in, 2 * n, 2 * n + m);
    NodeId y2 = sb.slice(sat_in, 2 * n + m, 2 * n + 2 * m);
    NodeId diff = sb.subtract(y1, y2);
    NodeId norm = sb.splice(linf_norm_gadget(m), diff);
    Graph n_sat = sb.build(sb.affine(norm, Matrix(1, 1, {-1.0}), {params.epsilon}));

    NNDH spec{SpecKind::robustness_katz, params,
              Hyperrectangle::concat(params.domain,
                                     Hyperrectangle::cube(n, -params.delta, params.delta)),
              std::move(n_in), std::move(n_sat), 2, n, m};
    spec.check();
    return spec;
}

// DNF formula for "the two outputs share an argmax class", over a vector that
// concatenates `copies` output blocks of size block at offset `off`. Classes
// range over the first `classes` entries of each block.
namespace detail {

inline void append_same_clauses(DnfFormula& f, std::size_t off, std::size_t copies,
                                std::size_t block, std::size_t classes) {
    for (std::size_t j1 = 0; j1 < classes; ++j1) {
        DnfClause clause;
        for (std::size_t k = 0; k < copies; ++k) {
            for (std::size_t j2 = 0; j2 < classes; ++j2) {
                clause.push_back(DnfAtom{off + k * block + j1, off + k * block + j2});
            }
        }
        f.clauses.push_back(std::move(clause));
    }
}

}  // namespace detail

// --- Example: global robustness with an extra non-robustness class --------
// The classifier has m real classes plus an extra output (index m, 0-based)
// flagging non-robustness. Accepted when either output assigns the extra
// class or both assign the same real class.
inline NNDH build_global_robustness_extra_class(const SpecParams& params) {
    const std::size_t n = params.domain.dim();
    const std::size_t m = params.output_dim;  // real classes
    if (m < 1) throw SpecError("robustness_extra_class: need at least one real class");
    if (n < 1) throw SpecError("robustness_extra_class: empty domain");
    detail::require_positive(params.delta, "robustness radius delta");
    const std::size_t block = m + 1;  // per-copy output size incl. extra class

    // W and N_in are shared with the bounded-change robustness spec.
    SpecParams katz = params;
    katz.epsilon = 1.0;  // unused by this spec; keep the shared builder happy
    NNDH base = build_global_robustness_katz(katz);

    const std::size_t off = 2 * n;
    DnfFormula f;
    f.dim = 2 * n + 2 * block;
    DnfClause nr1, nr2;
    for (std::size_t j = 0; j < m; ++j) {
        nr1.push_back(DnfAtom{off + m, off + j});
        nr2.push_back(DnfAtom{off + block + m, off + block + j});
    }
    f.clauses.push_back(std::move(nr1));
    f.clauses.push_back(std::move(nr2));
    detail::append_same_clauses(f, off, 2, block, m);

    NNDH spec{SpecKind::robustness_extra_class, params, base.w_box, std::move(base.n_in),
              compile_dnf(f), 2, n, block};
    spec.check();
    return spec;
}

// --- Example: Lipschitz continuity -----------------------------------------
// W = X x X, N_in is the identity, and the (input-dependent) output set is
// K*||x1 - x2||_inf - ||y1 - y2||_inf >= 0.
inline NNDH build_lipschitz(const SpecParams& params) {
    const std::size_t n = params.domain.dim();
    const std::size_t m = params.output_dim;
    if (n < 1 || m < 1) throw SpecError("lipschitz: empty domain or output");
    if (params.lipschitz_k < 0.0 || !std::isfinite(params.lipschitz_k))
        throw SpecError("lipschitz: constant K must be non-negative");

    GraphBuilder ib;
    Graph n_in = ib.build(ib.input(2 * n));  // identity

    GraphBuilder sb;
    NodeId sat_in = sb.input(2 * n + 2 * m);
    NodeId dx = sb.subtract(sb.slice(sat_in, 0, n), sb.slice(sat_in, n, 2 * n));
    NodeId dy =
        sb.subtract(sb.slice(sat_in, 2 * n, 2 * n + m), sb.slice(sat_in, 2 * n + m, 2 * n + 2 * m));
    NodeId nx = sb.splice(linf_norm_gadget(n), dx);
    NodeId ny = sb.splice(linf_norm_gadget(m), dy);
    NodeId both = sb.concat({nx, ny});
    Graph n_sat = sb.build(sb.affine(both, Matrix(1, 2, {params.lipschitz_k, -1.0}), {0.0}));

    NNDH spec{SpecKind::lipschitz, params, Hyperrectangle::concat(params.domain, params.domain),
              std::move(n_in), std::move(n_sat), 2, n, m};
    spec.check();
    return spec;
}

// --- Example: dependency fairness ------------------------------------------
// The first input coordinate is a categorical sensitive attribute with values
// 1..A. W = X; copy k receives assign(k, x) = diag(0,1,...,1) x + k*e_1.
// Accepted when all copies share an argmax class.
inline NNDH build_dependency_fairness(const SpecParams& params) {
    const std::size_t n = params.domain.dim();
    const std::size_t m = params.output_dim;
    const std::size_t A = params.attribute_values;
    if (n < 1 || m < 1) throw SpecError("fairness: empty domain or output");
    if (A < 2) throw SpecError("fairness: attribute cardinality A must be at least 2");

    GraphBuilder ib;
    NodeId w = ib.input(n);
    Matrix zero_first = Matrix::identity(n);
    zero_first.at(0, 0) = 0.0;
    std::vector<NodeId> copies;
    for (std::size_t k = 1; k <= A; ++k) {
        std::vector<double> bias(n, 0.0);
        bias[0] = static_cast<double>(k);
        copies.push_back(ib.affine(w, zero_first, std::move(bias)));
    }
    Graph n_in = ib.build(ib.concat(std::move(copies)));

    DnfFormula f;
    f.dim = A * n + A * m;
    detail::append_same_clauses(f, A * n, A, m, m);

    NNDH spec{SpecKind::dependency_fairness, params, params.domain, std::move(n_in),
              compile_dnf(f), A, n, m};
    spec.check();
    return spec;
}

inline NNDH build_spec(SpecKind kind, const SpecParams& params) {
    switch (kind) {
        case SpecKind::monotonicity: return build_monotonicity(params);
        case SpecKind::robustness_katz: return build_global_robustness_katz(params);
        case SpecKind::robustness_extra_class: return build_global_robustness_extra_class(params);
        case SpecKind::lipschitz: return build_lipschitz(params);
        case SpecKind::dependency_fairness: return build_dependency_fairness(params);
    }
    throw SpecError("unknown spec kind");
}

// ---------------------------------------------------------------------------
// Mathematical output-set membership for a decoded tuple (x^(1..v), y^(1..v)).
// Mirrors each example's defining predicate; used to cross-check composed
// graphs and to explain counterexamples.
// ---------------------------------------------------------------------------
inline bool output_set_holds(const NNDH& spec, const std::vector<Value>& xs,
                             const std::vector<Value>& ys) {
    auto linf = [](const Value& a, const Value& b) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
        return m;
    };
    auto same_class = [&](std::size_t classes) {
        for (std::size_t j1 = 0; j1 < classes; ++j1) {
            bool all = true;
            for (const Value& y : ys) {
                for (std::size_t j2 = 0; j2 < classes; ++j2) all = all && y[j1] >= y[j2];
            }
            if (all) return true;
        }
        return false;
    };

    switch (spec.kind) {
        case SpecKind::monotonicity: {
            const std::size_t j = spec.params.output_index - 1;
            return spec.params.direction == MonotonicityDirection::non_increasing
                       ? ys[0][j] >= ys[1][j]
                       : ys[1][j] >= ys[0][j];
        }
        case SpecKind::robustness_katz:
            return linf(ys[0], ys[1]) <= spec.params.epsilon;
        case SpecKind::robustness_extra_class: {
            const std::size_t m = spec.params.output_dim;  // real classes
            auto nr = [&](const Value& y) {
                for (std::size_t j = 0; j < m; ++j)
                    if (!(y[m] >= y[j])) return false;
                return true;
            };
            return nr(ys[0]) || nr(ys[1]) || same_class(m);
        }
        case SpecKind::lipschitz:
            return spec.params.lipschitz_k * linf(xs[0], xs[1]) - linf(ys[0], ys[1]) >= 0.0;
        case SpecKind::dependency_fairness:
            return same_class(spec.params.output_dim);
    }
    throw SpecError("unknown spec kind");
}

}  // namespace hyperspec
