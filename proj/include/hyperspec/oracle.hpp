#pragma once

// Exact reference decision procedure for small composed problems: enumerate
// activation patterns of the lowered graph by depth-first search with exact
// interval pruning, restrict the graph to an affine function per pattern, and
// decide feasibility and the exact minimum over each pattern's polytope by
// Fourier-Motzkin elimination in rational arithmetic. Sound and complete, but
// exponential in the unit count; refuses instances above the cap.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hyperspec/compose.hpp"
#include "hyperspec/exact.hpp"
#include "hyperspec/fourier_motzkin.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/verify.hpp"

namespace hyperspec {

namespace detail {

class PatternOracle {
public:
    PatternOracle(const LoweredGraph& lowered, const RationalBox& box)
        : lowered_(lowered),
          lg_(lowered.graph),
          box_(box),
          cache_(RationalGraphCache::make(lowered.graph)),
          units_(UnitIndex::make(lowered)) {
        forms_.resize(lg_.node_count());
    }

    // Single-constraint interval propagation for sign*f(w) >= 0, exact.
    // Every refined bound is implied by {current box, constraint}, so the
    // feasible set is untouched; an empty refinement proves infeasibility.
    std::vector<std::tuple<std::size_t, Rational, Rational>> refine_box(const RationalAffine& f,
                                                                        int sign, bool& empty) {
        std::vector<std::tuple<std::size_t, Rational, Rational>> undo;
        empty = false;
        auto signed_coeff = [&](std::size_t j) {
            return sign > 0 ? f.coeff[j] : -f.coeff[j];
        };
        Rational total_hi = sign > 0 ? f.constant : -f.constant;
        for (std::size_t j = 0; j < box_.dim(); ++j) {
            const Rational c = signed_coeff(j);
            if (c.is_zero()) continue;
            total_hi += c * (c.sign() > 0 ? box_.hi[j] : box_.lo[j]);
        }
        for (std::size_t j = 0; j < box_.dim(); ++j) {
            const Rational c = signed_coeff(j);
            if (c.is_zero()) continue;
            const Rational term_hi = c * (c.sign() > 0 ? box_.hi[j] : box_.lo[j]);
            const Rational rest = total_hi - term_hi;
            const Rational bound = -rest / c;  // c*w_j >= -rest
            if (c.sign() > 0 && bound > box_.lo[j]) {
                undo.emplace_back(j, box_.lo[j], box_.hi[j]);
                box_.lo[j] = bound;
            } else if (c.sign() < 0 && bound < box_.hi[j]) {
                undo.emplace_back(j, box_.lo[j], box_.hi[j]);
                box_.hi[j] = bound;
            }
            if (box_.lo[j] > box_.hi[j]) {
                empty = true;
                return undo;
            }
        }
        return undo;
    }

    void unrefine(const std::vector<std::tuple<std::size_t, Rational, Rational>>& undo) {
        for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
            box_.lo[std::get<0>(*it)] = std::get<1>(*it);
            box_.hi[std::get<0>(*it)] = std::get<2>(*it);
        }
    }

    struct Outcome {
        Rational min_value;
        std::vector<Rational> witness;
        std::size_t feasible_patterns = 0;
    };

    Outcome run() {
        step(0);
        if (best_ && best_->min_value.sign() < 0) {
            return Outcome{std::move(best_->min_value), std::move(best_->witness), visited_};
        }
        if (!cert_lb_) throw VerifyError("oracle: no activation pattern covers the box");
        return Outcome{std::move(*cert_lb_), {}, visited_};
    }

private:
    struct Best {
        Rational min_value;
        std::vector<Rational> witness;
    };

    void step(std::size_t ti) {
        if (stop_) return;
        const std::vector<NodeId>& topo = lg_.topological_order();
        if (ti == topo.size()) {
            finish_pattern();
            return;
        }
        const NodeId id = topo[ti];
        const Node& n = lg_.node(id);
        if (std::holds_alternative<ReluKind>(n.kind)) {
            forms_[id].assign(lg_.elems(id), RationalAffine(lg_.input_dim()));
            relu_elem(ti, id, 0);
            return;
        }
        compute_linear(id);
        step(ti + 1);
    }

    void relu_elem(std::size_t ti, NodeId id, std::size_t e) {
        if (stop_) return;
        if (e == lg_.elems(id)) {
            step(ti + 1);
            return;
        }
        const RationalAffine& pre = forms_[lg_.node(id).preds[0]][e];
        auto [lo, hi] = affine_range(pre, box_);
        if (lo.sign() >= 0) {
            forms_[id][e] = pre;
            relu_elem(ti, id, e + 1);
        } else if (hi.sign() <= 0) {
            forms_[id][e] = RationalAffine(lg_.input_dim());
            relu_elem(ti, id, e + 1);
        } else {
            // Active branch: pre >= 0, i.e. -pre <= 0.
            {
                LinearConstraint on;
                on.coeff.reserve(pre.coeff.size());
                for (const Rational& q : pre.coeff) on.coeff.push_back(-q);
                on.rhs = pre.constant;
                constraints_.push_back(std::move(on));
                bool empty = false;
                auto undo = refine_box(pre, +1, empty);
                forms_[id][e] = pre;
                if (!empty) relu_elem(ti, id, e + 1);
                unrefine(undo);
                constraints_.pop_back();
            }
            if (stop_) return;
            // Inactive branch: pre <= 0.
            {
                LinearConstraint off;
                off.coeff = pre.coeff;
                off.rhs = -pre.constant;
                constraints_.push_back(std::move(off));
                bool empty = false;
                auto undo = refine_box(pre, -1, empty);
                forms_[id][e] = RationalAffine(lg_.input_dim());
                if (!empty) relu_elem(ti, id, e + 1);
                unrefine(undo);
                constraints_.pop_back();
            }
        }
    }

    void compute_linear(NodeId id) {
        const Node& n = lg_.node(id);
        const std::size_t w = lg_.input_dim();
        std::vector<RationalAffine>& out = forms_[id];
        out.assign(lg_.elems(id), RationalAffine(w));
        if (std::holds_alternative<InputKind>(n.kind)) {
            for (std::size_t e = 0; e < out.size(); ++e) out[e].coeff[e] = Rational(1);
        } else if (std::holds_alternative<ParameterKind>(n.kind)) {
            for (std::size_t e = 0; e < out.size(); ++e) out[e].constant = cache_.constants[id][e];
        } else if (const auto* a = std::get_if<AffineKind>(&n.kind)) {
            const std::vector<RationalAffine>& x = forms_[n.preds[0]];
            const std::size_t cols = a->weight.cols;
            for (std::size_t r = 0; r < out.size(); ++r) {
                RationalAffine acc(w);
                acc.constant = cache_.affine_b[id][r];
                for (std::size_t c = 0; c < cols; ++c) {
                    const Rational& wv = cache_.affine_w[id][r * cols + c];
                    if (wv.is_zero()) continue;
                    acc.constant += wv * x[c].constant;
                    for (std::size_t j = 0; j < w; ++j)
                        if (!x[c].coeff[j].is_zero()) acc.coeff[j] += wv * x[c].coeff[j];
                }
                out[r] = std::move(acc);
            }
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            const std::vector<RationalAffine>& a0 = forms_[n.preds[0]];
            const std::vector<RationalAffine>& a1 = forms_[n.preds[1]];
            for (std::size_t e = 0; e < out.size(); ++e) {
                out[e].constant = a0[e].constant + a1[e].constant;
                for (std::size_t j = 0; j < w; ++j)
                    out[e].coeff[j] = a0[e].coeff[j] + a1[e].coeff[j];
            }
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::size_t at = 0;
            for (NodeId p : n.preds) {
                for (std::size_t e = 0; e < lg_.elems(p); ++e) out[at + e] = forms_[p][e];
                at += lg_.elems(p);
            }
        } else {
            throw VerifyError("oracle: unexpected kind in lowered graph");
        }
    }

    void finish_pattern() {
        const RationalAffine& sink = forms_[lg_.sink_id()][0];
        ++visited_;
        // The affine box-range lower bound is a sound per-pattern bound; when
        // it is already non-negative the pattern cannot host a violation and
        // the elimination can be skipped entirely.
        auto [rlo, rhi] = affine_range(sink, box_);
        if (rlo.sign() >= 0) {
            if (!cert_lb_ || rlo < *cert_lb_) cert_lb_ = rlo;
            return;
        }
        FmResult fm = fm_minimize(constraints_, box_, sink);
        if (!fm.feasible) return;
        ++feasible_;
        if (!cert_lb_ || fm.min_value < *cert_lb_) cert_lb_ = fm.min_value;
        if (!best_ || fm.min_value < best_->min_value) {
            best_ = Best{fm.min_value, fm.witness};
        }
        if (best_->min_value.sign() < 0) stop_ = true;  // violated; verdict settled
    }

    const LoweredGraph& lowered_;
    const Graph& lg_;
    RationalBox box_;  // refined along the DFS; restored on backtrack
    RationalGraphCache cache_;
    UnitIndex units_;
    std::vector<std::vector<RationalAffine>> forms_;
    std::vector<LinearConstraint> constraints_;
    std::optional<Best> best_;
    std::optional<Rational> cert_lb_;  // min over per-pattern sound bounds
    std::size_t feasible_ = 0;
    std::size_t visited_ = 0;
    bool stop_ = false;
};

}  // namespace detail

inline Verdict oracle_verify(const ComposedProblem& problem, std::size_t unit_cap = 20) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!problem.graph.shapes_known() || problem.graph.output_dim() != 1)
        throw VerifyError("oracle_verify: composed graph must produce a scalar");
    LoweredGraph lowered = lower_to_affine_relu(problem.graph);
    if (lowered.units.size() > unit_cap)
        throw OracleCapError("oracle_verify: " + std::to_string(lowered.units.size()) +
                             " piecewise-linear units exceed the cap of " +
                             std::to_string(unit_cap) + "; use verify instead");

    RationalBox box = RationalBox::from(problem.property.input_box);
    detail::PatternOracle oracle(lowered, box);
    auto outcome = oracle.run();

    Verdict v;
    v.regions_processed = outcome.feasible_patterns;
    v.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    if (outcome.min_value.sign() >= 0) {
        v.kind = Verdict::Kind::satisfied;
        v.certified_lower_bound = outcome.min_value.to_double();
        return v;
    }
    std::vector<double> pt(outcome.witness.size());
    for (std::size_t j = 0; j < pt.size(); ++j) {
        pt[j] = outcome.witness[j].to_double();
        pt[j] = std::min(problem.property.input_box.upper[j],
                         std::max(problem.property.input_box.lower[j], pt[j]));
    }
    v.kind = Verdict::Kind::violated;
    v.counterexample = detail::make_counterexample(problem, Value::vector(std::move(pt)));
    return v;
}

}  // namespace hyperspec
