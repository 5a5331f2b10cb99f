#pragma once

// Branch-and-bound decision procedure for composed problems. A region of W is
// certified when its sink lower bound is non-negative; witnesses are found by
// sampling plus coordinate descent and re-validated by concrete evaluation.
// Regions whose bounds cannot decide are finished by an exact rational
// decision over the unstable activation patterns (simplex per pattern), which
// settles instances whose true minimum is exactly zero; regions too large for
// that are split. Every certified bound is inherited by children, so child
// bounds never regress below the parent's.

#include <chrono>
#include <cmath>
#include <limits>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <thread>
#include <vector>

#include "hyperspec/bounds.hpp"
#include "hyperspec/compose.hpp"
#include "hyperspec/exact.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/simplex.hpp"

namespace hyperspec {

enum class SplitStrategy { longest_edge, bound_guided };
enum class BoundMethod { interval, backward_linear };

struct VerifyConfig {
    double tolerance = 1e-9;
    std::size_t max_regions = 100000;
    std::chrono::milliseconds max_time{120000};
    SplitStrategy split_strategy = SplitStrategy::longest_edge;
    std::size_t falsify_samples = 2000;
    BoundMethod bound_method = BoundMethod::backward_linear;
    unsigned workers = 1;
    std::uint64_t seed = 20240501;

    void check() const {
        if (!(tolerance > 0.0)) throw VerifyError("config: tolerance must be positive");
        if (max_regions < 1 || falsify_samples < 1 || workers < 1 ||
            max_time < std::chrono::milliseconds(1))
            throw VerifyError("config: budgets must be at least 1");
    }
};

struct Counterexample {
    Value witness;               // w in W
    std::vector<Value> inputs;   // decoded x^(k)
    std::vector<Value> outputs;  // decoded y^(k)
    double sat_value = 0.0;
};

struct Verdict {
    enum class Kind { satisfied, violated, unknown };
    Kind kind = Kind::unknown;
    double certified_lower_bound = 0.0;             // satisfied
    std::optional<Counterexample> counterexample;   // violated
    double best_lower_bound = 0.0;                  // unknown
    std::size_t regions_remaining = 0;
    std::size_t regions_processed = 0;
    std::int64_t time_ms = 0;
};

inline const char* verdict_name(Verdict::Kind k) {
    switch (k) {
        case Verdict::Kind::satisfied: return "sat";
        case Verdict::Kind::violated: return "violated";
        case Verdict::Kind::unknown: return "unknown";
    }
    return "?";
}

namespace detail {

inline Counterexample make_counterexample(const ComposedProblem& problem, Value w) {
    DecodedTuple t = decode_tuple(problem, w);
    Counterexample ce;
    ce.witness = std::move(w);
    ce.inputs = std::move(t.inputs);
    ce.outputs = std::move(t.outputs);
    ce.sat_value = t.sat_value;
    return ce;
}

// Coordinate-descent refinement of a candidate witness, clipped to the box.
inline void refine_candidate(const Graph& g, const Hyperrectangle& box, std::vector<double>& pt,
                             double& val) {
    const std::size_t d = box.dim();
    double step_scale = 0.25;
    for (int round = 0; round < 12; ++round) {
        bool improved = false;
        for (std::size_t j = 0; j < d; ++j) {
            const double width = box.width(j);
            if (width == 0.0) continue;
            const double step = step_scale * width;
            for (double dir : {+1.0, -1.0}) {
                double saved = pt[j];
                pt[j] = std::min(box.upper[j], std::max(box.lower[j], saved + dir * step));
                double v = g.evaluate(Value::vector(pt))[0];
                if (v < val) {
                    val = v;
                    improved = true;
                } else {
                    pt[j] = saved;
                }
            }
        }
        if (!improved) step_scale *= 0.5;
        if (step_scale < 1e-12) break;
    }
}

inline std::optional<std::pair<std::vector<double>, double>> sample_search(
    const Graph& g, const Hyperrectangle& box, std::size_t budget, std::mt19937_64& rng,
    double tolerance) {
    const std::size_t d = box.dim();
    std::vector<double> best_pt;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> pt(d);
    for (std::size_t s = 0; s < budget; ++s) {
        for (std::size_t j = 0; j < d; ++j) {
            if (box.lower[j] == box.upper[j]) {
                pt[j] = box.lower[j];
            } else {
                std::uniform_real_distribution<double> dist(box.lower[j], box.upper[j]);
                pt[j] = dist(rng);
            }
        }
        double v = g.evaluate(Value::vector(pt))[0];
        if (v < best_val) {
            best_val = v;
            best_pt = pt;
        }
        if (best_val < -tolerance) return std::make_pair(best_pt, best_val);
    }
    if (best_pt.empty()) return std::nullopt;
    refine_candidate(g, box, best_pt, best_val);
    if (best_val < -tolerance) return std::make_pair(best_pt, best_val);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Exact leaf decision: enumerate activation patterns consistent with the
// region, take the exact minimum of the affine restriction per pattern.
// ---------------------------------------------------------------------------

struct LeafOutcome {
    Rational min_value;
    std::vector<Rational> argmin;
};

struct LeafPattern {
    std::vector<char> bits;
    std::vector<std::size_t> branched;
    double sink_lo = 0.0;      // float range of the sink form over the region
    double sink_margin = 0.0;  // accumulated-float-error allowance
};

class LeafEnumerator {
public:
    LeafEnumerator(const Graph& lg, const UnitIndex& units, const Hyperrectangle& region,
                   std::size_t max_patterns)
        : lg_(lg), units_(units), region_(region), max_patterns_(max_patterns) {
        wdim_ = lg.input_dim();
        forms_.resize(lg.node_count());
        bits_.assign(units.count, 0);
        box_scale_ = 1.0;
        for (std::size_t j = 0; j < wdim_; ++j)
            box_scale_ = std::max({box_scale_, std::fabs(region.lower[j]),
                                   std::fabs(region.upper[j])});
        lo_.assign(region.lower.data.begin(), region.lower.data.end());
        hi_.assign(region.upper.data.begin(), region.upper.data.end());
    }

    // Returns nullopt when the enumeration exceeded the pattern budget.
    std::optional<std::vector<LeafPattern>> run() {
        step(0);
        if (overflow_) return std::nullopt;
        return std::move(patterns_);
    }

private:
    void step(std::size_t ti) {
        if (overflow_) return;
        const std::vector<NodeId>& topo = lg_.topological_order();
        if (ti == topo.size()) {
            LeafPattern pat{bits_, branched_, 0.0, 0.0};
            const double* f = &forms_[lg_.sink_id()][0];
            double lo, hi, scale;
            form_range(f, lo, hi, scale);
            pat.sink_lo = lo;
            pat.sink_margin = 1e-6 * std::max(1.0, scale * box_scale_);
            patterns_.push_back(std::move(pat));
            if (patterns_.size() > max_patterns_) overflow_ = true;
            return;
        }
        const NodeId id = topo[ti];
        const Node& n = lg_.node(id);
        if (std::holds_alternative<ReluKind>(n.kind)) {
            forms_[id].assign(lg_.elems(id) * (wdim_ + 1), 0.0);
            relu_elem(ti, id, 0);
            return;
        }
        compute_linear(id);
        step(ti + 1);
    }

    // Range of a stored affine form over the current (refined) box.
    void form_range(const double* f, double& lo, double& hi, double& scale) const {
        lo = hi = f[wdim_];
        scale = std::fabs(f[wdim_]);
        for (std::size_t j = 0; j < wdim_; ++j) {
            const double c = f[j];
            scale = std::max(scale, std::fabs(c));
            if (c >= 0.0) {
                lo += c * lo_[j];
                hi += c * hi_[j];
            } else {
                lo += c * hi_[j];
                hi += c * lo_[j];
            }
        }
    }

    // One sweep of single-constraint interval propagation for sign*f(w) >= 0.
    // Refined bounds are deliberately slack by eps so float rounding can
    // never cut off feasible points; returns the undo log and sets `empty`
    // when the branch provably has no feasible point.
    std::vector<std::tuple<std::size_t, double, double>> refine_box(const double* f, double sign,
                                                                    bool& empty) {
        std::vector<std::tuple<std::size_t, double, double>> undo;
        empty = false;
        double total_hi = sign * f[wdim_];
        for (std::size_t j = 0; j < wdim_; ++j) {
            const double c = sign * f[j];
            total_hi += c * (c >= 0.0 ? hi_[j] : lo_[j]);
        }
        for (std::size_t j = 0; j < wdim_; ++j) {
            const double c = sign * f[j];
            if (c == 0.0) continue;
            const double term_hi = c * (c >= 0.0 ? hi_[j] : lo_[j]);
            const double rest = total_hi - term_hi;  // max of the other terms
            // c * w_j >= -rest on the feasible set.
            const double bound = -rest / c;
            const double eps = 1e-9 * (1.0 + std::fabs(bound)) + 1e-12;
            if (c > 0.0 && bound - eps > lo_[j]) {
                undo.emplace_back(j, lo_[j], hi_[j]);
                lo_[j] = bound - eps;
            } else if (c < 0.0 && bound + eps < hi_[j]) {
                undo.emplace_back(j, lo_[j], hi_[j]);
                hi_[j] = bound + eps;
            }
            if (lo_[j] > hi_[j]) {
                empty = true;
                return undo;
            }
        }
        return undo;
    }

    void unrefine(const std::vector<std::tuple<std::size_t, double, double>>& undo) {
        for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
            lo_[std::get<0>(*it)] = std::get<1>(*it);
            hi_[std::get<0>(*it)] = std::get<2>(*it);
        }
    }

    void relu_elem(std::size_t ti, NodeId id, std::size_t e) {
        if (overflow_) return;
        if (e == lg_.elems(id)) {
            step(ti + 1);
            return;
        }
        const NodeId pre = lg_.node(id).preds[0];
        const double* f = &forms_[pre][e * (wdim_ + 1)];
        double lo, hi, scale;
        form_range(f, lo, hi, scale);
        // Margin dominating accumulated float error; forcing below it is real.
        const double margin = 1e-7 * std::max(1.0, scale * box_scale_);
        const std::size_t unit = units_.of(id, e);
        double* out = &forms_[id][e * (wdim_ + 1)];
        if (lo > margin) {
            bits_[unit] = 1;
            std::copy(f, f + wdim_ + 1, out);
            relu_elem(ti, id, e + 1);
        } else if (hi < -margin) {
            bits_[unit] = 0;
            std::fill(out, out + wdim_ + 1, 0.0);
            relu_elem(ti, id, e + 1);
        } else {
            branched_.push_back(unit);
            bits_[unit] = 1;
            std::copy(f, f + wdim_ + 1, out);
            {
                bool empty = false;
                auto undo = refine_box(f, +1.0, empty);
                if (!empty) relu_elem(ti, id, e + 1);
                unrefine(undo);
            }
            if (!overflow_) {
                bits_[unit] = 0;
                std::fill(out, out + wdim_ + 1, 0.0);
                bool empty = false;
                auto undo = refine_box(f, -1.0, empty);
                if (!empty) relu_elem(ti, id, e + 1);
                unrefine(undo);
            }
            branched_.pop_back();
        }
    }

    void compute_linear(NodeId id) {
        const Node& n = lg_.node(id);
        const std::size_t stride = wdim_ + 1;
        std::vector<double>& out = forms_[id];
        out.assign(lg_.elems(id) * stride, 0.0);
        if (std::holds_alternative<InputKind>(n.kind)) {
            for (std::size_t e = 0; e < lg_.elems(id); ++e) out[e * stride + e] = 1.0;
        } else if (const auto* p = std::get_if<ParameterKind>(&n.kind)) {
            for (std::size_t e = 0; e < lg_.elems(id); ++e)
                out[e * stride + wdim_] = p->value.data[e];
        } else if (const auto* a = std::get_if<AffineKind>(&n.kind)) {
            const std::vector<double>& x = forms_[n.preds[0]];
            for (std::size_t r = 0; r < a->weight.rows; ++r) {
                double* o = &out[r * stride];
                o[wdim_] = a->bias[r];
                const double* wrow = &a->weight.a[r * a->weight.cols];
                for (std::size_t c = 0; c < a->weight.cols; ++c) {
                    const double wv = wrow[c];
                    if (wv == 0.0) continue;
                    const double* xc = &x[c * stride];
                    for (std::size_t j = 0; j <= wdim_; ++j) o[j] += wv * xc[j];
                }
            }
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            const std::vector<double>& a0 = forms_[n.preds[0]];
            const std::vector<double>& a1 = forms_[n.preds[1]];
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a0[i] + a1[i];
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::size_t at = 0;
            for (NodeId p : n.preds) {
                const std::vector<double>& x = forms_[p];
                std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(at));
                at += x.size();
            }
        } else {
            throw VerifyError("leaf enumeration: unexpected kind in lowered graph");
        }
    }

    const Graph& lg_;
    const UnitIndex& units_;
    const Hyperrectangle& region_;
    std::size_t max_patterns_;
    std::size_t wdim_ = 0;
    double box_scale_ = 1.0;
    std::vector<double> lo_, hi_;  // branch-refined copy of the region box
    std::vector<std::vector<double>> forms_;
    std::vector<char> bits_;
    std::vector<std::size_t> branched_;
    std::vector<LeafPattern> patterns_;
    bool overflow_ = false;
};

inline std::optional<LeafOutcome> exact_leaf_decide(const LoweredGraph& lowered,
                                                    const RationalGraphCache& cache,
                                                    const UnitIndex& units,
                                                    const Hyperrectangle& region,
                                                    std::size_t max_patterns) {
    const Graph& lg = lowered.graph;
    LeafEnumerator enumr(lg, units, region, max_patterns);
    auto patterns = enumr.run();
    if (!patterns) return std::nullopt;

    RationalBox box = RationalBox::from(region);
    std::optional<LeafOutcome> best;
    auto consider = [&](Rational value, std::vector<Rational> point) {
        if (!best || value < best->min_value)
            best = LeafOutcome{std::move(value), std::move(point)};
    };
    const Rational clearly_negative = Rational::from_double(-1e-8);
    for (const LeafPattern& pat : *patterns) {
        // Patterns whose float sink range is safely positive cannot host a
        // violation; their range low (minus the error margin) is a sound
        // contribution to the region bound and the exact work is skipped.
        if (pat.sink_lo > pat.sink_margin) {
            consider(Rational::from_double(pat.sink_lo - pat.sink_margin), {});
            continue;
        }
        std::vector<LinearConstraint> rows;
        rows.reserve(pat.branched.size());
        for (std::size_t unit : pat.branched) {
            const PwlUnit& u = lowered.units[unit];
            RationalAffine pre = backward_affine_form(lg, cache, units, pat.bits,
                                                      lg.node(u.node).preds[0], u.elem);
            LinearConstraint c;
            if (pat.bits[unit]) {  // pre >= 0  ->  -pre <= 0
                c.coeff.reserve(pre.coeff.size());
                for (const Rational& q : pre.coeff) c.coeff.push_back(-q);
                c.rhs = pre.constant;
            } else {  // pre <= 0
                c.coeff = pre.coeff;
                c.rhs = -pre.constant;
            }
            rows.push_back(std::move(c));
        }

        RationalAffine sink = backward_affine_form(lg, cache, units, pat.bits, lg.sink_id(), 0);
        LpResult lp = simplex_minimize(rows, box, sink);
        if (lp.status != LpResult::Status::optimal) continue;
        bool stop = lp.value < clearly_negative;
        consider(std::move(lp.value), std::move(lp.point));
        if (stop) break;  // any confirmed-negative witness settles the region
    }
    return best;
}

}  // namespace detail

// Counterexample search: uniform sampling over W followed by coordinate
// descent, every hit re-validated by concrete evaluation.
inline std::optional<Counterexample> falsify(const ComposedProblem& problem, std::size_t budget,
                                             std::uint64_t seed = 20240501,
                                             double tolerance = 1e-9) {
    if (budget < 1) throw VerifyError("falsify: budget must be >= 1");
    std::mt19937_64 rng(seed);
    auto hit = detail::sample_search(problem.graph, problem.property.input_box, budget, rng,
                                     tolerance);
    if (!hit) return std::nullopt;
    Counterexample ce = detail::make_counterexample(problem, Value::vector(hit->first));
    if (!(ce.sat_value < -tolerance)) return std::nullopt;  // failed re-validation
    return ce;
}

namespace detail {

struct Region {
    Hyperrectangle box;
    double lb;  // inherited lower bound (valid for the whole region)
    std::uint64_t seq;
};

struct RegionOrder {
    bool operator()(const Region& a, const Region& b) const {
        if (a.lb != b.lb) return a.lb > b.lb;  // lowest bound first
        return a.seq > b.seq;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const ComposedProblem& problem, const VerifyConfig& config)
        : problem_(problem),
          config_(config),
          lowered_(lower_to_affine_relu(problem.graph)),
          cache_(RationalGraphCache::make(lowered_.graph)),
          units_(UnitIndex::make(lowered_)) {}

    Verdict run() {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict verdict;

        // Global falsification pre-pass.
        std::mt19937_64 rng(config_.seed);
        auto hit = sample_search(lowered_.graph, problem_.property.input_box,
                                 config_.falsify_samples, rng, config_.tolerance);
        if (hit) {
            Counterexample ce = make_counterexample(problem_, Value::vector(hit->first));
            if (ce.sat_value < -config_.tolerance) {
                verdict.kind = Verdict::Kind::violated;
                verdict.counterexample = std::move(ce);
                verdict.time_ms = elapsed_ms(t0);
                return verdict;
            }
        }

        queue_.push(Region{problem_.property.input_box,
                           -std::numeric_limits<double>::infinity(), seq_++});
        in_flight_ = 0;

        if (config_.workers <= 1) {
            worker_loop(t0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned i = 0; i < config_.workers; ++i)
                pool.emplace_back([this, t0] { worker_loop(t0); });
            for (std::thread& th : pool) th.join();
        }

        verdict.regions_processed = processed_;
        verdict.time_ms = elapsed_ms(t0);
        if (found_witness_) {
            verdict.kind = Verdict::Kind::violated;
            verdict.counterexample = std::move(witness_);
            return verdict;
        }
        const bool exhausted = budget_exhausted_;
        if (!exhausted && queue_.empty() && stuck_.empty()) {
            verdict.kind = Verdict::Kind::satisfied;
            verdict.certified_lower_bound =
                certified_min_ == std::numeric_limits<double>::infinity() ? 0.0 : certified_min_;
            return verdict;
        }
        verdict.kind = Verdict::Kind::unknown;
        double best = certified_min_ == std::numeric_limits<double>::infinity()
                          ? std::numeric_limits<double>::infinity()
                          : certified_min_;
        std::size_t remaining = stuck_.size();
        for (double lb : stuck_) best = std::min(best, lb);
        auto q = queue_;  // snapshot; single-threaded at this point
        while (!q.empty()) {
            best = std::min(best, q.top().lb);
            ++remaining;
            q.pop();
        }
        verdict.best_lower_bound =
            best == std::numeric_limits<double>::infinity() ? 0.0 : best;
        verdict.regions_remaining = remaining;
        return verdict;
    }

private:
    static std::int64_t elapsed_ms(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }

    void worker_loop(std::chrono::steady_clock::time_point t0) {
        std::unique_lock<std::mutex> lock(mu_);
        for (;;) {
            cv_.wait(lock, [&] {
                return found_witness_ || budget_exhausted_ || !queue_.empty() || in_flight_ == 0;
            });
            if (found_witness_ || budget_exhausted_) return;
            if (queue_.empty()) {
                if (in_flight_ == 0) {
                    cv_.notify_all();
                    return;
                }
                continue;  // re-enters the wait above
            }
            if (processed_ >= config_.max_regions ||
                elapsed_ms(t0) > config_.max_time.count()) {
                budget_exhausted_ = true;
                cv_.notify_all();
                return;
            }
            Region region = queue_.top();
            queue_.pop();
            ++processed_;
            ++in_flight_;
            lock.unlock();

            ProcessResult res = process(region);

            lock.lock();
            --in_flight_;
            switch (res.action) {
                case Action::certified:
                    certified_min_ = std::min(certified_min_, res.lb);
                    break;
                case Action::violated:
                    if (!found_witness_) {
                        found_witness_ = true;
                        witness_ = std::move(res.witness);
                    }
                    break;
                case Action::split:
                    for (Region& child : res.children) {
                        child.seq = seq_++;
                        queue_.push(std::move(child));
                    }
                    break;
                case Action::stuck:
                    stuck_.push_back(res.lb);
                    break;
            }
            cv_.notify_all();
        }
    }

    enum class Action { certified, violated, split, stuck };
    struct ProcessResult {
        Action action;
        double lb = 0.0;
        Counterexample witness;
        std::vector<Region> children;
    };

    ProcessResult process(const Region& region) {
        ProcessResult res;
        const Graph& lg = lowered_.graph;

        IntervalResult iv = interval_pass(lg, region.box);
        double lb = iv.lo[lg.sink_id()][0];
        double ub = iv.up[lg.sink_id()][0];
        if (config_.bound_method == BoundMethod::backward_linear) {
            lb = std::max(lb, crown_sink_side(lg, region.box, iv, /*want_lower=*/true)[0]);
            ub = std::min(ub, crown_sink_side(lg, region.box, iv, /*want_lower=*/false)[0]);
        }
        lb = std::max(lb, region.lb);  // inherit: child bounds never regress

        if (lb >= 0.0) {
            res.action = Action::certified;
            res.lb = lb;
            return res;
        }

        // Quick local falsification; deterministic per region.
        std::mt19937_64 rng(config_.seed ^ (0x9e3779b97f4a7c15ull * (region.seq + 1)));
        std::size_t local_budget = ub < 0.0 ? 64 : 16;
        auto hit = sample_search(lg, region.box, local_budget, rng, config_.tolerance);
        if (hit) {
            Counterexample ce = make_counterexample(problem_, Value::vector(hit->first));
            if (ce.sat_value < -config_.tolerance) {
                res.action = Action::violated;
                res.witness = std::move(ce);
                return res;
            }
        }

        // Exact decision over the region's activation patterns.
        auto leaf = exact_leaf_decide(lowered_, cache_, units_, region.box, kMaxLeafPatterns);
        if (leaf) {
            if (leaf->min_value.sign() >= 0) {
                res.action = Action::certified;
                res.lb = std::max(region.lb, leaf->min_value.to_double());
                return res;
            }
            std::vector<double> pt(leaf->argmin.size());
            for (std::size_t j = 0; j < pt.size(); ++j) {
                pt[j] = leaf->argmin[j].to_double();
                pt[j] = std::min(region.box.upper[j], std::max(region.box.lower[j], pt[j]));
            }
            Counterexample ce = make_counterexample(problem_, Value::vector(pt));
            if (ce.sat_value < -config_.tolerance) {
                res.action = Action::violated;
                res.witness = std::move(ce);
                return res;
            }
            // Exact minimum is negative but numerically insignificant: the
            // region can neither be certified nor confirmed violated at this
            // tolerance.
            res.action = Action::stuck;
            res.lb = lb;
            return res;
        }

        // Split.
        std::size_t axis = pick_axis(region, iv);
        if (axis == SIZE_MAX) {  // nothing splittable left
            res.action = Action::stuck;
            res.lb = lb;
            return res;
        }
        const double mid =
            0.5 * (region.box.lower[axis] + region.box.upper[axis]);
        Hyperrectangle left = region.box, right = region.box;
        left.upper[axis] = mid;
        right.lower[axis] = mid;
        res.action = Action::split;
        res.children.push_back(Region{std::move(left), lb, 0});
        res.children.push_back(Region{std::move(right), lb, 0});
        return res;
    }

    std::size_t pick_axis(const Region& region, const IntervalResult& iv) {
        (void)iv;
        const Hyperrectangle& box = region.box;
        std::size_t best = SIZE_MAX;
        if (config_.split_strategy == SplitStrategy::longest_edge) {
            double best_w = 0.0;
            for (std::size_t j = 0; j < box.dim(); ++j) {
                if (box.width(j) > best_w) {
                    best_w = box.width(j);
                    best = j;
                }
            }
            return best_w > 1e-14 ? best : SIZE_MAX;
        }
        // bound_guided: try each splittable axis, keep the one whose worse
        // child has the best interval bound.
        const Graph& lg = lowered_.graph;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < box.dim(); ++j) {
            if (box.width(j) <= 1e-14) continue;
            const double mid = 0.5 * (box.lower[j] + box.upper[j]);
            Hyperrectangle left = box, right = box;
            left.upper[j] = mid;
            right.lower[j] = mid;
            double l1, l2;
            if (config_.bound_method == BoundMethod::backward_linear) {
                IntervalResult i1 = interval_pass(lg, left);
                IntervalResult i2 = interval_pass(lg, right);
                l1 = std::max(i1.lo[lg.sink_id()][0],
                              crown_sink_side(lg, left, i1, true)[0]);
                l2 = std::max(i2.lo[lg.sink_id()][0],
                              crown_sink_side(lg, right, i2, true)[0]);
            } else {
                l1 = interval_pass(lg, left).lo[lg.sink_id()][0];
                l2 = interval_pass(lg, right).lo[lg.sink_id()][0];
            }
            double score = std::min(l1, l2);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }

    static constexpr std::size_t kMaxLeafPatterns = 768;

    const ComposedProblem& problem_;
    VerifyConfig config_;
    LoweredGraph lowered_;
    RationalGraphCache cache_;
    UnitIndex units_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::priority_queue<Region, std::vector<Region>, RegionOrder> queue_;
    std::vector<double> stuck_;
    std::uint64_t seq_ = 0;
    std::size_t processed_ = 0;
    std::size_t in_flight_ = 0;
    double certified_min_ = std::numeric_limits<double>::infinity();
    bool found_witness_ = false;
    bool budget_exhausted_ = false;
    Counterexample witness_;
};

}  // namespace detail

inline Verdict verify(const ComposedProblem& problem, const VerifyConfig& config = {}) {
    config.check();
    if (!problem.graph.shapes_known() || problem.graph.output_dim() != 1)
        throw VerifyError("verify: composed graph must produce a scalar");
    if (problem.property.input_box.dim() != problem.graph.input_dim())
        throw VerifyError("verify: property box does not match graph input");
    detail::BranchAndBound bb(problem, config);
    return bb.run();
}

}  // namespace hyperspec
