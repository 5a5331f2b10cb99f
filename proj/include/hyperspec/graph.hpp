#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hyperspec/errors.hpp"
#include "hyperspec/tensor.hpp"

namespace hyperspec {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// ---------------------------------------------------------------------------
// Node kinds. The set is closed: every kind has a total interval transformer
// and lowers to affine/ReLU form, which keeps bound propagation and export
// defined for every constructible graph.
// ---------------------------------------------------------------------------

struct InputKind {
    TensorShape shape;
};
struct ParameterKind {
    Value value;
};
struct AffineKind {
    Matrix weight;
    std::vector<double> bias;  // length == weight.rows
};
struct ReluKind {};
struct MaxPairwiseKind {};  // elementwise max of two predecessors
struct MinPairwiseKind {};  // elementwise min of two predecessors
struct AddKind {};
struct SubtractKind {};  // pred0 - pred1
struct NegateKind {};
struct ScaleConstKind {
    double factor = 1.0;
};
struct ConcatKind {
    std::size_t axis = 0;  // flat semantics; axis kept for serialization
};
struct SliceKind {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open [begin, end)
};
struct SelectIndicesKind {
    std::vector<std::size_t> indices;
};
struct ClampConstKind {
    std::vector<double> lower;
    std::vector<double> upper;
};
struct ReduceMaxKind {};  // vector -> scalar max

using NodeKind =
    std::variant<InputKind, ParameterKind, AffineKind, ReluKind, MaxPairwiseKind, MinPairwiseKind,
                 AddKind, SubtractKind, NegateKind, ScaleConstKind, ConcatKind, SliceKind,
                 SelectIndicesKind, ClampConstKind, ReduceMaxKind>;

struct Node {
    NodeKind kind;
    std::vector<NodeId> preds;  // ordered
};

inline const char* kind_name(const NodeKind& k) {
    struct Visitor {
        const char* operator()(const InputKind&) const { return "input"; }
        const char* operator()(const ParameterKind&) const { return "parameter"; }
        const char* operator()(const AffineKind&) const { return "affine"; }
        const char* operator()(const ReluKind&) const { return "relu"; }
        const char* operator()(const MaxPairwiseKind&) const { return "max_pairwise"; }
        const char* operator()(const MinPairwiseKind&) const { return "min_pairwise"; }
        const char* operator()(const AddKind&) const { return "add"; }
        const char* operator()(const SubtractKind&) const { return "subtract"; }
        const char* operator()(const NegateKind&) const { return "negate"; }
        const char* operator()(const ScaleConstKind&) const { return "scale_const"; }
        const char* operator()(const ConcatKind&) const { return "concat"; }
        const char* operator()(const SliceKind&) const { return "slice"; }
        const char* operator()(const SelectIndicesKind&) const { return "select_indices"; }
        const char* operator()(const ClampConstKind&) const { return "clamp_const"; }
        const char* operator()(const ReduceMaxKind&) const { return "reduce_max"; }
    };
    return std::visit(Visitor{}, k);
}

// Expected predecessor count, or nullopt for variadic (Concat).
inline std::optional<std::size_t> kind_arity(const NodeKind& k) {
    if (std::holds_alternative<InputKind>(k) || std::holds_alternative<ParameterKind>(k)) return 0;
    if (std::holds_alternative<MaxPairwiseKind>(k) || std::holds_alternative<MinPairwiseKind>(k) ||
        std::holds_alternative<AddKind>(k) || std::holds_alternative<SubtractKind>(k))
        return 2;
    if (std::holds_alternative<ConcatKind>(k)) return std::nullopt;
    return 1;
}

struct Violation {
    std::string code;  // "cycle", "shape_mismatch", "arity_mismatch", ...
    NodeId node = kNoNode;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

// Output element count of a node given predecessor element counts.
// Returns nullopt (and fills err) when shapes do not unify.
inline std::optional<std::size_t> infer_elems(const NodeKind& kind,
                                              const std::vector<std::size_t>& pred_elems,
                                              std::string* err) {
    auto fail_fn = [&](const std::string& m) -> std::optional<std::size_t> {
        if (err) *err = m;
        return std::nullopt;
    };
    struct V {
        const std::vector<std::size_t>& p;
        decltype(fail_fn)& fail;
        std::optional<std::size_t> operator()(const InputKind& k) {
            if (!k.shape.valid()) return fail("input shape invalid");
            return k.shape.element_count();
        }
        std::optional<std::size_t> operator()(const ParameterKind& k) {
            if (!k.value.shape.valid()) return fail("parameter shape invalid");
            if (k.value.data.size() != k.value.shape.element_count())
                return fail("parameter values do not conform to declared shape");
            return k.value.shape.element_count();
        }
        std::optional<std::size_t> operator()(const AffineKind& k) {
            if (k.weight.rows == 0 || k.weight.cols == 0) return fail("affine weight empty");
            if (k.bias.size() != k.weight.rows)
                return fail("affine bias length does not match weight rows");
            if (p[0] != k.weight.cols)
                return fail("affine weight has " + std::to_string(k.weight.cols) +
                            " columns but predecessor has " + std::to_string(p[0]) + " elements");
            return k.weight.rows;
        }
        std::optional<std::size_t> operator()(const ReluKind&) { return p[0]; }
        std::optional<std::size_t> operator()(const MaxPairwiseKind&) {
            if (p[0] != p[1]) return fail("max_pairwise predecessors differ in size");
            return p[0];
        }
        std::optional<std::size_t> operator()(const MinPairwiseKind&) {
            if (p[0] != p[1]) return fail("min_pairwise predecessors differ in size");
            return p[0];
        }
        std::optional<std::size_t> operator()(const AddKind&) {
            if (p[0] != p[1]) return fail("add predecessors differ in size");
            return p[0];
        }
        std::optional<std::size_t> operator()(const SubtractKind&) {
            if (p[0] != p[1]) return fail("subtract predecessors differ in size");
            return p[0];
        }
        std::optional<std::size_t> operator()(const NegateKind&) { return p[0]; }
        std::optional<std::size_t> operator()(const ScaleConstKind&) { return p[0]; }
        std::optional<std::size_t> operator()(const ConcatKind&) {
            std::size_t n = 0;
            for (std::size_t e : p) n += e;
            if (n == 0) return fail("concat of zero elements");
            return n;
        }
        std::optional<std::size_t> operator()(const SliceKind& k) {
            if (k.begin >= k.end) return fail("slice range empty");
            if (k.end > p[0]) return fail("slice end exceeds predecessor size");
            return k.end - k.begin;
        }
        std::optional<std::size_t> operator()(const SelectIndicesKind& k) {
            if (k.indices.empty()) return fail("select_indices with no indices");
            for (std::size_t i : k.indices) {
                if (i >= p[0]) return fail("select index " + std::to_string(i) + " out of range");
            }
            return k.indices.size();
        }
        std::optional<std::size_t> operator()(const ClampConstKind& k) {
            if (k.lower.size() != p[0] || k.upper.size() != p[0])
                return fail("clamp bounds length does not match predecessor size");
            for (std::size_t i = 0; i < p[0]; ++i) {
                if (!(k.lower[i] <= k.upper[i])) return fail("clamp lower exceeds upper");
            }
            return p[0];
        }
        std::optional<std::size_t> operator()(const ReduceMaxKind&) { return std::size_t{1}; }
    };
    return std::visit(V{pred_elems, fail_fn}, kind);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graph: immutable DAG with one Input source, optional Parameter sources and
// a single sink. Construct through GraphBuilder (checked) or from raw node
// lists (unchecked, e.g. deserialization) followed by validate().
// ---------------------------------------------------------------------------
class Graph {
public:
    Graph() = default;

    // Unchecked construction from raw parts. Shape/topology caches are filled
    // best-effort; call validate() to obtain a full report.
    Graph(std::vector<Node> nodes, NodeId input, NodeId sink)
        : nodes_(std::move(nodes)), input_(input), sink_(sink) {
        rebuild_caches();
    }

    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_[id]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    NodeId input_id() const { return input_; }
    NodeId sink_id() const { return sink_; }

    bool shapes_known() const { return shapes_ok_; }

    std::size_t elems(NodeId id) const {
        if (!shapes_ok_) throw EvalError("graph shapes are not resolvable");
        return elems_[id];
    }

    std::size_t input_dim() const { return elems(input_); }
    std::size_t output_dim() const { return elems(sink_); }

    // Topological order over all nodes (deterministic: smallest id first).
    const std::vector<NodeId>& topological_order() const { return topo_; }
    bool is_acyclic() const { return topo_.size() == nodes_.size(); }

    // Deterministic forward evaluation of the sink.
    Value evaluate(const Value& input) const {
        std::vector<std::vector<double>> vals;
        evaluate_into(input, vals, /*only_sink_ancestors=*/true);
        return Value(TensorShape::vector(elems_[sink_]), std::move(vals[sink_]));
    }

    // Evaluate every node (used for bound checks and witness decoding).
    std::vector<Value> evaluate_all(const Value& input) const {
        std::vector<std::vector<double>> vals;
        evaluate_into(input, vals, /*only_sink_ancestors=*/false);
        std::vector<Value> out;
        out.reserve(nodes_.size());
        for (NodeId id = 0; id < nodes_.size(); ++id)
            out.push_back(Value(TensorShape::vector(elems_[id]), std::move(vals[id])));
        return out;
    }

    // Evaluate following a caller-provided topological order (order must be a
    // valid topological order covering at least the sink's ancestors).
    Value evaluate_with_order(const Value& input, const std::vector<NodeId>& order) const {
        check_eval_pre(input);
        std::vector<std::vector<double>> vals(nodes_.size());
        for (NodeId id : order) eval_node(id, input, vals);
        if (vals[sink_].empty() && elems_[sink_] != 0)
            throw EvalError("evaluation order does not cover the sink");
        return Value(TensorShape::vector(elems_[sink_]), std::move(vals[sink_]));
    }

    ValidationReport validate() const;

private:
    friend class GraphBuilder;

    void check_eval_pre(const Value& input) const {
        if (!shapes_ok_ || !is_acyclic())
            throw EvalError("graph is not well-formed; run validate() for details");
        if (input_ == kNoNode) throw EvalError("graph has no input node");
        if (input.size() != elems_[input_])
            throw ShapeError("evaluate: input has " + std::to_string(input.size()) +
                             " elements, graph expects " + std::to_string(elems_[input_]));
    }

    void evaluate_into(const Value& input, std::vector<std::vector<double>>& vals,
                       bool only_sink_ancestors) const {
        check_eval_pre(input);
        vals.assign(nodes_.size(), {});
        const std::vector<NodeId>& order = only_sink_ancestors ? eval_order_ : topo_;
        for (NodeId id : order) eval_node(id, input, vals);
    }

    void eval_node(NodeId id, const Value& input, std::vector<std::vector<double>>& vals) const;

    void rebuild_caches();

    std::vector<Node> nodes_;
    NodeId input_ = kNoNode;
    NodeId sink_ = kNoNode;

    // Caches (derived, immutable after construction).
    std::vector<NodeId> topo_;        // all nodes in topological order
    std::vector<NodeId> eval_order_;  // sink ancestors only, topological
    std::vector<std::size_t> elems_;  // per-node element count
    bool shapes_ok_ = false;
};

inline void Graph::eval_node(NodeId id, const Value& input,
                             std::vector<std::vector<double>>& vals) const {
    const Node& n = nodes_[id];
    std::vector<double>& out = vals[id];
    out.assign(elems_[id], 0.0);

    struct V {
        const Graph& g;
        const Node& n;
        const Value& input;
        std::vector<std::vector<double>>& vals;
        std::vector<double>& out;

        const std::vector<double>& pred(std::size_t i) const { return vals[n.preds[i]]; }

        void operator()(const InputKind&) { out = input.data; }
        void operator()(const ParameterKind& k) { out = k.value.data; }
        void operator()(const AffineKind& k) {
            const std::vector<double>& x = pred(0);
            for (std::size_t r = 0; r < k.weight.rows; ++r) {
                double acc = k.bias[r];
                const double* wrow = &k.weight.a[r * k.weight.cols];
                for (std::size_t c = 0; c < k.weight.cols; ++c) acc += wrow[c] * x[c];
                out[r] = acc;
            }
        }
        void operator()(const ReluKind&) {
            const std::vector<double>& x = pred(0);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
        }
        void operator()(const MaxPairwiseKind&) {
            const std::vector<double>&a = pred(0), &b = pred(1);
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
        }
        void operator()(const MinPairwiseKind&) {
            const std::vector<double>&a = pred(0), &b = pred(1);
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
        }
        void operator()(const AddKind&) {
            const std::vector<double>&a = pred(0), &b = pred(1);
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
        }
        void operator()(const SubtractKind&) {
            const std::vector<double>&a = pred(0), &b = pred(1);
            for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
        }
        void operator()(const NegateKind&) {
            const std::vector<double>& x = pred(0);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
        }
        void operator()(const ScaleConstKind& k) {
            const std::vector<double>& x = pred(0);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = k.factor * x[i];
        }
        void operator()(const ConcatKind&) {
            std::size_t at = 0;
            for (std::size_t p = 0; p < n.preds.size(); ++p) {
                const std::vector<double>& x = pred(p);
                std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(at));
                at += x.size();
            }
        }
        void operator()(const SliceKind& k) {
            const std::vector<double>& x = pred(0);
            std::copy(x.begin() + static_cast<std::ptrdiff_t>(k.begin),
                      x.begin() + static_cast<std::ptrdiff_t>(k.end), out.begin());
        }
        void operator()(const SelectIndicesKind& k) {
            const std::vector<double>& x = pred(0);
            for (std::size_t i = 0; i < k.indices.size(); ++i) out[i] = x[k.indices[i]];
        }
        void operator()(const ClampConstKind& k) {
            const std::vector<double>& x = pred(0);
            for (std::size_t i = 0; i < x.size(); ++i)
                out[i] = std::min(k.upper[i], std::max(k.lower[i], x[i]));
        }
        void operator()(const ReduceMaxKind&) {
            const std::vector<double>& x = pred(0);
            double m = x[0];
            for (std::size_t i = 1; i < x.size(); ++i) m = std::max(m, x[i]);
            out[0] = m;
        }
    };
    std::visit(V{*this, n, input, vals, out}, n.kind);

    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i]))
            throw EvalError("non-finite value at node " + std::to_string(id) + " (" +
                            kind_name(n.kind) + "), element " + std::to_string(i));
    }
}

inline void Graph::rebuild_caches() {
    const std::size_t n = nodes_.size();
    topo_.clear();
    eval_order_.clear();
    elems_.assign(n, 0);
    shapes_ok_ = false;

    // Kahn's algorithm, smallest-id-first for determinism.
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<NodeId>> succs(n);
    bool preds_in_range = true;
    for (NodeId id = 0; id < n; ++id) {
        for (NodeId p : nodes_[id].preds) {
            if (p >= n) {
                preds_in_range = false;
                continue;
            }
            ++indeg[id];
            succs[p].push_back(id);
        }
    }
    std::vector<NodeId> ready;
    for (NodeId id = 0; id < n; ++id)
        if (indeg[id] == 0) ready.push_back(id);
    std::make_heap(ready.begin(), ready.end(), std::greater<>{});
    while (!ready.empty()) {
        std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
        NodeId id = ready.back();
        ready.pop_back();
        topo_.push_back(id);
        for (NodeId s : succs[id]) {
            if (--indeg[s] == 0) {
                ready.push_back(s);
                std::push_heap(ready.begin(), ready.end(), std::greater<>{});
            }
        }
    }

    if (!preds_in_range || topo_.size() != n) return;  // malformed; validate() reports

    // Shape inference along the topological order.
    shapes_ok_ = true;
    for (NodeId id : topo_) {
        const Node& nd = nodes_[id];
        auto arity = kind_arity(nd.kind);
        if (arity && nd.preds.size() != *arity) {
            shapes_ok_ = false;
            break;
        }
        if (!arity && nd.preds.empty()) {
            shapes_ok_ = false;
            break;
        }
        std::vector<std::size_t> pe;
        pe.reserve(nd.preds.size());
        for (NodeId p : nd.preds) pe.push_back(elems_[p]);
        auto e = detail::infer_elems(nd.kind, pe, nullptr);
        if (!e) {
            shapes_ok_ = false;
            break;
        }
        elems_[id] = *e;
    }

    // Evaluation order restricted to sink ancestors.
    if (sink_ < n) {
        std::vector<char> needed(n, 0);
        std::vector<NodeId> stack{sink_};
        needed[sink_] = 1;
        while (!stack.empty()) {
            NodeId id = stack.back();
            stack.pop_back();
            for (NodeId p : nodes_[id].preds) {
                if (p < n && !needed[p]) {
                    needed[p] = 1;
                    stack.push_back(p);
                }
            }
        }
        for (NodeId id : topo_)
            if (needed[id]) eval_order_.push_back(id);
    }
}

inline ValidationReport Graph::validate() const {
    ValidationReport report;
    auto add = [&](const std::string& code, NodeId node, const std::string& msg) {
        report.violations.push_back(Violation{code, node, msg});
    };
    const std::size_t n = nodes_.size();

    if (n == 0) {
        add("empty", kNoNode, "graph has no nodes");
        return report;
    }

    // Predecessor ids must exist.
    for (NodeId id = 0; id < n; ++id) {
        for (NodeId p : nodes_[id].preds) {
            if (p >= n)
                add("bad_pred", id,
                    "node " + std::to_string(id) + " references missing node " + std::to_string(p));
        }
    }

    // Arity.
    for (NodeId id = 0; id < n; ++id) {
        const Node& nd = nodes_[id];
        auto arity = kind_arity(nd.kind);
        if (arity && nd.preds.size() != *arity) {
            add("arity_mismatch", id, std::string(kind_name(nd.kind)) + " node expects " +
                                          std::to_string(*arity) + " predecessors, has " +
                                          std::to_string(nd.preds.size()));
        }
        if (!arity && nd.preds.empty())
            add("arity_mismatch", id, "concat node needs at least one predecessor");
    }

    // Acyclicity.
    if (topo_.size() != n) {
        std::vector<char> in_topo(n, 0);
        for (NodeId id : topo_) in_topo[id] = 1;
        std::string cyc;
        for (NodeId id = 0; id < n; ++id) {
            if (!in_topo[id]) cyc += (cyc.empty() ? "" : ", ") + std::to_string(id);
        }
        add("cycle", kNoNode, "cycle through nodes {" + cyc + "}");
    }

    // Sources and sink.
    std::size_t input_count = 0;
    for (NodeId id = 0; id < n; ++id) {
        if (std::holds_alternative<InputKind>(nodes_[id].kind)) {
            ++input_count;
            if (id != input_)
                add("input_mismatch", id, "input node not designated as the graph input");
        }
    }
    if (input_count != 1)
        add("input_count", input_, "graph must have exactly one input node, found " +
                                       std::to_string(input_count));
    if (input_ >= n)
        add("input_missing", kNoNode, "designated input id out of range");
    else if (!std::holds_alternative<InputKind>(nodes_[input_].kind))
        add("input_kind", input_, "designated input node is not an input kind");

    if (sink_ >= n) {
        add("sink_missing", kNoNode, "designated sink id out of range");
    } else {
        // Every non-sink node must lie on a path to the sink.
        std::vector<char> reach(n, 0);
        reach[sink_] = 1;
        std::vector<NodeId> stack{sink_};
        while (!stack.empty()) {
            NodeId id = stack.back();
            stack.pop_back();
            for (NodeId p : nodes_[id].preds) {
                if (p < n && !reach[p]) {
                    reach[p] = 1;
                    stack.push_back(p);
                }
            }
        }
        for (NodeId id = 0; id < n; ++id) {
            if (!reach[id])
                add("dangling", id, "node " + std::to_string(id) + " has no path to the sink");
        }
    }

    // Shape unification along every edge (only where topology permits).
    if (topo_.size() == n) {
        std::vector<std::size_t> elems(n, 0);
        std::vector<char> known(n, 0);
        for (NodeId id : topo_) {
            const Node& nd = nodes_[id];
            auto arity = kind_arity(nd.kind);
            if ((arity && nd.preds.size() != *arity) || (!arity && nd.preds.empty())) continue;
            bool preds_known = true;
            std::vector<std::size_t> pe;
            for (NodeId p : nd.preds) {
                if (p >= n || !known[p]) {
                    preds_known = false;
                    break;
                }
                pe.push_back(elems[p]);
            }
            if (!preds_known) continue;
            std::string err;
            auto e = detail::infer_elems(nd.kind, pe, &err);
            if (!e) {
                add("shape_mismatch", id, "node " + std::to_string(id) + " (" +
                                              kind_name(nd.kind) + "): " + err);
                continue;
            }
            elems[id] = *e;
            known[id] = 1;
        }
    }

    // Constant payloads must be finite.
    for (NodeId id = 0; id < n; ++id) {
        const Node& nd = nodes_[id];
        bool finite = true;
        if (const auto* p = std::get_if<ParameterKind>(&nd.kind)) {
            finite = p->value.all_finite();
        } else if (const auto* a = std::get_if<AffineKind>(&nd.kind)) {
            for (double x : a->weight.a) finite = finite && std::isfinite(x);
            for (double x : a->bias) finite = finite && std::isfinite(x);
        } else if (const auto* c = std::get_if<ClampConstKind>(&nd.kind)) {
            for (double x : c->lower) finite = finite && std::isfinite(x);
            for (double x : c->upper) finite = finite && std::isfinite(x);
        } else if (const auto* s = std::get_if<ScaleConstKind>(&nd.kind)) {
            finite = std::isfinite(s->factor);
        }
        if (!finite) add("non_finite_const", id, "node carries non-finite constants");
    }

    return report;
}

// ---------------------------------------------------------------------------
// GraphBuilder: checked incremental construction. Shapes are verified as
// nodes are added; build() finalizes with the chosen sink.
// ---------------------------------------------------------------------------
class GraphBuilder {
public:
    NodeId input(TensorShape shape) {
        if (input_ != kNoNode) throw ShapeError("graph already has an input node");
        if (!shape.valid()) throw ShapeError("input shape invalid");
        input_ = add_node(Node{InputKind{std::move(shape)}, {}});
        return input_;
    }
    NodeId input(std::size_t n) { return input(TensorShape::vector(n)); }

    NodeId parameter(Value v) { return add_node(Node{ParameterKind{std::move(v)}, {}}); }

    NodeId affine(NodeId pred, Matrix weight, std::vector<double> bias) {
        return add_node(Node{AffineKind{std::move(weight), std::move(bias)}, {pred}});
    }
    NodeId relu(NodeId pred) { return add_node(Node{ReluKind{}, {pred}}); }
    NodeId max_pairwise(NodeId a, NodeId b) { return add_node(Node{MaxPairwiseKind{}, {a, b}}); }
    NodeId min_pairwise(NodeId a, NodeId b) { return add_node(Node{MinPairwiseKind{}, {a, b}}); }
    NodeId add(NodeId a, NodeId b) { return add_node(Node{AddKind{}, {a, b}}); }
    NodeId subtract(NodeId a, NodeId b) { return add_node(Node{SubtractKind{}, {a, b}}); }
    NodeId negate(NodeId pred) { return add_node(Node{NegateKind{}, {pred}}); }
    NodeId scale(NodeId pred, double factor) {
        return add_node(Node{ScaleConstKind{factor}, {pred}});
    }
    NodeId concat(std::vector<NodeId> preds, std::size_t axis = 0) {
        return add_node(Node{ConcatKind{axis}, std::move(preds)});
    }
    NodeId slice(NodeId pred, std::size_t begin, std::size_t end) {
        return add_node(Node{SliceKind{begin, end}, {pred}});
    }
    NodeId select(NodeId pred, std::vector<std::size_t> indices) {
        return add_node(Node{SelectIndicesKind{std::move(indices)}, {pred}});
    }
    NodeId clamp(NodeId pred, std::vector<double> lo, std::vector<double> hi) {
        return add_node(Node{ClampConstKind{std::move(lo), std::move(hi)}, {pred}});
    }
    NodeId reduce_max(NodeId pred) { return add_node(Node{ReduceMaxKind{}, {pred}}); }

    std::size_t elems(NodeId id) const { return elems_[id]; }
    std::size_t node_count() const { return nodes_.size(); }

    // Append every non-input node of `src`, remapping its input to `feed`.
    // Returns the id of the copy of src's sink. The copy preserves src's
    // internal topology; src must be well formed.
    NodeId splice(const Graph& src, NodeId feed) {
        if (!src.shapes_known() || !src.is_acyclic())
            throw ShapeError("splice: source graph malformed");
        if (src.elems(src.input_id()) != elems_[feed])
            throw ShapeError("splice: feed size does not match source input size");
        std::vector<NodeId> map(src.node_count(), kNoNode);
        map[src.input_id()] = feed;
        for (NodeId id : src.topological_order()) {
            if (id == src.input_id()) continue;
            Node copy = src.node(id);
            for (NodeId& p : copy.preds) p = map[p];
            map[id] = add_node(std::move(copy));
        }
        return map[src.sink_id()];
    }

    Graph build(NodeId sink) {
        if (input_ == kNoNode) throw ShapeError("graph has no input node");
        if (sink >= nodes_.size()) throw ShapeError("sink id out of range");
        return Graph(std::move(nodes_), input_, sink);
    }

private:
    NodeId add_node(Node n) {
        auto arity = kind_arity(n.kind);
        if (arity && n.preds.size() != *arity)
            throw ShapeError(std::string(kind_name(n.kind)) + ": wrong predecessor count");
        if (!arity && n.preds.empty()) throw ShapeError("concat: needs at least one predecessor");
        std::vector<std::size_t> pe;
        for (NodeId p : n.preds) {
            if (p >= nodes_.size()) throw ShapeError("predecessor id out of range");
            pe.push_back(elems_[p]);
        }
        std::string err;
        auto e = detail::infer_elems(n.kind, pe, &err);
        if (!e) throw ShapeError(std::string(kind_name(n.kind)) + ": " + err);
        nodes_.push_back(std::move(n));
        elems_.push_back(*e);
        return nodes_.size() - 1;
    }

    std::vector<Node> nodes_;
    std::vector<std::size_t> elems_;
    NodeId input_ = kNoNode;
};

// Convenience free functions mirroring the member API.
inline ValidationReport validate(const Graph& g) { return g.validate(); }
inline Value evaluate(const Graph& g, const Value& input) { return g.evaluate(input); }

}  // namespace hyperspec
