#pragma once

// Self-composition: stitches N_in, v parameter-sharing copies of the network
// under verification, and N_sat into a single graph N' from R^w to R, paired
// with the reachability property (W, R>=0). Verifying N' against that
// property decides the original hyperproperty.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hyperspec/graph.hpp"
#include "hyperspec/specs.hpp"

namespace hyperspec {

enum class OutputSetTag { non_negative_scalar };

// Single-network reachability property: inputs range over a box, outputs
// must be non-negative scalars.
struct Property {
    Hyperrectangle input_box;
    OutputSetTag output_set = OutputSetTag::non_negative_scalar;
};

// Which original part a composed node came from.
enum class ComposedPart { n_in, network_copy, n_sat, interface };

struct ProvenanceRange {
    ComposedPart part = ComposedPart::interface;
    std::size_t copy_index = 0;  // meaningful for network_copy
    std::vector<NodeId> nodes;
};

// Links composed-graph nodes back to their origin and records the node ids
// needed to decode a witness w into (x^(1..v), y^(1..v)).
struct Provenance {
    std::vector<ProvenanceRange> ranges;       // covers every node exactly once
    std::vector<NodeId> copy_input_nodes;      // x^(k): slice of N_in's output
    std::vector<NodeId> copy_output_nodes;     // y^(k): sink of copy k
    NodeId n_in_output = kNoNode;
    std::size_t copies = 0;
    std::size_t input_dim = 0;   // n
    std::size_t output_dim = 0;  // m
};

struct ComposedProblem {
    Graph graph;  // N'
    Property property;
    Provenance provenance;
};

// A decoded execution tuple at some w.
struct DecodedTuple {
    std::vector<Value> inputs;   // x^(1..v)
    std::vector<Value> outputs;  // y^(1..v)
    double sat_value = 0.0;
};

inline ComposedProblem self_compose(const Graph& network, const NNDH& spec) {
    spec.check();
    if (!network.shapes_known() || !network.is_acyclic())
        throw ComposeError("self_compose: network graph malformed");
    if (network.input_dim() != spec.input_dim)
        throw ComposeError("self_compose: network input dimension " +
                           std::to_string(network.input_dim()) + " but the spec expects n = " +
                           std::to_string(spec.input_dim));
    if (network.output_dim() != spec.output_dim)
        throw ComposeError("self_compose: network output dimension " +
                           std::to_string(network.output_dim()) + " but the spec expects m = " +
                           std::to_string(spec.output_dim));

    const std::size_t v = spec.copies;
    const std::size_t n = spec.input_dim;

    GraphBuilder b;
    Provenance prov;
    prov.copies = v;
    prov.input_dim = n;
    prov.output_dim = spec.output_dim;

    auto record = [&](ComposedPart part, std::size_t copy, std::size_t first, std::size_t last) {
        if (last <= first) return;
        ProvenanceRange r;
        r.part = part;
        r.copy_index = copy;
        for (std::size_t id = first; id < last; ++id) r.nodes.push_back(id);
        prov.ranges.push_back(std::move(r));
    };

    NodeId w = b.input(spec.w_box.dim());
    record(ComposedPart::interface, 0, 0, b.node_count());

    std::size_t mark = b.node_count();
    NodeId xin = b.splice(spec.n_in, w);
    record(ComposedPart::n_in, 0, mark, b.node_count());
    prov.n_in_output = xin;

    std::vector<NodeId> sat_feed;
    std::vector<NodeId> copy_outs;
    for (std::size_t k = 0; k < v; ++k) {
        mark = b.node_count();
        NodeId xk = b.slice(xin, k * n, (k + 1) * n);
        record(ComposedPart::interface, k, mark, b.node_count());
        prov.copy_input_nodes.push_back(xk);
        sat_feed.push_back(xk);

        mark = b.node_count();
        NodeId yk = b.splice(network, xk);
        record(ComposedPart::network_copy, k, mark, b.node_count());
        prov.copy_output_nodes.push_back(yk);
        copy_outs.push_back(yk);
    }
    sat_feed.insert(sat_feed.end(), copy_outs.begin(), copy_outs.end());

    mark = b.node_count();
    NodeId packed = b.concat(std::move(sat_feed));
    record(ComposedPart::interface, 0, mark, b.node_count());

    mark = b.node_count();
    NodeId sat = b.splice(spec.n_sat, packed);
    record(ComposedPart::n_sat, 0, mark, b.node_count());

    Graph composed = b.build(sat);
    return ComposedProblem{std::move(composed),
                           Property{spec.w_box, OutputSetTag::non_negative_scalar},
                           std::move(prov)};
}

// Evaluate N' at w and read the copy inputs/outputs back out of the composed
// graph via provenance.
inline DecodedTuple decode_tuple(const ComposedProblem& problem, const Value& w) {
    std::vector<Value> vals = problem.graph.evaluate_all(w);
    DecodedTuple t;
    for (NodeId id : problem.provenance.copy_input_nodes) t.inputs.push_back(vals[id]);
    for (NodeId id : problem.provenance.copy_output_nodes) t.outputs.push_back(vals[id]);
    t.sat_value = vals[problem.graph.sink_id()][0];
    return t;
}

// Sampled cross-check of the reduction: at each sampled w, the sign of N'(w)
// must agree with the mathematical output-set predicate evaluated on the
// decoded tuple. Not a proof; a fast necessary-condition check.
struct EquivalenceDisagreement {
    Value w;
    double sat_value = 0.0;
    bool predicate = false;
};

struct EquivalenceReport {
    std::size_t samples = 0;
    std::vector<EquivalenceDisagreement> disagreements;
    bool ok() const { return disagreements.empty(); }
};

inline EquivalenceReport satisfaction_equivalence_check(const Graph& network, const NNDH& spec,
                                                        std::size_t samples,
                                                        std::uint64_t seed = 0x5eed) {
    if (samples < 1) throw VerifyError("satisfaction_equivalence_check: samples must be >= 1");
    ComposedProblem problem = self_compose(network, spec);
    std::mt19937_64 rng(seed);
    EquivalenceReport report;
    report.samples = samples;
    const Hyperrectangle& box = problem.property.input_box;
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<double> w(box.dim());
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::uniform_real_distribution<double> d(box.lower[i], box.upper[i]);
            w[i] = box.lower[i] == box.upper[i] ? box.lower[i] : d(rng);
        }
        Value wv = Value::vector(std::move(w));
        DecodedTuple t = decode_tuple(problem, wv);
        bool pred = output_set_holds(spec, t.inputs, t.outputs);
        if ((t.sat_value >= 0.0) != pred)
            report.disagreements.push_back(EquivalenceDisagreement{wv, t.sat_value, pred});
    }
    return report;
}

}  // namespace hyperspec
