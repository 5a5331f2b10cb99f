#pragma once

// Serialization: the native JSON graph format (format_version 1), model
// import from the ONNX subset, export of composed problems for external
// verifiers (ONNX model + VNN-LIB property file) and verdict JSON.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperspec/compose.hpp"
#include "hyperspec/graph.hpp"
#include "hyperspec/onnx.hpp"
#include "hyperspec/specs.hpp"
#include "hyperspec/verify.hpp"

namespace hyperspec {

using ordered_json = nlohmann::ordered_json;

// ----------------------------- native format --------------------------------

namespace detail {

inline ordered_json node_to_json(const Graph& g, NodeId id) {
    const Node& n = g.node(id);
    ordered_json j;
    j["kind"] = kind_name(n.kind);
    j["preds"] = n.preds;
    if (const auto* k = std::get_if<InputKind>(&n.kind)) {
        j["shape"] = k->shape.dims;
    } else if (const auto* k = std::get_if<ParameterKind>(&n.kind)) {
        j["shape"] = k->value.shape.dims;
        j["values"] = k->value.data;
    } else if (const auto* k = std::get_if<AffineKind>(&n.kind)) {
        j["weight"] = k->weight.a;  // row-major; rows = len(bias)
        j["bias"] = k->bias;
    } else if (const auto* k = std::get_if<ScaleConstKind>(&n.kind)) {
        j["factor"] = k->factor;
    } else if (const auto* k = std::get_if<ConcatKind>(&n.kind)) {
        j["axis"] = k->axis;
    } else if (const auto* k = std::get_if<SliceKind>(&n.kind)) {
        j["start"] = k->begin;
        j["end"] = k->end;
    } else if (const auto* k = std::get_if<SelectIndicesKind>(&n.kind)) {
        j["indices"] = k->indices;
    } else if (const auto* k = std::get_if<ClampConstKind>(&n.kind)) {
        j["lo"] = k->lower;
        j["hi"] = k->upper;
    }
    return j;
}

[[noreturn]] inline void schema_error(const std::string& pointer, const std::string& msg) {
    throw IoError("graph file schema violation at " + pointer + ": " + msg);
}

template <typename T>
T field(const ordered_json& j, const std::string& pointer, const char* name) {
    if (!j.contains(name)) schema_error(pointer + "/" + name, "missing field");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
        schema_error(pointer + "/" + name, e.what());
    }
}

inline NodeKind node_kind_from_json(const ordered_json& j, const std::string& pointer) {
    const std::string kind = field<std::string>(j, pointer, "kind");
    if (kind == "input") {
        TensorShape s{field<std::vector<std::size_t>>(j, pointer, "shape")};
        return InputKind{std::move(s)};
    }
    if (kind == "parameter") {
        TensorShape s{field<std::vector<std::size_t>>(j, pointer, "shape")};
        auto values = field<std::vector<double>>(j, pointer, "values");
        if (s.element_count() != values.size())
            schema_error(pointer + "/values", "length does not match shape");
        return ParameterKind{Value(std::move(s), std::move(values))};
    }
    if (kind == "affine") {
        auto w = field<std::vector<double>>(j, pointer, "weight");
        auto b = field<std::vector<double>>(j, pointer, "bias");
        if (b.empty() || w.size() % b.size() != 0)
            schema_error(pointer + "/weight", "row-major weight does not tile by bias length");
        const std::size_t rows = b.size();
        const std::size_t cols = w.size() / rows;
        Matrix m(rows, cols, std::move(w));
        return AffineKind{std::move(m), std::move(b)};
    }
    if (kind == "relu") return ReluKind{};
    if (kind == "max_pairwise") return MaxPairwiseKind{};
    if (kind == "min_pairwise") return MinPairwiseKind{};
    if (kind == "add") return AddKind{};
    if (kind == "subtract") return SubtractKind{};
    if (kind == "negate") return NegateKind{};
    if (kind == "reduce_max") return ReduceMaxKind{};
    if (kind == "scale_const") return ScaleConstKind{field<double>(j, pointer, "factor")};
    if (kind == "concat") return ConcatKind{field<std::size_t>(j, pointer, "axis")};
    if (kind == "slice")
        return SliceKind{field<std::size_t>(j, pointer, "start"),
                         field<std::size_t>(j, pointer, "end")};
    if (kind == "select_indices")
        return SelectIndicesKind{field<std::vector<std::size_t>>(j, pointer, "indices")};
    if (kind == "clamp_const")
        return ClampConstKind{field<std::vector<double>>(j, pointer, "lo"),
                              field<std::vector<double>>(j, pointer, "hi")};
    schema_error(pointer + "/kind", "unknown node kind '" + kind + "'");
}

}  // namespace detail

inline ordered_json graph_to_json(const Graph& g) {
    ordered_json j;
    j["format_version"] = 1;
    j["input"] = g.input_id();
    j["sink"] = g.sink_id();
    ordered_json nodes = ordered_json::object();
    for (NodeId id = 0; id < g.node_count(); ++id)
        nodes[std::to_string(id)] = detail::node_to_json(g, id);
    j["nodes"] = std::move(nodes);
    return j;
}

inline Graph graph_from_json(const ordered_json& j) {
    if (!j.is_object()) detail::schema_error("", "top level must be an object");
    if (!j.contains("format_version")) detail::schema_error("/format_version", "missing field");
    if (!j.at("format_version").is_number_integer() || j.at("format_version").get<int>() != 1)
        throw IoError("graph file: unsupported format_version (expected 1)");
    const NodeId input = detail::field<NodeId>(j, "", "input");
    const NodeId sink = detail::field<NodeId>(j, "", "sink");
    if (!j.contains("nodes") || !j.at("nodes").is_object())
        detail::schema_error("/nodes", "missing or not an object");

    const ordered_json& nodes_json = j.at("nodes");
    std::size_t count = nodes_json.size();
    std::vector<Node> nodes(count);
    std::vector<bool> seen(count, false);
    for (auto it = nodes_json.begin(); it != nodes_json.end(); ++it) {
        std::size_t id = 0;
        try {
            id = std::stoull(it.key());
        } catch (...) {
            detail::schema_error("/nodes/" + it.key(), "node key is not an integer");
        }
        if (id >= count) detail::schema_error("/nodes/" + it.key(), "node ids must be dense 0..n-1");
        const std::string pointer = "/nodes/" + it.key();
        Node n;
        n.kind = detail::node_kind_from_json(it.value(), pointer);
        n.preds = detail::field<std::vector<NodeId>>(it.value(), pointer, "preds");
        nodes[id] = std::move(n);
        seen[id] = true;
    }
    for (std::size_t id = 0; id < count; ++id)
        if (!seen[id]) detail::schema_error("/nodes", "missing node id " + std::to_string(id));
    return Graph(std::move(nodes), input, sink);
}

inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_graph: cannot open '" + path + "'");
    f << graph_to_json(g).dump(2) << "\n";
    if (!f) throw IoError("save_graph: write failed for '" + path + "'");
}

inline ordered_json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "' is not valid JSON: " + e.what());
    }
    return j;
}

inline Graph load_graph(const std::string& path) { return graph_from_json(load_json_file(path)); }

// -------------------------- composed problem files --------------------------

inline ordered_json problem_to_json(const ComposedProblem& p) {
    ordered_json j = graph_to_json(p.graph);
    j["property"] = {{"lo", p.property.input_box.lower.data},
                     {"hi", p.property.input_box.upper.data},
                     {"output_set", "nonnegative_scalar"}};
    ordered_json prov;
    prov["copies"] = p.provenance.copies;
    prov["input_dim"] = p.provenance.input_dim;
    prov["output_dim"] = p.provenance.output_dim;
    prov["copy_inputs"] = p.provenance.copy_input_nodes;
    prov["copy_outputs"] = p.provenance.copy_output_nodes;
    prov["n_in_output"] = p.provenance.n_in_output;
    ordered_json ranges = ordered_json::array();
    for (const ProvenanceRange& r : p.provenance.ranges) {
        const char* part = r.part == ComposedPart::n_in          ? "n_in"
                           : r.part == ComposedPart::network_copy ? "copy"
                           : r.part == ComposedPart::n_sat        ? "n_sat"
                                                                  : "interface";
        ranges.push_back({{"part", part}, {"copy", r.copy_index}, {"nodes", r.nodes}});
    }
    prov["ranges"] = std::move(ranges);
    j["provenance"] = std::move(prov);
    return j;
}

inline ComposedProblem problem_from_json(const ordered_json& j) {
    ComposedProblem p;
    p.graph = graph_from_json(j);
    if (!j.contains("property")) detail::schema_error("/property", "missing field");
    const auto& prop = j.at("property");
    p.property.input_box =
        Hyperrectangle(Value::vector(detail::field<std::vector<double>>(prop, "/property", "lo")),
                       Value::vector(detail::field<std::vector<double>>(prop, "/property", "hi")));
    if (j.contains("provenance")) {
        const auto& prov = j.at("provenance");
        p.provenance.copies = detail::field<std::size_t>(prov, "/provenance", "copies");
        p.provenance.input_dim = detail::field<std::size_t>(prov, "/provenance", "input_dim");
        p.provenance.output_dim = detail::field<std::size_t>(prov, "/provenance", "output_dim");
        p.provenance.copy_input_nodes =
            detail::field<std::vector<NodeId>>(prov, "/provenance", "copy_inputs");
        p.provenance.copy_output_nodes =
            detail::field<std::vector<NodeId>>(prov, "/provenance", "copy_outputs");
        p.provenance.n_in_output = detail::field<NodeId>(prov, "/provenance", "n_in_output");
        if (prov.contains("ranges")) {
            for (std::size_t i = 0; i < prov.at("ranges").size(); ++i) {
                const auto& rj = prov.at("ranges").at(i);
                const std::string ptr = "/provenance/ranges/" + std::to_string(i);
                ProvenanceRange r;
                const std::string part = detail::field<std::string>(rj, ptr, "part");
                r.part = part == "n_in"    ? ComposedPart::n_in
                         : part == "copy"  ? ComposedPart::network_copy
                         : part == "n_sat" ? ComposedPart::n_sat
                                           : ComposedPart::interface;
                r.copy_index = detail::field<std::size_t>(rj, ptr, "copy");
                r.nodes = detail::field<std::vector<NodeId>>(rj, ptr, "nodes");
                p.provenance.ranges.push_back(std::move(r));
            }
        }
    }
    return p;
}

inline void save_problem(const ComposedProblem& p, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_problem: cannot open '" + path + "'");
    f << problem_to_json(p).dump(2) << "\n";
}

inline ComposedProblem load_problem(const std::string& path) {
    return problem_from_json(load_json_file(path));
}

// ------------------------------ model import --------------------------------

struct ModelFile {
    std::string source_path;
    Graph graph;                     // lowered to the supported subset
    std::vector<std::string> notes;  // import report
};

inline ModelFile import_model(const std::string& path) {
    onnx::ImportedModel m = onnx::read_model_file(path);
    ValidationReport report = m.graph.validate();
    if (!report.ok()) {
        std::string msg = "imported model fails validation:";
        for (const Violation& v : report.violations) msg += "\n  " + v.code + ": " + v.message;
        throw ImportError(msg);
    }
    return ModelFile{path, std::move(m.graph), std::move(m.notes)};
}

// Load a network from either the exchange format or a native JSON graph.
inline Graph load_model_any(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return load_graph(path);
    return import_model(path).graph;
}

// ------------------------------ export --------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Writes the composed network (lowered to the exchange subset) and a
// VNN-LIB-style property file holding the violation query: box bounds on
// every input and a non-positivity assertion on the scalar output. An
// external verifier certifies the property by proving this query unsat.
inline void export_problem(const ComposedProblem& problem, const std::string& model_path,
                           const std::string& property_path) {
    if (problem.graph.output_dim() != 1)
        throw IoError("export_problem: composed graph must have a scalar output");
    onnx::write_model_file(problem.graph, model_path, "composed");

    const Hyperrectangle& box = problem.property.input_box;
    std::ostringstream out;
    out << "; violation query: the original property asserts a non-negative output.\n";
    out << "; this file asserts output < 0, so unsat here certifies the property.\n";
    out << "; inputs: " << box.dim() << ", outputs: 1\n\n";
    for (std::size_t i = 0; i < box.dim(); ++i)
        out << "(declare-const X_" << i << " Real)\n";
    out << "(declare-const Y_0 Real)\n\n";
    for (std::size_t i = 0; i < box.dim(); ++i) {
        out << "(assert (>= X_" << i << " " << detail::format_double(box.lower[i]) << "))\n";
        out << "(assert (<= X_" << i << " " << detail::format_double(box.upper[i]) << "))\n";
    }
    out << "\n; output < 0 (violation query, weak inequality in VNN-LIB syntax)\n";
    out << "(assert (<= Y_0 0.0))\n";

    std::ofstream f(property_path, std::ios::trunc | std::ios::binary);
    if (!f) throw IoError("export_problem: cannot open '" + property_path + "'");
    f << out.str();
    if (!f) throw IoError("export_problem: write failed for '" + property_path + "'");
}

// ------------------------------ verdict JSON --------------------------------

inline ordered_json verdict_to_json(const Verdict& v) {
    ordered_json j;
    j["verdict"] = verdict_name(v.kind);
    j["certified_lb"] = nullptr;
    j["witness"] = nullptr;
    j["decoded"] = nullptr;
    j["sat_value"] = nullptr;
    switch (v.kind) {
        case Verdict::Kind::satisfied: j["certified_lb"] = v.certified_lower_bound; break;
        case Verdict::Kind::unknown: j["certified_lb"] = v.best_lower_bound; break;
        case Verdict::Kind::violated: {
            const Counterexample& ce = *v.counterexample;
            j["witness"] = ce.witness.data;
            ordered_json decoded;
            ordered_json ins = ordered_json::array(), outs = ordered_json::array();
            for (const Value& x : ce.inputs) ins.push_back(x.data);
            for (const Value& y : ce.outputs) outs.push_back(y.data);
            decoded["inputs"] = std::move(ins);
            decoded["outputs"] = std::move(outs);
            j["decoded"] = std::move(decoded);
            j["sat_value"] = ce.sat_value;
            break;
        }
    }
    j["regions"] = v.regions_processed;
    j["time_ms"] = v.time_ms;
    if (v.kind == Verdict::Kind::unknown) j["regions_remaining"] = v.regions_remaining;
    return j;
}

// ------------------------------ spec files -----------------------------------

struct SpecFile {
    SpecKind kind = SpecKind::monotonicity;
    SpecParams params;
    ordered_json config;  // optional verifier config overrides
};

inline SpecFile parse_spec_json(const ordered_json& j, std::size_t network_output_dim) {
    if (!j.is_object()) throw IoError("spec file: top level must be an object");
    SpecFile s;
    const std::string name = detail::field<std::string>(j, "", "spec");
    if (name == "monotonicity")
        s.kind = SpecKind::monotonicity;
    else if (name == "robustness_katz")
        s.kind = SpecKind::robustness_katz;
    else if (name == "robustness_extra_class")
        s.kind = SpecKind::robustness_extra_class;
    else if (name == "lipschitz")
        s.kind = SpecKind::lipschitz;
    else if (name == "dependency_fairness")
        s.kind = SpecKind::dependency_fairness;
    else
        throw IoError("spec file: unknown spec '" + name + "'");

    if (!j.contains("domain")) throw IoError("spec file: missing 'domain'");
    const auto& dom = j.at("domain");
    s.params.domain =
        Hyperrectangle(Value::vector(detail::field<std::vector<double>>(dom, "/domain", "lo")),
                       Value::vector(detail::field<std::vector<double>>(dom, "/domain", "hi")));

    s.params.output_dim = network_output_dim;
    if (s.kind == SpecKind::robustness_extra_class) {
        if (network_output_dim < 2)
            throw IoError("spec file: the extra-class spec needs a network with at least 2 outputs");
        s.params.output_dim = network_output_dim - 1;  // real classes
    }

    if (j.contains("input_index")) s.params.input_index = j.at("input_index").get<std::size_t>();
    if (j.contains("output_index")) s.params.output_index = j.at("output_index").get<std::size_t>();
    if (j.contains("direction")) {
        const std::string dir = j.at("direction").get<std::string>();
        if (dir == "non_increasing")
            s.params.direction = MonotonicityDirection::non_increasing;
        else if (dir == "non_decreasing")
            s.params.direction = MonotonicityDirection::non_decreasing;
        else
            throw IoError("spec file: direction must be non_increasing or non_decreasing");
    }
    if (j.contains("delta")) s.params.delta = j.at("delta").get<double>();
    if (j.contains("epsilon")) s.params.epsilon = j.at("epsilon").get<double>();
    if (j.contains("lipschitz_k")) s.params.lipschitz_k = j.at("lipschitz_k").get<double>();
    if (j.contains("attribute_values"))
        s.params.attribute_values = j.at("attribute_values").get<std::size_t>();
    if (j.contains("config")) s.config = j.at("config");
    return s;
}

inline SpecFile load_spec_file(const std::string& path, std::size_t network_output_dim) {
    return parse_spec_json(load_json_file(path), network_output_dim);
}

}  // namespace hyperspec
