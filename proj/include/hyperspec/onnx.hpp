#pragma once

// Minimal ONNX reader/writer for the feed-forward exchange subset:
// Gemm / MatMul / Add / Relu / Flatten / Reshape / Concat. Implements just
// enough of the protobuf wire format; no external protobuf dependency.
// Tensors are written as DOUBLE so round trips preserve evaluation exactly;
// FLOAT initializers are accepted on import.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyperspec/errors.hpp"
#include "hyperspec/graph.hpp"
#include "hyperspec/lower.hpp"

namespace hyperspec::onnx {

// --------------------------- wire-level helpers ----------------------------

namespace wire {

inline void put_varint(std::string& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7f) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

inline void put_tag(std::string& out, int field, int type) {
    put_varint(out, static_cast<std::uint64_t>(field) << 3 | static_cast<unsigned>(type));
}

inline void put_len_field(std::string& out, int field, const std::string& payload) {
    put_tag(out, field, 2);
    put_varint(out, payload.size());
    out += payload;
}

inline void put_string(std::string& out, int field, const std::string& s) {
    put_len_field(out, field, s);
}

inline void put_uint(std::string& out, int field, std::uint64_t v) {
    put_tag(out, field, 0);
    put_varint(out, v);
}

inline void put_double_le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    bool done() const { return p >= end; }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        int shift = 0;
        while (p < end) {
            unsigned char b = *p++;
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
            if (shift > 63) break;
        }
        throw IoError("onnx: malformed varint");
    }

    std::pair<int, int> tag() {
        std::uint64_t t = varint();
        return {static_cast<int>(t >> 3), static_cast<int>(t & 7)};
    }

    Reader sub() {
        std::uint64_t len = varint();
        if (p + len > end) throw IoError("onnx: truncated length-delimited field");
        Reader r{p, p + len};
        p += len;
        return r;
    }

    std::string bytes() {
        Reader r = sub();
        return std::string(reinterpret_cast<const char*>(r.p), static_cast<std::size_t>(r.end - r.p));
    }

    void skip(int type) {
        switch (type) {
            case 0: varint(); break;
            case 1:
                if (p + 8 > end) throw IoError("onnx: truncated fixed64");
                p += 8;
                break;
            case 2: sub(); break;
            case 5:
                if (p + 4 > end) throw IoError("onnx: truncated fixed32");
                p += 4;
                break;
            default: throw IoError("onnx: unsupported wire type " + std::to_string(type));
        }
    }

    double fixed64_double() {
        if (p + 8 > end) throw IoError("onnx: truncated double");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }

    float fixed32_float() {
        if (p + 4 > end) throw IoError("onnx: truncated float");
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        return f;
    }
};

}  // namespace wire

// --------------------------- parsed model types ----------------------------

inline constexpr int kDataTypeFloat = 1;
inline constexpr int kDataTypeDouble = 11;

struct PTensor {
    std::string name;
    std::vector<std::int64_t> dims;
    int data_type = kDataTypeDouble;
    std::vector<double> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::int64_t d : dims) n *= static_cast<std::size_t>(d > 0 ? d : 0);
        return dims.empty() ? 1 : n;
    }
};

struct PAttr {
    std::string name;
    std::int64_t i = 0;
    float f = 0.0f;
    std::vector<std::int64_t> ints;
    bool has_i = false, has_f = false;
};

struct PNode {
    std::string op_type;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<PAttr> attrs;

    const PAttr* attr(const std::string& n) const {
        for (const PAttr& a : attrs)
            if (a.name == n) return &a;
        return nullptr;
    }
    std::int64_t attr_int(const std::string& n, std::int64_t dflt) const {
        const PAttr* a = attr(n);
        return a && a->has_i ? a->i : dflt;
    }
    double attr_float(const std::string& n, double dflt) const {
        const PAttr* a = attr(n);
        return a && a->has_f ? static_cast<double>(a->f) : dflt;
    }
};

struct PValueInfo {
    std::string name;
    std::vector<std::int64_t> dims;
};

struct PGraph {
    std::string name;
    std::vector<PNode> nodes;
    std::vector<PTensor> initializers;
    std::vector<PValueInfo> inputs;
    std::vector<PValueInfo> outputs;
};

struct PModel {
    std::int64_t ir_version = 0;
    PGraph graph;
};

// ------------------------------- parsing -----------------------------------

namespace wire {

inline PTensor parse_tensor(Reader r) {
    PTensor t;
    std::string raw;
    while (!r.done()) {
        auto [field, type] = r.tag();
        switch (field) {
            case 1:  // dims
                if (type == 2) {
                    Reader s = r.sub();
                    while (!s.done()) t.dims.push_back(static_cast<std::int64_t>(s.varint()));
                } else {
                    t.dims.push_back(static_cast<std::int64_t>(r.varint()));
                }
                break;
            case 2: t.data_type = static_cast<int>(r.varint()); break;
            case 4:  // float_data
                if (type == 2) {
                    Reader s = r.sub();
                    while (!s.done()) t.values.push_back(static_cast<double>(s.fixed32_float()));
                } else {
                    t.values.push_back(static_cast<double>(r.fixed32_float()));
                }
                break;
            case 8: t.name = r.bytes(); break;
            case 9: raw = r.bytes(); break;
            case 10:  // double_data
                if (type == 2) {
                    Reader s = r.sub();
                    while (!s.done()) t.values.push_back(s.fixed64_double());
                } else {
                    t.values.push_back(r.fixed64_double());
                }
                break;
            default: r.skip(type); break;
        }
    }
    if (!raw.empty()) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
        if (t.data_type == kDataTypeDouble) {
            if (raw.size() % 8 != 0) throw IoError("onnx: raw double tensor size not a multiple of 8");
            for (std::size_t i = 0; i < raw.size(); i += 8) {
                std::uint64_t bits = 0;
                for (int k = 0; k < 8; ++k)
                    bits |= static_cast<std::uint64_t>(bytes[i + k]) << (8 * k);
                double d;
                std::memcpy(&d, &bits, sizeof(d));
                t.values.push_back(d);
            }
        } else if (t.data_type == kDataTypeFloat) {
            if (raw.size() % 4 != 0) throw IoError("onnx: raw float tensor size not a multiple of 4");
            for (std::size_t i = 0; i < raw.size(); i += 4) {
                std::uint32_t bits = 0;
                for (int k = 0; k < 4; ++k)
                    bits |= static_cast<std::uint32_t>(bytes[i + k]) << (8 * k);
                float f;
                std::memcpy(&f, &bits, sizeof(f));
                t.values.push_back(static_cast<double>(f));
            }
        } else {
            throw IoError("onnx: unsupported tensor data type " + std::to_string(t.data_type));
        }
    }
    return t;
}

inline PAttr parse_attr(Reader r) {
    PAttr a;
    while (!r.done()) {
        auto [field, type] = r.tag();
        switch (field) {
            case 1: a.name = r.bytes(); break;
            case 2:
                a.f = r.fixed32_float();
                a.has_f = true;
                break;
            case 3:
                a.i = static_cast<std::int64_t>(r.varint());
                a.has_i = true;
                break;
            case 8:  // ints
                if (type == 2) {
                    Reader s = r.sub();
                    while (!s.done()) a.ints.push_back(static_cast<std::int64_t>(s.varint()));
                } else {
                    a.ints.push_back(static_cast<std::int64_t>(r.varint()));
                }
                break;
            default: r.skip(type); break;
        }
    }
    return a;
}

inline PNode parse_node(Reader r) {
    PNode n;
    while (!r.done()) {
        auto [field, type] = r.tag();
        switch (field) {
            case 1: n.inputs.push_back(r.bytes()); break;
            case 2: n.outputs.push_back(r.bytes()); break;
            case 3: n.name = r.bytes(); break;
            case 4: n.op_type = r.bytes(); break;
            case 5: n.attrs.push_back(parse_attr(r.sub())); break;
            default: r.skip(type); break;
        }
    }
    return n;
}

inline PValueInfo parse_value_info(Reader r) {
    PValueInfo v;
    while (!r.done()) {
        auto [field, type] = r.tag();
        if (field == 1) {
            v.name = r.bytes();
        } else if (field == 2 && type == 2) {
            Reader tp = r.sub();  // TypeProto
            while (!tp.done()) {
                auto [f2, t2] = tp.tag();
                if (f2 == 1 && t2 == 2) {
                    Reader tt = tp.sub();  // Tensor
                    while (!tt.done()) {
                        auto [f3, t3] = tt.tag();
                        if (f3 == 2 && t3 == 2) {
                            Reader sh = tt.sub();  // TensorShapeProto
                            while (!sh.done()) {
                                auto [f4, t4] = sh.tag();
                                if (f4 == 1 && t4 == 2) {
                                    Reader dim = sh.sub();  // Dimension
                                    std::int64_t value = -1;
                                    while (!dim.done()) {
                                        auto [f5, t5] = dim.tag();
                                        if (f5 == 1 && t5 == 0)
                                            value = static_cast<std::int64_t>(dim.varint());
                                        else
                                            dim.skip(t5);
                                    }
                                    v.dims.push_back(value);
                                } else {
                                    sh.skip(t4);
                                }
                            }
                        } else {
                            tt.skip(t3);
                        }
                    }
                } else {
                    tp.skip(t2);
                }
            }
        } else {
            r.skip(type);
        }
    }
    return v;
}

inline PGraph parse_graph(Reader r) {
    PGraph g;
    while (!r.done()) {
        auto [field, type] = r.tag();
        switch (field) {
            case 1: g.nodes.push_back(parse_node(r.sub())); break;
            case 2: g.name = r.bytes(); break;
            case 5: g.initializers.push_back(parse_tensor(r.sub())); break;
            case 11: g.inputs.push_back(parse_value_info(r.sub())); break;
            case 12: g.outputs.push_back(parse_value_info(r.sub())); break;
            default: r.skip(type); break;
        }
    }
    return g;
}

}  // namespace wire

inline PModel parse_model_bytes(const std::string& data) {
    wire::Reader r{reinterpret_cast<const unsigned char*>(data.data()),
                   reinterpret_cast<const unsigned char*>(data.data()) + data.size()};
    PModel m;
    bool saw_graph = false;
    while (!r.done()) {
        auto [field, type] = r.tag();
        switch (field) {
            case 1: m.ir_version = static_cast<std::int64_t>(r.varint()); break;
            case 7:
                m.graph = wire::parse_graph(r.sub());
                saw_graph = true;
                break;
            default: r.skip(type); break;
        }
    }
    if (!saw_graph) throw IoError("onnx: file contains no graph");
    return m;
}

// ------------------------------ import -------------------------------------

struct ImportedModel {
    Graph graph;
    std::vector<std::string> notes;  // informational import report
};

inline ImportedModel graph_from_model(const PModel& model) {
    const PGraph& pg = model.graph;
    ImportedModel out;

    std::map<std::string, const PTensor*> inits;
    for (const PTensor& t : pg.initializers) inits[t.name] = &t;

    // The single real input is the graph input that is not an initializer.
    std::vector<const PValueInfo*> real_inputs;
    for (const PValueInfo& vi : pg.inputs)
        if (!inits.count(vi.name)) real_inputs.push_back(&vi);
    if (real_inputs.size() != 1)
        throw ImportError("onnx import: expected exactly one network input, found " +
                          std::to_string(real_inputs.size()));
    std::size_t input_elems = 1;
    for (std::int64_t d : real_inputs[0]->dims) {
        if (d < 0) throw ImportError("onnx import: dynamic input dimensions are not supported");
        if (d > 0) input_elems *= static_cast<std::size_t>(d);
    }
    if (pg.outputs.size() != 1)
        throw ImportError("onnx import: expected exactly one network output");

    // First pass: reject unsupported operators with a complete list.
    static const std::set<std::string> supported{"Gemm", "MatMul", "Add",    "Relu",
                                                 "Flatten", "Reshape", "Concat"};
    std::set<std::string> unsupported;
    for (const PNode& n : pg.nodes)
        if (!supported.count(n.op_type)) unsupported.insert(n.op_type);
    if (!unsupported.empty()) {
        std::string list;
        for (const std::string& s : unsupported) list += (list.empty() ? "" : ", ") + s;
        throw ImportError("onnx import: unsupported operators: " + list);
    }

    GraphBuilder b;
    std::map<std::string, NodeId> value_of;  // tensor name -> node id
    value_of[real_inputs[0]->name] = b.input(input_elems);

    auto param_node = [&](const PTensor& t) {
        return b.parameter(Value(TensorShape::vector(std::max<std::size_t>(t.element_count(), 1)),
                                 t.values));
    };

    auto resolve = [&](const std::string& name) -> std::optional<NodeId> {
        auto it = value_of.find(name);
        if (it != value_of.end()) return it->second;
        return std::nullopt;
    };

    for (const PNode& n : pg.nodes) {
        const std::string& op = n.op_type;
        if (op == "Flatten" || op == "Reshape") {
            auto src = resolve(n.inputs.at(0));
            if (!src) throw ImportError("onnx import: " + op + " input not yet computed");
            value_of[n.outputs.at(0)] = *src;  // shape bookkeeping only
            out.notes.push_back(op + " '" + n.name + "' absorbed (flat tensors)");
            continue;
        }
        if (op == "Relu") {
            auto src = resolve(n.inputs.at(0));
            if (!src) throw ImportError("onnx import: Relu input not yet computed");
            value_of[n.outputs.at(0)] = b.relu(*src);
            continue;
        }
        if (op == "Concat") {
            std::vector<NodeId> preds;
            for (const std::string& in : n.inputs) {
                auto src = resolve(in);
                if (src) {
                    preds.push_back(*src);
                } else if (inits.count(in)) {
                    preds.push_back(param_node(*inits.at(in)));
                } else {
                    throw ImportError("onnx import: Concat input '" + in + "' unknown");
                }
            }
            value_of[n.outputs.at(0)] = b.concat(std::move(preds));
            continue;
        }
        if (op == "Add") {
            const std::string&a = n.inputs.at(0), &c = n.inputs.at(1);
            auto pa = resolve(a);
            auto pc = resolve(c);
            NodeId lhs, rhs;
            if (pa && pc) {  // residual add
                lhs = *pa;
                rhs = *pc;
            } else if (pa && inits.count(c)) {
                lhs = *pa;
                rhs = param_node(*inits.at(c));
            } else if (pc && inits.count(a)) {
                lhs = param_node(*inits.at(a));
                rhs = *pc;
            } else {
                throw ImportError("onnx import: Add inputs '" + a + "', '" + c + "' unknown");
            }
            value_of[n.outputs.at(0)] = b.add(lhs, rhs);
            continue;
        }
        if (op == "MatMul" || op == "Gemm") {
            const std::string&an = n.inputs.at(0), &bn = n.inputs.at(1);
            const bool a_init = inits.count(an) > 0;
            const bool b_init = inits.count(bn) > 0;
            if (a_init == b_init)
                throw ImportError("onnx import: " + op +
                                  " needs exactly one weight initializer operand");
            const PTensor& w = *(a_init ? inits.at(an) : inits.at(bn));
            auto src = resolve(a_init ? bn : an);
            if (!src) throw ImportError("onnx import: " + op + " value operand not yet computed");
            if (w.dims.size() != 2)
                throw ImportError("onnx import: " + op + " weight must be 2-D");
            const auto rows = static_cast<std::size_t>(w.dims[0]);
            const auto cols = static_cast<std::size_t>(w.dims[1]);

            bool weight_is_lhs = a_init;  // y = W x when the initializer is first
            bool trans = false;
            double alpha = 1.0, beta = 1.0;
            if (op == "Gemm") {
                if (n.attr_int("transA", 0) != 0)
                    throw ImportError("onnx import: Gemm transA is not supported");
                trans = n.attr_int("transB", 0) != 0 && !a_init;
                alpha = n.attr_float("alpha", 1.0);
                beta = n.attr_float("beta", 1.0);
            }

            // Build the affine weight so that out = weight * x.
            Matrix weight;
            if (weight_is_lhs) {  // y = W[rows x cols] * x[cols]
                weight = Matrix(rows, cols, w.values);
            } else if (trans) {  // y = x * W^T, W is [m x k] -> weight = W
                weight = Matrix(rows, cols, w.values);
            } else {  // y = x * W, W is [k x m] -> weight = W^T
                weight = Matrix(cols, rows);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                        weight.at(c, r) = w.values[r * cols + c];
            }
            if (alpha != 1.0) {
                for (double& x : weight.a) x = alpha * x;
                out.notes.push_back("Gemm '" + n.name + "': alpha folded into the weight");
            }

            std::vector<double> bias(weight.rows, 0.0);
            if (op == "Gemm" && n.inputs.size() >= 3 && !n.inputs[2].empty()) {
                auto itc = inits.find(n.inputs[2]);
                if (itc == inits.end())
                    throw ImportError("onnx import: Gemm bias must be an initializer");
                if (itc->second->values.size() != weight.rows)
                    throw ImportError("onnx import: Gemm bias size mismatch");
                bias = itc->second->values;
                if (beta != 1.0) {
                    for (double& x : bias) x = beta * x;
                    out.notes.push_back("Gemm '" + n.name + "': beta folded into the bias");
                }
            }
            value_of[n.outputs.at(0)] = b.affine(*src, std::move(weight), std::move(bias));
            continue;
        }
    }

    auto sink = value_of.find(pg.outputs[0].name);
    if (sink == value_of.end())
        throw ImportError("onnx import: output tensor '" + pg.outputs[0].name +
                          "' is not produced by any node");
    out.graph = b.build(sink->second);
    return out;
}

inline ImportedModel read_model_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ImportError("onnx import: cannot open '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return graph_from_model(parse_model_bytes(data));
}

// ------------------------------ export -------------------------------------

namespace wire {

inline std::string tensor_bytes(const std::string& name, std::size_t elems,
                                const std::vector<double>& values) {
    std::string t;
    put_tag(t, 1, 0);
    put_varint(t, 1);  // dims: [1, elems]
    put_tag(t, 1, 0);
    put_varint(t, elems);
    put_uint(t, 2, kDataTypeDouble);
    put_string(t, 8, name);
    std::string raw;
    raw.reserve(values.size() * 8);
    for (double v : values) put_double_le(raw, v);
    put_len_field(t, 9, raw);
    return t;
}

inline std::string value_info_bytes(const std::string& name, std::size_t elems) {
    std::string dim1, dim2;
    put_uint(dim1, 1, 1);
    put_uint(dim2, 1, elems);
    std::string shape;
    put_len_field(shape, 1, dim1);
    put_len_field(shape, 1, dim2);
    std::string tensor;
    put_uint(tensor, 1, kDataTypeDouble);
    put_len_field(tensor, 2, shape);
    std::string type;
    put_len_field(type, 1, tensor);
    std::string vi;
    put_string(vi, 1, name);
    put_len_field(vi, 2, type);
    return vi;
}

inline std::string attr_int_bytes(const std::string& name, std::int64_t value) {
    std::string a;
    put_string(a, 1, name);
    put_tag(a, 3, 0);
    put_varint(a, static_cast<std::uint64_t>(value));
    put_uint(a, 20, 2);  // AttributeProto.Type INT
    return a;
}

inline std::string node_bytes(const std::string& op, const std::string& name,
                              const std::vector<std::string>& inputs,
                              const std::vector<std::string>& outputs,
                              const std::vector<std::string>& attrs = {}) {
    std::string n;
    for (const std::string& in : inputs) put_string(n, 1, in);
    for (const std::string& o : outputs) put_string(n, 2, o);
    put_string(n, 3, name);
    put_string(n, 4, op);
    for (const std::string& a : attrs) put_len_field(n, 5, a);
    return n;
}

}  // namespace wire

// Serialize a lowered (affine/ReLU/add/concat) graph. Throws on other kinds.
inline std::string model_bytes_from_graph(const Graph& g, const std::string& graph_name) {
    if (!g.shapes_known() || !g.is_acyclic())
        throw IoError("onnx export: graph malformed");

    auto tname = [](NodeId id) { return "t" + std::to_string(id); };

    std::string nodes_and_inits;  // GraphProto fields 1 and 5, emitted in order
    std::string graph_inputs, graph_outputs;

    for (NodeId id : g.topological_order()) {
        const Node& n = g.node(id);
        if (std::holds_alternative<InputKind>(n.kind)) {
            graph_inputs = wire::value_info_bytes(tname(id), g.elems(id));
        } else if (const auto* p = std::get_if<ParameterKind>(&n.kind)) {
            wire::put_len_field(nodes_and_inits, 5,
                                wire::tensor_bytes(tname(id), g.elems(id), p->value.data));
        } else if (const auto* a = std::get_if<AffineKind>(&n.kind)) {
            // Gemm with transB = 1: out[1,m] = x[1,k] * W[m,k]^T + b[m].
            std::string w;
            {
                std::string t;
                wire::put_tag(t, 1, 0);
                wire::put_varint(t, a->weight.rows);
                wire::put_tag(t, 1, 0);
                wire::put_varint(t, a->weight.cols);
                wire::put_uint(t, 2, kDataTypeDouble);
                wire::put_string(t, 8, "w" + std::to_string(id));
                std::string raw;
                for (double v : a->weight.a) wire::put_double_le(raw, v);
                wire::put_len_field(t, 9, raw);
                w = t;
            }
            std::string bias;
            {
                std::string t;
                wire::put_tag(t, 1, 0);
                wire::put_varint(t, a->bias.size());
                wire::put_uint(t, 2, kDataTypeDouble);
                wire::put_string(t, 8, "b" + std::to_string(id));
                std::string raw;
                for (double v : a->bias) wire::put_double_le(raw, v);
                wire::put_len_field(t, 9, raw);
                bias = t;
            }
            wire::put_len_field(nodes_and_inits, 5, w);
            wire::put_len_field(nodes_and_inits, 5, bias);
            wire::put_len_field(
                nodes_and_inits, 1,
                wire::node_bytes("Gemm", "gemm" + std::to_string(id),
                                 {tname(n.preds[0]), "w" + std::to_string(id),
                                  "b" + std::to_string(id)},
                                 {tname(id)}, {wire::attr_int_bytes("transB", 1)}));
        } else if (std::holds_alternative<ReluKind>(n.kind)) {
            wire::put_len_field(nodes_and_inits, 1,
                                wire::node_bytes("Relu", "relu" + std::to_string(id),
                                                 {tname(n.preds[0])}, {tname(id)}));
        } else if (std::holds_alternative<AddKind>(n.kind)) {
            wire::put_len_field(nodes_and_inits, 1,
                                wire::node_bytes("Add", "add" + std::to_string(id),
                                                 {tname(n.preds[0]), tname(n.preds[1])},
                                                 {tname(id)}));
        } else if (std::holds_alternative<ConcatKind>(n.kind)) {
            std::vector<std::string> ins;
            for (NodeId p : n.preds) ins.push_back(tname(p));
            wire::put_len_field(nodes_and_inits, 1,
                                wire::node_bytes("Concat", "concat" + std::to_string(id), ins,
                                                 {tname(id)},
                                                 {wire::attr_int_bytes("axis", 1)}));
        } else {
            throw IoError(std::string("onnx export: node kind '") + kind_name(n.kind) +
                          "' is not in the exchange subset; lower the graph first");
        }
    }
    graph_outputs = wire::value_info_bytes(tname(g.sink_id()), g.elems(g.sink_id()));

    std::string graph;
    graph += nodes_and_inits;
    wire::put_string(graph, 2, graph_name);
    wire::put_len_field(graph, 11, graph_inputs);
    wire::put_len_field(graph, 12, graph_outputs);

    std::string opset;
    wire::put_string(opset, 1, "");  // default ai.onnx domain
    wire::put_uint(opset, 2, 13);

    std::string model;
    wire::put_uint(model, 1, 8);  // ir_version
    wire::put_string(model, 2, "hyperspec");
    wire::put_string(model, 3, "1.0");
    wire::put_len_field(model, 7, graph);
    wire::put_len_field(model, 8, opset);
    return model;
}

// Lower an arbitrary graph and write it as an ONNX file.
inline void write_model_file(const Graph& g, const std::string& path,
                             const std::string& graph_name = "network") {
    LoweredGraph lowered = lower_to_affine_relu(g);
    std::string bytes = model_bytes_from_graph(lowered.graph, graph_name);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("onnx export: cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("onnx export: write failed for '" + path + "'");
}

}  // namespace hyperspec::onnx
