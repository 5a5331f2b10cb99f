#include <cmath>

#include "doctest.h"
#include "hyperspec/compose.hpp"
#include "hyperspec/lower.hpp"
#include "testutil.hpp"

using namespace hyperspec;

namespace {

bool only_exchange_kinds(const Graph& g) {
    for (const Node& n : g.nodes()) {
        bool ok = std::holds_alternative<InputKind>(n.kind) ||
                  std::holds_alternative<ParameterKind>(n.kind) ||
                  std::holds_alternative<AffineKind>(n.kind) ||
                  std::holds_alternative<ReluKind>(n.kind) ||
                  std::holds_alternative<AddKind>(n.kind) ||
                  std::holds_alternative<ConcatKind>(n.kind);
        if (!ok) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("lower: linear kinds evaluate identically") {
    GraphBuilder b;
    NodeId in = b.input(4);
    NodeId s1 = b.slice(in, 0, 2);
    NodeId s2 = b.select(in, {3, 1});
    NodeId d = b.subtract(s1, s2);
    NodeId sc = b.scale(d, -2.5);
    NodeId ng = b.negate(sc);
    Graph g = b.build(ng);
    LoweredGraph lg = lower_to_affine_relu(g);
    REQUIRE(lg.graph.validate().ok());
    CHECK(only_exchange_kinds(lg.graph));
    CHECK(lg.units.empty());
    testutil::Rng rng(71);
    for (int t = 0; t < 300; ++t) {
        Value x = Value::vector(rng.uniform_vec(4, -5, 5));
        Value a = g.evaluate(x), l = lg.graph.evaluate(x);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == l[i]);
    }
}

TEST_CASE("lower: composed problems evaluate bit-identically") {
    testutil::Rng rng(72);
    auto wts = testutil::random_mlp(rng, {2, 4, 2});
    Graph net = testutil::mlp_graph(wts);
    SpecParams p;
    p.domain = Hyperrectangle::cube(2, 0.0, 1.0);
    p.output_dim = 2;
    p.delta = 0.2;
    p.epsilon = 0.3;
    for (NNDH spec : {build_monotonicity(p), build_global_robustness_katz(p),
                      build_lipschitz([&] {
                          SpecParams q = p;
                          q.lipschitz_k = 2.0;
                          return q;
                      }())}) {
        ComposedProblem prob = self_compose(net, spec);
        LoweredGraph lg = lower_to_affine_relu(prob.graph);
        REQUIRE(lg.graph.validate().ok());
        CHECK(only_exchange_kinds(lg.graph));
        for (int t = 0; t < 100; ++t) {
            Value w = testutil::sample_box(rng, prob.property.input_box);
            CHECK(prob.graph.evaluate(w)[0] == lg.graph.evaluate(w)[0]);
        }
    }
}

TEST_CASE("lower: min/max/clamp/reduce_max keep values on dyadic points") {
    GraphBuilder b;
    NodeId in = b.input(4);
    NodeId a = b.slice(in, 0, 2);
    NodeId c = b.slice(in, 2, 4);
    NodeId mx = b.max_pairwise(a, c);
    NodeId mn = b.min_pairwise(a, c);
    NodeId cl = b.clamp(mx, {-0.5, -0.5}, {0.5, 0.5});
    NodeId cat = b.concat({cl, mn});
    NodeId rm = b.reduce_max(cat);
    Graph g = b.build(rm);
    LoweredGraph lg = lower_to_affine_relu(g);
    REQUIRE(lg.graph.validate().ok());
    CHECK(only_exchange_kinds(lg.graph));
    testutil::Rng rng(73);
    for (int t = 0; t < 500; ++t) {
        Value x = Value::vector(rng.dyadic_vec(4, -2, 2));
        CHECK(g.evaluate(x)[0] == lg.graph.evaluate(x)[0]);
    }
}

TEST_CASE("lower: unit count matches ReLU element total") {
    Graph g = linf_norm_gadget(4);  // abs layer: 4 units, tree: 2 + 1
    LoweredGraph lg = lower_to_affine_relu(g);
    CHECK(lg.units.size() == 7);
    CHECK(pwl_unit_count(g) == 7);
    // Clamp lowers to two ReLU layers per element.
    GraphBuilder b;
    Graph cg = b.build(b.clamp(b.input(3), {0, 0, 0}, {1, 1, 1}));
    CHECK(pwl_unit_count(cg) == 6);
}

TEST_CASE("lower: node_map points at equivalent outputs") {
    testutil::Rng rng(74);
    auto wts = testutil::random_mlp(rng, {2, 3, 1});
    Graph net = testutil::mlp_graph(wts);
    LoweredGraph lg = lower_to_affine_relu(net);
    CHECK(lg.node_map[net.sink_id()] == lg.graph.sink_id());
    CHECK(lg.node_map[net.input_id()] == lg.graph.input_id());
}
