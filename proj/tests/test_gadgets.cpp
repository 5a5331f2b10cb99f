#include <cmath>

#include "doctest.h"
#include "hyperspec/gadgets.hpp"
#include "testutil.hpp"

using namespace hyperspec;

namespace {

// Direct computations mirroring the gadget formulas, same operation order.
double relu(double x) { return x > 0.0 ? x : 0.0; }
double max_formula(double a, double b) { return relu(a - b) + b; }
double min_formula(double a, double b) { return b + (-relu(b - a)); }
double abs_formula(double a) { return relu(2.0 * a) + (-a); }

double linf_formula(std::vector<double> v) {
    for (double& x : v) x = abs_formula(x);
    while (v.size() > 1) {
        std::vector<double> nxt((v.size() + 1) / 2);
        for (std::size_t i = 0; i < nxt.size(); ++i) {
            if (2 * i + 1 < v.size())
                nxt[i] = relu(v[2 * i] - v[2 * i + 1]) + v[2 * i + 1];
            else
                nxt[i] = relu(0.0) + v[2 * i];
        }
        v = std::move(nxt);
    }
    return v[0];
}

double project_formula(double z, double lo, double hi) {
    double r1 = relu(z - lo);
    double r2 = relu(-r1 + (hi - lo));
    return -r2 + hi;
}

}  // namespace

TEST_CASE("gadget spot values") {
    CHECK(min_gadget(1).evaluate(Value::vector({4.0, -1.0}))[0] == -1.0);
    CHECK(abs_gadget(1).evaluate(Value::vector({-3.0}))[0] == 3.0);
    CHECK(linf_norm_gadget(3).evaluate(Value::vector({1.0, -4.0, 2.0}))[0] == 4.0);
    Graph proj = project_gadget(Hyperrectangle::cube(1, 0.0, 1.0));
    CHECK(proj.evaluate(Value::scalar(1.7))[0] == 1.0);
    CHECK(proj.evaluate(Value::scalar(-0.2))[0] == 0.0);
    CHECK(proj.evaluate(Value::scalar(0.5))[0] == 0.5);
}

TEST_CASE("gadgets reject dim < 1") {
    CHECK_THROWS_AS(max_gadget(0), ShapeError);
    CHECK_THROWS_AS(min_gadget(0), ShapeError);
    CHECK_THROWS_AS(abs_gadget(0), ShapeError);
    CHECK_THROWS_AS(linf_norm_gadget(0), ShapeError);
}

TEST_CASE("max/min gadgets: bitwise equal to mirrored formula, random doubles") {
    testutil::Rng rng(11);
    for (std::size_t dim : {1u, 3u}) {
        Graph mx = max_gadget(dim), mn = min_gadget(dim);
        for (int t = 0; t < 2000; ++t) {
            std::vector<double> ab = rng.uniform_vec(2 * dim, -10, 10);
            Value vmx = mx.evaluate(Value::vector(ab));
            Value vmn = mn.evaluate(Value::vector(ab));
            for (std::size_t i = 0; i < dim; ++i) {
                CHECK(vmx[i] == max_formula(ab[i], ab[dim + i]));
                CHECK(vmn[i] == min_formula(ab[i], ab[dim + i]));
            }
        }
    }
}

TEST_CASE("max/min/abs gadgets equal the true function on dyadic points and ties") {
    testutil::Rng rng(12);
    Graph mx = max_gadget(1), mn = min_gadget(1), ab = abs_gadget(1);
    for (int t = 0; t < 4000; ++t) {
        double a = rng.dyadic(-4, 4), b = rng.dyadic(-4, 4);
        if (t % 5 == 0) b = a;  // engineered tie
        CHECK(mx.evaluate(Value::vector({a, b}))[0] == std::max(a, b));
        CHECK(mn.evaluate(Value::vector({a, b}))[0] == std::min(a, b));
        CHECK(ab.evaluate(Value::vector({a}))[0] == std::fabs(a));
    }
    CHECK(ab.evaluate(Value::scalar(0.0))[0] == 0.0);
}

TEST_CASE("abs gadget is exact for arbitrary doubles") {
    // ReLU(2a) - a is exact in IEEE double for |a| below overflow.
    testutil::Rng rng(13);
    Graph ab = abs_gadget(1);
    for (int t = 0; t < 4000; ++t) {
        double a = rng.uniform(-1e12, 1e12);
        CHECK(ab.evaluate(Value::scalar(a))[0] == std::fabs(a));
    }
}

TEST_CASE("linf gadget: tree depth and exactness") {
    testutil::Rng rng(14);
    for (std::size_t dim : {1u, 2u, 3u, 5u, 8u}) {
        Graph g = linf_norm_gadget(dim);
        // Count ReLU layers on the longest path: abs layer + ceil(log2 dim).
        std::size_t relu_nodes = 0;
        for (const auto& n : g.nodes()) relu_nodes += std::holds_alternative<ReluKind>(n.kind);
        std::size_t expected_layers = 1;
        for (std::size_t w = dim; w > 1; w = (w + 1) / 2) ++expected_layers;
        CHECK(relu_nodes == expected_layers);

        for (int t = 0; t < 1000; ++t) {
            std::vector<double> v = rng.dyadic_vec(dim, -4, 4);
            double want = 0.0;
            for (double x : v) want = std::max(want, std::fabs(x));
            CHECK(g.evaluate(Value::vector(v))[0] == want);
            CHECK(g.evaluate(Value::vector(v))[0] == linf_formula(v));
        }
    }
}

TEST_CASE("project gadget: mirrored formula, boundaries, idempotence") {
    testutil::Rng rng(15);
    std::vector<double> lo = {-1.0, 0.0, 0.25}, hi = {1.0, 1.0, 0.75};
    Hyperrectangle box(Value::vector(lo), Value::vector(hi));
    Graph g = project_gadget(box);
    for (int t = 0; t < 3000; ++t) {
        std::vector<double> z = rng.dyadic_vec(3, -3, 3);
        if (t % 7 == 0) z = {lo[0], hi[1], lo[2]};  // boundary points
        Value p = g.evaluate(Value::vector(z));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(p[i] == std::min(hi[i], std::max(lo[i], z[i])));
            CHECK(p[i] == project_formula(z[i], lo[i], hi[i]));
        }
        Value pp = g.evaluate(p);
        for (std::size_t i = 0; i < 3; ++i) CHECK(pp[i] == p[i]);
    }
}

TEST_CASE("stitch: identity composition leaves evaluation unchanged") {
    testutil::Rng rng(16);
    auto w = testutil::random_mlp(rng, {2, 3, 2});
    Graph g = testutil::mlp_graph(w);
    GraphBuilder ib;
    Graph ident = ib.build(ib.input(2));
    Graph st = stitch(g, ident, g.input_id());
    REQUIRE(st.validate().ok());
    for (int t = 0; t < 50; ++t) {
        Value x = Value::vector(rng.uniform_vec(2, -1, 1));
        Value a = g.evaluate(x), b = st.evaluate(x);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("stitch: f(x)=2x into g(y)=y+1 gives h(3)=7") {
    GraphBuilder fb;
    Graph f = fb.build(fb.affine(fb.input(1), Matrix(1, 1, {2.0}), {0.0}));
    GraphBuilder gb;
    Graph g = gb.build(gb.affine(gb.input(1), Matrix(1, 1, {1.0}), {1.0}));
    Graph h = stitch(g, f, g.input_id());
    CHECK(h.evaluate(Value::scalar(3.0))[0] == 7.0);
}

TEST_CASE("stitch: equals two-pass evaluation on random points") {
    testutil::Rng rng(17);
    auto wi = testutil::random_mlp(rng, {3, 4, 2});
    auto wo = testutil::random_mlp(rng, {2, 3, 1});
    Graph inner = testutil::mlp_graph(wi), outer = testutil::mlp_graph(wo);
    Graph h = stitch(outer, inner, outer.input_id());
    REQUIRE(h.validate().ok());
    for (int t = 0; t < 100; ++t) {
        Value x = Value::vector(rng.uniform_vec(3, -2, 2));
        Value staged = outer.evaluate(inner.evaluate(x));
        Value direct = h.evaluate(x);
        CHECK(direct[0] == staged[0]);
    }
}

TEST_CASE("stitch: shape mismatch raises") {
    GraphBuilder fb;
    Graph f = fb.build(fb.input(2));
    GraphBuilder gb;
    Graph g = gb.build(gb.negate(gb.input(3)));
    CHECK_THROWS_AS(stitch(g, f, g.input_id()), ComposeError);
}
