#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// Acceptance suite. Each criterion runs as one test case and prints a single
// machine-greppable line:  [acceptance] criterion N (<label>): PASS|FAIL (t s)

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "hyperspec/hyperspec.hpp"
#include "instances.hpp"
#include "testutil.hpp"

using namespace hyperspec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Count-only check: failures still surface through doctest, passes stay cheap.
#define ACHECK(cond)          \
    do {                      \
        if (!(cond)) {        \
            ok = false;       \
            CHECK(cond);      \
        }                     \
    } while (0)

namespace {

struct Criterion {
    int number;
    const char* label;
    Clock::time_point start = Clock::now();

    double elapsed_s() const {
        return std::chrono::duration<double>(Clock::now() - start).count();
    }
    void report(bool ok) const {
        std::printf("[acceptance] criterion %d (%s): %s (%.1f s)\n", number, label,
                    ok ? "PASS" : "FAIL", elapsed_s());
        std::fflush(stdout);
    }
};

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

Graph affine_net(double w, double b) {
    GraphBuilder gb;
    return gb.build(gb.affine(gb.input(1), Matrix(1, 1, {w}), {b}));
}

SpecParams unit_params(std::size_t n, std::size_t m) {
    SpecParams p;
    p.domain = Hyperrectangle::cube(n, 0.0, 1.0);
    p.output_dim = m;
    return p;
}

double staged_pipeline(const Graph& network, const NNDH& spec, const Value& w) {
    Value xin = spec.n_in.evaluate(w);
    std::vector<double> packed;
    std::vector<Value> xs, ys;
    for (std::size_t k = 0; k < spec.copies; ++k) {
        std::vector<double> xk(xin.data.begin() + k * spec.input_dim,
                               xin.data.begin() + (k + 1) * spec.input_dim);
        xs.push_back(Value::vector(xk));
        ys.push_back(network.evaluate(xs.back()));
    }
    for (const Value& x : xs) packed.insert(packed.end(), x.data.begin(), x.data.end());
    for (const Value& y : ys) packed.insert(packed.end(), y.data.begin(), y.data.end());
    return spec.n_sat.evaluate(Value::vector(packed))[0];
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(HYPERSPEC_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    CliResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("criterion 1: gadget exactness") {
    Criterion c{1, "gadget exactness"};
    bool ok = true;
    testutil::Rng rng(9001);

    Graph mx = max_gadget(1), mn = min_gadget(1), ab = abs_gadget(1);
    Graph ln3 = linf_norm_gadget(3), ln5 = linf_norm_gadget(5);
    std::vector<double> plo{-0.5, 0.0, 0.25}, phi{0.5, 1.0, 0.75};
    Graph pr = project_gadget(Hyperrectangle(Value::vector(plo), Value::vector(phi)));

    for (int t = 0; t < 10000; ++t) {
        double a = rng.uniform(-8, 8), b = rng.uniform(-8, 8);
        ACHECK(mx.evaluate(Value::vector({a, b}))[0] == max_formula(a, b));
        ACHECK(mn.evaluate(Value::vector({a, b}))[0] == min_formula(a, b));
        ACHECK(ab.evaluate(Value::scalar(a))[0] == abs_formula(a));
        std::vector<double> v3 = rng.uniform_vec(3, -4, 4);
        std::vector<double> v5 = rng.uniform_vec(5, -4, 4);
        ACHECK(ln3.evaluate(Value::vector(v3))[0] == linf_formula(v3));
        ACHECK(ln5.evaluate(Value::vector(v5))[0] == linf_formula(v5));
        std::vector<double> z = rng.uniform_vec(3, -2, 2);
        Value pz = pr.evaluate(Value::vector(z));
        for (int i = 0; i < 3; ++i) ACHECK(pz[i] == project_formula(z[i], plo[i], phi[i]));
    }
    // Tie and boundary cases.
    for (double a : {-2.0, -0.5, 0.0, 0.25, 3.0}) {
        ACHECK(mx.evaluate(Value::vector({a, a}))[0] == max_formula(a, a));
        ACHECK(mx.evaluate(Value::vector({a, a}))[0] == a);
        ACHECK(mn.evaluate(Value::vector({a, a}))[0] == a);
    }
    ACHECK(ab.evaluate(Value::scalar(0.0))[0] == 0.0);
    ACHECK(ab.evaluate(Value::scalar(-0.0))[0] == 0.0);
    for (int i = 0; i < 3; ++i) {
        std::vector<double> z = {0.0, 0.5, 0.5};
        z[i] = plo[i];
        Value at_lo = pr.evaluate(Value::vector(z));
        ACHECK(at_lo[i] == plo[i]);
        z[i] = phi[i];
        Value at_hi = pr.evaluate(Value::vector(z));
        ACHECK(at_hi[i] == phi[i]);
    }
    ACHECK(c.elapsed_s() < 10.0);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 2: DNF compiler equivalence") {
    Criterion c{2, "dnf compiler equivalence"};
    bool ok = true;
    testutil::Rng rng(9002);

    for (int fi = 0; fi < 1000; ++fi) {
        DnfFormula f;
        f.dim = 1 + rng.index(6);
        std::size_t nc = 1 + rng.index(4);
        for (std::size_t ci = 0; ci < nc; ++ci) {
            DnfClause clause;
            std::size_t na = 1 + rng.index(4);
            for (std::size_t ai = 0; ai < na; ++ai)
                clause.push_back(DnfAtom{rng.index(f.dim), rng.index(f.dim)});
            f.clauses.push_back(std::move(clause));
        }
        Graph g = compile_dnf(f);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> u = rng.dyadic_vec(f.dim, -2, 2, 8);
            if (t % 5 == 0 && f.dim >= 2) u[rng.index(f.dim)] = u[rng.index(f.dim)];  // tie
            if (t % 11 == 0) u.assign(f.dim, u[0]);  // all-tie vector
            double v = g.evaluate(Value::vector(u))[0];
            bool holds = false;
            for (const auto& clause : f.clauses) {
                bool all = true;
                for (const auto& atom : clause) all = all && u[atom.k1] >= u[atom.k2];
                holds = holds || all;
            }
            ACHECK((v >= 0.0) == holds);
        }
    }
    ACHECK(c.elapsed_s() < 30.0);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 3: self-composition functional equality") {
    Criterion c{3, "self-composition functional equality"};
    bool ok = true;
    testutil::Rng rng(9003);

    for (int netno = 0; netno < 10; ++netno) {
        auto wts = testutil::random_mlp(rng, {2, 4, 4, 2});
        Graph net = testutil::mlp_graph(wts);

        std::vector<NNDH> specs;
        specs.push_back(build_monotonicity(unit_params(2, 2)));
        {
            SpecParams p = unit_params(2, 2);
            p.delta = 0.2;
            p.epsilon = 0.3;
            specs.push_back(build_global_robustness_katz(p));
        }
        {
            SpecParams p = unit_params(2, 1);  // one real class; net outputs 2 = m+1
            p.delta = 0.2;
            specs.push_back(build_global_robustness_extra_class(p));
        }
        {
            SpecParams p = unit_params(2, 2);
            p.lipschitz_k = 1.5;
            specs.push_back(build_lipschitz(p));
        }
        {
            SpecParams p = unit_params(2, 2);
            p.domain = Hyperrectangle(Value::vector({1.0, 0.0}), Value::vector({2.0, 1.0}));
            p.attribute_values = 2;
            specs.push_back(build_dependency_fairness(p));
        }

        for (const NNDH& spec : specs) {
            ComposedProblem prob = self_compose(net, spec);
            for (int t = 0; t < 100; ++t) {
                Value w = testutil::sample_box(rng, prob.property.input_box);
                ACHECK(prob.graph.evaluate(w)[0] == staged_pipeline(net, spec, w));
            }
        }
    }
    ACHECK(c.elapsed_s() < 60.0);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 4: verifier/oracle agreement") {
    Criterion c{4, "verifier/oracle agreement"};
    bool ok = true;
    testutil::Rng rng(9004);

    int satisfied = 0, violated = 0;
    for (int i = 0; i < 50; ++i) {
        for (int k = 0; k < 5; ++k) {
            testutil::Instance inst = testutil::make_instance(rng, static_cast<SpecKind>(k), 12);
            Verdict vo = oracle_verify(inst.prob, 20);
            Verdict vv = verify(inst.prob);
            ACHECK(vo.kind != Verdict::Kind::unknown);
            ACHECK(vv.kind != Verdict::Kind::unknown);
            ACHECK(vo.kind == vv.kind);
            if (vv.kind == Verdict::Kind::violated) {
                ++violated;
                const Counterexample& ce = *vv.counterexample;
                ACHECK(ce.sat_value < -1e-9);
                ACHECK(ce.sat_value == inst.prob.graph.evaluate(ce.witness)[0]);
                ACHECK(inst.prob.property.input_box.contains(ce.witness));
                ACHECK(vo.counterexample->sat_value < -1e-9);
            } else if (vv.kind == Verdict::Kind::satisfied) {
                ++satisfied;
                ACHECK(vv.certified_lower_bound >= -1e-9);
                ACHECK(vo.certified_lower_bound >= 0.0);
            }
        }
    }
    // The suite is only meaningful when it exercises both verdicts broadly.
    ACHECK(satisfied >= 40);
    ACHECK(violated >= 40);
    ACHECK(c.elapsed_s() < 600.0);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 5: analytic anchor cases") {
    Criterion c{5, "analytic anchor cases"};
    bool ok = true;

    // f(x) = -x satisfies non-increasing monotonicity.
    {
        Verdict v = verify(self_compose(affine_net(-1.0, 0.0),
                                        build_monotonicity(unit_params(1, 1))));
        ACHECK(v.kind == Verdict::Kind::satisfied);
    }
    // f(x) = x violates it.
    {
        Verdict v = verify(self_compose(affine_net(1.0, 0.0),
                                        build_monotonicity(unit_params(1, 1))));
        ACHECK(v.kind == Verdict::Kind::violated);
    }
    // Constant network satisfies bounded-change robustness for any eps > 0.
    {
        SpecParams p = unit_params(1, 1);
        p.delta = 0.1;
        p.epsilon = 0.05;
        Verdict v = verify(self_compose(affine_net(0.0, 0.4),
                                        build_global_robustness_katz(p)));
        ACHECK(v.kind == Verdict::Kind::satisfied);
        ACHECK(std::fabs(v.certified_lower_bound - 0.05) <= 1e-12);
    }
    // The identity violates it at delta 0.1, eps 0.05.
    {
        SpecParams p = unit_params(1, 1);
        p.delta = 0.1;
        p.epsilon = 0.05;
        Verdict v = verify(self_compose(affine_net(1.0, 0.0),
                                        build_global_robustness_katz(p)));
        ACHECK(v.kind == Verdict::Kind::violated);
    }
    // f(x) = 2x is exactly 2-Lipschitz: satisfied at K = 2 with a zero margin...
    {
        SpecParams p = unit_params(1, 1);
        p.lipschitz_k = 2.0;
        Verdict v = verify(self_compose(affine_net(2.0, 0.0), build_lipschitz(p)));
        ACHECK(v.kind == Verdict::Kind::satisfied);
        ACHECK(v.certified_lower_bound >= -1e-9);
        ACHECK(v.certified_lower_bound <= 1e-9);
    }
    // ...and violated at K = 1.
    {
        SpecParams p = unit_params(1, 1);
        p.lipschitz_k = 1.0;
        Verdict v = verify(self_compose(affine_net(2.0, 0.0), build_lipschitz(p)));
        ACHECK(v.kind == Verdict::Kind::violated);
    }
    // An attribute-blind network is dependency fair.
    {
        GraphBuilder gb;
        Matrix w(2, 2, {0.0, 1.0, 0.0, -0.5});
        Graph net = gb.build(gb.affine(gb.input(2), w, {0.1, 0.2}));
        SpecParams p;
        p.domain = Hyperrectangle(Value::vector({1.0, 0.0}), Value::vector({2.0, 1.0}));
        p.output_dim = 2;
        p.attribute_values = 2;
        Verdict v = verify(self_compose(net, build_dependency_fairness(p)));
        ACHECK(v.kind == Verdict::Kind::satisfied);
    }
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 6: bound soundness and dominance") {
    Criterion c{6, "bound soundness and dominance"};
    bool ok = true;
    testutil::Rng rng(9006);

    for (int gi = 0; gi < 100; ++gi) {
        auto [g, box] = testutil::random_general_graph(rng, 12);
        const NodeId sink = g.sink_id();
        for (int bi = 0; bi < 100; ++bi) {
            std::vector<double> lo(box.dim()), hi(box.dim());
            for (std::size_t j = 0; j < box.dim(); ++j) {
                double a = rng.uniform(box.lower[j], box.upper[j]);
                double b = rng.uniform(box.lower[j], box.upper[j]);
                lo[j] = std::min(a, b);
                hi[j] = std::max(a, b);
            }
            Hyperrectangle sub(Value::vector(lo), Value::vector(hi));
            Bounds ib = interval_bounds(g, sub);
            Bounds bb = backward_linear_bounds(g, sub);
            ACHECK(bb.lower[sink][0] >= ib.lower[sink][0] - 1e-9);

            for (int t = 0; t < 1000; ++t) {
                Value x = testutil::sample_box(rng, sub);
                std::vector<Value> vals = g.evaluate_all(x);
                for (NodeId id = 0; id < g.node_count(); ++id) {
                    for (std::size_t e = 0; e < vals[id].size(); ++e) {
                        if (vals[id][e] < ib.lower[id][e] || vals[id][e] > ib.upper[id][e]) {
                            ACHECK(false);
                        }
                    }
                }
                if (vals[sink][0] < bb.lower[sink][0] || vals[sink][0] > bb.upper[sink][0]) {
                    ACHECK(false);
                }
            }
        }
    }
    ACHECK(c.elapsed_s() < 120.0);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 7: round-trip fidelity") {
    Criterion c{7, "round-trip fidelity"};
    bool ok = true;
    testutil::Rng rng(9007);
    fs::path dir = fs::temp_directory_path() / ("hyperspec_acc_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto p = [&](const std::string& n) { return (dir / n).string(); };

    // One composed problem per spec builder.
    for (int k = 0; k < 5; ++k) {
        testutil::Instance inst = testutil::make_instance(rng, static_cast<SpecKind>(k));
        // Native JSON round trip.
        save_problem(inst.prob, p("prob.json"));
        ComposedProblem back = load_problem(p("prob.json"));
        for (int t = 0; t < 100; ++t) {
            Value w = testutil::sample_box(rng, inst.prob.property.input_box);
            ACHECK(back.graph.evaluate(w)[0] == inst.prob.graph.evaluate(w)[0]);
        }
        // Exchange-format round trip, and byte-determinism of the property.
        export_problem(inst.prob, p("m1.onnx"), p("p1.vnnlib"));
        export_problem(inst.prob, p("m2.onnx"), p("p2.vnnlib"));
        ACHECK(slurp(p("m1.onnx")) == slurp(p("m2.onnx")));
        ACHECK(slurp(p("p1.vnnlib")) == slurp(p("p2.vnnlib")));
        ModelFile imported = import_model(p("m1.onnx"));
        for (int t = 0; t < 100; ++t) {
            Value w = testutil::sample_box(rng, inst.prob.property.input_box);
            ACHECK(imported.graph.evaluate(w)[0] == inst.prob.graph.evaluate(w)[0]);
        }
    }
    // Imported feed-forward models round-trip through both formats too.
    for (int i = 0; i < 2; ++i) {
        auto wts = testutil::random_mlp(rng, {3, 5, 2});
        Graph net = testutil::mlp_graph(wts);
        onnx::write_model_file(net, p("mlp.onnx"));
        ModelFile imported = import_model(p("mlp.onnx"));
        save_graph(imported.graph, p("mlp.json"));
        Graph native = load_graph(p("mlp.json"));
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x = rng.uniform_vec(3, -2, 2);
            double want = net.evaluate(Value::vector(x))[0];
            ACHECK(imported.graph.evaluate(Value::vector(x))[0] == want);
            ACHECK(native.evaluate(Value::vector(x))[0] == want);
        }
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    c.report(ok);
    CHECK(ok);
}

TEST_CASE("criterion 8: CLI exit-code contract") {
    Criterion c{8, "cli exit-code contract"};
    bool ok = true;
    fs::path dir = fs::temp_directory_path() / ("hyperspec_acc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto p = [&](const std::string& n) { return (dir / n).string(); };

    // Anchor fixtures.
    {
        GraphBuilder gb;
        onnx::write_model_file(gb.build(gb.affine(gb.input(1), Matrix(1, 1, {-1.0}), {0.0})),
                               p("neg.onnx"));
    }
    {
        GraphBuilder gb;
        onnx::write_model_file(gb.build(gb.affine(gb.input(1), Matrix(1, 1, {1.0}), {0.0})),
                               p("id.onnx"));
    }
    {
        // A network too large for one-shot exact decisions: drives exit 2.
        testutil::Rng rng(9008);
        auto wts = testutil::random_mlp(rng, {2, 8, 8, 2});
        onnx::write_model_file(testutil::mlp_graph(wts), p("big.onnx"));
    }
    {
        std::ofstream f(p("mono.json"));
        f << R"({"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]},
                 "input_index": 1, "output_index": 1, "direction": "non_increasing"})";
        std::ofstream f2(p("lip.json"));
        f2 << R"({"spec": "lipschitz", "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]},
                  "lipschitz_k": 8.0})";
    }

    CliResult sat = run_cli("verify " + p("neg.onnx") + " " + p("mono.json") + " --json");
    ACHECK(sat.exit_code == 0);
    ACHECK(sat.out.find("\"verdict\":\"sat\"") != std::string::npos);

    CliResult vio = run_cli("verify " + p("id.onnx") + " " + p("mono.json") + " --json");
    ACHECK(vio.exit_code == 1);
    ACHECK(vio.out.find("\"verdict\":\"violated\"") != std::string::npos);

    CliResult unk = run_cli("verify " + p("big.onnx") + " " + p("lip.json") +
                            " --json --max-regions 1 --falsify-samples 1");
    ACHECK(unk.exit_code == 2);
    ACHECK(unk.out.find("\"verdict\":\"unknown\"") != std::string::npos);

    CliResult err = run_cli("verify " + p("nothere.onnx") + " " + p("mono.json") + " --json");
    ACHECK(err.exit_code >= 3);

    CliResult fal_hit =
        run_cli("falsify " + p("id.onnx") + " " + p("mono.json") + " --budget 1000 --json");
    ACHECK(fal_hit.exit_code == 1);
    CliResult fal_miss =
        run_cli("falsify " + p("neg.onnx") + " " + p("mono.json") + " --budget 500 --json");
    ACHECK(fal_miss.exit_code == 0);

    CliResult exp = run_cli("export " + p("id.onnx") + " " + p("mono.json") + " " +
                            (dir / "out_").string() + " --json");
    ACHECK(exp.exit_code == 0);
    CliResult ins = run_cli("inspect " + (dir / "out_composed.json").string() + " --json");
    ACHECK(ins.exit_code == 0);

    std::error_code ec;
    fs::remove_all(dir, ec);
    c.report(ok);
    CHECK(ok);
}
