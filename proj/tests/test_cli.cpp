#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// End-to-end CLI tests: spawn the built binary and check the exit-code
// contract (0 satisfied / 1 violated / 2 unknown / >=3 error) plus the JSON
// output shape on the anchor cases.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "hyperspec/io.hpp"
#include "hyperspec/onnx.hpp"

using namespace hyperspec;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(HYPERSPEC_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct Fixture {
    fs::path dir;

    Fixture() {
        dir = fs::temp_directory_path() / ("hyperspec_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);

        // Anchor networks, written in the exchange format.
        write_affine("neg_identity.onnx", -1.0, 0.0);
        write_affine("identity.onnx", 1.0, 0.0);
        write_affine("constant.onnx", 0.0, 0.4);
        write_affine("double.onnx", 2.0, 0.0);

        spec("mono.json", R"({"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]},
                              "input_index": 1, "output_index": 1,
                              "direction": "non_increasing"})");
        spec("rob.json", R"({"spec": "robustness_katz", "domain": {"lo": [0.0], "hi": [1.0]},
                             "delta": 0.1, "epsilon": 0.05})");
        spec("lip2.json", R"({"spec": "lipschitz", "domain": {"lo": [0.0], "hi": [1.0]},
                              "lipschitz_k": 2.0})");
        spec("lip1.json", R"({"spec": "lipschitz", "domain": {"lo": [0.0], "hi": [1.0]},
                              "lipschitz_k": 1.0})");
    }

    ~Fixture() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    void write_affine(const std::string& name, double w, double b) {
        GraphBuilder gb;
        Graph g = gb.build(gb.affine(gb.input(1), Matrix(1, 1, {w}), {b}));
        onnx::write_model_file(g, (dir / name).string());
    }

    void spec(const std::string& name, const std::string& body) {
        std::ofstream f(dir / name);
        f << body;
    }

    std::string p(const std::string& name) const { return (dir / name).string(); }
};

nlohmann::json first_line_json(const std::string& out) {
    auto nl = out.find('\n');
    REQUIRE(nl != std::string::npos);
    return nlohmann::json::parse(out.substr(0, nl));
}

nlohmann::json second_line_json(const std::string& out) {
    auto nl = out.find('\n');
    REQUIRE(nl != std::string::npos);
    auto nl2 = out.find('\n', nl + 1);
    return nlohmann::json::parse(out.substr(nl + 1, nl2 - nl - 1));
}

void check_verdict_schema(const nlohmann::json& j) {
    for (const char* key :
         {"verdict", "certified_lb", "witness", "decoded", "sat_value", "regions", "time_ms"})
        CHECK(j.contains(key));
}

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("cli verify: exit 0 with sat verdict on satisfied anchors") {
    Fixture& f = fixture();
    for (auto [model, spec] : {std::pair{"neg_identity.onnx", "mono.json"},
                               {"constant.onnx", "rob.json"},
                               {"double.onnx", "lip2.json"}}) {
        RunResult r = run_cli("verify " + f.p(model) + " " + f.p(spec) + " --json");
        CHECK(r.exit_code == 0);
        auto j = first_line_json(r.out);
        check_verdict_schema(j);
        CHECK(j["verdict"] == "sat");
        CHECK(j["certified_lb"].get<double>() >= -1e-9);
    }
}

TEST_CASE("cli verify: exit 1 with decoded counterexample on violated anchors") {
    Fixture& f = fixture();
    for (auto [model, spec] : {std::pair{"identity.onnx", "mono.json"},
                               {"identity.onnx", "rob.json"},
                               {"double.onnx", "lip1.json"}}) {
        RunResult r = run_cli("verify " + f.p(model) + " " + f.p(spec) + " --json");
        CHECK(r.exit_code == 1);
        auto j = first_line_json(r.out);
        check_verdict_schema(j);
        CHECK(j["verdict"] == "violated");
        CHECK(j["sat_value"].get<double>() < -1e-9);
        CHECK(j["decoded"]["inputs"].size() == 2);
    }
}

TEST_CASE("cli verify: exit 2 when budgets are exhausted") {
    Fixture& f = fixture();
    // A sat instance with the region budget cut to nothing and the exact leaf
    // suppressed via the interval-only bound method cannot finish; accept 0
    // or 2 but require agreement between verdict and exit code.
    RunResult r = run_cli("verify " + f.p("double.onnx") + " " + f.p("lip2.json") +
                          " --json --max-time 1 --max-regions 1 --falsify-samples 1");
    auto j = first_line_json(r.out);
    if (j["verdict"] == "unknown") {
        CHECK(r.exit_code == 2);
        CHECK(j.contains("regions_remaining"));
    } else {
        CHECK(r.exit_code == 0);
    }
}

TEST_CASE("cli verify: exit >= 3 on errors") {
    Fixture& f = fixture();
    CHECK(run_cli("verify " + f.p("missing.onnx") + " " + f.p("mono.json") + " --json").exit_code >=
          3);
    // Dimension mismatch: 1-D spec against a 1-D model is fine, so corrupt the spec.
    f.spec("bad.json", R"({"spec": "unknown_kind", "domain": {"lo": [0], "hi": [1]}})");
    CHECK(run_cli("verify " + f.p("identity.onnx") + " " + f.p("bad.json") + " --json").exit_code >=
          3);
    CHECK(run_cli("frobnicate").exit_code >= 3);
}

TEST_CASE("cli verify: --oracle cross-check agrees on anchors") {
    Fixture& f = fixture();
    RunResult r =
        run_cli("verify " + f.p("double.onnx") + " " + f.p("lip2.json") + " --json --oracle");
    CHECK(r.exit_code == 0);
    auto j = first_line_json(r.out);
    CHECK(j["oracle_verdict"] == "sat");
    CHECK(j["oracle_agreement"] == true);
}

TEST_CASE("cli falsify: exit 1 on findable witness, 0 otherwise") {
    Fixture& f = fixture();
    RunResult hit =
        run_cli("falsify " + f.p("identity.onnx") + " " + f.p("mono.json") + " --budget 1000 --json");
    CHECK(hit.exit_code == 1);
    CHECK(first_line_json(hit.out)["verdict"] == "violated");

    RunResult miss = run_cli("falsify " + f.p("constant.onnx") + " " + f.p("rob.json") +
                             " --budget 2000 --json");
    CHECK(miss.exit_code == 0);
    CHECK(first_line_json(miss.out)["verdict"] == "no_witness");
}

TEST_CASE("cli falsify: --seed makes runs reproducible byte-for-byte") {
    Fixture& f = fixture();
    const std::string cmd =
        "falsify " + f.p("identity.onnx") + " " + f.p("mono.json") + " --budget 500 --seed 7 --json";
    RunResult a = run_cli(cmd);
    RunResult b = run_cli(cmd);
    CHECK(a.exit_code == b.exit_code);
    CHECK(a.out == b.out);
}

TEST_CASE("cli export: deterministic outputs, inspect reports the composition") {
    Fixture& f = fixture();
    fs::create_directories(f.dir / "out1");
    fs::create_directories(f.dir / "out2");
    RunResult e1 =
        run_cli("export " + f.p("identity.onnx") + " " + f.p("mono.json") + " " + f.p("out1/") +
                " --json");
    RunResult e2 =
        run_cli("export " + f.p("identity.onnx") + " " + f.p("mono.json") + " " + f.p("out2/") +
                " --json");
    CHECK(e1.exit_code == 0);
    CHECK(e2.exit_code == 0);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(f.dir / "out1/model.onnx") == slurp(f.dir / "out2/model.onnx"));
    CHECK(slurp(f.dir / "out1/property.vnnlib") == slurp(f.dir / "out2/property.vnnlib"));
    CHECK(slurp(f.dir / "out1/composed.json") == slurp(f.dir / "out2/composed.json"));

    RunResult ins = run_cli("inspect " + f.p("out1/composed.json") + " --json");
    CHECK(ins.exit_code == 0);
    auto j = first_line_json(ins.out);
    CHECK(j["valid"] == true);
    CHECK(j["copies"] == 2);
    // Composition adds only the input, v slices and one concat over the parts.
    ComposedProblem prob = load_problem((f.dir / "out1/composed.json").string());
    CHECK(j["nodes"].get<std::size_t>() == prob.graph.node_count());
}

TEST_CASE("cli: run manifest is emitted and machine-parseable") {
    Fixture& f = fixture();
    RunResult r = run_cli("verify " + f.p("neg_identity.onnx") + " " + f.p("mono.json") + " --json");
    auto manifest = second_line_json(r.out);
    for (const char* key : {"command", "model", "spec", "config", "result", "wall_ms", "version"})
        CHECK(manifest.contains(key));
    CHECK(manifest["command"] == "verify");
    CHECK(manifest["result"] == "sat");
    CHECK(manifest["config"]["workers"] == 1);
}

TEST_CASE("cli: spec-file config is honored and flags take precedence") {
    Fixture& f = fixture();
    f.spec("cfg.json", R"({"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]},
                           "input_index": 1, "output_index": 1,
                           "direction": "non_increasing",
                           "config": {"seed": 11, "falsify_samples": 123}})");
    RunResult r = run_cli("verify " + f.p("neg_identity.onnx") + " " + f.p("cfg.json") + " --json");
    auto manifest = second_line_json(r.out);
    CHECK(manifest["config"]["seed"] == 11);
    CHECK(manifest["config"]["falsify_samples"] == 123);
    RunResult r2 = run_cli("verify " + f.p("neg_identity.onnx") + " " + f.p("cfg.json") +
                           " --seed 99 --json");
    CHECK(second_line_json(r2.out)["config"]["seed"] == 99);
}
