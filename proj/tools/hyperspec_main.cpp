// Command-line front end: verify | falsify | export | inspect.
//
// Exit codes, shared by verify and falsify:
//   0  property satisfied / no witness found within budget
//   1  property violated / witness found
//   2  undecided within budget (verify only)
//   3+ usage or module error (diagnostic on stderr)
//
// Every run prints the result JSON on the first stdout line and a run
// manifest JSON on the second. HYPERSPEC_LOG=debug enables progress notes on
// stderr.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hyperspec/hyperspec.hpp"

namespace hs = hyperspec;
using hs::ordered_json;

namespace {

struct CommonOpts {
    std::string model_path;
    std::string spec_path;
    double tolerance = 0.0;
    std::size_t max_regions = 0;
    std::int64_t max_time_ms = 0;
    std::size_t falsify_samples = 0;
    unsigned workers = 0;
    std::uint64_t seed = 0;
    std::string bound_method;
    std::string split;
    bool oracle = false;
    bool json_only = false;
};

bool log_enabled() {
    const char* v = std::getenv("HYPERSPEC_LOG");
    return v != nullptr && std::string(v) != "quiet" && std::string(v) != "off";
}

void logline(const std::string& s) {
    if (log_enabled()) std::cerr << "[hyperspec] " << s << "\n";
}

// Config precedence: command-line flags > spec-file "config" object > defaults.
hs::VerifyConfig effective_config(const CommonOpts& o, const ordered_json& file_cfg,
                                  const CLI::App* cmd) {
    hs::VerifyConfig cfg;
    auto from_file = [&](const char* key, auto setter) {
        if (file_cfg.is_object() && file_cfg.contains(key)) setter(file_cfg.at(key));
    };
    from_file("tolerance", [&](const ordered_json& v) { cfg.tolerance = v.get<double>(); });
    from_file("max_regions", [&](const ordered_json& v) { cfg.max_regions = v.get<std::size_t>(); });
    from_file("max_time_ms", [&](const ordered_json& v) {
        cfg.max_time = std::chrono::milliseconds(v.get<std::int64_t>());
    });
    from_file("falsify_samples",
              [&](const ordered_json& v) { cfg.falsify_samples = v.get<std::size_t>(); });
    from_file("workers", [&](const ordered_json& v) { cfg.workers = v.get<unsigned>(); });
    from_file("seed", [&](const ordered_json& v) { cfg.seed = v.get<std::uint64_t>(); });
    from_file("bound_method", [&](const ordered_json& v) {
        cfg.bound_method = v.get<std::string>() == "interval" ? hs::BoundMethod::interval
                                                              : hs::BoundMethod::backward_linear;
    });
    from_file("split", [&](const ordered_json& v) {
        cfg.split_strategy = v.get<std::string>() == "bound_guided"
                                 ? hs::SplitStrategy::bound_guided
                                 : hs::SplitStrategy::longest_edge;
    });

    auto passed = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (passed("--tolerance")) cfg.tolerance = o.tolerance;
    if (passed("--max-regions")) cfg.max_regions = o.max_regions;
    if (passed("--max-time")) cfg.max_time = std::chrono::milliseconds(o.max_time_ms);
    if (passed("--falsify-samples")) cfg.falsify_samples = o.falsify_samples;
    if (passed("--workers")) cfg.workers = o.workers;
    if (passed("--seed")) cfg.seed = o.seed;
    if (passed("--bound-method"))
        cfg.bound_method = o.bound_method == "interval" ? hs::BoundMethod::interval
                                                        : hs::BoundMethod::backward_linear;
    if (passed("--split"))
        cfg.split_strategy = o.split == "bound_guided" ? hs::SplitStrategy::bound_guided
                                                       : hs::SplitStrategy::longest_edge;
    return cfg;
}

ordered_json config_to_json(const hs::VerifyConfig& cfg) {
    return ordered_json{
        {"tolerance", cfg.tolerance},
        {"max_regions", cfg.max_regions},
        {"max_time_ms", cfg.max_time.count()},
        {"falsify_samples", cfg.falsify_samples},
        {"workers", cfg.workers},
        {"seed", cfg.seed},
        {"bound_method",
         cfg.bound_method == hs::BoundMethod::interval ? "interval" : "backward_linear"},
        {"split",
         cfg.split_strategy == hs::SplitStrategy::bound_guided ? "bound_guided" : "longest_edge"},
    };
}

void emit(const ordered_json& result, const std::string& command, const CommonOpts& o,
          const hs::VerifyConfig* cfg, std::int64_t wall_ms, const std::string& summary) {
    ordered_json manifest;
    manifest["command"] = command;
    manifest["model"] = o.model_path;
    manifest["spec"] = o.spec_path.empty() ? ordered_json(nullptr) : ordered_json(o.spec_path);
    manifest["config"] = cfg ? config_to_json(*cfg) : ordered_json(nullptr);
    manifest["result"] = result.contains("verdict") ? result.at("verdict") : ordered_json(nullptr);
    manifest["wall_ms"] = wall_ms;
    manifest["version"] = hs::kVersion;
    std::cout << result.dump() << "\n" << manifest.dump() << "\n";
    if (!o.json_only && !summary.empty()) std::cerr << summary << "\n";
}

struct LoadedProblem {
    hs::Graph network;
    hs::NNDH spec;
    hs::ComposedProblem prob;
    ordered_json file_cfg;
};

LoadedProblem load_and_compose(const CommonOpts& o) {
    logline("loading model " + o.model_path);
    hs::Graph network = hs::load_model_any(o.model_path);
    logline("loading spec " + o.spec_path);
    hs::SpecFile sf = hs::load_spec_file(o.spec_path, network.output_dim());
    hs::NNDH spec = hs::build_spec(sf.kind, sf.params);
    logline("composing");
    hs::ComposedProblem prob = hs::self_compose(network, spec);
    return LoadedProblem{std::move(network), std::move(spec), std::move(prob),
                         std::move(sf.config)};
}

int run_verify(const CommonOpts& o, const CLI::App* cmd, const std::string& composed_out) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedProblem lp = load_and_compose(o);
    hs::VerifyConfig cfg = effective_config(o, lp.file_cfg, cmd);
    if (!composed_out.empty()) hs::save_problem(lp.prob, composed_out);

    logline("verifying");
    hs::Verdict verdict = hs::verify(lp.prob, cfg);
    ordered_json vj = hs::verdict_to_json(verdict);

    int exit_code = verdict.kind == hs::Verdict::Kind::satisfied   ? 0
                    : verdict.kind == hs::Verdict::Kind::violated ? 1
                                                                  : 2;
    std::string summary = std::string("verdict: ") + hs::verdict_name(verdict.kind);

    if (o.oracle) {
        logline("cross-checking against the exact enumeration oracle");
        hs::Verdict ov = hs::oracle_verify(lp.prob);
        vj["oracle_verdict"] = hs::verdict_name(ov.kind);
        const bool agree = ov.kind == verdict.kind;
        vj["oracle_agreement"] = agree;
        summary += agree ? " (oracle agrees)" : " (ORACLE DISAGREES)";
        if (!agree) exit_code = 5;
    }

    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    emit(vj, "verify", o, &cfg, wall, summary);
    return exit_code;
}

int run_falsify(const CommonOpts& o, const CLI::App* cmd, std::size_t budget) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedProblem lp = load_and_compose(o);
    hs::VerifyConfig cfg = effective_config(o, lp.file_cfg, cmd);

    auto ce = hs::falsify(lp.prob, budget, cfg.seed, cfg.tolerance);
    ordered_json out;
    std::string summary;
    int exit_code;
    if (ce) {
        hs::Verdict v;
        v.kind = hs::Verdict::Kind::violated;
        v.counterexample = *ce;
        out = hs::verdict_to_json(v);
        summary = "witness found, sat value " + std::to_string(ce->sat_value);
        exit_code = 1;
    } else {
        out["verdict"] = "no_witness";
        out["budget"] = budget;
        summary = "no witness within budget";
        exit_code = 0;
    }
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    emit(out, "falsify", o, &cfg, wall, summary);
    return exit_code;
}

int run_export(const CommonOpts& o, const std::string& out_prefix) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedProblem lp = load_and_compose(o);
    const std::string model_out = out_prefix + "model.onnx";
    const std::string prop_out = out_prefix + "property.vnnlib";
    const std::string composed_out = out_prefix + "composed.json";
    hs::export_problem(lp.prob, model_out, prop_out);
    hs::save_problem(lp.prob, composed_out);
    ordered_json out;
    out["model"] = model_out;
    out["property"] = prop_out;
    out["composed"] = composed_out;
    out["inputs"] = lp.prob.property.input_box.dim();
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    emit(out, "export", o, nullptr, wall, "wrote " + model_out + ", " + prop_out);
    return 0;
}

int run_inspect(const CommonOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    hs::Graph g = hs::load_model_any(o.model_path);
    hs::ValidationReport report = g.validate();
    ordered_json out;
    out["nodes"] = g.node_count();
    ordered_json kinds = ordered_json::object();
    for (const hs::Node& n : g.nodes()) {
        std::string k = hs::kind_name(n.kind);
        kinds[k] = (kinds.contains(k) ? kinds[k].get<int>() : 0) + 1;
    }
    out["kinds"] = std::move(kinds);
    if (g.shapes_known()) {
        out["input_dim"] = g.input_dim();
        out["output_dim"] = g.output_dim();
        out["pwl_units"] = hs::pwl_unit_count(g);
    }
    out["valid"] = report.ok();
    ordered_json viols = ordered_json::array();
    for (const hs::Violation& v : report.violations)
        viols.push_back({{"code", v.code},
                         {"node", v.node == hs::kNoNode ? ordered_json(nullptr)
                                                        : ordered_json(v.node)},
                         {"message", v.message}});
    out["violations"] = std::move(viols);
    // Problem files also carry a property and provenance worth surfacing.
    if (o.model_path.size() >= 5 &&
        o.model_path.substr(o.model_path.size() - 5) == ".json") {
        ordered_json j = hs::load_json_file(o.model_path);
        if (j.contains("property")) {
            out["property_inputs"] = j["property"]["lo"].size();
        }
        if (j.contains("provenance")) {
            out["copies"] = j["provenance"]["copies"];
        }
    }
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    emit(out, "inspect", o, nullptr, wall,
         report.ok() ? "graph is well-formed" : "graph has violations");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperspec: global neural-network specification verifier"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string out_prefix, composed_out;
    std::size_t budget = 10000;

    auto add_common = [&](CLI::App* cmd, bool with_spec) {
        cmd->add_option("model", o.model_path, "network file (.onnx or native .json)")
            ->required();
        if (with_spec)
            cmd->add_option("spec", o.spec_path, "spec description file (JSON)")->required();
        cmd->add_flag("--json", o.json_only, "suppress the human-readable summary");
    };
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--tolerance", o.tolerance, "decision tolerance (default 1e-9)");
        cmd->add_option("--max-regions", o.max_regions, "region budget");
        cmd->add_option("--max-time", o.max_time_ms, "time budget in milliseconds");
        cmd->add_option("--falsify-samples", o.falsify_samples, "global falsification samples");
        cmd->add_option("--workers", o.workers, "worker threads (default 1, deterministic)");
        cmd->add_option("--seed", o.seed, "random seed for sampling search");
        cmd->add_option("--bound-method", o.bound_method, "interval | backward_linear")
            ->check(CLI::IsMember({"interval", "backward_linear"}));
        cmd->add_option("--split", o.split, "longest_edge | bound_guided")
            ->check(CLI::IsMember({"longest_edge", "bound_guided"}));
    };

    CLI::App* verify_cmd = app.add_subcommand("verify", "decide a spec against a network");
    add_common(verify_cmd, true);
    add_config(verify_cmd);
    verify_cmd->add_flag("--oracle", o.oracle, "cross-check with the exact enumeration oracle");
    verify_cmd->add_option("--composed", composed_out, "also write the composed problem JSON");

    CLI::App* falsify_cmd = app.add_subcommand("falsify", "search for a counterexample only");
    add_common(falsify_cmd, true);
    add_config(falsify_cmd);
    falsify_cmd->add_option("--budget", budget, "sampling budget (default 10000)");

    CLI::App* export_cmd = app.add_subcommand("export", "write the composed problem for external verifiers");
    add_common(export_cmd, true);
    export_cmd->add_option("out_prefix", out_prefix, "output path prefix")->required();

    CLI::App* inspect_cmd = app.add_subcommand("inspect", "validate a graph file and print statistics");
    add_common(inspect_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 3;
    }

    try {
        if (app.got_subcommand(verify_cmd)) return run_verify(o, verify_cmd, composed_out);
        if (app.got_subcommand(falsify_cmd)) return run_falsify(o, falsify_cmd, budget);
        if (app.got_subcommand(export_cmd)) return run_export(o, out_prefix);
        if (app.got_subcommand(inspect_cmd)) return run_inspect(o);
    } catch (const hs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 3;
}
