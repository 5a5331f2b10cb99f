#pragma once

// Small random verification instances: a network plus one of the five spec
// builders, sized so the composed graph stays within the exact oracle's
// unit budget.

#include <optional>

#include "hyperspec/compose.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/specs.hpp"
#include "testutil.hpp"

namespace testutil {

using hyperspec::ComposedProblem;
using hyperspec::Hyperrectangle;
using hyperspec::NNDH;
using hyperspec::SpecKind;
using hyperspec::SpecParams;

struct Instance {
    Graph net;
    NNDH spec;
    ComposedProblem prob;
    std::size_t units = 0;
};

inline Instance make_instance(Rng& rng, SpecKind kind, std::size_t max_units = 12) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<std::size_t> shape;
        SpecParams p;
        switch (kind) {
            case SpecKind::monotonicity: {
                const std::size_t n = 1 + rng.index(2);
                shape = {n, 2 + rng.index(2), 1 + rng.index(2)};
                p.domain = Hyperrectangle::cube(n, 0.0, 1.0);
                p.output_dim = shape.back();
                p.input_index = 1 + rng.index(n);
                p.output_index = 1 + rng.index(shape.back());
                p.direction = rng.index(2) ? hyperspec::MonotonicityDirection::non_increasing
                                           : hyperspec::MonotonicityDirection::non_decreasing;
                break;
            }
            case SpecKind::robustness_katz: {
                const std::size_t n = 1 + rng.index(2);
                shape = {n, 2, 1 + rng.index(2)};
                p.domain = Hyperrectangle::cube(n, 0.0, 1.0);
                p.output_dim = shape.back();
                p.delta = 0.05 + rng.uniform(0.0, 0.25);
                p.epsilon = 0.05 + rng.uniform(0.0, 0.45);
                break;
            }
            case SpecKind::robustness_extra_class: {
                const std::size_t n = 1 + rng.index(2);
                shape = {n, 2, 2};  // one real class + the extra output
                p.domain = Hyperrectangle::cube(n, 0.0, 1.0);
                p.output_dim = 1;
                p.delta = 0.05 + rng.uniform(0.0, 0.25);
                break;
            }
            case SpecKind::lipschitz: {
                const std::size_t n = 1 + rng.index(2);
                shape = {n, 2 + rng.index(2), 1 + rng.index(2)};
                p.domain = Hyperrectangle::cube(n, 0.0, 1.0);
                p.output_dim = shape.back();
                p.lipschitz_k = rng.uniform(0.25, 3.0);
                break;
            }
            case SpecKind::dependency_fairness: {
                const std::size_t n = 2;
                shape = {n, 2, 2};
                std::vector<double> lo{1.0, 0.0}, hi{2.0, 1.0};
                p.domain = Hyperrectangle(Value::vector(lo), Value::vector(hi));
                p.output_dim = 2;
                p.attribute_values = 2;
                break;
            }
        }
        MlpWeights w = random_mlp(rng, shape);
        Graph net = mlp_graph(w);
        NNDH spec = hyperspec::build_spec(kind, p);
        if (net.output_dim() != spec.output_dim) continue;
        ComposedProblem prob = hyperspec::self_compose(net, spec);
        std::size_t units = hyperspec::pwl_unit_count(prob.graph);
        if (units <= max_units)
            return Instance{std::move(net), std::move(spec), std::move(prob), units};
    }
    throw std::runtime_error("make_instance: could not fit the unit budget");
}

}  // namespace testutil
