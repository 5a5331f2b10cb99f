#include <algorithm>
#include <limits>

#include "doctest.h"
#include "hyperspec/dnf.hpp"
#include "testutil.hpp"

using namespace hyperspec;

namespace {

// Independent boolean evaluator used as the oracle for sign agreement.
bool dnf_bool_oracle(const DnfFormula& f, const std::vector<double>& u) {
    for (const auto& clause : f.clauses) {
        bool all = true;
        for (const auto& atom : clause)
            if (!(u[atom.k1] >= u[atom.k2])) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

// Max-min semantics with true min/max (order-free since both are exact).
double dnf_maxmin_oracle(const DnfFormula& f, const std::vector<double>& u) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& clause : f.clauses) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& atom : clause) m = std::min(m, u[atom.k1] - u[atom.k2]);
        best = std::max(best, m);
    }
    return best;
}

DnfFormula random_formula(testutil::Rng& rng, std::size_t max_clauses, std::size_t max_atoms,
                          std::size_t max_dim) {
    DnfFormula f;
    f.dim = 1 + rng.index(max_dim);
    std::size_t nc = 1 + rng.index(max_clauses);
    for (std::size_t c = 0; c < nc; ++c) {
        DnfClause clause;
        std::size_t na = 1 + rng.index(max_atoms);
        for (std::size_t a = 0; a < na; ++a)
            clause.push_back(DnfAtom{rng.index(f.dim), rng.index(f.dim)});
        f.clauses.push_back(std::move(clause));
    }
    return f;
}

}  // namespace

TEST_CASE("compile_dnf: single atom") {
    DnfFormula f{{{DnfAtom{0, 1}}}, 2};
    Graph g = compile_dnf(f);
    CHECK(g.evaluate(Value::vector({3.0, 1.0}))[0] == 2.0);
    CHECK(g.evaluate(Value::vector({1.0, 3.0}))[0] == -2.0);
}

TEST_CASE("compile_dnf: hand-evaluated two-clause formula") {
    // (u1>=u2 and u1>=u3) or (u2>=u1), u = (1, 2, 0) -> max(min(-1, 1), 1) = 1
    DnfFormula f{{{DnfAtom{0, 1}, DnfAtom{0, 2}}, {DnfAtom{1, 0}}}, 3};
    Graph g = compile_dnf(f);
    CHECK(g.evaluate(Value::vector({1.0, 2.0, 0.0}))[0] == 1.0);
}

TEST_CASE("compile_dnf: empty inputs rejected") {
    CHECK_THROWS_AS(compile_dnf(DnfFormula{{}, 3}), SpecError);
    CHECK_THROWS_AS(compile_dnf(DnfFormula{{DnfClause{}}, 3}), SpecError);
    DnfFormula bad{{{DnfAtom{0, 5}}}, 3};
    CHECK_THROWS_AS(compile_dnf(bad), SpecError);
}

TEST_CASE("compile_dnf: sign agreement with boolean oracle on random formulas") {
    testutil::Rng rng(2024);
    for (int fi = 0; fi < 300; ++fi) {
        DnfFormula f = random_formula(rng, 4, 4, 6);
        Graph g = compile_dnf(f);
        for (int t = 0; t < 40; ++t) {
            std::vector<double> u = rng.dyadic_vec(f.dim, -2, 2, 8);
            if (t % 4 == 0 && f.dim >= 2) u[rng.index(f.dim)] = u[rng.index(f.dim)];  // ties
            double v = g.evaluate(Value::vector(u))[0];
            CHECK((v >= 0.0) == dnf_bool_oracle(f, u));
            CHECK(v == dnf_maxmin_oracle(f, u));  // exact on dyadic grids
        }
    }
}

TEST_CASE("compile_dnf: all-tie vector compiles to exactly zero") {
    testutil::Rng rng(9);
    for (int fi = 0; fi < 40; ++fi) {
        DnfFormula f = random_formula(rng, 3, 3, 5);
        Graph g = compile_dnf(f);
        std::vector<double> u(f.dim, 0.75);
        CHECK(g.evaluate(Value::vector(u))[0] == 0.0);
        CHECK(dnf_bool_oracle(f, u));
    }
}
