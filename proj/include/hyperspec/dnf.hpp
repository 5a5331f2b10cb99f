#pragma once

// Compiles a disjunction of conjunctions of index-pair atoms u[k1] >= u[k2]
// into a graph computing  max over clauses of min over atoms of u[k1] - u[k2].
// The compiled value is >= 0 exactly when the formula holds.

#include <cstddef>
#include <vector>

#include "hyperspec/gadgets.hpp"
#include "hyperspec/graph.hpp"

namespace hyperspec {

struct DnfAtom {
    std::size_t k1 = 0;  // asserts u[k1] >= u[k2]
    std::size_t k2 = 0;
};

using DnfClause = std::vector<DnfAtom>;  // conjunction of atoms

struct DnfFormula {
    std::vector<DnfClause> clauses;  // disjunction of clauses
    std::size_t dim = 0;             // length of the vector u

    bool valid() const {
        if (clauses.empty() || dim == 0) return false;
        for (const DnfClause& c : clauses) {
            if (c.empty()) return false;
            for (const DnfAtom& a : c) {
                if (a.k1 >= dim || a.k2 >= dim) return false;
            }
        }
        return true;
    }

    // Direct boolean semantics (reference meaning of the formula).
    bool holds(const std::vector<double>& u) const {
        for (const DnfClause& c : clauses) {
            bool all = true;
            for (const DnfAtom& a : c) all = all && u[a.k1] >= u[a.k2];
            if (all) return true;
        }
        return false;
    }
};

inline Graph compile_dnf(const DnfFormula& formula) {
    if (formula.clauses.empty()) throw SpecError("compile_dnf: formula has no clauses");
    if (!formula.valid()) throw SpecError("compile_dnf: invalid formula (empty clause or index out of range)");

    GraphBuilder b;
    NodeId in = b.input(formula.dim);
    std::vector<NodeId> clause_vals;
    clause_vals.reserve(formula.clauses.size());
    for (const DnfClause& clause : formula.clauses) {
        std::vector<std::size_t> lhs, rhs;
        lhs.reserve(clause.size());
        rhs.reserve(clause.size());
        for (const DnfAtom& a : clause) {
            lhs.push_back(a.k1);
            rhs.push_back(a.k2);
        }
        NodeId diffs = b.subtract(b.select(in, lhs), b.select(in, rhs));
        clause_vals.push_back(detail::append_min_tree(b, diffs));
    }
    NodeId stacked =
        clause_vals.size() == 1 ? clause_vals.front() : b.concat(std::move(clause_vals));
    return b.build(detail::append_max_tree(b, stacked));
}

}  // namespace hyperspec
