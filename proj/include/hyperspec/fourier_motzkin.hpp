#pragma once

// Exact linear-arithmetic decision by Fourier-Motzkin elimination over the
// rationals. Decides feasibility of {A x <= b} within a box and computes the
// exact minimum of an affine objective, with a witness point recovered by
// back-substitution through the saved elimination stages.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "hyperspec/exact.hpp"
#include "hyperspec/rational.hpp"

namespace hyperspec {

struct LinearConstraint {  // sum coeff[j] x_j <= rhs
    std::vector<Rational> coeff;
    Rational rhs;
};

struct FmResult {
    bool feasible = false;
    Rational min_value;             // exact minimum of the objective
    std::vector<Rational> witness;  // point attaining it
};

namespace detail {

// Integer-scaled inequality over the working variables (x vars then t).
struct FmRow {
    std::vector<BigInt> c;
    BigInt rhs;
};

inline FmRow scale_to_integers(const LinearConstraint& in, std::size_t vars) {
    // Multiply by the lcm of all denominators.
    BigInt l(1);
    auto fold = [&](const Rational& r) {
        const BigInt& d = r.den();
        BigInt g = BigInt::gcd(l, d);
        l = l / g * d;
    };
    for (const Rational& r : in.coeff) fold(r);
    fold(in.rhs);
    FmRow row;
    row.c.assign(vars, BigInt(0));
    for (std::size_t j = 0; j < in.coeff.size(); ++j)
        row.c[j] = in.coeff[j].num() * (l / in.coeff[j].den());
    row.rhs = in.rhs.num() * (l / in.rhs.den());
    return row;
}

inline void normalize_row(FmRow& r) {
    BigInt g = r.rhs.abs();
    for (const BigInt& c : r.c) g = BigInt::gcd(g, c.abs());
    if (g.is_zero() || g == BigInt(1)) return;
    for (BigInt& c : r.c) c = c / g;
    r.rhs = r.rhs / g;
}

inline bool row_all_zero(const FmRow& r) {
    for (const BigInt& c : r.c)
        if (!c.is_zero()) return false;
    return true;
}

// A row whose left-hand side cannot exceed rhs anywhere in the box is
// implied by the box rows and can be dropped. Only applies to rows without
// the objective variable (index d), which has no box bounds.
inline bool box_implied(const FmRow& r, const RationalBox& box) {
    const std::size_t d = box.dim();
    if (!r.c[d].is_zero()) return false;
    Rational mx(0);
    for (std::size_t j = 0; j < d; ++j) {
        if (r.c[j].is_zero()) continue;
        Rational c(r.c[j], BigInt(1));
        mx += c * (r.c[j].sign() > 0 ? box.hi[j] : box.lo[j]);
    }
    return mx <= Rational(r.rhs, BigInt(1));
}

// Drop duplicates, dominated rows (same coefficients, larger rhs) and rows
// already implied by the box.
inline void dedupe_rows(std::vector<FmRow>& rows, const RationalBox& box, bool keep_box_rows) {
    std::vector<FmRow> out;
    for (FmRow& r : rows) {
        if (row_all_zero(r) && r.rhs.sign() >= 0) continue;  // trivially true
        if (!keep_box_rows && box_implied(r, box)) continue;
        bool kept = false;
        for (FmRow& o : out) {
            if (o.c == r.c) {
                if (r.rhs < o.rhs) o.rhs = r.rhs;
                kept = true;
                break;
            }
        }
        if (!kept) out.push_back(std::move(r));
    }
    rows = std::move(out);
}

}  // namespace detail

// Minimize `objective` over {rows} ∩ box, exactly. Variables are box
// coordinates; every coordinate is bounded, so the minimum exists whenever
// the polytope is non-empty. Box bounds stay implicit: they join the
// elimination only as virtual rows for the variable being eliminated, and any
// derived row already implied by the box is dropped, which keeps the derived
// systems small.
inline FmResult fm_minimize(const std::vector<LinearConstraint>& rows_in, const RationalBox& box,
                            const RationalAffine& objective) {
    const std::size_t d = box.dim();
    const std::size_t t = d;  // objective variable index
    const std::size_t vars = d + 1;

    std::vector<detail::FmRow> rows;
    rows.reserve(rows_in.size() + 1);
    for (const LinearConstraint& c : rows_in) {
        if (c.coeff.size() != d) throw Error("fm_minimize: constraint dimension mismatch");
        rows.push_back(detail::scale_to_integers(c, vars));
    }
    {
        // objective(x) <= t  encoded as  L*obj.coeff·x - L*t <= -L*obj.constant
        // with L the lcm of the objective's denominators.
        BigInt l(1);
        auto fold = [&](const Rational& q) {
            BigInt g = BigInt::gcd(l, q.den());
            l = l / g * q.den();
        };
        for (const Rational& q : objective.coeff) fold(q);
        fold(objective.constant);
        detail::FmRow orow;
        orow.c.assign(vars, BigInt(0));
        for (std::size_t j = 0; j < d; ++j)
            orow.c[j] = objective.coeff[j].num() * (l / objective.coeff[j].den());
        orow.c[t] = -l;
        orow.rhs = (-objective.constant).num() * (l / objective.constant.den());
        rows.push_back(std::move(orow));
    }
    for (detail::FmRow& r : rows) detail::normalize_row(r);
    detail::dedupe_rows(rows, box, /*keep_box_rows=*/false);

    // Virtual box rows for one variable: x_v <= hi_v and -x_v <= -lo_v.
    auto box_row_hi = [&](std::size_t v) {
        detail::FmRow r;
        r.c.assign(vars, BigInt(0));
        r.c[v] = box.hi[v].den();
        r.rhs = box.hi[v].num();
        return r;
    };
    auto box_row_lo = [&](std::size_t v) {
        detail::FmRow r;
        r.c.assign(vars, BigInt(0));
        r.c[v] = -box.lo[v].den();
        r.rhs = -box.lo[v].num();
        return r;
    };

    struct Stage {
        std::size_t var;
        std::vector<detail::FmRow> rows;  // system before eliminating var (incl. box rows)
    };
    std::vector<Stage> stages;
    std::vector<char> eliminated(vars, 0);
    eliminated[t] = 1;  // never eliminate t

    FmResult result;

    for (std::size_t round = 0; round < d; ++round) {
        // Infeasibility check on constant rows.
        for (const detail::FmRow& r : rows) {
            if (detail::row_all_zero(r) && r.rhs.sign() < 0) return result;  // infeasible
        }
        // Pick the variable with the fewest pos*neg products.
        std::size_t best = vars;
        std::size_t best_cost = SIZE_MAX;
        for (std::size_t v = 0; v < d; ++v) {
            if (eliminated[v]) continue;
            std::size_t pos = 1, neg = 1;  // virtual box rows
            for (const detail::FmRow& r : rows) {
                if (r.c[v].sign() > 0) ++pos;
                if (r.c[v].sign() < 0) ++neg;
            }
            std::size_t cost = pos * neg;
            if (cost < best_cost) {
                best_cost = cost;
                best = v;
            }
        }
        const std::size_t v = best;
        eliminated[v] = 1;

        std::vector<detail::FmRow> next;
        std::vector<detail::FmRow> pos, neg;
        for (const detail::FmRow& r : rows) {
            if (r.c[v].sign() > 0)
                pos.push_back(r);
            else if (r.c[v].sign() < 0)
                neg.push_back(r);
            else
                next.push_back(r);
        }
        pos.push_back(box_row_hi(v));
        neg.push_back(box_row_lo(v));

        {
            Stage st;
            st.var = v;
            st.rows = next;  // zero-coefficient rows are irrelevant but harmless
            for (const detail::FmRow& r : pos) st.rows.push_back(r);
            for (const detail::FmRow& r : neg) st.rows.push_back(r);
            stages.push_back(std::move(st));
        }

        for (const detail::FmRow& p : pos) {
            for (const detail::FmRow& n : neg) {
                const BigInt a = p.c[v];     // > 0
                const BigInt b = (-n.c[v]);  // > 0
                detail::FmRow r;
                r.c.assign(vars, BigInt(0));
                for (std::size_t j = 0; j < vars; ++j) r.c[j] = b * p.c[j] + a * n.c[j];
                r.rhs = b * p.rhs + a * n.rhs;
                detail::normalize_row(r);
                next.push_back(std::move(r));
            }
        }
        detail::dedupe_rows(next, box, /*keep_box_rows=*/false);
        rows = std::move(next);
    }

    // Only t remains. Collect bounds.
    std::optional<Rational> lo, hi;
    for (const detail::FmRow& r : rows) {
        if (r.c[t].is_zero()) {
            if (r.rhs.sign() < 0) return result;  // infeasible
            continue;
        }
        Rational bound(r.rhs, r.c[t]);
        if (r.c[t].sign() < 0) {  // c t <= rhs with c < 0  =>  t >= rhs/c
            if (!lo || bound > *lo) lo = bound;
        } else {
            if (!hi || bound < *hi) hi = bound;
        }
    }
    if (!lo) throw Error("fm_minimize: objective unbounded below");
    if (hi && *hi < *lo) return result;  // infeasible

    result.feasible = true;
    result.min_value = *lo;

    // Back-substitute a witness.
    std::vector<Rational> val(vars, Rational(0));
    val[t] = *lo;
    for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
        const std::size_t v = it->var;
        std::optional<Rational> vlo, vhi;
        for (const detail::FmRow& r : it->rows) {
            if (r.c[v].is_zero()) continue;
            Rational rest = Rational(r.rhs, BigInt(1));
            for (std::size_t j = 0; j < vars; ++j) {
                if (j == v || r.c[j].is_zero()) continue;
                rest -= Rational(r.c[j], BigInt(1)) * val[j];
            }
            Rational bound = rest / Rational(r.c[v], BigInt(1));
            if (r.c[v].sign() > 0) {
                if (!vhi || bound < *vhi) vhi = bound;
            } else {
                if (!vlo || bound > *vlo) vlo = bound;
            }
        }
        if (vlo)
            val[v] = *vlo;
        else if (vhi)
            val[v] = *vhi;
    }
    result.witness.assign(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(d));
    return result;
}

}  // namespace hyperspec
