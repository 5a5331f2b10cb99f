#pragma once

// Exact two-phase simplex over the rationals with Bland's rule. Minimizes an
// affine objective over {A x <= b} intersected with a box. Small dense
// tableaus only; this is a decision primitive for leaf regions, not a
// general-purpose LP solver.

#include <cstddef>
#include <optional>
#include <vector>

#include "hyperspec/exact.hpp"
#include "hyperspec/fourier_motzkin.hpp"
#include "hyperspec/rational.hpp"

namespace hyperspec {

struct LpResult {
    enum class Status { optimal, infeasible } status = Status::infeasible;
    Rational value;
    std::vector<Rational> point;  // in original coordinates
};

namespace detail {

class SimplexTableau {
public:
    // rows: equality system over `ncols` non-negative variables.
    SimplexTableau(std::vector<std::vector<Rational>> rows, std::vector<Rational> rhs,
                   std::vector<std::size_t> basis, std::size_t ncols)
        : t_(std::move(rows)), rhs_(std::move(rhs)), basis_(std::move(basis)), ncols_(ncols) {}

    // Minimize cost over the system; `eligible` masks usable columns.
    // Returns false if unbounded (cannot happen with bounded feasible sets).
    bool minimize(const std::vector<Rational>& cost, const std::vector<char>& eligible) {
        // Reduced cost row: z[j] = cost[j] - cost_B . B^-1 A_j.
        z_.assign(ncols_, Rational(0));
        zrhs_ = Rational(0);
        for (std::size_t j = 0; j < ncols_; ++j) z_[j] = cost[j];
        for (std::size_t r = 0; r < t_.size(); ++r) {
            const Rational& cb = cost[basis_[r]];
            if (cb.is_zero()) continue;
            for (std::size_t j = 0; j < ncols_; ++j) z_[j] -= cb * t_[r][j];
            zrhs_ -= cb * rhs_[r];
        }
        for (;;) {
            std::size_t enter = ncols_;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (eligible[j] && z_[j].sign() < 0) {
                    enter = j;
                    break;  // Bland: smallest index
                }
            }
            if (enter == ncols_) return true;
            std::size_t leave = t_.size();
            std::optional<Rational> best;
            for (std::size_t r = 0; r < t_.size(); ++r) {
                if (t_[r][enter].sign() <= 0) continue;
                Rational ratio = rhs_[r] / t_[r][enter];
                if (!best || ratio < *best ||
                    (ratio == *best && basis_[r] < basis_[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave == t_.size()) return false;  // unbounded
            pivot(leave, enter);
        }
    }

    void pivot(std::size_t r, std::size_t j) {
        const Rational piv = t_[r][j];
        for (std::size_t k = 0; k < ncols_; ++k) t_[r][k] /= piv;
        rhs_[r] /= piv;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (i == r || t_[i][j].is_zero()) continue;
            const Rational f = t_[i][j];
            for (std::size_t k = 0; k < ncols_; ++k) t_[i][k] -= f * t_[r][k];
            rhs_[i] -= f * rhs_[r];
        }
        if (!z_.empty() && !z_[j].is_zero()) {
            const Rational f = z_[j];
            for (std::size_t k = 0; k < ncols_; ++k) z_[k] -= f * t_[r][k];
            zrhs_ -= f * rhs_[r];
        }
        basis_[r] = j;
    }

    Rational objective_value() const { return -zrhs_; }
    const std::vector<std::size_t>& basis() const { return basis_; }
    const std::vector<Rational>& rhs() const { return rhs_; }
    const std::vector<std::vector<Rational>>& rows() const { return t_; }
    std::size_t row_count() const { return t_.size(); }

    void drop_row(std::size_t r) {
        t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(r));
        rhs_.erase(rhs_.begin() + static_cast<std::ptrdiff_t>(r));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    }

private:
    std::vector<std::vector<Rational>> t_;
    std::vector<Rational> rhs_;
    std::vector<std::size_t> basis_;
    std::size_t ncols_;
    std::vector<Rational> z_;
    Rational zrhs_;
};

}  // namespace detail

inline LpResult simplex_minimize(const std::vector<LinearConstraint>& rows_in,
                                 const RationalBox& box, const RationalAffine& objective) {
    const std::size_t d = box.dim();
    LpResult result;

    // Split coordinates into fixed (zero-width) and free ones.
    std::vector<std::size_t> free_idx;
    std::vector<Rational> base(d);
    for (std::size_t j = 0; j < d; ++j) {
        base[j] = box.lo[j];
        if (box.lo[j] != box.hi[j]) free_idx.push_back(j);
    }
    const std::size_t nf = free_idx.size();

    // Constraints over shifted free variables s_j = x_j - lo_j >= 0.
    struct Row {
        std::vector<Rational> a;
        Rational b;
    };
    std::vector<Row> rows;
    for (const LinearConstraint& c : rows_in) {
        Row r;
        r.a.assign(nf, Rational(0));
        r.b = c.rhs;
        for (std::size_t j = 0; j < d; ++j) {
            if (c.coeff[j].is_zero()) continue;
            r.b -= c.coeff[j] * base[j];
        }
        for (std::size_t k = 0; k < nf; ++k) r.a[k] = c.coeff[free_idx[k]];
        rows.push_back(std::move(r));
    }
    for (std::size_t k = 0; k < nf; ++k) {  // s_k <= width
        Row r;
        r.a.assign(nf, Rational(0));
        r.a[k] = Rational(1);
        r.b = box.hi[free_idx[k]] - box.lo[free_idx[k]];
        rows.push_back(std::move(r));
    }

    if (nf == 0) {
        for (const Row& r : rows) {
            if (r.b.sign() < 0) return result;  // fixed point violates a constraint
        }
        result.status = LpResult::Status::optimal;
        result.point = base;
        result.value = objective.eval(base);
        return result;
    }

    // Standard form: one slack per row; artificials where rhs < 0.
    const std::size_t m = rows.size();
    std::vector<std::size_t> art_rows;
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].b.sign() < 0) {
            for (Rational& a : rows[i].a) a = -a;
            rows[i].b = -rows[i].b;
            art_rows.push_back(i);
        } else {
            art_rows.push_back(SIZE_MAX);
        }
    }
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (art_rows[i] != SIZE_MAX) ++n_art;

    const std::size_t col_s = 0;           // structural
    const std::size_t col_u = nf;          // slacks
    const std::size_t col_a = nf + m;      // artificials
    const std::size_t ncols = nf + m + n_art;

    std::vector<std::vector<Rational>> T(m, std::vector<Rational>(ncols, Rational(0)));
    std::vector<Rational> rhs(m);
    std::vector<std::size_t> basis(m);
    std::size_t art_at = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < nf; ++k) T[i][col_s + k] = rows[i].a[k];
        rhs[i] = rows[i].b;
        const bool negated = art_rows[i] != SIZE_MAX;
        T[i][col_u + i] = negated ? Rational(-1) : Rational(1);
        if (negated) {
            T[i][col_a + art_at] = Rational(1);
            basis[i] = col_a + art_at;
            ++art_at;
        } else {
            basis[i] = col_u + i;
        }
    }

    detail::SimplexTableau tab(std::move(T), std::move(rhs), std::move(basis), ncols);

    if (n_art > 0) {
        std::vector<Rational> phase1(ncols, Rational(0));
        for (std::size_t j = col_a; j < ncols; ++j) phase1[j] = Rational(1);
        std::vector<char> eligible(ncols, 1);
        if (!tab.minimize(phase1, eligible)) throw Error("simplex: phase-1 unbounded");
        if (tab.objective_value().sign() > 0) return result;  // infeasible
        // Pivot artificials out of the basis where possible.
        for (std::size_t r = 0; r < tab.row_count();) {
            if (tab.basis()[r] >= col_a) {
                std::size_t j = ncols;
                for (std::size_t k = 0; k < col_a; ++k) {
                    if (!tab.rows()[r][k].is_zero()) {
                        j = k;
                        break;
                    }
                }
                if (j == ncols) {
                    tab.drop_row(r);  // redundant row
                    continue;
                }
                tab.pivot(r, j);
            }
            ++r;
        }
    }

    std::vector<Rational> phase2(ncols, Rational(0));
    for (std::size_t k = 0; k < nf; ++k) phase2[col_s + k] = objective.coeff[free_idx[k]];
    std::vector<char> eligible(ncols, 1);
    for (std::size_t j = col_a; j < ncols; ++j) eligible[j] = 0;
    if (!tab.minimize(phase2, eligible)) throw Error("simplex: unbounded objective over a box");

    std::vector<Rational> s(nf, Rational(0));
    for (std::size_t r = 0; r < tab.row_count(); ++r) {
        if (tab.basis()[r] < nf) s[tab.basis()[r]] = tab.rhs()[r];
    }
    result.status = LpResult::Status::optimal;
    result.point = base;
    for (std::size_t k = 0; k < nf; ++k) result.point[free_idx[k]] = base[free_idx[k]] + s[k];
    result.value = objective.eval(result.point);
    return result;
}

}  // namespace hyperspec
