#include "gridtegs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <vector>

// Primal-dual interior-point solver on the homogeneous self-dual
// embedding (Mehrotra predictor-corrector), with bounded variables kept
// implicit in the scaling matrix. The normal equations A*Theta*A' are
// factored with an up-looking sparse Cholesky over a degree-sorted
// permutation; dispatch programs are near-banded so fill stays small.

namespace gridtegs {

bool g_hsd_trace = false;  // internal debug hook

namespace {

struct Csc {
    int m = 0, n = 0;
    std::vector<int> ptr;  // n+1
    std::vector<int> ind;  // row indices
    std::vector<double> val;
};

double inf_norm(const std::vector<double>& v) {
    double r = 0.0;
    for (double x : v) r = std::max(r, std::fabs(x));
    return r;
}

// y += A x
void mult(const Csc& A, const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 0; j < A.n; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        for (int p = A.ptr[j]; p < A.ptr[j + 1]; ++p) y[A.ind[p]] += A.val[p] * xj;
    }
}

// y += A' x
void mult_t(const Csc& A, const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 0; j < A.n; ++j) {
        double s = 0.0;
        for (int p = A.ptr[j]; p < A.ptr[j + 1]; ++p) s += A.val[p] * x[A.ind[p]];
        y[j] += s;
    }
}

// ---------------------------------------------------------------------------
// Sparse Cholesky of a symmetric positive (semi)definite matrix given in
// full CSC form. analyze() is run once per sparsity pattern; factor() per
// set of numeric values.
// ---------------------------------------------------------------------------
class SparseCholesky {
public:
    // M: full symmetric pattern. perm: new-to-old row order.
    void analyze(const Csc& M, const std::vector<int>& perm);
    // Returns false when the matrix is numerically indefinite beyond repair.
    bool factor(const Csc& M, double static_shift);
    // In-place solve of M x = b (applies the permutation internally).
    void solve(std::vector<double>& b) const;

    int dynamic_bumps = 0;

private:
    int n_ = 0;
    std::vector<int> perm_, iperm_;
    // Pattern of L rows in elimination (topological) order.
    std::vector<int> rowptr_, rowind_;
    // L in CSC.
    std::vector<int> lp_, li_;
    std::vector<double> lx_;
    std::vector<double> diag_;     // L diagonal
    std::vector<int> lnext_;       // fill cursor per column during factor
    // Permuted upper-triangle view of M used during factor.
    std::vector<int> up_ptr_, up_ind_;
    std::vector<int> up_src_;      // index into M.val
};

void SparseCholesky::analyze(const Csc& M, const std::vector<int>& perm) {
    n_ = M.n;
    perm_ = perm;
    iperm_.assign(n_, 0);
    for (int k = 0; k < n_; ++k) iperm_[perm_[k]] = k;

    // Permuted upper triangle (entries with iperm[row] <= k for column k).
    up_ptr_.assign(n_ + 1, 0);
    std::vector<std::vector<std::pair<int, int>>> cols(n_);
    for (int j = 0; j < n_; ++j) {
        const int pj = iperm_[j];
        for (int p = M.ptr[j]; p < M.ptr[j + 1]; ++p) {
            const int pi = iperm_[M.ind[p]];
            if (pi <= pj) cols[pj].push_back({pi, p});
        }
    }
    up_ind_.clear();
    up_src_.clear();
    for (int k = 0; k < n_; ++k) {
        std::sort(cols[k].begin(), cols[k].end());
        up_ptr_[k + 1] = up_ptr_[k] + static_cast<int>(cols[k].size());
        for (auto& e : cols[k]) {
            up_ind_.push_back(e.first);
            up_src_.push_back(e.second);
        }
    }

    // Elimination tree over the permuted pattern.
    std::vector<int> parent(n_, -1), ancestor(n_, -1);
    for (int k = 0; k < n_; ++k) {
        for (int p = up_ptr_[k]; p < up_ptr_[k + 1]; ++p) {
            int i = up_ind_[p];
            while (i != -1 && i < k) {
                const int next = ancestor[i];
                ancestor[i] = k;
                if (next == -1) parent[i] = k;
                i = next;
            }
        }
    }

    // Row patterns of L via ereach in topological order: every pattern
    // node must appear after all of its etree descendants, since those
    // columns push updates into it during the up-looking sweep.
    std::vector<int> mark(n_, -1), stack(n_), scratch(n_);
    std::vector<int> colcount(n_, 0);
    rowptr_.assign(n_ + 1, 0);
    std::vector<std::vector<int>> rows(n_);
    for (int k = 0; k < n_; ++k) {
        mark[k] = k;
        int top = n_;
        for (int p = up_ptr_[k]; p < up_ptr_[k + 1]; ++p) {
            int i = up_ind_[p];
            if (i == k) continue;
            int len = 0;
            while (mark[i] != k) {
                stack[len++] = i;
                mark[i] = k;
                i = parent[i];
            }
            while (len > 0) scratch[--top] = stack[--len];
        }
        rows[k].assign(scratch.begin() + top, scratch.end());
        for (int j : rows[k]) ++colcount[j];
        rowptr_[k + 1] = rowptr_[k] + static_cast<int>(rows[k].size());
    }
    rowind_.clear();
    rowind_.reserve(rowptr_[n_]);
    for (int k = 0; k < n_; ++k)
        for (int j : rows[k]) rowind_.push_back(j);

    lp_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) lp_[j + 1] = lp_[j] + colcount[j];
    li_.assign(lp_[n_], 0);
    lx_.assign(lp_[n_], 0.0);
    diag_.assign(n_, 0.0);
    lnext_.assign(n_, 0);
}

bool SparseCholesky::factor(const Csc& M, double static_shift) {
    std::vector<double> x(n_, 0.0);
    std::fill(lnext_.begin(), lnext_.end(), 0);
    dynamic_bumps = 0;
    double max_diag = static_shift;
    for (int k = 0; k < n_; ++k) {
        // Scatter permuted column k (upper part).
        for (int p = up_ptr_[k]; p < up_ptr_[k + 1]; ++p) x[up_ind_[p]] = M.val[up_src_[p]];
        double d = x[k] + static_shift;
        x[k] = 0.0;
        for (int rp = rowptr_[k]; rp < rowptr_[k + 1]; ++rp) {
            const int j = rowind_[rp];
            const double lkj = x[j] / diag_[j];
            x[j] = 0.0;
            for (int p = lp_[j]; p < lp_[j] + lnext_[j]; ++p) x[li_[p]] -= lx_[p] * lkj;
            d -= lkj * lkj;
            const int slot = lp_[j] + lnext_[j]++;
            li_[slot] = k;
            lx_[slot] = lkj;
        }
        if (!(d > 1e-12 * std::max(1.0, max_diag))) {
            // Rank-deficient pivot (e.g. duplicated rows): drop this
            // elimination direction entirely. A tiny floor here would let
            // round-off cascade multiplicatively through later pivots.
            d = 1e30 * std::max(1.0, max_diag);
            ++dynamic_bumps;
        } else {
            max_diag = std::max(max_diag, d);
        }
        diag_[k] = std::sqrt(d);
    }
    return true;
}

void SparseCholesky::solve(std::vector<double>& b) const {
    std::vector<double> y(n_);
    for (int k = 0; k < n_; ++k) y[k] = b[perm_[k]];
    // Forward: L z = y, column sweep.
    for (int j = 0; j < n_; ++j) {
        y[j] /= diag_[j];
        const double yj = y[j];
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) y[li_[p]] -= lx_[p] * yj;
    }
    // Backward: L' x = z.
    for (int j = n_ - 1; j >= 0; --j) {
        double s = y[j];
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) s -= lx_[p] * y[li_[p]];
        y[j] = s / diag_[j];
    }
    for (int k = 0; k < n_; ++k) b[perm_[k]] = y[k];
}

// ---------------------------------------------------------------------------
// Presolve: rows to equalities with slacks, bounds shifted so every kept
// column satisfies x >= 0 with an optional finite range.
// ---------------------------------------------------------------------------

enum class VarKind : std::uint8_t { Shifted, Negated, Split, Fixed, DroppedBound };

struct VarMap {
    VarKind kind = VarKind::Fixed;
    int col1 = -1, col2 = -1;
    double base = 0.0;  // lower bound, upper bound, or fixed value
};

struct Presolved {
    Csc A;  // m x n, unscaled
    std::vector<double> b, c, range;
    std::vector<char> has_range;
    double c0 = 0.0;
    std::vector<int> row_map;    // presolved row -> user row
    std::vector<VarMap> vmap;    // per user variable
    int num_user_vars = 0;
    bool empty_row_infeasible = false;
    bool dropped_var_unbounded = false;
};

Presolved presolve(const LinearProgram& lp) {
    Presolved ps;
    ps.num_user_vars = lp.num_vars;
    const int m = lp.num_rows();

    // Row- and column-wise views for the reduction fixpoint.
    std::vector<std::vector<std::pair<int, double>>> rows_v(m);
    for (const auto& t : lp.triplets) rows_v[t.row].push_back({t.col, t.value});

    std::vector<double> rhs = lp.row_rhs;
    std::vector<double> lb = lp.lower, ub = lp.upper;
    std::vector<char> row_alive(m, 1);
    std::vector<char> col_fixed(lp.num_vars, 0);
    std::vector<int> live_nnz(m, 0);
    for (int i = 0; i < m; ++i) live_nnz[i] = static_cast<int>(rows_v[i].size());

    std::vector<std::vector<std::pair<int, double>>> cols_view(lp.num_vars);
    for (int i = 0; i < m; ++i)
        for (auto& e : rows_v[i]) cols_view[e.first].push_back({i, e.second});

    const double cross_tol = 1e-9;
    auto fix_col = [&](int j) {
        col_fixed[j] = 1;
        for (auto& e : cols_view[j]) {
            rhs[e.first] -= e.second * lb[j];
            --live_nnz[e.first];
        }
    };

    // Singleton rows tighten bounds; fixed columns substitute into their
    // rows immediately; both repeat until nothing changes. Everything the
    // interior point method sees afterwards has no trivially dependent
    // rows, which keeps the normal equations full rank for this class.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < m; ++i) {
            if (!row_alive[i] || live_nnz[i] != 1) continue;
            int col = -1;
            double a = 0.0;
            for (auto& e : rows_v[i]) {
                if (!col_fixed[e.first]) {
                    col = e.first;
                    a = e.second;
                    break;
                }
            }
            if (col < 0) continue;
            const double v = rhs[i] / a;
            const RowSense sense = lp.row_sense[i];
            const bool upper_side =
                (sense == RowSense::LessEqual && a > 0) || (sense == RowSense::GreaterEqual && a < 0);
            const bool lower_side =
                (sense == RowSense::GreaterEqual && a > 0) || (sense == RowSense::LessEqual && a < 0);
            if (sense == RowSense::Equal || upper_side) ub[col] = std::min(ub[col], v);
            if (sense == RowSense::Equal || lower_side) lb[col] = std::max(lb[col], v);
            row_alive[i] = 0;
            changed = true;
            if (lb[col] > ub[col] + cross_tol * (1.0 + std::fabs(lb[col]))) {
                ps.empty_row_infeasible = true;
                return ps;
            }
            if (lb[col] > ub[col]) lb[col] = ub[col];  // within tolerance
            if (lb[col] == ub[col] && !col_fixed[col]) fix_col(col);
        }
        for (int j = 0; j < lp.num_vars; ++j) {
            if (col_fixed[j]) continue;
            if (lb[j] == ub[j]) {
                fix_col(j);
                changed = true;
            }
        }
    }

    // Column-wise view of the reduced matrix.
    std::vector<std::vector<std::pair<int, double>>> cols(lp.num_vars);
    for (int i = 0; i < m; ++i) {
        if (!row_alive[i]) continue;
        for (auto& e : rows_v[i])
            if (!col_fixed[e.first]) cols[e.first].push_back({i, e.second});
    }
    std::vector<int> row_nnz(m, 0);

    ps.vmap.assign(lp.num_vars, VarMap{});

    struct Col {
        std::vector<std::pair<int, double>> entries;
        double cost = 0.0;
        double range = kInf;
        bool has_range = false;
    };
    std::vector<Col> keep;
    keep.reserve(lp.num_vars + m);

    for (int j = 0; j < lp.num_vars; ++j) {
        const double lo = lb[j], up = ub[j];
        const double cj = lp.objective[j];
        auto& vm = ps.vmap[j];
        if (col_fixed[j]) {
            vm.kind = VarKind::Fixed;
            vm.base = lo;
            ps.c0 += cj * lo;
            continue;
        }
        if (cols[j].empty()) {
            // Unconstrained column: settles at whichever bound the cost
            // prefers; an infinite improving bound makes the LP unbounded.
            vm.kind = VarKind::DroppedBound;
            double v;
            if (cj > 0.0)
                v = lo;
            else if (cj < 0.0)
                v = up;
            else
                v = std::isfinite(lo) ? lo : (std::isfinite(up) ? up : 0.0);
            if (!std::isfinite(v)) {
                ps.dropped_var_unbounded = true;
                v = 0.0;
            }
            vm.base = v;
            ps.c0 += cj * v;
            continue;
        }
        for (auto& e : cols[j]) ++row_nnz[e.first];
        if (std::isfinite(lo)) {
            vm.kind = VarKind::Shifted;
            vm.base = lo;
            vm.col1 = static_cast<int>(keep.size());
            Col col;
            col.entries = cols[j];
            col.cost = cj;
            if (std::isfinite(up)) {
                col.has_range = true;
                col.range = up - lo;
            }
            for (auto& e : col.entries) rhs[e.first] -= e.second * lo;
            ps.c0 += cj * lo;
            keep.push_back(std::move(col));
        } else if (std::isfinite(up)) {
            // x = u - xhat, xhat >= 0
            vm.kind = VarKind::Negated;
            vm.base = up;
            vm.col1 = static_cast<int>(keep.size());
            Col col;
            col.entries = cols[j];
            for (auto& e : col.entries) {
                rhs[e.first] -= e.second * up;
                e.second = -e.second;
            }
            col.cost = -cj;
            ps.c0 += cj * up;
            keep.push_back(std::move(col));
        } else {
            // Free: x = xplus - xminus.
            vm.kind = VarKind::Split;
            vm.col1 = static_cast<int>(keep.size());
            Col plus;
            plus.entries = cols[j];
            plus.cost = cj;
            keep.push_back(plus);
            vm.col2 = static_cast<int>(keep.size());
            Col minus;
            minus.entries = cols[j];
            for (auto& e : minus.entries) e.second = -e.second;
            minus.cost = -cj;
            keep.push_back(std::move(minus));
        }
    }

    // Slack columns turn every kept row into an equality.
    for (int i = 0; i < m; ++i) {
        if (!row_alive[i] || row_nnz[i] == 0) continue;
        if (lp.row_sense[i] == RowSense::Equal) continue;
        Col col;
        col.entries = {{i, lp.row_sense[i] == RowSense::LessEqual ? 1.0 : -1.0}};
        col.cost = 0.0;
        ++row_nnz[i];
        keep.push_back(std::move(col));
    }

    // Live rows that lost all their entries are consistency checks.
    std::vector<int> new_row(m, -1);
    const double empty_tol = 1e-9;
    for (int i = 0; i < m; ++i) {
        if (!row_alive[i]) continue;
        if (row_nnz[i] > 0) {
            new_row[i] = static_cast<int>(ps.row_map.size());
            ps.row_map.push_back(i);
            continue;
        }
        const double r = rhs[i];
        const double tol = empty_tol * (1.0 + std::fabs(lp.row_rhs[i]));
        const bool ok = (lp.row_sense[i] == RowSense::Equal && std::fabs(r) <= tol) ||
                        (lp.row_sense[i] == RowSense::LessEqual && r >= -tol) ||
                        (lp.row_sense[i] == RowSense::GreaterEqual && r <= tol);
        if (!ok) ps.empty_row_infeasible = true;
    }

    const int n = static_cast<int>(keep.size());
    const int mm = static_cast<int>(ps.row_map.size());
    ps.A.m = mm;
    ps.A.n = n;
    ps.A.ptr.assign(n + 1, 0);
    ps.c.assign(n, 0.0);
    ps.range.assign(n, kInf);
    ps.has_range.assign(n, 0);
    for (int j = 0; j < n; ++j) {
        ps.A.ptr[j + 1] = ps.A.ptr[j] + static_cast<int>(keep[j].entries.size());
        ps.c[j] = keep[j].cost;
        ps.range[j] = keep[j].range;
        ps.has_range[j] = keep[j].has_range ? 1 : 0;
    }
    ps.A.ind.reserve(ps.A.ptr[n]);
    ps.A.val.reserve(ps.A.ptr[n]);
    for (int j = 0; j < n; ++j) {
        for (auto& e : keep[j].entries) {
            ps.A.ind.push_back(new_row[e.first]);
            ps.A.val.push_back(e.second);
        }
    }
    ps.b.assign(mm, 0.0);
    for (int i = 0; i < mm; ++i) ps.b[i] = rhs[ps.row_map[i]];
    return ps;
}

// ---------------------------------------------------------------------------
// The homogeneous self-dual solver proper.
// ---------------------------------------------------------------------------

struct HsdResult {
    LpStatus status = LpStatus::IterationLimit;
    std::vector<double> x;  // presolved primal (already divided by tau)
    std::vector<double> y;  // row duals (divided by tau)
    int iterations = 0;
};

class HsdSolver {
public:
    HsdSolver(const Presolved& ps, const SolveOptions& opt) : ps_(ps), opt_(opt) {}
    HsdResult run();

private:
    void build_scaling();
    void build_normal_pattern();
    void form_normal(const std::vector<double>& theta);
    void solve_normal(std::vector<double>& rhs) const;

    const Presolved& ps_;
    const SolveOptions& opt_;

    // Scaled copy of the data.
    Csc A_;
    std::vector<double> b_, c_, range_;
    std::vector<double> row_scale_, col_scale_;
    double bscale_ = 1.0, cscale_ = 1.0;
    std::vector<int> uvars_;  // columns with finite range

    Csc M_;                      // normal matrix, full symmetric
    std::vector<int> pair_dst_;  // scatter map: per column pair -> M.val slot
    std::vector<int> diag_pos_;
    SparseCholesky chol_;
    double shift_ = 0.0;  // diagonal regularization applied to M_
};

void HsdSolver::build_scaling() {
    const int m = ps_.A.m, n = ps_.A.n;
    A_ = ps_.A;
    row_scale_.assign(m, 1.0);
    col_scale_.assign(n, 1.0);

    // Ruiz equilibration on the scaled copy.
    std::vector<double> rmax(m), cmax(n);
    for (int pass = 0; pass < 8; ++pass) {
        std::fill(rmax.begin(), rmax.end(), 0.0);
        std::fill(cmax.begin(), cmax.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            for (int p = A_.ptr[j]; p < A_.ptr[j + 1]; ++p) {
                const double a = std::fabs(A_.val[p]);
                rmax[A_.ind[p]] = std::max(rmax[A_.ind[p]], a);
                cmax[j] = std::max(cmax[j], a);
            }
        }
        double worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::max(worst, std::fabs(rmax[i] - 1.0));
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::fabs(cmax[j] - 1.0));
        if (worst < 0.1) break;
        for (int i = 0; i < m; ++i) rmax[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
        for (int j = 0; j < n; ++j) cmax[j] = cmax[j] > 0.0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
        for (int j = 0; j < n; ++j) {
            for (int p = A_.ptr[j]; p < A_.ptr[j + 1]; ++p)
                A_.val[p] *= rmax[A_.ind[p]] * cmax[j];
        }
        for (int i = 0; i < m; ++i) row_scale_[i] *= rmax[i];
        for (int j = 0; j < n; ++j) col_scale_[j] *= cmax[j];
    }

    b_.assign(m, 0.0);
    for (int i = 0; i < m; ++i) b_[i] = ps_.b[i] * row_scale_[i];
    c_.assign(n, 0.0);
    range_.assign(n, kInf);
    for (int j = 0; j < n; ++j) {
        c_[j] = ps_.c[j] * col_scale_[j];
        if (ps_.has_range[j]) {
            range_[j] = ps_.range[j] / col_scale_[j];
            uvars_.push_back(j);
        }
    }
    bscale_ = std::max(1.0, inf_norm(b_));
    for (int j : uvars_) bscale_ = std::max(bscale_, std::fabs(range_[j]));
    cscale_ = std::max(1.0, inf_norm(c_));
    for (double& v : b_) v /= bscale_;
    for (double& v : c_) v /= cscale_;
    for (int j : uvars_) range_[j] /= bscale_;
}

void HsdSolver::build_normal_pattern() {
    const int m = A_.m, n = A_.n;
    std::vector<std::vector<int>> cols(m);
    for (int j = 0; j < n; ++j) {
        for (int p = A_.ptr[j]; p < A_.ptr[j + 1]; ++p) {
            for (int q = A_.ptr[j]; q < A_.ptr[j + 1]; ++q)
                cols[A_.ind[q]].push_back(A_.ind[p]);
        }
    }
    M_.m = M_.n = m;
    M_.ptr.assign(m + 1, 0);
    M_.ind.clear();
    for (int j = 0; j < m; ++j) {
        auto& cj = cols[j];
        std::sort(cj.begin(), cj.end());
        cj.erase(std::unique(cj.begin(), cj.end()), cj.end());
        // ensure the diagonal exists even for empty rows
        if (!std::binary_search(cj.begin(), cj.end(), j))
            cj.insert(std::lower_bound(cj.begin(), cj.end(), j), j);
        M_.ptr[j + 1] = M_.ptr[j] + static_cast<int>(cj.size());
        for (int i : cj) M_.ind.push_back(i);
    }
    M_.val.assign(M_.ind.size(), 0.0);

    diag_pos_.assign(m, 0);
    for (int j = 0; j < m; ++j) {
        for (int p = M_.ptr[j]; p < M_.ptr[j + 1]; ++p)
            if (M_.ind[p] == j) diag_pos_[j] = p;
    }

    // Scatter map for fast numeric refill.
    pair_dst_.clear();
    std::vector<int> lookup(m, -1);
    for (int j = 0; j < n; ++j) {
        for (int q = A_.ptr[j]; q < A_.ptr[j + 1]; ++q) {
            const int cq = A_.ind[q];
            for (int p = M_.ptr[cq]; p < M_.ptr[cq + 1]; ++p) lookup[M_.ind[p]] = p;
            for (int p = A_.ptr[j]; p < A_.ptr[j + 1]; ++p)
                pair_dst_.push_back(lookup[A_.ind[p]]);
        }
    }

    // Ordering: stable sort by pattern degree pushes the few dense rows
    // (e.g. a system-wide emissions row) to the end; banded structure is
    // preserved for everything else.
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    std::vector<int> degree(m);
    for (int i = 0; i < m; ++i) degree[i] = M_.ptr[i + 1] - M_.ptr[i];
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int bb) { return degree[a] < degree[bb]; });
    chol_.analyze(M_, perm);
}

void HsdSolver::form_normal(const std::vector<double>& theta) {
    std::fill(M_.val.begin(), M_.val.end(), 0.0);
    std::size_t t = 0;
    const int n = A_.n;
    for (int j = 0; j < n; ++j) {
        const double th = theta[j];
        for (int q = A_.ptr[j]; q < A_.ptr[j + 1]; ++q) {
            const double av = A_.val[q] * th;
            for (int p = A_.ptr[j]; p < A_.ptr[j + 1]; ++p)
                M_.val[pair_dst_[t++]] += av * A_.val[p];
        }
    }
}

void HsdSolver::solve_normal(std::vector<double>& rhs) const {
    // Cholesky solve plus monotone iterative refinement against the
    // regularized normal matrix M + shift*I (always consistent, so
    // refinement cannot amplify a null-space component when M itself is
    // rank deficient, e.g. for parallel rows of infeasible programs).
    std::vector<double> x = rhs;
    chol_.solve(x);
    std::vector<double> r(rhs.size()), xtry;
    double best = kInf;
    for (int round = 0; round < 3; ++round) {
        for (int j = 0; j < M_.n; ++j) {
            double s = shift_ * x[j];
            for (int p = M_.ptr[j]; p < M_.ptr[j + 1]; ++p) s += M_.val[p] * x[M_.ind[p]];
            r[j] = rhs[j] - s;
        }
        const double rn = inf_norm(r);
        if (round == 0 || rn < best) {
            best = rn;
            xtry = x;
        } else {
            x = xtry;  // revert non-improving round
            break;
        }
        if (rn <= 1e-14 * std::max(1.0, inf_norm(rhs))) break;
        chol_.solve(r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += r[i];
    }
    rhs = x;
}

HsdResult HsdSolver::run() {
    build_scaling();
    build_normal_pattern();

    const int m = A_.m, n = A_.n;
    const auto& U = uvars_;
    const double nm = static_cast<double>(n + static_cast<int>(U.size()) + 1);

    // Starting point: interior by construction; ranged variables start at
    // the middle of their interval so the U-row is exactly satisfied.
    std::vector<double> x(n, 1.0), z(n, 1.0), y(m, 0.0);
    std::vector<double> w(n, 1.0), q(n, 0.0);
    for (int j : U) {
        x[j] = 0.5 * range_[j];
        w[j] = 0.5 * range_[j];
        if (x[j] <= 0.0) x[j] = w[j] = 0.5;  // degenerate tiny range
        q[j] = 1.0;
    }
    double tau = 1.0, kappa = 1.0;

    std::vector<double> rP(m), rD(n), rU(n), theta(n), chat(n), rdhat(n);
    std::vector<double> dy1(m), dy2(m), dx1(n), dx2(n);
    std::vector<double> dx(n), dyv(m), dz(n), dw(n), dq(n);
    std::vector<double> rXZ(n), rWQ(n);
    std::vector<double> ax(m), aty(n);

    double mu0 = 0.0;
    double best_metric = kInf;
    int stall = 0;
    HsdResult out;

    const double bnorm = 1.0 + inf_norm(b_);
    const double cnorm = 1.0 + inf_norm(c_);

    for (int iter = 0; iter < opt_.max_iterations; ++iter) {
        out.iterations = iter;
        // --- residuals ---
        std::fill(ax.begin(), ax.end(), 0.0);
        mult(A_, x, ax);
        for (int i = 0; i < m; ++i) rP[i] = b_[i] * tau - ax[i];
        std::fill(aty.begin(), aty.end(), 0.0);
        mult_t(A_, y, aty);
        double rq_dot = 0.0;
        for (int j = 0; j < n; ++j) rD[j] = c_[j] * tau - aty[j] - z[j];
        for (int j : U) {
            rD[j] += q[j];
            rU[j] = range_[j] * tau - x[j] - w[j];
            rq_dot += range_[j] * q[j];
        }
        double cx = 0.0, by = 0.0;
        for (int j = 0; j < n; ++j) cx += c_[j] * x[j];
        for (int i = 0; i < m; ++i) by += b_[i] * y[i];
        const double rG = cx - by + rq_dot + kappa;

        double xz = 0.0, wq = 0.0;
        for (int j = 0; j < n; ++j) xz += x[j] * z[j];
        for (int j : U) wq += w[j] * q[j];
        const double mu = (xz + wq + tau * kappa) / nm;
        if (iter == 0) mu0 = std::max(mu, 1e-16);

        // --- convergence ---
        double unorm = 0.0;
        for (int j : U) unorm = std::max(unorm, std::fabs(rU[j]));
        const double pfeas = std::max(inf_norm(rP), unorm) / (tau * bnorm);
        const double dfeas = inf_norm(rD) / (tau * cnorm);
        const double pobj = cx / tau, dobj = (by - rq_dot) / tau;
        const double gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj) + std::fabs(dobj));
        if (pfeas <= opt_.feas_tol && dfeas <= opt_.feas_tol && gap <= opt_.opt_tol) {
            out.status = LpStatus::Optimal;
            // Map back to the presolved (unscaled) space.
            out.x.assign(n, 0.0);
            for (int j = 0; j < n; ++j) out.x[j] = (x[j] / tau) * col_scale_[j] * bscale_;
            out.y.assign(m, 0.0);
            for (int i = 0; i < m; ++i) out.y[i] = (y[i] / tau) * row_scale_[i] * cscale_;
            return out;
        }

        if (g_hsd_trace) {
            std::fprintf(stderr,
                         "it=%3d mu=%9.2e tau=%9.2e kappa=%9.2e pfeas=%9.2e dfeas=%9.2e "
                         "gap=%9.2e pobj=%12.5e dobj=%12.5e\n",
                         iter, mu, tau, kappa, pfeas, dfeas, gap, pobj, dobj);
        }

        const double metric = std::max({pfeas, dfeas, gap});
        if (metric < 0.95 * best_metric) {
            best_metric = metric;
            stall = 0;
        } else if (++stall > opt_.stall_iterations) {
            break;
        }

        // --- infeasibility / unboundedness certificates ---
        if (tau <= 1e-9 * std::max(1.0, kappa) || mu <= 1e-14 * mu0) {
            // Dual ray: A'y + z - E'q = 0 with b'y - r'q > 0.
            double ray_norm = std::max(inf_norm(y), inf_norm(z));
            for (int j : U) ray_norm = std::max(ray_norm, std::fabs(q[j]));
            double dres = 0.0;
            for (int j = 0; j < n; ++j) {
                double v = aty[j] + z[j];
                if (ps_.has_range[j]) v -= q[j];
                dres = std::max(dres, std::fabs(v));
            }
            const double ray_obj = by - rq_dot;
            if (ray_norm > 0 && ray_obj > 1e-8 * std::max(1.0, ray_norm) &&
                dres <= 1e-7 * std::max(1.0, ray_norm)) {
                out.status = LpStatus::Infeasible;
                return out;
            }
            // Primal ray: A x = 0, x_U + w = 0, c'x < 0.
            double xnorm = inf_norm(x);
            double pres = inf_norm(ax);
            double ures = 0.0;
            for (int j : U) ures = std::max(ures, std::fabs(x[j] + w[j]));
            if (xnorm > 0 && cx < -1e-8 * std::max(1.0, xnorm) &&
                std::max(pres, ures) <= 1e-7 * std::max(1.0, xnorm)) {
                out.status = LpStatus::Unbounded;
                return out;
            }
            if (tau <= 1e-12 * std::max(1.0, kappa)) break;  // hopeless
        }

        // --- scaling matrix and factorization ---
        for (int j = 0; j < n; ++j) {
            double phi = z[j] / x[j];
            if (ps_.has_range[j]) phi += q[j] / w[j];
            theta[j] = 1.0 / phi;
            chat[j] = c_[j] - (ps_.has_range[j] ? (q[j] / w[j]) * range_[j] : 0.0);
        }
        form_normal(theta);
        double mdiag = 0.0;
        for (int i = 0; i < m; ++i) mdiag = std::max(mdiag, M_.val[diag_pos_[i]]);
        shift_ = 1e-12 * std::max(1.0, mdiag);
        if (!chol_.factor(M_, shift_)) break;

        // dtau column: M dy2 = b + A Theta chat
        for (int i = 0; i < m; ++i) dy2[i] = b_[i];
        {
            std::vector<double> tc(n);
            for (int j = 0; j < n; ++j) tc[j] = theta[j] * chat[j];
            mult(A_, tc, dy2);
        }
        solve_normal(dy2);
        std::fill(dx2.begin(), dx2.end(), 0.0);
        mult_t(A_, dy2, dx2);
        for (int j = 0; j < n; ++j) dx2[j] = theta[j] * (dx2[j] - chat[j]);

        auto direction = [&](double eta, double sigma_mu, const std::vector<double>* corr_x,
                             const std::vector<double>* corr_z, const std::vector<double>* corr_w,
                             const std::vector<double>* corr_q, double corr_tk, double& dtau,
                             double& dkappa) {
            for (int j = 0; j < n; ++j) {
                rXZ[j] = sigma_mu - x[j] * z[j] - (corr_x ? (*corr_x)[j] * (*corr_z)[j] : 0.0);
            }
            for (int j : U)
                rWQ[j] = sigma_mu - w[j] * q[j] - (corr_w ? (*corr_w)[j] * (*corr_q)[j] : 0.0);
            const double rTK = sigma_mu - tau * kappa - corr_tk;

            for (int j = 0; j < n; ++j) {
                rdhat[j] = eta * rD[j] - rXZ[j] / x[j];
                if (ps_.has_range[j])
                    rdhat[j] += rWQ[j] / w[j] - (q[j] / w[j]) * (eta * rU[j]);
            }
            // M dy1 = eta rP + A Theta rdhat
            for (int i = 0; i < m; ++i) dy1[i] = eta * rP[i];
            {
                std::vector<double> tr(n);
                for (int j = 0; j < n; ++j) tr[j] = theta[j] * rdhat[j];
                mult(A_, tr, dy1);
            }
            solve_normal(dy1);
            std::fill(dx1.begin(), dx1.end(), 0.0);
            mult_t(A_, dy1, dx1);
            for (int j = 0; j < n; ++j) dx1[j] = theta[j] * (dx1[j] - rdhat[j]);

            // Scalar equation for dtau.
            double g_q = 0.0, g_u = 0.0, rho = 0.0;
            for (int j : U) {
                g_q += range_[j] * rWQ[j] / w[j];
                g_u += range_[j] * (q[j] / w[j]) * (eta * rU[j]);
                rho += range_[j] * range_[j] * q[j] / w[j];
            }
            double cs_dx1 = 0.0, cs_dx2 = 0.0, b_dy1 = 0.0, b_dy2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double cs = c_[j] + (ps_.has_range[j] ? range_[j] * q[j] / w[j] : 0.0);
                cs_dx1 += cs * dx1[j];
                cs_dx2 += cs * dx2[j];
            }
            for (int i = 0; i < m; ++i) {
                b_dy1 += b_[i] * dy1[i];
                b_dy2 += b_[i] * dy2[i];
            }
            const double den = -cs_dx2 + b_dy2 + rho + kappa / tau;
            const double num = eta * rG + g_q - g_u + rTK / tau + cs_dx1 - b_dy1;
            dtau = den != 0.0 ? num / den : 0.0;

            for (int j = 0; j < n; ++j) dx[j] = dx1[j] + dtau * dx2[j];
            for (int i = 0; i < m; ++i) dyv[i] = dy1[i] + dtau * dy2[i];
            for (int j : U) dw[j] = eta * rU[j] + range_[j] * dtau - dx[j];
            for (int j = 0; j < n; ++j) dz[j] = (rXZ[j] - z[j] * dx[j]) / x[j];
            for (int j : U) dq[j] = (rWQ[j] - q[j] * dw[j]) / w[j];
            dkappa = (rTK - kappa * dtau) / tau;
        };

        auto max_step = [&](double dtau, double dkappa) {
            double a = kInf;
            for (int j = 0; j < n; ++j) {
                if (dx[j] < 0.0) a = std::min(a, -x[j] / dx[j]);
                if (dz[j] < 0.0) a = std::min(a, -z[j] / dz[j]);
            }
            for (int j : U) {
                if (dw[j] < 0.0) a = std::min(a, -w[j] / dw[j]);
                if (dq[j] < 0.0) a = std::min(a, -q[j] / dq[j]);
            }
            if (dtau < 0.0) a = std::min(a, -tau / dtau);
            if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
            return a;
        };

        // Predictor (affine).
        double dtau_a = 0.0, dkappa_a = 0.0;
        direction(1.0, 0.0, nullptr, nullptr, nullptr, nullptr, 0.0, dtau_a, dkappa_a);
        const double alpha_aff = std::min(1.0, max_step(dtau_a, dkappa_a));

        double mu_aff = 0.0;
        for (int j = 0; j < n; ++j)
            mu_aff += (x[j] + alpha_aff * dx[j]) * (z[j] + alpha_aff * dz[j]);
        for (int j : U) mu_aff += (w[j] + alpha_aff * dw[j]) * (q[j] + alpha_aff * dq[j]);
        mu_aff += (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a);
        mu_aff /= nm;
        double sigma = mu_aff / mu;
        sigma = sigma * sigma * sigma;
        sigma = std::min(0.99, std::max(1e-8, sigma));

        // Corrector (combined direction); reuses the factorization.
        std::vector<double> ax_c = dx, az_c = dz, aw_c = dw, aq_c = dq;
        const double corr_tk = dtau_a * dkappa_a;
        double dtau_c = 0.0, dkappa_c = 0.0;
        direction(1.0 - sigma, sigma * mu, &ax_c, &az_c, &aw_c, &aq_c, corr_tk, dtau_c, dkappa_c);

        double alpha = std::min(1.0, 0.99 * max_step(dtau_c, dkappa_c));
        if (!(alpha > 0.0) || !std::isfinite(alpha)) break;

        for (int j = 0; j < n; ++j) {
            x[j] += alpha * dx[j];
            z[j] += alpha * dz[j];
        }
        for (int j : U) {
            w[j] += alpha * dw[j];
            q[j] += alpha * dq[j];
        }
        for (int i = 0; i < m; ++i) y[i] += alpha * dyv[i];
        tau += alpha * dtau_c;
        kappa += alpha * dkappa_c;
    }

    out.status = LpStatus::IterationLimit;
    return out;
}

// ---------------------------------------------------------------------------
// Post-solve equality polish in the presolved (unscaled) space.
// ---------------------------------------------------------------------------
void polish_point(const Presolved& ps, std::vector<double>& xhat, double feas_tol) {
    const int m = ps.A.m, n = ps.A.n;
    if (m == 0 || n == 0) return;

    std::vector<char> pinned(n, 0);
    for (int round = 0; round < 2; ++round) {
        for (int j = 0; j < n; ++j) {
            const double r = ps.has_range[j] ? ps.range[j] : kInf;
            const double tol = 1e-6 * (1.0 + (std::isfinite(r) ? std::fabs(r) : 0.0));
            if (xhat[j] <= tol) {
                xhat[j] = 0.0;
                pinned[j] = 1;
            } else if (std::isfinite(r) && r - xhat[j] <= tol) {
                xhat[j] = r;
                pinned[j] = 1;
            } else {
                pinned[j] = 0;
            }
        }
        std::vector<double> resid = ps.b;
        for (int j = 0; j < n; ++j) {
            const double xj = xhat[j];
            if (xj == 0.0) continue;
            for (int p = ps.A.ptr[j]; p < ps.A.ptr[j + 1]; ++p)
                resid[ps.A.ind[p]] -= ps.A.val[p] * xj;
        }
        if (inf_norm(resid) <= 1e-12 * (1.0 + inf_norm(ps.b))) return;

        // Least-norm correction over free columns: solve
        // (A_F A_F' + delta I) u = resid, delta small; correction = A_F' u.
        Csc Mn;
        std::vector<std::vector<std::pair<int, double>>> cols(m);
        for (int j = 0; j < n; ++j) {
            if (pinned[j]) continue;
            for (int p = ps.A.ptr[j]; p < ps.A.ptr[j + 1]; ++p) {
                for (int p2 = ps.A.ptr[j]; p2 < ps.A.ptr[j + 1]; ++p2)
                    cols[ps.A.ind[p2]].push_back({ps.A.ind[p], ps.A.val[p] * ps.A.val[p2]});
            }
        }
        Mn.m = Mn.n = m;
        Mn.ptr.assign(m + 1, 0);
        for (int i = 0; i < m; ++i) {
            auto& ci = cols[i];
            std::sort(ci.begin(), ci.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::pair<int, double>> merged;
            for (auto& e : ci) {
                if (!merged.empty() && merged.back().first == e.first)
                    merged.back().second += e.second;
                else
                    merged.push_back(e);
            }
            bool has_diag = false;
            for (auto& e : merged)
                if (e.first == i) has_diag = true;
            if (!has_diag)
                merged.insert(std::lower_bound(merged.begin(), merged.end(),
                                               std::make_pair(i, 0.0),
                                               [](const auto& a, const auto& b) {
                                                   return a.first < b.first;
                                               }),
                              {i, 0.0});
            ci.assign(merged.begin(), merged.end());
            Mn.ptr[i + 1] = Mn.ptr[i] + static_cast<int>(ci.size());
        }
        for (int i = 0; i < m; ++i) {
            for (auto& e : cols[i]) {
                Mn.ind.push_back(e.first);
                Mn.val.push_back(e.second);
            }
        }
        double mdiag = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int p = Mn.ptr[i]; p < Mn.ptr[i + 1]; ++p)
                if (Mn.ind[p] == i) mdiag = std::max(mdiag, Mn.val[p]);
        }
        SparseCholesky chol;
        std::vector<int> perm(m);
        for (int i = 0; i < m; ++i) perm[i] = i;
        std::vector<int> degree(m);
        for (int i = 0; i < m; ++i) degree[i] = Mn.ptr[i + 1] - Mn.ptr[i];
        std::stable_sort(perm.begin(), perm.end(),
                         [&](int a, int b) { return degree[a] < degree[b]; });
        chol.analyze(Mn, perm);
        const double shift = std::max(1e-12, 1e-12 * mdiag);
        chol.factor(Mn, shift);
        std::vector<double> u = resid;
        chol.solve(u);
        // one refinement round against the regularized matrix
        {
            std::vector<double> r2(m, 0.0);
            for (int i = 0; i < m; ++i) {
                double s = shift * u[i];
                for (int p = Mn.ptr[i]; p < Mn.ptr[i + 1]; ++p) s += Mn.val[p] * u[Mn.ind[p]];
                r2[i] = resid[i] - s;
            }
            chol.solve(r2);
            for (int i = 0; i < m; ++i) u[i] += r2[i];
        }

        bool ok = true;
        std::vector<double> delta(n, 0.0);
        for (int j = 0; j < n; ++j) {
            if (pinned[j]) continue;
            double s = 0.0;
            for (int p = ps.A.ptr[j]; p < ps.A.ptr[j + 1]; ++p) s += ps.A.val[p] * u[ps.A.ind[p]];
            delta[j] = s;
            const double nv = xhat[j] + s;
            const double r = ps.has_range[j] ? ps.range[j] : kInf;
            if (nv < -1e-9 || (std::isfinite(r) && nv > r + 1e-9)) ok = false;
        }
        double cdelta = 0.0, cx = 0.0;
        for (int j = 0; j < n; ++j) {
            cdelta += ps.c[j] * delta[j];
            cx += ps.c[j] * xhat[j];
        }
        if (!ok || std::fabs(cdelta) > feas_tol * (1.0 + std::fabs(cx))) return;
        for (int j = 0; j < n; ++j) {
            xhat[j] = std::max(0.0, xhat[j] + delta[j]);
            if (ps.has_range[j]) xhat[j] = std::min(xhat[j], ps.range[j]);
        }
    }
}

}  // namespace

LpSolution solve(const LinearProgram& lp_in, const SolveOptions& options) {
    LinearProgram lp = lp_in;
    if (!lp.is_canonical()) lp.canonicalize();

    LpSolution sol;
    sol.primal.assign(lp.num_vars, 0.0);
    sol.duals.assign(lp.num_rows(), 0.0);

    Presolved ps = presolve(lp);
    if (ps.empty_row_infeasible) {
        sol.status = LpStatus::Infeasible;
        return sol;
    }
    if (ps.dropped_var_unbounded) {
        sol.status = LpStatus::Unbounded;
        sol.objective_value = -kInf;
        return sol;
    }

    auto recover = [&](const std::vector<double>& xhat) {
        for (int j = 0; j < lp.num_vars; ++j) {
            const auto& vm = ps.vmap[j];
            switch (vm.kind) {
                case VarKind::Fixed:
                case VarKind::DroppedBound:
                    sol.primal[j] = vm.base;
                    break;
                case VarKind::Shifted:
                    sol.primal[j] = vm.base + xhat[vm.col1];
                    break;
                case VarKind::Negated:
                    sol.primal[j] = vm.base - xhat[vm.col1];
                    break;
                case VarKind::Split:
                    sol.primal[j] = xhat[vm.col1] - xhat[vm.col2];
                    break;
            }
        }
        double obj = 0.0;
        for (int j = 0; j < lp.num_vars; ++j) obj += lp.objective[j] * sol.primal[j];
        sol.objective_value = obj;
    };

    if (ps.A.n == 0) {
        // Nothing left to optimize; presolve already validated the rows.
        sol.status = LpStatus::Optimal;
        recover(std::vector<double>{});
        return sol;
    }
    if (ps.A.m == 0) {
        // Pure bound problem on the presolved columns.
        std::vector<double> xhat(ps.A.n, 0.0);
        for (int j = 0; j < ps.A.n; ++j) {
            if (ps.c[j] < 0.0) {
                if (!ps.has_range[j]) {
                    sol.status = LpStatus::Unbounded;
                    sol.objective_value = -kInf;
                    return sol;
                }
                xhat[j] = ps.range[j];
            }
        }
        sol.status = LpStatus::Optimal;
        recover(xhat);
        return sol;
    }

    HsdSolver hsd(ps, options);
    HsdResult res = hsd.run();
    sol.iterations = res.iterations;
    if (res.status != LpStatus::Optimal) {
        sol.status = res.status;
        if (res.status == LpStatus::Unbounded) sol.objective_value = -kInf;
        return sol;
    }

    std::vector<double> xhat = res.x;  // presolved units (unscaled by run())
    if (options.polish) polish_point(ps, xhat, options.opt_tol);
    // Clamp residual bound noise.
    for (int j = 0; j < ps.A.n; ++j) {
        xhat[j] = std::max(0.0, xhat[j]);
        if (ps.has_range[j]) xhat[j] = std::min(xhat[j], ps.range[j]);
    }

    sol.status = LpStatus::Optimal;
    recover(xhat);
    for (std::size_t i = 0; i < ps.row_map.size(); ++i) sol.duals[ps.row_map[i]] = res.y[i];
    return sol;
}

}  // namespace gridtegs
