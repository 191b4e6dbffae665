#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Sparse bounded-variable linear program in triplet form, plus an
// incremental builder. minimize c'x  s.t.  row_lhs {<=,=,>=} rhs,
// lb <= x <= ub with +-infinity allowed on bounds.

namespace gridtegs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective;   // dense cost vector, length num_vars
    std::vector<double> lower;       // per-variable lower bounds
    std::vector<double> upper;       // per-variable upper bounds
    std::vector<Triplet> triplets;   // constraint matrix entries
    std::vector<RowSense> row_sense;
    std::vector<double> row_rhs;
    std::vector<std::string> var_names;
    std::vector<std::string> row_names;

    int num_rows() const { return static_cast<int>(row_rhs.size()); }

    // Sums duplicate (row,col) entries, drops explicit zeros and sorts
    // triplets row-major. Throws LpError on out-of-range indices or
    // inverted bounds.
    void canonicalize();

    bool is_canonical() const { return canonical_; }

private:
    bool canonical_ = false;
};

// Convenience constructor used by the dispatch formulation and tests.
class LpBuilder {
public:
    // Returns the new variable index.
    int add_var(double lower, double upper, double cost, std::string name = {});

    struct Term {
        int col;
        double value;
    };

    // Returns the new row index.
    int add_constraint(RowSense sense, double rhs, const std::vector<Term>& terms,
                       std::string name = {});

    // Add one coefficient to an existing row.
    void add_term(int row, int col, double value);

    int num_vars() const { return lp_.num_vars; }
    int num_rows() const { return lp_.num_rows(); }

    // Finalizes and canonicalizes. The builder is left empty.
    LinearProgram build();

private:
    LinearProgram lp_;
};

struct LpSolution {
    LpStatus status = LpStatus::IterationLimit;
    double objective_value = 0.0;
    std::vector<double> primal;
    std::vector<double> duals;  // one per row; empty if not computed
    int iterations = 0;
};

}  // namespace gridtegs
