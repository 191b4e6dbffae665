#include "gridtegs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gridtegs {

void LinearProgram::canonicalize() {
    const int rows = num_rows();
    for (const auto& t : triplets) {
        if (t.col < 0 || t.col >= num_vars) {
            std::ostringstream m;
            m << "triplet column " << t.col << " out of range [0," << num_vars << ")";
            throw LpError(m.str());
        }
        if (t.row < 0 || t.row >= rows) {
            std::ostringstream m;
            m << "triplet row " << t.row << " out of range [0," << rows << ")";
            throw LpError(m.str());
        }
        if (std::isnan(t.value)) throw LpError("NaN coefficient in constraint matrix");
    }
    for (int j = 0; j < num_vars; ++j) {
        if (lower[j] > upper[j]) {
            std::ostringstream m;
            m << "variable " << j << " has lower bound " << lower[j]
              << " above upper bound " << upper[j];
            throw LpError(m.str());
        }
    }

    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });

    // Sum duplicates in place, then drop exact zeros.
    std::vector<Triplet> merged;
    merged.reserve(triplets.size());
    for (const auto& t : triplets) {
        if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col) {
            merged.back().value += t.value;
        } else {
            merged.push_back(t);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Triplet& t) { return t.value == 0.0; }),
                 merged.end());
    triplets = std::move(merged);
    canonical_ = true;
}

int LpBuilder::add_var(double lower, double upper, double cost, std::string name) {
    if (std::isnan(lower) || std::isnan(upper) || std::isnan(cost))
        throw LpError("NaN in variable definition");
    if (lower > upper) {
        std::ostringstream m;
        m << "variable '" << name << "': lower bound " << lower << " above upper " << upper;
        throw LpError(m.str());
    }
    lp_.objective.push_back(cost);
    lp_.lower.push_back(lower);
    lp_.upper.push_back(upper);
    lp_.var_names.push_back(std::move(name));
    return lp_.num_vars++;
}

int LpBuilder::add_constraint(RowSense sense, double rhs, const std::vector<Term>& terms,
                              std::string name) {
    if (std::isnan(rhs)) throw LpError("NaN right-hand side");
    const int row = lp_.num_rows();
    lp_.row_sense.push_back(sense);
    lp_.row_rhs.push_back(rhs);
    lp_.row_names.push_back(std::move(name));
    for (const auto& term : terms) add_term(row, term.col, term.value);
    return row;
}

void LpBuilder::add_term(int row, int col, double value) {
    if (col < 0 || col >= lp_.num_vars) {
        std::ostringstream m;
        m << "constraint term references unknown variable " << col;
        throw LpError(m.str());
    }
    if (row < 0 || row >= lp_.num_rows()) {
        std::ostringstream m;
        m << "constraint term references unknown row " << row;
        throw LpError(m.str());
    }
    lp_.triplets.push_back(Triplet{row, col, value});
}

LinearProgram LpBuilder::build() {
    LinearProgram out = std::move(lp_);
    lp_ = LinearProgram{};
    out.canonicalize();
    return out;
}

}  // namespace gridtegs
