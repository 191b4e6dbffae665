#include "gridtegs/mps.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace gridtegs {

namespace {

constexpr const char* kObjName = "COST";

std::string fmt_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// One data line with the classic field positions (2, 5, 15, 25, 40, 50).
std::string line(const std::string& f1, const std::string& f2, const std::string& f3 = "",
                 const std::string& f4 = "", const std::string& f5 = "",
                 const std::string& f6 = "") {
    std::string s;
    auto put = [&s](std::size_t pos, const std::string& f) {
        if (f.empty()) return;
        if (s.size() + 1 > pos)
            s += ' ';
        else
            s.append(pos - s.size() - 1, ' ');
        s += f;
    };
    put(2, f1);
    put(5, f2);
    put(15, f3);
    put(25, f4);
    put(40, f5);
    put(50, f6);
    s += '\n';
    return s;
}

bool usable_name(const std::string& n) {
    if (n.empty() || n.size() > 8) return false;
    for (char c : n) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
            return false;
    }
    return n != kObjName && n != "RHS" && n != "BND";
}

std::vector<std::string> resolve_names(const std::vector<std::string>& given, int count,
                                       char prefix) {
    std::set<std::string> seen;
    bool all_usable = static_cast<int>(given.size()) == count && count > 0;
    for (const auto& n : given) {
        if (!usable_name(n)) {
            all_usable = false;
            break;
        }
        if (!seen.insert(n).second) throw LpError("duplicate name '" + n + "' in MPS export");
    }
    if (all_usable) return given;
    std::vector<std::string> out(count);
    for (int i = 0; i < count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%c%07d", prefix, i);
        out[i] = buf;
    }
    return out;
}

}  // namespace

std::string export_mps(const LinearProgram& lp_in, const std::string& model_name) {
    LinearProgram lp = lp_in;
    if (!lp.is_canonical()) lp.canonicalize();

    const int m = lp.num_rows();
    const auto row_names = resolve_names(lp.row_names, m, 'R');
    const auto col_names = resolve_names(lp.var_names, lp.num_vars, 'C');

    std::ostringstream os;
    os << "NAME          " << model_name << "\n";
    os << "ROWS\n";
    os << line("N", kObjName);
    for (int i = 0; i < m; ++i) {
        const char* sense = lp.row_sense[i] == RowSense::LessEqual      ? "L"
                            : lp.row_sense[i] == RowSense::GreaterEqual ? "G"
                                                                        : "E";
        os << line(sense, row_names[i]);
    }

    // Column-major entries (triplets are row-major after canonicalize).
    std::vector<std::vector<std::pair<int, double>>> cols(lp.num_vars);
    for (const auto& t : lp.triplets) cols[t.col].push_back({t.row, t.value});

    os << "COLUMNS\n";
    for (int j = 0; j < lp.num_vars; ++j) {
        std::vector<std::pair<std::string, double>> entries;
        if (lp.objective[j] != 0.0) entries.push_back({kObjName, lp.objective[j]});
        for (const auto& e : cols[j]) entries.push_back({row_names[e.first], e.second});
        for (std::size_t k = 0; k < entries.size(); k += 2) {
            if (k + 1 < entries.size()) {
                os << line("", col_names[j], entries[k].first, fmt_value(entries[k].second),
                           entries[k + 1].first, fmt_value(entries[k + 1].second));
            } else {
                os << line("", col_names[j], entries[k].first, fmt_value(entries[k].second));
            }
        }
    }

    os << "RHS\n";
    for (int i = 0; i < m; ++i) {
        if (lp.row_rhs[i] == 0.0) continue;
        os << line("", "RHS", row_names[i], fmt_value(lp.row_rhs[i]));
    }

    os << "BOUNDS\n";
    for (int j = 0; j < lp.num_vars; ++j) {
        const double lo = lp.lower[j], up = lp.upper[j];
        const bool lo_inf = std::isinf(lo), up_inf = std::isinf(up);
        if (lo == up) {
            os << line("FX", "BND", col_names[j], fmt_value(lo));
            continue;
        }
        if (lo_inf && up_inf) {
            os << line("FR", "BND", col_names[j]);
            continue;
        }
        if (lo_inf)
            os << line("MI", "BND", col_names[j]);
        else if (lo != 0.0)
            os << line("LO", "BND", col_names[j], fmt_value(lo));
        if (!up_inf) os << line("UP", "BND", col_names[j], fmt_value(up));
    }
    os << "ENDATA\n";
    return os.str();
}

void export_mps_file(const LinearProgram& lp, const std::string& path,
                     const std::string& model_name) {
    std::ofstream out(path);
    if (!out) throw LpError("cannot open '" + path + "' for writing");
    out << export_mps(lp, model_name);
    if (!out) throw LpError("write failure on '" + path + "'");
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_num(const std::string& s, int lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw LpError("MPS line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
}

}  // namespace

LinearProgram import_mps(std::istream& in) {
    enum Section { None, Rows, Columns, Rhs, Ranges, Bounds, Done };
    Section section = None;

    LinearProgram lp;
    std::map<std::string, int> row_of;
    std::map<std::string, int> col_of;
    std::string obj_row;
    std::vector<char> lower_set;

    auto col_index = [&](const std::string& name) {
        auto it = col_of.find(name);
        if (it != col_of.end()) return it->second;
        const int j = lp.num_vars++;
        col_of.emplace(name, j);
        lp.objective.push_back(0.0);
        lp.lower.push_back(0.0);
        lp.upper.push_back(kInf);
        lp.var_names.push_back(name);
        lower_set.push_back(0);
        return j;
    };

    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw[0] == '*') continue;  // comment
        auto tok = split_ws(raw);
        if (tok.empty()) continue;
        const bool header = !std::isspace(static_cast<unsigned char>(raw[0]));
        if (header) {
            const std::string& h = tok[0];
            if (h == "NAME") continue;
            if (h == "ROWS") { section = Rows; continue; }
            if (h == "COLUMNS") { section = Columns; continue; }
            if (h == "RHS") { section = Rhs; continue; }
            if (h == "RANGES") { section = Ranges; continue; }
            if (h == "BOUNDS") { section = Bounds; continue; }
            if (h == "ENDATA") { section = Done; break; }
            if (h == "OBJSENSE" || h == "OBJSENSE:") { section = None; continue; }
            throw LpError("MPS line " + std::to_string(lineno) + ": unknown section '" + h + "'");
        }
        switch (section) {
            case Rows: {
                if (tok.size() != 2)
                    throw LpError("MPS line " + std::to_string(lineno) + ": bad ROWS entry");
                const std::string& type = tok[0];
                const std::string& name = tok[1];
                if (type == "N") {
                    if (obj_row.empty()) obj_row = name;
                    continue;  // extra free rows are ignored
                }
                RowSense sense;
                if (type == "L")
                    sense = RowSense::LessEqual;
                else if (type == "G")
                    sense = RowSense::GreaterEqual;
                else if (type == "E")
                    sense = RowSense::Equal;
                else
                    throw LpError("MPS line " + std::to_string(lineno) + ": row type '" + type + "'");
                if (row_of.count(name))
                    throw LpError("MPS line " + std::to_string(lineno) + ": duplicate row '" + name + "'");
                row_of.emplace(name, lp.num_rows());
                lp.row_sense.push_back(sense);
                lp.row_rhs.push_back(0.0);
                lp.row_names.push_back(name);
                break;
            }
            case Columns: {
                if (tok.size() != 3 && tok.size() != 5)
                    throw LpError("MPS line " + std::to_string(lineno) + ": bad COLUMNS entry");
                const int j = col_index(tok[0]);
                for (std::size_t k = 1; k + 1 < tok.size() + 0u; k += 2) {
                    const std::string& rname = tok[k];
                    const double v = parse_num(tok[k + 1], lineno);
                    if (rname == obj_row) {
                        lp.objective[j] += v;
                    } else {
                        auto it = row_of.find(rname);
                        if (it == row_of.end())
                            throw LpError("MPS line " + std::to_string(lineno) + ": unknown row '" +
                                          rname + "'");
                        lp.triplets.push_back(Triplet{it->second, j, v});
                    }
                }
                break;
            }
            case Rhs: {
                if (tok.size() != 3 && tok.size() != 5)
                    throw LpError("MPS line " + std::to_string(lineno) + ": bad RHS entry");
                for (std::size_t k = 1; k + 1 < tok.size() + 0u; k += 2) {
                    const std::string& rname = tok[k];
                    const double v = parse_num(tok[k + 1], lineno);
                    if (rname == obj_row) continue;  // objective offset unsupported
                    auto it = row_of.find(rname);
                    if (it == row_of.end())
                        throw LpError("MPS line " + std::to_string(lineno) + ": unknown row '" +
                                      rname + "'");
                    lp.row_rhs[it->second] = v;
                }
                break;
            }
            case Ranges:
                throw LpError("MPS line " + std::to_string(lineno) + ": RANGES not supported");
            case Bounds: {
                if (tok.size() < 3)
                    throw LpError("MPS line " + std::to_string(lineno) + ": bad BOUNDS entry");
                const std::string& type = tok[0];
                const int j = col_index(tok[2]);
                const bool has_val = tok.size() >= 4;
                const double v = has_val ? parse_num(tok[3], lineno) : 0.0;
                if (type == "UP") {
                    lp.upper[j] = v;
                    // classic quirk: a negative upper bound on a default-lower
                    // column implies a free lower bound
                    if (v < 0.0 && !lower_set[j]) lp.lower[j] = -kInf;
                } else if (type == "LO") {
                    lp.lower[j] = v;
                    lower_set[j] = 1;
                } else if (type == "FX") {
                    lp.lower[j] = lp.upper[j] = v;
                    lower_set[j] = 1;
                } else if (type == "FR") {
                    lp.lower[j] = -kInf;
                    lp.upper[j] = kInf;
                    lower_set[j] = 1;
                } else if (type == "MI") {
                    lp.lower[j] = -kInf;
                    lower_set[j] = 1;
                } else if (type == "PL") {
                    lp.upper[j] = kInf;
                } else {
                    throw LpError("MPS line " + std::to_string(lineno) + ": bound type '" + type +
                                  "'");
                }
                break;
            }
            case None:
            case Done:
                break;
        }
    }
    if (section != Done) throw LpError("MPS stream missing ENDATA");
    lp.canonicalize();
    return lp;
}

LinearProgram import_mps_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LpError("cannot open '" + path + "'");
    return import_mps(in);
}

}  // namespace gridtegs
