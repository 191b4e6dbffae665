#pragma once

#include "gridtegs/lp.hpp"

#include <iosfwd>
#include <string>

namespace gridtegs {

// Fixed-layout MPS emitter (ROWS/COLUMNS/RHS/BOUNDS). Row and column
// names are used verbatim when they are present, unique and at most
// eight characters; otherwise deterministic C%07d / R%07d names are
// substituted. Duplicate user names raise LpError.
std::string export_mps(const LinearProgram& lp, const std::string& model_name = "GRIDTEGS");
void export_mps_file(const LinearProgram& lp, const std::string& path,
                     const std::string& model_name = "GRIDTEGS");

// Whitespace-tolerant reader for the subset emitted above (plus MI/PL/FR
// bound types). Used for round-trip checks and external model import.
LinearProgram import_mps(std::istream& in);
LinearProgram import_mps_file(const std::string& path);

}  // namespace gridtegs
