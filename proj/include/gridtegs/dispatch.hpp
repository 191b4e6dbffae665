#pragma once

#include "gridtegs/core.hpp"
#include "gridtegs/lp.hpp"
#include "gridtegs/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridtegs {

// Hourly optimal decisions extracted from a solved dispatch program.
// Charge and discharge are grid-side MW; SOC follows
//   soc[t] = soc[t-1] + eta_c * charge[t] - discharge[t] / eta_d.
struct DispatchResult {
    std::vector<HourlySeries> thermal_gen;
    std::vector<HourlySeries> vre_gen;          // zone VRE, dispatched
    std::vector<HourlySeries> vre_curtailment;  // available minus dispatched
    HourlySeries pv_gen;
    HourlySeries pv_curtailment;
    HourlySeries charge;
    HourlySeries discharge;
    HourlySeries soc;
    HourlySeries non_served;
    double total_cost = 0.0;        // $, objective value of the program
    double total_emissions = 0.0;   // tCO2
    double non_served_mwh = 0.0;
    // Capacity additions when expansion was enabled; empty otherwise.
    std::vector<std::pair<std::string, double>> new_build;
};

enum class DispatchStatus { Optimal, Infeasible, Inconclusive };

const char* to_string(DispatchStatus s);

// Unconstrained-run quantities a CO2-capped sibling is measured against.
struct Baseline {
    double emissions_t = 0.0;
    double non_served_mwh = 0.0;
};

struct DispatchOutcome {
    DispatchStatus status = DispatchStatus::Inconclusive;
    std::optional<DispatchResult> result;  // present when the LP solved
    LpStatus lp_status = LpStatus::IterationLimit;
    double solve_seconds = 0.0;
    std::string note;  // human-readable cause for non-Optimal statuses
};

struct DispatchOptions {
    SolveOptions solver;
    // Adds the hard per-hour row pv + discharge >= derated_power.
    bool firm_delivery = false;
    // Rolling-horizon approximation: solve fixed windows sequentially,
    // chaining the final SOC of one window into the next. Zero disables.
    std::size_t rolling_window_hours = 0;
    DispatchOptions() { solver.feas_tol = solver.opt_tol = 1e-9; }
};

// Build the hourly cost-minimization program. `baseline_emissions` is
// required exactly when the scenario carries a CO2 reduction.
LinearProgram formulate(const PowerSystem& system, const ScenarioConfig& scenario,
                        std::optional<double> baseline_emissions,
                        const DispatchOptions& options = {});

// Solve and extract. An LP-level infeasibility maps to Infeasible; an
// optimal solution that must shed load beyond the baseline's shedding to
// satisfy the emissions cap is likewise classified Infeasible (the cap
// cannot be met while serving demand). IterationLimit maps to
// Inconclusive.
DispatchOutcome run_dispatch(const PowerSystem& system, const ScenarioConfig& scenario,
                             std::optional<Baseline> baseline = std::nullopt,
                             const DispatchOptions& options = {});

// r = 0 run of the given storage configuration; memoized on the system
// and scenario content behind a process-wide lock.
Baseline compute_baseline(const PowerSystem& system, const ScenarioConfig& scenario,
                          const DispatchOptions& options = {});

// Spec-level convenience: total emissions of the unconstrained run.
double compute_baseline_emissions(const PowerSystem& system, const ScenarioConfig& scenario,
                                  const DispatchOptions& options = {});

}  // namespace gridtegs
