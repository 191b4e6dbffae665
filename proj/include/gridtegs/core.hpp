#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Core domain types for a single-zone power system coupled to a
// PV + thermal storage plant. All values are immutable after
// construction by convention; nothing here owns threads or I/O.

namespace gridtegs {

// One year (or any horizon) of hourly values. `values` holds MW for
// demand/output series and a dimensionless fraction for capacity-factor
// series.
struct HourlySeries {
    std::vector<double> values;
    std::size_t horizon_hours = 0;
    std::string label;

    HourlySeries() = default;
    HourlySeries(std::vector<double> v, std::string lbl)
        : values(std::move(v)), horizon_hours(values.size()), label(std::move(lbl)) {}

    double operator[](std::size_t t) const { return values[t]; }
    std::size_t size() const { return values.size(); }
    double mean() const;
    double max() const;

    // First `hours` entries as a new series (used for reduced-horizon runs).
    HourlySeries prefix(std::size_t hours) const;
};

struct ThermalGenerator {
    std::string name;
    double capacity_mw = 0.0;
    double variable_cost = 0.0;     // $/MWh
    double emission_rate = 0.0;     // tCO2/MWh, 0 for zero-carbon firm units
    bool new_build_allowed = false;
    double annualized_capex = 0.0;  // $/MW-yr, used only when new_build_allowed
};

struct VreResource {
    std::string name;
    double capacity_mw = 0.0;
    HourlySeries cf_profile;        // dimensionless, in [0,1]
    double variable_cost = 0.0;     // $/MWh, typically 0
    bool new_build_allowed = false;
    double annualized_capex = 0.0;

    // Available power at hour t; dispatch below this is curtailment.
    double available_mw(std::size_t t) const { return capacity_mw * cf_profile[t]; }
};

struct StorageSpec {
    double energy_capacity_mwh = 0.0;
    double charge_capacity_mw = 0.0;
    double discharge_capacity_mw = 0.0;
    double charge_efficiency = 1.0;     // fraction in (0,1]
    double discharge_efficiency = 1.0;  // fraction in (0,1]
    double initial_soc_mwh = 0.0;

    double round_trip_efficiency() const { return charge_efficiency * discharge_efficiency; }
};

struct HybridPlant {
    VreResource pv;
    StorageSpec storage;
    double tie_line_limit_mw = 0.0;  // export limit toward the zone
    bool grid_charging_allowed = true;
};

struct PowerSystem {
    std::vector<ThermalGenerator> thermal_fleet;
    std::vector<VreResource> vre_fleet;  // zone VRE, excluding the hybrid plant
    HourlySeries demand;                 // MW
    HybridPlant hybrid;
    double voll = 9000.0;                // $/MWh penalty on non-served energy

    std::size_t horizon_hours() const { return demand.horizon_hours; }

    // Same system restricted to the first `hours` hours of every series.
    PowerSystem prefix(std::size_t hours) const;
};

// One point of the scenario grid. `derated_power_mw` is the availability
// threshold used ex post by the metrics; it is not an LP constraint.
struct ScenarioConfig {
    double storage_energy_mwh = 0.0;
    double discharge_capacity_mw = 0.0;
    double co2_reduction_fraction = 0.0;  // in [0,1)
    double derated_power_mw = 0.0;
    bool expansion_enabled = false;
};

struct ValidationFinding {
    std::string code;   // machine-readable, e.g. "CF_OUT_OF_RANGE"
    std::string path;   // offending field, e.g. "vre_fleet[0].cf_profile[17]"
    std::string message;
};

// Pure check of every core-model invariant. Returns one finding per
// violation; empty means the system is consistent. Never throws.
std::vector<ValidationFinding> validate_system(const PowerSystem& system);

// The 66-scenario grid: {400,600,800} MWh x {5,10,20,...,100} MW x
// CO2 reduction {0, 0.5}, derated power equal to discharge capacity.
std::vector<ScenarioConfig> paper_scenario_grid();

// The 11 discharge capacities spanning [5,100] MW used by the grid above.
const std::vector<double>& paper_discharge_levels();

}  // namespace gridtegs
