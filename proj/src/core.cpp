#include "gridtegs/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gridtegs {

double HourlySeries::mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double HourlySeries::max() const {
    if (values.empty()) return 0.0;
    return *std::max_element(values.begin(), values.end());
}

HourlySeries HourlySeries::prefix(std::size_t hours) const {
    HourlySeries out;
    out.horizon_hours = std::min(hours, values.size());
    out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(out.horizon_hours));
    out.label = label;
    return out;
}

PowerSystem PowerSystem::prefix(std::size_t hours) const {
    PowerSystem out = *this;
    out.demand = demand.prefix(hours);
    for (auto& v : out.vre_fleet) v.cf_profile = v.cf_profile.prefix(hours);
    out.hybrid.pv.cf_profile = hybrid.pv.cf_profile.prefix(hours);
    return out;
}

namespace {

void add(std::vector<ValidationFinding>& out, std::string code, std::string path, std::string msg) {
    out.push_back(ValidationFinding{std::move(code), std::move(path), std::move(msg)});
}

std::string idx(const std::string& base, std::size_t i) {
    std::ostringstream os;
    os << base << "[" << i << "]";
    return os.str();
}

void check_series_length(std::vector<ValidationFinding>& out, const HourlySeries& s,
                         const std::string& path, std::size_t expected) {
    if (s.values.size() != s.horizon_hours) {
        std::ostringstream m;
        m << "series holds " << s.values.size() << " values but declares " << s.horizon_hours;
        add(out, "SERIES_LENGTH_MISMATCH", path, m.str());
    }
    if (expected != 0 && s.horizon_hours != expected) {
        std::ostringstream m;
        m << "series horizon " << s.horizon_hours << " != system horizon " << expected;
        add(out, "HORIZON_MISMATCH", path, m.str());
    }
}

void check_cf_profile(std::vector<ValidationFinding>& out, const HourlySeries& s,
                      const std::string& path) {
    for (std::size_t t = 0; t < s.values.size(); ++t) {
        double v = s.values[t];
        if (!(v >= 0.0 && v <= 1.0) || std::isnan(v)) {
            std::ostringstream m;
            m << "capacity factor " << v << " outside [0,1]";
            add(out, "CF_OUT_OF_RANGE", idx(path, t), m.str());
        }
    }
}

void check_vre(std::vector<ValidationFinding>& out, const VreResource& v,
               const std::string& path, std::size_t horizon) {
    if (v.capacity_mw < 0.0)
        add(out, "NEGATIVE_CAPACITY", path + ".capacity_mw", "capacity must be >= 0");
    if (v.variable_cost < 0.0)
        add(out, "NEGATIVE_COST", path + ".variable_cost", "variable cost must be >= 0");
    check_series_length(out, v.cf_profile, path + ".cf_profile", horizon);
    check_cf_profile(out, v.cf_profile, path + ".cf_profile");
}

}  // namespace

std::vector<ValidationFinding> validate_system(const PowerSystem& system) {
    std::vector<ValidationFinding> out;
    const std::size_t horizon = system.horizon_hours();

    check_series_length(out, system.demand, "demand", horizon);
    for (std::size_t t = 0; t < system.demand.values.size(); ++t) {
        double v = system.demand.values[t];
        if (v < 0.0 || std::isnan(v)) {
            add(out, "NEGATIVE_DEMAND", idx("demand", t), "demand must be >= 0");
        }
    }

    for (std::size_t i = 0; i < system.thermal_fleet.size(); ++i) {
        const auto& g = system.thermal_fleet[i];
        const std::string path = idx("thermal_fleet", i);
        if (g.capacity_mw < 0.0)
            add(out, "NEGATIVE_CAPACITY", path + ".capacity_mw", "capacity must be >= 0");
        if (g.variable_cost < 0.0)
            add(out, "NEGATIVE_COST", path + ".variable_cost", "variable cost must be >= 0");
        if (g.emission_rate < 0.0)
            add(out, "NEGATIVE_EMISSION_RATE", path + ".emission_rate", "emission rate must be >= 0");
        if (g.annualized_capex < 0.0)
            add(out, "NEGATIVE_COST", path + ".annualized_capex", "capex must be >= 0");
    }

    for (std::size_t i = 0; i < system.vre_fleet.size(); ++i)
        check_vre(out, system.vre_fleet[i], idx("vre_fleet", i), horizon);

    check_vre(out, system.hybrid.pv, "hybrid.pv", horizon);

    const auto& st = system.hybrid.storage;
    if (st.energy_capacity_mwh < 0.0)
        add(out, "NEGATIVE_CAPACITY", "hybrid.storage.energy_capacity_mwh", "energy capacity must be >= 0");
    if (st.charge_capacity_mw < 0.0)
        add(out, "NEGATIVE_CAPACITY", "hybrid.storage.charge_capacity_mw", "charge capacity must be >= 0");
    if (st.discharge_capacity_mw < 0.0)
        add(out, "NEGATIVE_CAPACITY", "hybrid.storage.discharge_capacity_mw", "discharge capacity must be >= 0");
    if (!(st.charge_efficiency > 0.0 && st.charge_efficiency <= 1.0))
        add(out, "EFFICIENCY_OUT_OF_RANGE", "hybrid.storage.charge_efficiency", "must lie in (0,1]");
    if (!(st.discharge_efficiency > 0.0 && st.discharge_efficiency <= 1.0))
        add(out, "EFFICIENCY_OUT_OF_RANGE", "hybrid.storage.discharge_efficiency", "must lie in (0,1]");
    if (st.initial_soc_mwh < 0.0 || st.initial_soc_mwh > st.energy_capacity_mwh)
        add(out, "SOC_OUT_OF_RANGE", "hybrid.storage.initial_soc_mwh",
            "initial SOC must lie in [0, energy_capacity_mwh]");

    if (!(system.hybrid.tie_line_limit_mw > 0.0))
        add(out, "TIE_LINE_NOT_POSITIVE", "hybrid.tie_line_limit_mw", "tie line limit must be > 0");
    else if (system.hybrid.pv.capacity_mw > system.hybrid.tie_line_limit_mw)
        add(out, "TIE_LINE_BELOW_PV", "hybrid.tie_line_limit_mw",
            "PV nameplate exceeds the interconnection limit");

    if (system.voll < 0.0)
        add(out, "NEGATIVE_COST", "voll", "value of lost load must be >= 0");

    return out;
}

const std::vector<double>& paper_discharge_levels() {
    static const std::vector<double> levels = {5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    return levels;
}

std::vector<ScenarioConfig> paper_scenario_grid() {
    static const double sizes[] = {400.0, 600.0, 800.0};
    static const double reductions[] = {0.0, 0.5};
    std::vector<ScenarioConfig> grid;
    grid.reserve(66);
    for (double size : sizes) {
        for (double dis : paper_discharge_levels()) {
            for (double r : reductions) {
                ScenarioConfig sc;
                sc.storage_energy_mwh = size;
                sc.discharge_capacity_mw = dis;
                sc.co2_reduction_fraction = r;
                sc.derated_power_mw = dis;
                sc.expansion_enabled = false;
                grid.push_back(sc);
            }
        }
    }
    return grid;
}

}  // namespace gridtegs
