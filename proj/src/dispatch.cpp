#include "gridtegs/dispatch.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>

namespace gridtegs {

const char* to_string(DispatchStatus s) {
    switch (s) {
        case DispatchStatus::Optimal: return "optimal";
        case DispatchStatus::Infeasible: return "infeasible";
        case DispatchStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

// Column layout: one contiguous block per hour, expansion variables at
// the end. Keeping hour blocks adjacent makes the normal equations of
// the interior-point solver near-banded.
struct Layout {
    int num_thermal = 0;
    int num_vre = 0;
    int per_hour = 0;
    std::size_t horizon = 0;

    int gen(std::size_t t, int g) const { return static_cast<int>(t) * per_hour + g; }
    int vre(std::size_t t, int v) const {
        return static_cast<int>(t) * per_hour + num_thermal + v;
    }
    int pv(std::size_t t) const { return static_cast<int>(t) * per_hour + num_thermal + num_vre; }
    int charge(std::size_t t) const { return pv(t) + 1; }
    int discharge(std::size_t t) const { return pv(t) + 2; }
    int soc(std::size_t t) const { return pv(t) + 3; }
    int nse(std::size_t t) const { return pv(t) + 4; }
};

Layout layout_for(const PowerSystem& system) {
    Layout ly;
    ly.num_thermal = static_cast<int>(system.thermal_fleet.size());
    ly.num_vre = static_cast<int>(system.vre_fleet.size());
    ly.per_hour = ly.num_thermal + ly.num_vre + 5;
    ly.horizon = system.horizon_hours();
    return ly;
}

StorageSpec scenario_storage(const PowerSystem& system, const ScenarioConfig& scenario) {
    StorageSpec st = system.hybrid.storage;
    st.energy_capacity_mwh = scenario.storage_energy_mwh;
    st.discharge_capacity_mw = scenario.discharge_capacity_mw;
    st.initial_soc_mwh = std::min(st.initial_soc_mwh, st.energy_capacity_mwh);
    return st;
}

std::string tag(const char* base, std::size_t t) {
    std::ostringstream os;
    os << base << "_" << t;
    return os.str();
}

// Content hash for the baseline memo (FNV-1a over the numeric payload).
struct Hasher {
    std::uint64_t h = 1469598103934665603ull;
    void feed(const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    }
    void num(double v) { feed(&v, sizeof v); }
    void str(const std::string& s) { feed(s.data(), s.size()); }
    void series(const HourlySeries& s) {
        num(static_cast<double>(s.horizon_hours));
        if (!s.values.empty()) feed(s.values.data(), s.values.size() * sizeof(double));
    }
};

std::uint64_t baseline_key(const PowerSystem& system, const ScenarioConfig& scenario) {
    Hasher h;
    h.series(system.demand);
    h.num(system.voll);
    for (const auto& g : system.thermal_fleet) {
        h.str(g.name);
        h.num(g.capacity_mw);
        h.num(g.variable_cost);
        h.num(g.emission_rate);
    }
    for (const auto& v : system.vre_fleet) {
        h.str(v.name);
        h.num(v.capacity_mw);
        h.num(v.variable_cost);
        h.series(v.cf_profile);
    }
    h.num(system.hybrid.pv.capacity_mw);
    h.series(system.hybrid.pv.cf_profile);
    h.num(system.hybrid.tie_line_limit_mw);
    h.num(system.hybrid.grid_charging_allowed ? 1.0 : 0.0);
    const StorageSpec st = scenario_storage(system, scenario);
    h.num(st.energy_capacity_mwh);
    h.num(st.charge_capacity_mw);
    h.num(st.discharge_capacity_mw);
    h.num(st.charge_efficiency);
    h.num(st.discharge_efficiency);
    h.num(st.initial_soc_mwh);
    return h.h;
}

DispatchResult extract(const PowerSystem& system, const ScenarioConfig& scenario,
                       const Layout& ly, const LpSolution& sol) {
    const std::size_t T = ly.horizon;
    DispatchResult out;
    auto series = [&](const std::string& label) {
        HourlySeries s;
        s.values.assign(T, 0.0);
        s.horizon_hours = T;
        s.label = label;
        return s;
    };

    for (int g = 0; g < ly.num_thermal; ++g)
        out.thermal_gen.push_back(series(system.thermal_fleet[g].name));
    for (int v = 0; v < ly.num_vre; ++v) {
        out.vre_gen.push_back(series(system.vre_fleet[v].name));
        out.vre_curtailment.push_back(series(system.vre_fleet[v].name + "_curtailment"));
    }
    out.pv_gen = series("pv_gen");
    out.pv_curtailment = series("pv_curtailment");
    out.charge = series("charge");
    out.discharge = series("discharge");
    out.soc = series("soc");
    out.non_served = series("non_served");

    double emissions = 0.0, nse_total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        for (int g = 0; g < ly.num_thermal; ++g) {
            const double v = sol.primal[ly.gen(t, g)];
            out.thermal_gen[g].values[t] = v;
            emissions += system.thermal_fleet[g].emission_rate * v;
        }
        for (int v = 0; v < ly.num_vre; ++v) {
            const double gen = sol.primal[ly.vre(t, v)];
            out.vre_gen[v].values[t] = gen;
            out.vre_curtailment[v].values[t] =
                std::max(0.0, system.vre_fleet[v].available_mw(t) - gen);
        }
        const double pv = sol.primal[ly.pv(t)];
        out.pv_gen.values[t] = pv;
        out.pv_curtailment.values[t] = std::max(0.0, system.hybrid.pv.available_mw(t) - pv);
        out.charge.values[t] = sol.primal[ly.charge(t)];
        out.discharge.values[t] = sol.primal[ly.discharge(t)];
        out.soc.values[t] = sol.primal[ly.soc(t)];
        out.non_served.values[t] = sol.primal[ly.nse(t)];
        nse_total += out.non_served.values[t];
    }
    out.total_cost = sol.objective_value;
    out.total_emissions = emissions;
    out.non_served_mwh = nse_total;

    if (scenario.expansion_enabled) {
        int k = static_cast<int>(T) * ly.per_hour;
        for (const auto& g : system.thermal_fleet)
            if (g.new_build_allowed) out.new_build.push_back({g.name, sol.primal[k++]});
        for (const auto& v : system.vre_fleet)
            if (v.new_build_allowed) out.new_build.push_back({v.name, sol.primal[k++]});
    }
    return out;
}

DispatchOutcome solve_window(const PowerSystem& system, const ScenarioConfig& scenario,
                             std::optional<double> baseline_emissions,
                             const DispatchOptions& options) {
    const LinearProgram lp = formulate(system, scenario, baseline_emissions, options);
    const Layout ly = layout_for(system);

    DispatchOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    const LpSolution sol = solve(lp, options.solver);
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.lp_status = sol.status;

    switch (sol.status) {
        case LpStatus::Optimal:
            out.status = DispatchStatus::Optimal;
            out.result = extract(system, scenario, ly, sol);
            break;
        case LpStatus::Infeasible:
            out.status = DispatchStatus::Infeasible;
            out.note = "linear program infeasible";
            break;
        case LpStatus::Unbounded:
            out.status = DispatchStatus::Inconclusive;
            out.note = "linear program unbounded (model defect)";
            break;
        case LpStatus::IterationLimit:
            out.status = DispatchStatus::Inconclusive;
            out.note = "solver iteration limit reached";
            break;
    }
    return out;
}

}  // namespace

LinearProgram formulate(const PowerSystem& system, const ScenarioConfig& scenario,
                        std::optional<double> baseline_emissions,
                        const DispatchOptions& options) {
    {
        auto findings = validate_system(system);
        if (!findings.empty()) {
            throw LpError("formulate: system fails validation: " + findings.front().code + " at " +
                          findings.front().path);
        }
    }
    const double r = scenario.co2_reduction_fraction;
    if (r > 0.0 && !baseline_emissions)
        throw LpError("formulate: baseline emissions required for a CO2-capped scenario");
    if (r < 0.0 || r >= 1.0) throw LpError("formulate: co2_reduction_fraction outside [0,1)");

    const Layout ly = layout_for(system);
    const std::size_t T = ly.horizon;
    const StorageSpec st = scenario_storage(system, scenario);
    const HybridPlant& hy = system.hybrid;
    const double eta_c = st.charge_efficiency;
    const double inv_eta_d = 1.0 / st.discharge_efficiency;
    // Annualized fixed costs scale with the modeled fraction of a year.
    const double year_fraction = static_cast<double>(T) / 8760.0;

    LpBuilder b;
    for (std::size_t t = 0; t < T; ++t) {
        for (const auto& g : system.thermal_fleet)
            b.add_var(0.0, g.capacity_mw, g.variable_cost, tag(g.name.c_str(), t));
        for (const auto& v : system.vre_fleet)
            b.add_var(0.0, v.available_mw(t), v.variable_cost, tag(v.name.c_str(), t));
        b.add_var(0.0, hy.pv.available_mw(t), hy.pv.variable_cost, tag("pv", t));
        b.add_var(0.0, st.charge_capacity_mw, 0.0, tag("ch", t));
        b.add_var(0.0, st.discharge_capacity_mw, 0.0, tag("dis", t));
        b.add_var(0.0, st.energy_capacity_mwh, 0.0, tag("soc", t));
        b.add_var(0.0, system.demand[t], system.voll, tag("nse", t));
    }
    std::vector<int> build_cols;  // expansion capacity per expandable resource
    if (scenario.expansion_enabled) {
        for (const auto& g : system.thermal_fleet)
            if (g.new_build_allowed)
                build_cols.push_back(
                    b.add_var(0.0, kInf, g.annualized_capex * year_fraction, "K_" + g.name));
        for (const auto& v : system.vre_fleet)
            if (v.new_build_allowed)
                build_cols.push_back(
                    b.add_var(0.0, kInf, v.annualized_capex * year_fraction, "K_" + v.name));
    }

    for (std::size_t t = 0; t < T; ++t) {
        // Demand balance.
        std::vector<LpBuilder::Term> bal;
        for (int g = 0; g < ly.num_thermal; ++g) bal.push_back({ly.gen(t, g), 1.0});
        for (int v = 0; v < ly.num_vre; ++v) bal.push_back({ly.vre(t, v), 1.0});
        bal.push_back({ly.pv(t), 1.0});
        bal.push_back({ly.discharge(t), 1.0});
        bal.push_back({ly.charge(t), -1.0});
        bal.push_back({ly.nse(t), 1.0});
        b.add_constraint(RowSense::Equal, system.demand[t], bal, tag("bal", t));

        // SOC recursion; hour 0 links to the initial state.
        std::vector<LpBuilder::Term> soc;
        soc.push_back({ly.soc(t), 1.0});
        if (t > 0) soc.push_back({ly.soc(t - 1), -1.0});
        soc.push_back({ly.charge(t), -eta_c});
        soc.push_back({ly.discharge(t), inv_eta_d});
        b.add_constraint(RowSense::Equal, t == 0 ? st.initial_soc_mwh : 0.0, soc, tag("soc", t));

        // Net export of the hybrid plant is tie-line limited.
        b.add_constraint(
            RowSense::LessEqual, hy.tie_line_limit_mw,
            {{ly.pv(t), 1.0}, {ly.discharge(t), 1.0}, {ly.charge(t), -1.0}}, tag("tie", t));

        if (!hy.grid_charging_allowed) {
            // Charging may only draw on the co-located PV.
            b.add_constraint(RowSense::LessEqual, 0.0,
                             {{ly.charge(t), 1.0}, {ly.pv(t), -1.0}}, tag("src", t));
        }
        if (options.firm_delivery) {
            b.add_constraint(RowSense::GreaterEqual, scenario.derated_power_mw,
                             {{ly.pv(t), 1.0}, {ly.discharge(t), 1.0}}, tag("firm", t));
        }
    }

    if (scenario.expansion_enabled && !build_cols.empty()) {
        // gen - K <= existing capacity, per hour and expandable resource.
        int k = 0;
        for (int g = 0; g < ly.num_thermal; ++g) {
            if (!system.thermal_fleet[g].new_build_allowed) continue;
            for (std::size_t t = 0; t < T; ++t) {
                b.add_constraint(RowSense::LessEqual, system.thermal_fleet[g].capacity_mw,
                                 {{ly.gen(t, g), 1.0}, {build_cols[k], -1.0}},
                                 tag(("cap_" + system.thermal_fleet[g].name).c_str(), t));
            }
            ++k;
        }
        for (int v = 0; v < ly.num_vre; ++v) {
            if (!system.vre_fleet[v].new_build_allowed) continue;
            const auto& res = system.vre_fleet[v];
            for (std::size_t t = 0; t < T; ++t) {
                b.add_constraint(RowSense::LessEqual, res.available_mw(t),
                                 {{ly.vre(t, v), 1.0}, {build_cols[k], -res.cf_profile[t]}},
                                 tag(("cap_" + res.name).c_str(), t));
            }
            ++k;
        }
    }

    if (r > 0.0) {
        std::vector<LpBuilder::Term> cap;
        for (std::size_t t = 0; t < T; ++t) {
            for (int g = 0; g < ly.num_thermal; ++g) {
                const double e = system.thermal_fleet[g].emission_rate;
                if (e != 0.0) cap.push_back({ly.gen(t, g), e});
            }
        }
        b.add_constraint(RowSense::LessEqual, (1.0 - r) * *baseline_emissions, cap, "co2cap");
    }

    return b.build();
}

DispatchOutcome run_dispatch(const PowerSystem& system, const ScenarioConfig& scenario,
                             std::optional<Baseline> baseline, const DispatchOptions& options) {
    const double r = scenario.co2_reduction_fraction;
    if (r > 0.0 && !baseline)
        throw LpError("run_dispatch: baseline required for a CO2-capped scenario");

    DispatchOutcome out;
    if (options.rolling_window_hours == 0 || options.rolling_window_hours >= system.horizon_hours()) {
        out = solve_window(system, scenario,
                           baseline ? std::optional<double>(baseline->emissions_t) : std::nullopt,
                           options);
    } else {
        // Rolling-horizon approximation: each window sees a proportional
        // share of the emissions budget and starts at the previous
        // window's final SOC.
        const std::size_t W = options.rolling_window_hours;
        const std::size_t T = system.horizon_hours();
        PowerSystem chunk = system;
        DispatchOptions inner = options;
        inner.rolling_window_hours = 0;
        double soc0 = system.hybrid.storage.initial_soc_mwh;
        DispatchResult merged;
        bool first = true;
        double seconds = 0.0;
        for (std::size_t start = 0; start < T; start += W) {
            const std::size_t len = std::min(W, T - start);
            chunk = system;
            chunk.demand.values.assign(system.demand.values.begin() + start,
                                       system.demand.values.begin() + start + len);
            chunk.demand.horizon_hours = len;
            auto slice = [&](const HourlySeries& s) {
                HourlySeries o;
                o.values.assign(s.values.begin() + start, s.values.begin() + start + len);
                o.horizon_hours = len;
                o.label = s.label;
                return o;
            };
            for (std::size_t v = 0; v < system.vre_fleet.size(); ++v)
                chunk.vre_fleet[v].cf_profile = slice(system.vre_fleet[v].cf_profile);
            chunk.hybrid.pv.cf_profile = slice(system.hybrid.pv.cf_profile);
            chunk.hybrid.storage.initial_soc_mwh = soc0;
            std::optional<double> window_budget;
            if (baseline)
                window_budget = baseline->emissions_t * static_cast<double>(len) /
                                static_cast<double>(T);
            DispatchOutcome piece = solve_window(chunk, scenario, window_budget, inner);
            seconds += piece.solve_seconds;
            if (piece.status != DispatchStatus::Optimal) {
                piece.solve_seconds = seconds;
                return piece;
            }
            soc0 = piece.result->soc.values.back();
            if (first) {
                merged = std::move(*piece.result);
                first = false;
            } else {
                auto append = [](HourlySeries& dst, const HourlySeries& src) {
                    dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
                    dst.horizon_hours = dst.values.size();
                };
                for (std::size_t g = 0; g < merged.thermal_gen.size(); ++g)
                    append(merged.thermal_gen[g], piece.result->thermal_gen[g]);
                for (std::size_t v = 0; v < merged.vre_gen.size(); ++v) {
                    append(merged.vre_gen[v], piece.result->vre_gen[v]);
                    append(merged.vre_curtailment[v], piece.result->vre_curtailment[v]);
                }
                append(merged.pv_gen, piece.result->pv_gen);
                append(merged.pv_curtailment, piece.result->pv_curtailment);
                append(merged.charge, piece.result->charge);
                append(merged.discharge, piece.result->discharge);
                append(merged.soc, piece.result->soc);
                append(merged.non_served, piece.result->non_served);
                merged.total_cost += piece.result->total_cost;
                merged.total_emissions += piece.result->total_emissions;
                merged.non_served_mwh += piece.result->non_served_mwh;
            }
        }
        out.status = DispatchStatus::Optimal;
        out.lp_status = LpStatus::Optimal;
        out.result = std::move(merged);
        out.solve_seconds = seconds;
    }

    // The emissions cap is hard while load shedding is soft-priced, so a
    // capped run that must shed beyond its baseline's shedding means the
    // cap cannot be met by re-dispatch alone: the scenario is reported
    // infeasible the way the reference results describe.
    if (out.status == DispatchStatus::Optimal && r > 0.0 && baseline) {
        const double tol = std::max(1e-3, 1e-8 * baseline->non_served_mwh);
        if (out.result->non_served_mwh > baseline->non_served_mwh + tol) {
            out.status = DispatchStatus::Infeasible;
            std::ostringstream os;
            os.setf(std::ios::fixed);
            os.precision(1);
            os << "emissions cap forces " << (out.result->non_served_mwh - baseline->non_served_mwh)
               << " MWh of additional load shedding";
            out.note = os.str();
        }
    }
    return out;
}

namespace {
std::mutex g_baseline_mutex;
std::map<std::uint64_t, Baseline> g_baseline_memo;
}  // namespace

Baseline compute_baseline(const PowerSystem& system, const ScenarioConfig& scenario,
                          const DispatchOptions& options) {
    const std::uint64_t key = baseline_key(system, scenario);
    {
        std::lock_guard<std::mutex> lock(g_baseline_mutex);
        auto it = g_baseline_memo.find(key);
        if (it != g_baseline_memo.end()) return it->second;
    }
    ScenarioConfig uncapped = scenario;
    uncapped.co2_reduction_fraction = 0.0;
    DispatchOutcome out = run_dispatch(system, uncapped, std::nullopt, options);
    if (out.status != DispatchStatus::Optimal)
        throw LpError(std::string("baseline dispatch did not solve: ") + out.note);
    Baseline bl{out.result->total_emissions, out.result->non_served_mwh};
    std::lock_guard<std::mutex> lock(g_baseline_mutex);
    g_baseline_memo.emplace(key, bl);
    return bl;
}

double compute_baseline_emissions(const PowerSystem& system, const ScenarioConfig& scenario,
                                  const DispatchOptions& options) {
    return compute_baseline(system, scenario, options).emissions_t;
}

}  // namespace gridtegs
