//! Post-processing of solved cases.
//!
//! Everything here reads the LP solution through its duals as much as
//! through its primal values: levelized fuel costs are the annual-demand
//! row duals, behind-the-meter energy prices are the nodal balance duals,
//! and the duality audit reconciles the objective against rhs payments
//! plus bound rents so a silently wrong dual vector cannot survive.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, ScenarioConfig};
use crate::lp::{ColKind, LpProblem, RowTag};
use crate::market::MarketData;
use crate::net::Network;
use crate::solver::LpSolution;

/// Order statistics of one dual (or any) series. Quantiles use the
/// nearest-rank definition on the sorted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowStats {
    pub mean: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl ShadowStats {
    pub fn from_series(values: &[f64]) -> Option<ShadowStats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let rank = |p: f64| -> f64 {
            let k = (p * n as f64).ceil().max(1.0) as usize;
            sorted[k - 1]
        };
        Some(ShadowStats {
            mean: sorted.iter().sum::<f64>() / n as f64,
            min: sorted[0],
            q05: rank(0.05),
            q25: rank(0.25),
            median: rank(0.50),
            q75: rank(0.75),
            q95: rank(0.95),
            max: sorted[n - 1],
        })
    }
}

/// Levelized cost per annual-demand load: the dual of its `dem__` row,
/// €/MWh (or €/t) of annual demand. Horizon proration cancels, so the
/// value is comparable across horizon lengths.
pub fn levelized_costs(p: &LpProblem, sol: &LpSolution) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (i, row) in p.rows.iter().enumerate() {
        if let RowTag::AnnualDemand { load } = &row.tag {
            out.insert(load.clone(), sol.row_dual(i));
        }
    }
    out
}

/// Hourly dual series of one bus's balance rows, in snapshot order.
/// Store buses have continuity rows instead and return `None`.
pub fn bus_price_series(p: &LpProblem, sol: &LpSolution, bus: &str) -> Option<Vec<f64>> {
    let mut series: Vec<(u32, f64)> = p
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, row)| match &row.tag {
            RowTag::NodalBalance { bus: b, t } if b == bus => Some((*t, sol.row_dual(i))),
            _ => None,
        })
        .collect();
    if series.is_empty() {
        return None;
    }
    series.sort_by_key(|(t, _)| *t);
    Some(series.into_iter().map(|(_, y)| y).collect())
}

/// Price statistics for every bus that carries a balance row.
pub fn bus_price_stats(
    net: &Network,
    p: &LpProblem,
    sol: &LpSolution,
) -> BTreeMap<String, ShadowStats> {
    let mut out = BTreeMap::new();
    for bus in &net.buses {
        if let Some(series) = bus_price_series(p, sol, &bus.name) {
            if let Some(stats) = ShadowStats::from_series(&series) {
                out.insert(bus.name.clone(), stats);
            }
        }
    }
    out
}

/// Cost of producing one MWh of biomethane the pre-integration way: heat
/// from the existing gas boiler and electricity bought at the unmasked
/// grid price. The plant's bus dual minus this series shows what the hub
/// integration is worth to the plant, hour by hour.
pub fn reference_biomethane_cost(
    market: &MarketData,
    co2_tax: f64,
    cat: &Catalog,
) -> Vec<f64> {
    let plant = cat.get("biomethane_plant").expect("catalog has the plant");
    let heat = -plant.flow("heat_mt");
    let el = -plant.flow("electricity");
    let boiler_eff = cat.efficiencies.ng_boiler;
    let ng = market.ng_price(co2_tax);
    let grid = market.purchase_price(co2_tax);
    ng.iter()
        .zip(&grid)
        .map(|(png, pel)| heat / boiler_eff * png + el * pel)
        .collect()
}

/// Statistics of (biomethane bus dual − reference cost).
pub fn biomethane_price_delta(
    p: &LpProblem,
    sol: &LpSolution,
    reference: &[f64],
) -> Option<ShadowStats> {
    let series = bus_price_series(p, sol, "biomethane")?;
    if series.len() != reference.len() {
        return None;
    }
    let delta: Vec<f64> = series
        .iter()
        .zip(reference)
        .map(|(l, r)| l - r)
        .collect();
    ShadowStats::from_series(&delta)
}

/// Annualized system cost split the way the site's stakeholders see it:
/// capital per reporting group, plus operating cost separated into
/// external trades (fuel, power and pellet purchases net of sales
/// revenues) and domestic variable O&M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub capital_by_group: BTreeMap<String, f64>,
    pub marginal_interface: f64,
    pub marginal_domestic: f64,
    /// Sum of all parts; equals the LP objective.
    pub total: f64,
    /// Value of the fuel demands at their levelized costs.
    pub fuel_sales_value: f64,
}

impl CostBreakdown {
    /// System cost net of fuel sales at cost-recovering prices. Negative
    /// means the remaining businesses (power, heat, credits) run at a
    /// surplus.
    pub fn total_with_ptx_sales(&self) -> f64 {
        self.total - self.fuel_sales_value
    }
}

pub fn cost_breakdown(net: &Network, p: &LpProblem, sol: &LpSolution) -> CostBreakdown {
    let group_of = |comp: &str| -> (String, bool) {
        if let Some(g) = net.generators.iter().find(|g| g.name == comp) {
            (
                g.group.clone().unwrap_or_else(|| "other".into()),
                g.interface,
            )
        } else if let Some(l) = net.links.iter().find(|l| l.name == comp) {
            (
                l.group.clone().unwrap_or_else(|| "other".into()),
                l.interface,
            )
        } else if let Some(s) = net.stores.iter().find(|s| s.name == comp) {
            (s.group.clone().unwrap_or_else(|| "other".into()), false)
        } else {
            ("other".into(), false)
        }
    };

    let mut capital: BTreeMap<String, f64> = BTreeMap::new();
    let mut interface = 0.0;
    let mut domestic = 0.0;
    let mut total = 0.0;
    for (j, col) in p.cols.iter().enumerate() {
        let contribution = col.obj * sol.col_value(j);
        if contribution == 0.0 {
            continue;
        }
        total += contribution;
        match &col.kind {
            ColKind::CapGen { gen: c }
            | ColKind::CapLink { link: c }
            | ColKind::CapStore { store: c } => {
                let (group, _) = group_of(c);
                *capital.entry(group).or_insert(0.0) += contribution;
            }
            ColKind::Gen { gen: c, .. } | ColKind::Flow { link: c, .. } => {
                let (_, is_interface) = group_of(c);
                if is_interface {
                    interface += contribution;
                } else {
                    domestic += contribution;
                }
            }
            ColKind::Energy { .. } | ColKind::Delivery { .. } => {
                domestic += contribution;
            }
        }
    }

    let mut fuel_sales = 0.0;
    for (i, row) in p.rows.iter().enumerate() {
        if matches!(row.tag, RowTag::AnnualDemand { .. }) {
            fuel_sales += sol.row_dual(i) * row.rhs;
        }
    }

    CostBreakdown {
        capital_by_group: capital,
        marginal_interface: interface,
        marginal_domestic: domestic,
        total,
        fuel_sales_value: fuel_sales,
    }
}

/// Strong-duality reconciliation: primal objective against
/// Σ y·rhs + Σ z·x (row payments plus bound rents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityAudit {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub rel_gap: f64,
    /// Σ y·rhs grouped by row family.
    pub rhs_by_family: BTreeMap<String, f64>,
    /// Σ z·x over columns (nonzero only at binding bounds).
    pub bound_rent: f64,
}

fn family(tag: &RowTag) -> &'static str {
    match tag {
        RowTag::NodalBalance { .. } => "nodal_balance",
        RowTag::StoreContinuity { .. } => "store_continuity",
        RowTag::GenUpper { .. }
        | RowTag::GenLower { .. }
        | RowTag::LinkUpper { .. }
        | RowTag::LinkLower { .. }
        | RowTag::StoreUpper { .. } => "capacity_bounds",
        RowTag::RampUp { .. } | RowTag::RampDown { .. } => "ramps",
        RowTag::AnnualDemand { .. } => "annual_demand",
        RowTag::Potential { .. } => "potential",
        RowTag::ChargeRateCouple { .. } => "charge_rate",
    }
}

pub fn duality_audit(p: &LpProblem, sol: &LpSolution) -> DualityAudit {
    let mut by_family: BTreeMap<String, f64> = BTreeMap::new();
    let mut rhs_total = 0.0;
    for (i, row) in p.rows.iter().enumerate() {
        let v = sol.row_dual(i) * row.rhs;
        rhs_total += v;
        *by_family.entry(family(&row.tag).into()).or_insert(0.0) += v;
    }
    let rent: f64 = (0..p.n_cols())
        .map(|j| sol.reduced_cost(j) * sol.col_value(j))
        .sum();
    let dual_objective = rhs_total + rent;
    let denom = sol.objective.abs().max(1.0);
    DualityAudit {
        primal_objective: sol.objective,
        dual_objective,
        rel_gap: (sol.objective - dual_objective).abs() / denom,
        rhs_by_family: by_family,
        bound_rent: rent,
    }
}

/// Everything worth keeping from one solved case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseResult {
    pub label: String,
    pub config: ScenarioConfig,
    pub backend: String,
    pub objective: f64,
    /// Built capacity per investable component, reporting slacks excluded.
    pub capacities: BTreeMap<String, f64>,
    /// Levelized cost per annual-demand load, €/MWh.
    pub levelized: BTreeMap<String, f64>,
    pub bus_prices: BTreeMap<String, ShadowStats>,
    pub breakdown: CostBreakdown,
    pub audit: DualityAudit,
    /// Biomethane bus dual minus the pre-integration reference cost.
    pub biomethane_delta: Option<ShadowStats>,
    /// True when the liquid CO2 path was built but operated below its
    /// minimum charge rate in some hour — the LP relaxation of the
    /// semicontinuous window was exercised and the design needs review.
    pub liquid_co2_below_min: bool,
    pub iterations: u64,
    pub wall_seconds: f64,
}

impl CaseResult {
    pub fn lcoh(&self) -> Option<f64> {
        self.levelized.get("h2_delivery").copied()
    }

    pub fn lcom(&self) -> Option<f64> {
        self.levelized.get("meoh_delivery").copied()
    }
}

/// Flows of one link across the horizon, in snapshot order.
fn link_flow_series(p: &LpProblem, sol: &LpSolution, link: &str) -> Vec<f64> {
    let mut flows: Vec<(u32, f64)> = p
        .cols
        .iter()
        .enumerate()
        .filter_map(|(j, c)| match &c.kind {
            ColKind::Flow { link: l, t } if l == link => Some((*t, sol.col_value(j))),
            _ => None,
        })
        .collect();
    flows.sort_by_key(|(t, _)| *t);
    flows.into_iter().map(|(_, f)| f).collect()
}

fn liquid_co2_below_min(p: &LpProblem, sol: &LpSolution, min_rate: f64) -> bool {
    const TOL: f64 = 1e-6;
    let built = p
        .col_index("cap__co2_liquid")
        .map(|j| sol.col_value(j) > TOL)
        .unwrap_or(false);
    if !built {
        return false;
    }
    ["co2_liquefier", "co2_evaporator"].iter().any(|link| {
        link_flow_series(p, sol, link)
            .iter()
            .any(|&f| f > TOL && f < min_rate - TOL)
    })
}

/// Assemble the full result bundle for one solved case.
pub fn case_result(
    cfg: &ScenarioConfig,
    cat: &Catalog,
    market: &MarketData,
    net: &Network,
    p: &LpProblem,
    sol: &LpSolution,
) -> CaseResult {
    let mut capacities = BTreeMap::new();
    for (j, col) in p.cols.iter().enumerate() {
        let comp = match &col.kind {
            ColKind::CapGen { gen } => gen,
            ColKind::CapLink { link } => link,
            ColKind::CapStore { store } => store,
            _ => continue,
        };
        let external = net
            .generators
            .iter()
            .find(|g| &g.name == comp)
            .map(|g| g.group.as_deref() == Some("external"))
            .or_else(|| {
                net.links
                    .iter()
                    .find(|l| &l.name == comp)
                    .map(|l| l.group.as_deref() == Some("external"))
            })
            .unwrap_or(false);
        if !external {
            capacities.insert(comp.clone(), sol.col_value(j));
        }
    }

    let reference = reference_biomethane_cost(market, cfg.co2_tax, cat);

    CaseResult {
        label: cfg.case_label(),
        config: cfg.clone(),
        backend: sol.backend.clone(),
        objective: sol.objective,
        capacities,
        levelized: levelized_costs(p, sol),
        bus_prices: bus_price_stats(net, p, sol),
        breakdown: cost_breakdown(net, p, sol),
        audit: duality_audit(p, sol),
        biomethane_delta: biomethane_price_delta(p, sol, &reference),
        liquid_co2_below_min: liquid_co2_below_min(
            p,
            sol,
            cat.constants.co2_liquid_rate_min_tph,
        ),
        iterations: sol.iterations,
        wall_seconds: sol.wall_seconds,
    }
}

// ---------------------------------------------------------------- CSV output

fn csv_writer(path: &Path) -> std::io::Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// Long-format `case,component,capacity` table.
pub fn write_capacities_csv(path: &Path, results: &[CaseResult]) -> std::io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["case", "component", "capacity"])?;
    for r in results {
        for (comp, cap) in &r.capacities {
            w.write_record([r.label.as_str(), comp, &format!("{cap:.6}")])?;
        }
    }
    w.flush()
}

/// Per-bus dual statistics, one row per case and bus.
pub fn write_prices_csv(path: &Path, results: &[CaseResult]) -> std::io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "case", "bus", "mean", "min", "q05", "q25", "median", "q75", "q95", "max",
    ])?;
    for r in results {
        for (bus, s) in &r.bus_prices {
            w.write_record([
                r.label.as_str(),
                bus,
                &format!("{:.6}", s.mean),
                &format!("{:.6}", s.min),
                &format!("{:.6}", s.q05),
                &format!("{:.6}", s.q25),
                &format!("{:.6}", s.median),
                &format!("{:.6}", s.q75),
                &format!("{:.6}", s.q95),
                &format!("{:.6}", s.max),
            ])?;
        }
    }
    w.flush()
}

/// `case,item,value` rows covering the cost breakdown, levelized costs and
/// the audit gap, so one file carries the whole economic summary.
pub fn write_breakdown_csv(path: &Path, results: &[CaseResult]) -> std::io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["case", "item", "value"])?;
    for r in results {
        let mut put = |item: &str, v: f64| -> std::io::Result<()> {
            w.write_record([r.label.as_str(), item, &format!("{v:.6}")])?;
            Ok(())
        };
        for (group, v) in &r.breakdown.capital_by_group {
            put(&format!("capital:{group}"), *v)?;
        }
        put("marginal_interface", r.breakdown.marginal_interface)?;
        put("marginal_domestic", r.breakdown.marginal_domestic)?;
        put("total", r.breakdown.total)?;
        put("fuel_sales_value", r.breakdown.fuel_sales_value)?;
        put("total_with_ptx_sales", r.breakdown.total_with_ptx_sales())?;
        put("objective", r.objective)?;
        put("audit_rel_gap", r.audit.rel_gap)?;
        if let Some(v) = r.lcoh() {
            put("lcoh", v)?;
        }
        if let Some(v) = r.lcom() {
            put("lcom", v)?;
        }
        if let Some(d) = &r.biomethane_delta {
            put("biomethane_delta_mean", d.mean)?;
        }
    }
    w.flush()
}

/// Hourly duals of selected buses for one case: `timestamp,bus,dual`.
pub fn write_hourly_duals_csv(
    path: &Path,
    net: &Network,
    p: &LpProblem,
    sol: &LpSolution,
    buses: &[&str],
) -> std::io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "bus", "dual"])?;
    let stamps = net.snapshots.timestamps();
    for bus in buses {
        if let Some(series) = bus_price_series(p, sol, bus) {
            for (ts, v) in stamps.iter().zip(series) {
                w.write_record([
                    ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true).as_str(),
                    bus,
                    &format!("{v:.6}"),
                ])?;
            }
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_hub, Catalog, ScenarioConfig};
    use crate::lp::assemble;
    use crate::market::synth;
    use crate::net::{CarrierUnit, Generator, Load, Network, Snapshots};
    use crate::solver::{solve_reference, SolverConfig};

    #[test]
    fn shadow_stats_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s = ShadowStats::from_series(&v).unwrap();
        assert_eq!(s.mean, 5.5);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.q05, 1.0);
        assert_eq!(s.q25, 3.0);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.q75, 8.0);
        assert_eq!(s.q95, 10.0);
        assert_eq!(s.max, 10.0);
        assert!(ShadowStats::from_series(&[]).is_none());
    }

    /// One generator, one annual demand. The demand dual must equal
    /// capital/8760 + marginal, independent of the horizon length.
    #[test]
    fn annual_demand_dual_is_levelized_cost() {
        let n = 876;
        let mut net = Network::new(Snapshots::hourly_index(n));
        net.add_carrier("electricity", CarrierUnit::Power);
        net.add_bus("b", "electricity");
        net.add_generator(
            Generator::extendable("gen", "b", 80_000.0)
                .marginal_cost(10.0)
                .group("plant"),
        );
        net.add_load(Load::annual("demand", "b", 100_000.0));
        let p = assemble(&net).unwrap();
        let sol = solve_reference(&p, &SolverConfig::default()).unwrap();

        let lev = levelized_costs(&p, &sol);
        let want = 80_000.0 / 8760.0 + 10.0;
        let got = lev["demand"];
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");

        let bd = cost_breakdown(&net, &p, &sol);
        assert!((bd.total - sol.objective).abs() < 1e-9 * sol.objective.abs().max(1.0));
        assert_eq!(bd.marginal_interface, 0.0);
        assert!(bd.capital_by_group["plant"] > 0.0);
        // cost recovery: the demand pays exactly the whole system cost
        assert!((bd.fuel_sales_value - sol.objective).abs() < 1e-6 * sol.objective);
        assert!(bd.total_with_ptx_sales().abs() < 1e-6 * sol.objective);

        let audit = duality_audit(&p, &sol);
        assert!(audit.rel_gap < 1e-9, "gap {}", audit.rel_gap);
        assert!(audit.rhs_by_family["annual_demand"] > 0.0);
    }

    #[test]
    fn interface_marginals_are_split_out() {
        let n = 24;
        let mut net = Network::new(Snapshots::hourly_index(n));
        net.add_carrier("electricity", CarrierUnit::Power);
        net.add_bus("b", "electricity");
        net.add_generator(
            Generator::extendable("import", "b", 0.0)
                .marginal_cost(50.0)
                .group("external")
                .interface(),
        );
        net.add_load(Load::fixed("town", "b", 3.0));
        let p = assemble(&net).unwrap();
        let sol = solve_reference(&p, &SolverConfig::default()).unwrap();
        let bd = cost_breakdown(&net, &p, &sol);
        assert!((bd.marginal_interface - 50.0 * 3.0 * n as f64).abs() < 1e-6);
        assert_eq!(bd.marginal_domestic, 0.0);
    }

    type Solved = (
        ScenarioConfig,
        crate::market::MarketData,
        Network,
        LpProblem,
        LpSolution,
    );

    fn solved_hub() -> &'static Solved {
        static HUB: std::sync::OnceLock<Solved> = std::sync::OnceLock::new();
        HUB.get_or_init(|| {
            let cfg = ScenarioConfig::h2_to_grid();
            let market = synth::market_data(2019, 24, 11);
            let net = build_hub(&cfg, &market, Catalog::builtin()).unwrap();
            let p = assemble(&net).unwrap();
            let sol = solve_reference(&p, &SolverConfig::default()).unwrap();
            (cfg, market, net, p, sol)
        })
    }

    #[test]
    fn hub_case_result_reconciles() {
        let (cfg, market, net, p, sol) = solved_hub();
        let r = case_result(cfg, Catalog::builtin(), market, net, p, sol);

        assert_eq!(r.label, "h2_to_grid_y2019_tax150_rec90_re50_dh0_bc0");
        assert!(r.objective.is_finite());

        // the economics close: breakdown equals objective, duality gap tiny
        let scale = r.objective.abs().max(1.0);
        assert!((r.breakdown.total - r.objective).abs() < 1e-6 * scale);
        assert!(r.audit.rel_gap < 1e-6, "gap {}", r.audit.rel_gap);

        // fuel costs come out of the demand duals
        let lcoh = r.lcoh().unwrap();
        let lcom = r.lcom().unwrap();
        assert!(lcoh > 0.0 && lcoh.is_finite());
        assert!(lcom > 0.0 && lcom.is_finite());

        // internal electricity prices exist and sit in a sane band
        for bus in ["el3", "el2", "h2", "meoh", "biomethane"] {
            assert!(r.bus_prices.contains_key(bus), "missing prices for {bus}");
        }

        // slack bookkeeping stays out of the capacity report
        assert!(!r.capacities.contains_key("dk1_slack"));
        assert!(!r.capacities.contains_key("ng_supply"));
        assert!(r.capacities.contains_key("wind"));
        assert!(r.capacities.contains_key("electrolysis"));

        assert!(!r.liquid_co2_below_min);
        assert!(r.biomethane_delta.is_some());
    }

    #[test]
    fn hub_csv_round_trip() {
        let (cfg, market, net, p, sol) = solved_hub();
        let r = case_result(cfg, Catalog::builtin(), market, net, p, sol);
        let dir = tempfile::tempdir().unwrap();

        let cap_path = dir.path().join("capacities.csv");
        write_capacities_csv(&cap_path, std::slice::from_ref(&r)).unwrap();
        let text = std::fs::read_to_string(&cap_path).unwrap();
        assert!(text.starts_with("case,component,capacity\n"));
        assert!(text.contains("wind"));

        let price_path = dir.path().join("prices.csv");
        write_prices_csv(&price_path, std::slice::from_ref(&r)).unwrap();
        let text = std::fs::read_to_string(&price_path).unwrap();
        assert!(text.lines().count() > 5);

        let bd_path = dir.path().join("breakdown.csv");
        write_breakdown_csv(&bd_path, std::slice::from_ref(&r)).unwrap();
        let text = std::fs::read_to_string(&bd_path).unwrap();
        assert!(text.contains("lcoh"));
        assert!(text.contains("total_with_ptx_sales"));

        let duals_path = dir.path().join("duals.csv");
        write_hourly_duals_csv(&duals_path, net, p, sol, &["el3", "el2"]).unwrap();
        let text = std::fs::read_to_string(&duals_path).unwrap();
        // header + 2 buses * 24 hours
        assert_eq!(text.lines().count(), 1 + 2 * 24);
    }

    #[test]
    fn breakdown_groups_cover_the_chain() {
        let (cfg, market, net, p, sol) = solved_hub();
        let r = case_result(cfg, Catalog::builtin(), market, net, p, sol);
        let groups = &r.breakdown.capital_by_group;
        assert!(groups.contains_key("renewables"));
        assert!(groups.contains_key("electrolysis"));
        assert!(groups.contains_key("meoh_chain"));
        let total_capital: f64 = groups.values().sum();
        assert!(total_capital > 0.0);
        // purchases and pellet imports are interface trades
        assert!(r.breakdown.marginal_interface != 0.0);
    }
}
