//! Technology catalog and hub construction.
//!
//! The catalog ships as an embedded TOML file with one record per technology:
//! investment cost, O&M, lifetime, conversion coefficients and operating
//! limits. [`build_hub`] turns a [`ScenarioConfig`] plus market data into a
//! complete [`Network`] for a biogas-anchored power-to-fuel site with two
//! electricity buses, a three-level heat network and a methanol chain.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::fnv;
use crate::market::MarketData;
use crate::net::{CarrierUnit, Generator, Load, MultiLink, Network, Profile, Store};

/// The embedded catalog source, kept human-editable.
pub const CATALOG_TOML: &str = include_str!("catalog.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechKind {
    Generator,
    Link,
    Store,
}

/// One catalog row: costs per reference unit plus the signed conversion
/// coefficients of the process it describes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechRecord {
    pub id: String,
    pub kind: TechKind,
    pub group: String,
    pub reference: String,
    pub reference_unit: String,
    /// k€ per reference unit.
    pub investment: f64,
    /// % of investment per year.
    pub fixed_om_pct: f64,
    /// € per reference-unit-hour of throughput.
    pub var_om: f64,
    /// Years.
    pub lifetime: f64,
    #[serde(default)]
    pub lifetime_assumed: bool,
    #[serde(default)]
    pub om_assumed: bool,
    #[serde(default)]
    pub min_load: Option<f64>,
    #[serde(default)]
    pub ramp_hours: Option<f64>,
    /// Signed coefficients per unit of reference flow; negative = consumed.
    #[serde(default)]
    pub flows: BTreeMap<String, f64>,
}

impl TechRecord {
    /// Coefficient for one carrier, zero when the record does not touch it.
    pub fn flow(&self, carrier: &str) -> f64 {
        self.flows.get(carrier).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub pellet_lhv_mj_per_kg: f64,
    pub pellet_dry_matter: f64,
    pub pellet_price_eur_per_t: f64,
    pub water_t_per_t_h2: f64,
    pub h2_lhv_mwh_per_t: f64,
    pub meoh_lhv_mwh_per_t: f64,
    pub heat_network_km: f64,
    pub h2_pipe_km: f64,
    pub co2_pipe_km: f64,
    pub pyrolysis_max_mw: f64,
    pub biomethane_plant_max_gwh: f64,
    pub biochar_yield_text: f64,
    pub h2_store_roundtrip_el_mwh_per_t: f64,
    pub co2_cylinder_extra_el_mwh_per_t: f64,
    pub co2_liquid_extra_el_mwh_per_t: f64,
    pub co2_liquid_heat_out_mwh_per_t: f64,
    pub co2_liquid_rate_min_tph: f64,
    pub co2_liquid_rate_max_tph: f64,
    pub compressor_heat_to_dh: f64,
    pub existing_ng_boiler_headroom: f64,
    pub battery_rate_per_hour: f64,
    pub thermal_store_rate_per_hour: f64,
}

impl Constants {
    /// MWh of heat per tonne of pellets at the catalog's LHV and dry-matter
    /// share: 16 MJ/kg * 0.80 / 3.6 = 3.56 MWh/t.
    pub fn pellet_mwh_per_t(&self) -> f64 {
        self.pellet_lhv_mj_per_kg * self.pellet_dry_matter / 3.6
    }

    /// Market pellet price converted to €/MWh of fuel.
    pub fn pellet_price_eur_per_mwh(&self) -> f64 {
        self.pellet_price_eur_per_t / self.pellet_mwh_per_t()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Efficiencies {
    pub ng_boiler: f64,
    pub electric_boiler: f64,
    pub biomass_boiler: f64,
    pub battery_charge: f64,
    pub battery_discharge: f64,
    pub thermal_battery_roundtrip: f64,
    pub hot_water_roundtrip: f64,
    pub heat_network_loss: f64,
    pub heat_pump_cop: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub version: String,
    pub schema: u32,
    pub discount_rate: f64,
    pub technology: Vec<TechRecord>,
    pub constants: Constants,
    pub efficiencies: Efficiencies,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown technology `{0}`")]
    UnknownTechnology(String),
    #[error("lifetime must be positive, got {0}")]
    BadLifetime(f64),
    #[error("catalog does not parse: {0}")]
    Parse(#[from] toml::de::Error),
}

impl Catalog {
    /// The embedded catalog, parsed once.
    pub fn builtin() -> &'static Catalog {
        static CAT: OnceLock<Catalog> = OnceLock::new();
        CAT.get_or_init(|| toml::from_str(CATALOG_TOML).expect("embedded catalog must parse"))
    }

    /// Parse a catalog from TOML text, e.g. a user-edited copy.
    pub fn from_toml(s: &str) -> Result<Catalog, CatalogError> {
        Ok(toml::from_str(s)?)
    }

    pub fn get(&self, id: &str) -> Result<&TechRecord, CatalogError> {
        self.technology
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| CatalogError::UnknownTechnology(id.to_string()))
    }

    /// Annualized fixed cost of one record at the catalog discount rate,
    /// k€ per reference unit and year.
    pub fn annualized(&self, id: &str) -> Result<f64, CatalogError> {
        self.annualized_at(id, self.discount_rate)
    }

    pub fn annualized_at(&self, id: &str, rate: f64) -> Result<f64, CatalogError> {
        let r = self.get(id)?;
        annuity(r.investment, r.lifetime, rate, r.fixed_om_pct)
    }
}

/// Annualized cost of `investment` amortized over `lifetime` years at `rate`,
/// plus fixed O&M as a percentage of the investment.
///
/// At `rate == 0` this degenerates to straight-line depreciation.
pub fn annuity(
    investment: f64,
    lifetime: f64,
    rate: f64,
    fixed_om_pct: f64,
) -> Result<f64, CatalogError> {
    if lifetime <= 0.0 {
        return Err(CatalogError::BadLifetime(lifetime));
    }
    let om = investment * fixed_om_pct / 100.0;
    let capital = if rate == 0.0 {
        investment / lifetime
    } else {
        investment * rate / (1.0 - (1.0 + rate).powf(-lifetime))
    };
    Ok(capital + om)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    H2ToGrid,
    MeohStandalone,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::H2ToGrid => "h2_to_grid",
            Scenario::MeohStandalone => "meoh_standalone",
        }
    }
}

/// One point in the sensitivity space: scenario, demands, prices and the
/// optional district-heating / biochar branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Annual hydrogen offtake to the external grid, GWh/y.
    pub h2_grid_demand_gwh: f64,
    /// Share of the biomethane plant's CO2 routed to methanol.
    pub co2_recovery: f64,
    /// €/t on fossil emissions; also the biochar credit value.
    pub co2_tax: f64,
    /// Ratio of annual external electricity sales headroom to the
    /// electricity embedded in the fuel demands.
    pub max_re: f64,
    pub price_year: i32,
    pub dh_enabled: bool,
    pub biochar_enabled: bool,
    /// Annual biomethane production, GWh/y; the plant runs flat.
    pub biomethane_output_gwh: f64,
    pub discount_rate: f64,
    /// Use the prose biochar yield (0.173 t/MWh) instead of the table value.
    pub biochar_yield_from_text: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::h2_to_grid()
    }
}

const RECOVERY_CHOICES: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 0.99];
const TAX_CHOICES: [f64; 3] = [0.0, 150.0, 250.0];
const MAX_RE_CHOICES: [f64; 3] = [0.1, 0.5, 1.0];
const YEAR_CHOICES: [i32; 2] = [2019, 2022];

fn in_set(v: f64, set: &[f64]) -> bool {
    set.iter().any(|s| (v - s).abs() < 1e-9)
}

impl ScenarioConfig {
    /// Reference configuration for the integrated scenario.
    pub fn h2_to_grid() -> Self {
        ScenarioConfig {
            scenario: Scenario::H2ToGrid,
            h2_grid_demand_gwh: 272.0,
            co2_recovery: 0.90,
            co2_tax: 150.0,
            max_re: 0.5,
            price_year: 2019,
            dh_enabled: false,
            biochar_enabled: false,
            biomethane_output_gwh: 190.0,
            discount_rate: 0.07,
            biochar_yield_from_text: false,
        }
    }

    /// Reference configuration for methanol production without grid hydrogen.
    pub fn meoh_standalone() -> Self {
        ScenarioConfig {
            scenario: Scenario::MeohStandalone,
            h2_grid_demand_gwh: 0.0,
            ..ScenarioConfig::h2_to_grid()
        }
    }

    /// Hard errors; an empty list means the configuration is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !in_set(self.co2_recovery, &RECOVERY_CHOICES) {
            errs.push(format!(
                "co2_recovery {} is outside the supported sensitivity range {:?}",
                self.co2_recovery, RECOVERY_CHOICES
            ));
        }
        if !in_set(self.co2_tax, &TAX_CHOICES) {
            errs.push(format!(
                "co2_tax {} is outside the supported sensitivity range {:?}",
                self.co2_tax, TAX_CHOICES
            ));
        }
        if !in_set(self.max_re, &MAX_RE_CHOICES) {
            errs.push(format!(
                "max_re {} is outside the supported sensitivity range {:?}",
                self.max_re, MAX_RE_CHOICES
            ));
        }
        if !YEAR_CHOICES.contains(&self.price_year) {
            errs.push(format!(
                "price_year {} is outside the supported sensitivity range {:?}",
                self.price_year, YEAR_CHOICES
            ));
        }
        if self.biomethane_output_gwh <= 0.0 {
            errs.push(format!(
                "biomethane_output_gwh must be positive, got {}",
                self.biomethane_output_gwh
            ));
        }
        if self.h2_grid_demand_gwh < 0.0 {
            errs.push(format!(
                "h2_grid_demand_gwh must be non-negative, got {}",
                self.h2_grid_demand_gwh
            ));
        }
        if self.scenario == Scenario::MeohStandalone && self.h2_grid_demand_gwh != 0.0 {
            errs.push(
                "a standalone methanol case carries no hydrogen offtake; \
                 set h2_grid_demand_gwh to 0"
                    .to_string(),
            );
        }
        if self.discount_rate < 0.0 {
            errs.push(format!(
                "discount_rate must be non-negative, got {}",
                self.discount_rate
            ));
        }
        errs
    }

    /// Soft findings that do not block a run.
    pub fn warnings(&self, cat: &Catalog) -> Vec<String> {
        let mut w = Vec::new();
        if self.biochar_enabled && self.co2_tax == 0.0 {
            w.push(
                "biochar credits are enabled but the CO2 tax is zero, \
                 so the credit is worth nothing"
                    .to_string(),
            );
        }
        if self.biomethane_output_gwh > cat.constants.biomethane_plant_max_gwh {
            w.push(format!(
                "biomethane_output_gwh {} exceeds the plant's maximum of {} GWh/y",
                self.biomethane_output_gwh, cat.constants.biomethane_plant_max_gwh
            ));
        }
        w
    }

    /// Compact, filesystem-safe label for this case.
    pub fn case_label(&self) -> String {
        format!(
            "{}_y{}_tax{}_rec{}_re{}_dh{}_bc{}",
            self.scenario.label(),
            self.price_year,
            self.co2_tax as i64,
            (self.co2_recovery * 100.0).round() as i64,
            (self.max_re * 100.0).round() as i64,
            u8::from(self.dh_enabled),
            u8::from(self.biochar_enabled),
        )
    }

    /// Stable hash of the canonical TOML form, for resume bookkeeping.
    pub fn config_hash(&self) -> u64 {
        let text = toml::to_string(self).expect("config serializes");
        fnv::fnv1a64(text.as_bytes())
    }

    /// Annual CO2 captured at the biomethane plant, t/y.
    pub fn co2_budget_t(&self, cat: &Catalog) -> Result<f64, CatalogError> {
        let plant = cat.get("biomethane_plant")?;
        Ok(self.biomethane_output_gwh * 1000.0 * plant.flow("co2"))
    }

    /// Annual methanol demand implied by the CO2 recovery ratio, MWh/y.
    pub fn meoh_demand_mwh(&self, cat: &Catalog) -> Result<f64, CatalogError> {
        let meoh = cat.get("meoh_synthesis")?;
        let co2_per_mwh = -meoh.flow("co2");
        Ok(self.co2_budget_t(cat)? * self.co2_recovery / co2_per_mwh)
    }

    pub fn h2_demand_mwh(&self) -> f64 {
        self.h2_grid_demand_gwh * 1000.0
    }

    /// Annual external electricity demand made available for sales, MWh/y:
    /// the fuel demands converted to electricity through the chain
    /// efficiencies and scaled by `max_re`.
    pub fn external_demand_target_mwh(&self, cat: &Catalog) -> Result<f64, CatalogError> {
        let h2_term = self.h2_demand_mwh() / alpha_h2_per_el(cat)?;
        let meoh_term = self.meoh_demand_mwh(cat)? / alpha_meoh_per_el(cat)?;
        Ok((h2_term + meoh_term) * self.max_re)
    }
}

/// MWh of hydrogen per MWh of electrolysis electricity.
pub fn alpha_h2_per_el(cat: &Catalog) -> Result<f64, CatalogError> {
    Ok(cat.get("electrolysis_large")?.flow("hydrogen"))
}

/// Total electricity embedded in one MWh of methanol: electrolysis for its
/// hydrogen, both feed compressors at steady state, and the direct draw of
/// the synthesis plant.
pub fn meoh_el_intensity(cat: &Catalog) -> Result<f64, CatalogError> {
    let elz = cat.get("electrolysis_large")?;
    let meoh = cat.get("meoh_synthesis")?;
    let h2c = cat.get("h2_compressor")?;
    let co2c = cat.get("co2_compressor")?;
    let h2_per_meoh = -meoh.flow("hydrogen");
    let co2_per_meoh = -meoh.flow("co2");
    Ok(h2_per_meoh / elz.flow("hydrogen")
        + h2_per_meoh * -h2c.flow("electricity")
        + co2_per_meoh * -co2c.flow("electricity")
        + -meoh.flow("electricity"))
}

/// MWh of methanol per MWh of electricity, the reciprocal of
/// [`meoh_el_intensity`].
pub fn alpha_meoh_per_el(cat: &Catalog) -> Result<f64, CatalogError> {
    Ok(1.0 / meoh_el_intensity(cat)?)
}

/// Printable derivation of the methanol electricity intensity, for run logs.
pub fn alpha_derivation(cat: &Catalog) -> Result<String, CatalogError> {
    let elz = cat.get("electrolysis_large")?;
    let meoh = cat.get("meoh_synthesis")?;
    let h2c = cat.get("h2_compressor")?;
    let co2c = cat.get("co2_compressor")?;
    let h2_per_meoh = -meoh.flow("hydrogen");
    let co2_per_meoh = -meoh.flow("co2");
    let a = h2_per_meoh / elz.flow("hydrogen");
    let b = h2_per_meoh * -h2c.flow("electricity");
    let c = co2_per_meoh * -co2c.flow("electricity");
    let d = -meoh.flow("electricity");
    let total = a + b + c + d;
    Ok(format!(
        "el per MWh MeOH = {h2_per_meoh}/{} (electrolysis) \
         + {h2_per_meoh}*{} (H2 compression) + {co2_per_meoh}*{} (CO2 compression) \
         + {d} (synthesis) = {a:.6} + {b:.6} + {c:.6} + {d:.6} = {total:.6} MWh_el/MWh_MeOH \
         => alpha = {:.10}",
        elz.flow("hydrogen"),
        -h2c.flow("electricity"),
        -co2c.flow("electricity"),
        1.0 / total,
    ))
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("invalid scenario configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("market data does not validate: {}", .0.join("; "))]
    Market(Vec<String>),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Assemble the full hub network for one scenario point.
///
/// The topology follows the site layout: two electricity buses (`el3` for
/// renewables and electrolysis, `el2` for everything else), a hydrogen pair
/// (electrolyzer pressure and compressed), low- and high-pressure CO2, three
/// heat levels, and the external interfaces for grid power, natural gas,
/// district heating and biochar credits. Exogenous prices live on the
/// interface components; every internal carrier price is left to the LP
/// duals.
pub fn build_hub(
    cfg: &ScenarioConfig,
    market: &MarketData,
    cat: &Catalog,
) -> Result<Network, BuildError> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(BuildError::Config(errs));
    }
    let mviol = market.validate();
    if !mviol.is_empty() {
        return Err(BuildError::Market(
            mviol.into_iter().map(|v| v.0).collect(),
        ));
    }

    let cs = &cat.constants;
    let eff = &cat.efficiencies;
    let mut net = Network::new(market.snapshots.clone());

    net.add_carrier("electricity", CarrierUnit::Power);
    net.add_carrier("hydrogen", CarrierUnit::Power);
    net.add_carrier("methanol", CarrierUnit::Power);
    net.add_carrier("methane", CarrierUnit::Power);
    net.add_carrier("pellets", CarrierUnit::Power);
    net.add_carrier("heat", CarrierUnit::Power);
    net.add_carrier("co2", CarrierUnit::MassFlow);
    net.add_carrier("biochar", CarrierUnit::MassFlow);

    for bus in ["dk1", "el3", "el2", "battery"] {
        net.add_bus(bus, "electricity");
    }
    for bus in ["h2", "h2_hp", "h2_tank"] {
        net.add_bus(bus, "hydrogen");
    }
    for bus in ["co2_lp", "co2_hp", "co2_liquid", "co2_cylinders"] {
        net.add_bus(bus, "co2");
    }
    for bus in ["mt_heat", "dh_heat", "lt_heat", "thermal_store", "water_tank"] {
        net.add_bus(bus, "heat");
    }
    net.add_bus("meoh", "methanol");
    net.add_bus("biomethane", "methane");
    net.add_bus("ng_grid", "methane");
    net.add_bus("pellets", "pellets");
    if cfg.dh_enabled {
        net.add_bus("dh_grid", "heat");
    }
    if cfg.biochar_enabled {
        net.add_bus("biochar", "biochar");
    }

    let purchase = market.purchase_price(cfg.co2_tax);
    let sale: Vec<f64> = market.sale_price().iter().map(|p| -p).collect();
    let ng_price = market.ng_price(cfg.co2_tax);
    let mask = market.grid_for_fuel_mask();

    // --- renewables ----------------------------------------------------
    let wind_cap = cat.annualized("onshore_wind")? + cat.annualized("grid_connection")?;
    let solar_cap = cat.annualized("solar_pv")? + cat.annualized("grid_connection")?;
    net.add_generator(
        Generator::extendable("wind", "el3", wind_cap)
            .avail_max(market.wind_cf.clone())
            .marginal_cost(cat.get("onshore_wind")?.var_om)
            .group("renewables"),
    );
    net.add_generator(
        Generator::extendable("solar", "el3", solar_cap)
            .avail_max(market.solar_cf.clone())
            .group("renewables"),
    );

    // --- grid interface -------------------------------------------------
    let trafo = cat.annualized("transformer")?;
    net.add_link(
        MultiLink::extendable("dk1_to_el3", "dk1", trafo)
            .output("el3", 1.0)
            .marginal_cost(purchase.clone())
            .avail_max(mask)
            .group("symbiosis")
            .interface(),
    );
    net.add_link(
        MultiLink::extendable("dk1_to_el2", "dk1", trafo)
            .output("el2", 1.0)
            .marginal_cost(purchase)
            .group("symbiosis")
            .interface(),
    );
    net.add_link(
        MultiLink::extendable("el3_to_dk1", "el3", trafo)
            .output("dk1", 1.0)
            .marginal_cost(sale)
            .group("symbiosis")
            .interface(),
    );
    net.add_link(
        MultiLink::extendable("re_to_hub", "el3", trafo)
            .output("el2", 1.0)
            .group("symbiosis"),
    );
    // the external demand can always fall back on this zero-cost source, so
    // only actual sales revenue reaches the objective.
    net.add_generator(Generator::extendable("dk1_slack", "dk1", 0.0).group("external"));
    net.add_load(Load::fixed(
        "external_power",
        "dk1",
        market.external_demand(cfg.external_demand_target_mwh(cat)?),
    ));

    // --- electrolysis ---------------------------------------------------
    let elz_id = match cfg.scenario {
        Scenario::H2ToGrid => "electrolysis_large",
        Scenario::MeohStandalone => "electrolysis_small",
    };
    let elz = cat.get(elz_id)?;
    let water_tph_per_mw = cs.water_t_per_t_h2 * elz.flow("hydrogen") / cs.h2_lhv_mwh_per_t;
    let h2_pipe_per_mw = cat.annualized("h2_pipe")? * cs.h2_pipe_km * elz.flow("hydrogen");
    let elz_cap = cat.annualized(elz_id)?
        + cat.annualized("water_purification")? * water_tph_per_mw
        + h2_pipe_per_mw;
    net.add_link(
        MultiLink::extendable("electrolysis", "el3", elz_cap)
            .output("h2", elz.flow("hydrogen"))
            .output("lt_heat", elz.flow("heat_lt"))
            .min_load(elz.min_load.unwrap_or(0.0))
            .group("electrolysis"),
    );

    // --- methanol chain ---------------------------------------------------
    let h2c = cat.get("h2_compressor")?;
    net.add_link(
        MultiLink::extendable("h2_compressor", "h2", cat.annualized("h2_compressor")?)
            .output("h2_hp", 1.0)
            .output("el2", h2c.flow("electricity"))
            .output(
                "dh_heat",
                -h2c.flow("electricity") * cs.compressor_heat_to_dh,
            )
            .group("meoh_chain"),
    );
    let co2c = cat.get("co2_compressor")?;
    let co2c_cap = cat.annualized("co2_compressor")? + cat.annualized("co2_pipe")? * cs.co2_pipe_km;
    net.add_link(
        MultiLink::extendable("co2_compressor", "co2_lp", co2c_cap)
            .output("co2_hp", 1.0)
            .output("el2", co2c.flow("electricity"))
            .output(
                "dh_heat",
                -co2c.flow("electricity") * cs.compressor_heat_to_dh,
            )
            .group("meoh_chain"),
    );
    let meoh = cat.get("meoh_synthesis")?;
    net.add_link(
        MultiLink::extendable("meoh_synthesis", "meoh", cat.annualized("meoh_synthesis")?)
            .product_referenced()
            .output("h2_hp", meoh.flow("hydrogen"))
            .output("co2_hp", meoh.flow("co2"))
            .output("el2", meoh.flow("electricity"))
            .output("mt_heat", meoh.flow("heat_mt"))
            .output("dh_heat", meoh.flow("heat_dh"))
            .min_load(meoh.min_load.unwrap_or(0.0))
            .ramps(
                1.0 / meoh.ramp_hours.unwrap_or(f64::INFINITY),
                1.0 / meoh.ramp_hours.unwrap_or(f64::INFINITY),
            )
            .group("meoh_chain"),
    );

    // --- hydrogen and CO2 storage ----------------------------------------
    net.add_store(
        Store::extendable("h2_tank", "h2_tank", cat.annualized("h2_storage")?)
            .cyclic(true)
            .group("meoh_chain"),
    );
    let h2_charge_el = -cs.h2_store_roundtrip_el_mwh_per_t / cs.h2_lhv_mwh_per_t;
    net.add_link(
        MultiLink::extendable("h2_tank_charge", "h2_hp", 0.0)
            .output("h2_tank", 1.0)
            .output("el2", h2_charge_el)
            .group("meoh_chain"),
    );
    net.add_link(
        MultiLink::extendable("h2_tank_discharge", "h2_tank", 0.0)
            .output("h2_hp", 1.0)
            .group("meoh_chain"),
    );

    net.add_store(
        Store::extendable(
            "co2_cylinders",
            "co2_cylinders",
            cat.annualized("co2_store_cylinders")?,
        )
        .cyclic(true)
        .group("meoh_chain"),
    );
    net.add_link(
        MultiLink::extendable("co2_cylinder_charge", "co2_hp", 0.0)
            .output("co2_cylinders", 1.0)
            .output("el2", -cs.co2_cylinder_extra_el_mwh_per_t)
            .group("meoh_chain"),
    );
    net.add_link(
        MultiLink::extendable("co2_cylinder_discharge", "co2_cylinders", 0.0)
            .output("co2_hp", 1.0)
            .group("meoh_chain"),
    );

    net.add_store(
        Store::extendable(
            "co2_liquid",
            "co2_liquid",
            cat.annualized("co2_store_liquid")?,
        )
        .cyclic(true)
        .group("meoh_chain"),
    );
    let liq = cat.get("co2_liquefaction")?;
    net.add_link(
        MultiLink::extendable("co2_liquefier", "co2_lp", cat.annualized("co2_liquefaction")?)
            .output("co2_liquid", 1.0)
            .output("el2", liq.flow("electricity"))
            .output("lt_heat", liq.flow("heat_lt"))
            .potential(cs.co2_liquid_rate_max_tph)
            .group("meoh_chain"),
    );
    net.add_link(
        MultiLink::extendable("co2_evaporator", "co2_liquid", 0.0)
            .output("co2_lp", 1.0)
            .potential(cs.co2_liquid_rate_max_tph)
            .group("meoh_chain"),
    );

    // --- biomethane baseline ----------------------------------------------
    let flat_mw = cfg.biomethane_output_gwh * 1000.0 / 8760.0;
    let plant = cat.get("biomethane_plant")?;
    // capacity sits above the flat draw so the bound never carries rent and
    // the methane dual reads pure operating cost.
    net.add_link(
        MultiLink::fixed("biomethane_plant", "biomethane", flat_mw * 1.1)
            .product_referenced()
            .output("mt_heat", plant.flow("heat_mt"))
            .output("el2", plant.flow("electricity"))
            .output("co2_lp", plant.flow("co2"))
            .output("pellets", plant.flow("pellets"))
            .group("symbiosis"),
    );
    net.add_load(Load::fixed("biomethane_offtake", "biomethane", flat_mw));

    // --- heat supply ------------------------------------------------------
    net.add_generator(
        Generator::extendable("ng_supply", "ng_grid", 0.0)
            .marginal_cost(ng_price)
            .group("external")
            .interface(),
    );
    let ngb = cat.get("ng_boiler")?;
    let existing_cap = cs.existing_ng_boiler_headroom * flat_mw * -plant.flow("heat_mt");
    net.add_link(
        MultiLink::fixed("existing_ng_boiler", "mt_heat", existing_cap)
            .product_referenced()
            .output("ng_grid", -1.0 / eff.ng_boiler)
            .marginal_cost(ngb.var_om)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("ng_boiler", "mt_heat", cat.annualized("ng_boiler")?)
            .product_referenced()
            .output("ng_grid", -1.0 / eff.ng_boiler)
            .marginal_cost(ngb.var_om)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("electric_boiler", "mt_heat", cat.annualized("electric_boiler")?)
            .product_referenced()
            .output("el2", -1.0 / eff.electric_boiler)
            .marginal_cost(cat.get("electric_boiler")?.var_om)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("biomass_boiler", "mt_heat", cat.annualized("biomass_boiler")?)
            .product_referenced()
            .output("pellets", -1.0 / eff.biomass_boiler)
            .group("heat"),
    );
    net.add_generator(
        Generator::extendable("pellet_market", "pellets", 0.0)
            .marginal_cost(cs.pellet_price_eur_per_mwh())
            .group("external")
            .interface(),
    );

    if cfg.biochar_enabled {
        let pyro = cat.get("pyrolysis")?;
        let yield_t = if cfg.biochar_yield_from_text {
            cs.biochar_yield_text
        } else {
            -pyro.flow("co2")
        };
        let ramp = 1.0 / pyro.ramp_hours.unwrap_or(f64::INFINITY);
        net.add_link(
            MultiLink::extendable("pyrolysis", "pellets", cat.annualized("pyrolysis")?)
                .output("el2", pyro.flow("electricity"))
                .output("mt_heat", pyro.flow("heat_mt"))
                .output("biochar", yield_t)
                .marginal_cost(pyro.var_om)
                .potential(cs.pyrolysis_max_mw)
                .ramps(ramp, ramp)
                .group("heat"),
        );
        net.add_link(
            MultiLink::extendable("biochar_credit", "biochar", 0.0)
                .marginal_cost(-cfg.co2_tax)
                .group("heat")
                .interface(),
        );
    }

    // --- heat network -----------------------------------------------------
    let cascade_cap =
        cat.annualized("heat_exchanger")? + cat.annualized("heat_network")? * cs.heat_network_km;
    let cascade_eff = 1.0 - eff.heat_network_loss;
    net.add_link(
        MultiLink::extendable("mt_to_dh", "mt_heat", cascade_cap)
            .output("dh_heat", cascade_eff)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("dh_to_lt", "dh_heat", cascade_cap)
            .output("lt_heat", cascade_eff)
            .group("heat"),
    );

    if cfg.dh_enabled {
        let hp = cat.get("heat_pump")?;
        let cop = hp.flow("heat_dh");
        net.add_link(
            MultiLink::extendable("heat_pump", "el2", cat.annualized("heat_pump")? * cop)
                .output("lt_heat", hp.flow("heat_lt"))
                .output("dh_heat", cop)
                .marginal_cost(hp.var_om * cop)
                .group("heat"),
        );
        // the connection beyond the fence is owned by the DH operator, so
        // only the heat exchanger is paid here.
        net.add_link(
            MultiLink::extendable("dh_sales", "dh_grid", cat.annualized("heat_exchanger")?)
                .product_referenced()
                .output("dh_heat", -1.0 / cascade_eff)
                .marginal_cost(-crate::market::DH_SALE_PRICE)
                .group("heat")
                .interface(),
        );
        net.add_generator(Generator::extendable("dh_slack", "dh_grid", 0.0).group("external"));
        net.add_load(Load::fixed(
            "dh_offtake",
            "dh_grid",
            market.dh_demand.clone(),
        ));
    }

    // --- electricity and heat storage --------------------------------------
    net.add_store(
        Store::extendable("battery", "battery", cat.annualized("battery")?)
            .cyclic(true)
            .group("symbiosis"),
    );
    net.add_link(
        MultiLink::extendable("battery_charge", "el2", cat.annualized("battery_inverter")?)
            .output("battery", eff.battery_charge)
            .charge_rate_of("battery", cs.battery_rate_per_hour)
            .group("symbiosis"),
    );
    net.add_link(
        MultiLink::extendable("battery_discharge", "battery", 0.0)
            .output("el2", eff.battery_discharge)
            .charge_rate_of("battery", cs.battery_rate_per_hour)
            .group("symbiosis"),
    );

    let thermal_leg = eff.thermal_battery_roundtrip.sqrt();
    net.add_store(
        Store::extendable("thermal_store", "thermal_store", cat.annualized("thermal_battery")?)
            .cyclic(true)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("thermal_charge", "mt_heat", 0.0)
            .output("thermal_store", thermal_leg)
            .charge_rate_of("thermal_store", cs.thermal_store_rate_per_hour)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("thermal_discharge", "thermal_store", 0.0)
            .output("mt_heat", thermal_leg)
            .charge_rate_of("thermal_store", cs.thermal_store_rate_per_hour)
            .group("heat"),
    );

    let water_leg = eff.hot_water_roundtrip.sqrt();
    net.add_store(
        Store::extendable("water_tank", "water_tank", cat.annualized("hot_water_tank")?)
            .cyclic(true)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("water_tank_charge", "dh_heat", 0.0)
            .output("water_tank", water_leg)
            .charge_rate_of("water_tank", cs.thermal_store_rate_per_hour)
            .group("heat"),
    );
    net.add_link(
        MultiLink::extendable("water_tank_discharge", "water_tank", 0.0)
            .output("dh_heat", water_leg)
            .charge_rate_of("water_tank", cs.thermal_store_rate_per_hour)
            .group("heat"),
    );

    // --- free disposal ------------------------------------------------------
    net.add_link(MultiLink::extendable("co2_vent", "co2_lp", 0.0).group("external"));
    net.add_link(MultiLink::extendable("lt_vent", "lt_heat", 0.0).group("external"));
    net.add_link(MultiLink::extendable("pellet_disposal", "pellets", 0.0).group("external"));

    // --- fuel demands ---------------------------------------------------------
    if cfg.h2_demand_mwh() > 0.0 {
        net.add_load(Load::annual("h2_delivery", "h2", cfg.h2_demand_mwh()));
    }
    net.add_load(Load::annual(
        "meoh_delivery",
        "meoh",
        cfg.meoh_demand_mwh(cat)?,
    ));

    Ok(net)
}
