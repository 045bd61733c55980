//! The network data model: carriers, buses, generators, multi-port links,
//! stores and loads over an hourly horizon.
//!
//! A network is a plain declarative description — nothing here optimizes.
//! The [`crate::lp`] module compiles a validated network into a linear
//! program; this module owns the vocabulary and the consistency checks.
//!
//! Conventions that everything downstream relies on:
//!
//! * Every bus belongs to a carrier, and a carrier fixes the unit of flow
//!   on its buses: `Power` means MW (storage in MWh), `MassFlow` means t/h
//!   (storage in t).
//! * A [`MultiLink`] converts flow between buses. Its single flow variable
//!   is measured on `bus0` with the signed coefficient `bus0_coeff`
//!   (−1 for links measured at an input, +1 for links measured at their
//!   product bus); every other port carries a signed ratio per unit of
//!   flow — negative ratios are additional inputs, positive are outputs.
//! * A [`Store`] sits alone on its own bus, connected to the rest of the
//!   network by charge/discharge links; charging and discharging
//!   efficiencies live on those links, the store itself only has a
//!   standing loss.
//! * Capital costs are annualized €/unit/year; marginal costs are € per
//!   MWh (or per tonne on mass-flow carriers). Reduced horizons are the
//!   LP compiler's business, not the network's.

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// Unit of flow on a carrier: MW (energy) or t/h (mass).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CarrierUnit {
    Power,
    MassFlow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Carrier {
    pub name: String,
    pub unit: CarrierUnit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub name: String,
    pub carrier: String,
}

/// The model horizon: consecutive hourly UTC timestamps.
///
/// Reduced horizons (N < 8760) are first-class: annual quantities are
/// prorated by N/8760 during LP compilation, and [`Snapshots::horizon_weight`]
/// is the factor that scales results back up to a year.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshots {
    timestamps: Vec<DateTime<Utc>>,
}

impl Snapshots {
    /// `n` consecutive hours starting at `start`.
    pub fn hourly(start: DateTime<Utc>, n: usize) -> Self {
        let timestamps = (0..n)
            .map(|k| start + Duration::hours(k as i64))
            .collect();
        Snapshots { timestamps }
    }

    /// `n` consecutive hours with a fixed synthetic epoch. Convenient for
    /// toys and tests where the calendar does not matter.
    pub fn hourly_index(n: usize) -> Self {
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        Self::hourly(start, n)
    }

    /// From an explicit timestamp list, e.g. parsed out of a CSV file.
    /// Non-uniform spacing is reported by [`Network::validate`], not here.
    pub fn from_timestamps(timestamps: Vec<DateTime<Utc>>) -> Self {
        Snapshots { timestamps }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    /// 8760 / N — multiply per-horizon totals by this to annualize them.
    pub fn horizon_weight(&self) -> f64 {
        8760.0 / self.timestamps.len() as f64
    }

    /// N / 8760 — the factor applied to annualized capital costs and
    /// annual demand totals when compiling a reduced horizon.
    pub fn capital_scale(&self) -> f64 {
        self.timestamps.len() as f64 / 8760.0
    }

    /// True when every step is exactly one hour.
    pub fn is_uniform_hourly(&self) -> bool {
        self.timestamps
            .windows(2)
            .all(|w| w[1] - w[0] == Duration::hours(1))
    }
}

/// A value that is either constant over the horizon or given per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Scalar(f64),
    Series(Vec<f64>),
}

impl Profile {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Profile::Scalar(v) => *v,
            Profile::Series(s) => s[t],
        }
    }

    /// Length check against the horizon; scalars fit any horizon.
    pub fn fits(&self, n: usize) -> bool {
        match self {
            Profile::Scalar(_) => true,
            Profile::Series(s) => s.len() == n,
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Profile::Scalar(v) => *v,
            Profile::Series(s) => s.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Profile::Scalar(v) => *v,
            Profile::Series(s) => s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn is_constant(&self, v: f64) -> bool {
        match self {
            Profile::Scalar(s) => *s == v,
            Profile::Series(s) => s.iter().all(|x| *x == v),
        }
    }
}

impl From<f64> for Profile {
    fn from(v: f64) -> Self {
        Profile::Scalar(v)
    }
}

impl From<Vec<f64>> for Profile {
    fn from(v: Vec<f64>) -> Self {
        Profile::Series(v)
    }
}

/// A source of flow on one bus, with optional investable capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub bus: String,
    /// Capacity is a decision variable when true; otherwise
    /// `fixed_capacity` is substituted as a constant.
    pub extendable: bool,
    pub fixed_capacity: Option<f64>,
    /// Annualized capital cost, €/unit/year (unit = MW or t/h).
    pub capital_cost: f64,
    /// €/MWh (or €/t). Negative values are revenues.
    pub marginal_cost: Profile,
    /// Per-unit availability floor and ceiling: g̲·G ≤ g ≤ ḡ·G.
    pub avail_min: Profile,
    pub avail_max: Profile,
    /// Hard cap on installed capacity.
    pub potential: Option<f64>,
    /// Per-unit-of-capacity ramp limits per hour; `None` = unconstrained.
    pub ramp_up: Option<f64>,
    pub ramp_down: Option<f64>,
    /// Reporting group for the cost breakdown.
    pub group: Option<String>,
    /// Trades with an external market (its marginal cost is a price).
    pub interface: bool,
}

impl Generator {
    pub fn extendable(name: &str, bus: &str, capital_cost: f64) -> Self {
        Generator {
            name: name.into(),
            bus: bus.into(),
            extendable: true,
            fixed_capacity: None,
            capital_cost,
            marginal_cost: Profile::Scalar(0.0),
            avail_min: Profile::Scalar(0.0),
            avail_max: Profile::Scalar(1.0),
            potential: None,
            ramp_up: None,
            ramp_down: None,
            group: None,
            interface: false,
        }
    }

    pub fn fixed(name: &str, bus: &str, capacity: f64) -> Self {
        Generator {
            name: name.into(),
            bus: bus.into(),
            extendable: false,
            fixed_capacity: Some(capacity),
            capital_cost: 0.0,
            marginal_cost: Profile::Scalar(0.0),
            avail_min: Profile::Scalar(0.0),
            avail_max: Profile::Scalar(1.0),
            potential: None,
            ramp_up: None,
            ramp_down: None,
            group: None,
            interface: false,
        }
    }

    pub fn marginal_cost(mut self, c: impl Into<Profile>) -> Self {
        self.marginal_cost = c.into();
        self
    }

    pub fn avail_min(mut self, p: impl Into<Profile>) -> Self {
        self.avail_min = p.into();
        self
    }

    pub fn avail_max(mut self, p: impl Into<Profile>) -> Self {
        self.avail_max = p.into();
        self
    }

    pub fn potential(mut self, cap: f64) -> Self {
        self.potential = Some(cap);
        self
    }

    pub fn ramps(mut self, up: f64, down: f64) -> Self {
        self.ramp_up = Some(up);
        self.ramp_down = Some(down);
        self
    }

    pub fn group(mut self, g: &str) -> Self {
        self.group = Some(g.into());
        self
    }

    pub fn interface(mut self) -> Self {
        self.interface = true;
        self
    }
}

/// One secondary port of a multi-link: a bus plus a signed ratio per unit
/// of link flow (negative = consumed, positive = produced).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Port {
    pub bus: String,
    pub coeff: Profile,
}

/// Couples a link's capacity to a store's energy capacity:
/// F_link ≤ per_hour · E_store. This is how charge/discharge rate limits
/// ("C-rates") are expressed for investable storage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeRateCouple {
    pub store: String,
    pub per_hour: f64,
}

/// A conversion process between buses with a single flow variable.
///
/// The flow is measured on `bus0` with coefficient `bus0_coeff`: −1 when
/// the flow is counted at an input (an electrolyzer measured in MW of
/// electricity drawn), +1 when counted at the product (a methanol plant
/// measured in MW of methanol made, a boiler in MW of heat). All other
/// ports are signed ratios relative to that unit of flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiLink {
    pub name: String,
    pub bus0: String,
    pub bus0_coeff: f64,
    pub outputs: Vec<Port>,
    pub extendable: bool,
    pub fixed_capacity: Option<f64>,
    /// Annualized capital cost, €/unit-of-flow/year.
    pub capital_cost: f64,
    /// € per unit of flow. Negative values are sales revenues.
    pub marginal_cost: Profile,
    /// Per-unit flow floor and ceiling relative to capacity. A floor of
    /// −1 makes the link bidirectional.
    pub avail_min: Profile,
    pub avail_max: Profile,
    /// Relaxed always-on floor: f ≥ min_load · F at every hour.
    pub min_load: f64,
    pub potential: Option<f64>,
    pub ramp_up: Option<f64>,
    pub ramp_down: Option<f64>,
    pub charge_rate_of: Option<ChargeRateCouple>,
    pub group: Option<String>,
    pub interface: bool,
}

impl MultiLink {
    pub fn extendable(name: &str, bus0: &str, capital_cost: f64) -> Self {
        MultiLink {
            name: name.into(),
            bus0: bus0.into(),
            bus0_coeff: -1.0,
            outputs: Vec::new(),
            extendable: true,
            fixed_capacity: None,
            capital_cost,
            marginal_cost: Profile::Scalar(0.0),
            avail_min: Profile::Scalar(0.0),
            avail_max: Profile::Scalar(1.0),
            min_load: 0.0,
            potential: None,
            ramp_up: None,
            ramp_down: None,
            charge_rate_of: None,
            group: None,
            interface: false,
        }
    }

    pub fn fixed(name: &str, bus0: &str, capacity: f64) -> Self {
        let mut l = Self::extendable(name, bus0, 0.0);
        l.extendable = false;
        l.fixed_capacity = Some(capacity);
        l
    }

    /// Measure the flow at the product bus instead of an input.
    pub fn product_referenced(mut self) -> Self {
        self.bus0_coeff = 1.0;
        self
    }

    pub fn output(mut self, bus: &str, coeff: impl Into<Profile>) -> Self {
        self.outputs.push(Port {
            bus: bus.into(),
            coeff: coeff.into(),
        });
        self
    }

    pub fn marginal_cost(mut self, c: impl Into<Profile>) -> Self {
        self.marginal_cost = c.into();
        self
    }

    pub fn avail_min(mut self, p: impl Into<Profile>) -> Self {
        self.avail_min = p.into();
        self
    }

    pub fn avail_max(mut self, p: impl Into<Profile>) -> Self {
        self.avail_max = p.into();
        self
    }

    pub fn min_load(mut self, ml: f64) -> Self {
        self.min_load = ml;
        self
    }

    pub fn potential(mut self, cap: f64) -> Self {
        self.potential = Some(cap);
        self
    }

    pub fn ramps(mut self, up: f64, down: f64) -> Self {
        self.ramp_up = Some(up);
        self.ramp_down = Some(down);
        self
    }

    pub fn charge_rate_of(mut self, store: &str, per_hour: f64) -> Self {
        self.charge_rate_of = Some(ChargeRateCouple {
            store: store.into(),
            per_hour,
        });
        self
    }

    pub fn group(mut self, g: &str) -> Self {
        self.group = Some(g.into());
        self
    }

    pub fn interface(mut self) -> Self {
        self.interface = true;
        self
    }
}

/// Energy (or mass) storage with an hourly state equation. Lives alone on
/// its own bus; see the module docs for the wiring convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Store {
    pub name: String,
    pub bus: String,
    pub extendable: bool,
    /// Energy capacity (MWh or t) when not extendable.
    pub fixed_capacity: Option<f64>,
    /// Annualized capital cost, €/MWh/year (or €/t/year).
    pub capital_cost: f64,
    /// The horizon closes on itself when true (default): e₋₁ ≔ e_{N−1}.
    /// Non-cyclic stores start empty.
    pub cyclic: bool,
    /// Fraction of stored energy lost per hour.
    pub standing_loss: f64,
    pub potential: Option<f64>,
    pub group: Option<String>,
}

impl Store {
    pub fn extendable(name: &str, bus: &str, capital_cost: f64) -> Self {
        Store {
            name: name.into(),
            bus: bus.into(),
            extendable: true,
            fixed_capacity: None,
            capital_cost,
            cyclic: true,
            standing_loss: 0.0,
            potential: None,
            group: None,
        }
    }

    pub fn fixed(name: &str, bus: &str, capacity: f64) -> Self {
        let mut s = Self::extendable(name, bus, 0.0);
        s.extendable = false;
        s.fixed_capacity = Some(capacity);
        s
    }

    pub fn cyclic(mut self, c: bool) -> Self {
        self.cyclic = c;
        self
    }

    pub fn standing_loss(mut self, l: f64) -> Self {
        self.standing_loss = l;
        self
    }

    pub fn potential(mut self, cap: f64) -> Self {
        self.potential = Some(cap);
        self
    }

    pub fn group(mut self, g: &str) -> Self {
        self.group = Some(g.into());
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum LoadKind {
    /// Must be served exactly at every snapshot.
    Fixed(Profile),
    /// Annual total (MWh/y or t/y); the hourly delivery pattern is free
    /// and chosen by the optimizer. Prorated by N/8760 on reduced horizons.
    Annual(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Load {
    pub name: String,
    pub bus: String,
    pub kind: LoadKind,
}

impl Load {
    pub fn fixed(name: &str, bus: &str, demand: impl Into<Profile>) -> Self {
        Load {
            name: name.into(),
            bus: bus.into(),
            kind: LoadKind::Fixed(demand.into()),
        }
    }

    pub fn annual(name: &str, bus: &str, total_per_year: f64) -> Self {
        Load {
            name: name.into(),
            bus: bus.into(),
            kind: LoadKind::Annual(total_per_year),
        }
    }
}

/// What a validation finding is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    DanglingReference,
    CarrierUnitConflict,
    DuplicateName,
    AvailabilityOutOfRange,
    MinLoadNotBelowOne,
    NonUniformSnapshots,
    SeriesLengthMismatch,
    NegativeCapital,
    MissingCapacity,
    StoreBusNotDedicated,
    EmptyHorizon,
}

/// One validation finding. Validation is report-style: the caller gets
/// the full list instead of failing on the first problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub component: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {:?}: {}", self.component, self.kind, self.message)
    }
}

/// One term of a bus's balance equation, as the LP compiler will emit it.
#[derive(Debug, Clone, PartialEq)]
pub enum BalanceTerm {
    /// Generator dispatch enters with +1.
    Generator { name: String },
    /// Link flow enters with this signed coefficient.
    Link { name: String, coeff: Profile },
    /// Annual-load delivery enters with −1.
    Delivery { load: String },
    /// A store on this bus contributes (1−loss)·e_{t−1} − e_t.
    StoreLevel { name: String, standing_loss: f64 },
}

/// The structural content of one bus's balance equation: variable terms
/// plus the fixed demand that becomes the right-hand side.
#[derive(Debug, Clone)]
pub struct BalanceSignature {
    pub bus: String,
    pub terms: Vec<BalanceTerm>,
    /// Sum of fixed loads on the bus (the balance row RHS).
    pub demand: Profile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub snapshots: Snapshots,
    pub carriers: Vec<Carrier>,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub links: Vec<MultiLink>,
    pub stores: Vec<Store>,
    pub loads: Vec<Load>,
}

impl Network {
    pub fn new(snapshots: Snapshots) -> Self {
        Network {
            snapshots,
            carriers: Vec::new(),
            buses: Vec::new(),
            generators: Vec::new(),
            links: Vec::new(),
            stores: Vec::new(),
            loads: Vec::new(),
        }
    }

    pub fn add_carrier(&mut self, name: &str, unit: CarrierUnit) {
        self.carriers.push(Carrier {
            name: name.into(),
            unit,
        });
    }

    pub fn add_bus(&mut self, name: &str, carrier: &str) {
        self.buses.push(Bus {
            name: name.into(),
            carrier: carrier.into(),
        });
    }

    pub fn add_generator(&mut self, g: Generator) {
        self.generators.push(g);
    }

    pub fn add_link(&mut self, l: MultiLink) {
        self.links.push(l);
    }

    pub fn add_store(&mut self, s: Store) {
        self.stores.push(s);
    }

    pub fn add_load(&mut self, l: Load) {
        self.loads.push(l);
    }

    pub fn bus(&self, name: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.name == name)
    }

    pub fn carrier(&self, name: &str) -> Option<&Carrier> {
        self.carriers.iter().find(|c| c.name == name)
    }

    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.generators.iter().find(|g| g.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&MultiLink> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn store(&self, name: &str) -> Option<&Store> {
        self.stores.iter().find(|s| s.name == name)
    }

    pub fn load(&self, name: &str) -> Option<&Load> {
        self.loads.iter().find(|l| l.name == name)
    }

    /// Stores hosted on the given bus.
    pub fn stores_on(&self, bus: &str) -> Vec<&Store> {
        self.stores.iter().filter(|s| s.bus == bus).collect()
    }

    /// Full consistency report. An empty result means the network is fit
    /// for LP compilation.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.snapshots.len();
        fn viol(kind: ViolationKind, component: &str, message: String) -> Violation {
            Violation {
                kind,
                component: component.to_string(),
                message,
            }
        }

        if n == 0 {
            out.push(viol(
                ViolationKind::EmptyHorizon,
                "snapshots",
                "horizon has no snapshots".into(),
            ));
        }
        if !self.snapshots.is_uniform_hourly() {
            out.push(viol(
                ViolationKind::NonUniformSnapshots,
                "snapshots",
                "timestamps are not consecutive hourly steps".into(),
            ));
        }

        // Duplicate names within each component family, and carriers that
        // are declared twice with conflicting units.
        let mut seen: std::collections::BTreeMap<&str, CarrierUnit> = Default::default();
        for c in &self.carriers {
            if let Some(prev) = seen.insert(&c.name, c.unit) {
                if prev != c.unit {
                    out.push(viol(
                        ViolationKind::CarrierUnitConflict,
                        &c.name,
                        format!("carrier declared with units {:?} and {:?}", prev, c.unit),
                    ));
                } else {
                    out.push(viol(
                        ViolationKind::DuplicateName,
                        &c.name,
                        "carrier declared twice".into(),
                    ));
                }
            }
        }
        check_duplicates(self.buses.iter().map(|b| b.name.as_str()), "bus", &mut out);
        check_duplicates(
            self.generators.iter().map(|g| g.name.as_str()),
            "generator",
            &mut out,
        );
        check_duplicates(self.links.iter().map(|l| l.name.as_str()), "link", &mut out);
        check_duplicates(
            self.stores.iter().map(|s| s.name.as_str()),
            "store",
            &mut out,
        );
        check_duplicates(self.loads.iter().map(|l| l.name.as_str()), "load", &mut out);

        for b in &self.buses {
            if self.carrier(&b.carrier).is_none() {
                out.push(viol(
                    ViolationKind::DanglingReference,
                    &b.name,
                    format!("bus references unknown carrier '{}'", b.carrier),
                ));
            }
        }

        for g in &self.generators {
            if self.bus(&g.bus).is_none() {
                out.push(viol(
                    ViolationKind::DanglingReference,
                    &g.name,
                    format!("generator on unknown bus '{}'", g.bus),
                ));
            }
            if !g.extendable && g.fixed_capacity.is_none() {
                out.push(viol(
                    ViolationKind::MissingCapacity,
                    &g.name,
                    "fixed generator without a capacity".into(),
                ));
            }
            if g.capital_cost < 0.0 {
                out.push(viol(
                    ViolationKind::NegativeCapital,
                    &g.name,
                    "negative capital cost".into(),
                ));
            }
            for (label, p) in [("avail_min", &g.avail_min), ("avail_max", &g.avail_max)] {
                if !p.fits(n) {
                    out.push(viol(
                        ViolationKind::SeriesLengthMismatch,
                        &g.name,
                        format!("{label} series length does not match horizon"),
                    ));
                } else if p.min() < 0.0 || p.max() > 1.0 {
                    out.push(viol(
                        ViolationKind::AvailabilityOutOfRange,
                        &g.name,
                        format!("{label} outside [0, 1]"),
                    ));
                }
            }
            if !g.marginal_cost.fits(n) {
                out.push(viol(
                    ViolationKind::SeriesLengthMismatch,
                    &g.name,
                    "marginal_cost series length does not match horizon".into(),
                ));
            }
        }

        for l in &self.links {
            if self.bus(&l.bus0).is_none() {
                out.push(viol(
                    ViolationKind::DanglingReference,
                    &l.name,
                    format!("link bus0 references unknown bus '{}'", l.bus0),
                ));
            }
            for p in &l.outputs {
                if self.bus(&p.bus).is_none() {
                    out.push(viol(
                        ViolationKind::DanglingReference,
                        &l.name,
                        format!("link port references unknown bus '{}'", p.bus),
                    ));
                }
                if !p.coeff.fits(n) {
                    out.push(viol(
                        ViolationKind::SeriesLengthMismatch,
                        &l.name,
                        format!("port coefficient series on '{}' does not match horizon", p.bus),
                    ));
                }
            }
            if !l.extendable && l.fixed_capacity.is_none() {
                out.push(viol(
                    ViolationKind::MissingCapacity,
                    &l.name,
                    "fixed link without a capacity".into(),
                ));
            }
            if l.capital_cost < 0.0 {
                out.push(viol(
                    ViolationKind::NegativeCapital,
                    &l.name,
                    "negative capital cost".into(),
                ));
            }
            if l.min_load >= 1.0 {
                out.push(viol(
                    ViolationKind::MinLoadNotBelowOne,
                    &l.name,
                    format!("min_load {} must be < 1", l.min_load),
                ));
            }
            for (label, p, lo, hi) in [
                ("avail_min", &l.avail_min, -1.0, 1.0),
                ("avail_max", &l.avail_max, 0.0, 1.0),
            ] {
                if !p.fits(n) {
                    out.push(viol(
                        ViolationKind::SeriesLengthMismatch,
                        &l.name,
                        format!("{label} series length does not match horizon"),
                    ));
                } else if p.min() < lo || p.max() > hi {
                    out.push(viol(
                        ViolationKind::AvailabilityOutOfRange,
                        &l.name,
                        format!("{label} outside [{lo}, {hi}]"),
                    ));
                }
            }
            if !l.marginal_cost.fits(n) {
                out.push(viol(
                    ViolationKind::SeriesLengthMismatch,
                    &l.name,
                    "marginal_cost series length does not match horizon".into(),
                ));
            }
            if let Some(c) = &l.charge_rate_of {
                if self.store(&c.store).is_none() {
                    out.push(viol(
                        ViolationKind::DanglingReference,
                        &l.name,
                        format!("charge-rate couple references unknown store '{}'", c.store),
                    ));
                }
            }
        }

        for s in &self.stores {
            if self.bus(&s.bus).is_none() {
                out.push(viol(
                    ViolationKind::DanglingReference,
                    &s.name,
                    format!("store on unknown bus '{}'", s.bus),
                ));
            }
            if !s.extendable && s.fixed_capacity.is_none() {
                out.push(viol(
                    ViolationKind::MissingCapacity,
                    &s.name,
                    "fixed store without a capacity".into(),
                ));
            }
            if s.capital_cost < 0.0 {
                out.push(viol(
                    ViolationKind::NegativeCapital,
                    &s.name,
                    "negative capital cost".into(),
                ));
            }
            // The continuity formulation needs the store alone on its bus:
            // only charge/discharge links may touch it.
            let others = self.stores.iter().filter(|o| o.bus == s.bus).count();
            let gens_here = self.generators.iter().any(|g| g.bus == s.bus);
            let loads_here = self.loads.iter().any(|l| l.bus == s.bus);
            if others > 1 || gens_here || loads_here {
                out.push(viol(
                    ViolationKind::StoreBusNotDedicated,
                    &s.name,
                    format!(
                        "bus '{}' hosting a store must host only that store and links",
                        s.bus
                    ),
                ));
            }
        }

        for l in &self.loads {
            if self.bus(&l.bus).is_none() {
                out.push(viol(
                    ViolationKind::DanglingReference,
                    &l.name,
                    format!("load on unknown bus '{}'", l.bus),
                ));
            }
            if let LoadKind::Fixed(p) = &l.kind {
                if !p.fits(n) {
                    out.push(viol(
                        ViolationKind::SeriesLengthMismatch,
                        &l.name,
                        "demand series length does not match horizon".into(),
                    ));
                }
            }
        }

        out
    }

    /// Every term the balance equation of `bus` will contain, in the order
    /// the LP compiler emits them. The LP's balance row must be structurally
    /// identical to this — that equivalence is tested, not assumed.
    pub fn carrier_balance_signature(&self, bus: &str) -> BalanceSignature {
        let n = self.snapshots.len();
        let mut terms = Vec::new();
        for g in sorted_by_name(self.generators.iter().map(|g| (&g.name, g))) {
            if g.bus == bus {
                terms.push(BalanceTerm::Generator {
                    name: g.name.clone(),
                });
            }
        }
        for l in sorted_by_name(self.links.iter().map(|l| (&l.name, l))) {
            if l.bus0 == bus {
                terms.push(BalanceTerm::Link {
                    name: l.name.clone(),
                    coeff: Profile::Scalar(l.bus0_coeff),
                });
            }
            for p in &l.outputs {
                if p.bus == bus {
                    terms.push(BalanceTerm::Link {
                        name: l.name.clone(),
                        coeff: p.coeff.clone(),
                    });
                }
            }
        }
        for s in sorted_by_name(self.stores.iter().map(|s| (&s.name, s))) {
            if s.bus == bus {
                terms.push(BalanceTerm::StoreLevel {
                    name: s.name.clone(),
                    standing_loss: s.standing_loss,
                });
            }
        }
        let mut demand = vec![0.0; n];
        for l in sorted_by_name(self.loads.iter().map(|l| (&l.name, l))) {
            if l.bus != bus {
                continue;
            }
            match &l.kind {
                LoadKind::Fixed(p) => {
                    for (t, d) in demand.iter_mut().enumerate() {
                        *d += p.at(t);
                    }
                }
                LoadKind::Annual(_) => terms.push(BalanceTerm::Delivery {
                    load: l.name.clone(),
                }),
            }
        }
        BalanceSignature {
            bus: bus.to_string(),
            terms,
            demand: Profile::Series(demand),
        }
    }

    /// Demand total over the model horizon for one load: annual totals are
    /// prorated by N/8760, fixed series are summed as-is.
    pub fn demand_over_horizon(&self, load: &str) -> Option<f64> {
        let l = self.load(load)?;
        Some(match &l.kind {
            LoadKind::Annual(d) => d * self.snapshots.capital_scale(),
            LoadKind::Fixed(p) => (0..self.snapshots.len()).map(|t| p.at(t)).sum(),
        })
    }

    /// JSON dump of the whole network, for debugging and golden tests.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn check_duplicates<'a>(
    names: impl Iterator<Item = &'a str>,
    family: &str,
    out: &mut Vec<Violation>,
) {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            out.push(Violation {
                kind: ViolationKind::DuplicateName,
                component: n.to_string(),
                message: format!("{family} name used more than once"),
            });
        }
    }
}

fn sorted_by_name<'a, T>(items: impl Iterator<Item = (&'a String, &'a T)>) -> Vec<&'a T> {
    let mut v: Vec<(&String, &T)> = items.collect();
    v.sort_by(|a, b| a.0.cmp(b.0));
    v.into_iter().map(|(_, t)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el_net(n: usize) -> Network {
        let mut net = Network::new(Snapshots::hourly_index(n));
        net.add_carrier("el", CarrierUnit::Power);
        net.add_bus("b", "el");
        net
    }

    #[test]
    fn valid_network_has_no_violations() {
        let mut net = el_net(3);
        net.add_generator(Generator::extendable("g", "b", 1000.0));
        net.add_load(Load::fixed("d", "b", 1.0));
        assert!(net.validate().is_empty(), "{:?}", net.validate());
    }

    #[test]
    fn dangling_bus_reference_is_reported() {
        let mut net = el_net(3);
        net.add_generator(Generator::extendable("g", "nope", 0.0));
        let v = net.validate();
        assert!(v
            .iter()
            .any(|v| v.kind == ViolationKind::DanglingReference && v.component == "g"));
    }

    #[test]
    fn availability_and_min_load_bounds_are_checked() {
        let mut net = el_net(2);
        net.add_generator(Generator::extendable("g", "b", 0.0).avail_max(vec![0.5, 1.2]));
        net.add_link(MultiLink::extendable("l", "b", 0.0).min_load(1.0));
        let v = net.validate();
        assert!(v.iter().any(|v| v.kind == ViolationKind::AvailabilityOutOfRange));
        assert!(v.iter().any(|v| v.kind == ViolationKind::MinLoadNotBelowOne));
    }

    #[test]
    fn series_length_mismatch_is_reported() {
        let mut net = el_net(4);
        net.add_generator(Generator::extendable("g", "b", 0.0).avail_max(vec![1.0; 3]));
        let v = net.validate();
        assert!(v.iter().any(|v| v.kind == ViolationKind::SeriesLengthMismatch));
    }

    #[test]
    fn non_uniform_snapshots_are_reported() {
        let ts = vec![
            Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2019, 1, 1, 2, 0, 0).unwrap(),
        ];
        let net = Network::new(Snapshots::from_timestamps(ts));
        let v = net.validate();
        assert!(v.iter().any(|v| v.kind == ViolationKind::NonUniformSnapshots));
    }

    #[test]
    fn store_bus_must_be_dedicated() {
        let mut net = el_net(2);
        net.add_store(Store::extendable("s", "b", 0.0));
        net.add_generator(Generator::extendable("g", "b", 0.0));
        let v = net.validate();
        assert!(v.iter().any(|v| v.kind == ViolationKind::StoreBusNotDedicated));
    }

    #[test]
    fn balance_signature_collects_all_port_coefficients() {
        let mut net = el_net(2);
        net.add_carrier("h2", CarrierUnit::Power);
        net.add_carrier("meoh", CarrierUnit::Power);
        net.add_bus("h2", "h2");
        net.add_bus("meoh", "meoh");
        net.add_link(
            MultiLink::extendable("electrolysis", "b", 0.0).output("h2", 0.622),
        );
        net.add_link(
            MultiLink::extendable("meoh_synthesis", "meoh", 0.0)
                .product_referenced()
                .output("h2", -1.155),
        );
        let sig = net.carrier_balance_signature("h2");
        assert_eq!(sig.terms.len(), 2);
        match &sig.terms[0] {
            BalanceTerm::Link { name, coeff } => {
                assert_eq!(name, "electrolysis");
                assert_eq!(coeff.at(0), 0.622);
            }
            other => panic!("unexpected term {other:?}"),
        }
        match &sig.terms[1] {
            BalanceTerm::Link { name, coeff } => {
                assert_eq!(name, "meoh_synthesis");
                assert_eq!(coeff.at(0), -1.155);
            }
            other => panic!("unexpected term {other:?}"),
        }
    }

    #[test]
    fn balance_signature_input_bus_gets_minus_one() {
        let mut net = el_net(2);
        net.add_carrier("h2", CarrierUnit::Power);
        net.add_bus("h2", "h2");
        net.add_link(MultiLink::extendable("electrolysis", "b", 0.0).output("h2", 0.622));
        let sig = net.carrier_balance_signature("b");
        match &sig.terms[0] {
            BalanceTerm::Link { coeff, .. } => assert_eq!(coeff.at(1), -1.0),
            other => panic!("unexpected term {other:?}"),
        }
    }

    #[test]
    fn demand_over_horizon_prorates_annual_totals() {
        let mut net = el_net(8760);
        net.add_load(Load::annual("h2", "b", 272_000.0));
        assert_eq!(net.demand_over_horizon("h2"), Some(272_000.0));

        let mut net = el_net(2190);
        net.add_load(Load::annual("h2", "b", 272_000.0));
        let d = net.demand_over_horizon("h2").unwrap();
        assert!((d - 68_000.0).abs() < 1e-9);
    }

    #[test]
    fn demand_over_horizon_sums_fixed_series_without_proration() {
        let mut net = el_net(3);
        net.add_load(Load::fixed("d", "b", vec![1.0, 2.0, 3.5]));
        assert_eq!(net.demand_over_horizon("d"), Some(6.5));
    }

    #[test]
    fn zero_annual_demand_is_zero() {
        let mut net = el_net(24);
        net.add_load(Load::annual("d", "b", 0.0));
        assert_eq!(net.demand_over_horizon("d"), Some(0.0));
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let mut net = el_net(2);
        net.add_generator(
            Generator::extendable("g", "b", 123.0)
                .marginal_cost(vec![1.0, 2.0])
                .potential(40.0),
        );
        net.add_store(Store::extendable("s", "b", 9.0).standing_loss(0.01));
        let json = net.to_json();
        let back = Network::from_json(&json).unwrap();
        assert_eq!(back.generators[0].potential, Some(40.0));
        assert_eq!(back.generators[0].marginal_cost.at(1), 2.0);
        assert_eq!(back.stores[0].standing_loss, 0.01);
        assert_eq!(back.snapshots.len(), 2);
    }

    #[test]
    fn horizon_weight_is_inverse_of_capital_scale() {
        let s = Snapshots::hourly_index(672);
        assert!((s.horizon_weight() * s.capital_scale() - 1.0).abs() < 1e-12);
        assert!((s.horizon_weight() - 8760.0 / 672.0).abs() < 1e-12);
    }
}
