//! Compilation of a [`Network`](crate::net::Network) into a sparse linear
//! program.
//!
//! The variable layout and row families:
//!
//! ```text
//! columns   cap__<comp>           installed capacity (extendables only)
//!           g__<gen>__t<k>        generator dispatch at snapshot k
//!           f__<link>__t<k>       link flow at snapshot k
//!           e__<store>__t<k>      stored energy at end of snapshot k
//!           dlv__<load>__t<k>     hourly delivery against an annual demand
//!
//! rows      bal__<bus>__t<k>      Σ g + Σ α·f − Σ dlv  =  d        (=, λ)
//!           con__<store>__t<k>    (1−loss)·e_{k−1} − e_k + Σ α·f = 0
//!           gub__/glb__<gen>      g − ḡ·G ≤ 0  /  g − g̲·G ≥ 0
//!           fub__/flb__<link>     f − f̄·F ≤ 0  /  f − f̲·F ≥ 0
//!           eub__<store>          e − E ≤ 0
//!           rup__/rdn__<comp>     x_k − x_{k−1} ∓ r·C ≶ 0
//!           dem__<load>           Σ_k dlv_k = D·N/8760              (=, λ_D)
//!           pot__<comp>           C ≤ potential                     (≤, μ)
//!           crc__<link>           F − ratio·E_store ≤ 0
//! ```
//!
//! Fixed-capacity components get no capacity column: the constant is
//! substituted into their coupling constraints, which then collapse into
//! per-snapshot column bounds (and ramp rows keep the constant on the RHS).
//!
//! Balance rows are written in "production form": everything that feeds
//! the bus enters positive, so the row dual λ is the marginal cost of one
//! extra unit of demand on that bus. A bus hosting a store gets a
//! continuity row instead of a plain balance row — same production form,
//! with the store's carried-over energy `(1−loss)·e_{k−1} − e_k` as one
//! more source term.
//!
//! Reduced horizons: annualized capital costs and annual demand totals are
//! both multiplied by N/8760, so marginal and capital costs stay
//! commensurable and duals remain €/MWh regardless of horizon length.
//!
//! Row and column order is canonical (families in the order above,
//! components name-sorted inside each family, snapshots in order), so the
//! same network always assembles to a bit-identical problem — checked via
//! [`LpProblem::fingerprint`].

use crate::fnv::Fnv1a;
use crate::net::{LoadKind, Network, Profile, Violation};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// What a column means, for mapping solutions back onto the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColKind {
    CapGen { gen: String },
    CapLink { link: String },
    CapStore { store: String },
    Gen { gen: String, t: u32 },
    Flow { link: String, t: u32 },
    Energy { store: String, t: u32 },
    Delivery { load: String, t: u32 },
}

/// What a row means. Every row carries a tag; a row that cannot be tagged
/// cannot be constructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowTag {
    NodalBalance { bus: String, t: u32 },
    StoreContinuity { store: String, t: u32 },
    GenUpper { gen: String, t: u32 },
    GenLower { gen: String, t: u32 },
    LinkUpper { link: String, t: u32 },
    LinkLower { link: String, t: u32 },
    StoreUpper { store: String, t: u32 },
    RampUp { comp: String, t: u32 },
    RampDown { comp: String, t: u32 },
    AnnualDemand { load: String },
    Potential { comp: String },
    ChargeRateCouple { link: String, store: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
    pub kind: ColKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: RowTag,
    /// (column index, coefficient), column indices strictly increasing.
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpProblem {
    pub cols: Vec<Column>,
    pub rows: Vec<Row>,
    col_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

impl LpProblem {
    /// Build a problem directly from columns and rows — hand-written
    /// models, fuzzing, tests. Row terms are sorted by column and
    /// duplicates merged, matching what [`assemble`] produces.
    pub fn from_parts(cols: Vec<Column>, mut rows: Vec<Row>) -> Self {
        for r in &mut rows {
            r.terms.sort_by_key(|(j, _)| *j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.terms.len());
            for &(j, v) in &r.terms {
                match merged.last_mut() {
                    Some((pj, pv)) if *pj == j => *pv += v,
                    _ => merged.push((j, v)),
                }
            }
            r.terms = merged;
        }
        let col_index = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        let row_index = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();
        LpProblem {
            cols,
            rows,
            col_index,
            row_index,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_index.get(name).copied()
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.row_index.get(name).copied()
    }

    /// Columns of a given kind predicate, e.g. all flows of one link.
    pub fn cols_where<'a>(
        &'a self,
        mut pred: impl FnMut(&ColKind) -> bool + 'a,
    ) -> impl Iterator<Item = (usize, &'a Column)> + 'a {
        self.cols
            .iter()
            .enumerate()
            .filter(move |(_, c)| pred(&c.kind))
    }

    /// Objective value of a full primal point (used by audits and tests;
    /// the solver reports its own objective).
    pub fn objective_of(&self, x: &[f64]) -> f64 {
        crate::solver::neumaier_sum(self.cols.iter().zip(x).map(|(c, v)| c.obj * v))
    }

    /// Order-sensitive FNV-1a fingerprint over names, bounds, objective,
    /// senses, right-hand sides and coefficients. Bit-identical rebuilds
    /// of the same network produce the same fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.update(b"cols");
        for c in &self.cols {
            h.update(c.name.as_bytes());
            h.update_f64(c.lb);
            h.update_f64(c.ub);
            h.update_f64(c.obj);
        }
        h.update(b"rows");
        for r in &self.rows {
            h.update(r.name.as_bytes());
            h.update(&[match r.sense {
                Sense::Eq => 0u8,
                Sense::Le => 1,
                Sense::Ge => 2,
            }]);
            h.update_f64(r.rhs);
            for &(j, v) in &r.terms {
                h.update_u64(j as u64);
                h.update_f64(v);
            }
        }
        h.finish()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("network failed validation with {} finding(s); first: {first}", .violations.len())]
    InvalidNetwork {
        violations: Vec<Violation>,
        first: String,
    },
}

impl BuildError {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let first = violations
            .first()
            .map(|v| v.to_string())
            .unwrap_or_default();
        BuildError::InvalidNetwork { violations, first }
    }
}

/// Mutable problem under construction. The `emit_*` functions below add
/// row families to it; [`assemble`] drives them in canonical order.
#[derive(Debug)]
pub struct ProblemBuilder {
    cols: Vec<Column>,
    rows: Vec<Row>,
    col_index: HashMap<String, usize>,
    twidth: usize,
}

impl ProblemBuilder {
    fn add_col(&mut self, name: String, lb: f64, ub: f64, kind: ColKind) -> usize {
        let idx = self.cols.len();
        let prev = self.col_index.insert(name.clone(), idx);
        debug_assert!(prev.is_none(), "duplicate column {name}");
        self.cols.push(Column {
            name,
            lb,
            ub,
            obj: 0.0,
            kind,
        });
        idx
    }

    fn add_row(&mut self, name: String, sense: Sense, rhs: f64, tag: RowTag, terms: Vec<(usize, f64)>) {
        let mut terms = terms;
        terms.sort_by_key(|(j, _)| *j);
        // merge duplicate columns (a link may touch the same bus twice)
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (j, v) in terms {
            match merged.last_mut() {
                Some((pj, pv)) if *pj == j => *pv += v,
                _ => merged.push((j, v)),
            }
        }
        self.rows.push(Row {
            name,
            sense,
            rhs,
            tag,
            terms: merged,
        });
    }

    fn tname(&self, t: usize) -> String {
        format!("t{:0width$}", t, width = self.twidth)
    }

    fn cap_name(comp: &str) -> String {
        format!("cap__{comp}")
    }

    fn col(&self, name: &str) -> usize {
        self.col_index[name]
    }

    fn try_col(&self, name: &str) -> Option<usize> {
        self.col_index.get(name).copied()
    }
}

/// Create every column with its bounds: capacities for extendables,
/// dispatch/flow/energy per snapshot, and hourly delivery columns for
/// annual loads. Objective coefficients are left at zero for
/// [`build_objective`]. Fixed-capacity components get no capacity column;
/// their constants land directly in the dispatch column bounds.
pub fn build_columns(net: &Network) -> ProblemBuilder {
    let n = net.snapshots.len();
    let twidth = std::cmp::max(4, n.saturating_sub(1).to_string().len());
    let mut b = ProblemBuilder {
        cols: Vec::new(),
        rows: Vec::new(),
        col_index: HashMap::new(),
        twidth,
    };

    let gens = sorted(&net.generators, |g| &g.name);
    let links = sorted(&net.links, |l| &l.name);
    let stores = sorted(&net.stores, |s| &s.name);
    let loads = sorted(&net.loads, |l| &l.name);

    for g in &gens {
        if g.extendable {
            b.add_col(
                ProblemBuilder::cap_name(&g.name),
                0.0,
                f64::INFINITY,
                ColKind::CapGen { gen: g.name.clone() },
            );
        }
    }
    for l in &links {
        if l.extendable {
            b.add_col(
                ProblemBuilder::cap_name(&l.name),
                0.0,
                f64::INFINITY,
                ColKind::CapLink { link: l.name.clone() },
            );
        }
    }
    for s in &stores {
        if s.extendable {
            b.add_col(
                ProblemBuilder::cap_name(&s.name),
                0.0,
                f64::INFINITY,
                ColKind::CapStore { store: s.name.clone() },
            );
        }
    }

    for g in &gens {
        for t in 0..n {
            let (lb, ub) = if g.extendable {
                (0.0, f64::INFINITY)
            } else {
                let cap = g.fixed_capacity.unwrap();
                (g.avail_min.at(t) * cap, g.avail_max.at(t) * cap)
            };
            let tn = b.tname(t);
            b.add_col(
                format!("g__{}__{}", g.name, tn),
                lb,
                ub,
                ColKind::Gen { gen: g.name.clone(), t: t as u32 },
            );
        }
    }
    for l in &links {
        for t in 0..n {
            let lo = effective_lower(&l.avail_min, l.min_load, t);
            let (lb, ub) = if l.extendable {
                // rows do the work; allow negative flow only when the
                // lower availability actually goes negative
                (if lo < 0.0 { f64::NEG_INFINITY } else { 0.0 }, f64::INFINITY)
            } else {
                let cap = l.fixed_capacity.unwrap();
                (lo * cap, l.avail_max.at(t) * cap)
            };
            let tn = b.tname(t);
            b.add_col(
                format!("f__{}__{}", l.name, tn),
                lb,
                ub,
                ColKind::Flow { link: l.name.clone(), t: t as u32 },
            );
        }
    }
    for s in &stores {
        for t in 0..n {
            let ub = if s.extendable {
                f64::INFINITY
            } else {
                s.fixed_capacity.unwrap()
            };
            let tn = b.tname(t);
            b.add_col(
                format!("e__{}__{}", s.name, tn),
                0.0,
                ub,
                ColKind::Energy { store: s.name.clone(), t: t as u32 },
            );
        }
    }
    for l in &loads {
        if matches!(l.kind, LoadKind::Annual(_)) {
            for t in 0..n {
                let tn = b.tname(t);
                b.add_col(
                    format!("dlv__{}__{}", l.name, tn),
                    0.0,
                    f64::INFINITY,
                    ColKind::Delivery { load: l.name.clone(), t: t as u32 },
                );
            }
        }
    }
    b
}

/// One equality row per bus and snapshot, production form (see module
/// docs). Buses hosting a store are handled by [`emit_store_continuity`]
/// and skipped here.
pub fn emit_nodal_balance(b: &mut ProblemBuilder, net: &Network) {
    let n = net.snapshots.len();
    let buses = sorted(&net.buses, |x| &x.name);
    let gens = sorted(&net.generators, |x| &x.name);
    let links = sorted(&net.links, |x| &x.name);
    let loads = sorted(&net.loads, |x| &x.name);

    for bus in &buses {
        if !net.stores_on(&bus.name).is_empty() {
            continue;
        }
        for t in 0..n {
            let mut terms = Vec::new();
            let tn = b.tname(t);
            for g in &gens {
                if g.bus == bus.name {
                    terms.push((b.col(&format!("g__{}__{}", g.name, tn)), 1.0));
                }
            }
            for l in &links {
                let col = b.col(&format!("f__{}__{}", l.name, tn));
                if l.bus0 == bus.name {
                    terms.push((col, l.bus0_coeff));
                }
                for p in &l.outputs {
                    if p.bus == bus.name {
                        terms.push((col, p.coeff.at(t)));
                    }
                }
            }
            let mut rhs = 0.0;
            for ld in &loads {
                if ld.bus != bus.name {
                    continue;
                }
                match &ld.kind {
                    LoadKind::Fixed(p) => rhs += p.at(t),
                    LoadKind::Annual(_) => {
                        terms.push((b.col(&format!("dlv__{}__{}", ld.name, tn)), -1.0));
                    }
                }
            }
            b.add_row(
                format!("bal__{}__{}", bus.name, tn),
                Sense::Eq,
                rhs,
                RowTag::NodalBalance { bus: bus.name.clone(), t: t as u32 },
                terms,
            );
        }
    }
}

/// Balance-with-state rows for every store bus:
/// `Σ α·f + (1−loss)·e_{t−1} − e_t = 0`. Cyclic stores wrap `e_{−1}` to
/// `e_{N−1}`; non-cyclic stores start empty (no carry-over term at t=0).
pub fn emit_store_continuity(b: &mut ProblemBuilder, net: &Network) {
    let n = net.snapshots.len();
    let links = sorted(&net.links, |x| &x.name);
    let stores = sorted(&net.stores, |x| &x.name);

    for s in &stores {
        let keep = 1.0 - s.standing_loss;
        for t in 0..n {
            let tn = b.tname(t);
            let mut terms = Vec::new();
            for l in &links {
                let col = b.col(&format!("f__{}__{}", l.name, tn));
                if l.bus0 == s.bus {
                    terms.push((col, l.bus0_coeff));
                }
                for p in &l.outputs {
                    if p.bus == s.bus {
                        terms.push((col, p.coeff.at(t)));
                    }
                }
            }
            terms.push((b.col(&format!("e__{}__{}", s.name, tn)), -1.0));
            if t > 0 {
                let prev = b.tname(t - 1);
                terms.push((b.col(&format!("e__{}__{}", s.name, prev)), keep));
            } else if s.cyclic && n > 1 {
                let last = b.tname(n - 1);
                terms.push((b.col(&format!("e__{}__{}", s.name, last)), keep));
            }
            b.add_row(
                format!("con__{}__{}", s.name, tn),
                Sense::Eq,
                0.0,
                RowTag::StoreContinuity { store: s.name.clone(), t: t as u32 },
                terms,
            );
        }
    }
}

/// Dispatch-capacity coupling for extendable components: upper and lower
/// availability rows for generators and links, and energy-capacity rows
/// for stores. Fixed-capacity components were already bounded columnwise
/// in [`build_columns`].
pub fn emit_capacity_coupling(b: &mut ProblemBuilder, net: &Network) {
    let n = net.snapshots.len();
    for g in sorted(&net.generators, |x| &x.name) {
        if !g.extendable {
            continue;
        }
        let cap = b.col(&ProblemBuilder::cap_name(&g.name));
        for t in 0..n {
            let tn = b.tname(t);
            let gcol = b.col(&format!("g__{}__{}", g.name, tn));
            b.add_row(
                format!("gub__{}__{}", g.name, tn),
                Sense::Le,
                0.0,
                RowTag::GenUpper { gen: g.name.clone(), t: t as u32 },
                vec![(gcol, 1.0), (cap, -g.avail_max.at(t))],
            );
            b.add_row(
                format!("glb__{}__{}", g.name, tn),
                Sense::Ge,
                0.0,
                RowTag::GenLower { gen: g.name.clone(), t: t as u32 },
                vec![(gcol, 1.0), (cap, -g.avail_min.at(t))],
            );
        }
    }
    for l in sorted(&net.links, |x| &x.name) {
        if !l.extendable {
            continue;
        }
        let cap = b.col(&ProblemBuilder::cap_name(&l.name));
        for t in 0..n {
            let tn = b.tname(t);
            let fcol = b.col(&format!("f__{}__{}", l.name, tn));
            b.add_row(
                format!("fub__{}__{}", l.name, tn),
                Sense::Le,
                0.0,
                RowTag::LinkUpper { link: l.name.clone(), t: t as u32 },
                vec![(fcol, 1.0), (cap, -l.avail_max.at(t))],
            );
            let lo = effective_lower(&l.avail_min, l.min_load, t);
            b.add_row(
                format!("flb__{}__{}", l.name, tn),
                Sense::Ge,
                0.0,
                RowTag::LinkLower { link: l.name.clone(), t: t as u32 },
                vec![(fcol, 1.0), (cap, -lo)],
            );
        }
    }
    for s in sorted(&net.stores, |x| &x.name) {
        if !s.extendable {
            continue;
        }
        let cap = b.col(&ProblemBuilder::cap_name(&s.name));
        for t in 0..n {
            let tn = b.tname(t);
            let ecol = b.col(&format!("e__{}__{}", s.name, tn));
            b.add_row(
                format!("eub__{}__{}", s.name, tn),
                Sense::Le,
                0.0,
                RowTag::StoreUpper { store: s.name.clone(), t: t as u32 },
                vec![(ecol, 1.0), (cap, -1.0)],
            );
        }
    }
}

/// Hourly ramp limits proportional to installed capacity, for every
/// generator and link that declares them. The first snapshot is
/// unconstrained (no wrap-around).
pub fn emit_ramp_rows(b: &mut ProblemBuilder, net: &Network) {
    let n = net.snapshots.len();
    struct RampComp<'a> {
        name: &'a str,
        prefix: &'a str,
        up: Option<f64>,
        down: Option<f64>,
        extendable: bool,
        fixed_capacity: Option<f64>,
    }
    let mut comps: Vec<RampComp> = Vec::new();
    for g in sorted(&net.generators, |x| &x.name) {
        comps.push(RampComp {
            name: &g.name,
            prefix: "g",
            up: g.ramp_up,
            down: g.ramp_down,
            extendable: g.extendable,
            fixed_capacity: g.fixed_capacity,
        });
    }
    for l in sorted(&net.links, |x| &x.name) {
        comps.push(RampComp {
            name: &l.name,
            prefix: "f",
            up: l.ramp_up,
            down: l.ramp_down,
            extendable: l.extendable,
            fixed_capacity: l.fixed_capacity,
        });
    }
    for c in comps {
        if c.up.is_none() && c.down.is_none() {
            continue;
        }
        let cap_col = if c.extendable {
            Some(b.col(&ProblemBuilder::cap_name(c.name)))
        } else {
            None
        };
        for t in 1..n {
            let xt = b.col(&format!("{}__{}__{}", c.prefix, c.name, b.tname(t)));
            let xp = b.col(&format!("{}__{}__{}", c.prefix, c.name, b.tname(t - 1)));
            if let Some(r) = c.up {
                let (terms, rhs) = match cap_col {
                    Some(cc) => (vec![(xt, 1.0), (xp, -1.0), (cc, -r)], 0.0),
                    None => (vec![(xt, 1.0), (xp, -1.0)], r * c.fixed_capacity.unwrap()),
                };
                b.add_row(
                    format!("rup__{}__{}", c.name, b.tname(t)),
                    Sense::Le,
                    rhs,
                    RowTag::RampUp { comp: c.name.to_string(), t: t as u32 },
                    terms,
                );
            }
            if let Some(r) = c.down {
                let (terms, rhs) = match cap_col {
                    Some(cc) => (vec![(xt, 1.0), (xp, -1.0), (cc, r)], 0.0),
                    None => (vec![(xt, 1.0), (xp, -1.0)], -r * c.fixed_capacity.unwrap()),
                };
                b.add_row(
                    format!("rdn__{}__{}", c.name, b.tname(t)),
                    Sense::Ge,
                    rhs,
                    RowTag::RampDown { comp: c.name.to_string(), t: t as u32 },
                    terms,
                );
            }
        }
    }
}

/// One equality row per annual load: Σ_t dlv_t = D·N/8760. The dual of
/// this row is the levelized production cost of the load's product.
pub fn emit_annual_demand(b: &mut ProblemBuilder, net: &Network) {
    let n = net.snapshots.len();
    let scale = net.snapshots.capital_scale();
    for l in sorted(&net.loads, |x| &x.name) {
        let LoadKind::Annual(d) = l.kind else { continue };
        let terms: Vec<(usize, f64)> = (0..n)
            .map(|t| (b.col(&format!("dlv__{}__{}", l.name, b.tname(t))), 1.0))
            .collect();
        b.add_row(
            format!("dem__{}", l.name),
            Sense::Eq,
            d * scale,
            RowTag::AnnualDemand { load: l.name.clone() },
            terms,
        );
    }
}

/// Capacity potentials (C ≤ cap) and charge-rate couples
/// (F ≤ ratio·E_store). Emitted as rows so their duals — scarcity rents —
/// are available to the cost-recovery audit.
pub fn emit_potentials(b: &mut ProblemBuilder, net: &Network) {
    for g in sorted(&net.generators, |x| &x.name) {
        if let (true, Some(p)) = (g.extendable, g.potential) {
            let cap = b.col(&ProblemBuilder::cap_name(&g.name));
            b.add_row(
                format!("pot__{}", g.name),
                Sense::Le,
                p,
                RowTag::Potential { comp: g.name.clone() },
                vec![(cap, 1.0)],
            );
        }
    }
    for l in sorted(&net.links, |x| &x.name) {
        if let (true, Some(p)) = (l.extendable, l.potential) {
            let cap = b.col(&ProblemBuilder::cap_name(&l.name));
            b.add_row(
                format!("pot__{}", l.name),
                Sense::Le,
                p,
                RowTag::Potential { comp: l.name.clone() },
                vec![(cap, 1.0)],
            );
        }
    }
    for s in sorted(&net.stores, |x| &x.name) {
        if let (true, Some(p)) = (s.extendable, s.potential) {
            let cap = b.col(&ProblemBuilder::cap_name(&s.name));
            b.add_row(
                format!("pot__{}", s.name),
                Sense::Le,
                p,
                RowTag::Potential { comp: s.name.clone() },
                vec![(cap, 1.0)],
            );
        }
    }
    for l in sorted(&net.links, |x| &x.name) {
        let Some(c) = &l.charge_rate_of else { continue };
        let store = net.store(&c.store).expect("validated");
        let link_cap = if l.extendable {
            b.try_col(&ProblemBuilder::cap_name(&l.name))
        } else {
            None
        };
        let store_cap = if store.extendable {
            b.try_col(&ProblemBuilder::cap_name(&store.name))
        } else {
            None
        };
        match (link_cap, store_cap) {
            (Some(fc), Some(ec)) => b.add_row(
                format!("crc__{}", l.name),
                Sense::Le,
                0.0,
                RowTag::ChargeRateCouple { link: l.name.clone(), store: c.store.clone() },
                vec![(fc, 1.0), (ec, -c.per_hour)],
            ),
            (Some(fc), None) => b.add_row(
                format!("crc__{}", l.name),
                Sense::Le,
                c.per_hour * store.fixed_capacity.unwrap(),
                RowTag::ChargeRateCouple { link: l.name.clone(), store: c.store.clone() },
                vec![(fc, 1.0)],
            ),
            // fixed link capacity: nothing left to constrain
            (None, _) => {}
        }
    }
}

/// Fill the objective: prorated annualized capital on capacity columns,
/// per-snapshot marginal costs on dispatch and flow columns. Negative
/// marginal costs are revenues (electricity exports, district-heat sales,
/// sequestration credits).
pub fn build_objective(b: &mut ProblemBuilder, net: &Network) {
    let scale = net.snapshots.capital_scale();
    for c in &mut b.cols {
        match &c.kind {
            ColKind::CapGen { gen } => {
                c.obj = net.generator(gen).unwrap().capital_cost * scale;
            }
            ColKind::CapLink { link } => {
                c.obj = net.link(link).unwrap().capital_cost * scale;
            }
            ColKind::CapStore { store } => {
                c.obj = net.store(store).unwrap().capital_cost * scale;
            }
            ColKind::Gen { gen, t } => {
                c.obj = net.generator(gen).unwrap().marginal_cost.at(*t as usize);
            }
            ColKind::Flow { link, t } => {
                c.obj = net.link(link).unwrap().marginal_cost.at(*t as usize);
            }
            ColKind::Energy { .. } | ColKind::Delivery { .. } => c.obj = 0.0,
        }
    }
}

/// Validate the network and compile it into an [`LpProblem`] in canonical
/// order. This is the one entry point everything else uses; the
/// individual `emit_*` stages stay public for targeted tests.
pub fn assemble(net: &Network) -> Result<LpProblem, BuildError> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(BuildError::from_violations(violations));
    }
    let mut b = build_columns(net);
    emit_nodal_balance(&mut b, net);
    emit_store_continuity(&mut b, net);
    emit_capacity_coupling(&mut b, net);
    emit_ramp_rows(&mut b, net);
    emit_annual_demand(&mut b, net);
    emit_potentials(&mut b, net);
    build_objective(&mut b, net);

    let row_index = b
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.clone(), i))
        .collect();
    Ok(LpProblem {
        cols: b.cols,
        rows: b.rows,
        col_index: b.col_index,
        row_index,
    })
}

fn effective_lower(avail_min: &Profile, min_load: f64, t: usize) -> f64 {
    let a = avail_min.at(t);
    if min_load > 0.0 {
        a.max(min_load)
    } else {
        a
    }
}

fn sorted<T>(items: &[T], key: impl Fn(&T) -> &String) -> Vec<&T> {
    let mut v: Vec<&T> = items.iter().collect();
    v.sort_by(|a, b| key(a).cmp(key(b)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{CarrierUnit, Generator, Load, MultiLink, Network, Snapshots, Store};

    fn base(n: usize) -> Network {
        let mut net = Network::new(Snapshots::hourly_index(n));
        net.add_carrier("el", CarrierUnit::Power);
        net.add_bus("b", "el");
        net
    }

    fn toy_gen_load(n: usize) -> Network {
        let mut net = base(n);
        net.add_generator(Generator::extendable("g", "b", 1000.0).marginal_cost(5.0));
        net.add_load(Load::fixed("d", "b", 1.0));
        net
    }

    #[test]
    fn toy_counts_match_hand_tally() {
        // 1 extendable generator, 1 fixed load, N=2:
        // columns: capacity + 2 dispatch = 3
        // rows: 2 balance + 2 upper + 2 lower = 6
        let p = assemble(&toy_gen_load(2)).unwrap();
        assert_eq!(p.n_cols(), 3);
        assert_eq!(p.n_rows(), 6);
        let balances = p.rows.iter().filter(|r| matches!(r.tag, RowTag::NodalBalance { .. })).count();
        let uppers = p.rows.iter().filter(|r| matches!(r.tag, RowTag::GenUpper { .. })).count();
        let lowers = p.rows.iter().filter(|r| matches!(r.tag, RowTag::GenLower { .. })).count();
        assert_eq!((balances, uppers, lowers), (2, 2, 2));
    }

    #[test]
    fn fixed_capacity_component_has_no_capacity_column() {
        let mut net = base(2);
        net.add_generator(Generator::fixed("g", "b", 3.0).avail_max(vec![0.5, 1.0]));
        net.add_load(Load::fixed("d", "b", 1.0));
        let p = assemble(&net).unwrap();
        assert!(p.col_index("cap__g").is_none());
        // availability × fixed capacity lands in the column bounds
        let c0 = &p.cols[p.col_index("g__g__t0000").unwrap()];
        let c1 = &p.cols[p.col_index("g__g__t0001").unwrap()];
        assert_eq!(c0.ub, 1.5);
        assert_eq!(c1.ub, 3.0);
        // and no coupling rows are emitted
        assert!(!p.rows.iter().any(|r| matches!(r.tag, RowTag::GenUpper { .. })));
    }

    #[test]
    fn balance_rhs_sums_fixed_loads() {
        let mut net = base(1);
        net.add_generator(Generator::extendable("g", "b", 0.0));
        net.add_load(Load::fixed("d1", "b", 1.0));
        net.add_load(Load::fixed("d2", "b", vec![0.25]));
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("bal__b__t0000").unwrap()];
        assert_eq!(r.rhs, 1.25);
        assert_eq!(r.sense, Sense::Eq);
    }

    #[test]
    fn empty_bus_gets_trivial_row() {
        let mut net = base(1);
        net.add_bus("lonely", "el");
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("bal__lonely__t0000").unwrap()];
        assert!(r.terms.is_empty());
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn multi_port_coefficients_land_on_the_right_buses() {
        // electrolysis feeds the H2 bus with +0.622 per unit of electricity;
        // methanol synthesis (product-referenced) drains it with −1.155
        let mut net = base(2);
        net.add_carrier("h2", CarrierUnit::Power);
        net.add_carrier("meoh", CarrierUnit::Power);
        net.add_bus("h2", "h2");
        net.add_bus("meoh", "meoh");
        net.add_link(MultiLink::extendable("electrolysis", "b", 0.0).output("h2", 0.622));
        net.add_link(
            MultiLink::extendable("meoh_synthesis", "meoh", 0.0)
                .product_referenced()
                .output("h2", -1.155),
        );
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("bal__h2__t0001").unwrap()];
        let coeff = |col: &str| {
            let j = p.col_index(col).unwrap();
            r.terms.iter().find(|(c, _)| *c == j).map(|(_, v)| *v)
        };
        assert_eq!(coeff("f__electrolysis__t0001"), Some(0.622));
        assert_eq!(coeff("f__meoh_synthesis__t0001"), Some(-1.155));
        // and the electricity bus sees the electrolyzer at −1
        let rb = &p.rows[p.row_index("bal__b__t0000").unwrap()];
        let j = p.col_index("f__electrolysis__t0000").unwrap();
        assert_eq!(rb.terms.iter().find(|(c, _)| *c == j).map(|(_, v)| *v), Some(-1.0));
    }

    #[test]
    fn balance_row_structure_matches_network_signature() {
        let mut net = base(3);
        net.add_carrier("h2", CarrierUnit::Power);
        net.add_bus("h2", "h2");
        net.add_generator(Generator::extendable("wind", "b", 10.0));
        net.add_link(MultiLink::extendable("electrolysis", "b", 0.0).output("h2", 0.622));
        net.add_load(Load::annual("h2_demand", "h2", 100.0));
        net.add_load(Load::fixed("aux", "b", 0.5));
        let p = assemble(&net).unwrap();

        for bus in ["b", "h2"] {
            let sig = net.carrier_balance_signature(bus);
            for t in 0..3 {
                let row = &p.rows[p.row_index(&format!("bal__{bus}__t000{t}")).unwrap()];
                // every signature term appears with the same coefficient
                for term in &sig.terms {
                    let (col, want) = match term {
                        crate::net::BalanceTerm::Generator { name } => {
                            (format!("g__{name}__t000{t}"), 1.0)
                        }
                        crate::net::BalanceTerm::Link { name, coeff } => {
                            (format!("f__{name}__t000{t}"), coeff.at(t))
                        }
                        crate::net::BalanceTerm::Delivery { load } => {
                            (format!("dlv__{load}__t000{t}"), -1.0)
                        }
                        crate::net::BalanceTerm::StoreLevel { .. } => unreachable!(),
                    };
                    let j = p.col_index(&col).unwrap();
                    let got = row.terms.iter().find(|(c, _)| *c == j).map(|(_, v)| *v);
                    assert_eq!(got, Some(want), "bus {bus} t{t} col {col}");
                }
                assert_eq!(row.terms.len(), sig.terms.len());
                assert_eq!(row.rhs, sig.demand.at(t));
            }
        }
    }

    #[test]
    fn min_load_and_availability_series_shape_coupling_rows() {
        let mut net = base(2);
        net.add_generator(
            Generator::extendable("wind", "b", 0.0).avail_max(vec![0.3, 0.8]),
        );
        net.add_link(MultiLink::extendable("meoh", "b", 0.0).min_load(0.20));
        let p = assemble(&net).unwrap();

        let r = &p.rows[p.row_index("gub__wind__t0001").unwrap()];
        let cap = p.col_index("cap__wind").unwrap();
        assert_eq!(r.terms.iter().find(|(c, _)| *c == cap).unwrap().1, -0.8);

        let r = &p.rows[p.row_index("flb__meoh__t0000").unwrap()];
        let cap = p.col_index("cap__meoh").unwrap();
        assert_eq!(r.sense, Sense::Ge);
        assert_eq!(r.terms.iter().find(|(c, _)| *c == cap).unwrap().1, -0.20);
    }

    #[test]
    fn bidirectional_lower_bound_is_preserved() {
        let mut net = base(2);
        net.add_bus("b2", "el");
        net.add_link(
            MultiLink::extendable("tie", "b", 0.0)
                .output("b2", 1.0)
                .avail_min(-1.0),
        );
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("flb__tie__t0000").unwrap()];
        let cap = p.col_index("cap__tie").unwrap();
        assert_eq!(r.terms.iter().find(|(c, _)| *c == cap).unwrap().1, 1.0);
        assert_eq!(p.cols[p.col_index("f__tie__t0000").unwrap()].lb, f64::NEG_INFINITY);
    }

    #[test]
    fn store_continuity_lossless_links_consecutive_levels() {
        let mut net = base(3);
        net.add_bus("sb", "el");
        net.add_store(Store::extendable("s", "sb", 0.0).cyclic(false));
        net.add_link(MultiLink::extendable("charge", "b", 0.0).output("sb", 0.96));
        let p = assemble(&net).unwrap();

        // t=1: 0.96·f_1 + e_0 − e_1 = 0
        let r = &p.rows[p.row_index("con__s__t0001").unwrap()];
        let coeff = |name: &str| {
            let j = p.col_index(name).unwrap();
            r.terms.iter().find(|(c, _)| *c == j).map(|(_, v)| *v)
        };
        assert_eq!(coeff("f__charge__t0001"), Some(0.96));
        assert_eq!(coeff("e__s__t0000"), Some(1.0));
        assert_eq!(coeff("e__s__t0001"), Some(-1.0));

        // non-cyclic start: t=0 row has no carried-over energy
        let r0 = &p.rows[p.row_index("con__s__t0000").unwrap()];
        assert!(!r0.terms.iter().any(|(c, _)| *c == p.col_index("e__s__t0002").unwrap()));
    }

    #[test]
    fn cyclic_store_wraps_to_last_snapshot() {
        let mut net = base(3);
        net.add_bus("sb", "el");
        net.add_store(Store::extendable("s", "sb", 0.0).standing_loss(0.01));
        let p = assemble(&net).unwrap();
        let r0 = &p.rows[p.row_index("con__s__t0000").unwrap()];
        let last = p.col_index("e__s__t0002").unwrap();
        let carried = r0.terms.iter().find(|(c, _)| *c == last).unwrap().1;
        assert!((carried - 0.99).abs() < 1e-12);
        let conts = p.rows.iter().filter(|r| matches!(r.tag, RowTag::StoreContinuity { .. })).count();
        assert_eq!(conts, 3);
    }

    #[test]
    fn ramp_rows_skip_first_snapshot_and_scale_with_capacity() {
        let mut net = base(3);
        net.add_link(MultiLink::extendable("meoh", "b", 0.0).ramps(1.0 / 48.0, 1.0 / 48.0));
        net.add_link(MultiLink::extendable("electrolysis", "b", 0.0));
        let p = assemble(&net).unwrap();

        assert!(p.row_index("rup__meoh__t0000").is_none());
        let r = &p.rows[p.row_index("rup__meoh__t0001").unwrap()];
        let cap = p.col_index("cap__meoh").unwrap();
        let c = r.terms.iter().find(|(c, _)| *c == cap).unwrap().1;
        assert!((c + 1.0 / 48.0).abs() < 1e-15);
        assert_eq!(r.sense, Sense::Le);

        let rdn = &p.rows[p.row_index("rdn__meoh__t0002").unwrap()];
        assert_eq!(rdn.sense, Sense::Ge);

        // a link without declared ramps gets none
        assert!(!p.rows.iter().any(|r| matches!(
            &r.tag,
            RowTag::RampUp { comp, .. } if comp == "electrolysis"
        )));
    }

    #[test]
    fn fixed_capacity_ramp_moves_constant_to_rhs() {
        let mut net = base(2);
        net.add_link(MultiLink::fixed("plant", "b", 10.0).ramps(0.1, 0.2));
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("rup__plant__t0001").unwrap()];
        assert_eq!(r.rhs, 1.0);
        let r = &p.rows[p.row_index("rdn__plant__t0001").unwrap()];
        assert_eq!(r.rhs, -2.0);
    }

    #[test]
    fn annual_demand_row_prorates_and_joins_balance() {
        let mut net = base(2);
        net.add_generator(Generator::extendable("g", "b", 0.0));
        net.add_load(Load::annual("h2", "b", 8760.0));
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("dem__h2").unwrap()];
        assert_eq!(r.sense, Sense::Eq);
        assert!((r.rhs - 2.0).abs() < 1e-12);
        assert_eq!(r.terms.len(), 2);
        // delivery drains the bus
        let bal = &p.rows[p.row_index("bal__b__t0000").unwrap()];
        let dlv = p.col_index("dlv__h2__t0000").unwrap();
        assert_eq!(bal.terms.iter().find(|(c, _)| *c == dlv).unwrap().1, -1.0);
    }

    #[test]
    fn zero_annual_demand_still_gets_a_row() {
        let mut net = base(2);
        net.add_load(Load::annual("none", "b", 0.0));
        let p = assemble(&net).unwrap();
        assert_eq!(p.rows[p.row_index("dem__none").unwrap()].rhs, 0.0);
    }

    #[test]
    fn potentials_and_charge_rate_couples_are_rows() {
        let mut net = base(2);
        net.add_bus("sb", "el");
        net.add_link(MultiLink::extendable("skyclean", "b", 0.0).potential(40.0));
        net.add_store(Store::extendable("batt", "sb", 0.0));
        net.add_link(
            MultiLink::extendable("charge", "b", 0.0)
                .output("sb", 0.96)
                .charge_rate_of("batt", 1.0),
        );
        let p = assemble(&net).unwrap();
        let r = &p.rows[p.row_index("pot__skyclean").unwrap()];
        assert_eq!((r.sense, r.rhs), (Sense::Le, 40.0));
        let r = &p.rows[p.row_index("crc__charge").unwrap()];
        let ec = p.col_index("cap__batt").unwrap();
        assert_eq!(r.terms.iter().find(|(c, _)| *c == ec).unwrap().1, -1.0);
    }

    #[test]
    fn objective_carries_prorated_capital_and_hourly_prices() {
        let mut net = Network::new(Snapshots::hourly_index(4380)); // half a year
        net.add_carrier("el", CarrierUnit::Power);
        net.add_bus("b", "el");
        net.add_generator(Generator::extendable("g", "b", 1000.0));
        net.add_link(
            MultiLink::extendable("export", "b", 0.0)
                .marginal_cost(vec![-40.0; 4380]),
        );
        let p = assemble(&net).unwrap();
        let cap = &p.cols[p.col_index("cap__g").unwrap()];
        assert!((cap.obj - 500.0).abs() < 1e-9);
        let f = &p.cols[p.col_index("f__export__t0007").unwrap()];
        assert_eq!(f.obj, -40.0);
    }

    #[test]
    fn assemble_is_deterministic_and_fingerprint_sensitive() {
        let net = toy_gen_load(24);
        let a = assemble(&net).unwrap();
        let b = assemble(&net).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let names: Vec<&str> = a.cols.iter().map(|c| c.name.as_str()).collect();
        let names_b: Vec<&str> = b.cols.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, names_b);

        let mut changed = toy_gen_load(24);
        changed.generators[0].capital_cost += 1.0;
        assert_ne!(a.fingerprint(), assemble(&changed).unwrap().fingerprint());
    }

    #[test]
    fn invalid_network_is_refused() {
        let mut net = base(2);
        net.add_generator(Generator::extendable("g", "nowhere", 0.0));
        match assemble(&net) {
            Err(BuildError::InvalidNetwork { violations, .. }) => {
                assert!(!violations.is_empty())
            }
            Ok(_) => panic!("expected a validation failure"),
        }
    }
}
