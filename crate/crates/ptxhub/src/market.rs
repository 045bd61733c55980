//! External-market inputs and the interface price rules.
//!
//! Everything the hub trades across its fence is priced from exogenous
//! hourly series: day-ahead electricity spot, natural-gas reference
//! price, and the grid's hourly CO₂ intensity. This module loads those
//! series from CSV, derives the four interface prices (electricity
//! purchase and sale, natural gas, district heat), the certification
//! mask that gates grid electricity used for fuel production, and the
//! capped external electricity demand that limits how much on-site
//! renewable energy may be sold.
//!
//! Price rules applied per hour, with `tax` the scenario CO₂ price in
//! €/t:
//!
//! ```text
//! purchase  = spot + tf_purchase + em_grid[t] · tax
//! sale      = spot − tf_sale
//! gas       = ng_ref + em_ng · tax
//! heat      = 54 €/MWh, fixed (regulated district-heat price)
//! ```
//!
//! The tariff scalars `tf_purchase`/`tf_sale` and the gas emission
//! factor `em_ng` are configuration inputs with placeholder defaults —
//! published tariff sheets are not bundled — and every report that uses
//! them says so. Any correction of the purchase price for a carbon cost
//! already embedded in the historical spot level is expected to be
//! folded into the `em_grid` series by the data preparation step.

use std::fmt;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::net::Snapshots;

/// Grid electricity may power fuel production only in hours with spot
/// at or below this level (€/MWh).
pub const GRID_ELECTRICITY_SPOT_CEILING: f64 = 20.0;

/// Regulated district-heat sale price, €/MWh, year-independent.
pub const DH_SALE_PRICE: f64 = 54.0;

/// Placeholder electricity purchase tariff (transmission + distribution
/// + levies), €/MWh. Override from real tariff sheets when available.
pub const DEFAULT_TF_PURCHASE: f64 = 20.0;

/// Placeholder electricity feed-in tariff, €/MWh.
pub const DEFAULT_TF_SALE: f64 = 1.0;

/// Placeholder combustion emission factor for natural gas, t CO₂ per
/// MWh fuel.
pub const DEFAULT_EM_NG: f64 = 0.202;

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("{path}: empty series")]
    Empty { path: String },
    #[error("{path}:{row}: expected header `timestamp,value`, found `{found}`")]
    Header { path: String, row: usize, found: String },
    #[error("{path}:{row}: {msg}")]
    Parse { path: String, row: usize, msg: String },
    #[error("{path}:{row}: duplicate timestamp {ts}")]
    Duplicate { path: String, row: usize, ts: String },
    #[error("{path}:{row}: gap before {ts} (previous sample {prev}); pass forward-fill to resample coarser data")]
    Gap {
        path: String,
        row: usize,
        ts: String,
        prev: String,
    },
    #[error("{path}:{row}: timestamps must increase ({ts} after {prev})")]
    Order {
        path: String,
        row: usize,
        ts: String,
        prev: String,
    },
    #[error("{path}: expected {expected} hourly samples, found {found}")]
    Length {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What to do when consecutive samples are more than one hour apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    /// Reject the file, naming the first gap. The default.
    #[default]
    Reject,
    /// Repeat the last value across the gap — for series published at
    /// coarser-than-hourly resolution (e.g. daily gas prices).
    ForwardFill,
}

/// One loaded `timestamp,value` series on a strict hourly grid.
#[derive(Debug, Clone)]
pub struct SeriesFile {
    pub start: DateTime<Utc>,
    pub values: Vec<f64>,
}

impl SeriesFile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> Vec<DateTime<Utc>> {
        (0..self.values.len())
            .map(|k| self.start + Duration::hours(k as i64))
            .collect()
    }
}

/// Load a `timestamp,value` CSV into an hourly series.
///
/// Timestamps must be ISO-8601 UTC (`2019-01-01T00:00:00Z`), strictly
/// increasing. Holes are fatal by default; `GapPolicy::ForwardFill`
/// repeats the previous value instead, which is how coarser-resolution
/// inputs (daily gas quotes) become hourly. Errors carry 1-based data
/// row numbers.
pub fn load_series_csv(path: &Path, policy: GapPolicy) -> Result<SeriesFile, SeriesError> {
    let display = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => SeriesError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{display}: {e}"),
            )),
            _ => SeriesError::Parse {
                path: display.clone(),
                row: 0,
                msg: e.to_string(),
            },
        })?;
    {
        let headers = rdr.headers().map_err(|e| SeriesError::Parse {
            path: display.clone(),
            row: 0,
            msg: e.to_string(),
        })?;
        let mut it = headers.iter();
        if !matches!(
            (it.next(), it.next(), it.next()),
            (Some("timestamp"), Some("value"), None)
        ) {
            return Err(SeriesError::Header {
                path: display,
                row: 0,
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
    }

    let mut start = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SeriesError::Parse {
            path: display.clone(),
            row,
            msg: e.to_string(),
        })?;
        let ts_raw = record.get(0).unwrap_or("");
        let ts = DateTime::parse_from_rfc3339(ts_raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| SeriesError::Parse {
                path: display.clone(),
                row,
                msg: format!("bad timestamp `{ts_raw}`: {e}"),
            })?;
        let value: f64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e| SeriesError::Parse {
                path: display.clone(),
                row,
                msg: format!("bad value `{}`: {e}", record.get(1).unwrap_or("")),
            })?;
        if !value.is_finite() {
            return Err(SeriesError::Parse {
                path: display,
                row,
                msg: format!("non-finite value {value}"),
            });
        }
        match prev {
            None => {
                start = Some(ts);
                values.push(value);
            }
            Some(p) => {
                let step = ts - p;
                if step == Duration::zero() {
                    return Err(SeriesError::Duplicate {
                        path: display,
                        row,
                        ts: ts.to_rfc3339(),
                    });
                }
                if step < Duration::zero() {
                    return Err(SeriesError::Order {
                        path: display,
                        row,
                        ts: ts.to_rfc3339(),
                        prev: p.to_rfc3339(),
                    });
                }
                if step > Duration::hours(1) {
                    match policy {
                        GapPolicy::Reject => {
                            return Err(SeriesError::Gap {
                                path: display,
                                row,
                                ts: ts.to_rfc3339(),
                                prev: p.to_rfc3339(),
                            });
                        }
                        GapPolicy::ForwardFill => {
                            let hold = *values.last().unwrap();
                            let missing = step.num_hours() - 1;
                            values.extend(std::iter::repeat(hold).take(missing as usize));
                        }
                    }
                } else if step < Duration::hours(1) {
                    return Err(SeriesError::Parse {
                        path: display,
                        row,
                        msg: format!(
                            "sub-hourly step from {} to {}",
                            p.to_rfc3339(),
                            ts.to_rfc3339()
                        ),
                    });
                }
                values.push(value);
            }
        }
        prev = Some(ts);
    }
    match start {
        None => Err(SeriesError::Empty { path: display }),
        Some(start) => Ok(SeriesFile { start, values }),
    }
}

/// Everything exogenous that a scenario needs, on one snapshot index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketData {
    pub snapshots: Snapshots,
    /// Day-ahead electricity spot, €/MWh.
    pub spot: Vec<f64>,
    /// Natural-gas reference price, €/MWh fuel.
    pub ng: Vec<f64>,
    /// Grid CO₂ intensity, t/MWh.
    pub em_grid: Vec<f64>,
    /// Regional electricity demand, MW — only its shape is used.
    pub dk1_demand: Vec<f64>,
    /// District-heat demand, MW.
    pub dh_demand: Vec<f64>,
    /// Wind capacity factor, per unit.
    pub wind_cf: Vec<f64>,
    /// Solar capacity factor, per unit.
    pub solar_cf: Vec<f64>,
    pub tf_purchase: f64,
    pub tf_sale: f64,
    pub em_ng: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketViolation(pub String);

impl fmt::Display for MarketViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl MarketData {
    /// Structural checks: equal lengths, capacity factors inside [0,1],
    /// non-negative emission intensities and demands.
    pub fn validate(&self) -> Vec<MarketViolation> {
        let mut out = Vec::new();
        let n = self.snapshots.len();
        let mut check_len = |name: &str, len: usize| {
            if len != n {
                out.push(MarketViolation(format!(
                    "{name}: {len} samples for {n} snapshots"
                )));
            }
        };
        check_len("spot", self.spot.len());
        check_len("ng", self.ng.len());
        check_len("em_grid", self.em_grid.len());
        check_len("dk1_demand", self.dk1_demand.len());
        check_len("dh_demand", self.dh_demand.len());
        check_len("wind_cf", self.wind_cf.len());
        check_len("solar_cf", self.solar_cf.len());
        for (name, series) in [("wind_cf", &self.wind_cf), ("solar_cf", &self.solar_cf)] {
            if let Some((t, v)) = series
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                out.push(MarketViolation(format!(
                    "{name}[{t}] = {v} outside [0, 1]"
                )));
            }
        }
        for (name, series) in [
            ("em_grid", &self.em_grid),
            ("dk1_demand", &self.dk1_demand),
            ("dh_demand", &self.dh_demand),
        ] {
            if let Some((t, v)) = series.iter().enumerate().find(|(_, v)| **v < 0.0) {
                out.push(MarketViolation(format!("{name}[{t}] = {v} negative")));
            }
        }
        if self.tf_purchase + self.tf_sale < 0.0 {
            out.push(MarketViolation(format!(
                "tf_purchase + tf_sale = {} < 0 opens a buy-low/sell-high loop",
                self.tf_purchase + self.tf_sale
            )));
        }
        if self.em_ng < 0.0 {
            out.push(MarketViolation(format!("em_ng = {} negative", self.em_ng)));
        }
        out
    }

    /// Hourly cost of grid electricity: spot + purchase tariff + carbon
    /// cost of the grid mix at the scenario tax.
    pub fn purchase_price(&self, co2_tax: f64) -> Vec<f64> {
        self.spot
            .iter()
            .zip(&self.em_grid)
            .map(|(s, em)| s + self.tf_purchase + em * co2_tax)
            .collect()
    }

    /// Hourly revenue for exported electricity: spot minus the feed-in
    /// tariff. Negative spot hours stay negative.
    pub fn sale_price(&self) -> Vec<f64> {
        self.spot.iter().map(|s| s - self.tf_sale).collect()
    }

    /// Hourly cost of natural gas including the carbon cost of burning it.
    pub fn ng_price(&self, co2_tax: f64) -> Vec<f64> {
        self.ng.iter().map(|p| p + self.em_ng * co2_tax).collect()
    }

    /// Per-unit availability of the grid-to-electrolysis-bus link: 1 in
    /// hours whose spot price is at or below the certification ceiling,
    /// else 0.
    pub fn grid_for_fuel_mask(&self) -> Vec<f64> {
        self.spot
            .iter()
            .map(|s| {
                if *s <= GRID_ELECTRICITY_SPOT_CEILING {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// External electricity demand series: the regional demand profile
    /// rescaled so that its sum over the horizon equals
    /// `annual_target_mwh`, prorated to the horizon length like every
    /// other annual quantity. This load caps how much renewable
    /// electricity the hub can sell.
    pub fn external_demand(&self, annual_target_mwh: f64) -> Vec<f64> {
        let total: f64 = self.dk1_demand.iter().sum();
        assert!(
            total > 0.0,
            "regional demand profile sums to zero; cannot scale"
        );
        let want = annual_target_mwh * self.snapshots.capital_scale();
        self.dk1_demand.iter().map(|d| d * want / total).collect()
    }

    /// Restrict every series to the given snapshot positions (sorted,
    /// unique). Used to cut representative weeks out of a year.
    pub fn subset(&self, idx: &[usize]) -> MarketData {
        assert!(idx.windows(2).all(|w| w[0] < w[1]), "indices must ascend");
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let stamps = self.snapshots.timestamps().to_vec();
        MarketData {
            snapshots: Snapshots::from_timestamps(idx.iter().map(|&i| stamps[i]).collect()),
            spot: pick(&self.spot),
            ng: pick(&self.ng),
            em_grid: pick(&self.em_grid),
            dk1_demand: pick(&self.dk1_demand),
            dh_demand: pick(&self.dh_demand),
            wind_cf: pick(&self.wind_cf),
            solar_cf: pick(&self.solar_cf),
            tf_purchase: self.tf_purchase,
            tf_sale: self.tf_sale,
            em_ng: self.em_ng,
        }
    }

    /// Indices of four seasonally spread weeks (starting mid January,
    /// April, July, October), the standard reduced horizon for trend
    /// runs: 672 hours instead of 8760.
    pub fn representative_week_indices(&self) -> Vec<usize> {
        let n = self.snapshots.len();
        let mut idx = Vec::with_capacity(4 * 168);
        for start_day in [14, 104, 195, 287] {
            let start = start_day * 24;
            for h in start..start + 168 {
                if h < n {
                    idx.push(h);
                }
            }
        }
        idx
    }

    /// Load named CSVs from a directory: `spot_<year>.csv`,
    /// `ng_<year>.csv`, `em_grid_<year>.csv`, `dk1_demand_<year>.csv`,
    /// `dh_demand.csv`, `wind_cf.csv`, `solar_cf.csv`. The gas file may
    /// be coarser than hourly and is forward-filled; everything else
    /// must be gap-free.
    pub fn load_dir(
        dir: &Path,
        year: u16,
        tf_purchase: f64,
        tf_sale: f64,
        em_ng: f64,
    ) -> Result<MarketData, SeriesError> {
        let spot = load_series_csv(&dir.join(format!("spot_{year}.csv")), GapPolicy::Reject)?;
        let n = spot.len();
        let need = |name: String, policy: GapPolicy| -> Result<Vec<f64>, SeriesError> {
            let path = dir.join(&name);
            let s = load_series_csv(&path, policy)?;
            if s.len() != n {
                return Err(SeriesError::Length {
                    path: path.display().to_string(),
                    expected: n,
                    found: s.len(),
                });
            }
            Ok(s.values)
        };
        let ng = need(format!("ng_{year}.csv"), GapPolicy::ForwardFill)?;
        let em_grid = need(format!("em_grid_{year}.csv"), GapPolicy::Reject)?;
        let dk1 = need(format!("dk1_demand_{year}.csv"), GapPolicy::Reject)?;
        let dh = need("dh_demand.csv".into(), GapPolicy::Reject)?;
        let wind = need("wind_cf.csv".into(), GapPolicy::Reject)?;
        let solar = need("solar_cf.csv".into(), GapPolicy::Reject)?;
        Ok(MarketData {
            snapshots: Snapshots::hourly(spot.start, n),
            spot: spot.values,
            ng,
            em_grid,
            dk1_demand: dk1,
            dh_demand: dh,
            wind_cf: wind,
            solar_cf: solar,
            tf_purchase,
            tf_sale,
            em_ng,
        })
    }
}

/// Deterministic synthetic market years for tests, demos and trend
/// fixtures. Shapes are chosen to look like the real serie families —
/// seasonal wind, diurnal solar, winter-peaking heat demand, and a
/// low-price year (2019-like) versus a high-price year (2022-like) —
/// without claiming to reproduce any historical hour.
pub mod synth {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    /// Wind capacity factors never fall below this: a becalmed series
    /// with literal zeros everywhere makes toy systems infeasible in
    /// uninteresting ways.
    pub const WIND_CF_FLOOR: f64 = 0.02;

    fn seasonal(h: usize) -> f64 {
        // 1.0 mid-winter, −1.0 mid-summer
        (TAU * (h as f64 / 8760.0 + 0.5 / 365.0)).cos()
    }

    fn diurnal(h: usize) -> f64 {
        // peaks in the evening
        (TAU * ((h % 24) as f64 - 18.0) / 24.0).cos()
    }

    /// Build one synthetic year (or a prefix of one) for the given
    /// price-year family. Deterministic in (year, seed).
    pub fn market_data(year: u16, n: usize, seed: u64) -> MarketData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (year as u64) << 17);
        let start = Utc.with_ymd_and_hms(year as i32, 1, 1, 0, 0, 0).unwrap();
        let (spot_base, spot_swing, ng_base, ng_swing) = if year >= 2021 {
            (210.0, 120.0, 120.0, 45.0)
        } else {
            (38.0, 22.0, 16.0, 4.0)
        };

        let mut wind = Vec::with_capacity(n);
        let mut w: f64 = 0.45;
        for _ in 0..n {
            // mean-reverting walk, clipped — bursty like real wind
            w += rng.gen_range(-0.16..0.16) + (0.45 - w) * 0.08;
            wind.push(w.clamp(WIND_CF_FLOOR, 1.0));
        }

        let mut solar = Vec::with_capacity(n);
        for h in 0..n {
            let hour = h % 24;
            let day_pos = (TAU * (hour as f64 - 13.0) / 24.0).cos().max(0.0);
            let season = 0.55 - 0.45 * seasonal(h);
            let cloud = rng.gen_range(0.5..1.0);
            solar.push((day_pos.powi(2) * season * cloud).clamp(0.0, 1.0));
        }

        let mut spot = Vec::with_capacity(n);
        for h in 0..n {
            let windy = wind[h];
            let base = spot_base + spot_swing * (0.35 * seasonal(h) + 0.45 * diurnal(h));
            // windy hours depress the price; occasionally below the
            // certification ceiling even in expensive years
            let v = base - spot_swing * 1.4 * (windy - 0.45) + rng.gen_range(-6.0..6.0);
            spot.push(if rng.gen_bool(0.01) { -5.0 } else { v });
        }

        let mut ng = Vec::with_capacity(n);
        let mut day_price = ng_base;
        for h in 0..n {
            if h % 24 == 0 {
                day_price =
                    (ng_base + ng_swing * (0.5 * seasonal(h)) + rng.gen_range(-2.0..2.0)).max(1.0);
            }
            ng.push(day_price);
        }

        let em_grid = (0..n)
            .map(|h| (0.17 + 0.13 * diurnal(h) - 0.20 * (wind[h] - 0.45)).clamp(0.0, 0.55))
            .collect();

        let dk1 = (0..n)
            .map(|h| 2500.0 + 550.0 * seasonal(h) + 420.0 * diurnal(h) + rng.gen_range(0.0..120.0))
            .collect();

        let dh = (0..n)
            .map(|h| (5.5 + 4.5 * seasonal(h) + 0.8 * diurnal(h) + rng.gen_range(-0.3..0.3)).max(0.0))
            .collect();

        MarketData {
            snapshots: Snapshots::hourly(start, n),
            spot,
            ng,
            em_grid,
            dk1_demand: dk1,
            dh_demand: dh,
            wind_cf: wind,
            solar_cf: solar,
            tf_purchase: DEFAULT_TF_PURCHASE,
            tf_sale: DEFAULT_TF_SALE,
            em_ng: DEFAULT_EM_NG,
        }
    }

    /// Write one synthetic year to the CSV layout `MarketData::load_dir`
    /// reads back.
    pub fn write_csvs(dir: &Path, year: u16, n: usize, seed: u64) -> std::io::Result<()> {
        let data = market_data(year, n, seed);
        std::fs::create_dir_all(dir)?;
        let stamps = data.snapshots.timestamps().to_vec();
        let dump = |name: String, values: &[f64]| -> std::io::Result<()> {
            let mut out = String::with_capacity(values.len() * 40);
            out.push_str("timestamp,value\n");
            for (ts, v) in stamps.iter().zip(values) {
                out.push_str(&format!(
                    "{},{v}\n",
                    ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
                ));
            }
            std::fs::write(dir.join(name), out)
        };
        dump(format!("spot_{year}.csv"), &data.spot)?;
        dump(format!("ng_{year}.csv"), &data.ng)?;
        dump(format!("em_grid_{year}.csv"), &data.em_grid)?;
        dump(format!("dk1_demand_{year}.csv"), &data.dk1_demand)?;
        dump("dh_demand.csv".into(), &data.dh_demand)?;
        dump("wind_cf.csv".into(), &data.wind_cf)?;
        dump("solar_cf.csv".into(), &data.solar_cf)?;
        Ok(())
    }
}
