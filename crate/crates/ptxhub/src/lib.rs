//! Multi-carrier energy-hub optimization as a single linear program.
//!
//! `ptxhub` co-optimizes plant capacities and hourly operation of an
//! industrial energy hub (electricity, hydrogen, CO₂, methanol, heat at
//! several temperature levels) and reads levelized production costs and
//! behind-the-meter prices off the dual solution of that LP.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`net`] — declare carriers, buses, generators, multi-port links,
//!    stores and loads over an hourly horizon;
//! 2. [`lp`] — compile the network into a sparse LP with every row tagged
//!    by meaning (nodal balance, capacity coupling, storage continuity, …);
//! 3. [`solver`] — solve with the bundled simplex (exact duals, test scale)
//!    or hand the problem to an external backend through text files, then
//!    verify the solution against the KKT conditions;
//! 4. [`catalog`] + [`market`] — build the concrete Power-to-X hub from a
//!    technology catalog, scenario switches and market price series;
//! 5. [`results`] — extract capacities, levelized costs (from annual-demand
//!    row duals), shadow-price statistics and a cost breakdown, and audit
//!    cost recovery against strong duality;
//! 6. [`sweep`] — enumerate scenario grids, run cases in parallel, and
//!    aggregate the outputs for plotting.
//!
//! # Quick start
//!
//! Size a generator against a flat annual demand and read the levelized
//! cost of the product off the demand-row dual:
//!
//! ```
//! use ptxhub::net::{Network, Snapshots, Generator, Load};
//! use ptxhub::lp::assemble;
//! use ptxhub::solver::solve_reference;
//!
//! let mut net = Network::new(Snapshots::hourly_index(4));
//! net.add_carrier("el", ptxhub::net::CarrierUnit::Power);
//! net.add_bus("plant", "el");
//! net.add_generator(
//!     Generator::extendable("gen", "plant", 80_000.0) // €/MW/yr annualized
//!         .marginal_cost(10.0),                       // €/MWh
//! );
//! net.add_load(Load::annual("demand", "plant", 4.0)); // MWh over the year
//!
//! let problem = assemble(&net).unwrap();
//! let solution = solve_reference(&problem, &Default::default()).unwrap();
//! let lcoe = solution.row_dual(problem.row_index("dem__demand").unwrap());
//! // capacity is shared by all hours, so the marginal MWh costs
//! // annuity/8760 + marginal cost
//! assert!((lcoe - (80_000.0 / 8760.0 + 10.0)).abs() < 1e-6);
//! ```

pub mod catalog;
pub mod lp;
pub mod market;
pub mod net;
pub mod results;
pub mod solver;
pub mod sweep;

mod fnv;

pub use fnv::{fnv1a64, fnv1a64_hex};

/// Lower heating value of hydrogen, kWh per kg. Used only to convert
/// €/MWh results into €/kg for reporting; the model itself works in MWh.
pub const H2_KWH_PER_KG: f64 = 33.33;

/// Lower heating value of methanol, MWh per tonne (19.9 MJ/kg). Converts
/// €/MWh methanol costs into €/t for reporting and maps the catalog's
/// per-tonne electricity figure onto the per-MWh process coefficient.
pub const MEOH_MWH_PER_T: f64 = 5.53;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/network-model.md")]
    mod network_model {}
    #[doc = include_str!("../../../book/src/lp-compilation.md")]
    mod lp_compilation {}
    #[doc = include_str!("../../../book/src/solving-and-duality.md")]
    mod solving_and_duality {}
    #[doc = include_str!("../../../book/src/hub-catalog.md")]
    mod hub_catalog {}
    #[doc = include_str!("../../../book/src/market-interface.md")]
    mod market_interface {}
    #[doc = include_str!("../../../book/src/results-and-prices.md")]
    mod results_and_prices {}
    #[doc = include_str!("../../../book/src/scenario-sweeps.md")]
    mod scenario_sweeps {}
}
