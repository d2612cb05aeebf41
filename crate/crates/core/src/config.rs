use crate::ascent::AscentOptions;
use crate::spectrum::CollocationOptions;

/// Tunables shared by the multi-start optimizers and the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Seed of every randomized restart.
    pub seed: u64,
    /// Random restarts per multi-start search.
    pub restarts: usize,
    /// Relative tolerance of the outer root finders in `eps`.
    pub outer_tol: f64,
    /// Stationarity tolerance of the inner flows.
    pub inner_tol: f64,
    /// Cap on `|Im s|` for root searches; `None` uses the default rule.
    pub imag_cap: Option<f64>,
    /// Relative distance kept from the right end of the `eps` interval.
    pub endpoint_margin: f64,
    pub max_flow_iter: usize,
    /// Frequencies in the coarse grid used to seed the rank-one flow.
    pub omega_seeds: usize,
    pub collocation: CollocationOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            restarts: 5,
            outer_tol: 1e-6,
            inner_tol: 1e-9,
            imag_cap: None,
            endpoint_margin: 1e-6,
            max_flow_iter: 2000,
            omega_seeds: 64,
            collocation: CollocationOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn ascent(&self) -> AscentOptions {
        AscentOptions { tol: self.inner_tol, max_iter: self.max_flow_iter, ..Default::default() }
    }
}
