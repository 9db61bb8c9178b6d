//! The two-initial-state propagation protocol and its analysis.
//!
//! A probe spin occupies site 0 of an (N+1)-site register; sites 1..=N hold
//! the bulk chain. Variant (a) starts the probe in |0>, variant (b) entangles
//! it with bulk site 1 through a CNOT acting on (|0>+|1>)/sqrt(2). Only the
//! bulk evolves: the Hamiltonian carries no coupling and no field on site 0,
//! so any entanglement measured across the probe was injected at t = 0 and
//! transported by the bulk dynamics.
//!
//! For each block size d the run records the entanglement entropy of the
//! last d bulk sites under both variants and the mutual information between
//! the probe and that block, then extracts three time scales: t_star
//! (entropy saturation), t_diff (the variants' split, i.e. arrival of the
//! injected bit after traveling ell = N - d sites), and t_mi (mutual
//! information onset). Velocities come from straight-line fits of ell
//! against these times; the transverse-field chain has a closed-form
//! quasi-particle bound to compare against.
//!
//! All entropy series and thresholds here are in bits.

use serde::{Deserialize, Serialize};

use crate::basis::{
    assemble_hamiltonian, neel_state, product_state, DenseOperator, ModelParams, SiteSubset,
    StateVector, MAX_SITES,
};
use crate::entanglement::{
    mutual_information, reduced_density_matrix, von_neumann_entropy, EntropyBase,
};
use crate::error::{Error, Result};
use crate::series::{TimeGrid, TimeSeries};
use crate::spectral::eigendecompose;

/// Default saturation band width for t_star.
pub const DEFAULT_DELTA_SAT: f64 = 0.05;
/// Default split threshold for t_diff, in bits.
pub const DEFAULT_EPS_SPLIT: f64 = 0.02;
/// Default onset threshold for t_mi, in bits.
pub const DEFAULT_EPS_MI: f64 = 0.01;
/// Default dwell length: samples a crossing must hold to count.
pub const DEFAULT_DWELL: usize = 10;
/// Permitted norm drift of evolved states before the run aborts.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// Extraction thresholds for the three time scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// t_star: saturation means entering the band (1 - delta_sat) * plateau.
    pub delta_sat: f64,
    /// t_diff: sustained |S_b - S_a| excess, in bits.
    pub eps_split: f64,
    /// t_mi: sustained mutual-information excess, in bits.
    pub eps_mi: f64,
    /// Consecutive samples a crossing must persist.
    pub dwell: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            delta_sat: DEFAULT_DELTA_SAT,
            eps_split: DEFAULT_EPS_SPLIT,
            eps_mi: DEFAULT_EPS_MI,
            dwell: DEFAULT_DWELL,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_sat > 0.0 && self.delta_sat < 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta_sat must lie in (0, 1), got {}",
                self.delta_sat
            )));
        }
        if !(self.eps_split.is_finite() && self.eps_split > 0.0)
            || !(self.eps_mi.is_finite() && self.eps_mi > 0.0)
        {
            return Err(Error::InvalidParams(format!(
                "split thresholds must be positive, got eps_split = {}, eps_mi = {}",
                self.eps_split, self.eps_mi
            )));
        }
        if self.dwell == 0 {
            return Err(Error::InvalidParams("dwell must be at least 1".into()));
        }
        Ok(())
    }
}

/// The sensitivity sweep: the baseline plus one-at-a-time +-50% variations
/// of each threshold (dwell rounds to the nearest sample, at least 1).
/// Nine labeled settings in a fixed order.
pub fn threshold_variants(base: &Thresholds) -> Vec<(String, Thresholds)> {
    let scale_dwell = |f: f64| ((base.dwell as f64 * f).round() as usize).max(1);
    let mut out = vec![("baseline".to_string(), *base)];
    for (name, lo, hi) in [
        (
            "delta_sat",
            Thresholds {
                delta_sat: base.delta_sat * 0.5,
                ..*base
            },
            Thresholds {
                delta_sat: base.delta_sat * 1.5,
                ..*base
            },
        ),
        (
            "eps_split",
            Thresholds {
                eps_split: base.eps_split * 0.5,
                ..*base
            },
            Thresholds {
                eps_split: base.eps_split * 1.5,
                ..*base
            },
        ),
        (
            "eps_mi",
            Thresholds {
                eps_mi: base.eps_mi * 0.5,
                ..*base
            },
            Thresholds {
                eps_mi: base.eps_mi * 1.5,
                ..*base
            },
        ),
        (
            "dwell",
            Thresholds {
                dwell: scale_dwell(0.5),
                ..*base
            },
            Thresholds {
                dwell: scale_dwell(1.5),
                ..*base
            },
        ),
    ] {
        out.push((format!("{name}-50%"), lo));
        out.push((format!("{name}+50%"), hi));
    }
    out
}

/// Initial state of the bulk chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulkState {
    /// Alternating up-down product state (site 1 up).
    Neel,
    /// Arbitrary product state given as a bit pattern over bulk sites
    /// (bit j - 1 of the pattern is bulk site j; set bits are down spins).
    Product(u64),
}

impl BulkState {
    fn build(&self, n: usize) -> Result<StateVector> {
        match *self {
            BulkState::Neel => neel_state(n),
            BulkState::Product(bits) => product_state(bits, n),
        }
    }
}

/// The two initial-state variants of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Probe in |0>, product with the bulk.
    A,
    /// Probe maximally entangled with bulk site 1.
    B,
}

/// Embeds an N-site bulk state into the (N+1)-site register and attaches
/// the probe: variant (a) leaves it in |0>, variant (b) applies a CNOT with
/// the probe as control onto site 1 after preparing the probe in
/// (|0>+|1>)/sqrt(2). With a Néel bulk, variant (b) carries an EPR pair on
/// sites 0 and 1.
pub fn prepare_initial_state(variant: Variant, bulk: &StateVector) -> Result<StateVector> {
    let n = bulk.sites();
    if n + 1 > MAX_SITES {
        return Err(Error::InvalidParams(format!(
            "bulk of {n} sites leaves no room for the probe under MAX_SITES = {MAX_SITES}"
        )));
    }
    let dim = 1usize << (n + 1);
    let mut amp = ndarray::Array1::zeros(dim);
    match variant {
        Variant::A => {
            // Probe bit 0 stays 0: bulk pattern zb maps to index zb << 1.
            for (zb, &a) in bulk.amplitudes().iter().enumerate() {
                amp[zb << 1] = a;
            }
            StateVector::from_amplitudes(amp, n + 1)
        }
        Variant::B => {
            let inv = std::f64::consts::FRAC_1_SQRT_2;
            for (zb, &a) in bulk.amplitudes().iter().enumerate() {
                amp[zb << 1] = a * inv;
                amp[(zb << 1) | 1] = a * inv;
            }
            let plus = StateVector::from_amplitudes(amp, n + 1)?;
            apply_cnot_entangler(&plus)
        }
    }
}

/// CNOT with the probe as control and bulk site 1 as target.
fn apply_cnot_entangler(v: &StateVector) -> Result<StateVector> {
    crate::basis::apply_cnot(v, 0, 1)
}

/// Hamiltonian of the (N+1)-site register that acts as the bulk model on
/// sites 1..=N and as zero on the probe: no probe coupling, no probe field.
/// Restricted to either probe sector it equals the N-site bulk Hamiltonian.
pub fn bulk_evolution_hamiltonian(p: &ModelParams) -> Result<DenseOperator> {
    p.validate()?;
    if p.sites + 1 > MAX_SITES {
        return Err(Error::InvalidParams(format!(
            "bulk of {} sites leaves no room for the probe under MAX_SITES = {MAX_SITES}",
            p.sites
        )));
    }
    assemble_hamiltonian(p, p.sites + 1, 1)
}

/// Configuration of one propagation run.
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolConfig {
    /// Bulk model; `model.sites` is the bulk size N (the register adds the
    /// probe).
    pub model: ModelParams,
    pub bulk_state: BulkState,
    /// Block sizes d to record; R is the last d bulk sites, ell = N - d.
    pub d_list: Vec<usize>,
    pub dt: f64,
    pub t_max: f64,
    pub thresholds: Thresholds,
    /// Reporting base for emitted series; internal series stay in bits.
    pub base: EntropyBase,
}

impl ProtocolConfig {
    /// Defaults: Néel bulk, d = 1..=6, dt = 0.02, t_max = 10, default
    /// thresholds, base-2 entropies.
    pub fn new(model: ModelParams) -> Self {
        ProtocolConfig {
            model,
            bulk_state: BulkState::Neel,
            d_list: (1..=6).collect(),
            dt: 0.02,
            t_max: 10.0,
            thresholds: Thresholds::default(),
            base: EntropyBase::Two,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let n = self.model.sites;
        if n + 1 > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "bulk of {n} sites leaves no room for the probe under MAX_SITES = {MAX_SITES}"
            )));
        }
        if self.d_list.is_empty() {
            return Err(Error::InvalidParams("d_list must not be empty".into()));
        }
        for &d in &self.d_list {
            if d == 0 || d >= n {
                return Err(Error::InvalidParams(format!(
                    "block size d = {d} outside 1 <= d < N = {n}"
                )));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0)
            || !(self.t_max.is_finite() && self.t_max >= self.dt)
        {
            return Err(Error::InvalidParams(format!(
                "need 0 < dt <= t_max, got dt = {}, t_max = {}",
                self.dt, self.t_max
            )));
        }
        if let BulkState::Product(bits) = self.bulk_state {
            if bits >> n != 0 {
                return Err(Error::BasisOutOfRange { bits, sites: n });
            }
        }
        self.thresholds.validate()
    }
}

/// Per-d output: the three series (in bits) and the extracted time scales
/// at the run's configured thresholds.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub d: usize,
    /// Travel distance ell = N - d.
    pub ell: usize,
    #[serde(skip)]
    pub s_a: TimeSeries,
    #[serde(skip)]
    pub s_b: TimeSeries,
    #[serde(skip)]
    pub mi: TimeSeries,
    /// Saturation time of the variant-(a) entropy; absent if the series
    /// never enters the plateau band.
    pub t_star: Option<f64>,
    /// Split time of the two variants; absent if they never split.
    pub t_diff: Option<f64>,
    /// Mutual-information onset; absent if it never rises.
    pub t_mi: Option<f64>,
    /// Early growth rate of S_a in bits per unit time (the slope of the
    /// linear segment between 10% and 60% of the plateau), when that
    /// segment holds at least three samples.
    pub growth_rate: Option<f64>,
}

/// Time scales re-extracted from a stored run at alternative thresholds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Extraction {
    pub d: usize,
    pub ell: usize,
    pub t_star: Option<f64>,
    pub t_diff: Option<f64>,
    pub t_mi: Option<f64>,
}

/// Full output of [`run_protocol`].
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRun {
    pub config: ProtocolConfig,
    /// Initial energy of the variant-(a) state (the bulk quench energy; the
    /// probe contributes nothing to H).
    pub e0: f64,
    /// One record per requested d, ascending.
    pub records: Vec<RunRecord>,
    /// Probe entropy S_0(t) under variant (b), in bits; constant 1 because
    /// the evolution never touches the probe.
    #[serde(skip)]
    pub probe_entropy: TimeSeries,
}

impl ProtocolRun {
    /// Re-extracts every record's time scales at the given thresholds.
    pub fn extract_with(&self, th: &Thresholds) -> Result<Vec<Extraction>> {
        th.validate()?;
        self.records
            .iter()
            .map(|r| {
                Ok(Extraction {
                    d: r.d,
                    ell: r.ell,
                    t_star: extract_t_star(&r.s_a, th.delta_sat),
                    t_diff: extract_t_diff(&r.s_a, &r.s_b, th.eps_split, th.dwell)?,
                    t_mi: extract_t_mi(&r.mi, th.eps_mi, th.dwell),
                })
            })
            .collect()
    }

    /// (t_diff, ell) fit points over records where t_diff was found.
    pub fn t_diff_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.t_diff.map(|t| (t, r.ell as f64)))
            .collect()
    }

    /// (t_mi, ell) fit points over records where t_mi was found.
    pub fn t_mi_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.t_mi.map(|t| (t, r.ell as f64)))
            .collect()
    }
}

/// Runs the full protocol: one spectral decomposition of the bulk-only
/// Hamiltonian shared by both variants, batched evolution over the grid,
/// and per-d entropy and mutual-information series with extracted time
/// scales.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolRun> {
    cfg.validate()?;
    let n = cfg.model.sites;
    let bulk = cfg.bulk_state.build(n)?;
    let h = bulk_evolution_hamiltonian(&cfg.model)?;
    let dec = eigendecompose(&h)?;
    let psi_a = prepare_initial_state(Variant::A, &bulk)?;
    let psi_b = prepare_initial_state(Variant::B, &bulk)?;
    let a_a = dec.overlaps(&psi_a)?;
    let a_b = dec.overlaps(&psi_b)?;
    let e0: f64 = dec
        .energies()
        .iter()
        .enumerate()
        .map(|(k, &e)| a_a.weight(k) * e)
        .sum();

    let grid = TimeGrid::new(cfg.dt, cfg.t_max)?;
    let states_a = dec.evolve_series(&a_a, &grid);
    let states_b = dec.evolve_series(&a_b, &grid);
    for state in states_a.iter().chain(states_b.iter()) {
        let drift = (state.norm() - 1.0).abs();
        if drift > NORM_DRIFT_TOL {
            return Err(Error::ContractViolation(format!(
                "evolved-state norm drifted by {drift:.3e}"
            )));
        }
    }

    let probe = SiteSubset::single(0, n + 1)?;
    let mut s0 = Vec::with_capacity(states_b.len());
    for state in &states_b {
        let rho = reduced_density_matrix(state, &probe)?;
        s0.push(von_neumann_entropy(&rho, EntropyBase::Two)?);
    }
    let probe_entropy = TimeSeries::new(cfg.dt, s0)?;

    let mut d_sorted = cfg.d_list.clone();
    d_sorted.sort_unstable();
    d_sorted.dedup();

    let mut records = Vec::with_capacity(d_sorted.len());
    for &d in &d_sorted {
        // R is the last d bulk sites, which are also the last d register
        // sites because the probe sits at the opposite end.
        let block = SiteSubset::last(d, n + 1)?;
        let mut sa = Vec::with_capacity(states_a.len());
        let mut sb = Vec::with_capacity(states_b.len());
        let mut mi = Vec::with_capacity(states_b.len());
        for (ka, kb) in states_a.iter().zip(states_b.iter()) {
            sa.push(von_neumann_entropy(
                &reduced_density_matrix(ka, &block)?,
                EntropyBase::Two,
            )?);
            sb.push(von_neumann_entropy(
                &reduced_density_matrix(kb, &block)?,
                EntropyBase::Two,
            )?);
            mi.push(mutual_information(kb, &probe, &block)?);
        }
        let s_a = TimeSeries::new(cfg.dt, sa)?;
        let s_b = TimeSeries::new(cfg.dt, sb)?;
        let mi = TimeSeries::new(cfg.dt, mi)?;
        let t_star = extract_t_star(&s_a, cfg.thresholds.delta_sat);
        let t_diff = extract_t_diff(&s_a, &s_b, cfg.thresholds.eps_split, cfg.thresholds.dwell)?;
        let t_mi = extract_t_mi(&mi, cfg.thresholds.eps_mi, cfg.thresholds.dwell);
        let growth_rate = early_growth_rate(&s_a);
        records.push(RunRecord {
            d,
            ell: n - d,
            s_a,
            s_b,
            mi,
            t_star,
            t_diff,
            t_mi,
            growth_rate,
        });
    }

    Ok(ProtocolRun {
        config: cfg.clone(),
        e0,
        records,
        probe_entropy,
    })
}

/// Saturation time: first grid time with s(t) >= (1 - delta_sat) * plateau,
/// the plateau being the mean of the last quarter of the window. Absent when
/// the series never enters the band (possible for non-settling dynamics).
pub fn extract_t_star(s: &TimeSeries, delta_sat: f64) -> Option<f64> {
    s.first_at_or_above((1.0 - delta_sat) * s.plateau())
}

/// Split time: first time |s_b - s_a| exceeds eps_split and stays above for
/// `dwell` consecutive samples. `None` when the variants never split.
pub fn extract_t_diff(
    s_a: &TimeSeries,
    s_b: &TimeSeries,
    eps_split: f64,
    dwell: usize,
) -> Result<Option<f64>> {
    if s_a.len() != s_b.len() || s_a.dt() != s_b.dt() {
        return Err(Error::DimensionMismatch(format!(
            "series share no grid: {} samples at dt = {} vs {} at dt = {}",
            s_a.len(),
            s_a.dt(),
            s_b.len(),
            s_b.dt()
        )));
    }
    let diff: Vec<f64> = s_a
        .values()
        .iter()
        .zip(s_b.values())
        .map(|(a, b)| (b - a).abs())
        .collect();
    let diff = TimeSeries::new(s_a.dt(), diff)?;
    Ok(diff.first_sustained_above(eps_split, dwell))
}

/// Mutual-information onset: first sustained crossing of eps_mi under the
/// same dwell rule.
pub fn extract_t_mi(mi: &TimeSeries, eps_mi: f64, dwell: usize) -> Option<f64> {
    mi.first_sustained_above(eps_mi, dwell)
}

/// Slope of the early linear segment of a saturating series: least squares
/// over the samples between 10% and 60% of the plateau, `None` when fewer
/// than three samples land there.
fn early_growth_rate(s: &TimeSeries) -> Option<f64> {
    let plateau = s.plateau();
    if plateau <= 0.0 {
        return None;
    }
    let lo = 0.1 * plateau;
    let hi = 0.6 * plateau;
    let start = s.values().iter().position(|&v| v >= lo)?;
    let end = s.values()[start..]
        .iter()
        .position(|&v| v > hi)
        .map_or(s.len(), |k| start + k);
    let pts: Vec<(f64, f64)> = (start..end).map(|k| (s.time(k), s.values()[k])).collect();
    if pts.len() < 3 {
        return None;
    }
    fit_velocity(&pts, FitMode::All).ok().map(|f| f.velocity)
}

/// Parity filter applied to the ell values before a velocity fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    All,
    EvenOnly,
    OddOnly,
}

/// Straight-line fit ell = v t + c.
#[derive(Clone, Debug, Serialize)]
pub struct VelocityFit {
    pub mode: FitMode,
    /// The (t, ell) points the fit used, after parity filtering.
    pub points: Vec<(f64, f64)>,
    /// Free-intercept least-squares slope, in sites per unit time.
    pub velocity: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope of the through-origin fit ell = v t, reported alongside
    /// because the intercept treatment is a modeling choice.
    pub velocity_through_origin: f64,
}

/// Least-squares line through (t, ell) points, optionally restricted to one
/// ell parity. Needs at least two points after filtering and a nondegenerate
/// spread of times.
pub fn fit_velocity(points: &[(f64, f64)], mode: FitMode) -> Result<VelocityFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, ell)| match mode {
            FitMode::All => true,
            FitMode::EvenOnly => (ell.round() as i64).rem_euclid(2) == 0,
            FitMode::OddOnly => (ell.round() as i64).rem_euclid(2) == 1,
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let var_t: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let cov: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_l)).sum();
    if var_t <= 0.0 {
        return Err(Error::InvalidParams(
            "velocity fit needs at least two distinct times".into(),
        ));
    }
    let velocity = cov / var_t;
    let intercept = mean_l - velocity * mean_t;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_l).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - velocity * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let sum_tt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sum_tl: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    if sum_tt <= 0.0 {
        return Err(Error::InvalidParams(
            "through-origin fit needs a nonzero time".into(),
        ));
    }
    Ok(VelocityFit {
        mode,
        points: pts,
        velocity,
        intercept,
        r_squared,
        velocity_through_origin: sum_tl / sum_tt,
    })
}

/// Quasi-particle dispersion of the transverse-field chain:
/// eps_k = 2 sqrt(1 + h_x^2 - 2 h_x cos k).
pub fn ti_dispersion(hx: f64, k: f64) -> f64 {
    // Evaluated as (1 - h)^2 + 4 h sin^2(k/2), which is the same quantity
    // without the cancellation that loses half the significant digits near
    // the gapless point (h_x = 1, k -> 0).
    let s = (0.5 * k).sin();
    2.0 * ((1.0 - hx) * (1.0 - hx) + 4.0 * hx * s * s).sqrt()
}

/// Maximum quasi-particle group velocity: 2 h_x below the critical field,
/// 2 at and above it.
pub fn ti_vmax(hx: f64) -> f64 {
    assert!(hx >= 0.0, "transverse field must be nonnegative");
    if hx < 1.0 {
        2.0 * hx
    } else {
        2.0
    }
}

/// The same maximum obtained numerically: central-difference group velocity
/// d eps / d k sampled on a fine interior grid of (0, pi). Agrees with
/// [`ti_vmax`] within 1e-6; the grid is dense enough that no refinement is
/// needed even where the maximum sits at the edge of the window.
pub fn ti_vmax_numeric(hx: f64) -> f64 {
    assert!(hx >= 0.0, "transverse field must be nonnegative");
    let steps = 200_000usize;
    let h = 1e-6;
    let mut best = 0.0f64;
    for i in 1..steps {
        let k = std::f64::consts::PI * i as f64 / steps as f64;
        let g = (ti_dispersion(hx, k + h) - ti_dispersion(hx, k - h)) / (2.0 * h);
        best = best.max(g.abs());
    }
    best
}

/// Scrambling length xi = v_ee * t_star: how far entanglement travels
/// before the local entropy saturates.
pub fn scrambling_length(v_ee: f64, t_star: f64) -> Result<f64> {
    if !(v_ee.is_finite() && v_ee > 0.0) || !(t_star.is_finite() && t_star > 0.0) {
        return Err(Error::InvalidParams(format!(
            "scrambling length needs positive inputs, got v = {v_ee}, t_star = {t_star}"
        )));
    }
    Ok(v_ee * t_star)
}
