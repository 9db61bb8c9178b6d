//! Uniformly sampled time series and the plateau analysis shared by the
//! extraction rules: saturation bands, sustained crossings, and recurrence
//! (plateau-band re-entry) detection.

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform time grid t_k = k * dt, k = 0..=steps, so t_max = steps * dt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    /// Builds a grid from a step and an end time; `t_max` is rounded to the
    /// nearest whole number of steps.
    pub fn new(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "t_max must be nonnegative, got {t_max}"
            )));
        }
        let steps = (t_max / dt).round() as usize;
        Ok(Self { dt, steps })
    }

    /// Sample spacing.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples including t = 0.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    /// A grid always contains at least the t = 0 sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The k-th sample time.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// All sample times, ascending.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// A real observable sampled on a `TimeGrid` starting at t = 0.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries {
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Wraps sampled values on a uniform grid with spacing `dt`.
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidParams(
                "time series needs at least one sample".into(),
            ));
        }
        Ok(Self { dt, values })
    }

    /// Sample spacing.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// A `TimeSeries` holds at least one sample by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The k-th sample time.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Sampled values in grid order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over the final quarter of the window (at least one sample);
    /// the plateau estimate used by the saturation band.
    pub fn plateau(&self) -> f64 {
        let q = (self.len() / 4).max(1);
        let tail = &self.values[self.len() - q..];
        tail.iter().sum::<f64>() / q as f64
    }

    /// First sample time with value >= `threshold`.
    pub fn first_at_or_above(&self, threshold: f64) -> Option<f64> {
        self.values
            .iter()
            .position(|&y| y >= threshold)
            .map(|k| self.time(k))
    }

    /// First sample time from which the value stays strictly above `eps`
    /// for `dwell` consecutive samples. Windows truncated by the end of the
    /// series do not count as sustained.
    pub fn first_sustained_above(&self, eps: f64, dwell: usize) -> Option<f64> {
        let dwell = dwell.max(1);
        if self.len() < dwell {
            return None;
        }
        let mut run = 0usize;
        for (k, &y) in self.values.iter().enumerate() {
            if y > eps {
                run += 1;
                if run == dwell {
                    return Some(self.time(k + 1 - dwell));
                }
            } else {
                run = 0;
            }
        }
        None
    }
}

/// Multiple of `delta_sat` that sets the exit depth of the plateau band:
/// a series that entered the band must fall below
/// (1 - RECURRENCE_DIP * delta_sat) * plateau to count as a recurrence dip.
pub const RECURRENCE_DIP: f64 = 2.0;

/// Outcome of plateau-band recurrence detection.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecurrenceReport {
    /// Plateau estimate (mean of the final quarter).
    pub plateau: f64,
    /// First entry into the band [(1 - delta_sat) * plateau, ∞).
    pub t_enter: Option<f64>,
    /// First later dip below (1 - RECURRENCE_DIP * delta_sat) * plateau.
    pub t_exit: Option<f64>,
    /// First band re-entry after the dip.
    pub t_reenter: Option<f64>,
    /// True when the series never saturates or re-enters the band after a
    /// dip; either way the dynamics revisit pre-saturation values.
    pub flagged: bool,
}

/// Scans a series for recurrences: saturation-band entry, a dip below the
/// exit depth, and re-entry. A series that never enters the band at all is
/// also flagged (saturation never happened inside the window).
pub fn detect_recurrence(series: &TimeSeries, delta_sat: f64) -> RecurrenceReport {
    let plateau = series.plateau();
    let enter_level = (1.0 - delta_sat) * plateau;
    let exit_level = (1.0 - RECURRENCE_DIP * delta_sat) * plateau;
    let mut t_enter = None;
    let mut t_exit = None;
    let mut t_reenter = None;
    for (k, &y) in series.values().iter().enumerate() {
        let t = series.time(k);
        if t_enter.is_none() {
            if y >= enter_level {
                t_enter = Some(t);
            }
        } else if t_exit.is_none() {
            if y < exit_level {
                t_exit = Some(t);
            }
        } else if t_reenter.is_none() && y >= enter_level {
            t_reenter = Some(t);
        }
    }
    RecurrenceReport {
        plateau,
        t_enter,
        t_exit,
        t_reenter,
        flagged: t_enter.is_none() || t_reenter.is_some(),
    }
}
