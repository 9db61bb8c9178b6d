//! Bit-indexed computational basis, Pauli actions, and Hamiltonian assembly
//! for open spin-1/2 chains.
//!
//! Site `i` maps to bit `i` of the basis index; bit value 0 is spin up
//! (sigma-z eigenvalue +1), so basis index 0 is the all-up product state.
//! The chain Hamiltonian is
//!
//! ```text
//! H = -J  sum_i sz_i sz_{i+1}  -  J' sum_i sz_i sz_{i+2}
//!     + sum_i (hz sz_i + hx sx_i)
//! ```
//!
//! with open boundaries (nearest-neighbor sum over L-1 pairs, next-nearest
//! over L-2 pairs) and is real symmetric in this basis.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on register size for index arithmetic. Dense operators become
/// impractical well below this (a 2^14-dimensional matrix is already 2 GiB).
pub const MAX_SITES: usize = 24;

/// Symmetry tolerance enforced on every `DenseOperator`.
const SYMMETRY_TOL: f64 = 1e-12;

/// Model parameters of the open chain, in units of the nearest-neighbor
/// coupling J.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// Nearest-neighbor ZZ coupling J (1.0 for all presets).
    pub j: f64,
    /// Next-nearest-neighbor ZZ coupling J'.
    pub j_nnn: f64,
    /// Longitudinal field hz.
    pub hz: f64,
    /// Transverse field hx.
    pub hx: f64,
    /// Number of sites L.
    pub sites: usize,
}

impl ModelParams {
    /// Transverse Ising chain: J = 1, J' = 0, hz = 0, hx free.
    pub fn transverse_ising(hx: f64, sites: usize) -> Self {
        Self {
            j: 1.0,
            j_nnn: 0.0,
            hz: 0.0,
            hx,
            sites,
        }
    }

    /// Chaotic Ising chain: J = 1, J' = 0, hx = 1.05, hz = 0.5.
    pub fn chaotic_ising(sites: usize) -> Self {
        Self {
            j: 1.0,
            j_nnn: 0.0,
            hz: 0.5,
            hx: 1.05,
            sites,
        }
    }

    /// Extended chaotic Ising chain: J = 1, J' = 0.8, hx = 1.05, hz = 0.5.
    pub fn extended_chaotic_ising(sites: usize) -> Self {
        Self {
            j: 1.0,
            j_nnn: 0.8,
            hz: 0.5,
            hx: 1.05,
            sites,
        }
    }

    /// Hilbert-space dimension 2^L.
    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    /// Checks site count against the couplings that need neighbors.
    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 || self.sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "site count {} outside 1..={}",
                self.sites, MAX_SITES
            )));
        }
        if self.j != 0.0 && self.sites < 2 {
            return Err(Error::InvalidParams(
                "nearest-neighbor coupling needs at least 2 sites".into(),
            ));
        }
        if self.j_nnn != 0.0 && self.sites < 3 {
            return Err(Error::InvalidParams(
                "next-nearest-neighbor coupling needs at least 3 sites".into(),
            ));
        }
        for (name, v) in [
            ("j", self.j),
            ("j_nnn", self.j_nnn),
            ("hz", self.hz),
            ("hx", self.hx),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        Ok(())
    }
}

/// Pauli operator axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// A nonempty set of sites within an `L`-site register, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteSubset {
    mask: u64,
    sites: usize,
}

impl SiteSubset {
    /// Builds a subset from a raw bitmask.
    pub fn from_mask(mask: u64, sites: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "register size {sites} outside 1..={MAX_SITES}"
            )));
        }
        if mask == 0 {
            return Err(Error::EmptySubset);
        }
        let register = register_mask(sites);
        if mask & !register != 0 {
            return Err(Error::BasisOutOfRange { bits: mask, sites });
        }
        Ok(Self { mask, sites })
    }

    /// Builds a subset from explicit site indices.
    pub fn from_sites(list: &[usize], sites: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &site in list {
            if site >= sites {
                return Err(Error::SiteOutOfRange { site, sites });
            }
            mask |= 1 << site;
        }
        Self::from_mask(mask, sites)
    }

    /// The single-site subset {site}.
    pub fn single(site: usize, sites: usize) -> Result<Self> {
        Self::from_sites(&[site], sites)
    }

    /// The contiguous block of the last `count` sites of the register.
    pub fn last(count: usize, sites: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptySubset);
        }
        if count > sites {
            return Err(Error::SiteOutOfRange { site: sites, sites });
        }
        let mask = ((1u64 << count) - 1) << (sites - count);
        Self::from_mask(mask, sites)
    }

    /// Union with another subset of the same register.
    pub fn union(&self, other: &SiteSubset) -> Result<Self> {
        if self.sites != other.sites {
            return Err(Error::DimensionMismatch(format!(
                "subset registers differ: {} vs {}",
                self.sites, other.sites
            )));
        }
        Self::from_mask(self.mask | other.mask, self.sites)
    }

    /// Complement within the register; errors when the subset covers the
    /// whole register (the complement would be empty).
    pub fn complement(&self) -> Result<Self> {
        Self::from_mask(!self.mask & register_mask(self.sites), self.sites)
    }

    /// True when the two subsets share any site.
    pub fn overlaps(&self, other: &SiteSubset) -> bool {
        self.mask & other.mask != 0
    }

    /// True when `site` belongs to the subset.
    pub fn contains(&self, site: usize) -> bool {
        site < self.sites && self.mask >> site & 1 == 1
    }

    /// Number of sites in the subset.
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// A `SiteSubset` is nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The raw bitmask.
    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Size of the owning register.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Ascending site indices of the subset.
    pub fn site_indices(&self) -> Vec<usize> {
        (0..self.sites).filter(|&i| self.contains(i)).collect()
    }
}

fn register_mask(sites: usize) -> u64 {
    if sites == 64 {
        u64::MAX
    } else {
        (1u64 << sites) - 1
    }
}

/// A wave function over the 2^L computational basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    amp: Array1<Complex64>,
    sites: usize,
}

impl StateVector {
    /// Wraps an amplitude array; the length must be exactly 2^sites.
    pub fn from_amplitudes(amp: Array1<Complex64>, sites: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "register size {sites} outside 1..={MAX_SITES}"
            )));
        }
        if amp.len() != 1 << sites {
            return Err(Error::DimensionMismatch(format!(
                "amplitude array has length {}, expected 2^{} = {}",
                amp.len(),
                sites,
                1usize << sites
            )));
        }
        Ok(Self { amp, sites })
    }

    /// Number of register sites L.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Hilbert-space dimension 2^L.
    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    /// Amplitudes in basis order.
    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amp
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Computational basis state with a single unit amplitude at `bits`.
pub fn product_state(bits: u64, sites: usize) -> Result<StateVector> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::InvalidParams(format!(
            "register size {sites} outside 1..={MAX_SITES}"
        )));
    }
    if bits & !register_mask(sites) != 0 {
        return Err(Error::BasisOutOfRange { bits, sites });
    }
    let mut amp = Array1::zeros(1 << sites);
    amp[bits as usize] = Complex64::new(1.0, 0.0);
    StateVector::from_amplitudes(amp, sites)
}

/// Bit pattern of the Néel state: up on even sites, down on odd sites.
pub fn neel_bits(sites: usize) -> u64 {
    let mut bits = 0u64;
    for i in (1..sites).step_by(2) {
        bits |= 1 << i;
    }
    bits
}

/// The Néel product state |up down up down ...⟩, starting up at site 0.
pub fn neel_state(sites: usize) -> Result<StateVector> {
    product_state(neel_bits(sites), sites)
}

/// Applies a single-site Pauli operator, returning a new state.
pub fn apply_pauli(v: &StateVector, axis: PauliAxis, site: usize) -> Result<StateVector> {
    if site >= v.sites() {
        return Err(Error::SiteOutOfRange {
            site,
            sites: v.sites(),
        });
    }
    let mask = 1usize << site;
    let amp = v.amplitudes();
    let mut out = Array1::zeros(v.dim());
    match axis {
        PauliAxis::X => {
            for z in 0..v.dim() {
                out[z] = amp[z ^ mask];
            }
        }
        PauliAxis::Y => {
            // sy |up> = i |down>, sy |down> = -i |up>
            for z in 0..v.dim() {
                let phase = if z & mask != 0 {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, -1.0)
                };
                out[z] = phase * amp[z ^ mask];
            }
        }
        PauliAxis::Z => {
            for z in 0..v.dim() {
                let sign = if z & mask != 0 { -1.0 } else { 1.0 };
                out[z] = amp[z] * sign;
            }
        }
    }
    StateVector::from_amplitudes(out, v.sites())
}

/// Applies the CNOT gate: flips `target` on components where `control` is 1.
pub fn apply_cnot(v: &StateVector, control: usize, target: usize) -> Result<StateVector> {
    let sites = v.sites();
    for site in [control, target] {
        if site >= sites {
            return Err(Error::SiteOutOfRange { site, sites });
        }
    }
    if control == target {
        return Err(Error::EqualControlTarget(control));
    }
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    let amp = v.amplitudes();
    let mut out = Array1::zeros(v.dim());
    for z in 0..v.dim() {
        // CNOT is an involution, so gathering from the preimage is the same
        // permutation as scattering to the image.
        let src = if z & cmask != 0 { z ^ tmask } else { z };
        out[z] = amp[src];
    }
    StateVector::from_amplitudes(out, sites)
}

/// A real symmetric operator on the full register, stored dense.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    elem: Array2<f64>,
    sites: usize,
}

impl DenseOperator {
    /// Wraps a matrix, checking squareness, dimension, and symmetry.
    pub fn from_matrix(elem: Array2<f64>, sites: usize) -> Result<Self> {
        let dim = 1usize << sites;
        if elem.nrows() != dim || elem.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                elem.nrows(),
                elem.ncols()
            )));
        }
        let mut max_asym = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                max_asym = max_asym.max((elem[[i, j]] - elem[[j, i]]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asym });
        }
        Ok(Self { elem, sites })
    }

    /// The matrix elements.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.elem
    }

    /// Number of register sites L.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Matrix dimension 2^L.
    pub fn dim(&self) -> usize {
        self.elem.nrows()
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        self.elem.diag().sum()
    }

    /// Largest absolute matrix element, the scale used in residual bounds.
    pub fn max_abs(&self) -> f64 {
        self.elem.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    /// Applies the operator to a state: two real mat-vec products on the
    /// real and imaginary parts.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs state dim {}",
                self.dim(),
                v.dim()
            )));
        }
        let re = v.amplitudes().mapv(|z| z.re);
        let im = v.amplitudes().mapv(|z| z.im);
        let wre = self.elem.dot(&re);
        let wim = self.elem.dot(&im);
        let amp = Array1::from_iter(
            wre.iter()
                .zip(wim.iter())
                .map(|(&r, &i)| Complex64::new(r, i)),
        );
        StateVector::from_amplitudes(amp, v.sites())
    }
}

/// Assembles the chain Hamiltonian with terms acting on sites
/// `first_site..L`. `first_site = 0` is the plain chain; `first_site = 1`
/// leaves site 0 completely uncoupled (used by the propagation protocol).
pub(crate) fn assemble_hamiltonian(
    p: &ModelParams,
    total_sites: usize,
    first_site: usize,
) -> Result<DenseOperator> {
    let dim = 1usize << total_sites;
    let mut elem = Array2::zeros((dim, dim));
    // sigma-z eigenvalue of site i in basis state z.
    let sz = |z: usize, i: usize| 1.0 - 2.0 * ((z >> i) & 1) as f64;
    for z in 0..dim {
        let mut diag = 0.0;
        for i in first_site..total_sites.saturating_sub(1) {
            diag -= p.j * sz(z, i) * sz(z, i + 1);
        }
        for i in first_site..total_sites.saturating_sub(2) {
            diag -= p.j_nnn * sz(z, i) * sz(z, i + 2);
        }
        for i in first_site..total_sites {
            diag += p.hz * sz(z, i);
        }
        elem[[z, z]] = diag;
    }
    if p.hx != 0.0 {
        for z in 0..dim {
            for i in first_site..total_sites {
                elem[[z ^ (1 << i), z]] += p.hx;
            }
        }
    }
    DenseOperator::from_matrix(elem, total_sites)
}

/// Builds the full chain Hamiltonian for the given parameters.
pub fn build_hamiltonian(p: &ModelParams) -> Result<DenseOperator> {
    p.validate()?;
    assemble_hamiltonian(p, p.sites, 0)
}
