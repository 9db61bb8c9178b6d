//! Reduced density matrices, entanglement entropies, and mutual information.
//!
//! Every quantity here derives from a pure global state through the partial
//! trace. Retained subsets may be non-contiguous (mutual information pairs
//! the probe site with a block at the opposite end of the chain), so index
//! bookkeeping goes through scatter tables that map subset-local indices to
//! register bit patterns.
//!
//! Extraction thresholds elsewhere in the crate are defined in bits, so the
//! base-2 entropy is the internal working unit; [`EntropyBase`] converts on
//! output. Velocities and time scales are unaffected by the base choice.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;

use crate::basis::{SiteSubset, StateVector};
use crate::error::{Error, Result};

/// Permitted Hermiticity defect of a density matrix, max |rho - rho^dagger|.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Permitted deviation of the trace from one.
pub const DM_TRACE_TOL: f64 = 1e-10;
/// Most negative admissible eigenvalue; anything in [-floor, 0) clamps to 0.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
/// Eigenvalues at or below this cutoff are dropped from the entropy sum,
/// realizing the 0 log 0 = 0 limit.
pub const ENTROPY_CUTOFF: f64 = 1e-12;
/// Most negative admissible mutual information before it counts as a
/// subadditivity violation; values in [-tol, 0) clamp to 0.
pub const MI_NEGATIVE_TOL: f64 = 1e-9;

/// Logarithm base used when reporting entropies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EntropyBase {
    /// Base-2 logarithm; entropies in bits.
    #[default]
    #[serde(rename = "2")]
    Two,
    /// Natural logarithm; entropies in nats.
    #[serde(rename = "e")]
    E,
}

impl EntropyBase {
    /// Natural log of the base, the divisor converting nats to this base.
    pub fn ln_of_base(self) -> f64 {
        match self {
            EntropyBase::Two => std::f64::consts::LN_2,
            EntropyBase::E => 1.0,
        }
    }

    /// Multiplier converting a base-2 entropy into this base.
    pub fn from_bits_factor(self) -> f64 {
        match self {
            EntropyBase::Two => 1.0,
            EntropyBase::E => std::f64::consts::LN_2,
        }
    }
}

/// Reduced density matrix of a retained site subset.
///
/// Construction enforces Hermiticity within [`HERMITICITY_TOL`] and unit
/// trace within [`DM_TRACE_TOL`]; the eigenvalue floor is checked where the
/// spectrum is actually computed.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    elem: Array2<Complex64>,
    retained: usize,
}

impl DensityMatrix {
    /// Validates and wraps an explicit matrix. The dimension must be a power
    /// of two (one qubit per retained site).
    pub fn from_matrix(elem: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = elem.dim();
        if rows != cols || rows == 0 || !rows.is_power_of_two() {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected a square power-of-two dimension, got {rows}x{cols}"
            )));
        }
        let dm = DensityMatrix {
            elem,
            retained: rows.trailing_zeros() as usize,
        };
        dm.check_invariants()?;
        Ok(dm)
    }

    fn check_invariants(&self) -> Result<()> {
        let mut herm = 0.0f64;
        for r in 0..self.dim() {
            for c in r..self.dim() {
                let defect = (self.elem[(r, c)] - self.elem[(c, r)].conj()).norm();
                herm = herm.max(defect);
            }
        }
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity defect {herm:.3e} exceeds {HERMITICITY_TOL:.0e}"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > DM_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr:.15} deviates from 1 beyond {DM_TRACE_TOL:.0e}"
            )));
        }
        Ok(())
    }

    /// Matrix dimension 2^retained.
    pub fn dim(&self) -> usize {
        self.elem.nrows()
    }

    /// Number of retained sites.
    pub fn retained_sites(&self) -> usize {
        self.retained
    }

    /// The matrix elements in subset-local ordering (bit j of the row index
    /// is the j-th lowest retained site).
    pub fn elem(&self) -> &Array2<Complex64> {
        &self.elem
    }

    /// Real part of the trace; the imaginary part vanishes by Hermiticity.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.elem[(i, i)].re).sum()
    }

    /// Purity Tr rho^2, via the squared Frobenius norm of a Hermitian matrix.
    pub fn purity(&self) -> f64 {
        self.elem.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order, checked against the floor and with
    /// values in [-floor, 0) clamped to zero.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let evals = self.elem.eigvalsh(UPLO::Lower).map_err(|e| {
            Error::ContractViolation(format!("density-matrix eigensolve failed: {e}"))
        })?;
        let mut out = Vec::with_capacity(evals.len());
        for &lam in evals.iter() {
            if lam < -EIGENVALUE_FLOOR {
                return Err(Error::InvalidDensityMatrix(format!(
                    "eigenvalue {lam:.3e} below -{EIGENVALUE_FLOOR:.0e}"
                )));
            }
            out.push(lam.max(0.0));
        }
        Ok(out)
    }
}

/// Scatter table over the given bit positions: entry x is the register
/// pattern with bit j of x placed at positions[j].
fn scatter_table(positions: &[usize]) -> Vec<usize> {
    (0..1usize << positions.len())
        .map(|x| {
            positions
                .iter()
                .enumerate()
                .fold(0usize, |acc, (j, &p)| acc | (((x >> j) & 1) << p))
        })
        .collect()
}

/// Partial trace of a pure state over the complement of `subset`.
///
/// rho[r, c] = sum_e psi(r scattered | e scattered) psi*(c scattered | e
/// scattered), with e running over complement-site configurations. The cost
/// is 4^k 2^(L-k) for k retained sites. The full register is permitted and
/// yields the pure projector.
pub fn reduced_density_matrix(v: &StateVector, subset: &SiteSubset) -> Result<DensityMatrix> {
    if subset.sites() != v.sites() {
        return Err(Error::DimensionMismatch(format!(
            "subset register has {} sites but the state has {}",
            subset.sites(),
            v.sites()
        )));
    }
    let kept = subset.site_indices();
    let comp: Vec<usize> = (0..v.sites()).filter(|&i| !subset.contains(i)).collect();
    let sub_tab = scatter_table(&kept);
    let comp_tab = scatter_table(&comp);
    let amp = v.amplitudes();
    let sub_dim = sub_tab.len();
    let mut elem = Array2::<Complex64>::zeros((sub_dim, sub_dim));
    for r in 0..sub_dim {
        for c in r..sub_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for &e in &comp_tab {
                acc += amp[sub_tab[r] | e] * amp[sub_tab[c] | e].conj();
            }
            elem[(r, c)] = acc;
            // Mirroring the computed value keeps Hermiticity exact.
            if r != c {
                elem[(c, r)] = acc.conj();
            }
        }
    }
    let dm = DensityMatrix {
        elem,
        retained: kept.len(),
    };
    dm.check_invariants()?;
    Ok(dm)
}

/// Von Neumann entropy -sum lambda log lambda over eigenvalues above
/// [`ENTROPY_CUTOFF`], in the requested base.
pub fn von_neumann_entropy(rho: &DensityMatrix, base: EntropyBase) -> Result<f64> {
    let mut nats = 0.0;
    for lam in rho.eigenvalues()? {
        if lam > ENTROPY_CUTOFF {
            nats -= lam * lam.ln();
        }
    }
    // Rounding can leave a pure state with an eigenvalue a few ulps above
    // one, whose term is slightly positive; clamp the total at zero.
    Ok(nats.max(0.0) / base.ln_of_base())
}

/// Renyi-2 entropy -log2 Tr rho^2 in bits. Lower-bounds the base-2 von
/// Neumann entropy. Rounding can push the purity of a pure state slightly
/// above one; the result clamps to zero there.
pub fn renyi2_entropy(rho: &DensityMatrix) -> f64 {
    (-rho.purity().log2()).max(0.0)
}

/// Mutual information I(A|B) = S(A) + S(B) - S(A u B) in bits for disjoint
/// subsets of the same register. Values in [-1e-9, 0) clamp to zero; more
/// negative values violate subadditivity and surface as an error.
pub fn mutual_information(v: &StateVector, a: &SiteSubset, b: &SiteSubset) -> Result<f64> {
    if a.overlaps(b) {
        return Err(Error::OverlappingSubsets(a.mask() & b.mask()));
    }
    let union = a.union(b)?;
    let s_a = von_neumann_entropy(&reduced_density_matrix(v, a)?, EntropyBase::Two)?;
    let s_b = von_neumann_entropy(&reduced_density_matrix(v, b)?, EntropyBase::Two)?;
    let s_ab = von_neumann_entropy(&reduced_density_matrix(v, &union)?, EntropyBase::Two)?;
    let mi = s_a + s_b - s_ab;
    if mi < -MI_NEGATIVE_TOL {
        return Err(Error::ContractViolation(format!(
            "mutual information {mi:.3e} below -{MI_NEGATIVE_TOL:.0e}"
        )));
    }
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{apply_cnot, neel_state, product_state};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn bell_pair() -> StateVector {
        // CNOT on (|0> + |1>)/sqrt(2) tensor |0>: the superposed control is
        // bit 0, so the plus state occupies indices 0b00 and 0b01.
        let plus = {
            let amp = array![
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ];
            StateVector::from_amplitudes(amp, 2).unwrap()
        };
        apply_cnot(&plus, 0, 1).unwrap()
    }

    #[test]
    fn bell_state_single_site_is_maximally_mixed() {
        let v = bell_pair();
        let a = SiteSubset::single(0, 2).unwrap();
        let rho = reduced_density_matrix(&v, &a).unwrap();
        assert_abs_diff_eq!(rho.elem()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.elem()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.elem()[(0, 1)].norm(), 0.0, epsilon = 1e-12);
        let s = von_neumann_entropy(&rho, EntropyBase::Two).unwrap();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(renyi2_entropy(&rho), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn product_state_reductions_are_pure() {
        let v = product_state(0b0110, 4).unwrap();
        for mask in [0b0001u64, 0b0110, 0b1011, 0b1111] {
            let subset = SiteSubset::from_mask(mask, 4).unwrap();
            let rho = reduced_density_matrix(&v, &subset).unwrap();
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
            let s = von_neumann_entropy(&rho, EntropyBase::Two).unwrap();
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn entropy_oracle_quarter_three_quarters() {
        // Frozen direct evaluations of -sum lambda log lambda and -log2 of
        // the purity for the spectrum {1/4, 3/4}.
        let elem = array![
            [Complex64::new(0.25, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.75, 0.0)],
        ];
        let rho = DensityMatrix::from_matrix(elem).unwrap();
        let bits = von_neumann_entropy(&rho, EntropyBase::Two).unwrap();
        let nats = von_neumann_entropy(&rho, EntropyBase::E).unwrap();
        assert_abs_diff_eq!(bits, 0.811_278_124_459_132_9, epsilon = 1e-14);
        assert_abs_diff_eq!(nats, 0.562_335_144_618_808_4, epsilon = 1e-14);
        assert_abs_diff_eq!(nats, bits * std::f64::consts::LN_2, epsilon = 1e-14);
        assert_abs_diff_eq!(
            renyi2_entropy(&rho),
            0.678_071_905_112_637_7,
            epsilon = 1e-14
        );
    }

    #[test]
    fn ghz_mutual_information_is_one_bit() {
        let mut amp = ndarray::Array1::<Complex64>::zeros(8);
        amp[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amp[7] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let v = StateVector::from_amplitudes(amp, 3).unwrap();
        let a = SiteSubset::single(0, 3).unwrap();
        let b = SiteSubset::single(1, 3).unwrap();
        let mi = mutual_information(&v, &a, &b).unwrap();
        assert_abs_diff_eq!(mi, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bell_mutual_information_is_two_bits() {
        let v = bell_pair();
        let a = SiteSubset::single(0, 2).unwrap();
        let b = SiteSubset::single(1, 2).unwrap();
        let mi = mutual_information(&v, &a, &b).unwrap();
        assert_abs_diff_eq!(mi, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn product_state_mutual_information_vanishes() {
        let v = neel_state(4).unwrap();
        let a = SiteSubset::single(0, 4).unwrap();
        let b = SiteSubset::last(2, 4).unwrap();
        let mi = mutual_information(&v, &a, &b).unwrap();
        assert_abs_diff_eq!(mi, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_subsets_are_rejected() {
        let v = neel_state(3).unwrap();
        let a = SiteSubset::from_mask(0b011, 3).unwrap();
        let b = SiteSubset::from_mask(0b110, 3).unwrap();
        assert!(matches!(
            mutual_information(&v, &a, &b),
            Err(Error::OverlappingSubsets(0b010))
        ));
    }

    #[test]
    fn full_register_subset_gives_pure_projector() {
        let v = bell_pair();
        let all = SiteSubset::from_mask(0b11, 2).unwrap();
        let rho = reduced_density_matrix(&v, &all).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            von_neumann_entropy(&rho, EntropyBase::Two).unwrap(),
            0.0,
            epsilon = 1e-10
        );
    }
}
