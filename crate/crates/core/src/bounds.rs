//! Eigenphase extraction and the isoholonomic bounds for gates, projective
//! gates and single states, together with the derived execution-time limit.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numkernel::{unitary_eig, ComplexMatrix, ToleranceConfig};
use crate::scalar::Real;

/// Default distance from `2pi` below which a phase is identified with `0`.
pub const DEFAULT_WRAP_TOL: f64 = 1e-9;

/// Eigenvalue phases of a gate, each in `[0, 2pi)`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum<R> {
    phases: Vec<R>,
    wrap_tol: R,
}

impl<R: Real> PhaseSpectrum<R> {
    pub fn new(phases: Vec<R>) -> Result<Self> {
        Self::with_wrap_tol(phases, R::lit(DEFAULT_WRAP_TOL))
    }

    pub fn with_wrap_tol(phases: Vec<R>, wrap_tol: R) -> Result<Self> {
        let two_pi = R::TAU();
        let mut out = Vec::with_capacity(phases.len());
        for theta in phases {
            if !theta.is_finite() || theta < R::zero() || theta >= two_pi {
                return Err(Error::PhaseOutOfRange { theta: theta.to_f64_lossy() });
            }
            out.push(if two_pi - theta <= wrap_tol { R::zero() } else { theta });
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
        Ok(Self { phases: out, wrap_tol })
    }

    pub fn phases(&self) -> &[R] {
        &self.phases
    }

    pub fn wrap_tol(&self) -> R {
        self.wrap_tol
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Adds `alpha` to every phase modulo `2pi` (multiplying the gate by
    /// `e^{i alpha}`).
    pub fn shifted(&self, alpha: R) -> Self {
        let phases = self.phases.iter().map(|&t| wrap_angle(t + alpha, self.wrap_tol)).collect();
        Self::with_wrap_tol(phases, self.wrap_tol).expect("wrapped phases are in range")
    }
}

/// Reduces an angle to `[0, 2pi)`, sending values within `wrap_tol` of `2pi`
/// to `0`.
pub fn wrap_angle<R: Real>(theta: R, wrap_tol: R) -> R {
    let two_pi = R::TAU();
    let mut t = theta % two_pi;
    if t < R::zero() {
        t = t + two_pi;
    }
    if t >= two_pi || two_pi - t <= wrap_tol {
        R::zero()
    } else {
        t
    }
}

/// Phase of a unit-modulus eigenvalue in `[0, 2pi)`.
pub fn eigenphase<R: Real>(mu: Complex<R>, wrap_tol: R) -> R {
    wrap_angle(mu.arg(), wrap_tol)
}

pub fn phases_of_gate<R: Real>(gate: &ComplexMatrix<R>, tol: &ToleranceConfig<R>) -> Result<PhaseSpectrum<R>> {
    let eig = unitary_eig(gate, tol)?;
    let wrap_tol = R::lit(DEFAULT_WRAP_TOL);
    PhaseSpectrum::with_wrap_tol(eig.eigenvalues.iter().map(|&mu| eigenphase(mu, wrap_tol)).collect(), wrap_tol)
}

#[inline]
fn arc_weight<R: Real>(theta: R) -> R {
    theta * (R::TAU() - theta)
}

/// `sqrt(sum_j theta_j (2pi - theta_j))`.
pub fn isoholonomic_bound<R: Real>(spectrum: &PhaseSpectrum<R>) -> R {
    spectrum.phases.iter().map(|&t| arc_weight(t)).sum::<R>().sqrt()
}

/// Lower bound on the Fubini-Study length of a closed pure-state curve with
/// geometric phase `theta`.
pub fn state_bound<R: Real>(theta: R) -> Result<R> {
    if !theta.is_finite() || theta < R::zero() || theta >= R::TAU() {
        return Err(Error::PhaseOutOfRange { theta: theta.to_f64_lossy() });
    }
    Ok(arc_weight(theta).sqrt())
}

/// Bound for the projective class of a gate: the smallest gate bound over
/// the representatives `e^{-i theta_k} Gamma`, `k = 0..=n` with `theta_0 = 0`.
///
/// Returns the bound and the minimizing `k` (smallest on ties).
pub fn projective_isoholonomic_bound<R: Real>(spectrum: &PhaseSpectrum<R>) -> (R, usize) {
    let two_pi = R::TAU();
    let candidates = std::iter::once(R::zero()).chain(spectrum.phases.iter().copied());
    let mut best = (R::infinity(), 0);
    for (k, shift) in candidates.enumerate() {
        let sum: R = spectrum
            .phases
            .iter()
            .map(|&t| {
                let mut phi = (t - shift) % two_pi;
                if phi < R::zero() {
                    phi = phi + two_pi;
                }
                arc_weight(phi)
            })
            .sum();
        if sum < best.0 {
            best = (sum, k);
        }
    }
    (best.0.max(R::zero()).sqrt(), best.1)
}

/// Minimum execution time `L(Gamma) / <<sqrt(I)>>` for a gate implemented by
/// parallel transport with the given time-averaged square-root skewness.
pub fn qsl_time<R: Real>(gate: &ComplexMatrix<R>, mean_sqrt_skewness: R, tol: &ToleranceConfig<R>) -> Result<R> {
    if !(mean_sqrt_skewness > R::zero()) || !mean_sqrt_skewness.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mean square-root skewness must be positive, got {mean_sqrt_skewness}"
        )));
    }
    let spectrum = phases_of_gate(gate, tol)?;
    Ok(isoholonomic_bound(&spectrum) / mean_sqrt_skewness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    type M = ComplexMatrix<f64>;

    fn spectrum(p: &[f64]) -> PhaseSpectrum<f64> {
        PhaseSpectrum::new(p.to_vec()).unwrap()
    }

    fn tol() -> ToleranceConfig<f64> {
        ToleranceConfig::default()
    }

    #[test]
    fn spectrum_validation_and_wrap() {
        assert!(matches!(PhaseSpectrum::new(vec![-0.1]), Err(Error::PhaseOutOfRange { .. })));
        assert!(PhaseSpectrum::new(vec![2.0 * PI]).is_err());
        let s = spectrum(&[2.0 * PI - 1e-12, 1.0]);
        assert_eq!(s.phases(), &[0.0, 1.0]);
    }

    #[test]
    fn phases_of_identity() {
        assert_eq!(phases_of_gate(&M::identity(3), &tol()).unwrap().phases(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn phases_of_t_gate() {
        let t = M::from_diagonal(&[Complex::new(1.0, 0.0), Complex::from_polar(1.0, PI / 4.0)]);
        let s = phases_of_gate(&t, &tol()).unwrap();
        assert_abs_diff_eq!(s.phases()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.phases()[1], PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn phases_of_t_prime_gate() {
        let t = M::from_diagonal(&[Complex::from_polar(1.0, -PI / 8.0), Complex::from_polar(1.0, PI / 8.0)]);
        let s = phases_of_gate(&t, &tol()).unwrap();
        assert_abs_diff_eq!(s.phases()[0], PI / 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.phases()[1], 15.0 * PI / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn phases_reject_non_unitary() {
        let m = M::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert!(matches!(phases_of_gate(&m, &tol()), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn gate_bounds_from_phases() {
        assert_eq!(isoholonomic_bound(&spectrum(&[0.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(isoholonomic_bound(&spectrum(&[0.0, PI / 4.0])), PI * 7f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(isoholonomic_bound(&spectrum(&[0.0, PI / 4.0])), 2.077_968_220_5, epsilon = 1e-10);
        let tp = isoholonomic_bound(&spectrum(&[PI / 8.0, 15.0 * PI / 8.0]));
        assert_abs_diff_eq!(tp, PI / 4.0 * 7.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(tp, 2.150_901_453_6, epsilon = 1e-10);
        assert_abs_diff_eq!(isoholonomic_bound(&spectrum(&[0.0, 0.0, 0.0, PI])), PI, epsilon = 1e-15);
    }

    #[test]
    fn state_bounds() {
        assert_eq!(state_bound(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(state_bound(PI).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(state_bound(PI / 4.0).unwrap(), PI * 7f64.sqrt() / 4.0, epsilon = 1e-15);
        assert!(state_bound(2.0 * PI).is_err());
        assert!(state_bound(-1e-3).is_err());
    }

    #[test]
    fn projective_bound_examples() {
        assert_eq!(projective_isoholonomic_bound(&spectrum(&[0.0, 0.0])), (0.0, 0));

        let (b, k) = projective_isoholonomic_bound(&spectrum(&[PI / 8.0, 15.0 * PI / 8.0]));
        assert_abs_diff_eq!(b, PI * 7f64.sqrt() / 4.0, epsilon = 1e-14);
        assert_eq!(k, 1);

        // Enumerate k by hand: k = 0 gives (3pi/2)(pi/2); shifting by 3pi/2
        // gives two (pi/2)(3pi/2) terms.
        let (b, k) = projective_isoholonomic_bound(&spectrum(&[0.0, 0.0, 1.5 * PI]));
        assert_abs_diff_eq!(b, (0.75 * PI * PI).sqrt(), epsilon = 1e-14);
        assert_eq!(k, 0);
    }

    #[test]
    fn qsl_examples() {
        assert_eq!(qsl_time(&M::identity(2), 0.37, &tol()).unwrap(), 0.0);
        let tau = 2.5;
        let t = M::from_diagonal(&[Complex::new(1.0, 0.0), Complex::from_polar(1.0, PI / 4.0)]);
        let l = PI * 7f64.sqrt() / 4.0;
        assert_abs_diff_eq!(qsl_time(&t, l / tau, &tol()).unwrap(), tau, epsilon = 1e-13);
        let cnot = M::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_abs_diff_eq!(qsl_time(&cnot, PI / tau, &tol()).unwrap(), tau, epsilon = 1e-13);
        assert!(qsl_time(&cnot, 0.0, &tol()).is_err());
        assert!(qsl_time(&cnot, -1.0, &tol()).is_err());
    }

    #[test]
    fn hadamard_projective_equals_plain() {
        let h = M::from_real_rows(&[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]]);
        let s = phases_of_gate(&h, &tol()).unwrap();
        assert_abs_diff_eq!(projective_isoholonomic_bound(&s).0, isoholonomic_bound(&s), epsilon = 1e-14);
    }

    fn phases_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..(2.0 * PI - 1e-6), 1..6)
    }

    proptest! {
        #[test]
        fn bound_is_permutation_invariant(mut p in phases_strategy()) {
            let a = isoholonomic_bound(&spectrum(&p));
            p.reverse();
            let b = isoholonomic_bound(&spectrum(&p));
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn bound_is_reflection_symmetric(p in prop::collection::vec(1e-6..(2.0 * PI - 1e-6), 1..6)) {
            let reflected: Vec<f64> = p.iter().map(|t| 2.0 * PI - t).collect();
            let a = isoholonomic_bound(&spectrum(&p));
            let b = isoholonomic_bound(&spectrum(&reflected));
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn bound_is_capped_by_pi_sqrt_n(p in phases_strategy()) {
            let n = p.len() as f64;
            prop_assert!(isoholonomic_bound(&spectrum(&p)) <= PI * n.sqrt() + 1e-12);
        }

        #[test]
        fn projective_bound_never_exceeds_plain(p in phases_strategy()) {
            let s = spectrum(&p);
            prop_assert!(projective_isoholonomic_bound(&s).0 <= isoholonomic_bound(&s) + 1e-15);
        }

        #[test]
        fn projective_bound_is_shift_invariant(p in phases_strategy(), alpha in 0.0..(2.0 * PI)) {
            let s = spectrum(&p);
            let a = projective_isoholonomic_bound(&s).0;
            let b = projective_isoholonomic_bound(&s.shifted(alpha)).0;
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }
}
