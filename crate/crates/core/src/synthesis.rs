//! Tight parallel-transporting Hamiltonians.
//!
//! A phase channel acts on the plane spanned by a target vector `v` and an
//! ancilla `w`. In the rotated basis
//! `eps0 = sqrt(1 - p) v - sqrt(p) w`, `eps1 = sqrt(p) v + sqrt(1 - p) w`
//! with `p = theta / 2pi`, the Pauli triple is
//! `s1 = |eps0><eps1| + h.c.`, `s2 = i(|eps0><eps1| - |eps1><eps0|)`,
//! `s3 = |eps1><eps1| - |eps0><eps0|`. With `r` the Bloch vector of `|v><v|`
//! and `a = (0, 0, pi/tau)`, the channel Hamiltonian is `H = Omega . s` with
//! `Omega = a - (a . r) r`, and the time-dependent schedule is
//! `H_t = e^{-itA} H e^{itA}` with `A = a . s`.
//!
//! All channel algebra is done on 2x2 matrices in the `(eps0, eps1)` basis
//! and embedded as `E M E^dagger` with `E = [eps0 eps1]`.

use num_complex::Complex;

use crate::bounds::{eigenphase, PhaseSpectrum, DEFAULT_WRAP_TOL};
use crate::error::{Error, Result};
use crate::evolution::HamiltonianSchedule;
use crate::geometry::Frame;
use crate::numkernel::{inner, norm, orthonormal_extension, unitary_eig, ComplexMatrix, ToleranceConfig};
use crate::scalar::Real;

type Vec3<R> = [R; 3];

fn dot<R: Real>(x: &Vec3<R>, y: &Vec3<R>) -> R {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

fn c<R: Real>(re: R, im: R) -> Complex<R> {
    Complex::new(re, im)
}

/// Pauli matrix `k` (0-based) in the `(eps0, eps1)` basis.
fn pauli2<R: Real>(k: usize) -> ComplexMatrix<R> {
    let (o, z, i) = (R::one(), R::zero(), R::one());
    let e = match k {
        0 => [c(z, z), c(o, z), c(o, z), c(z, z)],
        1 => [c(z, z), c(z, i), c(z, -i), c(z, z)],
        2 => [c(-o, z), c(z, z), c(z, z), c(o, z)],
        _ => unreachable!("three Pauli matrices"),
    };
    ComplexMatrix::new(2, 2, e.to_vec()).expect("finite literal")
}

fn dot_sigma<R: Real>(n: &Vec3<R>) -> ComplexMatrix<R> {
    let mut m = ComplexMatrix::zeros(2, 2);
    for (k, &nk) in n.iter().enumerate() {
        m = &m + &pauli2::<R>(k).scale(nk);
    }
    m
}

/// `e^{-i s (n . sigma)} = cos(s|n|) I - i sin(s|n|) (n/|n|) . sigma`.
fn exp_sigma<R: Real>(n: &Vec3<R>, s: R) -> ComplexMatrix<R> {
    let len = dot(n, n).sqrt();
    if len == R::zero() {
        return ComplexMatrix::identity(2);
    }
    let unit = [n[0] / len, n[1] / len, n[2] / len];
    let (sn, cs) = (s * len).sin_cos();
    &ComplexMatrix::identity(2).scale(cs) + &dot_sigma(&unit).scale_complex(c(R::zero(), -sn))
}

/// Real coefficients of a traceless 2x2 Hermitian matrix in the Pauli basis.
fn pauli_coords<R: Real>(m: &ComplexMatrix<R>) -> Vec3<R> {
    let half = R::lit(0.5);
    [0, 1, 2].map(|k| (&pauli2::<R>(k) * m).trace().re * half)
}

/// One two-dimensional synthesis unit.
#[derive(Debug, Clone)]
pub struct PhaseChannel<R: Real> {
    v: Vec<Complex<R>>,
    w: Vec<Complex<R>>,
    theta: R,
    tau: R,
    axis_scale: R,
    eps0: Vec<Complex<R>>,
    eps1: Vec<Complex<R>>,
    r: Vec3<R>,
    a: Vec3<R>,
    omega: Vec3<R>,
    basis: ComplexMatrix<R>,
    a_matrix: ComplexMatrix<R>,
    h_matrix: ComplexMatrix<R>,
}

pub fn build_channel<R: Real>(v: &[Complex<R>], w: &[Complex<R>], theta: R, tau: R) -> Result<PhaseChannel<R>> {
    build_channel_scaled(v, w, theta, tau, R::one())
}

/// Channel whose precession axis is `axis_scale * (0, 0, pi/tau)`. A scale
/// other than one gives a parallel-transporting but non-closing (hence
/// non-tight) schedule.
pub fn build_channel_scaled<R: Real>(
    v: &[Complex<R>],
    w: &[Complex<R>],
    theta: R,
    tau: R,
    axis_scale: R,
) -> Result<PhaseChannel<R>> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch("v and w have different lengths".into()));
    }
    if v.iter().chain(w).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    for (name, x) in [("v", v), ("w", w)] {
        let nx = norm(x);
        if !((nx - R::one()).abs() <= R::tol(1e-10)) {
            return Err(Error::InvalidParameter(format!("{name} must be a unit vector, has norm {nx}")));
        }
    }
    let overlap = inner(v, w).norm();
    if !(overlap <= R::tol(1e-12)) {
        return Err(Error::NotOrthogonal { overlap: overlap.to_f64_lossy() });
    }
    if !(theta >= R::zero() && theta < R::TAU()) {
        return Err(Error::PhaseOutOfRange { theta: theta.to_f64_lossy() });
    }
    if !(tau > R::zero()) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive and finite, got {tau}")));
    }
    if !(axis_scale > R::zero()) || !axis_scale.is_finite() {
        return Err(Error::InvalidParameter(format!("axis scale must be positive and finite, got {axis_scale}")));
    }

    let p = theta / R::TAU();
    let (sp, sq) = (p.sqrt(), (R::one() - p).sqrt());
    let eps0: Vec<Complex<R>> = v.iter().zip(w).map(|(&x, &y)| x * sq - y * sp).collect();
    let eps1: Vec<Complex<R>> = v.iter().zip(w).map(|(&x, &y)| x * sp + y * sq).collect();
    let basis = ComplexMatrix::from_columns(&[eps0.clone(), eps1.clone()])?;
    let coords = [inner(&eps0, v), inner(&eps1, v)];
    let r = [0, 1, 2].map(|k| {
        let s = pauli2::<R>(k);
        let sv = s.mul_vec(&coords);
        inner(&coords, &sv).re
    });
    let a = [R::zero(), R::zero(), axis_scale * R::PI() / tau];
    let ar = dot(&a, &r);
    let omega = [0, 1, 2].map(|k| a[k] - ar * r[k]);
    let a_matrix = embed(&basis, &dot_sigma(&a));
    let h_matrix = embed(&basis, &dot_sigma(&omega));
    Ok(PhaseChannel {
        v: v.to_vec(),
        w: w.to_vec(),
        theta,
        tau,
        axis_scale,
        eps0,
        eps1,
        r,
        a,
        omega,
        basis,
        a_matrix,
        h_matrix,
    })
}

fn embed<R: Real>(basis: &ComplexMatrix<R>, m: &ComplexMatrix<R>) -> ComplexMatrix<R> {
    &(basis * m) * &basis.adjoint()
}

impl<R: Real> PhaseChannel<R> {
    pub fn v(&self) -> &[Complex<R>] {
        &self.v
    }

    pub fn w(&self) -> &[Complex<R>] {
        &self.w
    }

    pub fn theta(&self) -> R {
        self.theta
    }

    pub fn tau(&self) -> R {
        self.tau
    }

    pub fn axis_scale(&self) -> R {
        self.axis_scale
    }

    pub fn eps0(&self) -> &[Complex<R>] {
        &self.eps0
    }

    pub fn eps1(&self) -> &[Complex<R>] {
        &self.eps1
    }

    /// Bloch vector of `|v><v|`.
    pub fn r(&self) -> Vec3<R> {
        self.r
    }

    pub fn a(&self) -> Vec3<R> {
        self.a
    }

    pub fn omega(&self) -> Vec3<R> {
        self.omega
    }

    /// `A = a . sigma` on the ambient space.
    pub fn a_matrix(&self) -> &ComplexMatrix<R> {
        &self.a_matrix
    }

    /// `H = Omega . sigma` on the ambient space.
    pub fn h_matrix(&self) -> &ComplexMatrix<R> {
        &self.h_matrix
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// The three Pauli matrices on the ambient space.
    pub fn pauli(&self) -> [ComplexMatrix<R>; 3] {
        [0, 1, 2].map(|k| embed(&self.basis, &pauli2(k)))
    }

    /// `d x 2` matrix `[eps0 eps1]`.
    pub fn basis(&self) -> &ComplexMatrix<R> {
        &self.basis
    }

    /// Projector onto the channel plane.
    pub fn plane_projector(&self) -> ComplexMatrix<R> {
        &self.basis * &self.basis.adjoint()
    }

    fn hamiltonian2(&self, t: R) -> ComplexMatrix<R> {
        let u = exp_sigma(&self.a, t);
        &(&u * &dot_sigma(&self.omega)) * &u.adjoint()
    }

    fn propagator2(&self, t: R) -> ComplexMatrix<R> {
        let diff = [0, 1, 2].map(|k| self.omega[k] - self.a[k]);
        &exp_sigma(&self.a, t) * &exp_sigma(&diff, t)
    }

    /// `H_t = e^{-itA} H e^{itA}`.
    pub fn hamiltonian_at(&self, t: R) -> ComplexMatrix<R> {
        embed(&self.basis, &self.hamiltonian2(t)).hermitian_part()
    }

    /// `U_t = e^{-itA} e^{-it(H - A)}`, the identity off the channel plane.
    pub fn propagator(&self, t: R) -> ComplexMatrix<R> {
        let mut u = ComplexMatrix::identity(self.dim());
        add_plane_block(&mut u, &self.basis, &self.propagator2(t));
        u
    }

    /// Bloch vectors `(r(t), Omega(t))` of `rho_t` and `H_t` in the channel's
    /// Pauli basis.
    pub fn bloch_at(&self, t: R) -> (Vec3<R>, Vec3<R>) {
        let coords = [inner(&self.eps0, &self.v), inner(&self.eps1, &self.v)];
        let vt = self.propagator2(t).mul_vec(&coords);
        let r = [0, 1, 2].map(|k| inner(&vt, &pauli2::<R>(k).mul_vec(&vt)).re);
        (r, pauli_coords(&self.hamiltonian2(t)))
    }

    /// Constant skewness `|Omega|^2` of the channel schedule.
    pub fn speed_squared(&self) -> R {
        dot(&self.omega, &self.omega)
    }
}

/// `u += E (m - I) E^dagger`, i.e. replace the action on the plane by `m`.
fn add_plane_block<R: Real>(u: &mut ComplexMatrix<R>, basis: &ComplexMatrix<R>, m: &ComplexMatrix<R>) {
    let delta = m - &ComplexMatrix::identity(2);
    let block = embed(basis, &delta);
    *u = &*u + &block;
}

pub fn channel_hamiltonian_at<R: Real>(c: &PhaseChannel<R>, t: R) -> ComplexMatrix<R> {
    c.hamiltonian_at(t)
}

pub fn channel_propagator<R: Real>(c: &PhaseChannel<R>, t: R) -> ComplexMatrix<R> {
    c.propagator(t)
}

/// One sample of a channel's Bloch-sphere trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSample<R> {
    pub t: R,
    pub r: Vec3<R>,
    pub omega: Vec3<R>,
}

/// `steps + 1` uniform samples on `[0, tau]`.
pub fn bloch_trajectory<R: Real>(c: &PhaseChannel<R>, steps: usize) -> Result<Vec<BlochSample<R>>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("need at least two steps".into()));
    }
    let n = R::lit(steps as f64);
    Ok((0..=steps)
        .map(|k| {
            let t = c.tau * R::lit(k as f64) / n;
            let (r, omega) = c.bloch_at(t);
            BlochSample { t, r, omega }
        })
        .collect())
}

/// A channel together with the index of the eigenvector it acts on.
#[derive(Debug, Clone)]
pub struct PlannedChannel<R: Real> {
    pub eigen_index: usize,
    pub channel: PhaseChannel<R>,
}

/// Full-gate plan: one channel per eigenvector with nonzero phase.
#[derive(Debug, Clone)]
pub struct TightPlan<R: Real> {
    gate: ComplexMatrix<R>,
    embedding: Frame<R>,
    computational_frame: Frame<R>,
    phases: Vec<R>,
    channels: Vec<PlannedChannel<R>>,
    tau: R,
}

impl<R: Real> TightPlan<R> {
    /// Assembles a plan from its parts and checks every plan invariant.
    pub fn from_parts(
        gate: ComplexMatrix<R>,
        embedding: Frame<R>,
        computational_frame: Frame<R>,
        phases: Vec<R>,
        channels: Vec<PlannedChannel<R>>,
        tau: R,
    ) -> Result<Self> {
        let tol = ToleranceConfig::default();
        let n = embedding.rank();
        gate.check_unitary(tol.unitarity_tol)?;
        if gate.rows() != n || computational_frame.rank() != n || computational_frame.dim() != embedding.dim() {
            return Err(Error::DimensionMismatch("gate, embedding and computational frame disagree".into()));
        }
        if phases.len() != n {
            return Err(Error::DimensionMismatch(format!("{} phases for rank {n}", phases.len())));
        }
        if let Some(&bad) = phases.iter().find(|&&t| !(t >= R::zero() && t < R::TAU())) {
            return Err(Error::PhaseOutOfRange { theta: bad.to_f64_lossy() });
        }
        if !(tau > R::zero()) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be positive and finite, got {tau}")));
        }
        // The computational frame must span the embedded computational space.
        let overlap = &embedding.matrix().adjoint() * computational_frame.matrix();
        if !(overlap.isometry_deviation() <= R::tol(1e-9)) {
            return Err(Error::InvalidFrame("computational frame leaves the embedded computational space".into()));
        }
        let embedded_gate =
            &(&(embedding.matrix() * &gate) * &embedding.matrix().adjoint()) * computational_frame.matrix();
        for (k, &theta) in phases.iter().enumerate() {
            let vk = computational_frame.vector(k);
            let expected: Vec<Complex<R>> = vk.iter().map(|&z| z * Complex::from_polar(R::one(), theta)).collect();
            let dev =
                embedded_gate.column(k).iter().zip(&expected).map(|(x, y)| (*x - *y).norm()).fold(R::zero(), R::max);
            if !(dev <= R::tol(1e-9)) {
                return Err(Error::InvalidParameter(format!(
                    "column {k} is not an eigenvector with phase {theta}: {dev:e}"
                )));
            }
        }
        let mut seen = vec![false; n];
        for pc in &channels {
            let k = pc.eigen_index;
            if k >= n || seen[k] {
                return Err(Error::InvalidParameter(format!("bad or repeated channel index {k}")));
            }
            seen[k] = true;
            let ch = &pc.channel;
            if ch.dim() != embedding.dim() || ch.tau() != tau {
                return Err(Error::InvalidParameter(format!("channel {k} does not match plan dimension or tau")));
            }
            if (ch.theta() - phases[k]).abs() > R::tol(1e-12) {
                return Err(Error::InvalidParameter(format!("channel {k} phase differs from the spectrum")));
            }
            let dv =
                ch.v().iter().zip(computational_frame.vector(k)).map(|(x, y)| (*x - y).norm()).fold(R::zero(), R::max);
            if dv > R::tol(1e-12) {
                return Err(Error::InvalidParameter(format!("channel {k} target differs from eigenvector {k}")));
            }
            let leak = norm(&embedding.matrix().adjoint().mul_vec(ch.w()));
            if leak > R::tol(1e-12) {
                return Err(Error::NotOrthogonal { overlap: leak.to_f64_lossy() });
            }
        }
        for (k, &theta) in phases.iter().enumerate() {
            if theta > R::zero() && !seen[k] {
                return Err(Error::InvalidParameter(format!("phase {k} is nonzero but has no channel")));
            }
        }
        for (i, x) in channels.iter().enumerate() {
            for y in &channels[i + 1..] {
                let o = (&x.channel.basis().adjoint() * y.channel.basis()).max_abs();
                if o > R::tol(1e-12) {
                    return Err(Error::NotOrthogonal { overlap: o.to_f64_lossy() });
                }
            }
        }
        Ok(Self { gate, embedding, computational_frame, phases, channels, tau })
    }

    pub fn gate(&self) -> &ComplexMatrix<R> {
        &self.gate
    }

    /// Frame whose columns embed the computational basis.
    pub fn embedding(&self) -> &Frame<R> {
        &self.embedding
    }

    /// Eigenvectors of the gate embedded in the ambient space.
    pub fn computational_frame(&self) -> &Frame<R> {
        &self.computational_frame
    }

    /// Phases aligned with the columns of the computational frame.
    pub fn phases(&self) -> &[R] {
        &self.phases
    }

    pub fn phase_spectrum(&self) -> PhaseSpectrum<R> {
        PhaseSpectrum::new(self.phases.clone()).expect("validated phases")
    }

    pub fn channels(&self) -> &[PlannedChannel<R>] {
        &self.channels
    }

    pub fn ancillas(&self) -> Vec<Vec<Complex<R>>> {
        self.channels.iter().map(|c| c.channel.w().to_vec()).collect()
    }

    pub fn tau(&self) -> R {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn hamiltonian_at(&self, t: R) -> ComplexMatrix<R> {
        let mut h = ComplexMatrix::zeros(self.dim(), self.dim());
        for c in &self.channels {
            h = &h + &c.channel.hamiltonian_at(t);
        }
        h
    }

    pub fn propagator(&self, t: R) -> ComplexMatrix<R> {
        let mut u = ComplexMatrix::identity(self.dim());
        for c in &self.channels {
            add_plane_block(&mut u, c.channel.basis(), &c.channel.propagator2(t));
        }
        u
    }

    /// `sum_k theta_k (2pi - theta_k) / tau^2`, the skewness of a tight plan.
    pub fn tight_skewness(&self) -> R {
        self.phases.iter().map(|&t| t * (R::TAU() - t)).sum::<R>() / (self.tau * self.tau)
    }

    /// Same plan with every precession axis scaled by `factor`.
    pub fn detuned(&self, factor: R) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|pc| {
                let c = &pc.channel;
                Ok(PlannedChannel {
                    eigen_index: pc.eigen_index,
                    channel: build_channel_scaled(c.v(), c.w(), c.theta(), c.tau(), c.axis_scale() * factor)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { channels, ..self.clone() })
    }
}

impl<R: Real> HamiltonianSchedule<R> for TightPlan<R> {
    fn hamiltonian_at(&self, t: R) -> Result<ComplexMatrix<R>> {
        Ok(TightPlan::hamiltonian_at(self, t))
    }
}

/// Builds the tight plan for `gate` acting on the span of `embedding`.
///
/// Each eigenvector with a nonzero phase receives one ancilla, drawn in order
/// from the columns of `ancilla_pool` after projecting out the computational
/// space and the ancillas already chosen. Phases within the wrap tolerance
/// of zero are treated as zero and get no channel.
pub fn plan_gate<R: Real>(
    gate: &ComplexMatrix<R>,
    embedding: &Frame<R>,
    ancilla_pool: &ComplexMatrix<R>,
    tau: R,
    tol: &ToleranceConfig<R>,
) -> Result<TightPlan<R>> {
    if !gate.is_square() || gate.rows() != embedding.rank() {
        return Err(Error::DimensionMismatch(format!(
            "gate is {}x{} but the embedding has rank {}",
            gate.rows(),
            gate.cols(),
            embedding.rank()
        )));
    }
    if !(tau > R::zero()) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive and finite, got {tau}")));
    }
    let eig = unitary_eig(gate, tol)?;
    let wrap = R::lit(DEFAULT_WRAP_TOL);
    let phases: Vec<R> = eig
        .eigenvalues
        .iter()
        .map(|&mu| {
            let t = eigenphase(mu, wrap);
            if t <= wrap {
                R::zero()
            } else {
                t
            }
        })
        .collect();
    let computational_frame = Frame::new(embedding.matrix() * &eig.eigenvectors, tol)?;
    let active: Vec<usize> = (0..phases.len()).filter(|&k| phases[k] > R::zero()).collect();
    let ancillas = orthonormal_extension(embedding.matrix(), ancilla_pool, active.len(), tol)?;
    let channels = active
        .iter()
        .zip(&ancillas)
        .map(|(&k, w)| {
            Ok(PlannedChannel {
                eigen_index: k,
                channel: build_channel(&computational_frame.vector(k), w, phases[k], tau)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TightPlan::from_parts(gate.clone(), embedding.clone(), computational_frame, phases, channels, tau)
}

/// Plan in `C^ambient_dim` with the computational space on the first `n`
/// basis vectors and the remaining basis vectors as the ancilla pool.
pub fn plan_gate_standard<R: Real>(gate: &ComplexMatrix<R>, ambient_dim: usize, tau: R) -> Result<TightPlan<R>> {
    let n = gate.rows();
    if ambient_dim <= n {
        return Err(Error::InsufficientComplement { needed: 1, found: ambient_dim.saturating_sub(n) });
    }
    let embedding = Frame::standard(ambient_dim, n)?;
    plan_gate(gate, &embedding, &ComplexMatrix::identity(ambient_dim), tau, &ToleranceConfig::default())
}

pub fn plan_hamiltonian_at<R: Real>(p: &TightPlan<R>, t: R) -> ComplexMatrix<R> {
    p.hamiltonian_at(t)
}

pub fn plan_propagator<R: Real>(p: &TightPlan<R>, t: R) -> ComplexMatrix<R> {
    p.propagator(t)
}

/// Names accepted by [`gate_library`].
pub const GATE_NAMES: [&str; 4] = ["t_gate", "t_prime", "hadamard", "cnot"];

pub fn gate_library<R: Real>(name: &str) -> Result<ComplexMatrix<R>> {
    let z = c(R::zero(), R::zero());
    let o = c(R::one(), R::zero());
    let m = match name {
        "t_gate" => ComplexMatrix::from_diagonal(&[o, Complex::from_polar(R::one(), R::FRAC_PI_4())]),
        "t_prime" => ComplexMatrix::from_diagonal(&[
            Complex::from_polar(R::one(), -R::FRAC_PI_8()),
            Complex::from_polar(R::one(), R::FRAC_PI_8()),
        ]),
        "hadamard" => {
            let s = c(R::FRAC_1_SQRT_2(), R::zero());
            ComplexMatrix::new(2, 2, vec![s, s, s, -s])?
        }
        "cnot" => ComplexMatrix::new(4, 4, vec![o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z])?,
        other => return Err(Error::UnknownGate(other.to_string())),
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{basis_vector, expm_i};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    type M = ComplexMatrix<f64>;

    fn e(d: usize, k: usize) -> Vec<Complex<f64>> {
        basis_vector(d, k)
    }

    fn t_channel(tau: f64) -> PhaseChannel<f64> {
        build_channel(&e(3, 1), &e(3, 2), PI / 4.0, tau).unwrap()
    }

    fn block(m: &M, idx: &[usize]) -> M {
        M::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
    }

    #[test]
    fn t_channel_matrices() {
        let tau = 1.7;
        let ch = t_channel(tau);
        let s7 = 7f64.sqrt();
        let k = PI / (4.0 * tau);
        let a = M::from_real_rows(&[&[-3.0, s7], &[s7, 3.0]]).scale(k);
        let h = M::from_real_rows(&[&[0.0, s7], &[s7, 0.0]]).scale(k);
        assert!((&block(ch.a_matrix(), &[1, 2]) - &a).max_abs() <= 1e-12);
        assert!((&block(ch.h_matrix(), &[1, 2]) - &h).max_abs() <= 1e-12);
        assert!((0..3).all(|j| ch.a_matrix()[(0, j)].norm() == 0.0 && ch.h_matrix()[(0, j)].norm() == 0.0));
    }

    #[test]
    fn channel_invariants() {
        for theta in [0.0, 0.3, PI / 4.0, PI, 5.9] {
            let ch = build_channel(&e(4, 0), &e(4, 3), theta, 1.0).unwrap();
            let r = ch.r();
            assert_abs_diff_eq!(dot(&r, &r).sqrt(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(dot(&ch.omega(), &r), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(2.0 * PI * inner(ch.eps1(), ch.v()).norm_sqr(), theta, epsilon = 1e-10);
            // Geometric phase formula pi (1 + <s3>) = theta.
            assert_abs_diff_eq!(PI * (1.0 + r[2]), theta, epsilon = 1e-10);
            let off = &M::identity(4) - &ch.plane_projector();
            assert!((&off * ch.a_matrix()).max_abs() <= 1e-12);
            assert!((&off * ch.h_matrix()).max_abs() <= 1e-12);
            assert_abs_diff_eq!(ch.speed_squared(), theta * (2.0 * PI - theta), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_phase_channel_is_null() {
        let ch = build_channel(&e(2, 0), &e(2, 1), 0.0, 1.0).unwrap();
        assert_eq!(ch.r(), [0.0, 0.0, -1.0]);
        assert!(ch.h_matrix().max_abs() <= 1e-15);
        assert!((&ch.propagator(0.37) - &M::identity(2)).max_abs() <= 1e-15);
    }

    #[test]
    fn half_turn_channel_has_constant_schedule() {
        let ch = build_channel(&e(3, 0), &e(3, 2), PI, 2.0).unwrap();
        assert!((ch.h_matrix() - ch.a_matrix()).max_abs() <= 1e-15);
        for t in [0.0, 0.4, 1.3, 2.0] {
            assert!((&ch.hamiltonian_at(t) - ch.a_matrix()).max_abs() <= 1e-12);
        }
        let u = ch.propagator(2.0);
        for k in [0, 2] {
            let flipped = u.mul_vec(&e(3, k)).into_iter().zip(e(3, k)).map(|(x, y)| (x + y).norm()).fold(0.0, f64::max);
            assert!(flipped <= 1e-12);
        }
    }

    #[test]
    fn channel_rejections() {
        let v = e(3, 0);
        let w = vec![Complex::new(0.6, 0.0), Complex::new(0.8, 0.0), Complex::new(0.0, 0.0)];
        assert!(matches!(build_channel(&v, &w, 1.0, 1.0), Err(Error::NotOrthogonal { .. })));
        assert!(matches!(build_channel(&v, &e(3, 1), 2.0 * PI, 1.0), Err(Error::PhaseOutOfRange { .. })));
        assert!(matches!(build_channel(&v, &e(3, 1), -0.1, 1.0), Err(Error::PhaseOutOfRange { .. })));
        assert!(build_channel(&v, &e(3, 1), 1.0, 0.0).is_err());
        assert!(build_channel(&v, &e(2, 1), 1.0, 1.0).is_err());
    }

    #[test]
    fn hamiltonian_schedule_matches_exponential_conjugation() {
        let ch = t_channel(1.0);
        let t = 0.5;
        let tol = ToleranceConfig::default();
        let u = expm_i(ch.a_matrix(), t, &tol).unwrap();
        let expected = &(&u * ch.h_matrix()) * &u.adjoint();
        let ht = ch.hamiltonian_at(t);
        assert!((&ht - &expected).max_abs() <= 1e-12);
        assert!(ht.hermiticity_deviation() <= 1e-15);
        assert!((&(&M::identity(3) - &ch.plane_projector()) * &ht).max_abs() <= 1e-12);
    }

    #[test]
    fn propagator_matches_factorization_and_closes() {
        let tol = ToleranceConfig::default();
        for theta in [0.2, PI / 4.0, 2.5, PI, 4.0, 6.1] {
            let tau = 1.3;
            let ch = build_channel(&e(4, 1), &e(4, 3), theta, tau).unwrap();
            for t in [0.0, 0.3, 0.9, tau] {
                let ua = expm_i(ch.a_matrix(), t, &tol).unwrap();
                let uh = expm_i(&(ch.h_matrix() - ch.a_matrix()), t, &tol).unwrap();
                assert!((&ch.propagator(t) - &(&ua * &uh)).max_abs() <= 1e-12, "theta {theta}, t {t}");
            }
            let u = ch.propagator(tau);
            assert!(u.isometry_deviation() <= 1e-13);
            let uv = u.mul_vec(ch.v());
            let target = Complex::from_polar(1.0, theta);
            assert!(uv.iter().zip(ch.v()).all(|(x, y)| (*x - *y * target).norm() <= 1e-12), "theta {theta}");
            assert!((u[(0, 0)] - Complex::new(1.0, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn commuting_decomposition_and_effective_evolution() {
        let ch = t_channel(1.0);
        let rho = M::outer(ch.v(), ch.v());
        let diff = ch.h_matrix() - ch.a_matrix();
        assert!(diff.commutator(&rho).max_abs() <= 1e-12);
        let tol = ToleranceConfig::default();
        for t in [0.1, 0.55, 1.0] {
            let u = ch.propagator(t);
            let ua = expm_i(ch.a_matrix(), t, &tol).unwrap();
            let lhs = &(&u * &rho) * &u.adjoint();
            let rhs = &(&ua * &rho) * &ua.adjoint();
            assert!((&lhs - &rhs).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn bloch_trajectory_properties() {
        let ch = t_channel(1.0);
        let traj = bloch_trajectory(&ch, 64).unwrap();
        assert_eq!(traj.len(), 65);
        let first = traj[0];
        for k in 0..3 {
            assert_abs_diff_eq!(first.r[k], ch.r()[k], epsilon = 1e-14);
            assert_abs_diff_eq!(first.omega[k], ch.omega()[k], epsilon = 1e-14);
        }
        for s in &traj {
            assert_abs_diff_eq!(dot(&s.r, &s.r), 1.0, epsilon = 1e-12);
            assert!(dot(&s.r, &s.omega).abs() <= 1e-10);
            // Precession about the z axis keeps the polar component fixed.
            assert_abs_diff_eq!(s.r[2], first.r[2], epsilon = 1e-12);
        }
        let last = traj.last().unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(last.r[k], first.r[k], epsilon = 1e-9);
        }
        // Angular speed 2|a| = 2 pi / tau: quarter period is a quarter turn.
        let q = traj[16];
        let rho_xy = (first.r[0].powi(2) + first.r[1].powi(2)).sqrt();
        assert_abs_diff_eq!(q.r[0] * first.r[0] + q.r[1] * first.r[1], 0.0, epsilon = 1e-12 * rho_xy.max(1.0));
        assert!(bloch_trajectory(&ch, 1).is_err());

        let half = build_channel(&e(2, 0), &e(2, 1), PI, 1.0).unwrap();
        assert!(bloch_trajectory(&half, 10).unwrap().iter().all(|s| s.r[2].abs() <= 1e-10));
    }

    #[test]
    fn library_gates() {
        let t: M = gate_library("t_gate").unwrap();
        assert_abs_diff_eq!(t[(1, 1)].arg(), PI / 4.0, epsilon = 1e-15);
        let h: M = gate_library("hadamard").unwrap();
        assert!((&(&h * &h) - &M::identity(2)).max_abs() <= 1e-15);
        let cx: M = gate_library("cnot").unwrap();
        assert_eq!(cx[(2, 3)], Complex::new(1.0, 0.0));
        assert_eq!(cx[(3, 3)], Complex::new(0.0, 0.0));
        for name in GATE_NAMES {
            assert!(gate_library::<f64>(name).unwrap().check_unitary(1e-14).is_ok());
        }
        assert!(matches!(gate_library::<f64>("toffoli"), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn identity_plan_is_empty() {
        let p = plan_gate_standard(&M::identity(2), 4, 1.0).unwrap();
        assert!(p.channels().is_empty());
        assert_eq!(p.hamiltonian_at(0.3).max_abs(), 0.0);
        assert!((&p.propagator(1.0) - &M::identity(4)).max_abs() <= 1e-15);
        assert_eq!(p.tight_skewness(), 0.0);
    }

    #[test]
    fn hadamard_plan_in_c3() {
        let h: M = gate_library("hadamard").unwrap();
        let tau = 1.0;
        let p = plan_gate_standard(&h, 3, tau).unwrap();
        assert_eq!(p.channels().len(), 1);
        let ch = &p.channels()[0].channel;
        let (s, c) = ((PI / 8.0).sin(), (PI / 8.0).cos());
        let v = ch.v();
        assert_abs_diff_eq!(v[0].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1].re, -c, epsilon = 1e-12);
        assert_abs_diff_eq!(ch.theta(), PI, epsilon = 1e-12);
        let a = M::from_real_rows(&[&[0.0, 0.0, s], &[0.0, 0.0, -c], &[s, -c, 0.0]]).scale(PI / tau);
        assert!((ch.a_matrix() - &a).max_abs() <= 1e-12);
        assert!((&p.hamiltonian_at(0.77) - &a).max_abs() <= 1e-12);
    }

    #[test]
    fn cnot_plan_in_c5() {
        let cx: M = gate_library("cnot").unwrap();
        let p = plan_gate_standard(&cx, 5, 1.0).unwrap();
        assert_eq!(p.channels().len(), 1);
        let ch = &p.channels()[0].channel;
        let r2 = 2f64.sqrt();
        // A on span{|10>, |11>, |2>} as given by the construction.
        let a = M::from_real_rows(&[&[0.0, 0.0, r2], &[0.0, 0.0, -r2], &[r2, -r2, 0.0]]).scale(PI / 2.0);
        assert!((&block(ch.a_matrix(), &[2, 3, 4]) - &a).max_abs() <= 1e-12);
        let u = p.propagator(1.0);
        assert!((&block(&u, &[0, 1, 2, 3]) - &cx).max_abs() <= 1e-12);
    }

    #[test]
    fn t_plan_reaches_gate() {
        let t: M = gate_library("t_gate").unwrap();
        let p = plan_gate_standard(&t, 3, 1.0).unwrap();
        assert_eq!(p.ancillas(), vec![e(3, 2)]);
        let u = p.propagator(1.0);
        assert!((&block(&u, &[0, 1]) - &t).max_abs() <= 1e-12);
    }

    #[test]
    fn two_channel_plan_blocks_commute() {
        let g = M::from_diagonal(&[Complex::from_polar(1.0, PI / 2.0), Complex::new(-1.0, 0.0)]);
        let p = plan_gate_standard(&g, 4, 1.0).unwrap();
        assert_eq!(p.channels().len(), 2);
        let t = 0.31;
        let h0 = p.channels()[0].channel.hamiltonian_at(t);
        let h1 = p.channels()[1].channel.hamiltonian_at(t);
        assert!(h0.commutator(&h1).max_abs() <= 1e-15);
        assert!((&p.hamiltonian_at(t) - &(&h0 + &h1)).max_abs() <= 1e-15);
        assert!((&block(&p.propagator(1.0), &[0, 1]) - &g).max_abs() <= 1e-12);
    }

    #[test]
    fn plan_rejections() {
        let t: M = gate_library("t_gate").unwrap();
        assert!(matches!(plan_gate_standard(&t, 2, 1.0), Err(Error::InsufficientComplement { .. })));
        let cx: M = gate_library("cnot").unwrap();
        assert!(plan_gate_standard(&cx, 5, 1.0).is_ok());
        let g = M::from_diagonal(&[Complex::from_polar(1.0, 1.0), Complex::from_polar(1.0, 2.0)]);
        assert!(matches!(plan_gate_standard(&g, 3, 1.0), Err(Error::InsufficientComplement { needed: 2, found: 1 })));
        let bad = M::from_real_rows(&[&[1.0, 0.1], &[0.0, 1.0]]);
        assert!(matches!(plan_gate_standard(&bad, 4, 1.0), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn from_parts_rejects_tampering() {
        let t: M = gate_library("t_gate").unwrap();
        let p = plan_gate_standard(&t, 3, 1.0).unwrap();
        let mut phases = p.phases().to_vec();
        phases[1] += 0.1;
        let r = TightPlan::from_parts(
            p.gate().clone(),
            p.embedding().clone(),
            p.computational_frame().clone(),
            phases,
            p.channels().to_vec(),
            1.0,
        );
        assert!(r.is_err());
        let r = TightPlan::from_parts(
            p.gate().clone(),
            p.embedding().clone(),
            p.computational_frame().clone(),
            p.phases().to_vec(),
            vec![],
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn detuned_plan_leaves_the_loop_open() {
        let t: M = gate_library("t_gate").unwrap();
        let p = plan_gate_standard(&t, 3, 1.0).unwrap();
        let q = p.detuned(1.3).unwrap();
        let ch = &q.channels()[0].channel;
        assert_abs_diff_eq!(ch.a()[2], 1.3 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(&ch.omega(), &ch.r()), 0.0, epsilon = 1e-12);
        let u = q.propagator(1.0);
        assert!((&block(&u, &[0, 1]) - &t).max_abs() > 1e-3);
    }
}
