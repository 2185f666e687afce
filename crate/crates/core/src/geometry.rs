//! Frames, projectors and sampled curves on the Grassmannian, together with
//! horizontal lifts, holonomy, curve length, skewness and the
//! parallel-transport residuals.
//!
//! A subspace curve is represented by samples `P_k = P(t_k)` of its
//! orthogonal projector. The horizontal lift is computed by projecting the
//! previous frame into the next subspace and re-orthonormalizing with the
//! polar factor, `V_{k+1} = polar(P_{k+1} V_k)`. This is the closest frame in
//! the next fiber and converges to the solution of `dV/dt = (dP/dt) V` at
//! second order in the step.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{eigenphase, isoholonomic_bound, projective_isoholonomic_bound, PhaseSpectrum, DEFAULT_WRAP_TOL};
use crate::error::{Error, Result};
use crate::evolution::{integrate_propagator, HamiltonianSchedule};
use crate::numkernel::random::{random_hermitian, random_isometry};
use crate::numkernel::{jacobi, polar_orthonormalize, unitary_eig, ComplexMatrix, HermitianEigen, ToleranceConfig};
use crate::scalar::Real;

/// Closure residual above which a curve is rejected outright.
pub const CLOSURE_HARD_LIMIT: f64 = 1e-3;
/// Largest Frobenius jump between consecutive projector samples accepted by
/// the discrete lift.
pub const MAX_PROJECTOR_JUMP: f64 = 0.5;

/// Orthonormal `d x n` frame with `1 <= n < d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<R: Real> {
    matrix: ComplexMatrix<R>,
}

impl<R: Real> Frame<R> {
    pub fn new(matrix: ComplexMatrix<R>, tol: &ToleranceConfig<R>) -> Result<Self> {
        let (d, n) = (matrix.rows(), matrix.cols());
        if n == 0 || n >= d {
            return Err(Error::InvalidFrame(format!("need 1 <= n < d, got {d}x{n}")));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let dev = matrix.isometry_deviation();
        if !(dev <= tol.unitarity_tol) {
            return Err(Error::InvalidFrame(format!("columns not orthonormal: max |V^dagger V - I| = {dev:e}")));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix<R>) -> Self {
        Self { matrix }
    }

    /// First `n` standard basis vectors of `C^d`.
    pub fn standard(d: usize, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n).collect();
        Self::new(ComplexMatrix::identity(d).select_columns(&idx), &ToleranceConfig::default())
    }

    pub fn matrix(&self) -> &ComplexMatrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<R> {
        self.matrix
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of frame vectors `n`.
    pub fn rank(&self) -> usize {
        self.matrix.cols()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex<R>> {
        self.matrix.column(k)
    }

    /// `U V` for a unitary `U` acting on the ambient space.
    pub fn transformed(&self, u: &ComplexMatrix<R>) -> Result<Self> {
        if u.cols() != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch("operator does not act on the frame's ambient space".into()));
        }
        Self::new(u * &self.matrix, &ToleranceConfig::default())
    }

    /// `V W` for a unitary `n x n` matrix `W` (the structure-group action).
    pub fn rotated(&self, w: &ComplexMatrix<R>) -> Result<Self> {
        if w.rows() != self.rank() || !w.is_square() {
            return Err(Error::DimensionMismatch("rotation must be n x n".into()));
        }
        Self::new(&self.matrix * w, &ToleranceConfig::default())
    }

    pub fn projector(&self) -> Projector<R> {
        projector_from_frame(self)
    }
}

/// Orthogonal projector of rank `n` on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector<R: Real> {
    matrix: ComplexMatrix<R>,
    rank: usize,
}

impl<R: Real> Projector<R> {
    /// Validates Hermiticity, idempotence and trace against the declared rank.
    pub fn new(matrix: ComplexMatrix<R>, rank: usize, tol: &ToleranceConfig<R>) -> Result<Self> {
        matrix.check_hermitian(tol.hermiticity_tol)?;
        let idem = (&(&matrix * &matrix) - &matrix).max_abs();
        if !(idem <= R::tol(1e-9)) {
            return Err(Error::InvalidProjector(format!("P^2 != P: deviation {idem:e}")));
        }
        let tr = matrix.trace().re;
        if !((tr - R::lit(rank as f64)).abs() <= R::tol(1e-9)) {
            return Err(Error::InvalidProjector(format!("trace {tr} does not match rank {rank}")));
        }
        Ok(Self { matrix, rank })
    }

    pub fn matrix(&self) -> &ComplexMatrix<R> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `U P U^dagger`.
    pub fn conjugated(&self, u: &ComplexMatrix<R>) -> Self {
        let m = &(u * &self.matrix) * &u.adjoint();
        Self { matrix: m.hermitian_part(), rank: self.rank }
    }

    /// Some orthonormal frame spanning the range (eigenvectors of the top
    /// `rank` eigenvalues).
    pub fn spanning_frame(&self) -> Frame<R> {
        let (_, vecs) = jacobi(&self.matrix);
        let d = self.dim();
        let idx: Vec<usize> = (d - self.rank..d).collect();
        Frame::new_unchecked(vecs.select_columns(&idx))
    }
}

/// Samples of a subspace curve on an increasing time grid.
#[derive(Debug, Clone)]
pub struct SampledCurve<R: Real> {
    times: Vec<R>,
    projectors: Vec<Projector<R>>,
}

impl<R: Real> SampledCurve<R> {
    pub fn new(times: Vec<R>, projectors: Vec<Projector<R>>) -> Result<Self> {
        if times.len() != projectors.len() {
            return Err(Error::InvalidCurve(format!("{} times but {} projectors", times.len(), projectors.len())));
        }
        if times.is_empty() {
            return Err(Error::InvalidCurve("empty curve".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCurve("times must be strictly increasing".into()));
        }
        let (d, n) = (projectors[0].dim(), projectors[0].rank());
        if projectors.iter().any(|p| p.dim() != d || p.rank() != n) {
            return Err(Error::InvalidCurve("projectors differ in dimension or rank".into()));
        }
        Ok(Self { times, projectors })
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn projectors(&self) -> &[Projector<R>] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.projectors[0].rank()
    }

    /// `max |P_N - P_0|`.
    pub fn closure_residual(&self) -> R {
        let first = self.projectors.first().expect("non-empty");
        let last = self.projectors.last().expect("non-empty");
        (last.matrix() - first.matrix()).max_abs()
    }

    /// Every `stride`-th sample. The last sample must land on the grid.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::InvalidParameter(format!(
                "stride {stride} does not divide {} intervals",
                self.len() - 1
            )));
        }
        let idx = (0..self.len()).step_by(stride);
        Ok(Self {
            times: idx.clone().map(|i| self.times[i]).collect(),
            projectors: idx.map(|i| self.projectors[i].clone()).collect(),
        })
    }
}

/// Holonomy of a closed curve, expressed in the initial frame:
/// `gate_matrix = V_0^dagger V_N`.
#[derive(Debug, Clone)]
pub struct HolonomyResult<R: Real> {
    pub gate_matrix: ComplexMatrix<R>,
    pub closure_residual: R,
    pub lift_frames: Option<Vec<Frame<R>>>,
}

pub fn projector_from_frame<R: Real>(v: &Frame<R>) -> Projector<R> {
    let m = v.matrix();
    Projector { matrix: (m * &m.adjoint()).hermitian_part(), rank: v.rank() }
}

/// `max |V^dagger Vdot|`; zero iff the tangent is horizontal.
pub fn horizontality_residual<R: Real>(v: &Frame<R>, vdot: &ComplexMatrix<R>) -> Result<R> {
    if !v.matrix().same_shape(vdot) {
        return Err(Error::DimensionMismatch("tangent shape differs from frame".into()));
    }
    Ok((&v.matrix().adjoint() * vdot).max_abs())
}

fn compressed<R: Real>(h: &ComplexMatrix<R>, v: &Frame<R>, tol: &ToleranceConfig<R>) -> Result<ComplexMatrix<R>> {
    h.check_hermitian(tol.hermiticity_tol)?;
    if h.rows() != v.dim() {
        return Err(Error::DimensionMismatch("Hamiltonian and frame dimensions differ".into()));
    }
    let vm = v.matrix();
    Ok(&(&vm.adjoint() * h) * vm)
}

/// `max_{k,l} |<v_k|H|v_l>|`.
pub fn parallel_transport_residual<R: Real>(h: &ComplexMatrix<R>, v: &Frame<R>, tol: &ToleranceConfig<R>) -> Result<R> {
    Ok(compressed(h, v, tol)?.max_abs())
}

/// Residual of `<v_k|H|v_l> = eps delta_kl`, with `eps = Re tr(V^dagger H V) / n`.
/// Returns `(residual, eps)`.
pub fn projective_pt_residual<R: Real>(h: &ComplexMatrix<R>, v: &Frame<R>, tol: &ToleranceConfig<R>) -> Result<(R, R)> {
    let c = compressed(h, v, tol)?;
    let n = v.rank();
    let eps = c.trace().re / R::lit(n as f64);
    let shifted = &c - &ComplexMatrix::identity(n).scale(eps);
    Ok((shifted.max_abs(), eps))
}

/// Discrete horizontal lift of `curve` starting at `v0`.
pub fn discrete_horizontal_lift<R: Real>(curve: &SampledCurve<R>, v0: &Frame<R>) -> Result<Vec<Frame<R>>> {
    let p0 = &curve.projectors[0];
    if p0.dim() != v0.dim() || p0.rank() != v0.rank() {
        return Err(Error::DimensionMismatch("frame does not match curve dimension or rank".into()));
    }
    let residual = (&(p0.matrix() * v0.matrix()) - v0.matrix()).max_abs();
    if !(residual <= R::tol(1e-8)) {
        return Err(Error::FrameProjectorMismatch { residual: residual.to_f64_lossy() });
    }
    let tol = ToleranceConfig::default();
    let mut frames = Vec::with_capacity(curve.len());
    frames.push(v0.clone());
    for (k, pair) in curve.projectors.windows(2).enumerate() {
        let jump = (pair[1].matrix() - pair[0].matrix()).frobenius_norm();
        if !(jump < R::lit(MAX_PROJECTOR_JUMP)) {
            return Err(Error::MeshTooCoarse { step: k, jump: jump.to_f64_lossy() });
        }
        let prev = frames.last().expect("seeded with v0").matrix();
        let projected = pair[1].matrix() * prev;
        let next = polar_orthonormalize(&projected, &tol)
            .map_err(|_| Error::MeshTooCoarse { step: k, jump: jump.to_f64_lossy() })?;
        frames.push(Frame::new_unchecked(next));
    }
    Ok(frames)
}

pub fn holonomy<R: Real>(curve: &SampledCurve<R>, v0: &Frame<R>) -> Result<HolonomyResult<R>> {
    let closure_residual = curve.closure_residual();
    if !(closure_residual <= R::lit(CLOSURE_HARD_LIMIT)) {
        return Err(Error::NotClosed { residual: closure_residual.to_f64_lossy(), limit: CLOSURE_HARD_LIMIT });
    }
    let frames = discrete_horizontal_lift(curve, v0)?;
    let end = frames.last().expect("at least one frame").matrix();
    let gate_matrix = &v0.matrix().adjoint() * end;
    Ok(HolonomyResult { gate_matrix, closure_residual, lift_frames: Some(frames) })
}

/// Length of the sampled curve.
///
/// Composite midpoint rule: on each interval the speed
/// `sqrt(tr(dP/dt)^2 / 2)` is evaluated at the midpoint with the central
/// difference `(P_{k+1} - P_k) / h_k`.
pub fn curve_length<R: Real>(curve: &SampledCurve<R>) -> Result<R> {
    if curve.len() < 2 {
        return Err(Error::InvalidCurve("length needs at least two samples".into()));
    }
    let half = R::lit(0.5).sqrt();
    Ok(curve.projectors.windows(2).map(|w| (w[1].matrix() - w[0].matrix()).frobenius_norm() * half).sum())
}

/// Length together with a step-doubling error estimate `|L_N - L_{N/2}|`.
/// Requires an even number of intervals.
pub fn curve_length_with_error<R: Real>(curve: &SampledCurve<R>) -> Result<(R, R)> {
    let fine = curve_length(curve)?;
    let coarse = curve_length(&curve.subsample(2)?)?;
    Ok((fine, (fine - coarse).abs()))
}

/// `-tr([H, P]^2) / 2`, evaluated as `||[H, P]||_F^2 / 2`.
pub fn skewness<R: Real>(h: &ComplexMatrix<R>, p: &Projector<R>, tol: &ToleranceConfig<R>) -> Result<R> {
    h.check_hermitian(tol.hermiticity_tol)?;
    if h.rows() != p.dim() {
        return Err(Error::DimensionMismatch("Hamiltonian and projector dimensions differ".into()));
    }
    let c = h.commutator(p.matrix());
    Ok(R::lit(0.5) * c.entries().iter().map(|z| z.norm_sqr()).sum::<R>())
}

/// Samples `U_t P_0 U_t^dagger` on a uniform grid with the propagator of the
/// schedule.
pub fn generated_curve<R: Real, S: HamiltonianSchedule<R> + ?Sized>(
    schedule: &S,
    v0: &Frame<R>,
    tau: R,
    steps: usize,
) -> Result<SampledCurve<R>> {
    let props = integrate_propagator(schedule, tau, steps)?;
    let times = uniform_grid(tau, steps);
    curve_from_propagators(times, &props, &v0.projector())
}

pub fn curve_from_propagators<R: Real>(
    times: Vec<R>,
    propagators: &[ComplexMatrix<R>],
    p0: &Projector<R>,
) -> Result<SampledCurve<R>> {
    if propagators.iter().any(|u| u.rows() != p0.dim() || !u.is_square()) {
        return Err(Error::DimensionMismatch("propagator does not act on the projector's space".into()));
    }
    let projectors = propagators.iter().map(|u| p0.conjugated(u)).collect();
    SampledCurve::new(times, projectors)
}

pub fn uniform_grid<R: Real>(tau: R, steps: usize) -> Vec<R> {
    let n = R::lit(steps as f64);
    (0..=steps).map(|k| tau * R::lit(k as f64) / n).collect()
}

/// Seeded closed loop together with the frame it starts from.
#[derive(Debug, Clone)]
pub struct RandomLoop<R: Real> {
    pub curve: SampledCurve<R>,
    pub initial_frame: Frame<R>,
}

/// Closed curve `U_t P U_t^dagger` on `[0, 1]` with
/// `U_t = prod_j exp(-i s_j(t) K_j)`.
///
/// `K_j` are seeded Gaussian Hermitian matrices scaled to unit Frobenius
/// norm and `s_j(t) = A_j sin^2(pi t) cos(2 pi j t + phi_j)` vanish at both
/// ends. A single generator uses `phi_0 = 0`, a monotone out-and-back bump
/// that retraces its path.
pub fn random_closed_loop<R: Real>(
    dim: usize,
    rank: usize,
    generator_count: usize,
    steps: usize,
    seed: u64,
) -> Result<RandomLoop<R>> {
    if rank == 0 || rank >= dim {
        return Err(Error::InvalidParameter(format!("need 1 <= rank < dim, got rank {rank}, dim {dim}")));
    }
    if generator_count == 0 {
        return Err(Error::InvalidParameter("need at least one generator".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter("need at least two steps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = Frame::new_unchecked(random_isometry::<R, _>(dim, rank, &mut rng));
    let generators: Vec<(HermitianEigen<R>, R, R)> = (0..generator_count)
        .map(|_| {
            let k: ComplexMatrix<R> = random_hermitian(dim, &mut rng);
            let k = k.scale(R::one() / k.frobenius_norm());
            let (eigenvalues, eigenvectors) = jacobi(&k);
            let amp = R::lit(rng.gen_range(1.0..4.0));
            let phase =
                if generator_count == 1 { R::zero() } else { R::lit(rng.gen_range(0.0..std::f64::consts::TAU)) };
            (HermitianEigen { eigenvalues, eigenvectors }, amp, phase)
        })
        .collect();

    let p0 = frame.projector();
    let times = uniform_grid(R::one(), steps);
    let projectors = times
        .iter()
        .map(|&t| {
            let bump = (R::PI() * t).sin().powi(2);
            let mut u = ComplexMatrix::identity(dim);
            for (j, (eig, amp, phase)) in generators.iter().enumerate() {
                let s = *amp * bump * (R::TAU() * R::lit(j as f64) * t + *phase).cos();
                u = &u * &eig.exp_i(s);
            }
            p0.conjugated(&u)
        })
        .collect();
    Ok(RandomLoop { curve: SampledCurve::new(times, projectors)?, initial_frame: frame })
}

/// Outcome of checking `Length >= L(holonomy)` on one closed curve.
#[derive(Debug, Clone)]
pub struct InequalityCheck<R: Real> {
    pub length: R,
    pub mesh_error: R,
    pub bound: R,
    /// Bound of the holonomy modulo global phase.
    pub projective_bound: R,
    pub phases: PhaseSpectrum<R>,
    pub closure_residual: R,
}

impl<R: Real> InequalityCheck<R> {
    /// `length - bound`.
    pub fn margin(&self) -> R {
        self.length - self.bound
    }

    /// The inequality holds up to `5x` the step-doubling mesh error.
    pub fn holds(&self) -> bool {
        self.length + R::lit(5.0) * self.mesh_error >= self.bound
    }

    /// The projective inequality under the same mesh allowance.
    pub fn projective_holds(&self) -> bool {
        self.length + R::lit(5.0) * self.mesh_error >= self.projective_bound
    }
}

pub fn check_isoholonomic_inequality<R: Real>(curve: &SampledCurve<R>, v0: &Frame<R>) -> Result<InequalityCheck<R>> {
    let (length, mesh_error) = curve_length_with_error(curve)?;
    let hol = holonomy(curve, v0)?;
    let phases = holonomy_phases(&hol.gate_matrix)?;
    Ok(InequalityCheck {
        length,
        mesh_error,
        bound: isoholonomic_bound(&phases),
        projective_bound: projective_isoholonomic_bound(&phases).0,
        phases,
        closure_residual: hol.closure_residual,
    })
}

/// Eigenphases of a numerically computed holonomy. The matrix is first
/// replaced by its polar factor so that small closure defects do not trip
/// the unitarity check.
pub fn holonomy_phases<R: Real>(gate: &ComplexMatrix<R>) -> Result<PhaseSpectrum<R>> {
    let u = unitary_part(gate)?;
    let eig = unitary_eig(&u, &ToleranceConfig::default())?;
    let wrap = R::lit(DEFAULT_WRAP_TOL);
    PhaseSpectrum::with_wrap_tol(eig.eigenvalues.iter().map(|&mu| eigenphase(mu, wrap)).collect(), wrap)
}

fn unitary_part<R: Real>(m: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    polar_orthonormalize(m, &ToleranceConfig::default())
}

/// Rank-one curves traced by the individual vectors of a lift,
/// `rho_k(t) = |v_k(t)><v_k(t)|`.
pub fn component_curves<R: Real>(times: &[R], frames: &[Frame<R>]) -> Result<Vec<SampledCurve<R>>> {
    if frames.is_empty() {
        return Err(Error::InvalidCurve("no frames".into()));
    }
    (0..frames[0].rank())
        .map(|k| {
            let projectors = frames
                .iter()
                .map(|f| {
                    let v = f.vector(k);
                    Projector { matrix: ComplexMatrix::outer(&v, &v), rank: 1 }
                })
                .collect();
            SampledCurve::new(times.to_vec(), projectors)
        })
        .collect()
}

/// Decomposition of a closed curve along a lift started at an eigenbasis of
/// its holonomy.
#[derive(Debug, Clone)]
pub struct Decomposition<R: Real> {
    pub length: R,
    pub mesh_error: R,
    /// Geometric phases `theta_k` (from the holonomy eigenvalues), in `[0, 2pi)`.
    pub phases: Vec<R>,
    pub component_lengths: Vec<R>,
    pub component_mesh_errors: Vec<R>,
}

impl<R: Real> Decomposition<R> {
    /// `Length^2 - sum_k Length[rho_k]^2`, non-negative up to mesh error.
    pub fn decomposition_margin(&self) -> R {
        self.length * self.length - self.component_lengths.iter().map(|&l| l * l).sum::<R>()
    }

    /// Combined mesh tolerance for the decomposition inequality.
    pub fn decomposition_tolerance(&self) -> R {
        let comp: R =
            self.component_lengths.iter().zip(&self.component_mesh_errors).map(|(&l, &e)| R::lit(2.0) * l * e).sum();
        R::lit(5.0) * (R::lit(2.0) * self.length * self.mesh_error + comp) + R::lit(1e-12)
    }

    /// Per-component margins `Length[rho_k] - sqrt(theta_k (2pi - theta_k))`.
    pub fn state_margins(&self) -> Vec<R> {
        self.component_lengths.iter().zip(&self.phases).map(|(&l, &t)| l - (t * (R::TAU() - t)).sqrt()).collect()
    }
}

pub fn decompose_by_holonomy<R: Real>(curve: &SampledCurve<R>, v0: &Frame<R>) -> Result<Decomposition<R>> {
    let (length, mesh_error) = curve_length_with_error(curve)?;
    let hol = holonomy(curve, v0)?;
    let u = unitary_part(&hol.gate_matrix)?;
    let eig = unitary_eig(&u, &ToleranceConfig::default())?;
    let wrap = R::lit(DEFAULT_WRAP_TOL);
    let phases = eig.eigenvalues.iter().map(|&mu| eigenphase(mu, wrap)).collect();
    let frames: Vec<Frame<R>> = hol
        .lift_frames
        .expect("holonomy keeps its lift")
        .iter()
        .map(|f| Frame::new_unchecked(f.matrix() * &eig.eigenvectors))
        .collect();
    let mut component_lengths = Vec::new();
    let mut component_mesh_errors = Vec::new();
    for c in component_curves(curve.times(), &frames)? {
        let (l, e) = curve_length_with_error(&c)?;
        component_lengths.push(l);
        component_mesh_errors.push(e);
    }
    Ok(Decomposition { length, mesh_error, phases, component_lengths, component_mesh_errors })
}
