//! Propagator integration, trajectory sampling and tightness verification.

use crate::bounds::{isoholonomic_bound, phases_of_gate};
use crate::error::{Error, Result};
use crate::geometry::{
    curve_length, discrete_horizontal_lift, horizontality_residual, parallel_transport_residual, skewness,
    uniform_grid, Frame, Projector, SampledCurve,
};
use crate::numkernel::{expm_i, ComplexMatrix, ToleranceConfig};
use crate::scalar::Real;
use crate::synthesis::TightPlan;

/// Time-indexed Hermitian generator.
pub trait HamiltonianSchedule<R: Real> {
    fn hamiltonian_at(&self, t: R) -> Result<ComplexMatrix<R>>;
}

impl<R: Real, F: Fn(R) -> ComplexMatrix<R>> HamiltonianSchedule<R> for F {
    fn hamiltonian_at(&self, t: R) -> Result<ComplexMatrix<R>> {
        Ok(self(t))
    }
}

/// Midpoint-exponential propagator on a uniform grid,
/// `U_{k+1} = exp(-i h H(t_k + h/2)) U_k`, `U_0 = I`.
///
/// Every step is an exact unitary, so unitarity drift is pure roundoff.
/// Returns `steps + 1` propagators.
pub fn integrate_propagator<R: Real, S: HamiltonianSchedule<R> + ?Sized>(
    schedule: &S,
    tau: R,
    steps: usize,
) -> Result<Vec<ComplexMatrix<R>>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("need at least two steps".into()));
    }
    if !(tau > R::zero()) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive and finite, got {tau}")));
    }
    let tol = ToleranceConfig::default();
    let h = tau / R::lit(steps as f64);
    let half = R::lit(0.5);
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let t = (R::lit(k as f64) + half) * h;
        let gen = schedule.hamiltonian_at(t)?;
        if !gen.is_square() {
            return Err(Error::DimensionMismatch("schedule returned a non-square matrix".into()));
        }
        if k == 0 {
            out.push(ComplexMatrix::identity(gen.rows()));
        }
        let prev = out.last().expect("seeded with identity");
        if gen.rows() != prev.rows() {
            return Err(Error::DimensionMismatch("schedule changed dimension".into()));
        }
        let step = expm_i(&gen, h, &tol)?;
        out.push(&step * prev);
    }
    Ok(out)
}

/// How a plan's propagator is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    /// Closed-form channel propagators.
    ClosedForm,
    /// Midpoint-exponential integration of the plan Hamiltonian.
    Numeric,
}

/// Uniform samples of a plan's evolution.
#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    pub mode: SimulationMode,
    pub tau: R,
    pub times: Vec<R>,
    pub propagators: Vec<ComplexMatrix<R>>,
    /// `V_k = U_k V` with `V` the plan's computational frame.
    pub frames: Vec<Frame<R>>,
    pub projectors: Vec<Projector<R>>,
    pub skewness_samples: Vec<R>,
    pub pt_residuals: Vec<R>,
    /// Trapezoidal integral of `sqrt(skewness)`.
    pub length_accumulated: R,
    /// `max |U^dagger U - I|` over samples.
    pub unitarity_drift: R,
    /// Frame embedding the computational basis.
    pub embedding: Frame<R>,
}

impl<R: Real> Trajectory<R> {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn curve(&self) -> Result<SampledCurve<R>> {
        SampledCurve::new(self.times.clone(), self.projectors.clone())
    }

    /// `horizontality_residual(V_k, (V_{k+1} - V_{k-1}) / 2h)` at interior samples.
    pub fn horizontality_residuals(&self) -> Result<Vec<R>> {
        let n = self.frames.len();
        (1..n.saturating_sub(1))
            .map(|k| {
                let dt = self.times[k + 1] - self.times[k - 1];
                let diff = (self.frames[k + 1].matrix() - self.frames[k - 1].matrix()).scale(R::one() / dt);
                horizontality_residual(&self.frames[k], &diff)
            })
            .collect()
    }
}

pub fn simulate_plan<R: Real>(plan: &TightPlan<R>, steps: usize, mode: SimulationMode) -> Result<Trajectory<R>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("need at least two steps".into()));
    }
    let tau = plan.tau();
    let times = uniform_grid(tau, steps);
    let propagators = match mode {
        SimulationMode::ClosedForm => times.iter().map(|&t| plan.propagator(t)).collect(),
        SimulationMode::Numeric => integrate_propagator(plan, tau, steps)?,
    };
    let tol = ToleranceConfig::default();
    let v = plan.computational_frame().matrix();
    let mut frames = Vec::with_capacity(steps + 1);
    let mut projectors = Vec::with_capacity(steps + 1);
    let mut skewness_samples = Vec::with_capacity(steps + 1);
    let mut pt_residuals = Vec::with_capacity(steps + 1);
    let mut unitarity_drift = R::zero();
    for (u, &t) in propagators.iter().zip(&times) {
        unitarity_drift = unitarity_drift.max(u.isometry_deviation());
        let frame = Frame::new_unchecked(u * v);
        let proj = frame.projector();
        let h = plan.hamiltonian_at(t);
        skewness_samples.push(skewness(&h, &proj, &tol)?);
        pt_residuals.push(parallel_transport_residual(&h, &frame, &tol)?);
        frames.push(frame);
        projectors.push(proj);
    }
    let speeds: Vec<R> = skewness_samples.iter().map(|s| s.max(R::zero()).sqrt()).collect();
    let half = R::lit(0.5);
    let length_accumulated =
        speeds.windows(2).zip(times.windows(2)).map(|(s, t)| half * (s[0] + s[1]) * (t[1] - t[0])).sum();
    Ok(Trajectory {
        mode,
        tau,
        times,
        propagators,
        frames,
        projectors,
        skewness_samples,
        pt_residuals,
        length_accumulated,
        unitarity_drift,
        embedding: plan.embedding().clone(),
    })
}

/// Acceptance limits for a tightness report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationTolerances<R> {
    pub length_gap: R,
    pub holonomy_error: R,
    pub pt_residual: R,
    pub qsl_slack: R,
    pub closure: R,
    pub unitarity_drift: R,
    /// Agreement of the lift-endpoint and discrete-lift holonomies.
    pub holonomy_routes: R,
    /// Agreement of the projector-difference and skewness lengths.
    pub length_routes: R,
}

impl<R: Real> VerificationTolerances<R> {
    pub fn closed_form() -> Self {
        Self {
            length_gap: R::lit(1e-9),
            holonomy_error: R::lit(1e-9),
            pt_residual: R::lit(1e-10),
            qsl_slack: R::lit(1e-9),
            closure: R::lit(1e-9),
            unitarity_drift: R::lit(1e-12),
            holonomy_routes: R::lit(1e-8),
            length_routes: R::lit(1e-6),
        }
    }

    pub fn numeric() -> Self {
        Self {
            length_gap: R::lit(1e-6),
            holonomy_error: R::lit(1e-6),
            pt_residual: R::lit(1e-6),
            qsl_slack: R::lit(1e-6),
            closure: R::lit(1e-6),
            unitarity_drift: R::lit(1e-10),
            holonomy_routes: R::lit(1e-8),
            length_routes: R::lit(1e-6),
        }
    }

    pub fn for_mode(mode: SimulationMode) -> Self {
        match mode {
            SimulationMode::ClosedForm => Self::closed_form(),
            SimulationMode::Numeric => Self::numeric(),
        }
    }
}

/// Comparison of a simulated loop against its target gate and the
/// isoholonomic bound.
#[derive(Debug, Clone)]
pub struct TightnessReport<R: Real> {
    pub mode: SimulationMode,
    pub steps: usize,
    pub target_gate: ComplexMatrix<R>,
    /// Holonomy in the computational basis, `E^dagger V_N V_0^dagger E`.
    pub realized_holonomy: ComplexMatrix<R>,
    /// `max |V_0^dagger V_N - V_0^dagger E G E^dagger V_0|`.
    pub holonomy_error: R,
    /// Disagreement between the lift endpoint and the discrete lift of the
    /// projector samples.
    pub holonomy_route_gap: R,
    pub bound: R,
    /// Length from the skewness quadrature.
    pub realized_length: R,
    /// Length from projector differences.
    pub projector_length: R,
    pub length_route_gap: R,
    /// `realized_length - bound`.
    pub length_gap: R,
    pub qsl_bound_time: R,
    pub tau: R,
    /// `tau - qsl_bound_time`.
    pub qsl_slack: R,
    pub max_pt_residual: R,
    pub closure_residual: R,
    pub unitarity_drift: R,
}

impl<R: Real> TightnessReport<R> {
    /// Names of every quantity outside `tol`. Empty means the loop is tight.
    pub fn failures(&self, tol: &VerificationTolerances<R>) -> Vec<&'static str> {
        let checks = [
            ("length_gap", self.length_gap.abs() <= tol.length_gap),
            ("holonomy_error", self.holonomy_error <= tol.holonomy_error),
            ("max_pt_residual", self.max_pt_residual <= tol.pt_residual),
            ("qsl_slack", self.qsl_slack.abs() <= tol.qsl_slack || self.is_trivial()),
            ("closure_residual", self.closure_residual <= tol.closure),
            ("unitarity_drift", self.unitarity_drift <= tol.unitarity_drift),
            ("holonomy_route_gap", self.holonomy_route_gap <= tol.holonomy_routes),
            ("length_route_gap", self.length_route_gap <= tol.length_routes),
            ("inequality", self.inequality_holds(tol.length_gap)),
        ];
        checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect()
    }

    /// Null loop for a gate with zero bound; the speed limit is vacuous.
    pub fn is_trivial(&self) -> bool {
        self.bound == R::zero() && self.realized_length == R::zero()
    }

    /// `realized_length + slack >= bound`.
    pub fn inequality_holds(&self, slack: R) -> bool {
        self.realized_length + slack >= self.bound
    }
}

/// Builds the report for `traj` against `target`.
///
/// An open loop is not an error here: its closure residual is reported and
/// flagged by [`TightnessReport::failures`], so that detuned schedules can
/// still be measured.
pub fn verify_tightness<R: Real>(traj: &Trajectory<R>, target: &ComplexMatrix<R>) -> Result<TightnessReport<R>> {
    let tol = ToleranceConfig::default();
    let spectrum = phases_of_gate(target, &tol)?;
    let e = traj.embedding.matrix();
    if target.rows() != traj.embedding.rank() {
        return Err(Error::DimensionMismatch("target gate does not match the computational space".into()));
    }
    let v0 = traj.frames.first().ok_or_else(|| Error::InvalidCurve("empty trajectory".into()))?;
    let vn = traj.frames.last().expect("non-empty");
    let v0m = v0.matrix();

    let lift_hol = &v0m.adjoint() * vn.matrix();
    let target_eig = &(&(&v0m.adjoint() * e) * &(target * &e.adjoint())) * v0m;
    let holonomy_error = (&lift_hol - &target_eig).max_abs();
    let realized_holonomy = &(&e.adjoint() * &(vn.matrix() * &v0m.adjoint())) * e;

    let curve = traj.curve()?;
    let discrete = discrete_lift_holonomy(&curve, v0)?;
    let holonomy_route_gap = (&lift_hol - &discrete).max_abs();

    let projector_length = curve_length(&curve)?;
    let realized_length = traj.length_accumulated;
    let bound = isoholonomic_bound(&spectrum);
    let tau = traj.tau;
    let qsl_bound_time = if bound == R::zero() {
        R::zero()
    } else if realized_length > R::zero() {
        bound * tau / realized_length
    } else {
        R::infinity()
    };
    Ok(TightnessReport {
        mode: traj.mode,
        steps: traj.steps(),
        target_gate: target.clone(),
        realized_holonomy,
        holonomy_error,
        holonomy_route_gap,
        bound,
        realized_length,
        projector_length,
        length_route_gap: (realized_length - projector_length).abs(),
        length_gap: realized_length - bound,
        qsl_bound_time,
        tau,
        qsl_slack: tau - qsl_bound_time,
        max_pt_residual: traj.pt_residuals.iter().copied().fold(R::zero(), R::max),
        closure_residual: curve.closure_residual(),
        unitarity_drift: traj.unitarity_drift,
    })
}

/// `V_0^dagger V_N` from the discrete lift of `curve`, Richardson-extrapolated
/// against the half-resolution lift when the step count is even.
pub fn discrete_lift_holonomy<R: Real>(curve: &SampledCurve<R>, v0: &Frame<R>) -> Result<ComplexMatrix<R>> {
    let endpoint = |c: &SampledCurve<R>| -> Result<ComplexMatrix<R>> {
        let frames = discrete_horizontal_lift(c, v0)?;
        Ok(&v0.matrix().adjoint() * frames.last().expect("non-empty").matrix())
    };
    let fine = endpoint(curve)?;
    if curve.len() < 3 || !(curve.len() - 1).is_multiple_of(2) {
        return Ok(fine);
    }
    let coarse = endpoint(&curve.subsample(2)?)?;
    let third = R::one() / R::lit(3.0);
    Ok(&fine.scale(R::lit(4.0) * third) - &coarse.scale(third))
}

/// `max |U_N - U(tau)|` of the numeric propagator against the closed form,
/// for each step count.
pub fn endpoint_errors<R: Real>(plan: &TightPlan<R>, step_counts: &[usize]) -> Result<Vec<R>> {
    let exact = plan.propagator(plan.tau());
    step_counts
        .iter()
        .map(|&n| {
            let props = integrate_propagator(plan, plan.tau(), n)?;
            Ok((props.last().expect("non-empty") - &exact).max_abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{gate_library, plan_gate_standard};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    type M = ComplexMatrix<f64>;

    fn plan(name: &str, d: usize) -> TightPlan<f64> {
        plan_gate_standard(&gate_library::<f64>(name).unwrap(), d, 1.0).unwrap()
    }

    #[test]
    fn zero_schedule_gives_identities() {
        let zero = |_t: f64| M::zeros(3, 3);
        let props = integrate_propagator(&zero, 1.0, 5).unwrap();
        assert_eq!(props.len(), 6);
        assert!(props.iter().all(|u| u == &M::identity(3)));
    }

    #[test]
    fn constant_schedule_is_exact() {
        let h = M::from_real_rows(&[&[0.3, 1.0, 0.0], &[1.0, -0.2, 0.5], &[0.0, 0.5, 0.9]]);
        let hc = h.clone();
        let props = integrate_propagator(&move |_t: f64| hc.clone(), 2.0, 40).unwrap();
        let tol = ToleranceConfig::default();
        for (k, u) in props.iter().enumerate() {
            let exact = expm_i(&h, 2.0 * k as f64 / 40.0, &tol).unwrap();
            assert!((u - &exact).max_abs() <= 1e-12, "step {k}");
        }
    }

    #[test]
    fn integrator_rejections() {
        let zero = |_t: f64| M::zeros(2, 2);
        assert!(integrate_propagator(&zero, 1.0, 1).is_err());
        assert!(integrate_propagator(&zero, 0.0, 4).is_err());
        let bad = |_t: f64| M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(integrate_propagator(&bad, 1.0, 4), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn t_plan_numeric_endpoint_second_order() {
        let p = plan("t_gate", 3);
        let errs = endpoint_errors(&p, &[5000, 10_000]).unwrap();
        assert!(errs[1] <= 1e-6, "error {}", errs[1]);
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
    }

    #[test]
    fn identity_plan_trajectory() {
        let p = plan_gate_standard(&M::identity(2), 4, 1.0).unwrap();
        let traj = simulate_plan(&p, 10, SimulationMode::ClosedForm).unwrap();
        assert_eq!(traj.length_accumulated, 0.0);
        let rep = verify_tightness(&traj, p.gate()).unwrap();
        assert_eq!(rep.holonomy_error, 0.0);
        assert_eq!(rep.bound, 0.0);
        assert_eq!(rep.realized_length, 0.0);
        assert!(rep.failures(&VerificationTolerances::closed_form()).is_empty());
    }

    #[test]
    fn hadamard_closed_form_length_is_pi() {
        let p = plan("hadamard", 3);
        let traj = simulate_plan(&p, 200, SimulationMode::ClosedForm).unwrap();
        assert_abs_diff_eq!(traj.length_accumulated, PI, epsilon = 1e-9);
        assert!(traj.pt_residuals.iter().all(|&r| r <= 1e-12));
        assert!(traj.unitarity_drift <= 1e-12);
    }

    #[test]
    fn closed_and_numeric_frames_agree() {
        let p = plan("t_gate", 4);
        let a = simulate_plan(&p, 400, SimulationMode::ClosedForm).unwrap();
        let b = simulate_plan(&p, 400, SimulationMode::Numeric).unwrap();
        let dev = a.frames.iter().zip(&b.frames).map(|(x, y)| (x.matrix() - y.matrix()).max_abs()).fold(0.0, f64::max);
        let h = 1.0 / 400.0;
        assert!(dev <= 10.0 * h * h, "deviation {dev}");
    }

    #[test]
    fn tight_reports_for_library_plans() {
        for (name, d) in [("t_gate", 3), ("hadamard", 3), ("cnot", 5), ("t_prime", 4)] {
            let p = plan(name, d);
            let traj = simulate_plan(&p, 10_000, SimulationMode::ClosedForm).unwrap();
            let rep = verify_tightness(&traj, p.gate()).unwrap();
            let fails = rep.failures(&VerificationTolerances::closed_form());
            assert!(fails.is_empty(), "{name}: {fails:?} {rep:?}");
        }
    }

    #[test]
    fn horizontality_along_trajectory() {
        let p = plan("t_gate", 3);
        let steps = 500;
        let traj = simulate_plan(&p, steps, SimulationMode::ClosedForm).unwrap();
        let h = 1.0 / steps as f64;
        assert!(traj.horizontality_residuals().unwrap().iter().all(|&r| r <= 10.0 * h * h));
    }

    #[test]
    fn detuned_plan_is_flagged() {
        let p = plan("t_gate", 3).detuned(1.3).unwrap();
        let traj = simulate_plan(&p, 1000, SimulationMode::ClosedForm).unwrap();
        let rep = verify_tightness(&traj, p.gate()).unwrap();
        assert!(rep.length_gap > 0.0);
        assert!(rep.inequality_holds(0.0));
        let fails = rep.failures(&VerificationTolerances::closed_form());
        assert!(fails.contains(&"length_gap"), "{fails:?}");
    }
}
