use std::io::Write;
use std::path::Path;
use std::time::Instant;

use holonomy_core::bounds::{isoholonomic_bound, phases_of_gate, projective_isoholonomic_bound};
use holonomy_core::evolution::{simulate_plan, verify_tightness, SimulationMode, VerificationTolerances};
use holonomy_core::geometry::{check_isoholonomic_inequality, random_closed_loop};
use holonomy_core::numkernel::{ComplexMatrix, ToleranceConfig};
use holonomy_core::synthesis::{bloch_trajectory, gate_library, plan_gate_standard, TightPlan, GATE_NAMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::io::{
    read_json, to_json, write_atomic, BoundOutput, FalsifyFile, LoopRecord, MatrixFile, PlanFile, ReportFile,
    SCHEMA_VERSION, TOOL_VERSION,
};
use crate::{BlochArgs, BoundArgs, CliError, Command, FalsifyArgs, GateArgs, ModeArg, SynthesizeArgs, VerifyArgs};

pub fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Bound(a) => bound(&a, out),
        Command::Gate(a) => gate(&a, out),
        Command::Synthesize(a) => synthesize(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Falsify(a) => falsify(&a, out),
        Command::Bloch(a) => bloch(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `contents` to `path` if given, otherwise to `out`.
fn deliver(path: Option<&Path>, contents: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => emit(out, contents),
    }
}

fn read_matrix(path: &Path) -> Result<ComplexMatrix<f64>, CliError> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

fn read_plan(path: &Path) -> Result<TightPlan<f64>, CliError> {
    read_json::<PlanFile>(path)?.to_plan()
}

/// `value` printed with 12 significant digits in positional notation.
pub fn significant12(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn bound(a: &BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let gate = read_matrix(&a.input)?;
    if !gate.is_square() {
        return Err(CliError::Input(format!("gate must be square, got {}x{}", gate.rows(), gate.cols())));
    }
    let spectrum = phases_of_gate(&gate, &ToleranceConfig::default())?;
    let (value, shift_index) = if a.projective {
        let (v, k) = projective_isoholonomic_bound(&spectrum);
        (v, Some(k))
    } else {
        (isoholonomic_bound(&spectrum), None)
    };
    let record = BoundOutput {
        schema_version: SCHEMA_VERSION,
        kind: "bound".into(),
        projective: a.projective,
        bound: value,
        phases: spectrum.phases().to_vec(),
        shift_index,
    };
    let json = serde_json::to_string(&record).expect("plain data serializes");
    emit(out, &format!("{}\n{json}\n", significant12(value)))
}

fn gate(a: &GateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let m = gate_library::<f64>(&a.name)
        .map_err(|_| CliError::Input(format!("unknown gate {:?}; known: {}", a.name, GATE_NAMES.join(", "))))?;
    deliver(a.out.as_deref(), &to_json(&MatrixFile::from_matrix(&m, Some(&a.name))), out)
}

fn synthesize(a: &SynthesizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let gate = read_matrix(&a.input)?;
    if !gate.is_square() {
        return Err(CliError::Input(format!("gate must be square, got {}x{}", gate.rows(), gate.cols())));
    }
    gate.check_unitary(ToleranceConfig::<f64>::default().unitarity_tol)?;
    if !(a.tau > 0.0) || !a.tau.is_finite() {
        return Err(CliError::Input(format!("--tau must be positive and finite, got {}", a.tau)));
    }
    let n = gate.rows();
    let d = a.ambient_dim.unwrap_or(2 * n);
    if d < n {
        return Err(CliError::Input(format!("--ambient-dim {d} is smaller than the gate dimension {n}")));
    }
    let mut plan = plan_gate_standard(&gate, d, a.tau)?;
    if let Some(f) = a.detune {
        plan = plan.detuned(f)?;
    }
    let text = to_json(&PlanFile::from_plan(&plan));
    deliver(a.out.as_deref(), &text, out)?;
    if let Some(p) = &a.out {
        emit(out, &format!("wrote plan with {} channel(s) in C^{d} to {}\n", plan.channels().len(), p.display()))?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = read_plan(&a.plan)?;
    if a.steps < 2 {
        return Err(CliError::Input("--steps must be at least 2".into()));
    }
    let mode = match a.mode {
        ModeArg::Closed => SimulationMode::ClosedForm,
        ModeArg::Numeric => SimulationMode::Numeric,
    };
    let start = Instant::now();
    let traj = simulate_plan(&plan, a.steps, mode)?;
    let report = verify_tightness(&traj, plan.gate())?;
    let tol = VerificationTolerances::for_mode(mode);
    let file = ReportFile::new(&report, &tol, None, start.elapsed().as_secs_f64());
    let non_finite: Vec<&str> = file.scalars().iter().filter(|(_, v)| !v.is_finite()).map(|(n, _)| *n).collect();
    if !non_finite.is_empty() {
        return Err(CliError::VerificationFailed(format!("non-finite {}", non_finite.join(", "))));
    }
    if let Some(p) = &a.out {
        write_atomic(p, &to_json(&file))?;
    }
    let summary = format!(
        "bound: {}\nlength: {}\ngap: {:e}\nholonomy error: {:e}\nPT residual: {:e}\nQSL slack: {:e}\n",
        significant12(file.bound),
        significant12(file.realized_length),
        file.length_gap,
        file.holonomy_error,
        file.max_pt_residual,
        file.qsl_slack,
    );
    emit(out, &summary)?;
    if file.passed {
        emit(out, "status: tight\n")
    } else {
        emit(out, &format!("status: FAILED ({})\n", file.failures.join(", ")))?;
        Err(CliError::VerificationFailed(format!("outside tolerance: {}", file.failures.join(", "))))
    }
}

/// Settings for a falsification sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsifyConfig {
    pub dims: (usize, usize),
    pub ranks: (usize, usize),
    pub loops: usize,
    pub seed: u64,
    pub steps: usize,
    pub generators: usize,
}

impl FalsifyConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let (d0, d1) = self.dims;
        let (r0, r1) = self.ranks;
        if d0 > d1 || r0 > r1 {
            return Err(CliError::Input("empty dimension or rank range".into()));
        }
        if r0 == 0 || r1 >= d0 {
            return Err(CliError::Input(format!("need 1 <= rank < dim, got rank {r0}..={r1}, dim {d0}..={d1}")));
        }
        if self.loops == 0 || self.generators == 0 {
            return Err(CliError::Input("--loops and --generators must be positive".into()));
        }
        if self.steps < 4 || !self.steps.is_multiple_of(2) {
            return Err(CliError::Input("--steps must be even and at least 4 (step doubling needs halves)".into()));
        }
        Ok(())
    }
}

/// Runs the sweep in parallel. Loop `i` uses the `i`-th draw of a ChaCha8
/// stream seeded with `config.seed`, so results do not depend on scheduling.
pub fn run_falsify(config: &FalsifyConfig) -> Result<FalsifyFile, CliError> {
    config.validate()?;
    let start = Instant::now();
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.loops).map(|_| master.gen()).collect();
    let records = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let dim = r.gen_range(config.dims.0..=config.dims.1);
            let rank = r.gen_range(config.ranks.0..=config.ranks.1);
            let l = random_closed_loop::<f64>(dim, rank, config.generators, config.steps, seed)?;
            let c = check_isoholonomic_inequality(&l.curve, &l.initial_frame)?;
            Ok(LoopRecord {
                index,
                seed,
                dim,
                rank,
                length: c.length,
                mesh_error: c.mesh_error,
                bound: c.bound,
                projective_bound: c.projective_bound,
                margin: c.margin(),
                violated: !(c.holds() && c.projective_holds()),
            })
        })
        .collect::<Result<Vec<_>, holonomy_core::Error>>()?;
    let violations = records.iter().filter(|r| r.violated).count();
    let min_margin = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(FalsifyFile {
        schema_version: SCHEMA_VERSION,
        kind: "falsify".into(),
        tool_version: TOOL_VERSION.into(),
        seed: config.seed,
        steps: config.steps,
        generators: config.generators,
        loops: config.loops,
        violations,
        min_margin,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        records,
    })
}

fn falsify(a: &FalsifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = FalsifyConfig {
        dims: (a.dim, a.max_dim.unwrap_or(a.dim)),
        ranks: (a.rank, a.max_rank.unwrap_or(a.rank)),
        loops: a.loops,
        seed: a.seed,
        steps: a.steps,
        generators: a.generators,
    };
    let file = run_falsify(&config)?;
    let summary = format!(
        "loops: {}\nviolations: {}\nmin margin: {:e}\nseed: {}\n",
        file.loops, file.violations, file.min_margin, file.seed
    );
    emit(out, &summary)?;
    match &a.out {
        Some(p) => write_atomic(p, &to_json(&file))?,
        None => emit(out, &to_json(&file))?,
    }
    if file.violations > 0 {
        let worst = file.records.iter().filter(|r| r.violated).map(|r| r.index.to_string()).collect::<Vec<_>>();
        return Err(CliError::VerificationFailed(format!("inequality violated by loop(s) {}", worst.join(", "))));
    }
    Ok(())
}

fn bloch(a: &BlochArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = read_plan(&a.plan)?;
    let count = plan.channels().len();
    let channel = plan
        .channels()
        .get(a.channel)
        .ok_or_else(|| CliError::Input(format!("plan has {count} channel(s), no channel {}", a.channel)))?;
    if a.steps < 2 {
        return Err(CliError::Input("--steps must be at least 2".into()));
    }
    let samples = bloch_trajectory(&channel.channel, a.steps)?;
    let mut csv = String::from("t,r1,r2,r3,w1,w2,w3\n");
    for s in samples {
        csv.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            s.t, s.r[0], s.r[1], s.r[2], s.omega[0], s.omega[1], s.omega[2]
        ));
    }
    deliver(a.out.as_deref(), &csv, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(significant12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(significant12(2.0779682205165204), "2.07796822052");
        assert_eq!(significant12(0.0), "0");
        assert_eq!(significant12(123.0), "123.000000000");
        assert_eq!(significant12(1e-3), "0.00100000000000");
    }

    #[test]
    fn falsify_config_validation() {
        let ok = FalsifyConfig { dims: (4, 6), ranks: (1, 3), loops: 2, seed: 0, steps: 100, generators: 3 };
        assert!(ok.validate().is_ok());
        assert!(FalsifyConfig { ranks: (1, 4), ..ok }.validate().is_err());
        assert!(FalsifyConfig { steps: 101, ..ok }.validate().is_err());
        assert!(FalsifyConfig { ranks: (0, 1), ..ok }.validate().is_err());
    }

    #[test]
    fn falsify_is_deterministic() {
        let c = FalsifyConfig { dims: (3, 4), ranks: (1, 2), loops: 6, seed: 9, steps: 200, generators: 2 };
        let a = run_falsify(&c).unwrap();
        let b = run_falsify(&c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.violations, 0);
    }
}
