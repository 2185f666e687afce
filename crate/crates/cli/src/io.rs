//! JSON file formats and atomic output.

use std::io::Write;
use std::path::Path;

use holonomy_core::evolution::{SimulationMode, TightnessReport, VerificationTolerances};
use holonomy_core::geometry::Frame;
use holonomy_core::numkernel::{ComplexMatrix, ToleranceConfig};
use holonomy_core::synthesis::{build_channel_scaled, PlannedChannel, TightPlan};
use holonomy_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest deviation tolerated between stored and recomputed channel data.
const PLAN_CONSISTENCY_TOL: f64 = 1e-12;

type Pair = [f64; 2];

fn pairs(v: &[Complex64]) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(v: &[Pair]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Dense complex matrix, row-major, entries as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix<f64>, label: Option<&str>) -> Self {
        Self { rows: m.rows(), cols: m.cols(), entries: pairs(m.entries()), label: label.map(str::to_string) }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix<f64>, CliError> {
        if self.entries.len() != self.rows * self.cols {
            return Err(CliError::Input(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        ComplexMatrix::new(self.rows, self.cols, complexes(&self.entries))
            .map_err(|e| CliError::Input(format!("matrix entries: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRecord {
    pub eigen_index: usize,
    pub theta: f64,
    pub axis_scale: f64,
    pub v: Vec<Pair>,
    pub w: Vec<Pair>,
    pub eps0: Vec<Pair>,
    pub eps1: Vec<Pair>,
    pub r: [f64; 3],
    pub a: [f64; 3],
    pub omega: [f64; 3],
    #[serde(rename = "A")]
    pub a_matrix: MatrixFile,
    #[serde(rename = "H")]
    pub h_matrix: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub schema_version: u32,
    pub kind: String,
    pub tau: f64,
    pub ambient_dim: usize,
    pub gate: MatrixFile,
    pub embedding: MatrixFile,
    pub computational_frame: MatrixFile,
    pub phases: Vec<f64>,
    pub ancillas: Vec<Vec<Pair>>,
    pub channels: Vec<ChannelRecord>,
}

impl PlanFile {
    pub fn from_plan(plan: &TightPlan<f64>) -> Self {
        let channels = plan
            .channels()
            .iter()
            .map(|pc| {
                let c = &pc.channel;
                ChannelRecord {
                    eigen_index: pc.eigen_index,
                    theta: c.theta(),
                    axis_scale: c.axis_scale(),
                    v: pairs(c.v()),
                    w: pairs(c.w()),
                    eps0: pairs(c.eps0()),
                    eps1: pairs(c.eps1()),
                    r: c.r(),
                    a: c.a(),
                    omega: c.omega(),
                    a_matrix: MatrixFile::from_matrix(c.a_matrix(), None),
                    h_matrix: MatrixFile::from_matrix(c.h_matrix(), None),
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "tight_plan".into(),
            tau: plan.tau(),
            ambient_dim: plan.dim(),
            gate: MatrixFile::from_matrix(plan.gate(), Some("gate")),
            embedding: MatrixFile::from_matrix(plan.embedding().matrix(), Some("embedding")),
            computational_frame: MatrixFile::from_matrix(
                plan.computational_frame().matrix(),
                Some("computational_frame"),
            ),
            phases: plan.phases().to_vec(),
            ancillas: plan.ancillas().iter().map(|w| pairs(w)).collect(),
            channels,
        }
    }

    /// Rebuilds the plan from its defining data and checks that every derived
    /// field in the file agrees with the recomputation.
    pub fn to_plan(&self) -> Result<TightPlan<f64>, CliError> {
        if self.schema_version != SCHEMA_VERSION || self.kind != "tight_plan" {
            return Err(CliError::Input(format!(
                "expected tight_plan schema version {SCHEMA_VERSION}, got {} version {}",
                self.kind, self.schema_version
            )));
        }
        let tol = ToleranceConfig::default();
        let gate = self.gate.to_matrix()?;
        let embedding =
            Frame::new(self.embedding.to_matrix()?, &tol).map_err(|e| CliError::Input(format!("embedding: {e}")))?;
        let frame = Frame::new(self.computational_frame.to_matrix()?, &tol)
            .map_err(|e| CliError::Input(format!("computational_frame: {e}")))?;
        if embedding.dim() != self.ambient_dim {
            return Err(CliError::Input("ambient_dim does not match the embedding".into()));
        }
        let mut channels = Vec::with_capacity(self.channels.len());
        for (i, rec) in self.channels.iter().enumerate() {
            let ch = build_channel_scaled(&complexes(&rec.v), &complexes(&rec.w), rec.theta, self.tau, rec.axis_scale)
                .map_err(|e| CliError::Input(format!("channel {i}: {e}")))?;
            let vec_dev = |a: &[Complex64], b: &[Pair]| {
                a.iter().zip(complexes(b)).map(|(x, y)| (*x - y).norm()).fold(0.0, f64::max)
            };
            let mat_dev = |m: &ComplexMatrix<f64>, f: &MatrixFile| -> Result<f64, CliError> {
                let stored = f.to_matrix()?;
                if !m.same_shape(&stored) {
                    return Ok(f64::INFINITY);
                }
                Ok((m - &stored).max_abs())
            };
            let vec3_dev = |a: [f64; 3], b: [f64; 3]| (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
            let worst = [
                vec_dev(ch.eps0(), &rec.eps0),
                vec_dev(ch.eps1(), &rec.eps1),
                vec3_dev(ch.r(), rec.r),
                vec3_dev(ch.a(), rec.a),
                vec3_dev(ch.omega(), rec.omega),
                mat_dev(ch.a_matrix(), &rec.a_matrix)?,
                mat_dev(ch.h_matrix(), &rec.h_matrix)?,
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if !(worst <= PLAN_CONSISTENCY_TOL) {
                return Err(CliError::Input(format!(
                    "channel {i}: stored data disagrees with its definition by {worst:e}"
                )));
            }
            channels.push(PlannedChannel { eigen_index: rec.eigen_index, channel: ch });
        }
        let plan = TightPlan::from_parts(gate, embedding, frame, self.phases.clone(), channels, self.tau)
            .map_err(|e| CliError::Input(format!("plan: {e}")))?;
        let ancillas_match = self.ancillas.len() == plan.channels().len()
            && self.ancillas.iter().zip(plan.ancillas()).all(|(a, b)| complexes(a) == b);
        if !ancillas_match {
            return Err(CliError::Input("ancilla list disagrees with the channels".into()));
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRecord {
    pub length_gap: f64,
    pub holonomy_error: f64,
    pub pt_residual: f64,
    pub qsl_slack: f64,
    pub closure: f64,
    pub unitarity_drift: f64,
    pub holonomy_routes: f64,
    pub length_routes: f64,
}

impl From<&VerificationTolerances<f64>> for ToleranceRecord {
    fn from(t: &VerificationTolerances<f64>) -> Self {
        Self {
            length_gap: t.length_gap,
            holonomy_error: t.holonomy_error,
            pt_residual: t.pt_residual,
            qsl_slack: t.qsl_slack,
            closure: t.closure,
            unitarity_drift: t.unitarity_drift,
            holonomy_routes: t.holonomy_routes,
            length_routes: t.length_routes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub kind: String,
    pub tool_version: String,
    pub mode: String,
    pub steps: usize,
    pub tau: f64,
    pub seed: Option<u64>,
    pub wall_clock_seconds: f64,
    pub target_gate: MatrixFile,
    pub realized_holonomy: MatrixFile,
    pub holonomy_error: f64,
    pub holonomy_route_gap: f64,
    pub bound: f64,
    pub realized_length: f64,
    pub projector_length: f64,
    pub length_route_gap: f64,
    pub length_gap: f64,
    pub qsl_bound_time: f64,
    pub qsl_slack: f64,
    pub max_pt_residual: f64,
    pub closure_residual: f64,
    pub unitarity_drift: f64,
    pub tolerances: ToleranceRecord,
    pub failures: Vec<String>,
    pub passed: bool,
}

pub fn mode_name(mode: SimulationMode) -> &'static str {
    match mode {
        SimulationMode::ClosedForm => "closed",
        SimulationMode::Numeric => "numeric",
    }
}

impl ReportFile {
    pub fn new(
        report: &TightnessReport<f64>,
        tol: &VerificationTolerances<f64>,
        seed: Option<u64>,
        wall_clock_seconds: f64,
    ) -> Self {
        let failures: Vec<String> = report.failures(tol).into_iter().map(str::to_string).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            kind: "tightness_report".into(),
            tool_version: TOOL_VERSION.into(),
            mode: mode_name(report.mode).into(),
            steps: report.steps,
            tau: report.tau,
            seed,
            wall_clock_seconds,
            target_gate: MatrixFile::from_matrix(&report.target_gate, Some("target_gate")),
            realized_holonomy: MatrixFile::from_matrix(&report.realized_holonomy, Some("realized_holonomy")),
            holonomy_error: report.holonomy_error,
            holonomy_route_gap: report.holonomy_route_gap,
            bound: report.bound,
            realized_length: report.realized_length,
            projector_length: report.projector_length,
            length_route_gap: report.length_route_gap,
            length_gap: report.length_gap,
            qsl_bound_time: report.qsl_bound_time,
            qsl_slack: report.qsl_slack,
            max_pt_residual: report.max_pt_residual,
            closure_residual: report.closure_residual,
            unitarity_drift: report.unitarity_drift,
            tolerances: tol.into(),
            passed: failures.is_empty(),
            failures,
        }
    }

    /// Scalar fields that must be finite, by name.
    pub fn scalars(&self) -> [(&'static str, f64); 13] {
        [
            ("holonomy_error", self.holonomy_error),
            ("holonomy_route_gap", self.holonomy_route_gap),
            ("bound", self.bound),
            ("realized_length", self.realized_length),
            ("projector_length", self.projector_length),
            ("length_route_gap", self.length_route_gap),
            ("length_gap", self.length_gap),
            ("qsl_bound_time", self.qsl_bound_time),
            ("qsl_slack", self.qsl_slack),
            ("max_pt_residual", self.max_pt_residual),
            ("closure_residual", self.closure_residual),
            ("unitarity_drift", self.unitarity_drift),
            ("tau", self.tau),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub index: usize,
    pub seed: u64,
    pub dim: usize,
    pub rank: usize,
    pub length: f64,
    pub mesh_error: f64,
    pub bound: f64,
    pub projective_bound: f64,
    pub margin: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyFile {
    pub schema_version: u32,
    pub kind: String,
    pub tool_version: String,
    pub seed: u64,
    pub steps: usize,
    pub generators: usize,
    pub loops: usize,
    pub violations: usize,
    pub min_margin: f64,
    pub wall_clock_seconds: f64,
    pub records: Vec<LoopRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOutput {
    pub schema_version: u32,
    pub kind: String,
    pub projective: bool,
    pub bound: f64,
    pub phases: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_index: Option<usize>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use holonomy_core::synthesis::{gate_library, plan_gate_standard};

    #[test]
    fn matrix_file_round_trip() {
        let m: ComplexMatrix<f64> = gate_library("t_gate").unwrap();
        let f = MatrixFile::from_matrix(&m, Some("t"));
        let back: MatrixFile = serde_json::from_str(&to_json(&f)).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn matrix_file_rejects_bad_shape() {
        let f = MatrixFile { rows: 2, cols: 2, entries: vec![[1.0, 0.0]], label: None };
        assert!(matches!(f.to_matrix(), Err(CliError::Input(_))));
    }

    #[test]
    fn plan_file_round_trip() {
        let g = gate_library("cnot").unwrap();
        let plan = plan_gate_standard(&g, 8, 1.0).unwrap();
        let file = PlanFile::from_plan(&plan);
        let text = to_json(&file);
        let back: PlanFile = serde_json::from_str(&text).unwrap();
        let rebuilt = back.to_plan().unwrap();
        assert_eq!(to_json(&PlanFile::from_plan(&rebuilt)), text);
    }

    #[test]
    fn tampered_plan_is_rejected() {
        let g = gate_library("t_gate").unwrap();
        let plan = plan_gate_standard(&g, 4, 1.0).unwrap();
        let mut file = PlanFile::from_plan(&plan);
        file.channels[0].h_matrix.entries[5][0] += 1e-6;
        assert!(matches!(file.to_plan(), Err(CliError::Input(_))));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "first").unwrap();
        write_atomic(&p, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
    }
}
