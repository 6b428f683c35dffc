//! Scenario files: one JSON document per experiment, validated before any work.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use gaussprop::audit::{default_ladder, Verdict};
use gaussprop::propagate::StepMethod;
use gaussprop::walk::StepLaw;
use gaussprop::{gaussian_packet, FieldSpec, Grid, PropagatorSpec, Variant, WaveState};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridConfig,
    #[serde(default)]
    pub packet: PacketConfig,
    pub spec: PropagatorSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub method: StepMethod,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
    pub audit: Option<AuditConfig>,
    pub moments: Option<MomentsConfig>,
    pub walk: Option<WalkConfig>,
    pub compare: Option<CompareConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub x0: f64,
    pub sigma0: f64,
    #[serde(default)]
    pub k0: f64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self {
            x0: 0.0,
            sigma0: 1.0,
            k0: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub eps: f64,
    pub n_steps: usize,
    /// Defaults to `{eps, eps/2, eps/4, eps/8}`.
    pub eps_ladder: Option<Vec<f64>>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            eps: 0.01,
            n_steps: 100,
            eps_ladder: None,
        }
    }
}

impl Schedule {
    pub fn ladder(&self) -> Vec<f64> {
        self.eps_ladder.clone().unwrap_or_else(|| default_ladder(self.eps))
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// File name stem; defaults to the scenario file's stem.
    pub stem: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditCase {
    pub variant: Variant,
    /// Replaces the scenario drift for this case.
    pub drift: Option<FieldSpec>,
    pub expect: Verdict,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub cases: Vec<AuditCase>,
    /// Additional packets; the scenario packet is always audited first.
    #[serde(default)]
    pub packets: Vec<PacketConfig>,
    pub scan: Option<ScanConfig>,
    pub phase_freedom: Option<PhaseFreedomConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub candidates: Vec<f64>,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFreedomConfig {
    pub shift: f64,
    pub n_steps: usize,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentCase {
    pub diffusivity: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub cases: Vec<MomentCase>,
    /// Relative tolerance on every identity.
    #[serde(default = "default_moment_tolerance")]
    pub tolerance: f64,
    /// Drift slope for the cancellation ladder.
    #[serde(default = "default_slope")]
    pub cancellation_slope: f64,
    #[serde(default = "default_cancellation_ladder")]
    pub cancellation_ladder: Vec<f64>,
}

fn default_moment_tolerance() -> f64 {
    1e-6
}

fn default_slope() -> f64 {
    0.4
}

fn default_cancellation_ladder() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub particles: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub law: StepLaw,
}

fn default_bins() -> usize {
    50
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub t_final: f64,
    /// Reference grid is this many times finer.
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default = "default_reference_eps")]
    pub reference_eps: f64,
    /// Accepted range of the fitted convergence order.
    #[serde(default = "default_order_band")]
    pub order_band: [f64; 2],
}

fn default_refine() -> usize {
    4
}

fn default_reference_eps() -> f64 {
    1e-4
}

fn default_order_band() -> [f64; 2] {
    [0.7, 1.3]
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let scenario: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.spec.validate()?;
        ensure!(self.schedule.eps > 0.0, "schedule.eps must be positive");
        let ladder = self.schedule.ladder();
        ensure!(ladder.len() >= 2, "the eps ladder needs at least two values");
        ensure!(ladder.iter().all(|&e| e > 0.0), "eps ladder values must be positive");
        self.initial_state()?;
        if let Some(a) = &self.audit {
            ensure!(!a.cases.is_empty(), "audit.cases is empty");
            for p in &a.packets {
                gaussian_packet(&self.grid()?, p.x0, p.sigma0, p.k0)?;
            }
            for c in &a.cases {
                self.case_spec(c).validate()?;
            }
            if let Some(s) = &a.scan {
                ensure!(!s.candidates.is_empty(), "audit.scan.candidates is empty");
                ensure!(s.eps > 0.0, "audit.scan.eps must be positive");
            }
            if let Some(p) = &a.phase_freedom {
                ensure!(p.eps > 0.0, "audit.phase_freedom.eps must be positive");
            }
        }
        if let Some(m) = &self.moments {
            ensure!(!m.cases.is_empty(), "moments.cases is empty");
            for c in &m.cases {
                ensure!(c.diffusivity > 0.0 && c.eps > 0.0, "moment cases need positive D and eps");
            }
            ensure!(m.tolerance > 0.0, "moments.tolerance must be positive");
            ensure!(m.cancellation_ladder.len() >= 2, "moments.cancellation_ladder needs two values");
        }
        if let Some(w) = &self.walk {
            ensure!(w.bins > 0, "walk.bins must be positive");
            ensure!(w.particles > 0, "walk.particles must be positive");
        }
        if let Some(c) = &self.compare {
            ensure!(c.t_final > 0.0, "compare.t_final must be positive");
            ensure!(c.refine >= 1, "compare.refine must be at least 1");
            ensure!(c.reference_eps > 0.0, "compare.reference_eps must be positive");
            for &e in &ladder {
                let steps = c.t_final / e;
                if (steps - steps.round()).abs() > 1e-9 * steps {
                    bail!("compare.t_final {} is not a whole number of steps of {e}", c.t_final);
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n)?)
    }

    pub fn initial_state(&self) -> Result<WaveState> {
        let p = self.packet;
        Ok(gaussian_packet(&self.grid()?, p.x0, p.sigma0, p.k0)?)
    }

    pub fn case_spec(&self, case: &AuditCase) -> PropagatorSpec {
        let mut spec = self.spec.clone().with_variant(case.variant.clone());
        if let Some(drift) = &case.drift {
            spec = spec.with_drift(drift.clone());
        }
        spec
    }
}
