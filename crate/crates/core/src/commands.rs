//! Run orchestration behind the `nlkm` subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    equilibria, kinetic_residual, turing_report, AnalysisError, EquilibriumSet, TuringReport,
    PRINTED_LABELS, STANDARD_LABELS,
};
use crate::error::{Error, Result, SetupError};
use crate::grid::{eval_initial_conditions, Field, GridSpec};
use crate::io::config::{parse_config, InitialCondition, RunConfig};
use crate::io::manifest::{
    DerivedQuantities, RunManifest, RunStatus, SnapshotRecord, MANIFEST_FILE,
};
use crate::io::snapshot::{read_raw, write_snapshot};
use crate::kernel::DiscreteKernel;
use crate::pattern::{coefficient_of_variation, dominant_wavelength};
use crate::reaction::ModelMode;
use crate::stepper::{
    stability_limits, Diagnostics, Integrator, RunOutcome, SimState, SnapshotSink, StabilityLimits,
    StepControl,
};

/// Reads a TOML configuration, or the configuration embedded in a run manifest
/// when the file is JSON.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        return Ok(RunManifest::from_json(path, &text)?.config);
    }
    Ok(parse_config(&text)?)
}

/// Builds the initial state described by `cfg.initial` on `grid`.
pub fn initial_state(cfg: &RunConfig, grid: &GridSpec) -> Result<SimState> {
    match &cfg.initial {
        InitialCondition::ReferenceFormulas => {
            let (n, w) = eval_initial_conditions(grid);
            Ok(SimState::new(n, w)?)
        }
        InitialCondition::UniformPlusNoise {
            amplitude,
            seed,
            base_n,
            base_w,
        } => {
            let eq = equilibria(&cfg.model);
            let fallback = eq.vegetated.last().copied().unwrap_or(eq.bare_soil);
            let (bn, bw) = (base_n.unwrap_or(fallback.n), base_w.unwrap_or(fallback.w));
            let (n, w) = uniform_plus_noise(grid, bn, bw, *amplitude, *seed);
            Ok(SimState::new(n, w)?)
        }
        InitialCondition::FromFile { n_path, w_path } => {
            let load = |p: &PathBuf| -> Result<Field> {
                read_raw(p)?.into_field(*grid).map_err(|e| Error::Format {
                    path: p.clone(),
                    message: format!("does not fit the configured grid: {e}"),
                })
            };
            let (n, w) = (load(n_path)?, load(w_path)?);
            for (f, p) in [(&n, n_path), (&w, w_path)] {
                if f.min() < 0.0 {
                    return Err(Error::Format {
                        path: p.clone(),
                        message: "initial data must be nonnegative".into(),
                    });
                }
            }
            Ok(SimState::new(n, w)?)
        }
    }
}

/// Uniform state plus per-cell noise. Each cell draws from its own ChaCha8
/// stream `(j << 32) | i` under `seed`, so values do not depend on traversal order.
pub fn uniform_plus_noise(
    grid: &GridSpec,
    base_n: f64,
    base_w: f64,
    amplitude: f64,
    seed: u64,
) -> (Field, Field) {
    let draw = |i: usize, j: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((j as u64) << 32) | i as u64);
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        (a, b)
    };
    let n = Field::from_index_fn(*grid, |i, j| (base_n + amplitude * draw(i, j).0).max(0.0));
    let w = Field::from_index_fn(*grid, |i, j| (base_w + amplitude * draw(i, j).1).max(0.0));
    (n, w)
}

/// Everything needed to start a run, resolved from a configuration.
pub struct PreparedRun {
    pub config: RunConfig,
    pub grid: GridSpec,
    pub kernel: Option<DiscreteKernel>,
    pub state0: SimState,
    pub limits: StabilityLimits,
    pub control: StepControl,
}

impl PreparedRun {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let grid = config.grid_spec()?;
        let kernel = match config.model.mode {
            ModelMode::Nonlocal => Some(DiscreteKernel::gaussian(&grid, &config.kernel.spec())?),
            ModelMode::Local => None,
        };
        let state0 = initial_state(config, &grid)?;
        let limits = stability_limits(&config.model, &grid, kernel.as_ref(), &state0.n, &state0.w);
        let c = &config.control;
        let control = match c.dt {
            Some(dt) => StepControl::new(dt, c.t_end, c.safety, c.snapshot_stride, limits.min())?,
            None => StepControl::auto(limits.min(), c.t_end, c.safety, c.snapshot_stride)?,
        };
        Ok(Self {
            config: config.clone(),
            grid,
            kernel,
            state0,
            limits,
            control,
        })
    }

    pub fn integrator(&self) -> Result<Integrator<'_>, SetupError> {
        Ok(Integrator::new(
            self.config.model,
            self.grid,
            self.kernel.as_ref(),
            &self.state0.w,
        )?
        .with_method(self.config.kernel.method))
    }

    pub fn derived(&self) -> DerivedQuantities {
        let k = self.kernel.as_ref();
        let method = k.map(|k| k.resolve(self.config.kernel.method));
        DerivedQuantities {
            hx: self.grid.hx(),
            hy: self.grid.hy(),
            dt: self.control.dt,
            steps: self.control.step_count(self.state0.t),
            limits: self.limits,
            stability_limit: self.limits.min(),
            water_bound: crate::grid::linf_norm(&self.state0.w).max(self.config.model.a),
            lambda_disc: k.map(|k| k.lambda_disc()),
            stencil_half_widths: k.map(|k| k.half_widths()),
            nonlocal_method: method,
            fft_shape: match (k, method) {
                (Some(k), Some(crate::kernel::NonlocalMethod::Fft)) => Some(k.fft_shape()),
                _ => None,
            },
        }
    }

    /// Runs to `t_end` without writing anything.
    pub fn run(&self, sink: &mut dyn SnapshotSink) -> Result<RunOutcome> {
        self.integrator()?
            .run(self.state0.clone(), &self.control, sink)
    }
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub final_state: SimState,
}

/// Runs one model and writes snapshots plus `manifest.json` into the output
/// directory (`out` overrides the configured one). The manifest is written
/// even when the run aborts on a numerical violation.
pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<SimulateSummary> {
    let out_dir = out.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf);
    let prepared = PreparedRun::new(cfg)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut manifest = RunManifest::new(cfg.clone(), out_dir.clone(), prepared.derived());
    manifest.save(&manifest_path)?;

    let clock = Instant::now();
    let formats = cfg.output.formats.clone();
    let mut records = Vec::new();
    let mut sink = |state: &SimState, d: &Diagnostics| -> Result<()> {
        let written = write_snapshot(&out_dir, state, &formats)?;
        records.push(SnapshotRecord {
            diagnostics: *d,
            files: written
                .files
                .iter()
                .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
                .collect(),
            pgm_n: written.pgm_n,
            pgm_w: written.pgm_w,
        });
        Ok(())
    };
    let result = prepared.run(&mut sink);
    manifest.snapshots = records;
    manifest.wall_seconds = clock.elapsed().as_secs_f64();
    manifest.status = match &result {
        Ok(_) => RunStatus::Completed,
        Err(e) => RunStatus::Failed {
            message: e.to_string(),
        },
    };
    manifest.save(&manifest_path)?;
    let outcome = result?;
    Ok(SimulateSummary {
        out_dir,
        manifest,
        final_state: outcome.final_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumEntry {
    pub label: String,
    pub n: f64,
    pub w: f64,
    pub residual: f64,
    pub turing: TuringReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub equilibria: EquilibriumSet,
    pub entries: Vec<EquilibriumEntry>,
    pub note: String,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport> {
    let p = &cfg.model;
    p.validate()?;
    let set = equilibria(p);
    let mut entries = Vec::new();
    for (idx, s) in set.all().into_iter().enumerate() {
        let label = match (idx, set.vegetated.len()) {
            (0, _) => "bare soil".to_string(),
            (1, 2) => "vegetated (low)".to_string(),
            (2, 2) => "vegetated (high)".to_string(),
            _ => "vegetated".to_string(),
        };
        let turing = turing_report(p, s).map_err(|e| match e {
            AnalysisError::Setup(e) => Error::Setup(e),
            other => Error::Setup(SetupError::InvalidParams {
                field: "a",
                reason: other.to_string(),
            }),
        })?;
        entries.push(EquilibriumEntry {
            label,
            n: s.n,
            w: s.w,
            residual: kinetic_residual(s, p),
            turing,
        });
    }
    Ok(AnalyzeReport {
        equilibria: set,
        entries,
        note: "conditions use the two-diffusion (Laplacian) form with d1, d2; \
               the nonlocal dispersion relation is not evaluated"
            .to_string(),
    })
}

impl AnalyzeReport {
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "discriminant a^2 - 4 alpha^2 = {:.6e}\n",
            self.equilibria.discriminant
        );
        let _ = writeln!(
            s,
            "{:<18} {:>22} {:>22} {:>12}",
            "equilibrium", "n", "w", "|f|+|g|"
        );
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<18} {:>22.16} {:>22.16} {:>12.3e}",
                e.label, e.n, e.w, e.residual
            );
        }
        for e in &self.entries {
            let t = &e.turing;
            let j = t.jacobian;
            let _ = writeln!(s, "\n[{}] (n, w) = ({}, {})", e.label, e.n, e.w);
            let _ = writeln!(
                s,
                "  jacobian  [[{}, {}], [{}, {}]]",
                j.f_n, j.f_w, j.g_n, j.g_w
            );
            let _ = writeln!(s, "  trace     {}", t.trace);
            let _ = writeln!(s, "  det       {}", t.det);
            let _ = writeln!(s, "  printed conditions (as typeset):");
            for (label, ok) in PRINTED_LABELS.iter().zip(t.printed_conditions.as_array()) {
                let _ = writeln!(s, "    [{}] {label}", if ok { "x" } else { " " });
            }
            let _ = writeln!(s, "  standard conditions:");
            for (label, ok) in STANDARD_LABELS.iter().zip(t.standard_conditions.as_array()) {
                let _ = writeln!(s, "    [{}] {label}", if ok { "x" } else { " " });
            }
            let _ = writeln!(s, "  verdict   {}", verdict_name(t));
        }
        let _ = writeln!(s, "\nnote: {}", self.note);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn verdict_name(t: &TuringReport) -> String {
    serde_json::to_value(t.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelInfo {
    pub sigma: f64,
    pub cutoff: f64,
    pub hx: f64,
    pub half_widths: (usize, usize),
    pub nonzero_weights: usize,
    pub lambda_disc: f64,
    pub boundary_mass_min: f64,
    pub boundary_mass_mean: f64,
    pub boundary_mass_max: f64,
    pub nonlocal_method: crate::kernel::NonlocalMethod,
    pub fft_shape: (usize, usize),
    /// `1 / (2 d1 λ)`, the explicit step limit of the nonlocal term.
    pub nonlocal_step_limit: f64,
}

pub fn cmd_kernel_info(cfg: &RunConfig) -> Result<KernelInfo> {
    let grid = cfg.grid_spec()?;
    let spec = cfg.kernel.spec();
    let k = DiscreteKernel::gaussian(&grid, &spec)?;
    let m = k.boundary_mass();
    Ok(KernelInfo {
        sigma: spec.sigma,
        cutoff: spec.cutoff(),
        hx: grid.hx(),
        half_widths: k.half_widths(),
        nonzero_weights: k.nonzero_weights(),
        lambda_disc: k.lambda_disc(),
        boundary_mass_min: m.min(),
        boundary_mass_mean: m.mean(),
        boundary_mass_max: m.max(),
        nonlocal_method: k.resolve(cfg.kernel.method),
        fft_shape: k.fft_shape(),
        nonlocal_step_limit: 1.0 / (2.0 * cfg.model.d1 * k.lambda_disc()),
    })
}

impl KernelInfo {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sigma               {}", self.sigma);
        let _ = writeln!(s, "cutoff radius       {}", self.cutoff);
        let _ = writeln!(s, "cell size           {}", self.hx);
        let _ = writeln!(s, "stencil half widths {:?}", self.half_widths);
        let _ = writeln!(s, "nonzero weights     {}", self.nonzero_weights);
        let _ = writeln!(s, "lambda_disc         {}", self.lambda_disc);
        let _ = writeln!(
            s,
            "boundary mass       min {} / mean {} / max {}",
            self.boundary_mass_min, self.boundary_mass_mean, self.boundary_mass_max
        );
        let _ = writeln!(
            s,
            "evaluation path     {}",
            format!("{:?}", self.nonlocal_method).to_lowercase()
        );
        let _ = writeln!(s, "fft padded shape    {:?}", self.fft_shape);
        let _ = writeln!(s, "nonlocal dt limit   {}", self.nonlocal_step_limit);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub coefficient_of_variation: f64,
    pub dominant_wavelength: Option<f64>,
}

impl PatternMetrics {
    pub fn of(n: &Field) -> Self {
        Self {
            coefficient_of_variation: coefficient_of_variation(n),
            dominant_wavelength: dominant_wavelength(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub t_end: f64,
    /// `sqrt(∫ (n_local − n_nonlocal)²)` at the final time.
    pub l2_distance: f64,
    pub linf_distance: f64,
    pub local: PatternMetrics,
    pub nonlocal: PatternMetrics,
}

pub const COMPARE_REPORT_FILE: &str = "compare.json";

/// Runs both models from identical initial data into `out/local` and
/// `out/nonlocal` and writes `out/compare.json`.
pub fn cmd_compare(local: &RunConfig, nonlocal: &RunConfig, out: &Path) -> Result<CompareReport> {
    let mode_err = |which: &str| {
        Error::Setup(SetupError::InvalidParams {
            field: "mode",
            reason: format!("the {which} configuration must use mode = \"{which}\""),
        })
    };
    if local.model.mode != ModelMode::Local {
        return Err(mode_err("local"));
    }
    if nonlocal.model.mode != ModelMode::Nonlocal {
        return Err(mode_err("nonlocal"));
    }
    if local.grid != nonlocal.grid {
        return Err(SetupError::GridMismatch.into());
    }
    if local.initial != nonlocal.initial {
        return Err(Error::Setup(SetupError::InvalidParams {
            field: "initial",
            reason: "both configurations must use the same initial condition".into(),
        }));
    }
    if local.control.t_end != nonlocal.control.t_end {
        return Err(Error::Setup(SetupError::InvalidControl(
            "both configurations must use the same t_end".into(),
        )));
    }
    let a = cmd_simulate(local, Some(&out.join("local")))?;
    let b = cmd_simulate(nonlocal, Some(&out.join("nonlocal")))?;
    let report = compare_fields(&a.final_state.n, &b.final_state.n, local.control.t_end)?;
    let path = out.join(COMPARE_REPORT_FILE);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

pub fn compare_fields(
    local_n: &Field,
    nonlocal_n: &Field,
    t_end: f64,
) -> Result<CompareReport, SetupError> {
    let diff = local_n.zip_map(nonlocal_n, |a, b| a - b)?;
    let sq = diff.map(|d| d * d);
    Ok(CompareReport {
        t_end,
        l2_distance: sq.integral().sqrt(),
        linf_distance: crate::grid::linf_norm(&diff),
        local: PatternMetrics::of(local_n),
        nonlocal: PatternMetrics::of(nonlocal_n),
    })
}
