//! TOML run configuration with line-anchored errors.
//!
//! ```toml
//! [model]
//! mode = "nonlocal"      # or "local"
//! d1 = 0.05
//! d2 = 0.003             # defaults to 0 when mode = "local"
//! v = 5.0
//! a = 0.15
//! alpha = 0.045
//!
//! [grid]
//! lx = 20.0
//! ly = 20.0
//! nx = 150
//! ny = 150
//!
//! [kernel]
//! sigma = 1.0
//! cutoff_radii = 4.0
//! method = "auto"        # "direct", "fft" or "auto"
//!
//! [control]
//! # dt = 1e-3            # defaults to safety * stability limit
//! t_end = 200.0
//! safety = 0.9
//! snapshot_stride = 10000
//!
//! [initial]
//! kind = "paper_formulas"   # or "uniform_plus_noise", "from_file"
//!
//! [output]
//! dir = "output"
//! formats = ["csv", "pgm"]
//! ```

use std::fmt::Write as _;
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{ConfigError, SetupError};
use crate::grid::{make_grid, GridSpec};
use crate::io::snapshot::OutputFormat;
use crate::kernel::{KernelSpec, NonlocalMethod, DEFAULT_CUTOFF_RADII};
use crate::reaction::{ModelMode, ModelParams};
use crate::stepper::DEFAULT_SAFETY;

pub const DEFAULT_LX: f64 = 20.0;
pub const DEFAULT_NX: usize = 150;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_T_END: f64 = 200.0;
pub const DEFAULT_SNAPSHOT_STRIDE: u64 = 10_000;
pub const DEFAULT_OUTPUT_DIR: &str = "output";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, SetupError> {
        make_grid(self.lx, self.ly, self.nx, self.ny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub sigma: f64,
    pub cutoff_radii: f64,
    pub method: NonlocalMethod,
}

impl KernelConfig {
    pub fn spec(&self) -> KernelSpec {
        KernelSpec {
            sigma: self.sigma,
            cutoff_radii: self.cutoff_radii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Explicit step; `None` selects `safety * limit`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub safety: f64,
    pub snapshot_stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// The smooth trigonometric profiles of the reference experiment.
    #[serde(rename = "paper_formulas")]
    ReferenceFormulas,
    /// A uniform state plus independent uniform noise in `[-amplitude, amplitude)`
    /// per cell, clipped at zero. The base defaults to the vegetated state with
    /// the most biomass, or bare soil when none exists.
    UniformPlusNoise {
        amplitude: f64,
        seed: u64,
        base_n: Option<f64>,
        base_w: Option<f64>,
    },
    /// Raw snapshots for biomass and water.
    FromFile { n_path: PathBuf, w_path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub control: ControlConfig,
    pub initial: InitialCondition,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    model: Option<Spanned<RawModel>>,
    grid: Option<Spanned<RawGrid>>,
    kernel: Option<Spanned<RawKernel>>,
    control: Option<Spanned<RawControl>>,
    initial: Option<Spanned<RawInitial>>,
    output: Option<Spanned<RawOutput>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawModel {
    mode: Option<Spanned<ModelMode>>,
    d1: Option<Spanned<f64>>,
    d2: Option<Spanned<f64>>,
    v: Option<Spanned<f64>>,
    a: Option<Spanned<f64>>,
    alpha: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lx: Option<Spanned<f64>>,
    ly: Option<Spanned<f64>>,
    nx: Option<Spanned<usize>>,
    ny: Option<Spanned<usize>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    sigma: Option<Spanned<f64>>,
    cutoff_radii: Option<Spanned<f64>>,
    method: Option<Spanned<NonlocalMethod>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawControl {
    dt: Option<Spanned<f64>>,
    t_end: Option<Spanned<f64>>,
    safety: Option<Spanned<f64>>,
    snapshot_stride: Option<Spanned<u64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: Option<Spanned<String>>,
    amplitude: Option<Spanned<f64>>,
    seed: Option<Spanned<u64>>,
    base_n: Option<Spanned<f64>>,
    base_w: Option<Spanned<f64>>,
    n_path: Option<Spanned<PathBuf>>,
    w_path: Option<Spanned<PathBuf>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<Spanned<PathBuf>>,
    formats: Option<Spanned<Vec<Spanned<String>>>>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a> {
    text: &'a str,
}

impl Lines<'_> {
    fn at(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text.as_bytes()[..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    }

    fn err(&self, span: Option<Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: span.map_or(1, |s| self.at(s.start)),
            message: message.into(),
        }
    }
}

fn span<T>(v: &Option<Spanned<T>>) -> Option<Range<usize>> {
    v.as_ref().map(|s| s.span())
}

fn value<T: Clone>(v: &Option<Spanned<T>>, default: T) -> T {
    v.as_ref().map_or(default, |s| s.get_ref().clone())
}

fn section<T: Default>(s: Option<Spanned<T>>) -> (T, Option<Range<usize>>) {
    match s {
        Some(s) => {
            let sp = s.span();
            (s.into_inner(), Some(sp))
        }
        None => (T::default(), None),
    }
}

/// Parses a TOML document into a fully resolved [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let lines = Lines { text };
    let doc: RawDoc =
        toml::from_str(text).map_err(|e| lines.err(e.span(), e.message().trim().to_string()))?;

    let model = resolve_model(&lines, doc.model)?;
    let grid = resolve_grid(&lines, doc.grid)?;
    let kernel = resolve_kernel(&lines, doc.kernel, &grid)?;
    let control = resolve_control(&lines, doc.control)?;
    let initial = resolve_initial(&lines, doc.initial)?;
    let output = resolve_output(&lines, doc.output)?;
    Ok(RunConfig {
        model,
        grid,
        kernel,
        control,
        initial,
        output,
    })
}

fn resolve_model(
    lines: &Lines,
    raw: Option<Spanned<RawModel>>,
) -> Result<ModelParams, ConfigError> {
    let (m, sec) = section(raw);
    let mode = value(&m.mode, ModelMode::Nonlocal);
    let base = match mode {
        ModelMode::Local => ModelParams::reference_local(),
        ModelMode::Nonlocal => ModelParams::reference_nonlocal(),
    };
    let p = ModelParams {
        d1: value(&m.d1, base.d1),
        d2: value(&m.d2, base.d2),
        v: value(&m.v, base.v),
        a: value(&m.a, base.a),
        alpha: value(&m.alpha, base.alpha),
        mode,
    };
    p.validate().map_err(|e| {
        let field_span = match &e {
            SetupError::InvalidParams { field, .. } => match *field {
                "d1" => span(&m.d1),
                "d2" => span(&m.d2).or(span(&m.d1)),
                "v" => span(&m.v),
                "a" => span(&m.a),
                "alpha" => span(&m.alpha),
                _ => None,
            },
            _ => None,
        };
        lines.err(field_span.or(sec), e.to_string())
    })?;
    Ok(p)
}

fn resolve_grid(lines: &Lines, raw: Option<Spanned<RawGrid>>) -> Result<GridConfig, ConfigError> {
    let (g, _) = section(raw);
    let cfg = GridConfig {
        lx: value(&g.lx, DEFAULT_LX),
        ly: value(&g.ly, DEFAULT_LX),
        nx: value(&g.nx, DEFAULT_NX),
        ny: value(&g.ny, DEFAULT_NX),
    };
    for (sp, x, key) in [(span(&g.lx), cfg.lx, "lx"), (span(&g.ly), cfg.ly, "ly")] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(lines.err(sp, format!("{key} must be positive and finite (got {x})")));
        }
    }
    for (sp, n, key) in [(span(&g.nx), cfg.nx, "nx"), (span(&g.ny), cfg.ny, "ny")] {
        if n < 3 || n > u32::MAX as usize {
            return Err(lines.err(sp, format!("{key} must lie in [3, 2^32) (got {n})")));
        }
    }
    Ok(cfg)
}

fn resolve_kernel(
    lines: &Lines,
    raw: Option<Spanned<RawKernel>>,
    grid: &GridConfig,
) -> Result<KernelConfig, ConfigError> {
    let (k, _) = section(raw);
    let cfg = KernelConfig {
        sigma: value(&k.sigma, DEFAULT_SIGMA),
        cutoff_radii: value(&k.cutoff_radii, DEFAULT_CUTOFF_RADII),
        method: value(&k.method, NonlocalMethod::Auto),
    };
    let spec = cfg.spec();
    if let Err(e) = spec.validate() {
        let sp = match e {
            SetupError::CutoffTooSmall(_) => span(&k.cutoff_radii),
            _ => span(&k.sigma),
        };
        return Err(lines.err(sp, e.to_string()));
    }
    let extent = grid.lx.min(grid.ly);
    if spec.cutoff() > extent {
        let e = SetupError::StencilWiderThanDomain {
            radius: spec.cutoff(),
            extent,
        };
        return Err(lines.err(span(&k.sigma).or(span(&k.cutoff_radii)), e.to_string()));
    }
    Ok(cfg)
}

fn resolve_control(
    lines: &Lines,
    raw: Option<Spanned<RawControl>>,
) -> Result<ControlConfig, ConfigError> {
    let (c, _) = section(raw);
    let cfg = ControlConfig {
        dt: c.dt.as_ref().map(|s| *s.get_ref()),
        t_end: value(&c.t_end, DEFAULT_T_END),
        safety: value(&c.safety, DEFAULT_SAFETY),
        snapshot_stride: value(&c.snapshot_stride, DEFAULT_SNAPSHOT_STRIDE),
    };
    if let Some(dt) = cfg.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(lines.err(
                span(&c.dt),
                format!("dt must be positive and finite (got {dt})"),
            ));
        }
    }
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(lines.err(
            span(&c.t_end),
            format!("t_end must be nonnegative and finite (got {})", cfg.t_end),
        ));
    }
    if !(cfg.safety > 0.0 && cfg.safety <= 1.0) {
        return Err(lines.err(
            span(&c.safety),
            format!("safety must lie in (0, 1] (got {})", cfg.safety),
        ));
    }
    if cfg.snapshot_stride == 0 {
        return Err(lines.err(
            span(&c.snapshot_stride),
            "snapshot_stride must be at least 1",
        ));
    }
    Ok(cfg)
}

fn resolve_initial(
    lines: &Lines,
    raw: Option<Spanned<RawInitial>>,
) -> Result<InitialCondition, ConfigError> {
    let (r, sec) = section(raw);
    let kind = value(&r.kind, "paper_formulas".to_string());
    let reject = |present: &[(bool, Option<Range<usize>>, &str)]| -> Result<(), ConfigError> {
        match present.iter().find(|(p, _, _)| *p) {
            Some((_, sp, key)) => Err(lines.err(
                sp.clone(),
                format!("key {key:?} does not apply to initial kind {kind:?}"),
            )),
            None => Ok(()),
        }
    };
    let noise_keys = [
        (r.amplitude.is_some(), span(&r.amplitude), "amplitude"),
        (r.seed.is_some(), span(&r.seed), "seed"),
        (r.base_n.is_some(), span(&r.base_n), "base_n"),
        (r.base_w.is_some(), span(&r.base_w), "base_w"),
    ];
    let file_keys = [
        (r.n_path.is_some(), span(&r.n_path), "n_path"),
        (r.w_path.is_some(), span(&r.w_path), "w_path"),
    ];
    match kind.as_str() {
        "paper_formulas" => {
            reject(&noise_keys)?;
            reject(&file_keys)?;
            Ok(InitialCondition::ReferenceFormulas)
        }
        "uniform_plus_noise" => {
            reject(&file_keys)?;
            let amplitude = value(&r.amplitude, 0.0);
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(lines.err(
                    span(&r.amplitude),
                    format!("amplitude must be nonnegative and finite (got {amplitude})"),
                ));
            }
            for (v, sp, key) in [(&r.base_n, span(&r.base_n), "base_n"), (&r.base_w, span(&r.base_w), "base_w")] {
                if let Some(x) = v.as_ref().map(|s| *s.get_ref()) {
                    if !(x >= 0.0 && x.is_finite()) {
                        return Err(lines.err(sp, format!("{key} must be nonnegative and finite (got {x})")));
                    }
                }
            }
            let seed = value(&r.seed, 0);
            if seed > i64::MAX as u64 {
                return Err(lines.err(span(&r.seed), "seed must fit in a signed 64-bit integer"));
            }
            Ok(InitialCondition::UniformPlusNoise {
                amplitude,
                seed,
                base_n: r.base_n.map(|s| s.into_inner()),
                base_w: r.base_w.map(|s| s.into_inner()),
            })
        }
        "from_file" => {
            reject(&noise_keys)?;
            let n_path = r.n_path.map(|s| s.into_inner());
            let w_path = r.w_path.map(|s| s.into_inner());
            match (n_path, w_path) {
                (Some(n_path), Some(w_path)) => Ok(InitialCondition::FromFile { n_path, w_path }),
                _ => Err(lines.err(
                    span(&r.kind).or(sec),
                    "initial kind \"from_file\" needs both n_path and w_path",
                )),
            }
        }
        other => Err(lines.err(
            span(&r.kind),
            format!(
                "unknown initial kind {other:?}; expected paper_formulas, uniform_plus_noise or from_file"
            ),
        )),
    }
}

fn resolve_output(
    lines: &Lines,
    raw: Option<Spanned<RawOutput>>,
) -> Result<OutputConfig, ConfigError> {
    let (o, _) = section(raw);
    let dir = value(&o.dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
    let formats = match o.formats {
        None => vec![OutputFormat::Csv, OutputFormat::Pgm],
        Some(list) => {
            let mut out = Vec::new();
            for item in list.into_inner() {
                let sp = item.span();
                let name = item.into_inner();
                let fmt = OutputFormat::parse(&name).ok_or_else(|| {
                    lines.err(
                        Some(sp.clone()),
                        format!("unknown output format {name:?}; expected csv, pgm or raw"),
                    )
                })?;
                if out.contains(&fmt) {
                    return Err(lines.err(Some(sp), format!("output format {name:?} listed twice")));
                }
                out.push(fmt);
            }
            out
        }
    };
    Ok(OutputConfig { dir, formats })
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn path_string(p: &std::path::Path) -> String {
    toml_string(&p.to_string_lossy())
}

impl RunConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, SetupError> {
        self.grid.spec()
    }

    /// Renders a document that [`parse_config`] maps back to `self`.
    pub fn render(&self) -> String {
        let m = &self.model;
        let g = &self.grid;
        let k = &self.kernel;
        let c = &self.control;
        let mut s = String::new();
        let method = match k.method {
            NonlocalMethod::Direct => "direct",
            NonlocalMethod::Fft => "fft",
            NonlocalMethod::Auto => "auto",
        };
        let _ = writeln!(s, "[model]\nmode = \"{}\"", m.mode);
        let _ = writeln!(
            s,
            "d1 = {:?}\nd2 = {:?}\nv = {:?}\na = {:?}\nalpha = {:?}\n",
            m.d1, m.d2, m.v, m.a, m.alpha
        );
        let _ = writeln!(
            s,
            "[grid]\nlx = {:?}\nly = {:?}\nnx = {}\nny = {}\n",
            g.lx, g.ly, g.nx, g.ny
        );
        let _ = writeln!(
            s,
            "[kernel]\nsigma = {:?}\ncutoff_radii = {:?}\nmethod = \"{method}\"\n",
            k.sigma, k.cutoff_radii
        );
        s.push_str("[control]\n");
        if let Some(dt) = c.dt {
            let _ = writeln!(s, "dt = {dt:?}");
        }
        let _ = writeln!(
            s,
            "t_end = {:?}\nsafety = {:?}\nsnapshot_stride = {}\n",
            c.t_end, c.safety, c.snapshot_stride
        );
        s.push_str("[initial]\n");
        match &self.initial {
            InitialCondition::ReferenceFormulas => s.push_str("kind = \"paper_formulas\"\n"),
            InitialCondition::UniformPlusNoise {
                amplitude,
                seed,
                base_n,
                base_w,
            } => {
                let _ = writeln!(
                    s,
                    "kind = \"uniform_plus_noise\"\namplitude = {amplitude:?}\nseed = {seed}"
                );
                if let Some(b) = base_n {
                    let _ = writeln!(s, "base_n = {b:?}");
                }
                if let Some(b) = base_w {
                    let _ = writeln!(s, "base_w = {b:?}");
                }
            }
            InitialCondition::FromFile { n_path, w_path } => {
                let _ = writeln!(
                    s,
                    "kind = \"from_file\"\nn_path = {}\nw_path = {}",
                    path_string(n_path),
                    path_string(w_path)
                );
            }
        }
        let formats: Vec<String> = self
            .output
            .formats
            .iter()
            .map(|f| format!("\"{}\"", f.extension()))
            .collect();
        let _ = writeln!(
            s,
            "\n[output]\ndir = {}\nformats = [{}]",
            path_string(&self.output.dir),
            formats.join(", ")
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_setup() {
        let c = parse_config("").unwrap();
        assert_eq!(c.model, ModelParams::reference_nonlocal());
        assert_eq!(
            c.grid,
            GridConfig {
                lx: 20.0,
                ly: 20.0,
                nx: 150,
                ny: 150
            }
        );
        assert_eq!(c.kernel.sigma, 1.0);
        assert_eq!(c.kernel.cutoff_radii, 4.0);
        assert_eq!(c.control.t_end, 200.0);
        assert_eq!(c.control.dt, None);
        assert_eq!(c.initial, InitialCondition::ReferenceFormulas);
        assert_eq!(c.output.formats, [OutputFormat::Csv, OutputFormat::Pgm]);
    }

    #[test]
    fn local_mode_presets_zero_water_diffusion() {
        let c = parse_config("[model]\nmode = \"local\"\n").unwrap();
        assert_eq!(c.model.d2, 0.0);
        assert_eq!(c.model.mode, ModelMode::Local);
        let c = parse_config("[model]\nmode = \"local\"\nd2 = 0.01\n").unwrap();
        assert_eq!(c.model.d2, 0.01);
    }

    #[test]
    fn equal_diffusivities_are_rejected_on_their_line() {
        let e = parse_config("[model]\nd1 = 0.01\nd2 = 0.01\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("(D)"), "{e}");
    }

    #[test]
    fn unknown_keys_and_type_errors_are_line_anchored() {
        let e = parse_config("[grid]\nlx = 20.0\nnz = 4\n").unwrap_err();
        assert_eq!(e.line, 3, "{e}");
        assert!(e.message.contains("nz"), "{e}");

        let e = parse_config("[grid]\n\nnx = \"many\"\n").unwrap_err();
        assert_eq!(e.line, 3, "{e}");

        let e = parse_config("[modle]\n").unwrap_err();
        assert_eq!(e.line, 1, "{e}");

        let e = parse_config("[model]\nmode = \"semi\"\n").unwrap_err();
        assert_eq!(e.line, 2, "{e}");
    }

    #[test]
    fn constraint_errors_are_distinct() {
        let cases = [
            ("[model]\n\nalpha = -1.0\n", 3, "alpha"),
            ("[grid]\nnx = 2\n", 2, "nx"),
            ("[grid]\nly = 0.0\n", 2, "ly"),
            ("[kernel]\nsigma = 6.0\n", 2, "exceeds"),
            ("[kernel]\ncutoff_radii = 0.5\n", 2, "cutoff"),
            ("[control]\nsafety = 1.5\n", 2, "safety"),
            ("[control]\ndt = 0.0\n", 2, "dt"),
            ("[control]\nsnapshot_stride = 0\n", 2, "snapshot_stride"),
            ("[initial]\nkind = \"sketch\"\n", 2, "unknown initial kind"),
            ("[initial]\namplitude = 0.1\n", 2, "does not apply"),
            (
                "[initial]\nkind = \"from_file\"\nn_path = \"a\"\n",
                2,
                "w_path",
            ),
            ("[output]\nformats = [\"csv\", \"png\"]\n", 2, "png"),
            ("[output]\nformats = [\"csv\", \"csv\"]\n", 2, "twice"),
        ];
        for (text, line, needle) in cases {
            let e = parse_config(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
            assert!(e.message.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    fn integers_are_accepted_for_reals() {
        let c = parse_config("[grid]\nlx = 10\nly = 10\n[model]\nv = 0\n").unwrap();
        assert_eq!(c.grid.lx, 10.0);
        assert_eq!(c.model.v, 0.0);
    }

    #[test]
    fn render_round_trips_variants() {
        let mut c = RunConfig::default();
        assert_eq!(parse_config(&c.render()).unwrap(), c);
        c.control.dt = Some(1e-7);
        c.initial = InitialCondition::UniformPlusNoise {
            amplitude: 0.01,
            seed: 7,
            base_n: Some(3.0),
            base_w: None,
        };
        c.output.formats = vec![OutputFormat::Raw];
        assert_eq!(parse_config(&c.render()).unwrap(), c);
        c.initial = InitialCondition::FromFile {
            n_path: "dir with \"quotes\"/n.raw".into(),
            w_path: "w.raw".into(),
        };
        c.output.formats.clear();
        assert_eq!(parse_config(&c.render()).unwrap(), c);
    }
}
