//! Run configuration: TOML parsing, defaults and validation.
//!
//! Every section is optional. Missing values take the defaults below; the
//! resolved form is what gets written to the metadata sidecar.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use dephasing_core::env_info::FragmentSpec;
use dephasing_core::witnesses::Outcome;
use dephasing_core::{BathParams, SystemParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Cells allowed in one sweep unless `sweep.max_cells` says otherwise.
pub const DEFAULT_MAX_CELLS: u64 = 1_000_000;
pub const DEFAULT_T_STEPS: usize = 201;

/// Largest deviation of `|a|^2 + |b|^2` from 1 that is silently repaired.
const RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Decoherence,
    LeeYang,
    TraceDistance,
    Cpf,
    Pip,
    Sbs,
    Purity,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Decoherence,
        Analysis::LeeYang,
        Analysis::TraceDistance,
        Analysis::Cpf,
        Analysis::Pip,
        Analysis::Sbs,
        Analysis::Purity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Decoherence => "decoherence",
            Analysis::LeeYang => "lee-yang",
            Analysis::TraceDistance => "trace-distance",
            Analysis::Cpf => "cpf",
            Analysis::Pip => "pip",
            Analysis::Sbs => "sbs",
            Analysis::Purity => "purity",
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::config("analysis", format!("unknown analysis {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::config(
                "output.format",
                format!("expected \"csv\" or \"json\", got {s:?}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpfOutcome {
    #[default]
    Plus,
    Minus,
}

impl From<CpfOutcome> for Outcome {
    fn from(o: CpfOutcome) -> Self {
        match o {
            CpfOutcome::Plus => Outcome::Plus,
            CpfOutcome::Minus => Outcome::Minus,
        }
    }
}

// Raw file layout. Everything optional, unknown keys rejected.

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub analysis: Option<String>,
    #[serde(default)]
    pub bath: RawBath,
    #[serde(default)]
    pub system: RawSystem,
    #[serde(default)]
    pub grid: RawGrid,
    #[serde(default)]
    pub fragment: RawFragment,
    #[serde(default)]
    pub cpf: RawCpf,
    #[serde(default)]
    pub sweep: RawSweep,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBath {
    pub j: Option<f64>,
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub n: Option<i64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    pub alpha: Option<f64>,
    pub a_re: Option<f64>,
    pub a_im: Option<f64>,
    pub b_re: Option<f64>,
    pub b_im: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_steps: Option<i64>,
    pub times: Option<Vec<f64>>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub s_steps: Option<i64>,
    pub betas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFragment {
    pub size: Option<i64>,
    pub fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCpf {
    pub outcome: Option<CpfOutcome>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub n: Option<Vec<i64>>,
    pub j: Option<Vec<f64>>,
    pub h: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub max_cells: Option<i64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<String>,
    pub format: Option<String>,
}

/// Parses TOML text without applying defaults or validation.
pub fn parse_raw(text: &str) -> CliResult<RawConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {}", e.message())))
}

/// Parses and validates a configuration file's contents.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    RunConfig::resolve(parse_raw(text)?)
}

// Resolved configuration.

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BathSection {
    pub j: f64,
    pub h: f64,
    pub beta: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSection {
    pub alpha: f64,
    pub a_re: f64,
    pub a_im: f64,
    pub b_re: f64,
    pub b_im: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub t_min: f64,
    /// `None` means one recurrence period `pi / (2 alpha)`, resolved per cell.
    pub t_max: Option<f64>,
    pub t_steps: usize,
    /// Explicit time list; overrides the uniform grid.
    pub times: Option<Vec<f64>>,
    /// Second-interval grid for `cpf`; `None` reuses the time grid.
    pub s_grid: Option<(f64, f64, usize)>,
    pub betas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FragmentSection {
    Size(usize),
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSection {
    pub n: Vec<usize>,
    pub j: Vec<f64>,
    pub h: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub max_cells: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub analysis: Option<Analysis>,
    pub bath: BathSection,
    pub system: SystemSection,
    pub grid: GridSection,
    pub fragment: FragmentSection,
    pub cpf_outcome: CpfOutcome,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::resolve(RawConfig::default()).expect("defaults are valid")
    }
}

fn finite(field: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::config(field, format!("must be finite (got {x})")))
    }
}

fn count(field: &str, x: i64, min: i64) -> CliResult<usize> {
    if x < min {
        return Err(CliError::config(
            field,
            format!("must be at least {min} (got {x})"),
        ));
    }
    usize::try_from(x).map_err(|_| CliError::config(field, format!("out of range (got {x})")))
}

fn check_bath(field: &str, j: f64, h: f64, beta: f64, n: usize) -> CliResult<()> {
    BathParams::new(j, h, beta, n)
        .map(|_| ())
        .map_err(|e| CliError::config(field, e.to_string()))
}

fn check_alpha(field: &str, alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(
            field,
            format!("must lie in (0, 1] (got {alpha})"),
        ))
    }
}

fn nonempty<T>(field: &str, v: Vec<T>) -> CliResult<Vec<T>> {
    if v.is_empty() {
        Err(CliError::config(field, "must not be empty"))
    } else {
        Ok(v)
    }
}

impl RunConfig {
    pub fn resolve(raw: RawConfig) -> CliResult<Self> {
        let analysis = raw.analysis.as_deref().map(str::parse).transpose()?;

        let rb = raw.bath;
        let bath = BathSection {
            j: finite("bath.j", rb.j.unwrap_or(1.0))?,
            h: finite("bath.h", rb.h.unwrap_or(0.1))?,
            beta: finite("bath.beta", rb.beta.unwrap_or(1.0))?,
            n: count("bath.n", rb.n.unwrap_or(10), 1)?,
        };
        check_bath("bath", bath.j, bath.h, bath.beta, bath.n)?;

        let system = resolve_system(raw.system)?;
        let grid = resolve_grid(raw.grid, system.alpha)?;

        let fragment = match (raw.fragment.size, raw.fragment.fraction) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "fragment",
                    "give either size or fraction, not both",
                ))
            }
            (Some(k), None) => FragmentSection::Size(count("fragment.size", k, 0)?),
            (None, Some(f)) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(CliError::config(
                        "fragment.fraction",
                        format!("must lie in [0, 1] (got {f})"),
                    ));
                }
                FragmentSection::Fraction(f)
            }
            (None, None) => FragmentSection::Fraction(0.5),
        };

        let rs = raw.sweep;
        let sweep = SweepSection {
            n: match rs.n {
                Some(v) => nonempty("sweep.n", v)?
                    .into_iter()
                    .map(|n| count("sweep.n", n, 1))
                    .collect::<CliResult<_>>()?,
                None => vec![bath.n],
            },
            j: finite_list("sweep.j", rs.j, bath.j)?,
            h: finite_list("sweep.h", rs.h, bath.h)?,
            beta: finite_list("sweep.beta", rs.beta, bath.beta)?,
            alpha: finite_list("sweep.alpha", rs.alpha, system.alpha)?,
            max_cells: match rs.max_cells {
                Some(c) => count("sweep.max_cells", c, 1)? as u64,
                None => DEFAULT_MAX_CELLS,
            },
        };
        for &a in &sweep.alpha {
            check_alpha("sweep.alpha", a)?;
            if grid.t_max.is_none() && grid.times.is_none() && grid.t_min >= recurrence_time(a) {
                return Err(CliError::config(
                    "grid.t_min",
                    format!(
                        "must be below the default t_max = pi / (2 alpha) = {}",
                        recurrence_time(a)
                    ),
                ));
            }
        }
        for &b in &sweep.beta {
            if b < 0.0 {
                return Err(CliError::config(
                    "sweep.beta",
                    format!("must be non-negative (got {b})"),
                ));
            }
        }

        let output = OutputSection {
            path: raw.output.path,
            format: raw
                .output
                .format
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or_default(),
        };

        Ok(RunConfig {
            analysis,
            bath,
            system,
            grid,
            fragment,
            cpf_outcome: raw.cpf.outcome.unwrap_or_default(),
            sweep,
            output,
        })
    }

    pub fn bath_params(&self) -> BathParams {
        let b = &self.bath;
        BathParams::new(b.j, b.h, b.beta, b.n).expect("validated on resolve")
    }

    pub fn system_params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams::new(
            s.alpha,
            C64::new(s.a_re, s.a_im),
            C64::new(s.b_re, s.b_im),
            s.omega,
        )
        .expect("validated on resolve")
    }

    pub fn t_max(&self) -> f64 {
        self.grid
            .t_max
            .unwrap_or_else(|| recurrence_time(self.system.alpha))
    }

    /// The time grid for this configuration.
    pub fn times(&self) -> Vec<f64> {
        match &self.grid.times {
            Some(t) => t.clone(),
            None => dephasing_core::witnesses::uniform_grid(self.grid.t_min, self.t_max(), self.grid.t_steps),
        }
    }

    /// The `s` grid for `cpf`.
    pub fn s_values(&self) -> Vec<f64> {
        match self.grid.s_grid {
            Some((lo, hi, n)) => dephasing_core::witnesses::uniform_grid(lo, hi, n),
            None => self.times(),
        }
    }

    /// Inverse temperatures for `pip` and `purity`.
    pub fn betas(&self) -> Vec<f64> {
        self.grid.betas.clone().unwrap_or_else(|| vec![self.bath.beta])
    }

    pub fn fragment_spec(&self, n: usize) -> CliResult<FragmentSpec> {
        match self.fragment {
            FragmentSection::Size(k) => FragmentSpec::leading(k, n),
            FragmentSection::Fraction(f) => FragmentSpec::from_fraction(f, n),
        }
        .map_err(|e| CliError::config("fragment", e.to_string()))
    }
}

/// `pi / (2 alpha)`: the period of the decoherence function.
pub fn recurrence_time(alpha: f64) -> f64 {
    PI / (2.0 * alpha)
}

fn finite_list(field: &str, v: Option<Vec<f64>>, default: f64) -> CliResult<Vec<f64>> {
    match v {
        Some(v) => nonempty(field, v)?
            .into_iter()
            .map(|x| finite(field, x))
            .collect(),
        None => Ok(vec![default]),
    }
}

fn resolve_system(rs: RawSystem) -> CliResult<SystemSection> {
    let alpha = finite("system.alpha", rs.alpha.unwrap_or(0.1))?;
    check_alpha("system.alpha", alpha)?;
    let omega = finite("system.omega", rs.omega.unwrap_or(0.0))?;
    let (a_re, a_im, b_re, b_im) = match (rs.a_re, rs.a_im, rs.b_re, rs.b_im) {
        (None, None, None, None) => (FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0),
        (ar, ai, br, bi) => (
            finite("system.a_re", ar.unwrap_or(0.0))?,
            finite("system.a_im", ai.unwrap_or(0.0))?,
            finite("system.b_re", br.unwrap_or(0.0))?,
            finite("system.b_im", bi.unwrap_or(0.0))?,
        ),
    };
    let norm2 = a_re * a_re + a_im * a_im + b_re * b_re + b_im * b_im;
    let (a_re, a_im, b_re, b_im) = if (norm2 - 1.0).abs() <= 1e-12 {
        (a_re, a_im, b_re, b_im)
    } else if (norm2 - 1.0).abs() <= RENORMALIZE_TOL {
        log::warn!("system: |a|^2 + |b|^2 = {norm2}; renormalizing amplitudes");
        let s = norm2.sqrt();
        (a_re / s, a_im / s, b_re / s, b_im / s)
    } else {
        return Err(CliError::config(
            "system",
            format!("amplitudes must satisfy |a|^2 + |b|^2 = 1 (got {norm2})"),
        ));
    };
    let sec = SystemSection {
        alpha,
        a_re,
        a_im,
        b_re,
        b_im,
        omega,
    };
    SystemParams::new(alpha, C64::new(a_re, a_im), C64::new(b_re, b_im), omega)
        .map_err(|e| CliError::config("system", e.to_string()))?;
    Ok(sec)
}

fn resolve_grid(rg: RawGrid, alpha: f64) -> CliResult<GridSection> {
    let t_min = finite("grid.t_min", rg.t_min.unwrap_or(0.0))?;
    if t_min < 0.0 {
        return Err(CliError::config(
            "grid.t_min",
            format!("must be non-negative (got {t_min})"),
        ));
    }
    let t_max = rg.t_max.map(|t| finite("grid.t_max", t)).transpose()?;
    if let Some(t) = t_max {
        if t <= t_min {
            return Err(CliError::config(
                "grid.t_max",
                format!("must exceed t_min = {t_min} (got {t})"),
            ));
        }
    } else if t_min >= recurrence_time(alpha) {
        return Err(CliError::config(
            "grid.t_min",
            format!(
                "must be below the default t_max = pi / (2 alpha) = {}",
                recurrence_time(alpha)
            ),
        ));
    }
    let t_steps = match rg.t_steps {
        Some(k) => count("grid.t_steps", k, 2)?,
        None => DEFAULT_T_STEPS,
    };
    let times = match rg.times {
        Some(v) => {
            let v = nonempty("grid.times", v)?;
            for &t in &v {
                if !t.is_finite() || t < 0.0 {
                    return Err(CliError::config(
                        "grid.times",
                        format!("entries must be finite and non-negative (got {t})"),
                    ));
                }
            }
            Some(v)
        }
        None => None,
    };
    let s_grid = match (rg.s_min, rg.s_max, rg.s_steps) {
        (None, None, None) => None,
        (lo, hi, k) => {
            let lo = finite("grid.s_min", lo.unwrap_or(0.0))?;
            if lo < 0.0 {
                return Err(CliError::config(
                    "grid.s_min",
                    format!("must be non-negative (got {lo})"),
                ));
            }
            let hi = match hi {
                Some(h) => finite("grid.s_max", h)?,
                None => t_max.unwrap_or_else(|| recurrence_time(alpha)),
            };
            if hi <= lo {
                return Err(CliError::config(
                    "grid.s_max",
                    format!("must exceed s_min = {lo} (got {hi})"),
                ));
            }
            let k = match k {
                Some(k) => count("grid.s_steps", k, 2)?,
                None => t_steps,
            };
            Some((lo, hi, k))
        }
    };
    let betas = match rg.betas {
        Some(v) => {
            let v = nonempty("grid.betas", v)?;
            for &b in &v {
                if !b.is_finite() || b < 0.0 {
                    return Err(CliError::config(
                        "grid.betas",
                        format!("entries must be finite and non-negative (got {b})"),
                    ));
                }
            }
            Some(v)
        }
        None => None,
    };
    Ok(GridSection {
        t_min,
        t_max,
        t_steps,
        times,
        s_grid,
        betas,
    })
}
