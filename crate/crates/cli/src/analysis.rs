//! One function per analysis, each turning a resolved configuration into a
//! [`Table`] plus a small JSON summary, and the Cartesian parameter sweep.

use std::f64::consts::FRAC_1_SQRT_2;

use dephasing_core::bath::bath_purity;
use dephasing_core::dephasing::decoherence_log;
use dephasing_core::env_info::{joint_state, pip_curve, sbs_diagnostics};
use dephasing_core::lee_yang::{zeros_interacting, zeros_numeric, LeeYangZero, MAX_ENUMERATION_SITES};
use dephasing_core::witnesses::{blp_witness_series, cpf_formula, MeasurementOracle, MAX_CPF_ORACLE_SITES};
use dephasing_core::{QubitDensity, SystemParams};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Analysis, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Column names per analysis; the CSV header is exactly this list.
pub fn columns(analysis: Analysis) -> &'static [&'static str] {
    match analysis {
        Analysis::Decoherence => &["t", "re_gamma", "im_gamma", "abs_gamma", "rate"],
        Analysis::LeeYang => &[
            "source",
            "index",
            "re_z",
            "im_z",
            "modulus",
            "theta",
            "multiplicity",
            "critical_time",
        ],
        Analysis::TraceDistance => &["t", "D", "sigma"],
        Analysis::Cpf => &["t", "s", "cpf_formula", "cpf_oracle"],
        Analysis::Pip => &["beta", "t", "f", "I_bits", "S_system_bits"],
        Analysis::Sbs => &["t", "coherence_norm", "fidelity", "sbs_flag"],
        Analysis::Purity => &["beta", "purity"],
    }
}

/// Leading columns of a sweep table.
pub const SWEEP_COLUMNS: [&str; 5] = ["n", "j", "h", "beta", "alpha"];

#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub summary: Map<String, Value>,
}

pub fn run_analysis(analysis: Analysis, cfg: &RunConfig) -> CliResult<Report> {
    let mut table = Table::new(columns(analysis));
    let mut summary = Map::new();
    match analysis {
        Analysis::Decoherence => decoherence(cfg, &mut table, &mut summary)?,
        Analysis::LeeYang => lee_yang(cfg, &mut table, &mut summary)?,
        Analysis::TraceDistance => trace_distance(cfg, &mut table, &mut summary)?,
        Analysis::Cpf => cpf(cfg, &mut table, &mut summary)?,
        Analysis::Pip => pip(cfg, &mut table, &mut summary)?,
        Analysis::Sbs => sbs(cfg, &mut table, &mut summary)?,
        Analysis::Purity => purity(cfg, &mut table, &mut summary)?,
    }
    summary.insert("rows".into(), json!(table.rows.len()));
    Ok(Report { table, summary })
}

fn max_finite(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn decoherence(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let bath = cfg.bath_params();
    let alpha = cfg.system.alpha;
    let times = cfg.times();
    table.rows = times
        .par_iter()
        .map(|&t| {
            let g = decoherence_log(&bath, alpha, t);
            let z = g.to_complex();
            let rate = if g.is_zero() {
                f64::INFINITY
            } else {
                (-g.ln_abs).max(0.0)
            };
            vec![
                Cell::F(t),
                Cell::F(z.re),
                Cell::F(z.im),
                Cell::F(g.abs()),
                Cell::F(rate),
            ]
        })
        .collect();
    let abs: Vec<f64> = table.rows.iter().map(|r| float(&r[3])).collect();
    summary.insert("t_max".into(), json!(cfg.t_max()));
    summary.insert(
        "min_abs_gamma".into(),
        json!(abs.iter().cloned().fold(1.0, f64::min)),
    );
    summary.insert(
        "exact_zeros".into(),
        json!(abs.iter().filter(|&&a| a == 0.0).count()),
    );
    Ok(())
}

fn float(c: &Cell) -> f64 {
    match c {
        Cell::F(x) => *x,
        _ => f64::NAN,
    }
}

fn lee_yang(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let bath = cfg.bath_params();
    let alpha = cfg.system.alpha;
    let real_times = bath.h() == 0.0 || bath.beta() == 0.0;
    let mut push = |source: &str, zeros: &[LeeYangZero]| {
        for z in zeros {
            let modulus = z.value.norm();
            let t = if real_times && (modulus - 1.0).abs() <= 1e-8 {
                Cell::F(z.angle / (4.0 * alpha))
            } else {
                Cell::Empty
            };
            table.rows.push(vec![
                Cell::S(source.into()),
                Cell::I(z.index as i64),
                Cell::F(z.value.re),
                Cell::F(z.value.im),
                Cell::F(modulus),
                Cell::F(z.angle),
                Cell::I(z.multiplicity as i64),
                t,
            ]);
        }
    };
    let mut any = false;
    if bath.j() > 0.0 && bath.beta() > 0.0 {
        let zeros = zeros_interacting(&bath)?;
        summary.insert("closed_form_zeros".into(), json!(zeros.len()));
        push("closed_form", &zeros);
        any = true;
    }
    if bath.n() <= MAX_ENUMERATION_SITES {
        let zeros = zeros_numeric(&bath)?;
        summary.insert("numeric_zeros".into(), json!(zeros.len()));
        push("numeric", &zeros);
        any = true;
    }
    if !any {
        return Err(CliError::config(
            "bath",
            format!(
                "no zero finder applies: closed form needs J > 0 and beta > 0, enumeration needs n <= {MAX_ENUMERATION_SITES}"
            ),
        ));
    }
    Ok(())
}

fn trace_distance(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let bath = cfg.bath_params();
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let plus = QubitDensity::pure(h, h);
    let minus = QubitDensity::pure(h, -h);
    let w = blp_witness_series((&plus, &minus), &bath, cfg.system.alpha, &cfg.times())?;
    table.rows = (0..w.times.len())
        .map(|i| vec![Cell::F(w.times[i]), Cell::F(w.values[i]), Cell::F(w.rates[i])])
        .collect();
    summary.insert("blp_measure".into(), json!(w.blp_measure));
    summary.insert(
        "min_distance".into(),
        json!(w.values.iter().cloned().fold(1.0, f64::min)),
    );
    summary.insert("revival".into(), json!(w.has_revival()));
    Ok(())
}

fn cpf(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let bath = cfg.bath_params();
    let alpha = cfg.system.alpha;
    let outcome = cfg.cpf_outcome.into();
    // the oracle prepares |0>, the state for which the formula is exact
    let oracle = if bath.n() <= MAX_CPF_ORACLE_SITES {
        let zero = SystemParams::new(alpha, C64::new(1.0, 0.0), C64::new(0.0, 0.0), cfg.system.omega)?;
        Some(MeasurementOracle::new(&zero, &bath)?)
    } else {
        None
    };
    let s_values = cfg.s_values();
    let blocks = cfg
        .times()
        .par_iter()
        .map(|&t| {
            s_values
                .iter()
                .map(|&s| {
                    let f = cpf_formula(&bath, alpha, t, s)?.value_formula;
                    let o = match &oracle {
                        Some(o) => Cell::F(o.correlator(t, s, outcome)?),
                        None => Cell::Empty,
                    };
                    Ok(vec![Cell::F(t), Cell::F(s), Cell::F(f), o])
                })
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    table.rows = blocks.into_iter().flatten().collect();
    summary.insert(
        "max_abs_cpf".into(),
        json!(max_finite(table.rows.iter().map(|r| float(&r[2]).abs()))),
    );
    summary.insert("oracle".into(), json!(oracle.is_some()));
    if oracle.is_some() {
        summary.insert(
            "max_formula_oracle_gap".into(),
            json!(max_finite(
                table.rows.iter().map(|r| (float(&r[2]) - float(&r[3])).abs())
            )),
        );
    }
    Ok(())
}

fn pip(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let base = cfg.bath_params();
    let sys = cfg.system_params();
    let times = cfg.times();
    let cells: Vec<(f64, f64)> = cfg
        .betas()
        .into_iter()
        .flat_map(|b| times.iter().map(move |&t| (b, t)))
        .collect();
    let curves = cells
        .par_iter()
        .map(|&(beta, t)| Ok((beta, t, pip_curve(&sys, &base.with_beta(beta)?, t)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut plateaus = 0;
    for (beta, t, c) in &curves {
        plateaus += c.has_plateau() as usize;
        for (f, i) in c.fractions.iter().zip(&c.informations) {
            table.rows.push(vec![
                Cell::F(*beta),
                Cell::F(*t),
                Cell::F(*f),
                Cell::F(*i),
                Cell::F(c.system_entropy),
            ]);
        }
    }
    summary.insert("curves".into(), json!(curves.len()));
    summary.insert("curves_with_plateau".into(), json!(plateaus));
    Ok(())
}

fn sbs(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let bath = cfg.bath_params();
    let sys = cfg.system_params();
    let frag = cfg.fragment_spec(bath.n())?;
    table.rows = cfg
        .times()
        .par_iter()
        .map(|&t| {
            let r = sbs_diagnostics(&joint_state(&sys, &bath, &frag, t)?, &sys);
            Ok(vec![
                Cell::F(t),
                Cell::F(r.coherence_trace_norm),
                Cell::F(r.conditional_fidelity),
                Cell::B(r.sbs),
            ])
        })
        .collect::<CliResult<_>>()?;
    summary.insert("fragment_sites".into(), json!(frag.len()));
    summary.insert(
        "sbs_points".into(),
        json!(table.rows.iter().filter(|r| r[3] == Cell::B(true)).count()),
    );
    Ok(())
}

fn purity(cfg: &RunConfig, table: &mut Table, summary: &mut Map<String, Value>) -> CliResult<()> {
    let base = cfg.bath_params();
    table.rows = cfg
        .betas()
        .into_iter()
        .map(|b| Ok(vec![Cell::F(b), Cell::F(bath_purity(&base.with_beta(b)?))]))
        .collect::<CliResult<_>>()?;
    summary.insert("floor".into(), json!(0.5f64.powi(base.n() as i32)));
    Ok(())
}

/// One parameter combination of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// Parameter combinations in output order (`alpha` varies fastest).
pub fn sweep_points(cfg: &RunConfig) -> Vec<SweepPoint> {
    let s = &cfg.sweep;
    let mut out = Vec::new();
    for &n in &s.n {
        for &j in &s.j {
            for &h in &s.h {
                for &beta in &s.beta {
                    for &alpha in &s.alpha {
                        out.push(SweepPoint { n, j, h, beta, alpha });
                    }
                }
            }
        }
    }
    out
}

/// Configuration of a single sweep point: the bath and coupling are
/// replaced and any `grid.betas` list is dropped.
pub fn point_config(cfg: &RunConfig, p: &SweepPoint) -> CliResult<RunConfig> {
    let mut c = cfg.clone();
    c.bath.n = p.n;
    c.bath.j = p.j;
    c.bath.h = p.h;
    c.bath.beta = p.beta;
    c.system.alpha = p.alpha;
    c.grid.betas = None;
    dephasing_core::BathParams::new(p.j, p.h, p.beta, p.n)
        .map_err(|e| CliError::config("sweep", e.to_string()))?;
    Ok(c)
}

/// Rows an analysis produces for one sweep point (an upper bound for
/// `lee-yang`).
pub fn cells_per_point(analysis: Analysis, cfg: &RunConfig) -> u64 {
    let nt = match &cfg.grid.times {
        Some(t) => t.len() as u64,
        None => cfg.grid.t_steps as u64,
    };
    let ns = match cfg.grid.s_grid {
        Some((_, _, k)) => k as u64,
        None => nt,
    };
    let n = cfg.bath.n as u64;
    match analysis {
        Analysis::Decoherence | Analysis::TraceDistance | Analysis::Sbs => nt,
        Analysis::Cpf => nt.saturating_mul(ns),
        Analysis::Pip => nt.saturating_mul(n + 1),
        Analysis::Purity => 1,
        Analysis::LeeYang => 2 * n,
    }
}

/// Cartesian sweep over `sweep.{n, j, h, beta, alpha}`. Points run in
/// parallel; rows come out in point order, each prefixed by the point's
/// parameters.
pub fn run_sweep(cfg: &RunConfig) -> CliResult<Report> {
    let analysis = cfg
        .analysis
        .ok_or_else(|| CliError::config("analysis", "a sweep needs an analysis selector"))?;
    let points = sweep_points(cfg);
    let configs = points
        .iter()
        .map(|p| point_config(cfg, p))
        .collect::<CliResult<Vec<_>>>()?;
    let total = configs
        .iter()
        .fold(0u64, |acc, c| acc.saturating_add(cells_per_point(analysis, c)));
    if total > cfg.sweep.max_cells {
        return Err(CliError::config(
            "sweep.max_cells",
            format!(
                "sweep has {total} cells, above the cap of {}",
                cfg.sweep.max_cells
            ),
        ));
    }
    let reports = configs
        .par_iter()
        .map(|c| run_analysis(analysis, c))
        .collect::<CliResult<Vec<_>>>()?;
    let mut cols: Vec<&str> = SWEEP_COLUMNS.to_vec();
    cols.extend_from_slice(columns(analysis));
    let mut table = Table::new(&cols);
    let mut per_point = Vec::new();
    for (p, r) in points.iter().zip(reports) {
        let prefix = [
            Cell::I(p.n as i64),
            Cell::F(p.j),
            Cell::F(p.h),
            Cell::F(p.beta),
            Cell::F(p.alpha),
        ];
        for row in r.table.rows {
            table.rows.push(prefix.iter().cloned().chain(row).collect());
        }
        per_point.push(json!({
            "n": p.n, "j": p.j, "h": p.h, "beta": p.beta, "alpha": p.alpha,
            "summary": Value::Object(r.summary),
        }));
    }
    let mut summary = Map::new();
    summary.insert("analysis".into(), json!(analysis.name()));
    summary.insert("points".into(), json!(points.len()));
    summary.insert("rows".into(), json!(table.rows.len()));
    summary.insert("per_point".into(), Value::Array(per_point));
    Ok(Report { table, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn decoherence_rows_cover_recurrence() {
        let cfg = parse_config("[grid]\nt_steps = 11").unwrap();
        let r = run_analysis(Analysis::Decoherence, &cfg).unwrap();
        assert_eq!(r.table.rows.len(), 11);
        assert_eq!(r.table.rows[0][0], Cell::F(0.0));
        assert_eq!(r.table.rows[0][3], Cell::F(1.0));
        assert_eq!(r.table.rows[10][0], Cell::F(cfg.t_max()));
        assert!((float(&r.table.rows[10][3]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pip_one_curve_per_beta() {
        let cfg =
            parse_config("[bath]\nn = 6\n[grid]\ntimes = [7.0]\nbetas = [0.1, 0.5, 1.0, 2.0, 4.0]").unwrap();
        let r = run_analysis(Analysis::Pip, &cfg).unwrap();
        assert_eq!(r.table.rows.len(), 5 * 7);
        assert_eq!(r.summary["curves"], json!(5));
        assert_eq!(r.table.rows[7][0], Cell::F(0.5));
    }

    #[test]
    fn lee_yang_sources() {
        let cfg = parse_config("[bath]\nn = 6\nh = 0.0").unwrap();
        let r = run_analysis(Analysis::LeeYang, &cfg).unwrap();
        let closed = r
            .table
            .rows
            .iter()
            .filter(|row| row[0] == Cell::S("closed_form".into()))
            .count();
        assert_eq!(closed, r.table.rows.len() - closed);
        assert!(r.table.rows.iter().all(|row| matches!(row[7], Cell::F(_))));
        let cfg = parse_config("[bath]\nn = 40\nj = 0.0").unwrap();
        assert_eq!(run_analysis(Analysis::LeeYang, &cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn cpf_oracle_column_matches_formula() {
        let cfg = parse_config("[bath]\nn = 8\n[grid]\nt_steps = 4\ns_steps = 3\ns_max = 4.0").unwrap();
        let r = run_analysis(Analysis::Cpf, &cfg).unwrap();
        assert_eq!(r.table.rows.len(), 12);
        assert!(r.summary["max_formula_oracle_gap"].as_f64().unwrap() < 1e-10);
        let cfg = parse_config("[bath]\nn = 30\n[grid]\nt_steps = 3").unwrap();
        let r = run_analysis(Analysis::Cpf, &cfg).unwrap();
        assert!(r.table.rows.iter().all(|row| row[3] == Cell::Empty));
    }

    #[test]
    fn single_point_sweep_equals_direct_run() {
        let text = "analysis = \"trace-distance\"\n[bath]\nn = 12\n[grid]\nt_steps = 9";
        let cfg = parse_config(text).unwrap();
        let direct = run_analysis(Analysis::TraceDistance, &cfg).unwrap();
        let sweep = run_sweep(&cfg).unwrap();
        assert_eq!(sweep.table.rows.len(), direct.table.rows.len());
        for (s, d) in sweep.table.rows.iter().zip(&direct.table.rows) {
            assert_eq!(&s[5..], &d[..]);
        }
    }

    #[test]
    fn sweep_order_and_cap() {
        let text = "analysis = \"purity\"\n[sweep]\nn = [4, 6]\nbeta = [0.1, 1.0, 4.0]";
        let r = run_sweep(&parse_config(text).unwrap()).unwrap();
        let keys: Vec<(Cell, Cell)> = r
            .table
            .rows
            .iter()
            .map(|row| (row[0].clone(), row[3].clone()))
            .collect();
        assert_eq!(keys[0], (Cell::I(4), Cell::F(0.1)));
        assert_eq!(keys[2], (Cell::I(4), Cell::F(4.0)));
        assert_eq!(keys[3], (Cell::I(6), Cell::F(0.1)));
        let capped = format!("{text}\nmax_cells = 5");
        let err = run_sweep(&parse_config(&capped).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sweep.max_cells"));
    }
}
