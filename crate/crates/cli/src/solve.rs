//! `solve`: the space- and time-nonlocal problems, the Abel equation and relaxation.

use std::path::{Path, PathBuf};

use clap::Args;
use invgamma::nonlocal_ops::{
    caputo_image, rl_image, solve_abel, solve_relaxation, solve_space_nonlocal, solve_time_nonlocal,
    space_nonlocal_residual, time_nonlocal_row, GridFn, NamedDatum, NonlocalProblemSpec, SpaceTimeField,
};
use invgamma::GammaParams;

use crate::config::{require_nonnegative, require_positive, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// One of: space-nonlocal, time-nonlocal, abel, relaxation.
    pub problem: String,
    /// Named datum: zero, indicator, ramp, xexp, expdecay, one-minus-exp, exp-diff.
    #[arg(long)]
    pub f: Option<String>,
    /// CSV datum with columns x,value on a uniform grid starting at 0.
    #[arg(long = "f-file")]
    pub f_file: Option<PathBuf>,
    /// Accept a datum that does not vanish at 0 (automatic for named data).
    #[arg(long)]
    pub relaxed: bool,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Space horizon.
    #[arg(long = "X")]
    pub space_horizon: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    pub time_horizon: Option<f64>,
    /// Keep every n-th time step in the output.
    #[arg(long)]
    pub every: Option<usize>,
    /// Keep every n-th space node in the output.
    #[arg(long = "x-every")]
    pub x_every: Option<usize>,
    /// Relaxation rate.
    #[arg(long)]
    pub c: Option<f64>,
    /// Add a column with the residual of the equation.
    #[arg(long)]
    pub residual: bool,
}

pub const PROBLEMS: [&str; 4] = ["space-nonlocal", "time-nonlocal", "abel", "relaxation"];

fn flag_or_config(cfg: &RunConfig, flag: bool, key: &str) -> Result<bool, CliError> {
    cfg.resolver.value(flag.then_some(true), key, false)
}

fn positive_count(key: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::Usage(format!("invalid value for `{key}`: must be >= 1")))
    } else {
        Ok(v)
    }
}

/// Reads `x,value` rows (header line, `#` comments) on a uniform grid starting at 0.
pub fn read_datum(path: &Path) -> Result<GridFn, CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("row {}: column {} is not a finite number", i + 1, j + 1)))
        };
        xs.push(num(0)?);
        vs.push(num(1)?);
    }
    if xs.len() < 3 {
        return Err(bad("a datum needs at least three rows".into()));
    }
    if xs[0].abs() > 1e-12 {
        return Err(bad(format!("the grid must start at x = 0, got {}", xs[0])));
    }
    let step = xs[1] - xs[0];
    if !(step > 0.0) {
        return Err(bad("x must increase".into()));
    }
    for (k, &x) in xs.iter().enumerate() {
        if (x - k as f64 * step).abs() > 1e-6 * step {
            return Err(bad(format!("the grid is not uniform at row {}", k + 1)));
        }
    }
    GridFn::new(step, vs).map_err(|e| bad(e.to_string()))
}

struct Datum {
    grid: GridFn,
    label: String,
    jumps_at_origin: bool,
}

fn datum(cfg: &RunConfig, args: &SolveArgs, default_dx: f64, default_x: f64) -> Result<Datum, CliError> {
    let r = &cfg.resolver;
    let name: Option<String> = r.optional(args.f.clone(), "f")?;
    let file: Option<PathBuf> = r.optional(args.f_file.clone(), "f-file")?;
    let dx = r.optional(args.dx, "dx")?.map(|v| require_positive("dx", v)).transpose()?;
    let horizon = r.optional(args.space_horizon, "X")?.map(|v| require_positive("X", v)).transpose()?;
    let d = match (name, file) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --f or --f-file, not both".into())),
        (None, None) => return Err(CliError::Usage("missing initial datum: give --f <name> or --f-file <csv>".into())),
        (Some(n), None) => {
            let named = NamedDatum::parse(&n).ok_or_else(|| {
                let names: Vec<&str> = NamedDatum::ALL.iter().map(|d| d.name()).collect();
                CliError::Usage(format!("unknown datum `{n}`; expected one of {}", names.join(", ")))
            })?;
            let dx = dx.unwrap_or(default_dx);
            let horizon = horizon.unwrap_or(default_x);
            if dx * 2.0 > horizon {
                return Err(CliError::Usage(format!("invalid value for `dx`: {dx} is too coarse for X = {horizon}")));
            }
            let grid = named.sample(dx, horizon).map_err(|e| CliError::Usage(e.to_string()))?;
            Datum {
                jumps_at_origin: named.eval(0.0) != 0.0,
                grid,
                label: named.name().to_string(),
            }
        }
        (None, Some(path)) => {
            let mut grid = read_datum(&path)?;
            if let Some(dx) = dx {
                if (dx - grid.step).abs() > 1e-9 * grid.step {
                    return Err(CliError::Usage(format!("--dx {dx} differs from the datum file step {}", grid.step)));
                }
            }
            if let Some(x) = horizon {
                if x > grid.horizon() * (1.0 + 1e-12) {
                    return Err(CliError::Usage(format!("--X {x} exceeds the datum file range {}", grid.horizon())));
                }
                let n = (x / grid.step).round() as usize + 1;
                grid.values.truncate(n.max(3));
            }
            Datum {
                jumps_at_origin: false,
                grid,
                label: path.display().to_string(),
            }
        }
    };
    let relaxed = flag_or_config(cfg, args.relaxed, "relaxed")? || d.jumps_at_origin;
    if !relaxed && d.grid.values[0].abs() > 1e-12 {
        return Err(CliError::Usage(format!(
            "datum has f(0) = {}; pass --relaxed to allow a jump at the origin",
            d.grid.values[0]
        )));
    }
    Ok(Datum {
        jumps_at_origin: relaxed,
        ..d
    })
}

struct TimeGrid {
    dt: f64,
    horizon: f64,
    every: usize,
}

fn time_grid(cfg: &RunConfig, args: &SolveArgs, dt: f64, horizon: f64, every: usize) -> Result<TimeGrid, CliError> {
    let r = &cfg.resolver;
    let dt = require_positive("dt", r.value(args.dt, "dt", dt)?)?;
    let horizon = require_positive("T", r.value(args.time_horizon, "T", horizon)?)?;
    if dt > horizon {
        return Err(CliError::Usage(format!("invalid value for `dt`: {dt} exceeds T = {horizon}")));
    }
    let every = positive_count("every", r.value(args.every, "every", every)?)?;
    Ok(TimeGrid { dt, horizon, every })
}

fn x_every(cfg: &RunConfig, args: &SolveArgs) -> Result<usize, CliError> {
    positive_count("x-every", cfg.resolver.value(args.x_every, "x-every", 1)?)
}

fn field_table(
    cfg: &RunConfig,
    field: &SpaceTimeField,
    stride: usize,
    residual: Option<&[Vec<f64>]>,
) -> Table {
    let mut header = vec!["t", "x", "value"];
    if residual.is_some() {
        header.push("residual");
    }
    let mut table = cfg.table(&header);
    for (k, (&t, row)) in field.times.iter().zip(&field.values).enumerate() {
        for i in (0..row.len()).step_by(stride) {
            let mut cells: Vec<Cell> = vec![t.into(), (i as f64 * field.step_space).into(), row[i].into()];
            if let Some(res) = residual {
                cells.push(if res[k].is_empty() { Cell::Empty } else { res[k][i].into() });
            }
            table.push(cells);
        }
    }
    table
}

fn problem_spec(p: GammaParams, d: &Datum, tg: &TimeGrid) -> Result<NonlocalProblemSpec, CliError> {
    let mut spec = NonlocalProblemSpec::new(p, d.grid.clone(), tg.dt, tg.horizon);
    spec.relaxed_datum = d.jumps_at_origin;
    spec.output_stride = tg.every;
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn space_nonlocal(cfg: &RunConfig, args: &SolveArgs) -> Result<Table, CliError> {
    let d = datum(cfg, args, 0.01, 4.0)?;
    let tg = time_grid(cfg, args, 0.01, 1.0, 10)?;
    let stride = x_every(cfg, args)?;
    let want_residual = flag_or_config(cfg, args.residual, "residual")?;
    let spec = problem_spec(cfg.params, &d, &tg)?;
    let field = solve_space_nonlocal(&spec)?;
    let residual = if want_residual {
        let rows = field
            .times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    Ok(Vec::new())
                } else {
                    space_nonlocal_residual(&d.grid, cfg.params, t, 0.5 * tg.dt.min(t)).map(|g| g.values)
                }
            })
            .collect::<invgamma::Result<Vec<_>>>()?;
        Some(rows)
    } else {
        None
    };
    let mut table = field_table(cfg, &field, stride, residual.as_deref());
    table.meta("datum", &d.label);
    Ok(table)
}

/// 𝔇_t r + ∂_x r, with the time derivative taken over every step of the time grid.
fn time_residual(d: &Datum, p: GammaParams, tg: &TimeGrid, kept: &[f64], stride: usize) -> invgamma::Result<Vec<Vec<f64>>> {
    let steps = (tg.horizon / tg.dt).round() as usize;
    let rows = (0..=steps)
        .map(|k| time_nonlocal_row(&d.grid, p, k as f64 * tg.dt))
        .collect::<invgamma::Result<Vec<_>>>()?;
    let n = d.grid.len();
    let h = d.grid.step;
    let dx = |row: &[f64], i: usize| -> f64 {
        if i == 0 {
            (row[1] - row[0]) / h
        } else if i == n - 1 {
            (row[n - 1] - row[n - 2]) / h
        } else {
            (row[i + 1] - row[i - 1]) / (2.0 * h)
        }
    };
    let mut out: Vec<Vec<f64>> = kept.iter().map(|_| vec![f64::NAN; n]).collect();
    for i in (0..n).step_by(stride) {
        let column = GridFn::new(tg.dt, rows.iter().map(|r| r[i]).collect())?;
        let dt_image = caputo_image(&column, p)?;
        for (slot, &t) in out.iter_mut().zip(kept) {
            let k = (t / tg.dt).round() as usize;
            slot[i] = dt_image.values[k] + dx(&rows[k], i);
        }
    }
    for (slot, &t) in out.iter_mut().zip(kept) {
        if t == 0.0 {
            slot.clear();
        }
    }
    Ok(out)
}

fn time_nonlocal(cfg: &RunConfig, args: &SolveArgs) -> Result<Table, CliError> {
    let d = datum(cfg, args, 0.01, 4.0)?;
    let tg = time_grid(cfg, args, 0.01, 1.0, 10)?;
    let stride = x_every(cfg, args)?;
    let want_residual = flag_or_config(cfg, args.residual, "residual")?;
    let spec = problem_spec(cfg.params, &d, &tg)?;
    let field = solve_time_nonlocal(&spec)?;
    let residual = if want_residual {
        Some(time_residual(&d, cfg.params, &tg, &field.times, stride)?)
    } else {
        None
    };
    let mut table = field_table(cfg, &field, stride, residual.as_deref());
    table.meta("datum", &d.label);
    Ok(table)
}

fn abel(cfg: &RunConfig, args: &SolveArgs) -> Result<Table, CliError> {
    let d = datum(cfg, args, 0.01, 4.0)?;
    let stride = x_every(cfg, args)?;
    let want_residual = flag_or_config(cfg, args.residual, "residual")?;
    let w = solve_abel(&d.grid, cfg.params)?;
    let residual = if want_residual {
        let img = rl_image(&w, cfg.params)?;
        Some(img.values.iter().zip(&d.grid.values).map(|(a, f)| a - f).collect::<Vec<_>>())
    } else {
        None
    };
    let mut header = vec!["x", "value"];
    if residual.is_some() {
        header.push("residual");
    }
    let mut table = cfg.table(&header);
    table.meta("datum", &d.label);
    for i in (0..w.len()).step_by(stride) {
        let mut row: Vec<Cell> = vec![(i as f64 * w.step).into(), w.values[i].into()];
        if let Some(res) = &residual {
            row.push(if i == 0 { Cell::Empty } else { res[i].into() });
        }
        table.push(row);
    }
    Ok(table)
}

fn relaxation(cfg: &RunConfig, args: &SolveArgs) -> Result<Table, CliError> {
    if args.f.is_some() || args.f_file.is_some() {
        return Err(CliError::Usage("relaxation takes no datum; u(0) = 1".into()));
    }
    let tg = time_grid(cfg, args, 1e-3, 3.0, 1)?;
    let c = require_nonnegative("c", cfg.resolver.value(args.c, "c", 1.0)?)?;
    let want_residual = flag_or_config(cfg, args.residual, "residual")?;
    let u = solve_relaxation(cfg.params, c, tg.dt, tg.horizon)?;
    let residual = if want_residual {
        let img = caputo_image(&u, cfg.params)?;
        Some(img.values.iter().zip(&u.values).map(|(d, v)| d + c * v).collect::<Vec<_>>())
    } else {
        None
    };
    let mut header = vec!["t", "value"];
    if residual.is_some() {
        header.push("residual");
    }
    let mut table = cfg.table(&header);
    table.meta("c", c);
    for i in (0..u.len()).step_by(tg.every) {
        let mut row: Vec<Cell> = vec![(i as f64 * tg.dt).into(), u.values[i].into()];
        if let Some(res) = &residual {
            row.push(if i == 0 { Cell::Empty } else { res[i].into() });
        }
        table.push(row);
    }
    Ok(table)
}

pub fn run(cfg: &RunConfig, args: &SolveArgs) -> Result<(), CliError> {
    let table = match args.problem.as_str() {
        "space-nonlocal" => space_nonlocal(cfg, args)?,
        "time-nonlocal" => time_nonlocal(cfg, args)?,
        "abel" => abel(cfg, args)?,
        "relaxation" => relaxation(cfg, args)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown problem `{other}`; expected one of {}",
                PROBLEMS.join(", ")
            )))
        }
    };
    cfg.emit(&table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn datum_file_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# sampled\nx,value\n0,0\n0.5,0.25\n1.0,1\n1.5,2.25").unwrap();
        let g = read_datum(f.path()).unwrap();
        assert_eq!(g.step, 0.5);
        assert_eq!(g.values, vec![0.0, 0.25, 1.0, 2.25]);
    }

    #[test]
    fn datum_file_must_be_uniform() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x,value\n0,0\n0.5,1\n1.2,2").unwrap();
        assert!(read_datum(f.path()).is_err());
    }
}
