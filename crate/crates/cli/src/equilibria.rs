use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use isocline::chart::Chart;
use isocline::field::{ChartField, FieldMode};
use isocline::geometry::Vector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Direction, RunConfig, Start};
use crate::line_field::Grid;
use crate::problem::{tracer_config, Problem};
use crate::Failure;

/// Endpoints closer than this (ambient distance) are the same equilibrium.
pub const DEDUP_TOL: f64 = 1e-4;

const NEWTON_ITERS: usize = 50;
const NEWTON_STEP_TOL: f64 = 1e-13;
/// Polishing that moves the point further than this is discarded.
const NEWTON_MAX_MOVE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sink,
    Saddle,
    Source,
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equilibrium {
    pub chart_id: usize,
    pub chart_point: Vec<f64>,
    pub ambient_point: Vec<f64>,
    pub field_norm: f64,
    pub energy: f64,
    pub kind: Kind,
    pub hessian_eigenvalues: Vec<f64>,
    pub polished: bool,
    /// Index of the first start that reached this equilibrium.
    pub start_index: usize,
    /// Number of traces that ended here.
    pub hits: usize,
}

/// Starts from a grid `x0,x1,y0,y1,nx,ny` in primary-chart coordinates or a CSV file whose
/// header is `p_1..p_m` (chart) or `x_1..x_n` (ambient).
pub fn parse_starts(source: &str) -> Result<Vec<Start>, Failure> {
    if let Ok(grid) = source.parse::<Grid>() {
        return Ok(grid
            .points()
            .into_iter()
            .map(|p| Start::Chart(p.as_slice().to_vec()))
            .collect());
    }
    let mut reader = csv::Reader::from_path(source)
        .map_err(|e| Failure::Config(format!("--starts is neither a grid nor a readable file: {e}")))?;
    let header = reader.headers().map_err(|e| Failure::Config(e.to_string()))?.clone();
    let chart = if header.iter().all(|h| h.starts_with("p_")) {
        true
    } else if header.iter().all(|h| h.starts_with("x_")) {
        false
    } else {
        return Err(Failure::Config(format!(
            "starts file header must be p_1..p_m or x_1..x_n, got {header:?}"
        )));
    };
    let mut starts = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::Config(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Config(format!("starts row {}: {e}", line + 1)))?;
        starts.push(if chart {
            Start::Chart(vals)
        } else {
            Start::Ambient(vals)
        });
    }
    if starts.is_empty() {
        return Err(Failure::Config("no start points given".into()));
    }
    Ok(starts)
}

/// Newton iteration on the chart gradient of the energy.
fn polish(problem: &Problem, chart: &dyn Chart, p0: &Vector) -> Option<Vector> {
    let mut p = p0.clone();
    for _ in 0..NEWTON_ITERS {
        let grad = problem.chart_gradient(chart, &p).ok()?;
        let hess = problem.chart_hessian(chart, &p).ok()?;
        let step = hess.lu().solve(&grad)?;
        p -= &step;
        if !p.iter().all(|v| v.is_finite()) || (&p - p0).norm() > NEWTON_MAX_MOVE {
            return None;
        }
        if step.norm() < NEWTON_STEP_TOL * (1.0 + p.norm()) {
            break;
        }
    }
    Some(p)
}

fn classify(eigenvalues: &[f64]) -> Kind {
    if eigenvalues.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Kind::Degenerate;
    }
    let negative = eigenvalues.iter().filter(|v| **v < 0.0).count();
    match negative {
        0 => Kind::Sink,
        n if n == eigenvalues.len() => Kind::Source,
        _ => Kind::Saddle,
    }
}

fn characterize(problem: &Problem, endpoint: &Vector, start_index: usize) -> isocline::Result<Equilibrium> {
    let chart = problem.atlas.chart_at(endpoint)?;
    let p0 = chart.coords(endpoint)?;
    let (p, polished) = match polish(problem, chart.as_ref(), &p0) {
        Some(p) => (p, true),
        None => (p0, false),
    };
    let x = chart.param(&p)?;
    let metric = chart.metric(&p)?;
    let value = ChartField::new(chart.as_ref(), &problem.field, FieldMode::Gradient).value(&p)?;
    let hess = problem.chart_hessian(chart.as_ref(), &p)?;
    let mut eig: Vec<f64> = hess.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(Equilibrium {
        chart_id: chart.id(),
        chart_point: p.as_slice().to_vec(),
        ambient_point: x.as_slice().to_vec(),
        field_norm: metric.norm(&value),
        energy: problem.potential.energy(&x)?,
        kind: classify(&eig),
        hessian_eigenvalues: eig,
        polished,
        start_index,
        hits: 1,
    })
}

/// Trace both orientations from every start and collect distinct equilibria.
pub fn find(config: &RunConfig, starts: &[Start]) -> Result<(Vec<Equilibrium>, usize), Failure> {
    let problem = Problem::from_config(config)?;
    let ambient: Vec<Vector> = starts
        .iter()
        .map(|s| problem.start_ambient(s))
        .collect::<Result<_, _>>()?;
    let endpoints: Vec<Vec<Vector>> = ambient
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let seed = config.seed.wrapping_add(i as u64);
            [Direction::Field, Direction::Reversed]
                .into_iter()
                .filter_map(|dir| {
                    let mut provider = problem.provider(config, seed).ok()?;
                    let t = isocline::tracer::trace(&tracer_config(config, dir), provider.as_mut(), &problem.field, x0)
                        .ok()?;
                    t.converged()
                        .then(|| t.last().map(|r| r.ambient_point.clone()))
                        .flatten()
                })
                .collect()
        })
        .collect();

    let converged = endpoints.iter().map(Vec::len).sum();
    let mut found: Vec<Equilibrium> = Vec::new();
    for (i, ends) in endpoints.iter().enumerate() {
        for end in ends {
            let Ok(eq) = characterize(&problem, end, i) else {
                continue;
            };
            let x = Vector::from_column_slice(&eq.ambient_point);
            match found
                .iter_mut()
                .find(|f| (Vector::from_column_slice(&f.ambient_point) - &x).norm() < DEDUP_TOL)
            {
                Some(existing) => existing.hits += 1,
                None => found.push(eq),
            }
        }
    }
    Ok((found, converged))
}

pub fn run(config_path: &Path, starts: &str, out: &Path) -> Result<(), Failure> {
    let config = RunConfig::load(config_path)?;
    let starts = parse_starts(starts)?;
    let (found, converged) = find(&config, &starts)?;
    let file = File::create(out).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &found).map_err(|e| Failure::Numerical(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    println!(
        "{} distinct equilibria from {converged} converged traces ({} starts)",
        found.len(),
        starts.len()
    );
    if converged == 0 {
        return Err(Failure::NotConverged("no trace converged".into()));
    }
    Ok(())
}
