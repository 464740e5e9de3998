use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use isocline::chart::Chart;
use isocline::field::{AmbientField, ChartField, FieldMode};
use isocline::geometry::{line_field_direction, normalized_covariant_matrix, Vector};

use crate::config::{ManifoldName, PotentialName};
use crate::problem::Problem;
use crate::Failure;

/// Residual written where no line direction exists.
pub const RESIDUAL_SENTINEL: f64 = -1.0;

/// `x0,x1,y0,y1,nx,ny`: an `nx × ny` grid with both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(format!("grid needs x0,x1,y0,y1,nx,ny, got {s:?}"));
        }
        let num = |i: usize| {
            parts[i]
                .parse::<f64>()
                .map_err(|e| format!("grid bound {:?}: {e}", parts[i]))
        };
        let count = |i: usize| match parts[i].parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("grid count {:?} must be a positive integer", parts[i])),
        };
        Ok(Grid {
            x: (num(0)?, num(1)?),
            y: (num(2)?, num(3)?),
            nx: count(4)?,
            ny: count(5)?,
        })
    }
}

fn linspace(range: (f64, f64), n: usize, i: usize) -> f64 {
    if n == 1 {
        range.0
    } else {
        range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
    }
}

impl Grid {
    /// Points in row order: `x` varies fastest.
    pub fn points(&self) -> Vec<Vector> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(Vector::from_row_slice(&[
                    linspace(self.x, self.nx, i),
                    linspace(self.y, self.ny, j),
                ]));
            }
        }
        out
    }
}

/// Line direction at `p`, oriented so its largest-magnitude component is positive,
/// and the kernel residual.
pub fn line_at(chart: &dyn Chart, field: &dyn AmbientField, p: &Vector) -> isocline::Result<(Vector, f64)> {
    let cf = ChartField::new(chart, field, FieldMode::Gradient);
    let metric = chart.metric(p)?;
    let x = cf.value(p)?;
    let jac = cf.jacobian(p)?;
    let (_, a) = normalized_covariant_matrix(&x, &jac, &metric)?;
    let line = line_field_direction(a.matrix())?;
    let mut dir = line.direction;
    let lead = dir
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if lead < 0.0 {
        dir = -dir;
    }
    Ok((dir, line.residual))
}

pub fn run(manifold: ManifoldName, potential: PotentialName, grid: &Grid, out: &Path) -> Result<(), Failure> {
    let problem = Problem::new(manifold, potential, None)?;
    let chart = problem.primary_chart();
    if chart.dim() != 2 {
        return Err(Failure::Config("line-field grids need a two-dimensional chart".into()));
    }
    let file = File::create(out).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| Failure::Numerical(format!("writing {}: {e}", out.display()));
    w.write_record(["p_1", "p_2", "L_1", "L_2", "kernel_residual"])
        .map_err(io)?;
    for p in grid.points() {
        let (l, residual) = match line_at(chart.as_ref(), &problem.field, &p) {
            Ok(v) => v,
            Err(_) => (Vector::zeros(2), RESIDUAL_SENTINEL),
        };
        w.write_record([p[0], p[1], l[0], l[1], residual].map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_and_layout() {
        let g: Grid = "-1,1,0,2,3,2".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].as_slice(), &[0.0, 0.0]);
        assert_eq!(pts[5].as_slice(), &[1.0, 2.0]);
        assert!("1,2,3".parse::<Grid>().is_err());
        assert!("0,1,0,1,0,3".parse::<Grid>().is_err());
        let single: Grid = "0.5,9,1,9,1,1".parse().unwrap();
        assert_eq!(single.points()[0].as_slice(), &[0.5, 1.0]);
    }
}
