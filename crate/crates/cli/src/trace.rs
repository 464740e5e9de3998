use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use isocline::tracer::{trace, TraceStatus, Trajectory};

use crate::config::RunConfig;
use crate::problem::{tracer_config, Problem};
use crate::Failure;

fn write_trajectory(trajectory: &Trajectory, path: &Path) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))?;
    trajectory
        .write_csv(BufWriter::new(file))
        .map_err(|e| Failure::Numerical(format!("writing {}: {e}", path.display())))
}

fn summary(trajectory: &Trajectory) -> String {
    match trajectory.last() {
        Some(r) => format!(
            "final point {:?} (chart {} at {:?}), |X|_g = {:e}, steps = {}",
            r.ambient_point.as_slice(),
            r.chart_id,
            r.chart_point.as_slice(),
            r.field_norm,
            r.step
        ),
        None => "no steps taken".to_string(),
    }
}

pub fn run(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = RunConfig::load(config_path)?;
    let out = out
        .or_else(|| config.output.clone())
        .ok_or_else(|| Failure::Config("no output path: pass --out or set field `output`".into()))?;
    let seed = seed.unwrap_or(config.seed);
    let problem = Problem::from_config(&config)?;
    let start = config
        .start
        .as_ref()
        .ok_or_else(|| Failure::Config("trace requires field `start`".into()))?;
    let x0 = problem.start_ambient(start)?;
    let mut provider = problem.provider(&config, seed)?;
    let tracer = tracer_config(&config, config.direction);

    match trace(&tracer, provider.as_mut(), &problem.field, &x0) {
        Ok(trajectory) => {
            write_trajectory(&trajectory, &out)?;
            println!("{}", summary(&trajectory));
            match trajectory.status {
                TraceStatus::Converged => Ok(()),
                TraceStatus::MaxSteps => Err(Failure::NotConverged(format!(
                    "no equilibrium within {} steps",
                    config.max_steps
                ))),
            }
        }
        Err(err) => {
            write_trajectory(&err.trajectory, &out)?;
            println!("{}", summary(&err.trajectory));
            Err(Failure::Numerical(err.to_string()))
        }
    }
}
