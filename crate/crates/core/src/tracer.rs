//! Tracing generalized isoclines: orient the kernel direction of `A(Y)`, take
//! corrected Euler steps, hop between charts, stop at an equilibrium.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error as ThisError;

use crate::chart::{Chart, ChartProvider};
use crate::error::{Error, Result};
use crate::field::{AmbientField, ChartField, FieldMode};
use crate::geometry::{line_field_direction, normalized_covariant_matrix, Christoffel, Matrix, MetricData, Vector};

/// Consecutive chart switches allowed at one curve point before giving up.
const MAX_SWITCHES_PER_POINT: usize = 2;

/// Smallest step, as a fraction of `tau`, that the approach control may take.
const MIN_STEP_FRACTION: f64 = 1e-9;

/// Preferred orientation `Z₀` of the first step.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum InitialDirection {
    /// `Y(γ₀)`, the normalized field itself.
    #[default]
    Field,
    /// `−Y(γ₀)`.
    ReversedField,
    /// A tangent vector in coordinates of the first chart.
    Chart(Vector),
    /// An ambient tangent vector, pushed into the first chart.
    Ambient(Vector),
}

#[derive(Clone, Debug)]
pub struct TracerConfig {
    /// Step length `τ` (arc length per step).
    pub tau: f64,
    /// Convergence tolerance on `sqrt(g(X, X))`.
    pub rho: f64,
    pub max_steps: usize,
    /// Coefficient `c` of the `τ²` Christoffel correction.
    pub correction_coeff: f64,
    pub initial_direction: InitialDirection,
    /// Shorten a step to the Newton estimate of the distance to the zero of
    /// `|X|` along the curve when that is less than `tau`.
    pub approach_control: bool,
    /// Switch to steepest descent once the energy exceeds this value.
    pub energy_ceiling: Option<f64>,
    /// Step of the steepest-descent phase; `tau` when unset.
    pub descent_tau: Option<f64>,
    pub field_mode: FieldMode,
}

impl Default for TracerConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            rho: 1e-3,
            max_steps: 100_000,
            correction_coeff: 1.0,
            initial_direction: InitialDirection::Field,
            approach_control: true,
            energy_ceiling: None,
            descent_tau: None,
            field_mode: FieldMode::Gradient,
        }
    }
}

impl TracerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        positive("rho", self.rho)?;
        if let Some(t) = self.descent_tau {
            positive("descent_tau", t)?;
        }
        if !self.correction_coeff.is_finite() {
            return Err(Error::InvalidParameter("correction_coeff must be finite".into()));
        }
        match &self.initial_direction {
            InitialDirection::Chart(v) | InitialDirection::Ambient(v) if !(v.norm() > 0.0) => {
                Err(Error::InvalidParameter("initial direction must be non-zero".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Isocline,
    Descent,
}

/// One evaluated curve point.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub chart_id: usize,
    pub chart_point: Vector,
    pub ambient_point: Vector,
    /// `sqrt(g(X, X))`.
    pub field_norm: f64,
    /// `sigma_min / sigma_max` of `A(Y)`; absent where no kernel was computed.
    pub kernel_residual: Option<f64>,
    pub energy: Option<f64>,
    /// `‖Y − P Y_prev‖_g`: distance of the normalized field from the previous one
    /// carried along the step that reached this point, up to the sign of the line.
    pub transport_defect: Option<f64>,
    pub phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TraceRecord>,
    pub status: TraceStatus,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.status == TraceStatus::Converged
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Sum of ambient chord lengths between consecutive records.
    pub fn ambient_length(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (&w[1].ambient_point - &w[0].ambient_point).norm())
            .sum()
    }

    /// CSV with columns `step, chart_id, p_1..p_m, x_1..x_n, field_norm,
    /// kernel_residual, energy`; absent values are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let (m, n) = self
            .records
            .first()
            .map(|r| (r.chart_point.len(), r.ambient_point.len()))
            .unwrap_or((0, 0));
        let mut header = vec!["step".to_string(), "chart_id".to_string()];
        header.extend((1..=m).map(|i| format!("p_{i}")));
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend(["field_norm", "kernel_residual", "energy"].map(String::from));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row = vec![r.step.to_string(), r.chart_id.to_string()];
            row.extend(r.chart_point.iter().map(f64::to_string));
            row.extend(r.ambient_point.iter().map(f64::to_string));
            row.push(r.field_norm.to_string());
            row.push(opt(r.kernel_residual));
            row.push(opt(r.energy));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A numerical failure together with everything traced before it.
#[derive(Debug, Clone, ThisError)]
#[error("{error} (after {} trajectory records)", .trajectory.records.len())]
pub struct TraceError {
    pub trajectory: Trajectory,
    #[source]
    pub error: Error,
}

/// `sign(g(Z_prev, Z_raw)) · Z_raw / sqrt(g(Z_raw, Z_raw))`, with `sign(0) = +1`.
pub fn orient_and_normalize(z_prev: &Vector, z_raw: &Vector, g: &Matrix) -> Result<Vector> {
    let norm_sq = (z_raw.transpose() * g * z_raw)[(0, 0)];
    if !(norm_sq > 0.0) {
        return Err(Error::DegenerateKernel);
    }
    let alignment = (z_prev.transpose() * g * z_raw)[(0, 0)];
    let sign = if alignment < 0.0 { -1.0 } else { 1.0 };
    Ok(z_raw * (sign / norm_sq.sqrt()))
}

/// `γᵏ + τZᵏ − c τ² Σᵢⱼ Zⁱ Γᵏᵢⱼ Zʲ`.
pub fn euler_step(gamma: &Vector, z: &Vector, christoffel: &Christoffel, tau: f64, c: f64) -> Vector {
    gamma + z * tau - christoffel.contract(z, z) * (c * tau * tau)
}

/// `sqrt(g(X, X)) < rho`.
pub fn check_convergence(x: &Vector, g: &Matrix, rho: f64) -> bool {
    let norm_sq = (x.transpose() * g * x)[(0, 0)];
    norm_sq.max(0.0).sqrt() < rho
}

/// Field quantities at one chart point.
struct Local {
    ambient: Vector,
    metric: MetricData,
    field: Vector,
    norm: f64,
    energy: Option<f64>,
}

fn evaluate(chart: &dyn Chart, field: &ChartField<'_>, p: &Vector) -> Result<Local> {
    let ambient = chart.param(p)?;
    let metric = chart.metric(p)?;
    let value = field.value(p)?;
    let norm = metric.norm(&value);
    let energy = field.energy(p).transpose()?;
    Ok(Local {
        ambient,
        metric,
        field: value,
        norm,
        energy,
    })
}

/// Transfer a chart tangent vector at chart point `p` of `from` into the chart
/// `to` at the same manifold point.
fn transfer_vector(from: &dyn Chart, to: &dyn Chart, p: &Vector, v: &Vector) -> Result<Vector> {
    let x = from.param(p)?;
    let ambient = from.param_jacobian(p)? * v;
    Ok(to.coords_jacobian(&x)? * ambient)
}

struct Tracer<'a, P: ChartProvider + ?Sized> {
    config: &'a TracerConfig,
    provider: &'a mut P,
    field: &'a dyn AmbientField,
    records: Vec<TraceRecord>,
}

impl<'a, P: ChartProvider + ?Sized> Tracer<'a, P> {
    fn fail(self, error: Error) -> TraceError {
        TraceError {
            trajectory: Trajectory {
                records: self.records,
                status: TraceStatus::MaxSteps,
            },
            error,
        }
    }

    fn run(mut self, start: &Vector, phase: Phase) -> Result<Trajectory, TraceError> {
        match self.run_inner(start, phase) {
            Ok(status) => Ok(Trajectory {
                records: self.records,
                status,
            }),
            Err(e) => Err(self.fail(e)),
        }
    }

    fn run_inner(&mut self, start: &Vector, mut phase: Phase) -> Result<TraceStatus> {
        let cfg = self.config;
        cfg.validate()?;
        let mut chart: Arc<dyn Chart> = self.provider.chart_for(start)?;
        let mut gamma = chart.coords(start)?;
        let mut z_prev: Option<Vector> = match &cfg.initial_direction {
            InitialDirection::Chart(v) => Some(v.clone()),
            InitialDirection::Ambient(v) => Some(chart.coords_jacobian(start)? * v),
            InitialDirection::Field | InitialDirection::ReversedField => None,
        };
        let mut n = 0usize;
        let mut switches_here = 0usize;
        // previous Y carried along the step that reached gamma, to first order
        let mut transported: Option<Vector> = None;

        loop {
            let chart_field = ChartField::new(chart.as_ref(), self.field, cfg.field_mode);
            let local = evaluate(chart.as_ref(), &chart_field, &gamma)?;
            let mut record = TraceRecord {
                step: n,
                chart_id: chart.id(),
                chart_point: gamma.clone(),
                ambient_point: local.ambient.clone(),
                field_norm: local.norm,
                kernel_residual: None,
                energy: local.energy,
                transport_defect: None,
                phase,
            };

            if local.norm < cfg.rho {
                match phase {
                    Phase::Isocline if n == 0 => {
                        self.records.push(record);
                        return Err(Error::StartAtEquilibrium { norm: local.norm });
                    }
                    _ => {
                        self.records.push(record);
                        return Ok(TraceStatus::Converged);
                    }
                }
            }
            if n >= cfg.max_steps {
                self.records.push(record);
                return Ok(TraceStatus::MaxSteps);
            }
            if phase == Phase::Isocline {
                if let (Some(ceiling), Some(energy)) = (cfg.energy_ceiling, local.energy) {
                    if energy > ceiling {
                        phase = Phase::Descent;
                        record.phase = phase;
                    }
                }
            }

            let (next, direction) = match phase {
                Phase::Isocline => {
                    let jac = chart_field.jacobian(&gamma)?;
                    let (y, a_y) = normalized_covariant_matrix(&local.field, &jac, &local.metric)?;
                    let line = line_field_direction(a_y.matrix())?;
                    record.kernel_residual = Some(line.residual);
                    if let Some(t) = &transported {
                        let defect = local.metric.norm(&(&y - t)).min(local.metric.norm(&(&y + t)));
                        record.transport_defect = Some(defect);
                    }
                    let reference = match (&z_prev, &cfg.initial_direction) {
                        (Some(z), _) => z.clone(),
                        (None, InitialDirection::ReversedField) => -&y,
                        (None, _) => y.clone(),
                    };
                    let z = orient_and_normalize(&reference, &line.direction, &local.metric.g)?;
                    let mut step = cfg.tau;
                    if cfg.approach_control {
                        // d|X|_g/ds along Z is g(∇_Z X, Y)
                        let a_x = &jac + local.metric.gamma.apply(&local.field);
                        let rate = local.metric.inner(&(a_x * &z), &y);
                        if rate < 0.0 {
                            step = step.min(local.norm / -rate).max(cfg.tau * MIN_STEP_FRACTION);
                        }
                    }
                    let next = euler_step(&gamma, &z, &local.metric.gamma, step, cfg.correction_coeff);
                    let carried = &y - local.metric.gamma.contract(&(&next - &gamma), &y);
                    (next, Some((z, carried)))
                }
                Phase::Descent => {
                    let step = cfg.descent_tau.unwrap_or(cfg.tau);
                    (&gamma + &local.field * step, None)
                }
            };
            let replace_last = switches_here > 0;
            if replace_last {
                self.records.pop();
            }
            self.records.push(record);

            if chart.contains(&next) {
                gamma = next;
                match direction {
                    Some((z, carried)) => {
                        z_prev = Some(z);
                        transported = Some(carried);
                    }
                    None => transported = None,
                }
                n += 1;
                switches_here = 0;
                continue;
            }

            // Abandon the chart at the current point and redo the step in a new one.
            switches_here += 1;
            if switches_here > MAX_SWITCHES_PER_POINT {
                return Err(Error::ChartExit(format!(
                    "no chart keeps the step from {:?} inside its domain",
                    local.ambient.as_slice()
                )));
            }
            let new_chart = self.provider.chart_for(&local.ambient)?;
            let new_gamma = new_chart.coords(&local.ambient)?;
            let carry = |v: &Vector| transfer_vector(chart.as_ref(), new_chart.as_ref(), &gamma, v);
            z_prev = match (&direction, &z_prev) {
                (Some((z, _)), _) => Some(carry(z)?),
                (None, Some(z)) => Some(carry(z)?),
                (None, None) => None,
            };
            transported = match transported {
                Some(t) => Some(carry(&t)?),
                None => None,
            };
            chart = new_chart;
            gamma = new_gamma;
        }
    }
}

/// Trace a generalized isocline from the ambient point `start`.
///
/// Returns when `sqrt(g(X, X)) < rho` at some step `n > 0`, or after
/// `max_steps` steps. Numerical failures carry the partial trajectory.
pub fn trace<P: ChartProvider + ?Sized>(
    config: &TracerConfig,
    provider: &mut P,
    field: &dyn AmbientField,
    start: &Vector,
) -> Result<Trajectory, TraceError> {
    Tracer {
        config,
        provider,
        field,
        records: Vec::new(),
    }
    .run(start, Phase::Isocline)
}

/// Explicit Euler steepest descent `γ ← γ + τX` until `sqrt(g(X, X)) < rho`.
pub fn steepest_descent_fallback<P: ChartProvider + ?Sized>(
    config: &TracerConfig,
    provider: &mut P,
    field: &dyn AmbientField,
    start: &Vector,
) -> Result<Trajectory, TraceError> {
    Tracer {
        config,
        provider,
        field,
        records: Vec::new(),
    }
    .run(start, Phase::Descent)
}
