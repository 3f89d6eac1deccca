//! Convergence studies over time step or mesh resolution.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::record::{run_scenario, TrajectoryRecord};
use super::scenario::Scenario;

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    TimeStep(Vec<f64>),
    Resolution(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::TimeStep(v) | Sweep::Resolution(v) => v,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Sweep::TimeStep(_) => "dt",
            Sweep::Resolution(_) => "dx",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub label: &'static str,
    /// `(h, relative trajectory error)`, in sweep order.
    pub points: Vec<(f64, f64)>,
    pub reference_h: f64,
    pub slope: f64,
}

pub const STUDY_SCHEMA: &str = "hydroelastic-study/1";

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema: {STUDY_SCHEMA}\n# reference_{} {}\n# slope {}\n", self.label, self.reference_h, self.slope);
        s.push_str(&format!("{},error\n", self.label));
        for (h, e) in &self.points {
            s.push_str(&format!("{h},{e}\n"));
        }
        s
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints);
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(Error::Config("slope fit needs positive h and error".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("slope fit needs distinct h values".into()));
    }
    Ok(sxy / sxx)
}

/// `‖x − x_ref‖₂ / ‖x_ref‖₂` over free-body translations on shared rows.
pub fn trajectory_error(run: &TrajectoryRecord, reference: &TrajectoryRecord) -> f64 {
    let a = run.positions();
    let b = reference.positions();
    let n = a.len().min(b.len());
    let diff: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| (x - y) * (x - y)).sum();
    let norm: f64 = b[..n].iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

fn stride_for(interval: f64, dt: f64) -> Result<usize> {
    let ratio = interval / dt;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-6 * ratio {
        return Err(Error::Config(format!(
            "record interval {interval} is not a multiple of dt {dt}"
        )));
    }
    Ok(stride as usize)
}

fn variant(base: &Scenario, sweep: &Sweep, h: f64, interval: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match sweep {
        Sweep::TimeStep(_) => s.solver.dt = h,
        Sweep::Resolution(_) => s.set_resolution(h),
    }
    s.record_stride = stride_for(interval, s.solver.dt)?;
    Ok(s)
}

/// Run `base` once per swept value plus a reference at a tenth of the
/// smallest value, all recorded every `interval` seconds, and fit the
/// convergence order of the relative position error.
pub fn convergence_study(base: &Scenario, sweep: &Sweep, interval: f64) -> Result<StudyResult> {
    let values = sweep.values();
    if values.len() < 3 {
        return Err(Error::TooFewPoints);
    }
    if values.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("swept values must be > 0".into()));
    }
    let reference_h = values.iter().copied().fold(f64::INFINITY, f64::min) / 10.0;
    let mut all: Vec<f64> = values.to_vec();
    all.push(reference_h);
    let scenarios = all
        .iter()
        .map(|&h| variant(base, sweep, h, interval))
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<Result<TrajectoryRecord>> = scenarios
        .par_iter()
        .map(|s| run_scenario(s).map(|r| r.record))
        .collect();
    let mut runs = runs;
    let reference = runs.pop().expect("reference run");
    let completed = runs.iter().filter(|r| r.is_ok()).count() + usize::from(reference.is_ok());
    let reference = match reference {
        Ok(r) => r,
        Err(e) => {
            return Err(Error::StudyAborted {
                completed,
                partial: Vec::new(),
                source: Box::new(e),
            })
        }
    };
    let mut points = Vec::with_capacity(values.len());
    let mut failure = None;
    for (h, run) in values.iter().zip(runs) {
        match run {
            Ok(rec) => points.push((*h, trajectory_error(&rec, &reference))),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    if let Some(e) = failure {
        return Err(Error::StudyAborted {
            completed,
            partial: points,
            source: Box::new(e),
        });
    }
    let slope = fit_slope(&points)?;
    Ok(StudyResult {
        label: sweep.label(),
        points,
        reference_h,
        slope,
    })
}
