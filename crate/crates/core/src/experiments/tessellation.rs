//! Side-by-side comparison of polygonal and triangulated contact surfaces.

use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::stepper::{step, SolverConfig};

use super::scenario::Scenario;

pub const TESSELLATION_SCHEMA: &str = "hydroelastic-tessellation/1";

#[derive(Clone, Debug, PartialEq)]
pub struct TessellationRow {
    pub time: f64,
    pub faces_polygonal: usize,
    pub faces_triangulated: usize,
    /// Σ A·p_c·n̂ over all faces of all surfaces.
    pub force_polygonal: Vec3,
    pub force_triangulated: Vec3,
    pub solve_ms_polygonal: f64,
    pub solve_ms_triangulated: f64,
}

impl TessellationRow {
    /// ‖F_tri − F_poly‖ / ‖F_poly‖, zero when both vanish.
    pub fn force_relative_difference(&self) -> f64 {
        let d = (self.force_triangulated - self.force_polygonal).norm();
        let n = self.force_polygonal.norm();
        if n == 0.0 {
            d
        } else {
            d / n
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TessellationReport {
    pub rows: Vec<TessellationRow>,
}

impl TessellationReport {
    /// Mean of faces_triangulated / faces_polygonal over steps with contact.
    pub fn mean_face_ratio(&self) -> f64 {
        let ratios: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.faces_polygonal > 0)
            .map(|r| r.faces_triangulated as f64 / r.faces_polygonal as f64)
            .collect();
        if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        }
    }

    pub fn max_force_difference(&self) -> f64 {
        self.rows
            .iter()
            .map(TessellationRow::force_relative_difference)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema: {TESSELLATION_SCHEMA}\n");
        s.push_str("t,faces_polygonal,faces_triangulated,solve_ms_polygonal,solve_ms_triangulated,force_rel_diff\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.time,
                r.faces_polygonal,
                r.faces_triangulated,
                r.solve_ms_polygonal,
                r.solve_ms_triangulated,
                r.force_relative_difference()
            ));
        }
        s
    }
}

/// Advance the scenario in polygonal mode; at every step also solve the same
/// state in triangulated mode and compare.
pub fn tessellation_report(scenario: &Scenario) -> Result<TessellationReport> {
    use crate::contact_surface::Tessellation::{Polygonal, Triangulated};
    let (world, mut state) = scenario.build()?;
    let poly_cfg = SolverConfig {
        tessellation: Polygonal,
        ..scenario.solver.clone()
    };
    let tri_cfg = SolverConfig {
        tessellation: Triangulated,
        ..scenario.solver.clone()
    };
    let net = |surfaces: &[crate::contact_surface::ContactSurface]| -> Vec3 {
        surfaces.iter().map(|s| s.net_force()).sum()
    };
    let mut rows = Vec::with_capacity(scenario.step_count());
    for k in 1..=scenario.step_count() {
        let time = k as f64 * poly_cfg.dt;
        let wrap = |e| Error::StepFailed {
            time,
            source: Box::new(e),
        };
        let p = step(&state, &world, &poly_cfg).map_err(wrap)?;
        let t = step(&state, &world, &tri_cfg).map_err(wrap)?;
        rows.push(TessellationRow {
            time,
            faces_polygonal: p.diagnostics.face_count,
            faces_triangulated: t.diagnostics.face_count,
            force_polygonal: net(&p.surfaces),
            force_triangulated: net(&t.surfaces),
            solve_ms_polygonal: p.diagnostics.solve_time * 1e3,
            solve_ms_triangulated: t.diagnostics.solve_time * 1e3,
        });
        state = p.state;
        state.time = time;
    }
    Ok(TessellationReport { rows })
}
