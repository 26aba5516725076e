//! Time-step traces of the material-point solver and their CSV form.

use crate::constitutive::PointState;
use crate::linalg::Mat;
use std::io::{self, Write};

/// One accepted increment along a load history.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub t: f64,
    /// Prescribed stress at this time.
    pub sigma: Mat,
    pub state: PointState,
    /// Stored energy `zeta(z) W_e(F_e) + W_p(P)` [MPa].
    pub energy: f64,
    /// Dissipated work of this step: `R_z^eps(dz) - R_z^eps(0)
    /// + rho(z_old) R_p^eps(dP - I)`, so that a resting step dissipates
    /// exactly zero.
    pub dissipation_increment: f64,
    pub cumulative_dissipation: f64,
    pub newton_iters: u32,
    pub kkt_residual: f64,
}

impl TraceStep {
    pub fn elastic_strain(&self) -> Mat {
        self.state
            .elastic_strain()
            .expect("accepted states have invertible P")
    }

    /// `|P - I|`.
    pub fn plastic_deviation(&self) -> f64 {
        (self.state.p - Mat::identity(self.state.dim())).norm()
    }
}

/// Full history of a run, including the initial state as the `t = 0` row.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

pub const TRACE_CSV_HEADER: &str =
    "t,sigma11,sigma22,Fe11,Fe22,|Fe|,P11,P12,P21,P22,|P-I|,z,energy,cumulative_dissipation,newton_iters";

impl Trace {
    /// First time at which `|P - I|` exceeds `threshold`.
    pub fn plastic_onset(&self, threshold: f64) -> Option<f64> {
        self.steps
            .iter()
            .find(|s| s.plastic_deviation() > threshold)
            .map(|s| s.t)
    }

    /// First time at which `z < 1 - threshold`.
    pub fn damage_onset(&self, threshold: f64) -> Option<f64> {
        self.steps
            .iter()
            .find(|s| s.state.z < 1.0 - threshold)
            .map(|s| s.t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for s in &self.steps {
            let fe = s.elastic_strain();
            let p = &s.state.p;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t,
                s.sigma.get(0, 0),
                s.sigma.get(1, 1),
                fe.get(0, 0),
                fe.get(1, 1),
                fe.norm(),
                p.get(0, 0),
                p.get(0, 1),
                p.get(1, 0),
                p.get(1, 1),
                s.plastic_deviation(),
                s.state.z,
                s.energy,
                s.cumulative_dissipation,
                s.newton_iters,
            )?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &std::path::Path) -> io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(io::BufWriter::new(f))
    }
}
