//! Time stepping over a load program, parameter sweeps, and the trace
//! invariant checks shared with the acceptance suite.

use super::trace::{Trace, TraceStep};
use super::{
    incremental_energy, newton_minimize, IncrementResult, LoadProgram, NewtonOpts, PointError,
};
use crate::constitutive::{MaterialParams, PointState};
use crate::linalg::Mat;
use crate::sl::{SlParams, SlParams2, SlParams3};
use rayon::prelude::*;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Chart trust region: if the accepted increment leaves this ball around the
/// identity, the step is redone with half the step size.
const DP_TRUST: f64 = 0.5;

/// Run the incremental problem over `program` with uniform step `tau`.
///
/// Newton is warm-started from the previous state (`F` held, plastic
/// increment reset to the identity). A step that fails to converge or leaves
/// the chart trust region is retried once as two half steps, which then
/// appear as two rows of the trace; a second failure aborts.
pub fn run_history(
    program: &LoadProgram,
    mp: &MaterialParams,
    tau: f64,
    init: &PointState,
    opts: &NewtonOpts,
) -> Result<Trace, PointError> {
    let n = (program.horizon / tau).round();
    if tau <= 0.0 || n < 1.0 || (n * tau - program.horizon).abs() > 1e-9 * program.horizon {
        return Err(PointError::BadTimeStep {
            tau,
            horizon: program.horizon,
        });
    }
    let n = n as usize;
    init.validate(mp)?;

    let mut trace = Trace::default();
    let sigma0 = program.stress_at(0.0);
    let w0 = stored_energy(init, mp);
    trace.steps.push(TraceStep {
        t: 0.0,
        sigma: sigma0,
        state: *init,
        energy: w0,
        dissipation_increment: 0.0,
        cumulative_dissipation: 0.0,
        newton_iters: 0,
        kkt_residual: 0.0,
    });

    let mut cum_diss = 0.0;
    let mut warned_ck = false;
    for i in 1..=n {
        let t = i as f64 * tau;
        let prev = trace.steps.last().unwrap().state;
        let sigma_i = program.stress_at(t);
        match try_step(&prev, &sigma_i, mp, opts) {
            Ok(res) => {
                cum_diss += res.dissipation_increment;
                push_step(&mut trace, t, sigma_i, res, cum_diss);
            }
            Err(_) => {
                // Retry as two half steps; both rows are recorded.
                let t_mid = t - 0.5 * tau;
                let sigma_mid = program.stress_at(t_mid);
                let r1 = try_step(&prev, &sigma_mid, mp, opts).map_err(|e| fail(i, t_mid, e))?;
                cum_diss += r1.dissipation_increment;
                let mid_state = r1.state;
                push_step(&mut trace, t_mid, sigma_mid, r1, cum_diss);
                let r2 = try_step(&mid_state, &sigma_i, mp, opts).map_err(|e| fail(i, t, e))?;
                cum_diss += r2.dissipation_increment;
                push_step(&mut trace, t, sigma_i, r2, cum_diss);
            }
        }
        let state = trace.steps.last().unwrap().state;
        if !warned_ck && state.p.norm() > mp.c_k {
            log::warn!(
                "|P| = {:.3} exceeded the diagnostic bound c_K = {} at t = {t}",
                state.p.norm(),
                mp.c_k
            );
            warned_ck = true;
        }
    }
    Ok(trace)
}

fn fail(step: usize, t: f64, e: PointError) -> PointError {
    PointError::NoConvergence {
        step,
        t,
        detail: e.to_string(),
    }
}

fn push_step(trace: &mut Trace, t: f64, sigma: Mat, res: IncrementResult, cum: f64) {
    trace.steps.push(TraceStep {
        t,
        sigma,
        state: res.state,
        energy: res.energy,
        dissipation_increment: res.dissipation_increment,
        cumulative_dissipation: cum,
        newton_iters: res.newton_iters,
        kkt_residual: res.kkt_residual,
    });
}

fn try_step(
    prev: &PointState,
    sigma_i: &Mat,
    mp: &MaterialParams,
    opts: &NewtonOpts,
) -> Result<IncrementResult, PointError> {
    let res = newton_minimize(prev, sigma_i, mp, opts)?;
    let dp = res.state.p
        * prev
            .p
            .inverse()
            .map_err(|_| PointError::ChartSingular(crate::sl::ParamSingular { denom: 0.0 }))?;
    let d = prev.dim();
    if (dp - Mat::identity(d)).norm() > DP_TRUST {
        return Err(PointError::NoConvergence {
            step: 0,
            t: f64::NAN,
            detail: format!(
                "plastic increment |dP - I| = {:.3} left the chart trust region",
                (dp - Mat::identity(d)).norm()
            ),
        });
    }
    Ok(res)
}

fn stored_energy(s: &PointState, mp: &MaterialParams) -> f64 {
    let fe = s.elastic_strain().expect("valid state");
    let we = crate::constitutive::elastic_energy(&fe, mp).expect("valid state");
    crate::constitutive::zeta(s.z, mp) * we
        + crate::constitutive::hardening(&s.p, mp)
}

/// Chart parameters reproducing an SL(d) matrix near the identity.
pub fn chart_params_of(dp: &Mat) -> SlParams {
    match dp.dim() {
        2 => SlParams::Two(SlParams2 {
            p11: dp.get(0, 0),
            p12: dp.get(0, 1),
            p21: dp.get(1, 0),
        }),
        _ => SlParams::Three(SlParams3 {
            p: [
                dp.get(0, 0),
                dp.get(0, 1),
                dp.get(0, 2),
                dp.get(1, 0),
                dp.get(1, 1),
                dp.get(1, 2),
                dp.get(2, 0),
                dp.get(2, 1),
            ],
        }),
    }
}

/// Verify the rate-independent structure along a trace:
/// damage unidirectionality and non-negativity (up to `eps_reg`), isochoric
/// plastic flow, per-step minimality against the previous state, and the
/// discrete Clausius-Duhem inequality. Returns the first violation.
pub fn check_trace_invariants(trace: &Trace, mp: &MaterialParams) -> Result<(), String> {
    for (k, pair) in trace.steps.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        let i = k + 1;
        let (z0, z1) = (prev.state.z, cur.state.z);
        if z1 > z0 + mp.eps_reg {
            return Err(format!("step {i}: z increased: {z0} -> {z1}"));
        }
        if z1 < -mp.eps_reg {
            return Err(format!("step {i}: z = {z1} below -eps"));
        }
        let det_p = cur.state.p.det();
        if (det_p - 1.0).abs() > 1e-10 {
            return Err(format!("step {i}: det P = {det_p}"));
        }

        let prev_state = prev.state;
        let dp = match cur.state.p * prev_state.p.inverse().map_err(|e| e.to_string())? {
            m => m,
        };
        let q = chart_params_of(&dp);
        let e_acc = incremental_energy(
            &cur.state.f,
            &q,
            z1,
            &prev_state,
            &cur.sigma,
            mp,
        )
        .map_err(|e| format!("step {i}: {e}"))?;
        let e_start = incremental_energy(
            &prev_state.f,
            &SlParams::identity(prev_state.dim()),
            z0,
            &prev_state,
            &cur.sigma,
            mp,
        )
        .map_err(|e| format!("step {i}: {e}"))?;
        let tol = 1e-9 * e_start.abs().max(1.0);
        if e_acc > e_start + tol {
            return Err(format!(
                "step {i}: stability violated: E_acc = {e_acc} > E_start = {e_start}"
            ));
        }

        // Discrete Clausius-Duhem: W_new + D <= W_old + sigma_i : (F_new - F_old).
        let w_old = prev.energy;
        let w_new = cur.energy;
        let power = cur.sigma.frob(&(cur.state.f - prev_state.f));
        let cd_tol = 1e-8 * w_old.abs().max(1.0);
        if w_new + cur.dissipation_increment > w_old + power + cd_tol {
            return Err(format!(
                "step {i}: Clausius-Duhem violated: {} > {}",
                w_new + cur.dissipation_increment,
                w_old + power
            ));
        }
    }
    Ok(())
}

/// Material parameter swept by [`parameter_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    SigmaP,
    Hardening,
    SigmaZ,
    Rho0,
    Zeta0,
}

impl SweepParam {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::SigmaP => "sigma_p",
            SweepParam::Hardening => "H",
            SweepParam::SigmaZ => "sigma_z",
            SweepParam::Rho0 => "rho0",
            SweepParam::Zeta0 => "zeta0",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigma_p" => Ok(SweepParam::SigmaP),
            "H" | "hardening" => Ok(SweepParam::Hardening),
            "sigma_z" => Ok(SweepParam::SigmaZ),
            "rho0" => Ok(SweepParam::Rho0),
            "zeta0" => Ok(SweepParam::Zeta0),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected sigma_p, H, sigma_z, rho0, zeta0)"
            )),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Run one trace per parameter value; members execute in parallel and share
/// only the immutable base parameters.
pub fn parameter_sweep(
    base: &MaterialParams,
    vary: SweepParam,
    values: &[f64],
    program: &LoadProgram,
    tau: f64,
    opts: &NewtonOpts,
) -> Result<Vec<(f64, Trace)>, PointError> {
    let init = PointState::pristine(program.dim);
    values
        .par_iter()
        .map(|&v| {
            let mp = base
                .with_value(vary.key(), v)
                .map_err(|e| PointError::BadSweep(e.to_string()))?;
            let trace = run_history(program, &mp, tau, &init, opts)?;
            Ok((v, trace))
        })
        .collect()
}

/// Sweep and write one CSV per member into `dir`
/// (`trace_<param>_<value>.csv`).
pub fn parameter_sweep_to_csv(
    dir: &Path,
    base: &MaterialParams,
    vary: SweepParam,
    values: &[f64],
    program: &LoadProgram,
    tau: f64,
    opts: &NewtonOpts,
) -> Result<Vec<(f64, Trace)>, PointError> {
    let traces = parameter_sweep(base, vary, values, program, tau, opts)?;
    for (v, trace) in &traces {
        let path = dir.join(format!("trace_{}_{}.csv", vary.key(), v));
        trace.write_csv_file(&path).map_err(|e| PointError::NoConvergence {
            step: 0,
            t: f64::NAN,
            detail: format!("cannot write {}: {e}", path.display()),
        })?;
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::MaterialInput;

    #[test]
    fn zero_load_gives_constant_trace() {
        let mp = MaterialParams::base();
        let program = LoadProgram {
            kind: super::super::LoadKind::CustomTable {
                breakpoints: vec![(0.0, Mat::zero(2)), (1.0, Mat::zero(2))],
            },
            horizon: 1.0,
            dim: 2,
        };
        let init = PointState::pristine(2);
        let trace = run_history(&program, &mp, 0.1, &init, &NewtonOpts::for_scale(mp.mu)).unwrap();
        assert_eq!(trace.steps.len(), 11);
        for s in &trace.steps {
            assert_eq!(s.state.z, 1.0);
            assert!((s.state.f - Mat::identity(2)).norm() == 0.0);
            assert_eq!(s.cumulative_dissipation, 0.0);
        }
        check_trace_invariants(&trace, &mp).unwrap();
    }

    #[test]
    fn damage_free_limit_keeps_z_exactly_one() {
        let inp = MaterialInput {
            rho0: 1.0,
            zeta0: 1.0,
            ..Default::default()
        };
        let mp: MaterialParams = inp.try_into().unwrap();
        let program = LoadProgram::uniaxial(450.0);
        let init = PointState::pristine(2);
        let trace =
            run_history(&program, &mp, 5e-3, &init, &NewtonOpts::for_scale(mp.mu)).unwrap();
        for s in &trace.steps {
            assert_eq!(s.state.z, 1.0, "z drifted at t = {}", s.t);
        }
        check_trace_invariants(&trace, &mp).unwrap();
        // Plasticity still happens in the damage-free limit.
        assert!(trace.plastic_onset(1e-3).is_some());
    }

    #[test]
    fn bad_time_step_is_rejected() {
        let mp = MaterialParams::base();
        let program = LoadProgram::uniaxial(450.0);
        let init = PointState::pristine(2);
        let err = run_history(&program, &mp, 0.3, &init, &NewtonOpts::for_scale(mp.mu));
        assert!(matches!(err, Err(PointError::BadTimeStep { .. })));
    }

    #[test]
    fn short_base_run_respects_invariants() {
        let mp = MaterialParams::base();
        let program = LoadProgram::uniaxial(450.0);
        let init = PointState::pristine(2);
        let trace =
            run_history(&program, &mp, 2e-3, &init, &NewtonOpts::for_scale(mp.mu)).unwrap();
        check_trace_invariants(&trace, &mp).unwrap();
        // Damage happens on the base run; unloading leaves residual plastic
        // strain but flows backwards (the lowered effective yield stress is
        // overcome by the hardening backstress), so |P - I| ends below its
        // peak-load value while staying well away from zero.
        let z_final = trace.steps.last().unwrap().state.z;
        assert!(z_final < 1.0 - 1e-3, "no damage: z = {z_final}");
        let dev_half = trace
            .steps
            .iter()
            .find(|s| s.t >= 0.5)
            .unwrap()
            .plastic_deviation();
        let dev_end = trace.steps.last().unwrap().plastic_deviation();
        assert!(dev_end > 0.05, "no residual plasticity: {dev_end}");
        assert!(dev_end < dev_half, "{dev_end} vs {dev_half}");
        // Reverse flow is itself dissipative: cumulative dissipation keeps
        // growing through the unloading phase.
        let diss_half = trace.steps.iter().find(|s| s.t >= 0.5).unwrap().cumulative_dissipation;
        let diss_end = trace.steps.last().unwrap().cumulative_dissipation;
        assert!(diss_end > diss_half);
    }

    #[test]
    fn sweep_runs_in_parallel_and_orders_output() {
        let mp = MaterialParams::base();
        let program = LoadProgram::uniaxial(450.0);
        let values = [150.0, 250.0, 350.0];
        let traces = parameter_sweep(
            &mp,
            SweepParam::SigmaP,
            &values,
            &program,
            5e-3,
            &NewtonOpts::for_scale(mp.mu),
        )
        .unwrap();
        assert_eq!(traces.len(), 3);
        for ((v, t), expect) in traces.iter().zip(values) {
            assert_eq!(*v, expect);
            let mp_v = mp.with_value("sigma_p", *v).unwrap();
            check_trace_invariants(t, &mp_v).unwrap();
        }
        // Earlier onset for smaller yield stress.
        let onset: Vec<f64> = traces
            .iter()
            .map(|(_, t)| t.plastic_onset(1e-3).unwrap())
            .collect();
        assert!(onset[0] <= onset[1] && onset[1] <= onset[2], "{onset:?}");
    }
}
