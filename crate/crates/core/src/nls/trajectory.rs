use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mass, NlsError, NlsParams, SplitStep};
use crate::spectral::{write_snapshot, Field, SobolevWeight};
use crate::Real;

/// Largest number of steps a single [`evolve`] call will take.
pub const MAX_STEPS: u64 = 50_000_000;

/// What [`evolve`] records along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec<T> {
    /// Record every this many steps (and always at the start and end).
    pub sample_every: usize,
    /// Sobolev norms to record, as `(s, weight)`.
    pub sobolev: Vec<(T, SobolevWeight)>,
    pub store_snapshots: bool,
}

impl<T> Default for ObservableSpec<T> {
    fn default() -> Self {
        Self { sample_every: 1, sobolev: Vec::new(), store_snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow<T> {
    pub t: T,
    pub mass: T,
    pub energy: T,
    pub sobolev: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub snapshots: Option<Vec<Field<T>>>,
    pub observables: Vec<ObservableRow<T>>,
    /// State at the last completed step.
    pub last: Field<T>,
    /// Set when a non-finite value stopped the run early.
    pub halted: Option<String>,
    pub sobolev: Vec<(T, SobolevWeight)>,
}

impl<T: Real> Trajectory<T> {
    pub fn completed(&self) -> bool {
        self.halted.is_none()
    }

    /// Largest relative mass deviation from the first sample.
    pub fn mass_drift(&self) -> T {
        relative_drift(self.observables.iter().map(|r| r.mass))
    }

    /// Largest relative energy deviation from the first sample.
    pub fn energy_drift(&self) -> T {
        relative_drift(self.observables.iter().map(|r| r.energy))
    }

    /// Columns `t, mass, energy, hs_<s>…`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), NlsError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "mass".into(), "energy".into()];
        header.extend(self.sobolev.iter().map(|(s, w)| match w {
            SobolevWeight::Bracket => format!("hs_{s}"),
            SobolevWeight::Eigen => format!("hs_{s}_eigen"),
        }));
        out.write_record(&header)?;
        for r in &self.observables {
            let mut rec = vec![format!("{:e}", r.t), format!("{:e}", r.mass), format!("{:e}", r.energy)];
            rec.extend(r.sobolev.iter().map(|v| format!("{v:e}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn relative_drift<T: Real>(mut values: impl Iterator<Item = T>) -> T {
    let Some(first) = values.next() else { return T::zero() };
    let scale = if first.abs() > T::zero() { first.abs() } else { T::one() };
    values.map(|v| (v - first).abs() / scale).fold(T::zero(), T::max)
}

/// Integrate to time `t_final` with steps of `params.dt`, shortening the
/// last one. A non-finite state stops the run and is reported in
/// [`Trajectory::halted`].
pub fn evolve<T: Real>(
    u0: &Field<T>,
    t_final: T,
    params: &NlsParams<T>,
    record: &ObservableSpec<T>,
) -> Result<Trajectory<T>, NlsError> {
    params.validate()?;
    if !(t_final > T::zero() && t_final.is_finite()) {
        return Err(NlsError::InvalidParams(format!("final time must be positive, got {t_final}")));
    }
    if record.sample_every == 0 {
        return Err(NlsError::InvalidParams("sample_every must be >= 1".into()));
    }
    let ratio = t_final / params.dt;
    let nearest = ratio.round();
    let ratio = if (ratio - nearest).abs() <= T::lit(1e-9) * nearest { nearest } else { ratio.ceil() };
    let steps = ratio.to_u64().unwrap_or(u64::MAX).max(1);
    if steps > MAX_STEPS {
        return Err(NlsError::StepBudget { steps, limit: MAX_STEPS });
    }
    let mut stepper = SplitStep::new(u0.grid(), params.alpha, params.dealias_oversample)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        snapshots: record.store_snapshots.then(Vec::new),
        observables: Vec::new(),
        last: u0.clone(),
        halted: None,
        sobolev: record.sobolev.clone(),
    };
    let push = |traj: &mut Trajectory<T>, stepper: &mut SplitStep<T>, t: T, u: &Field<T>| -> Result<(), NlsError> {
        let row = ObservableRow {
            t,
            mass: mass(u),
            energy: stepper.energy(u)?,
            sobolev: record.sobolev.iter().map(|&(s, w)| u.sobolev_norm(s, w)).collect(),
        };
        traj.times.push(t);
        traj.observables.push(row);
        if let Some(snaps) = traj.snapshots.as_mut() {
            snaps.push(u.clone());
        }
        Ok(())
    };
    push(&mut traj, &mut stepper, T::zero(), u0)?;
    let mut u = u0.clone();
    let mut t = T::zero();
    for k in 1..=steps {
        let h = if k == steps { t_final - t } else { params.dt };
        let next = stepper.step_by(&u, h)?;
        if next.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            traj.halted = Some(format!("non-finite state after step {k} at t = {}", t + h));
            break;
        }
        u = next;
        t = if k == steps { t_final } else { t + h };
        if k % record.sample_every as u64 == 0 || k == steps {
            push(&mut traj, &mut stepper, t, &u)?;
        }
    }
    traj.last = u;
    Ok(traj)
}

/// Snapshot of `u` plus `params.json` in `dir`.
pub fn write_checkpoint<T: Real + Serialize>(u: &Field<T>, t: T, params: &NlsParams<T>, dir: &Path) -> Result<(), NlsError> {
    fs::create_dir_all(dir)?;
    write_snapshot(u, &dir.join("field.json"), &dir.join("field.csv"))?;
    let meta = serde_json::json!({ "t": t, "params": params });
    fs::write(dir.join("params.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nls::{energy, Alpha};
    use crate::rng;
    use crate::spectral::{read_snapshot, FourierGrid, TorusGeometry};
    use num_complex::Complex;
    use rand::Rng;

    fn smooth(seed: u64, amp: f64) -> Field<f64> {
        let g = FourierGrid::new(TorusGeometry::standard(), 32).unwrap();
        let mut r = rng::stream(seed, 0);
        Field::from_fn(g, |m1, m2| {
            if m1.abs() <= 3 && m2.abs() <= 3 {
                Complex::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)) * (amp / (1.0 + (m1 * m1 + m2 * m2) as f64))
            } else {
                Complex::default()
            }
        })
    }

    #[test]
    fn zero_data_stays_zero() {
        let u = Field::zeros(FourierGrid::new(TorusGeometry::standard(), 16).unwrap());
        let p = NlsParams::new(Alpha::Focusing, 0.1, 2).unwrap();
        let spec = ObservableSpec { sample_every: 1, sobolev: vec![(1.0, SobolevWeight::Bracket)], store_snapshots: true };
        let tr = evolve(&u, 1.0, &p, &spec).unwrap();
        assert!(tr.completed());
        assert!(tr.snapshots.unwrap().iter().all(Field::is_zero));
        assert!(tr.observables.iter().all(|r| r.mass == 0.0 && r.energy == 0.0 && r.sobolev[0] == 0.0));
    }

    #[test]
    fn last_step_is_shortened() {
        let u = smooth(1, 0.5);
        let p = NlsParams::new(Alpha::Defocusing, 0.3, 2).unwrap();
        let spec = ObservableSpec { sample_every: 2, ..Default::default() };
        let tr = evolve(&u, 1.0, &p, &spec).unwrap();
        assert_eq!(tr.times.len(), tr.observables.len());
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(tr.times.len(), 3);
        let mut s = SplitStep::new(u.grid(), Alpha::Defocusing, 2).unwrap();
        let mut v = u.clone();
        for h in [0.3, 0.3, 0.3, 0.1] {
            v = s.step_by(&v, h).unwrap();
        }
        assert!(tr.last.sub(&v).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn energy_drift_is_second_order() {
        let u = smooth(2, 0.5);
        let e0 = energy(&u, Alpha::Focusing).unwrap();
        let drift = |dt: f64| {
            let p = NlsParams::new(Alpha::Focusing, dt, 2).unwrap();
            let tr = evolve(&u, 1.0, &p, &ObservableSpec { sample_every: 1_000_000, ..Default::default() }).unwrap();
            (tr.observables.last().unwrap().energy - e0).abs()
        };
        let ratio = drift(0.01) / drift(0.005);
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn blow_up_proxy_halts() {
        let g = FourierGrid::new(TorusGeometry::standard(), 8).unwrap();
        let u = Field::single_mode(g, (0, 0), Complex::new(1e200, 0.0)).unwrap();
        let p = NlsParams::new(Alpha::Focusing, 0.1, 2).unwrap();
        let tr = evolve(&u, 1.0, &p, &ObservableSpec::default()).unwrap();
        assert!(tr.halted.is_some());
    }

    #[test]
    fn budget_and_argument_errors() {
        let u = smooth(3, 0.1);
        let p = NlsParams::new(Alpha::Focusing, 1e-9, 2).unwrap();
        assert!(matches!(evolve(&u, 1.0, &p, &ObservableSpec::default()), Err(NlsError::StepBudget { .. })));
        let p = NlsParams::new(Alpha::Focusing, 0.1, 2).unwrap();
        assert!(evolve(&u, -1.0, &p, &ObservableSpec::default()).is_err());
        let spec = ObservableSpec { sample_every: 0, ..Default::default() };
        assert!(evolve(&u, 1.0, &p, &spec).is_err());
    }

    #[test]
    fn csv_and_checkpoint() {
        let u = smooth(4, 0.5);
        let p = NlsParams::new(Alpha::Defocusing, 0.25, 2).unwrap();
        let spec = ObservableSpec { sample_every: 1, sobolev: vec![(1.0, SobolevWeight::Bracket)], store_snapshots: false };
        let tr = evolve(&u, 1.0, &p, &spec).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,mass,energy,hs_1\n"));
        assert_eq!(text.lines().count(), 6);
        let dir = tempfile::tempdir().unwrap();
        write_checkpoint(&tr.last, 1.0, &p, dir.path()).unwrap();
        let back: Field<f64> = read_snapshot(&dir.path().join("field.json"), &dir.path().join("field.csv")).unwrap();
        assert_eq!(back, tr.last);
        assert!(dir.path().join("params.json").exists());
    }
}
