//! Fixed-step RK4 integration of `d²x/dt² + G(x, dx/dt) = 0`.
//!
//! CSV layout of an exported trace (frozen): header
//! `t,x1..xN,y1..yN,K`, one row per recorded step; the `K` column is empty
//! when no monitor was supplied.

use std::io::Write;

use serde::Serialize;

use crate::background::{BackgroundSpace, Frame};
use crate::error::{Error, Result};
use crate::finsleroid::{evaluate_k, Charge};
use crate::numkit::DiffConfig;
use crate::spray::{spray_at, SprayKind};

/// Solution samples; `k_values` is empty without a monitor.
#[derive(Clone, Debug, Serialize)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub k_values: Vec<f64>,
    /// `max |K(t) − K(0)| / K(0)`
    pub max_k_drift: Option<f64>,
    /// set when the trajectory entered the `q ≤ q_min` cone
    pub truncated: bool,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_point(&self) -> &[f64] {
        self.points.last().expect("trace holds the initial point")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.points.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("y{i}")));
        header.push("K".into());
        w.write_record(&header)?;
        for r in 0..self.len() {
            let mut row = vec![fmt(self.times[r])];
            row.extend(self.points[r].iter().map(|&v| fmt(v)));
            row.extend(self.velocities[r].iter().map(|&v| fmt(v)));
            row.push(self.k_values.get(r).map_or(String::new(), |&k| fmt(k)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn check_finite(v: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(t))
    }
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// One RK4 step of `(x, y)' = (y, −G(x, y))`.
fn rk4_step<S>(spray: &S, x: &[f64], y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    S: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    let accel = |x: &[f64], y: &[f64]| -> Result<Vec<f64>> { Ok(spray(x, y)?.into_iter().map(|g| -g).collect()) };
    let (k1x, k1y) = (y.to_vec(), accel(x, y)?);
    let (x2, y2) = (axpy(x, 0.5 * h, &k1x), axpy(y, 0.5 * h, &k1y));
    let (k2x, k2y) = (y2.clone(), accel(&x2, &y2)?);
    let (x3, y3) = (axpy(x, 0.5 * h, &k2x), axpy(y, 0.5 * h, &k2y));
    let (k3x, k3y) = (y3.clone(), accel(&x3, &y3)?);
    let (x4, y4) = (axpy(x, h, &k3x), axpy(y, h, &k3y));
    let (k4x, k4y) = (y4.clone(), accel(&x4, &y4)?);
    let comb = |z: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..z.len()).map(|i| z[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    Ok((comb(x, &k1x, &k2x, &k3x, &k4x), comb(y, &k1y, &k2y, &k3y, &k4y)))
}

/// Integrate from `t = 0` to `t_end` with fixed `step` (the last step is
/// shortened to land on `t_end`).
pub fn integrate_geodesic<S, M>(
    spray: S,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    step: f64,
    monitor: Option<M>,
) -> Result<GeodesicTrace>
where
    S: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
    M: Fn(&[f64], &[f64]) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be non-negative, got {t_end}")));
    }
    if x0.len() != y0.len() {
        return Err(Error::Domain("x0 and y0 differ in length".into()));
    }
    if y0.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("y0 = 0".into()));
    }
    check_finite(x0, 0.0)?;
    check_finite(y0, 0.0)?;
    let steps = ((t_end / step) - 1e-9).ceil().max(0.0) as usize;
    let mut trace = GeodesicTrace {
        times: vec![0.0],
        points: vec![x0.to_vec()],
        velocities: vec![y0.to_vec()],
        k_values: Vec::new(),
        max_k_drift: None,
        truncated: false,
    };
    let record_k = |trace: &mut GeodesicTrace, x: &[f64], y: &[f64]| -> Result<()> {
        if let Some(m) = &monitor {
            let k = m(x, y)?;
            let k0 = *trace.k_values.first().unwrap_or(&k);
            let drift = ((k - k0) / k0).abs();
            trace.max_k_drift = Some(trace.max_k_drift.map_or(drift, |d| d.max(drift)));
            trace.k_values.push(k);
        }
        Ok(())
    };
    match record_k(&mut trace, x0, y0) {
        Err(Error::NearCollinear { .. }) => {
            trace.truncated = true;
            return Ok(trace);
        }
        r => r?,
    }
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for s in 0..steps {
        let t = (s as f64) * step;
        let h = if s + 1 == steps { t_end - t } else { step };
        let (xn, yn) = match rk4_step(&spray, &x, &y, h) {
            Err(Error::NearCollinear { .. }) => {
                trace.truncated = true;
                break;
            }
            r => r?,
        };
        check_finite(&xn, t + h)?;
        check_finite(&yn, t + h)?;
        match record_k(&mut trace, &xn, &yn) {
            Err(Error::NearCollinear { .. }) => {
                trace.truncated = true;
                break;
            }
            r => r?,
        }
        x = xn;
        y = yn;
        trace.times.push(t + h);
        trace.points.push(x.clone());
        trace.velocities.push(y.clone());
    }
    Ok(trace)
}

/// Closed-form Finsleroid geodesic spray of a background, as a function of `(x, y)`.
pub fn finsleroid_spray<'a>(
    space: &'a BackgroundSpace,
    charge: Charge,
    cfg: DiffConfig,
) -> impl Fn(&[f64], &[f64]) -> Result<Vec<f64>> + 'a {
    move |x, y| spray_at(SprayKind::finsleroid(&charge), space, x, y, &cfg)
}

/// `K(x, y)` for use as a monitor.
pub fn k_monitor(space: &BackgroundSpace, charge: Charge) -> impl Fn(&[f64], &[f64]) -> Result<f64> + '_ {
    move |x, y| {
        let f = Frame::new(&space.geometry_at(x)?, y)?;
        f.require_off_axis()?;
        Ok(evaluate_k(&charge, &f)?.k)
    }
}

/// Largest coordinate difference between two traces at their final points.
pub fn endpoint_error(a: &GeodesicTrace, b: &GeodesicTrace) -> f64 {
    a.last_point().iter().zip(b.last_point()).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Observed order `log2(e(h)/e(h/2))` against a fine reference run.
pub fn convergence_order<S>(spray: S, x0: &[f64], y0: &[f64], t_end: f64, step: f64) -> Result<f64>
where
    S: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    let none = None::<fn(&[f64], &[f64]) -> Result<f64>>;
    let coarse = integrate_geodesic(&spray, x0, y0, t_end, step, none)?;
    let fine = integrate_geodesic(&spray, x0, y0, t_end, step / 2.0, none)?;
    let reference = integrate_geodesic(&spray, x0, y0, t_end, step / 64.0, none)?;
    if coarse.truncated || fine.truncated || reference.truncated {
        return Err(Error::Domain("trajectory entered the q ≤ q_min cone".into()));
    }
    Ok((endpoint_error(&coarse, &reference) / endpoint_error(&fine, &reference)).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{fixtures, WarpProfile};

    type Monitor = fn(&[f64], &[f64]) -> Result<f64>;

    #[test]
    fn straight_lines_in_flat_space() {
        let space = fixtures::euclidean(3).unwrap();
        let spray = finsleroid_spray(&space, Charge::new(0.0).unwrap(), DiffConfig::default());
        let x0 = [0.1, -0.2, 0.3];
        let y0 = [0.5, 0.4, -0.7];
        let tr = integrate_geodesic(spray, &x0, &y0, 1.0, 0.01, None::<Monitor>).unwrap();
        assert_eq!(tr.len(), 101);
        assert!((tr.times[100] - 1.0).abs() < 1e-12);
        for (t, p) in tr.times.iter().zip(&tr.points) {
            for i in 0..3 {
                assert!((p[i] - (x0[i] + t * y0[i])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn doubled_velocity_halves_the_time() {
        let space = fixtures::make_warped_space(3, &WarpProfile::exponential(0.5)).unwrap();
        let charge = Charge::new(1.0).unwrap();
        let x0 = [0.1, -0.2, 0.3];
        let y0 = [0.5, 0.4, -0.7];
        let y2: Vec<f64> = y0.iter().map(|v| 2.0 * v).collect();
        let a = integrate_geodesic(finsleroid_spray(&space, charge, DiffConfig::default()), &x0, &y0, 0.8, 0.01, None::<Monitor>)
            .unwrap();
        let b = integrate_geodesic(finsleroid_spray(&space, charge, DiffConfig::default()), &x0, &y2, 0.4, 0.005, None::<Monitor>)
            .unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            for i in 0..3 {
                assert!((p[i] - q[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn k_is_conserved_on_warped_background() {
        let space = fixtures::make_warped_space(3, &WarpProfile::exponential(0.5)).unwrap();
        let charge = Charge::new(1.0).unwrap();
        let tr = integrate_geodesic(
            finsleroid_spray(&space, charge, DiffConfig::default()),
            &[0.1, -0.2, 0.3],
            &[0.5, 0.4, -0.7],
            1.0,
            1e-3,
            Some(k_monitor(&space, charge)),
        )
        .unwrap();
        assert!(!tr.truncated);
        assert_eq!(tr.k_values.len(), tr.len());
        assert!(tr.max_k_drift.unwrap() < 1e-6, "{:?}", tr.max_k_drift);
    }

    #[test]
    fn fourth_order_convergence() {
        let space = fixtures::perturbed_euclidean(3, 0.3).unwrap();
        let charge = Charge::new(1.0).unwrap();
        let spray = finsleroid_spray(&space, charge, DiffConfig::default());
        let order = convergence_order(&spray, &[0.1, -0.2, 0.3], &[0.5, 0.4, -0.7], 1.0, 0.1).unwrap();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn riemannian_limit_follows_background_geodesics() {
        let space = fixtures::anisotropic_warped(3, vec![0.4, -0.3], 0.2).unwrap();
        let cfg = DiffConfig::default();
        let fins = finsleroid_spray(&space, Charge::new(0.0).unwrap(), cfg);
        let riem = |x: &[f64], y: &[f64]| spray_at(SprayKind::Riemann, &space, x, y, &cfg);
        let (x0, y0) = ([0.1, -0.2, 0.3], [0.5, 0.4, -0.7]);
        let a = integrate_geodesic(fins, &x0, &y0, 1.0, 0.01, None::<Monitor>).unwrap();
        let b = integrate_geodesic(riem, &x0, &y0, 1.0, 0.01, None::<Monitor>).unwrap();
        assert!(endpoint_error(&a, &b) < 1e-8);
    }

    #[test]
    fn starting_along_b_truncates() {
        let space = fixtures::euclidean(2).unwrap();
        let charge = Charge::new(0.5).unwrap();
        let tr = integrate_geodesic(
            finsleroid_spray(&space, charge, DiffConfig::default()),
            &[0.0, 0.0],
            &[1.0, 0.0],
            1.0,
            0.1,
            Some(k_monitor(&space, charge)),
        )
        .unwrap();
        assert!(tr.truncated);
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn rejects_bad_steps() {
        let space = fixtures::euclidean(2).unwrap();
        let spray = finsleroid_spray(&space, Charge::new(0.5).unwrap(), DiffConfig::default());
        for h in [0.0, -0.1, f64::NAN] {
            assert!(matches!(integrate_geodesic(&spray, &[0.0; 2], &[0.3, 1.0], 1.0, h, None::<Monitor>), Err(Error::Config(_))));
        }
        assert!(integrate_geodesic(&spray, &[0.0; 2], &[0.0, 0.0], 1.0, 0.1, None::<Monitor>).is_err());
    }

    #[test]
    fn csv_layout() {
        let space = fixtures::euclidean(2).unwrap();
        let charge = Charge::new(0.5).unwrap();
        let tr = integrate_geodesic(
            finsleroid_spray(&space, charge, DiffConfig::default()),
            &[0.0, 0.0],
            &[0.3, 1.0],
            0.25,
            0.1,
            Some(k_monitor(&space, charge)),
        )
        .unwrap();
        assert_eq!(tr.times, vec![0.0, 0.1, 0.2, 0.25]);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,y1,y2,K");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0.0,0.0,0.0,0.3,1.0,"));
    }
}
