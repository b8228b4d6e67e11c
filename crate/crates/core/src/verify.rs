//! Seeded verification of every closed-form identity against its oracle.
//!
//! Report schema (frozen): `{seed, samples, background, dim, g, method,
//! rejections, pass, records: [{name, equation, samples, max_residual,
//! tolerance, bound, pass, note?}]}`. `bound` is `"below"` for identities
//! (residual must stay under the tolerance) and `"above"` for the negative
//! control (the measured quantity must exceed it).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::background::{BackgroundSpace, Connection, Frame, PointGeometry};
use crate::config::{Config, Tolerances};
use crate::error::{Error, Result};
use crate::finsleroid::{
    cartan_trace_y_form, generating_phi, generating_v, inverse_metric_u_form, lower_y_u_form, metric_eval,
    metric_tensor_u_form, BranchSign, Charge, KSquared, MetricEval, S_MARGIN,
};
use crate::geodesics::{finsleroid_spray, integrate_geodesic, k_monitor};
use crate::numkit::{cholesky, derive_x, derive_y, derive_y_field, DiffConfig, DiffMethod, FiberScalar, Jet3};
use crate::real::{dot, Real};
use crate::spray::{
    cascade_closed, cascade_g3_long, dot_a, general_spray, geodesic_spray_closed, geodesic_spray_numeric,
    landsberg_spray, SprayCoeffs, SprayField, SprayKind, SprayScalars,
};
use crate::tensor::{max_abs, max_abs_diff, rel_diff, Tensor4};

/// Magnitudes of sampled y are log-uniform in this range.
pub const Y_MAGNITUDE: (f64, f64) = (0.1, 10.0);

/// Seeded sampler of base points and tangent vectors (SplitMix64 stream).
pub struct Sampler {
    rng: SplitMix64,
    pub rejections: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: SplitMix64::seed_from_u64(seed), rejections: 0 }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    /// A point of the box `[-half, half]^dim` inside the background domain.
    pub fn base_point(&mut self, space: &BackgroundSpace, half: f64) -> Result<(Vec<f64>, PointGeometry)> {
        for _ in 0..1000 {
            let x: Vec<f64> = (0..space.dim()).map(|_| self.uniform(-half, half)).collect();
            match space.geometry_at(&x) {
                Ok(g) => return Ok((x, g)),
                Err(_) => self.rejections += 1,
            }
        }
        Err(Error::Background("no admissible base point found in the sampling box".into()))
    }

    /// Uniform on the unit `a`-sphere, scaled by a log-uniform magnitude;
    /// vectors with `q ≤ q_min` are redrawn.
    pub fn fiber_vector(&mut self, geom: &PointGeometry) -> Result<Vec<f64>> {
        let l = cholesky(&geom.a)?;
        let n = geom.dim();
        loop {
            let z: Vec<f64> = (0..n).map(|_| self.rng.sample(StandardNormal)).collect();
            let norm = dot(&z, &z).sqrt();
            if norm == 0.0 {
                continue;
            }
            // Lᵀ y = z / |z| puts y on the unit a-sphere
            let mut y = vec![0.0; n];
            for i in (0..n).rev() {
                let s: f64 = (i + 1..n).map(|k| l[(k, i)] * y[k]).sum();
                y[i] = (z[i] / norm - s) / l[(i, i)];
            }
            let m = self.log_uniform(Y_MAGNITUDE.0, Y_MAGNITUDE.1);
            y.iter_mut().for_each(|v| *v *= m);
            if Frame::new(geom, &y)?.require_off_axis().is_ok() {
                return Ok(y);
            }
            self.rejections += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Below,
    Above,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub name: String,
    pub equation: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub background: String,
    pub dim: usize,
    pub g: f64,
    pub method: DiffMethod,
    pub rejections: u64,
    pub pass: bool,
    pub records: Vec<IdentityRecord>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "background {} (N = {}), g = {}, seed {}, {} samples, {} rejections",
            self.background, self.dim, self.g, self.seed, self.samples, self.rejections
        );
        let _ = writeln!(s, "{:<28} {:>7} {:>11} {:>10}  {:<6} equation", "identity", "samples", "residual", "tolerance", "result");
        for r in &self.records {
            let cmp = match r.bound {
                Bound::Below => "<",
                Bound::Above => ">",
            };
            let _ = writeln!(
                s,
                "{:<28} {:>7} {:>11.3e} {cmp}{:>9.1e}  {:<6} {}{}",
                r.name,
                r.samples,
                r.max_residual,
                r.tolerance,
                if r.pass { "pass" } else { "FAIL" },
                r.equation,
                r.note.as_ref().map_or(String::new(), |n| format!(" ({n})")),
            );
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        s
    }
}

/// Running maxima of residuals, in first-seen order.
#[derive(Default)]
pub struct Ledger {
    records: Vec<IdentityRecord>,
}

impl Ledger {
    pub fn add(&mut self, name: &str, equation: &str, tolerance: f64, residual: f64) {
        self.add_bounded(name, equation, tolerance, residual, Bound::Below);
    }

    pub fn add_bounded(&mut self, name: &str, equation: &str, tolerance: f64, residual: f64, bound: Bound) {
        let r = match self.records.iter_mut().position(|r| r.name == name) {
            Some(i) => &mut self.records[i],
            None => {
                self.records.push(IdentityRecord {
                    name: name.into(),
                    equation: equation.into(),
                    samples: 0,
                    max_residual: 0.0,
                    tolerance,
                    bound,
                    pass: false,
                    note: None,
                });
                self.records.last_mut().expect("just pushed")
            }
        };
        r.samples += 1;
        // a NaN residual sticks, so the record fails
        if r.samples == 1 || (!r.max_residual.is_nan() && (residual.is_nan() || residual > r.max_residual)) {
            r.max_residual = residual;
        }
    }

    pub fn set_note(&mut self, name: &str, note: String) {
        if let Some(r) = self.records.iter_mut().find(|r| r.name == name) {
            r.note = Some(note);
        }
    }

    pub fn note(&mut self, name: &str, equation: &str, tolerance: f64, note: String) {
        self.records.push(IdentityRecord {
            name: name.into(),
            equation: equation.into(),
            samples: 0,
            max_residual: 0.0,
            tolerance,
            bound: Bound::Below,
            pass: true,
            note: Some(note),
        });
    }

    pub fn finish(mut self) -> Vec<IdentityRecord> {
        for r in &mut self.records {
            if r.samples > 0 {
                r.pass = match r.bound {
                    Bound::Below => r.max_residual < r.tolerance,
                    Bound::Above => r.max_residual > r.tolerance,
                };
            }
        }
        self.records
    }
}

/// Everything needed to check identities at one `(x, y)`.
pub struct SamplePoint<'a> {
    pub space: &'a BackgroundSpace,
    pub charge: Charge,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub geom: PointGeometry,
    pub conn: Connection,
    pub frame: Frame<f64>,
    pub metric: MetricEval<f64>,
    /// `k` when the background satisfies `∇_j b_i = k(a_ij − b_i b_j)` by construction
    pub k: Option<f64>,
    pub cfg: DiffConfig,
}

fn ratio(num: f64, den: f64) -> f64 {
    num / den.max(1e-12)
}

/// `|w_i T^i...|` relative to `|w|·max|T|` for a contraction over the first index.
fn contraction_residual(t: &Tensor4<f64>, w: &[f64], scale: f64) -> f64 {
    let n = t.dim();
    let mut m = 0.0f64;
    for k in 0..n {
        for l in 0..n {
            for p in 0..n {
                let s: f64 = (0..n).map(|i| w[i] * t[(i, k, l, p)]).sum();
                m = m.max(s.abs());
            }
        }
    }
    ratio(m, max_abs(w) * scale)
}

fn jets_to_cascade(js: &[Jet3]) -> (Vec<f64>, Vec<f64>, Tensor4<f64>) {
    let n = js.len();
    let g1 = (0..n * n).map(|e| js[e / n].grad[e % n]).collect();
    let g2 = (0..n * n * n).map(|e| js[e / (n * n)].hess[((e / n) % n, e % n)]).collect();
    let g3 = Tensor4::from_fn(n, |i, k, m, l| js[i].third[(k, m, l)]);
    (g1, g2, g3)
}

struct VSquared(Charge, BranchSign);
impl FiberScalar for VSquared {
    fn eval<T: Real>(&self, w: &[T]) -> Result<T> {
        let v = generating_v(&self.0, w[0], self.1).v;
        Ok(v * v)
    }
}

impl<'a> SamplePoint<'a> {
    pub fn new(space: &'a BackgroundSpace, charge: Charge, x: Vec<f64>, y: Vec<f64>, k: Option<f64>, cfg: DiffConfig) -> Result<Self> {
        let geom = space.geometry_at(&x)?;
        let conn = space.connection_at(&x, &cfg)?;
        let frame = Frame::new(&geom, &y)?;
        let metric = metric_eval(&charge, &frame)?;
        Ok(SamplePoint { space, charge, x, y, geom, conn, frame, metric, k, cfg })
    }

    /// Landsberg coefficient: `gk` under the concircular condition, otherwise
    /// `g` (the cascade identities are algebraic in c).
    pub fn cascade_c(&self) -> f64 {
        self.k.map_or(self.charge.g, |k| self.charge.g * k)
    }

    pub fn cascade(&self) -> Result<SprayCoeffs<f64>> {
        cascade_closed(self.cascade_c(), &self.frame, &self.conn)?.with_lowered(&self.metric, &self.frame)
    }

    /// y-derivatives of `K²` against `(y_i, g_ij, A_i)`.
    pub fn metric_oracle(&self) -> Result<(f64, f64, f64)> {
        let m = &self.metric;
        let k2 = KSquared { charge: self.charge, geom: &self.geom };
        let (jet, third) = match self.cfg.method {
            DiffMethod::ForwardJets => {
                let jet = derive_y(&k2, &self.y, 3, &self.cfg)?;
                let third = jet.third.clone();
                (jet, third)
            }
            DiffMethod::CentralFd => {
                (derive_y(&k2, &self.y, 2, &self.cfg)?, derive_y(&k2, &self.y, 3, &self.third_cfg())?.third)
            }
        };
        let half_grad: Vec<f64> = jet.grad.iter().map(|v| 0.5 * v).collect();
        let half_hess = jet.hess.map(|v| 0.5 * v);
        let n = self.y.len();
        let a: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += m.g_up[(j, k)] * 0.25 * third[(i, j, k)];
                    }
                }
                m.k * s
            })
            .collect();
        // A_i is a difference of O(1) terms; compare on the scale of K g^jk C_ijk's inputs
        let a_scale = max_abs(&m.a_dn).max(m.k * m.g_up.max_abs() * third.max_abs() * 0.25);
        Ok((
            rel_diff(&half_grad, &m.y_dn),
            rel_diff(half_hess.as_slice(), m.g_dn.as_slice()),
            ratio(max_abs_diff(&a, &m.a_dn), a_scale),
        ))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.metric;
        let expect = (m.k * m.k / m.b_form).powi(self.y.len() as i32);
        ((m.det_ratio - expect) / expect).abs()
    }

    pub fn inverse(&self) -> f64 {
        let prod = self.metric.g_up.matmul(&self.metric.g_dn);
        let n = self.y.len();
        let mut m = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let d = if i == k { 1.0 } else { 0.0 };
                m = m.max((prod[(i, k)] - d).abs());
            }
        }
        m
    }

    pub fn u_forms(&self) -> Result<f64> {
        let (c, f, m) = (&self.charge, &self.frame, &self.metric);
        Ok([
            rel_diff(&lower_y_u_form(c, f, m.k, m.b_form), &m.y_dn),
            rel_diff(metric_tensor_u_form(c, f, m.k, m.b_form)?.as_slice(), m.g_dn.as_slice()),
            rel_diff(inverse_metric_u_form(c, f, m.k, m.b_form)?.as_slice(), m.g_up.as_slice()),
            rel_diff(&cartan_trace_y_form(c, f, m.k, &m.y_dn)?, &m.a_dn),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    }

    /// `g_ij y^i y^j = K²`, `y_i y^i = K²`, `A_i y^i = 0`.
    pub fn euler(&self) -> f64 {
        let m = &self.metric;
        let k2 = m.k * m.k;
        let r1 = ((m.g_dn.quad(&self.y, &self.y) - k2) / k2).abs();
        let r2 = ((dot(&m.y_dn, &self.y) - k2) / k2).abs();
        let r3 = ratio(dot(&m.a_dn, &self.y).abs(), max_abs(&m.a_dn) * max_abs(&self.y));
        r1.max(r2).max(r3)
    }

    pub fn generating_phi_k(&self) -> Option<f64> {
        let f = &self.frame;
        let s = f.b / f.s;
        let p = generating_phi(&self.charge, s).ok()?;
        Some(((f.s * p.phi - self.metric.k) / self.metric.k).abs())
    }

    pub fn generating_v_k(&self) -> Option<f64> {
        let f = &self.frame;
        if f.b.abs() <= 1e-6 * f.s {
            return None;
        }
        let v = generating_v(&self.charge, f.q / f.b, BranchSign::of(f.b));
        Some(((f.b.abs() * v.v - self.metric.k) / self.metric.k).abs())
    }

    /// Cascade `(G1, G2, G3)` against y-derivatives of `G^i` with the configured method.
    pub fn cascade_oracle(&self, co: &SprayCoeffs<f64>) -> Result<(f64, f64)> {
        let field = SprayField { kind: SprayKind::Landsberg { c: co.c }, geom: &self.geom, conn: &self.conn };
        let js = derive_y_field(&field, &self.y, 3, &self.third_cfg())?;
        let (g1, g2, g3) = jets_to_cascade(&js);
        let low = rel_diff(&g1, co.g1.as_slice()).max(rel_diff(&g2, co.g2.as_slice()));
        Ok((low, ratio(max_abs_diff(g3.as_slice(), co.g3.as_slice()), self.g3_scale(co))))
    }

    pub fn cascade_fd(&self, co: &SprayCoeffs<f64>) -> Result<f64> {
        let field = SprayField { kind: SprayKind::Landsberg { c: co.c }, geom: &self.geom, conn: &self.conn };
        let fd = DiffConfig::central_fd(self.cfg.richardson_levels);
        let cfg = self.off_axis_fd(fd.with_step_scale(3.0 * fd.fd_step_scale));
        let js = derive_y_field(&field, &self.y, 3, &cfg)?;
        let (_, _, g3) = jets_to_cascade(&js);
        Ok(ratio(max_abs_diff(g3.as_slice(), co.g3.as_slice()), self.g3_scale(co)))
    }

    /// Shrinks the third-order stencil so that it stays well inside the
    /// cone `q > 0`; `q v^i` is not smooth across the b-axis.
    fn off_axis_fd(&self, cfg: DiffConfig) -> DiffConfig {
        let n = self.y.len() as f64;
        let y_max = self.y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let a_norm = self.geom.a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt().sqrt();
        // the stencil reaches 2h along up to three axes
        let reach = 2.0 * n.sqrt() * a_norm * y_max * f64::EPSILON.powf(0.2);
        cfg.with_step_scale(cfg.fd_step_scale.min(0.25 * self.frame.q / reach))
    }

    /// Configured method for third y-derivatives. Central differences of
    /// third order are rounding-limited, so they take a 3x wider step.
    fn third_cfg(&self) -> DiffConfig {
        match self.cfg.method {
            DiffMethod::ForwardJets => self.cfg,
            DiffMethod::CentralFd => self.off_axis_fd(self.cfg.with_step_scale(3.0 * self.cfg.fd_step_scale)),
        }
    }

    fn g3_scale(&self, co: &SprayCoeffs<f64>) -> f64 {
        co.g3.max_abs().max(co.c.abs().max(1.0) / self.frame.q)
    }

    pub fn cascade_forms(&self, co: &SprayCoeffs<f64>) -> Result<f64> {
        let long = cascade_g3_long(co.c, &self.frame)?;
        Ok(ratio(max_abs_diff(long.as_slice(), co.g3.as_slice()), self.g3_scale(co)))
    }

    /// `(b_i, u_i, y_i)` contracted into `G^i_kmn`.
    pub fn contractions(&self, co: &SprayCoeffs<f64>) -> (f64, f64, f64) {
        let s = self.g3_scale(co);
        (
            contraction_residual(&co.g3, &self.frame.b_dn, s),
            contraction_residual(&co.g3, &self.frame.u, s),
            contraction_residual(&co.g3, &self.metric.y_dn, s),
        )
    }

    pub fn berwald(&self, co: &SprayCoeffs<f64>) -> f64 {
        co.g3.max_abs()
    }

    /// Total symmetry of `G_ikmn` and `(K²/B) g_ij G^j_kmn = G_ikmn`.
    pub fn lowered_symmetry(&self, co: &SprayCoeffs<f64>) -> f64 {
        let low = co.g3_low.as_ref().expect("lowered coefficients computed");
        let n = low.dim();
        let scale = low.max_abs().max(co.c.abs().max(1.0) / self.frame.q);
        let m = &self.metric;
        let r = m.k * m.k / m.b_form;
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let v = low[(i, k, a, b)];
                        for p in [(k, i, a, b), (a, k, i, b), (b, k, a, i), (i, a, k, b), (i, b, a, k), (i, k, b, a)] {
                            worst = worst.max((v - low[p]).abs());
                        }
                        let lowered: f64 = (0..n).map(|j| m.g_dn[(i, j)] * co.g3[(j, k, a, b)]).sum();
                        worst = worst.max((r * lowered - v).abs());
                    }
                }
            }
        }
        ratio(worst, scale)
    }

    /// `y^i G_ikmn`, `b^i G_ikmn`, `A^i G_ikmn`.
    pub fn lowered_vanishing(&self, co: &SprayCoeffs<f64>) -> f64 {
        let low = co.g3_low.as_ref().expect("lowered coefficients computed");
        let s = low.max_abs().max(co.c.abs().max(1.0) / self.frame.q);
        contraction_residual(low, &self.y, s)
            .max(contraction_residual(low, &self.frame.b_up, s))
            .max(contraction_residual(low, &self.metric.a_up(), s))
    }

    pub fn numeric_spray(&self) -> Result<Vec<f64>> {
        geodesic_spray_numeric(&self.charge, self.space, &self.x, &self.y, &self.cfg)
    }

    pub fn closed_spray(&self) -> Result<Vec<f64>> {
        geodesic_spray_closed(&self.charge, &self.frame, &self.conn)
    }

    /// Numeric geodesic spray against the closed form.
    pub fn proposition3(&self, numeric: &[f64]) -> Result<f64> {
        Ok(rel_diff(numeric, &self.closed_spray()?))
    }

    /// Numeric geodesic spray against `gk q v^i + a^i_km y^k y^m`.
    pub fn proposition2(&self, numeric: &[f64]) -> Option<f64> {
        let k = self.k?;
        Some(rel_diff(numeric, &landsberg_spray(self.charge.g * k, &self.frame, &self.conn)))
    }

    /// General ansatz with Finsleroid scalars against the Landsberg form.
    pub fn ansatz_reduction(&self) -> Option<Result<f64>> {
        let k = self.k?;
        let s = SprayScalars::finsleroid(&self.charge, k);
        Some(general_spray(&s, &self.frame, &self.conn).map(|g| rel_diff(&g, &landsberg_spray(s.c, &self.frame, &self.conn))))
    }

    /// `max |Ȧ_jkl|` for the Landsberg spray with `y_i = p1 b_i + p2 u_i`.
    pub fn dot_a_landsberg(&self, p1: f64, p2: f64) -> Result<f64> {
        let field = SprayField { kind: SprayKind::Landsberg { c: self.cascade_c() }, geom: &self.geom, conn: &self.conn };
        let y_dn: Vec<f64> = (0..self.y.len()).map(|i| p1 * self.frame.b_dn[i] + p2 * self.frame.u[i]).collect();
        Ok(dot_a(&field, &y_dn, &self.y, &self.third_cfg())?.max_abs())
    }

    /// `max |Ȧ_jkl|` for the Finsleroid geodesic spray with the Finsleroid `y_i`.
    pub fn dot_a_finsleroid(&self) -> Result<f64> {
        let field = SprayField { kind: SprayKind::finsleroid(&self.charge), geom: &self.geom, conn: &self.conn };
        Ok(dot_a(&field, &self.metric.y_dn, &self.y, &self.third_cfg())?.max_abs())
    }

    /// Degrees 1, 2, 1, 0, −1 of `K`, `G^i`, `G^i_k`, `G^i_km`, `G^i_kmn`.
    pub fn homogeneity(&self, lambda: f64) -> Result<f64> {
        let ys: Vec<f64> = self.y.iter().map(|v| v * lambda).collect();
        let f2 = Frame::new(&self.geom, &ys)?;
        let m2 = metric_eval(&self.charge, &f2)?;
        let c = self.cascade_c();
        let a = cascade_closed(c, &self.frame, &self.conn)?;
        let b = cascade_closed(c, &f2, &self.conn)?;
        let sc = |v: &[f64], p: i32| v.iter().map(|e| e * lambda.powi(p)).collect::<Vec<_>>();
        let g_closed = geodesic_spray_closed(&self.charge, &self.frame, &self.conn)?;
        let g_closed2 = geodesic_spray_closed(&self.charge, &f2, &self.conn)?;
        Ok([
            ((m2.k - lambda * self.metric.k) / (lambda * self.metric.k)).abs(),
            rel_diff(&b.g_up, &sc(&a.g_up, 2)),
            rel_diff(b.g1.as_slice(), &sc(a.g1.as_slice(), 1)),
            rel_diff(b.g2.as_slice(), a.g2.as_slice()),
            rel_diff(b.g3.as_slice(), &sc(a.g3.as_slice(), -1)),
            rel_diff(&g_closed2, &sc(&g_closed, 2)),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    }

    /// Jets of `V²` at `w = q/b` against the `V` identities; `None` near `b = 0`.
    pub fn generating_v_identities(&self) -> Option<Result<(f64, Option<f64>)>> {
        let f = &self.frame;
        if f.b.abs() <= 1e-3 * f.s {
            return None;
        }
        Some(generating_v_residuals(&self.charge, f.q / f.b, BranchSign::of(f.b), self.cfg.richardson_levels))
    }

    pub fn generating_phi_identities(&self) -> Option<f64> {
        generating_phi_residual(&self.charge, self.frame.b / self.frame.s)
    }
}

/// Beyond this `|w|` the third derivative of `V²` (of order `w⁻⁴`) is lost to
/// cancellation in central differences of the O(1) second derivative.
pub const V_THIRD_FD_MAX_W: f64 = 10.0;

/// `(first/second order, third order by central differences)` residuals of
/// the `V(w)` identities; the third-order residual is `None` for
/// `|w| > V_THIRD_FD_MAX_W`.
pub fn generating_v_residuals(charge: &Charge, w: f64, sign: BranchSign, levels: u32) -> Result<(f64, Option<f64>)> {
    let g = charge.g;
    let r = generating_v(charge, w, sign);
    let (v, q) = (r.v, r.q);
    let v2 = v * v;
    let jet = derive_y(&VSquared(*charge, sign), &[w], 2, &DiffConfig::jets())?;
    let (d1, d2) = (jet.grad[0], jet.hess[(0, 0)]);
    // V' and V'' against jets of V² = 2VV', 2(V'² + VV'')
    let dv = 0.5 * d1 / v;
    let ddv = (0.5 * d2 - dv * dv) / v;
    let phi_jet = derive_y(&PhiAngle(*charge, sign), &[w], 1, &DiffConfig::jets())?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
    let low = [
        rel(dv, r.dv),
        rel(ddv, r.ddv),
        rel(dv, w * v / q),
        rel(ddv, v / (q * q)),
        rel(0.5 * d1, w * v2 / q),
        rel(0.5 * d2, (q - g * w) * v2 / (q * q)),
        rel(phi_jet.grad[0], -charge.h / q),
        // (V²/Q)' = −gV²/Q², (V²/Q²)' = −2(g + w)V²/Q³
        rel(d1 / q - v2 * (g + 2.0 * w) / (q * q), -g * v2 / (q * q)),
        rel(d1 / (q * q) - 2.0 * v2 * (g + 2.0 * w) / (q * q * q), -2.0 * (g + w) * v2 / (q * q * q)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if w.abs() > V_THIRD_FD_MAX_W {
        return Ok((low, None));
    }
    // one central-difference order on top of the exact second derivative
    let second = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(vec![derive_y(&VSquared(*charge, sign), p, 2, &DiffConfig::jets())?.hess[(0, 0)]])
    };
    let third = 0.25 * derive_x(second, &[w], &DiffConfig::central_fd(levels))?[0][0];
    let expect = -g * v2 / (q * q * q);
    let scale = expect.abs().max(v2 / (q * q * q)).max(1e-12);
    Ok((low, Some((third - expect).abs() / scale)))
}

struct PhiAngle(Charge, BranchSign);
impl FiberScalar for PhiAngle {
    fn eval<T: Real>(&self, w: &[T]) -> Result<T> {
        Ok(generating_v(&self.0, w[0], self.1).phi)
    }
}

struct PhiOfS(Charge);
impl FiberScalar for PhiOfS {
    fn eval<T: Real>(&self, s: &[T]) -> Result<T> {
        Ok(generating_phi(&self.0, s[0])?.phi)
    }
}

/// Largest residual of the φ identities at `s`, with φ′, φ″ also checked
/// against jets; `None` inside the singular margin.
pub fn generating_phi_residual(charge: &Charge, s: f64) -> Option<f64> {
    if s.abs() >= 1.0 - S_MARGIN {
        return None;
    }
    let g = charge.g;
    let p = generating_phi(charge, s).ok()?;
    let jet = derive_y(&PhiOfS(*charge), &[s], 2, &DiffConfig::jets()).ok()?;
    let (f, d1, d2) = (p.phi, p.dphi, p.ddphi);
    let c2 = 1.0 - s * s;
    let c = c2.sqrt();
    let root = (1.0 + g * s * c).sqrt();
    let e = (0.5 * charge.big_g * p.angle).exp();
    let denom = f - s * d1 + c2 * d2;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
    Some(
        [
            rel(jet.grad[0], d1),
            rel(jet.hess[(0, 0)], d2),
            rel(f * (f - s * d1), e * e),
            rel(denom, e / root.powi(3)),
            rel((f * d1 - s * (f * d2 + d1 * d1)) / (f * denom), g / c),
            rel(d2 / denom, -g * s / c),
            rel((f - s * d1).powi(2) / (f * denom), 1.0),
        ]
        .into_iter()
        .fold(0.0, f64::max),
    )
}

fn third_tol(jets: bool, t: &Tolerances, jets_tol: f64) -> f64 {
    if jets {
        jets_tol
    } else {
        t.cascade_fd
    }
}

fn low_tol(jets: bool, jets_tol: f64) -> f64 {
    if jets {
        jets_tol
    } else {
        jets_tol.max(1e-6)
    }
}

/// Run every identity over `samples` seeded random points.
pub fn run_verify(config: &Config, seed: u64, samples: usize) -> Result<VerifyReport> {
    let space = config.space()?;
    let charge = config.charge()?;
    let tol = config.tolerances;
    let cfg = config.diff;
    let jets = cfg.method == DiffMethod::ForwardJets;
    let mut sampler = Sampler::new(seed);
    let mut ledger = Ledger::default();
    let n = space.dim();
    let mut first: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut non_landsberg = 0.0f64;

    for _ in 0..samples {
        let (x, geom) = sampler.base_point(&space, config.sample_box)?;
        let y = sampler.fiber_vector(&geom)?;
        let k = config.background.concircular_k(&x);
        if first.is_none() {
            first = Some((x.clone(), y.clone()));
        }
        let p = SamplePoint::new(&space, charge, x, y, k, cfg)?;

        let (ry, rg, ra) = p.metric_oracle()?;
        ledger.add("metric.lower_y", "y_i = ½ ∂K²/∂y^i", low_tol(jets, tol.metric_oracle), ry);
        ledger.add("metric.tensor", "g_ij = ½ ∂²K²/∂y^i∂y^j", low_tol(jets, tol.metric_oracle), rg);
        ledger.add("metric.cartan_trace", "A_i = K g^jk C_ijk", third_tol(jets, &tol, tol.metric_oracle), ra);
        ledger.add("metric.determinant", "det g / det a = (K²/B)^N", tol.determinant, p.determinant());
        ledger.add("metric.inverse", "g^ij g_jk = δ^i_k", tol.inverse, p.inverse());
        ledger.add("metric.u_forms", "u-variable forms = v-variable forms", tol.algebraic, p.u_forms()?);
        ledger.add("metric.euler", "g_ij y^i y^j = y_i y^i = K², A_i y^i = 0", tol.algebraic, p.euler());
        if let Some(r) = p.generating_phi_k() {
            ledger.add("generating.phi_k", "K = S φ(b/S)", tol.algebraic, r);
        }
        if let Some(r) = p.generating_v_k() {
            ledger.add("generating.v_k", "K = |b| V(q/b)", tol.algebraic, r);
        }
        if let Some(r) = p.generating_v_identities() {
            let (low, third) = r?;
            ledger.add("generating.v_identities", "V′ = wV/Q, V″ = V/Q², Φ′ = −h/Q, (V²)′, (V²)″", tol.generating, low);
            if let Some(third) = third {
                ledger.add("generating.v_third", "¼(V²)‴ = −gV²/Q³", tol.generating_third_fd, third);
            }
        }
        if let Some(r) = p.generating_phi_identities() {
            ledger.add("generating.phi_identities", "φ′, φ″, φ(φ − sφ′) = e^{GΦ}, ratios", tol.generating, r);
        }

        let co = p.cascade()?;
        let (low, g3) = p.cascade_oracle(&co)?;
        ledger.add("cascade.first_second", "G^i_k, G^i_km = ∂G^i/∂y, ∂²G^i/∂y²", low_tol(jets, tol.cascade_jets), low);
        ledger.add("cascade.third", "G^i_kmn = ∂³G^i/∂y³", third_tol(jets, &tol, tol.cascade_jets), g3);
        if jets {
            ledger.add("cascade.third_fd", "G^i_kmn = ∂³G^i/∂y³ (central differences)", tol.cascade_fd, p.cascade_fd(&co)?);
        }
        ledger.add("cascade.eta_form", "long form = (c/q)(η^i_k η_mn + …)", tol.algebraic, p.cascade_forms(&co)?);
        let (rb, ru, ry) = p.contractions(&co);
        ledger.add("cascade.b_contraction", "b_i G^i_kmn = 0", tol.algebraic, rb);
        ledger.add("cascade.u_contraction", "u_i G^i_kmn = 0", tol.algebraic, ru);
        ledger.add("cascade.y_contraction", "y_i G^i_kmn = 0 (Finsleroid y_i)", tol.algebraic, ry);
        if n == 2 {
            ledger.add("G3 ≡ 0 (Berwald)", "G^i_kmn = 0 at N = 2", 1e-12, p.berwald(&co));
        }
        ledger.add("lowered.symmetry", "G_ikmn totally symmetric, = (K²/B) g_ij G^j_kmn", tol.algebraic, p.lowered_symmetry(&co));
        ledger.add("lowered.vanishing", "y^i G_ikmn = b^i G_ikmn = A^i G_ikmn = 0", tol.algebraic, p.lowered_vanishing(&co));

        let numeric = p.numeric_spray()?;
        ledger.add("spray.geodesic_closed", "γ^k_ij y^i y^j = closed geodesic spray", tol.spray_numeric, p.proposition3(&numeric)?);
        if let Some(r) = p.proposition2(&numeric) {
            ledger.add("spray.geodesic_landsberg", "γ^k_ij y^i y^j = gkq v^i + a^i_km y^k y^m", tol.spray_numeric, r);
        }
        if let Some(r) = p.ansatz_reduction() {
            ledger.add("spray.ansatz_reduction", "general ansatz = cq v^i + a^i_km y^k y^m, c = c1 k", tol.algebraic, r?);
        }
        let p1 = sampler.uniform(-2.0, 2.0);
        let p2 = sampler.uniform(-2.0, 2.0);
        ledger.add("landsberg.parametric", "Ȧ_jkl = 0 for cq v^i + a^i_km y^k y^m, y_i = p1 b_i + p2 u_i", third_tol(jets, &tol, tol.landsberg), p.dot_a_landsberg(p1, p2)?);
        let fins = p.dot_a_finsleroid()?;
        // at N = 2 the cascade third order vanishes, so Ȧ does too
        if p.k.is_some() || n == 2 {
            ledger.add("landsberg.finsleroid", "Ȧ_jkl = 0 for the Finsleroid geodesic spray", third_tol(jets, &tol, tol.landsberg), fins);
        } else {
            non_landsberg = non_landsberg.max(fins);
        }
        let lambda = if sampler.uniform(0.0, 1.0) < 0.5 { 0.5 } else { 3.0 };
        ledger.add("homogeneity", "degrees 1, 2, 1, 0, −1 of K, G^i, G^i_k, G^i_km, G^i_kmn", tol.algebraic, p.homogeneity(lambda)?);
    }

    if samples > 0 && n > 2 && config.background.concircular_k(&vec![0.0; n]).is_none() {
        ledger.add_bounded(
            "landsberg.negative_control",
            "max |Ȧ_jkl| when ∇_j b_i ≠ k(a_ij − b_i b_j)",
            tol.non_landsberg,
            non_landsberg,
            Bound::Above,
        );
    }

    if let Some((x0, y0)) = first {
        geodesic_row(&mut ledger, &space, charge, cfg, &x0, &y0, tol.k_drift);
    }

    let records = ledger.finish();
    let pass = records.iter().all(|r| r.pass);
    Ok(VerifyReport {
        seed,
        samples,
        background: config.background.kind_name().into(),
        dim: n,
        g: charge.g,
        method: cfg.method,
        rejections: sampler.rejections,
        pass,
        records,
    })
}

fn geodesic_row(ledger: &mut Ledger, space: &BackgroundSpace, charge: Charge, cfg: DiffConfig, x0: &[f64], y0: &[f64], tol: f64) {
    const NAME: &str = "geodesic.k_drift";
    const EQ: &str = "|K(t) − K(0)|/K(0) along ẍ + G(x, ẋ) = 0, t ≤ 1, h = 1e-3";
    let s = space.geometry_at(x0).map(|g| g.a.quad(y0, y0).sqrt()).unwrap_or(1.0);
    let y: Vec<f64> = y0.iter().map(|v| v / s).collect();
    match integrate_geodesic(finsleroid_spray(space, charge, cfg), x0, &y, 1.0, 1e-3, Some(k_monitor(space, charge))) {
        Ok(tr) if !tr.truncated => ledger.add(NAME, EQ, tol, tr.max_k_drift.unwrap_or(f64::NAN)),
        Ok(tr) => ledger.note(NAME, EQ, tol, format!("trajectory entered the q <= q_min cone at t = {}", tr.times.last().unwrap_or(&0.0))),
        Err(Error::Background(e)) | Err(Error::Domain(e)) => ledger.note(NAME, EQ, tol, format!("trajectory left the domain: {e}")),
        Err(e) => {
            ledger.add(NAME, EQ, tol, f64::NAN);
            ledger.set_note(NAME, e.to_string());
        }
    }
}
