//! Seeded Monte-Carlo integration on projective spaces and plane curves.
//!
//! Every estimator splits its budget into fixed-size chunks. Chunk `k` draws
//! from a ChaCha8 stream seeded with the run seed and stream id `k`, chunks
//! are evaluated in parallel, and partial moments are merged in chunk order.
//! The result therefore does not depend on the number of worker threads.
//!
//! Curve integrals use random lines: for the unitarily invariant measure on
//! lines `L ⊂ ℙ²`, `∫_X f ω = E[Σ_{x ∈ X∩L} f(x)]` with `∫_X ω = deg X`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linalg::{poly_roots, CMat};
use crate::poly::{CompiledPoly, FloatPoly, MultiPoly};
use crate::projgeom::{mat_vec, random_unit, PotentialField, C64};

/// Samples per chunk. Part of the determinism contract: changing it changes
/// every seeded result.
pub const CHUNK: u64 = 1024;

/// Tolerated fraction of rejected (non-finite) samples on ambient spaces.
pub const AMBIENT_REJECT_QUOTA: f64 = 1e-6;
/// Tolerated fraction of rejected lines for curve integrals.
pub const CURVE_REJECT_QUOTA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub method: String,
    /// Volume of the integration space in the normalization used by the
    /// sampler (multinomial factor for products). Recorded, never applied here.
    pub volume_factor: f64,
}

impl Estimate {
    pub fn exact(value: f64, method: &str) -> Self {
        Estimate { value, stderr: 0.0, samples: 0, seed: 0, method: method.into(), volume_factor: 1.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Estimate { value: self.value * s, stderr: self.stderr * s.abs(), ..self.clone() }
    }

    /// `a·self + b·other` for independent estimates.
    pub fn combine_independent(&self, a: f64, other: &Estimate, b: f64) -> Self {
        Estimate {
            value: a * self.value + b * other.value,
            stderr: ((a * self.stderr).powi(2) + (b * other.stderr).powi(2)).sqrt(),
            samples: self.samples + other.samples,
            seed: self.seed,
            method: format!("{}+{}", self.method, other.method),
            volume_factor: self.volume_factor,
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }

    pub fn estimate(&self, seed: u64, method: &str, volume_factor: f64) -> Estimate {
        Estimate { value: self.mean, stderr: self.stderr(), samples: self.n, seed, method: method.into(), volume_factor }
    }
}

pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Output of [`mc_run`]: one accumulator per integrand output, plus
/// rejection count and optional per-sample values of output 0.
#[derive(Clone, Debug, Default)]
pub struct McOutcome {
    pub moments: Vec<Moments>,
    pub attempted: u64,
    pub rejected: u64,
    pub dump: Vec<(u64, u64, f64)>,
}

/// Chunked parallel Monte-Carlo driver. `draw` fills `out` for one sample
/// and returns `false` to reject it.
pub fn mc_run<F>(samples: u64, seed: u64, outputs: usize, keep_samples: bool, draw: F) -> McOutcome
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<McOutcome> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let count = CHUNK.min(samples - k * CHUNK);
            let mut part = McOutcome { moments: vec![Moments::default(); outputs], ..Default::default() };
            let mut buf = vec![0.0; outputs];
            for i in 0..count {
                part.attempted += 1;
                if draw(&mut rng, &mut buf) && buf.iter().all(|v| v.is_finite()) {
                    for (m, v) in part.moments.iter_mut().zip(&buf) {
                        m.push(*v);
                    }
                    if keep_samples {
                        part.dump.push((k, i, buf[0]));
                    }
                } else {
                    part.rejected += 1;
                }
            }
            part
        })
        .collect();
    let mut total = McOutcome { moments: vec![Moments::default(); outputs], ..Default::default() };
    for p in parts {
        for (a, b) in total.moments.iter_mut().zip(&p.moments) {
            a.merge(b);
        }
        total.attempted += p.attempted;
        total.rejected += p.rejected;
        total.dump.extend(p.dump);
    }
    total
}

fn check_quota(out: &McOutcome, quota: f64, what: &str) -> Result<()> {
    if out.rejected as f64 > quota * out.attempted as f64 {
        return Err(Error::Numerical(format!(
            "{what}: {} of {} samples rejected (quota {quota:e})",
            out.rejected, out.attempted
        )));
    }
    Ok(())
}

/// Writes `(stream-id, index, value)` rows.
pub fn write_sample_dump(path: &Path, rows: &[(u64, u64, f64)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "stream_id,index,value")?;
    for (s, i, v) in rows {
        writeln!(w, "{s},{i},{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub enum SpaceSpec {
    Projective(usize),
    Product(Vec<usize>),
    PlaneCurve(Arc<PlaneCurve>),
}

impl SpaceSpec {
    /// Projective factor dimensions, for ambient spaces.
    pub fn factors(&self) -> Result<Vec<usize>> {
        match self {
            SpaceSpec::Projective(n) => Ok(vec![*n]),
            SpaceSpec::Product(v) => Ok(v.clone()),
            SpaceSpec::PlaneCurve(_) => Err(Error::Input("expected a projective space or product, got a curve".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Projective(0) => Err(Error::Input("projective dimension must be ≥ 1".into())),
            SpaceSpec::Product(v) if v.is_empty() || v.contains(&0) => {
                Err(Error::Input("product factors must have dimension ≥ 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Total volume of `(Σ pr_i*ω)^{dim}`: the multinomial coefficient for
    /// products, `1` for ℙᴺ, the degree for a curve.
    pub fn volume_factor(&self) -> f64 {
        match self {
            SpaceSpec::Projective(_) => 1.0,
            SpaceSpec::Product(v) => {
                let ln_fact = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
                let total: usize = v.iter().sum();
                (ln_fact(total) - v.iter().map(|&n| ln_fact(n)).sum::<f64>()).exp().round()
            }
            SpaceSpec::PlaneCurve(c) => c.degree() as f64,
        }
    }
}

pub fn fs_draw(rng: &mut ChaCha8Rng, factors: &[usize]) -> Vec<Vec<C64>> {
    factors.iter().map(|&n| random_unit(n + 1, rng)).collect()
}

/// The FS-uniform point stream used by the ambient integrators: sample `i`
/// of the stream is the point they evaluate at sample `i`.
pub fn sample_fs(space: &SpaceSpec, count: u64, seed: u64) -> Result<Vec<Vec<Vec<C64>>>> {
    space.validate()?;
    let factors = space.factors()?;
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..count.div_ceil(CHUNK) {
        let mut rng = chunk_rng(seed, k);
        for _ in 0..CHUNK.min(count - k * CHUNK) {
            out.push(fs_draw(&mut rng, &factors));
        }
    }
    Ok(out)
}

/// `∫ f` against the normalized product FS measure (total mass 1).
pub fn integrate_projective<F>(f: F, space: &SpaceSpec, budget: u64, seed: u64) -> Result<Estimate>
where
    F: Fn(&[Vec<C64>]) -> f64 + Sync,
{
    integrate_projective_dump(f, space, budget, seed, None)
}

pub fn integrate_projective_dump<F>(f: F, space: &SpaceSpec, budget: u64, seed: u64, dump: Option<&Path>) -> Result<Estimate>
where
    F: Fn(&[Vec<C64>]) -> f64 + Sync,
{
    space.validate()?;
    let factors = space.factors()?;
    let out = mc_run(budget, seed, 1, dump.is_some(), |rng, buf| {
        let x = fs_draw(rng, &factors);
        buf[0] = f(&x);
        true
    });
    check_quota(&out, AMBIENT_REJECT_QUOTA, "integrate_projective")?;
    if let Some(p) = dump {
        write_sample_dump(p, &out.dump)?;
    }
    Ok(out.moments[0].estimate(seed, "mc-fs", space.volume_factor()))
}

/// `∫ (log f - log g)` with common random numbers; the standard error is
/// that of the difference.
pub fn paired_log_ratio<F, G>(f: F, g: G, space: &SpaceSpec, budget: u64, seed: u64) -> Result<Estimate>
where
    F: Fn(&[Vec<C64>]) -> f64 + Sync,
    G: Fn(&[Vec<C64>]) -> f64 + Sync,
{
    let mut e = integrate_projective(|x| f(x).ln() - g(x).ln(), space, budget, seed)?;
    e.method = "mc-fs-paired".into();
    Ok(e)
}

fn cross(a: &[C64], b: &[C64]) -> [C64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn conj3(a: &[C64]) -> [C64; 3] {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

fn nsq(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn herm(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn normalize(a: [C64; 3]) -> [C64; 3] {
    let n = nsq(&a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// FS area density of the holomorphic curve `ε ↦ [Z + εZ′]` at `ε = 0`,
/// up to a constant shared by all curves.
fn fs_density(z: &[C64], dz: &[C64]) -> f64 {
    let a = nsq(z);
    (a * nsq(dz) - herm(dz, z).norm_sqr()) / (a * a)
}

/// Second-order jet of a plane curve at a point: position `x`, tangent `v`,
/// and acceleration `c` of a local holomorphic parametrization.
#[derive(Clone, Debug)]
pub struct CurveJet {
    pub x: [C64; 3],
    pub v: [C64; 3],
    pub c: [C64; 3],
    /// Base area density (arbitrary common scale).
    pub rho: f64,
    /// Scalar curvature `Ric(ω)/ω` of the restricted FS metric.
    pub scal: f64,
}

/// `(density, scalar curvature)` of the metric induced by `z ↦ Mz` along a jet.
fn jet_metric(x: &[C64], v: &[C64], c: &[C64]) -> (f64, f64) {
    let rho = fs_density(x, v);
    let w = cross(x, v);
    let w2 = cross(x, c);
    let q = fs_density(&w, &w2);
    (rho, 2.0 - q / rho)
}

impl CurveJet {
    /// Density ratio `(M*ω)/ω` at this point.
    pub fn pullback_ratio(&self, m: &CMat) -> f64 {
        fs_density(&mat_vec(m, &self.x), &mat_vec(m, &self.v)) / self.rho
    }

    /// `(M*ω / ω, scalar curvature of M*ω)` at this point.
    pub fn pullback_metric(&self, m: &CMat) -> (f64, f64) {
        let (rho, scal) = jet_metric(&mat_vec(m, &self.x), &mat_vec(m, &self.v), &mat_vec(m, &self.c));
        (rho / self.rho, scal)
    }

    /// `ω_φ/ω` for a log-norm potential.
    pub fn density_ratio(&self, phi: &PotentialField) -> f64 {
        let mut r = 1.0 - phi.weight_sum();
        for (w, m) in phi.terms() {
            r += w * self.pullback_ratio(m);
        }
        r
    }
}

/// A plane curve `{F = 0} ⊂ ℙ²` compiled for repeated float evaluation.
#[derive(Clone, Debug)]
pub struct PlaneCurve {
    source: FloatPoly,
    degree: u32,
    f: CompiledPoly,
    grad: Vec<CompiledPoly>,
    hess: Vec<CompiledPoly>,
    scale: f64,
}

impl PlaneCurve {
    pub fn new<C: Coeff>(f: &MultiPoly<C>) -> Result<Self> {
        let g = f.grading();
        if g.num_blocks() != 1 || g.block_size(0) != 3 {
            return Err(Error::Input("a plane curve needs one block of 3 variables".into()));
        }
        let deg = f.multidegree()?[0];
        if deg < 1 {
            return Err(Error::Input("curve degree must be ≥ 1".into()));
        }
        let source = f.to_float();
        let grad_p: Vec<FloatPoly> = (0..3).map(|i| source.diff(i)).collect::<std::result::Result<_, _>>()?;
        let mut hess = Vec::with_capacity(9);
        for gi in &grad_p {
            for j in 0..3 {
                hess.push(CompiledPoly::new(&gi.diff(j)?));
            }
        }
        let scale = source.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        Ok(PlaneCurve {
            degree: deg,
            f: CompiledPoly::new(&source),
            grad: grad_p.iter().map(CompiledPoly::new).collect(),
            hess,
            source,
            scale,
        })
    }

    /// [`PlaneCurve::new`] followed by [`PlaneCurve::check_smooth`].
    pub fn smooth<C: Coeff>(f: &MultiPoly<C>) -> Result<Self> {
        let c = PlaneCurve::new(f)?;
        c.check_smooth(0)?;
        Ok(c)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polynomial(&self) -> &FloatPoly {
        &self.source
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        self.f.eval(x)
    }

    pub fn gradient(&self, x: &[C64]) -> [C64; 3] {
        [self.grad[0].eval(x), self.grad[1].eval(x), self.grad[2].eval(x)]
    }

    /// Intersection points of the curve with the line `{Σ u_i x_i = 0}`,
    /// as unit vectors. `None` when the slice is numerically degenerate
    /// (tangent line, line through a singular point, or a root failure).
    pub fn line_points(&self, u: &[C64]) -> Option<Vec<[C64; 3]>> {
        let k = (0..3).min_by(|&i, &j| u[i].norm_sqr().total_cmp(&u[j].norm_sqr()))?;
        let mut e = [C64::new(0.0, 0.0); 3];
        e[k] = C64::new(1.0, 0.0);
        let mut p = normalize(cross(u, &e));
        let mut q = normalize(cross(u, &conj3(&p)));
        let d = self.degree as usize;
        let mut coeffs = self.line_coeffs(&p, &q);
        let top = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if coeffs[d].norm() < 1e-6 * top {
            std::mem::swap(&mut p, &mut q);
            coeffs = self.line_coeffs(&p, &q);
        }
        let roots = poly_roots(&coeffs)?;
        let mut pts = Vec::with_capacity(d);
        for s in roots {
            let x = normalize([s * p[0] + q[0], s * p[1] + q[1], s * p[2] + q[2]]);
            if !x.iter().all(|z| z.is_finite()) {
                return None;
            }
            let g = self.gradient(&x);
            let gn = nsq(&g).sqrt();
            if gn < 1e-10 * self.scale || self.eval(&x).norm() > 1e-8 * self.scale {
                return None;
            }
            pts.push(x);
        }
        Some(pts)
    }

    /// Coefficients (low to high in `s`) of `F(s p + q)`, from values at
    /// the `d+1`-th roots of unity.
    fn line_coeffs(&self, p: &[C64; 3], q: &[C64; 3]) -> Vec<C64> {
        let n = self.degree as usize + 1;
        let w: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).collect();
        let vals: Vec<C64> = w
            .iter()
            .map(|s| self.eval(&[s * p[0] + q[0], s * p[1] + q[1], s * p[2] + q[2]]))
            .collect();
        (0..n)
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                for (j, v) in vals.iter().enumerate() {
                    acc += v * w[(j * k) % n].conj();
                }
                acc / n as f64
            })
            .collect()
    }

    pub fn jet(&self, x: &[C64; 3]) -> CurveJet {
        let g = self.gradient(x);
        let v = cross(&g, &conj3(x));
        let mut vhv = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                vhv += v[i] * self.hess[3 * i + j].eval(x) * v[j];
            }
        }
        let gg = nsq(&g);
        let c = [-vhv * g[0].conj() / gg, -vhv * g[1].conj() / gg, -vhv * g[2].conj() / gg];
        let (rho, scal) = jet_metric(x, &v, &c);
        CurveJet { x: *x, v, c, rho, scal }
    }

    /// Smoothness probe: every intersection with a few random lines has a
    /// gradient bounded away from zero.
    pub fn check_smooth(&self, seed: u64) -> Result<()> {
        if let Some(p) = self.find_singular_point(seed) {
            return Err(Error::Degenerate(format!(
                "curve is singular near ({:.6}, {:.6}, {:.6})",
                p[0], p[1], p[2]
            )));
        }
        let mut rng = chunk_rng(seed, u64::MAX);
        let mut ok = 0;
        for _ in 0..64 {
            let u = random_unit(3, &mut rng);
            if self.line_points(&u).is_some() {
                ok += 1;
            }
        }
        if ok < 60 {
            return Err(Error::Degenerate(format!("curve looks singular: only {ok}/64 random slices were regular")));
        }
        Ok(())
    }

    /// Looks for a zero of the gradient by Gauss–Newton from random starts,
    /// each run in the affine chart of its largest starting coordinate.
    pub fn find_singular_point(&self, seed: u64) -> Option<[C64; 3]> {
        if self.degree < 2 {
            return None;
        }
        let mut rng = chunk_rng(seed, u64::MAX - 1);
        for _ in 0..256 {
            let mut x = random_unit(3, &mut rng);
            let k = (0..3).max_by(|&a, &b| x[a].norm().total_cmp(&x[b].norm())).unwrap_or(0);
            let xk = x[k];
            x.iter_mut().for_each(|z| *z /= xk);
            let free: Vec<usize> = (0..3).filter(|&j| j != k).collect();
            for _ in 0..60 {
                let g = self.gradient(&x);
                let jac = |i: usize, j: usize| self.hess[3 * i + j].eval(&x);
                // normal equations JᴴJ δ = −Jᴴg for the two chart coordinates
                let mut a = [[C64::new(0.0, 0.0); 2]; 2];
                let mut b = [C64::new(0.0, 0.0); 2];
                for i in 0..3 {
                    let row = [jac(i, free[0]), jac(i, free[1])];
                    for p in 0..2 {
                        b[p] -= row[p].conj() * g[i];
                        for q in 0..2 {
                            a[p][q] += row[p].conj() * row[q];
                        }
                    }
                }
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                if det.norm() < 1e-300 {
                    break;
                }
                let d0 = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
                let d1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
                x[free[0]] += d0;
                x[free[1]] += d1;
                let step = (d0.norm_sqr() + d1.norm_sqr()).sqrt();
                if !step.is_finite() || nsq(&x) > 1e16 {
                    break;
                }
                if step < 1e-15 {
                    break;
                }
            }
            let n = nsq(&x).sqrt();
            if !n.is_finite() {
                continue;
            }
            let u: Vec<C64> = x.iter().map(|z| z / n).collect();
            let r = nsq(&self.gradient(&u)).sqrt() / (self.scale * self.degree as f64);
            if r < 1e-9 {
                return Some([u[0], u[1], u[2]]);
            }
        }
        None
    }
}

/// Which measure a curve integral is taken against.
#[derive(Clone, Debug)]
pub enum CurveMeasure {
    Base,
    Deformed(PotentialField),
}

/// Monte-Carlo over random lines; `f` receives the jets of one slice and
/// fills the outputs with the *sum* over its points.
pub fn curve_mc<F>(curve: &PlaneCurve, lines: u64, seed: u64, outputs: usize, keep: bool, f: F) -> Result<McOutcome>
where
    F: Fn(&[CurveJet], &mut [f64]) + Sync,
{
    let out = mc_run(lines, seed, outputs, keep, |rng, buf| {
        let u = random_unit(3, rng);
        let Some(pts) = curve.line_points(&u) else { return false };
        let jets: Vec<CurveJet> = pts.iter().map(|x| curve.jet(x)).collect();
        f(&jets, buf);
        true
    });
    check_quota(&out, CURVE_REJECT_QUOTA, "curve_integral")?;
    Ok(out)
}

/// `∫_X f ω` or `∫_X f ω_φ`, normalized so that `∫_X ω = deg X`.
pub fn curve_integral<F>(curve: &PlaneCurve, integrand: F, measure: &CurveMeasure, budget: u64, seed: u64) -> Result<Estimate>
where
    F: Fn(&[C64; 3]) -> f64 + Sync,
{
    curve_integral_dump(curve, integrand, measure, budget, seed, None)
}

pub fn curve_integral_dump<F>(
    curve: &PlaneCurve,
    integrand: F,
    measure: &CurveMeasure,
    budget: u64,
    seed: u64,
    dump: Option<&Path>,
) -> Result<Estimate>
where
    F: Fn(&[C64; 3]) -> f64 + Sync,
{
    let out = curve_mc(curve, budget, seed, 1, dump.is_some(), |jets, buf| {
        buf[0] = jets
            .iter()
            .map(|j| {
                let w = match measure {
                    CurveMeasure::Base => 1.0,
                    CurveMeasure::Deformed(phi) => j.density_ratio(phi),
                };
                integrand(&j.x) * w
            })
            .sum();
    })?;
    if let Some(p) = dump {
        write_sample_dump(p, &out.dump)?;
    }
    Ok(out.moments[0].estimate(seed, "crofton-lines", curve.degree() as f64))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::BlockGrading;

    fn curve(s: &str) -> PlaneCurve {
        PlaneCurve::new(&FloatPoly::parse(BlockGrading::single("x", 3), s).unwrap()).unwrap()
    }

    #[test]
    fn chan_merge_matches_direct() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..31].iter().for_each(|&x| a.push(x));
        xs[31..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14 && (a.m2 - all.m2).abs() < 1e-11);
    }

    #[test]
    fn product_volume_is_multinomial() {
        assert_eq!(SpaceSpec::Product(vec![2, 2]).volume_factor(), 6.0);
        assert_eq!(SpaceSpec::Product(vec![1, 1, 1]).volume_factor(), 6.0);
        assert_eq!(SpaceSpec::Projective(2).volume_factor(), 1.0);
    }

    #[test]
    fn line_points_lie_on_curve() {
        let c = curve("x0^3 + x1^3 + x2^3");
        let mut rng = chunk_rng(1, 0);
        for _ in 0..50 {
            let u = random_unit(3, &mut rng);
            let pts = c.line_points(&u).unwrap();
            assert_eq!(pts.len(), 3);
            for x in pts {
                assert!(c.eval(&x).norm() < 1e-12);
                let on_line: C64 = (0..3).map(|i| u[i] * x[i]).sum();
                assert!(on_line.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn jet_is_second_order_on_curve() {
        let c = curve("x0^3 + 2*x1^3 - x2^3 + x0*x1*x2");
        let mut rng = chunk_rng(2, 0);
        let u = random_unit(3, &mut rng);
        let x = c.line_points(&u).unwrap()[0];
        let j = c.jet(&x);
        let eps = 1e-3;
        let z: Vec<C64> = (0..3).map(|i| j.x[i] + j.v[i] * eps + j.c[i] * (eps * eps / 2.0)).collect();
        let scale = nsq(&j.v).sqrt();
        assert!(c.eval(&z).norm() < 1e-6 * scale.powi(3), "{}", c.eval(&z).norm());
    }
}
