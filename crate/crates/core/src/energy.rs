//! Energy functionals of Fubini–Study potentials.
//!
//! On ℙᴺ the mixed Monge–Ampère densities `ω_{φ_1} ∧ ⋯ ∧ ω_{φ_N} / ωᴺ` are
//! mixed discriminants of chart Hessians divided by the determinant of the
//! base Hessian. On a plane curve every density is a ratio of curve jets
//! (see [`CurveJet`]).

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::forms::{DegreeData, Rational};
use crate::linalg::{mixed_discriminant, CMat};
use crate::poly::{CompiledPoly, FloatPoly, MultiPoly};
use crate::projgeom::{log_norm_hessian, Chart, FormRole, GroupElement, PotentialField, C64};
use crate::quadrature::{curve_mc, integrate_projective, integrate_projective_dump, write_sample_dump, Estimate, PlaneCurve, SpaceSpec};

/// Negative deformed densities below this are treated as rounding noise.
const DENSITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bundle {
    /// The hyperplane bundle with its Fubini–Study metric.
    L,
    /// `K ⊗ Lⁿ` with the metric induced by the volume form `ωⁿ`.
    KL,
}

/// One argument of the multilinear energy: a line bundle, a reference
/// potential fixing its base curvature, and a deformation.
#[derive(Clone, Debug)]
pub struct CurvatureSlot {
    pub bundle: Bundle,
    /// Base curvature `ω + dd^c θ` (L only; zero for the default metric).
    pub base: PotentialField,
    /// Deformation `φ`. For `KL` the slot potential is derived from it as
    /// `ψ = log(ω_φⁿ/ωⁿ) + nφ`.
    pub deformation: PotentialField,
}

impl CurvatureSlot {
    pub fn l(phi: PotentialField) -> Self {
        CurvatureSlot { bundle: Bundle::L, base: PotentialField::zero(), deformation: phi }
    }

    pub fn l_based(theta: PotentialField, phi: PotentialField) -> Self {
        CurvatureSlot { bundle: Bundle::L, base: theta, deformation: phi }
    }

    pub fn kl(phi: PotentialField) -> Self {
        CurvatureSlot { bundle: Bundle::KL, base: PotentialField::zero(), deformation: phi }
    }

    fn is_trivial(&self) -> bool {
        self.deformation.is_trivially_zero()
    }
}

fn density_flag(flag: &AtomicBool, d: f64) -> f64 {
    if d < -DENSITY_TOL {
        flag.store(true, Ordering::Relaxed);
    }
    d
}

fn non_kahler(flag: &AtomicBool) -> Result<()> {
    if flag.load(Ordering::Relaxed) {
        return Err(Error::Input("deformed density is negative somewhere: the potential is not Kähler".into()));
    }
    Ok(())
}

fn projective_dim(space: &SpaceSpec) -> Result<Option<usize>> {
    match space {
        SpaceSpec::Projective(n) if *n >= 1 => Ok(Some(*n)),
        SpaceSpec::PlaneCurve(_) => Ok(None),
        _ => Err(Error::Unsupported("energies are implemented on ℙᴺ and on plane curves".into())),
    }
}

/// Aubin–Yau energy `E(φ) = Σ_{j=0}^{n} ∫ φ ω_φʲ ∧ ωⁿ⁻ʲ`.
pub fn aubin_yau(space: &SpaceSpec, phi: &PotentialField, budget: u64, seed: u64) -> Result<Estimate> {
    aubin_yau_dump(space, phi, budget, seed, None)
}

/// [`aubin_yau`], optionally writing per-sample integrand values as CSV.
pub fn aubin_yau_dump(space: &SpaceSpec, phi: &PotentialField, budget: u64, seed: u64, dump: Option<&Path>) -> Result<Estimate> {
    if phi.is_trivially_zero() {
        return Ok(Estimate::exact(0.0, "trivial"));
    }
    let flag = AtomicBool::new(false);
    let est = match (projective_dim(space)?, space) {
        (Some(n), _) => {
            if phi.terms().is_empty() {
                return Ok(Estimate::exact(phi.constant_part() * (n + 1) as f64, "constant"));
            }
            integrate_projective_dump(
                |x| {
                    let x = &x[0];
                    let chart = Chart::at(x);
                    let g = log_norm_hessian(None, &chart);
                    let gphi = &g + phi.chart_hessian(&chart);
                    let dg = g.determinant().re;
                    let dens: f64 = (0..=n)
                        .map(|j| {
                            let mats: Vec<CMat> = (0..n).map(|k| if k < j { gphi.clone() } else { g.clone() }).collect();
                            mixed_discriminant(&mats).re / dg
                        })
                        .sum();
                    density_flag(&flag, (gphi.determinant().re) / dg);
                    phi.value(x) * dens
                },
                space,
                budget,
                seed,
                dump,
            )?
        }
        (None, SpaceSpec::PlaneCurve(curve)) => {
            let out = curve_mc(curve, budget, seed, 1, dump.is_some(), |jets, buf| {
                buf[0] = jets
                    .iter()
                    .map(|j| {
                        let r = density_flag(&flag, j.density_ratio(phi));
                        phi.value(&j.x) * (1.0 + r)
                    })
                    .sum();
            })?;
            if let Some(p) = dump {
                write_sample_dump(p, &out.dump)?;
            }
            out.moments[0].estimate(seed, "crofton-lines", curve.degree() as f64)
        }
        _ => unreachable!(),
    };
    non_kahler(&flag)?;
    Ok(Estimate { method: format!("aubin-yau/{}", est.method), ..est })
}

/// Values of one slot at a curve point: potential, base density and
/// deformed density (both relative to `ω`).
fn curve_slot(slot: &CurvatureSlot, j: &crate::quadrature::CurveJet) -> Result<(f64, f64, f64)> {
    let phi = &slot.deformation;
    match slot.bundle {
        Bundle::L => {
            let base = j.density_ratio(&slot.base);
            let deformed = j.density_ratio(&slot.base.add(phi));
            Ok((phi.value(&j.x), base, deformed))
        }
        Bundle::KL => {
            if !slot.base.is_trivially_zero() {
                return Err(Error::Unsupported("KL slots use the volume-form metric; a base potential is not supported".into()));
            }
            let base = 1.0 - j.scal;
            match phi.terms() {
                [] => Ok((phi.constant_part(), base, base)),
                [(w, m)] if *w == 1.0 => {
                    let (r, scal) = j.pullback_metric(m);
                    Ok((r.ln() + phi.value(&j.x), base, (1.0 - scal) * r))
                }
                _ => Err(Error::Unsupported("KL deformations must be a single Bergman potential (plus a constant)".into())),
            }
        }
    }
}

/// `E(φ₀, …, φₙ) = Σ_j ∫ φ_j ∧_{k<j} ω_{φ_k} ∧_{k>j} ω_k`, where `ω_k` is
/// the base curvature of slot `k` and `ω_{φ_k}` its deformation.
pub fn multilinear_energy(slots: &[CurvatureSlot], space: &SpaceSpec, budget: u64, seed: u64) -> Result<Estimate> {
    let flag = AtomicBool::new(false);
    let est = match (projective_dim(space)?, space) {
        (Some(n), _) => {
            if slots.len() != n + 1 {
                return Err(Error::Input(format!("ℙ^{n} needs {} slots, got {}", n + 1, slots.len())));
            }
            if slots.iter().any(|s| s.bundle != Bundle::L) {
                return Err(Error::Unsupported("only L slots are supported on ℙᴺ".into()));
            }
            if slots.iter().all(CurvatureSlot::is_trivial) {
                return Ok(Estimate::exact(0.0, "trivial"));
            }
            let full: Vec<PotentialField> = slots.iter().map(|s| s.base.add(&s.deformation)).collect();
            integrate_projective(
                |x| {
                    let x = &x[0];
                    let chart = Chart::at(x);
                    let g = log_norm_hessian(None, &chart);
                    let dg = g.determinant().re;
                    let base: Vec<CMat> = slots.iter().map(|s| &g + s.base.chart_hessian(&chart)).collect();
                    let deformed: Vec<CMat> = full.iter().map(|p| &g + p.chart_hessian(&chart)).collect();
                    for d in &deformed {
                        density_flag(&flag, d.determinant().re / dg);
                    }
                    (0..=n)
                        .map(|j| {
                            let v = slots[j].deformation.value(x);
                            if v == 0.0 {
                                return 0.0;
                            }
                            let mats: Vec<CMat> =
                                (0..=n).filter(|&k| k != j).map(|k| if k < j { deformed[k].clone() } else { base[k].clone() }).collect();
                            v * mixed_discriminant(&mats).re / dg
                        })
                        .sum()
                },
                space,
                budget,
                seed,
            )?
        }
        (None, SpaceSpec::PlaneCurve(curve)) => {
            if slots.len() != 2 {
                return Err(Error::Input(format!("a curve needs 2 slots, got {}", slots.len())));
            }
            let bad = std::sync::Mutex::new(None);
            let out = curve_mc(curve, budget, seed, 1, false, |jets, buf| {
                let mut acc = 0.0;
                for j in jets {
                    match (curve_slot(&slots[0], j), curve_slot(&slots[1], j)) {
                        (Ok((p0, _, d0)), Ok((p1, b1, _))) => {
                            density_flag(&flag, d0);
                            acc += p0 * b1 + p1 * d0;
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            *bad.lock().unwrap() = Some(e);
                        }
                    }
                }
                buf[0] = acc;
            })?;
            if let Some(e) = bad.into_inner().unwrap() {
                return Err(e);
            }
            out.moments[0].estimate(seed, "crofton-lines", curve.degree() as f64)
        }
        _ => unreachable!(),
    };
    non_kahler(&flag)?;
    Ok(Estimate { method: format!("multilinear/{}", est.method), ..est })
}

/// Product-space form data for the Deligne norm.
fn form_factors(f: &FloatPoly) -> Result<(Vec<usize>, Vec<u32>)> {
    if f.is_zero() {
        return Err(Error::Input("the Deligne norm of the zero form is undefined".into()));
    }
    let degs = f.multidegree()?;
    let dims = f.grading().blocks().iter().map(|(_, n)| n - 1).collect::<Vec<_>>();
    if dims.contains(&0) {
        return Err(Error::Input("every block needs at least two variables".into()));
    }
    Ok((dims, degs))
}

fn space_of(dims: &[usize]) -> SpaceSpec {
    if dims.len() == 1 {
        SpaceSpec::Projective(dims[0])
    } else {
        SpaceSpec::Product(dims.to_vec())
    }
}

/// `log‖f‖²` for the metric `(1/V) ∫ log(|f|² / Π‖H_i‖^{2d_i}) ωᵐ`.
/// Sampling is against the normalized product measure, which already
/// carries the `1/V`.
pub fn deligne_norm_log<C: Coeff>(f: &MultiPoly<C>, budget: u64, seed: u64) -> Result<Estimate> {
    deligne_norm_log_dump(f, budget, seed, None)
}

pub fn deligne_norm_log_dump<C: Coeff>(f: &MultiPoly<C>, budget: u64, seed: u64, dump: Option<&Path>) -> Result<Estimate> {
    let f = f.to_float();
    let (dims, degs) = form_factors(&f)?;
    let space = space_of(&dims);
    let cf = CompiledPoly::new(&f);
    let est = integrate_projective_dump(
        |h| {
            let flat: Vec<C64> = h.iter().flatten().copied().collect();
            let norms: f64 = h.iter().zip(&degs).map(|(v, &d)| d as f64 * v.iter().map(|z| z.norm_sqr()).sum::<f64>().ln()).sum();
            cf.eval(&flat).norm_sqr().ln() - norms
        },
        &space,
        budget,
        seed,
        dump,
    )?;
    Ok(Estimate { method: "deligne-norm/mc-fs".into(), ..est })
}

/// `log‖f^σ‖² − log‖f‖²` with common random numbers. `f^σ` is the form
/// transformed as described by [`GroupElement::act_form`].
pub fn delta_log_norm<C: Coeff>(f: &MultiPoly<C>, sigma: &GroupElement, role: FormRole, budget: u64, seed: u64) -> Result<Estimate> {
    let base = f.to_float();
    let (dims, _) = form_factors(&base)?;
    let moved = sigma.act_form(&base, role)?;
    let (c0, c1) = (CompiledPoly::new(&base), CompiledPoly::new(&moved));
    let est = integrate_projective(
        |h| {
            let flat: Vec<C64> = h.iter().flatten().copied().collect();
            c1.eval(&flat).norm_sqr().ln() - c0.eval(&flat).norm_sqr().ln()
        },
        &space_of(&dims),
        budget,
        seed,
    )?;
    Ok(Estimate { method: "delta-log-norm/mc-fs-paired".into(), ..est })
}

pub fn mu_exponent(dd: &DegreeData) -> Rational {
    dd.mu
}

fn rational_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// K-energy estimates from one set of random lines.
#[derive(Clone, Debug, PartialEq)]
pub struct KEnergy {
    /// `(E(ψ, φ) − (μ+1) E(φ)) / V` with `ψ = log(ω_φ/ω) + φ`.
    pub multilinear: Estimate,
    /// `(∫ (r log r − r + 1) ω − ∫ φ S ω − μ E(φ)) / V` with `r = ω_φ/ω`.
    /// The `−r + 1` term integrates to zero and only reduces variance.
    pub entropy: Estimate,
}

/// Mabuchi K-energy `ν(φ_σ)` of a plane curve.
pub fn k_energy(curve: &PlaneCurve, sigma: &GroupElement, mu: Rational, budget: u64, seed: u64) -> Result<KEnergy> {
    if sigma.size() != 3 {
        return Err(Error::Input("a plane-curve K-energy needs a 3x3 group element".into()));
    }
    let v = curve.degree() as f64;
    let phi = sigma.bergman_potential();
    if phi.is_trivially_zero() {
        let z = Estimate::exact(0.0, "identity");
        return Ok(KEnergy { multilinear: z.clone(), entropy: z });
    }
    let m = sigma.matrix().clone();
    let mu = rational_f64(mu);
    let flag = AtomicBool::new(false);
    let out = curve_mc(curve, budget, seed, 2, false, |jets, buf| {
        let (mut a, mut b) = (0.0, 0.0);
        for j in jets {
            let (r, scal_s) = j.pullback_metric(&m);
            density_flag(&flag, r);
            let f = phi.value(&j.x);
            let ay = f * (1.0 + r);
            a += (r.ln() + f) + f * r * (1.0 - scal_s) - (mu + 1.0) * ay;
            b += r * r.ln() - r + 1.0 - f * j.scal - mu * ay;
        }
        buf[0] = a / v;
        buf[1] = b / v;
    })?;
    non_kahler(&flag)?;
    Ok(KEnergy {
        multilinear: out.moments[0].estimate(seed, "k-energy/multilinear", v),
        entropy: out.moments[1].estimate(seed, "k-energy/entropy", v),
    })
}

/// Average scalar curvature `V⁻¹ ∫_X S(ω) ω`.
pub fn mean_scalar_curvature(curve: &PlaneCurve, budget: u64, seed: u64) -> Result<Estimate> {
    let v = curve.degree() as f64;
    let out = curve_mc(curve, budget, seed, 1, false, |jets, buf| {
        buf[0] = jets.iter().map(|j| j.scal).sum::<f64>() / v;
    })?;
    Ok(out.moments[0].estimate(seed, "mean-scalar-curvature", v))
}

/// First variation of the K-energy along `exp(tA)` at `t = 0`:
/// `−V⁻¹ ∫ φ̇ (S − S̄) ω` with `φ̇ = 2 Re⟨Ax, x⟩/‖x‖²`. Returns the
/// reference value and the `S̄` used.
pub fn k_energy_derivative(curve: &PlaneCurve, a: &CMat, budget: u64, seed: u64) -> Result<(Estimate, Estimate)> {
    let v = curve.degree() as f64;
    let s_bar = mean_scalar_curvature(curve, budget, seed)?;
    let sb = s_bar.value;
    let out = curve_mc(curve, budget, seed, 1, false, |jets, buf| {
        buf[0] = jets
            .iter()
            .map(|j| {
                let ax = crate::projgeom::mat_vec(a, &j.x);
                let xx: f64 = j.x.iter().map(|z| z.norm_sqr()).sum();
                let dot: Complex64 = ax.iter().zip(&j.x).map(|(p, q)| p * q.conj()).sum();
                let phidot = 2.0 * dot.re / xx;
                -phidot * (j.scal - sb) / v
            })
            .sum();
    })?;
    Ok((out.moments[0].estimate(seed, "k-energy-derivative", v), s_bar))
}

/// Hex SHA-256 of the given input descriptions, joined by newlines.
pub fn inputs_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Machine-readable energy result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub format_version: u32,
    pub functional: String,
    pub inputs_hash: String,
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl EnergyRecord {
    pub fn new(functional: &str, inputs: &[&str], e: &Estimate) -> Self {
        EnergyRecord {
            format_version: 1,
            functional: functional.into(),
            inputs_hash: inputs_hash(inputs),
            value: e.value,
            stderr: e.stderr,
            samples: e.samples,
            seed: e.seed,
        }
    }
}
