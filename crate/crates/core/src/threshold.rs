//! Attainment classification, bisection for the existence threshold
//! `λ*(p)`, the predicted Dirichlet-energy deficit of concentrating
//! maximizers, and λ-monotonicity scans.
//!
//! A discrete maximizer always exists, so attainment is operational: the
//! best `J` must clear `S^δ` by a margin on the finest mesh and the peak
//! height must settle under refinement. Concentration shows up instead as
//! `J → S^δ` with peaks that keep growing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::{refine, Field, Laplacian, Mesh, Point};
use crate::functional::{Functional, PerturbParams};
use crate::maximizer::{multi_start, seed_fields, MaximizeOptions, Seed, SeedSpec, Termination};
use crate::moser::green_integrals;
use crate::potential::{concentration_level_with, PotentialReport, RobinMethod};
use crate::{Error, Result};

/// Settings shared by every verdict of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub id: String,
    pub seeds: Vec<SeedSpec>,
    pub rng_seed: u64,
    /// Required excess of `J_best` over `S^δ`; `None` means
    /// `0.05·(S^δ − |Ω|)`.
    pub margin_min: Option<f64>,
    /// Number of meshes: the input and `levels − 1` uniform refinements.
    pub levels: usize,
    /// Largest relative change of the peak height between the two finest
    /// meshes for an attained verdict.
    pub peak_tol: f64,
    /// Seeds added when a scan shows a monotonicity violation.
    pub extra_seeds: Vec<SeedSpec>,
    pub maximize: MaximizeOptions,
    pub robin: RobinMethod,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            id: "default".into(),
            seeds: vec![
                SeedSpec::Bubble { k: 3.0 },
                SeedSpec::Bubble { k: 6.0 },
                SeedSpec::Bubble { k: 10.0 },
                SeedSpec::Eigen,
            ],
            rng_seed: 0,
            margin_min: None,
            levels: 2,
            peak_tol: 0.2,
            extra_seeds: vec![
                SeedSpec::Bubble { k: 2.0 },
                SeedSpec::Bubble { k: 4.5 },
                SeedSpec::Bubble { k: 8.0 },
                SeedSpec::Random { count: 3 },
            ],
            maximize: MaximizeOptions::default(),
            robin: RobinMethod::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainment {
    Attained,
    NotAttained,
    /// No seed converged on some mesh.
    Inconclusive,
}

/// Best ascent result on one mesh of the refinement sequence.
#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct RefinementStep {
    pub num_vertices: usize,
    pub J_best: f64,
    pub peak_c: f64,
    pub seed_id: String,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct AttainmentVerdict {
    pub lambda: f64,
    pub p: f64,
    pub J_best: f64,
    pub S_delta: f64,
    pub margin: f64,
    pub margin_min: f64,
    pub attained: bool,
    pub status: Attainment,
    /// Relative peak change between the two finest meshes, `NaN` with a
    /// single mesh.
    pub peak_change: f64,
    /// Peak growing under refinement while `J_best` approaches `S^δ`.
    pub concentrating: bool,
    pub refinement_trace: Vec<RefinementStep>,
    pub protocol_id: String,
    #[serde(skip)]
    pub u: Field,
}

impl AttainmentVerdict {
    pub fn inconclusive(&self) -> bool {
        self.status == Attainment::Inconclusive
    }
}

/// Meshes, concentration level and seed center prepared once per protocol.
pub struct ThresholdContext {
    meshes: Vec<Mesh>,
    report: PotentialReport,
    protocol: Protocol,
    margin_min: f64,
}

impl ThresholdContext {
    /// Refines `mesh` and computes the potential report on the finest mesh.
    pub fn new(mesh: &Mesh, protocol: &Protocol) -> Result<Self> {
        if protocol.levels == 0 {
            return Err(Error::InvalidArgument("protocol needs at least one mesh level".into()));
        }
        if protocol.seeds.is_empty() {
            return Err(Error::InvalidArgument("protocol needs at least one seed".into()));
        }
        let mut meshes = vec![mesh.clone()];
        for _ in 1..protocol.levels {
            let next = refine(meshes.last().unwrap())?;
            meshes.push(next);
        }
        let finest = meshes.last().unwrap();
        let report = concentration_level_with(&Laplacian::new(finest)?, protocol.robin)?;
        let margin_min = protocol.margin_min.unwrap_or(0.05 * (report.concentration_level - report.area));
        Ok(ThresholdContext { meshes, report, protocol: protocol.clone(), margin_min })
    }

    pub fn report(&self) -> &PotentialReport {
        &self.report
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn margin_min(&self) -> f64 {
        self.margin_min
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    fn center(&self) -> Point {
        self.report.harmonic_center
    }

    pub fn verdict(&self, params: &PerturbParams) -> Result<AttainmentVerdict> {
        self.verdict_with(params, &self.protocol.seeds, &[])
    }

    /// Verdict with the given seed specs plus extra fields on the finest
    /// mesh.
    fn verdict_with(&self, params: &PerturbParams, specs: &[SeedSpec], extra: &[Seed]) -> Result<AttainmentVerdict> {
        params.validate()?;
        let mut trace = Vec::with_capacity(self.meshes.len());
        let mut inconclusive = false;
        let mut best_u = Field::zeros(0);
        for (k, mesh) in self.meshes.iter().enumerate() {
            let lap = Laplacian::new(mesh)?;
            let f = Functional::new(&lap, *params)?;
            let mut seeds = seed_fields(&lap, specs, self.center(), self.protocol.rng_seed)?;
            if k + 1 == self.meshes.len() {
                seeds.extend(extra.iter().cloned());
            }
            match multi_start(&f, &seeds, &self.protocol.maximize) {
                Ok(ms) => {
                    let any_converged = ms.runs.iter().any(|r| r.termination == Some(Termination::Converged));
                    inconclusive |= !any_converged;
                    trace.push(RefinementStep {
                        num_vertices: mesh.num_vertices(),
                        J_best: ms.best.J,
                        peak_c: ms.best.peak_value,
                        seed_id: ms.best.seed_id.clone(),
                        converged: ms.best.converged(),
                    });
                    best_u = ms.best.u;
                }
                Err(Error::AllSeedsRejected(_)) => {
                    inconclusive = true;
                    trace.push(RefinementStep {
                        num_vertices: mesh.num_vertices(),
                        J_best: f64::NAN,
                        peak_c: f64::NAN,
                        seed_id: String::new(),
                        converged: false,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let s_delta = self.report.concentration_level;
        let last = trace.last().unwrap();
        let j_best = last.J_best;
        let margin = j_best - s_delta;
        let peak_change = if trace.len() >= 2 {
            let prev = &trace[trace.len() - 2];
            (last.peak_c - prev.peak_c).abs() / prev.peak_c.abs()
        } else {
            f64::NAN
        };
        let stable = trace.len() < 2 || peak_change <= self.protocol.peak_tol;
        let concentrating = trace.len() >= 2
            && trace.windows(2).all(|w| w[1].peak_c > w[0].peak_c)
            && trace.windows(2).all(|w| (w[1].J_best - s_delta).abs() < (w[0].J_best - s_delta).abs());
        let status = if inconclusive {
            Attainment::Inconclusive
        } else if margin > self.margin_min && stable {
            Attainment::Attained
        } else {
            Attainment::NotAttained
        };
        Ok(AttainmentVerdict {
            lambda: params.lambda,
            p: params.p,
            J_best: j_best,
            S_delta: s_delta,
            margin,
            margin_min: self.margin_min,
            attained: status == Attainment::Attained,
            status,
            peak_change,
            concentrating,
            refinement_trace: trace,
            protocol_id: self.protocol.id.clone(),
            u: best_u,
        })
    }
}

pub fn attained_indicator(mesh: &Mesh, params: &PerturbParams, protocol: &Protocol) -> Result<AttainmentVerdict> {
    ThresholdContext::new(mesh, protocol)?.verdict(params)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdEstimate {
    pub p: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub tolerance: f64,
    /// Every verdict in evaluation order, endpoints first.
    pub verdicts: Vec<AttainmentVerdict>,
    /// λ values whose verdict was inconclusive (treated as not attained).
    pub inconclusive_steps: Vec<f64>,
    /// Some recorded λ₁ < λ₂ has λ₂ attained and λ₁ not attained.
    pub inversion: bool,
    /// `bracket_low − 4π`, recorded without judgement.
    pub low_minus_4pi: f64,
}

/// Bisection on the attainment verdict.
pub fn estimate_threshold(mesh: &Mesh, p: f64, bracket: (f64, f64), tol: f64, protocol: &Protocol) -> Result<ThresholdEstimate> {
    let ctx = ThresholdContext::new(mesh, protocol)?;
    estimate_threshold_in(&ctx, p, bracket, tol)
}

pub fn estimate_threshold_in(ctx: &ThresholdContext, p: f64, bracket: (f64, f64), tol: f64) -> Result<ThresholdEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && tol > 0.0) {
        return Err(Error::InvalidArgument("bracket must satisfy lo < hi with tol > 0".into()));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("threshold estimation needs p in [1, 2], got {p}")));
    }
    let vlo = ctx.verdict(&PerturbParams::new(lo, p)?)?;
    let vhi = ctx.verdict(&PerturbParams::new(hi, p)?)?;
    if !vlo.attained || vhi.attained {
        return Err(Error::Bracket {
            message: format!(
                "expected attained at λ = {lo} ({:?}) and not attained at λ = {hi} ({:?})",
                vlo.status, vhi.status
            ),
            low: Box::new(vlo),
            high: Box::new(vhi),
        });
    }
    let mut verdicts = vec![vlo, vhi];
    let mut inconclusive_steps = Vec::new();
    if verdicts[1].inconclusive() {
        inconclusive_steps.push(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = ctx.verdict(&PerturbParams::new(mid, p)?)?;
        if v.inconclusive() {
            inconclusive_steps.push(mid);
        }
        if v.attained {
            lo = mid;
        } else {
            hi = mid;
        }
        verdicts.push(v);
    }
    let mut path: Vec<(f64, bool)> = verdicts.iter().map(|v| (v.lambda, v.attained)).collect();
    path.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inversion = path.iter().enumerate().any(|(i, &(_, a))| !a && path[i + 1..].iter().any(|&(_, b)| b));
    Ok(ThresholdEstimate {
        p,
        bracket_low: lo,
        bracket_high: hi,
        tolerance: tol,
        verdicts,
        inconclusive_steps,
        inversion,
        low_minus_4pi: lo - 4.0 * PI,
    })
}

/// `‖∇u‖² ≈ 1 − C1_term + C2/γ⁴` for concentrating maximizers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DeficitPrediction {
    pub gamma: f64,
    pub p: f64,
    pub lambda: f64,
    pub int_gp: f64,
    pub C1_term: f64,
    pub C2_over_gamma4: f64,
    pub predicted_norm_sq: f64,
}

/// `C1_term = λ p (4π)^{1−p/2} ∫G^p / (2 (S^δ − |Ω|) γ^{p+2})`.
pub fn predicted_deficit_from(
    int_gp: f64,
    level_minus_area: f64,
    p: f64,
    lambda: f64,
    gamma: f64,
    c2_fit: f64,
) -> Result<DeficitPrediction> {
    if !(gamma > 0.0 && level_minus_area > 0.0 && int_gp >= 0.0) {
        return Err(Error::InvalidArgument("deficit prediction needs γ > 0, S^δ > |Ω| and ∫G^p ≥ 0".into()));
    }
    let c1 = lambda * p * (4.0 * PI).powf(1.0 - p / 2.0) * int_gp / (2.0 * level_minus_area * gamma.powf(p + 2.0));
    let c2 = c2_fit / gamma.powi(4);
    Ok(DeficitPrediction {
        gamma,
        p,
        lambda,
        int_gp,
        C1_term: c1,
        C2_over_gamma4: c2,
        predicted_norm_sq: 1.0 - c1 + c2,
    })
}

/// Deficit prediction with `∫G^p` taken at the harmonic center.
pub fn predicted_deficit(
    lap: &Laplacian,
    report: &PotentialReport,
    p: f64,
    lambda: f64,
    gamma: f64,
    c2_fit: f64,
) -> Result<DeficitPrediction> {
    let ints = green_integrals(lap, report.harmonic_center, p)?;
    predicted_deficit_from(ints.int_gp, report.concentration_level - report.area, p, lambda, gamma, c2_fit)
}

/// One observation `(γ, ‖∇u‖², C1_term)` for fitting `C₂`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DeficitSample {
    pub gamma: f64,
    pub norm_sq: f64,
    pub C1_term: f64,
}

/// Least-squares `C₂` in `norm_sq − 1 + C1_term = C₂ γ⁻⁴`.
pub fn fit_c2(samples: &[DeficitSample]) -> Result<f64> {
    let (mut xy, mut xx) = (0.0, 0.0);
    for s in samples {
        let x = s.gamma.powi(-4);
        xy += x * (s.norm_sq - 1.0 + s.C1_term);
        xx += x * x;
    }
    if !(xx > 0.0) {
        return Err(Error::InvalidArgument("C₂ fit needs at least one sample with finite γ".into()));
    }
    Ok(xy / xx)
}

#[derive(Clone, Debug, Serialize)]
#[allow(non_snake_case)]
pub struct ScanRow {
    pub lambda: f64,
    pub J_best: f64,
    pub margin: f64,
    pub peak_c: f64,
    pub attained: bool,
    pub inconclusive: bool,
    /// Rerun with extra seeds after a monotonicity violation.
    pub rerun: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub p: f64,
    pub tolerance: f64,
    pub rows: Vec<ScanRow>,
    /// Indices `i` with `J(λ_{i+1}) > J(λ_i) + tolerance` after reruns.
    pub violations: Vec<usize>,
    pub unreliable: bool,
    pub verdicts: Vec<AttainmentVerdict>,
}

/// `J_best` along an increasing λ-grid. A violation of monotonicity is
/// treated as an optimizer failure at the smaller λ, which is rerun with
/// the extra seeds and the maximizer found at the larger λ.
pub fn monotonicity_scan(mesh: &Mesh, p: f64, lambdas: &[f64], protocol: &Protocol) -> Result<ScanTable> {
    let ctx = ThresholdContext::new(mesh, protocol)?;
    monotonicity_scan_in(&ctx, p, lambdas)
}

pub fn monotonicity_scan_in(ctx: &ThresholdContext, p: f64, lambdas: &[f64]) -> Result<ScanTable> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("λ-grid must be nonempty and nondecreasing".into()));
    }
    let tol = 1e-3 * ctx.report.concentration_level;
    let mut verdicts = lambdas
        .iter()
        .map(|&l| ctx.verdict(&PerturbParams::new(l, p)?))
        .collect::<Result<Vec<_>>>()?;
    let mut rerun = vec![false; lambdas.len()];
    // sweep from the top so a repaired value can expose the next violation
    for i in (0..lambdas.len().saturating_sub(1)).rev() {
        if verdicts[i + 1].J_best > verdicts[i].J_best + tol && !verdicts[i + 1].u.is_empty() {
            let carried = Seed { id: format!("carried:{}", lambdas[i + 1]), field: verdicts[i + 1].u.clone() };
            let finest = ctx.meshes.last().unwrap();
            let specs: Vec<SeedSpec> =
                ctx.protocol.seeds.iter().chain(&ctx.protocol.extra_seeds).copied().collect();
            let carried = if carried.field.len() == finest.num_vertices() { vec![carried] } else { vec![] };
            let v = ctx.verdict_with(&PerturbParams::new(lambdas[i], p)?, &specs, &carried)?;
            if v.J_best > verdicts[i].J_best {
                verdicts[i] = v;
            }
            rerun[i] = true;
        }
    }
    let violations: Vec<usize> = (0..lambdas.len().saturating_sub(1))
        .filter(|&i| verdicts[i + 1].J_best > verdicts[i].J_best + tol)
        .collect();
    let rows = verdicts
        .iter()
        .zip(&rerun)
        .map(|(v, &r)| ScanRow {
            lambda: v.lambda,
            J_best: v.J_best,
            margin: v.margin,
            peak_c: v.refinement_trace.last().unwrap().peak_c,
            attained: v.attained,
            inconclusive: v.inconclusive(),
            rerun: r,
        })
        .collect();
    Ok(ScanTable { p, tolerance: tol, unreliable: !violations.is_empty(), violations, rows, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_disk_mesh;

    fn quick() -> Protocol {
        Protocol {
            id: "quick".into(),
            seeds: vec![SeedSpec::Bubble { k: 3.0 }, SeedSpec::Bubble { k: 6.0 }, SeedSpec::Eigen],
            ..Default::default()
        }
    }

    #[test]
    fn deficit_formula() {
        let level = PI * 1f64.exp();
        let d = predicted_deficit_from(0.25, level, 1.0, 3.0, 8.0, 0.0).unwrap();
        let oracle = 3.0 * (4.0 * PI).sqrt() * 0.25 / (2.0 * level * 8f64.powi(3));
        assert!((d.C1_term - oracle).abs() <= 1e-15 * oracle);
        let z = predicted_deficit_from(0.25, level, 1.0, 0.0, 8.0, 7.0).unwrap();
        assert_eq!(z.C1_term, 0.0);
        assert_eq!(z.predicted_norm_sq, 1.0 + 7.0 / 8f64.powi(4));
        let mut prev = f64::INFINITY;
        for l in [0.0, 1.0, 5.0, 50.0] {
            let d = predicted_deficit_from(0.25, level, 2.0, l, 6.0, 1.0).unwrap();
            assert!(d.predicted_norm_sq < prev);
            prev = d.predicted_norm_sq;
        }
    }

    #[test]
    fn c2_fit_recovers_synthetic_value() {
        let samples: Vec<DeficitSample> = [4.0, 5.0, 7.0]
            .iter()
            .map(|&g: &f64| DeficitSample { gamma: g, norm_sq: 1.0 - 0.01 + 2.5 / g.powi(4), C1_term: 0.01 })
            .collect();
        assert!((fit_c2(&samples).unwrap() - 2.5).abs() < 1e-12);
        assert!(fit_c2(&[]).is_err());
    }

    #[test]
    fn lambda_zero_is_attained_and_deterministic() {
        let m = build_disk_mesh(3).unwrap();
        let ctx = ThresholdContext::new(&m, &quick()).unwrap();
        let params = PerturbParams::new(0.0, 2.0).unwrap();
        let a = ctx.verdict(&params).unwrap();
        assert!(a.attained, "{a:?}");
        assert!(a.margin > a.margin_min);
        assert_eq!(a.refinement_trace.len(), 2);
        let b = ctx.verdict(&params).unwrap();
        assert_eq!(a.J_best, b.J_best);
        assert_eq!(a.status, b.status);
    }

    #[test]
    fn huge_lambda_is_not_attained() {
        let m = build_disk_mesh(3).unwrap();
        let v = attained_indicator(&m, &PerturbParams::new(1e4, 1.0).unwrap(), &quick()).unwrap();
        assert!(!v.attained);
    }

    #[test]
    fn bisection_keeps_its_bracket() {
        let m = build_disk_mesh(3).unwrap();
        let ctx = ThresholdContext::new(&m, &quick()).unwrap();
        let est = estimate_threshold_in(&ctx, 2.0, (0.0, 200.0), 10.0).unwrap();
        assert!(est.bracket_high - est.bracket_low <= 10.0);
        assert!(!est.inversion);
        let low = est.verdicts.iter().find(|v| v.lambda == est.bracket_low).unwrap();
        assert!(low.attained);
        let bad = estimate_threshold_in(&ctx, 2.0, (150.0, 200.0), 10.0);
        assert!(matches!(bad, Err(Error::Bracket { .. })));
    }

    #[test]
    fn scan_is_monotone() {
        let m = build_disk_mesh(3).unwrap();
        let proto = Protocol { levels: 1, ..quick() };
        let t = monotonicity_scan(&m, 2.0, &[0.0, 1.0, 1.0, 2.0], &proto).unwrap();
        assert!(!t.unreliable, "{:?}", t.rows);
        assert_eq!(t.rows[1].J_best, t.rows[2].J_best);
        assert!(t.rows.windows(2).all(|w| w[1].J_best <= w[0].J_best + t.tolerance));
        assert!(monotonicity_scan(&m, 2.0, &[1.0, 0.0], &proto).is_err());
    }
}
