//! Regularity diagnostics on grid fields: averaged Hessians and their
//! polynomials, growth away from the best quadratic, coincidence-set
//! measures, blow-up comparisons and discrete `C^{1,1}` norms.
//!
//! All balls are gauge balls `B_r(x0) = {y : N(x0⁻¹y) < r}` and all averages
//! are node counts, so reported constants depend on the gauge.

use alloc::vec;
use alloc::vec::Vec;

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, NodeSet, ScalarField};
use crate::group::{GroupPoint, GroupSpec};
use crate::krylov::KrylovSettings;
use crate::math;
use crate::poisson;
use crate::poly::{HessianMatrix, HomPoly2};
use crate::stencil::Derivatives;

/// Value of `u` at `x`: the node value when `x` is a node, cubic
/// interpolation otherwise.
pub fn sample_at(u: &ScalarField, x: &[f64]) -> Result<f64> {
    if let Some(i) = u.grid().node_at(x, 1e-9) {
        if u.is_valid(i) {
            return Ok(u.get(i));
        }
        return Err(Error::ResampleOutOfRange);
    }
    u.sample(x).ok_or(Error::ResampleOutOfRange)
}

/// A field together with its horizontal derivatives, shared by all
/// diagnostics on that field.
#[derive(Debug, Clone)]
pub struct Analysis {
    g: GroupSpec,
    u: ScalarField,
    d: Derivatives,
}

impl Analysis {
    pub fn new(g: &GroupSpec, u: &ScalarField) -> Result<Self> {
        let d = Derivatives::compute(g, u)?;
        Ok(Analysis { g: g.clone(), u: u.clone(), d })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.g
    }

    pub fn field(&self) -> &ScalarField {
        &self.u
    }

    pub fn derivatives(&self) -> &Derivatives {
        &self.d
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    fn ball(&self, x0: &[f64], r: f64) -> Result<Ball> {
        Ball::new(&self.g, self.u.grid(), x0, r)
    }

    fn hessian_ball(&self, x0: &[f64], r: f64) -> Result<Ball> {
        let b = self.ball(x0, r)?;
        for h in &self.d.hessian {
            b.check_valid(h)?;
        }
        Ok(b)
    }

    /// `P_r = (D_h² u)_B − (1/m)(Δ_H u)_B I`.
    pub fn p_matrix(&self, x0: &[f64], r: f64) -> Result<HessianMatrix> {
        let b = self.hessian_ball(x0, r)?;
        let m = self.g.m();
        let lap = b.average(&self.d.laplacian)?;
        let mut p = HessianMatrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                let mut v = b.average(self.d.hessian_entry(i, j))?;
                if i == j {
                    v -= lap / m as f64;
                }
                p.set(i, j, v);
            }
        }
        Ok(p)
    }

    /// Harmonic 2-homogeneous polynomial built from the same averages:
    /// `c_ij` from the symmetrized trace-free Hessian average and `c_l` from
    /// the average of `X_l u`.
    pub fn approx_polynomial(&self, x0: &[f64], r: f64) -> Result<HomPoly2> {
        let b = self.hessian_ball(x0, r)?;
        let m = self.g.m();
        let lap = b.average(&self.d.laplacian)?;
        let mut c = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let sym = 0.5 * (b.average(self.d.hessian_entry(i, j))? + b.average(self.d.hessian_entry(j, i))?);
                c[i * m + j] = sym - if i == j { lap / m as f64 } else { 0.0 };
            }
        }
        // Exact symmetry, so the constructor's check cannot trip on rounding.
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (c[i * m + j] + c[j * m + i]);
                c[i * m + j] = v;
                c[j * m + i] = v;
            }
        }
        let mut c2 = Vec::with_capacity(self.g.layer2_dim());
        for l in m..self.g.n() {
            c2.push(b.average(&self.d.first[l])?);
        }
        HomPoly2::quadratic(&self.g, c, c2)
    }

    /// Horizontal gradient `∇_h u(x0)` from the grid stencil.
    pub fn horizontal_gradient(&self, x0: &[f64]) -> Result<Vec<f64>> {
        (0..self.g.m()).map(|j| sample_at(&self.d.first[j], x0)).collect()
    }

    /// Affine part `ℓ(z) = u(x0) + ⟨∇_h u(x0), π(z)⟩` as a polynomial in `z`.
    pub fn affine_part(&self, x0: &[f64]) -> Result<HomPoly2> {
        let a0 = sample_at(&self.u, x0)?;
        let b = self.horizontal_gradient(x0)?;
        let m = self.g.m();
        HomPoly2::new(&self.g, a0, b, vec![0.0; m * m], vec![0.0; self.g.layer2_dim()])
    }

    /// `max_{y ∈ B_{σr}(x0)} |u(y) − ℓ(x0⁻¹y) − p_r(x0⁻¹y)|`.
    pub fn growth_sup(&self, x0: &[f64], r: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::Precondition(alloc::format!("sigma must lie in (0, 1), got {sigma}")));
        }
        let p = self.approx_polynomial(x0, r)?;
        let l = self.affine_part(x0)?;
        let inner = self.ball(x0, sigma * r)?;
        inner.check_valid(&self.u)?;
        let grid = self.u.grid();
        let mut y = vec![0.0; self.g.n()];
        let mut z = vec![0.0; self.g.n()];
        let mut best: f64 = 0.0;
        for &i in &inner.nodes {
            grid.point_into(i, &mut y);
            self.g.relative_into(x0, &y, &mut z);
            let model = l.eval_unchecked(&z) + p.eval_unchecked(&z);
            best = best.max(math::abs(self.u.get(i) - model));
        }
        Ok(best)
    }

    /// Growth ratios `growth_sup / r²` over a list of radii.
    pub fn growth_report(&self, x0: &[f64], radii: &[f64], sigma: f64) -> Result<GrowthReport> {
        check_decreasing(radii)?;
        let mut sups = Vec::with_capacity(radii.len());
        for &r in radii {
            sups.push(self.growth_sup(x0, r, sigma)?);
        }
        let ratios = sups.iter().zip(radii).map(|(s, r)| s / (r * r)).collect();
        Ok(GrowthReport { x0: GroupPoint(x0.to_vec()), radii: radii.to_vec(), sups, ratios, sigma })
    }

    /// Fraction of the nodes of `B_r(x0)` with `|u| ≤ zero_tol`.
    pub fn coincidence_measure(&self, x0: &[f64], r: f64, zero_tol: f64) -> Result<f64> {
        if !Ball::fits_in_box(&self.g, self.u.grid(), x0, r) {
            return Err(Error::BallOutsideValidRegion { radius: r });
        }
        let b = self.ball(x0, r)?;
        b.check_valid(&self.u)?;
        let zeros = b.nodes.iter().filter(|&&i| math::abs(self.u.get(i)) <= zero_tol).count();
        Ok(zeros as f64 / b.nodes.len() as f64)
    }

    /// Coincidence measures, `|P_r|` and effective decay exponents over a
    /// dyadic family of radii.
    pub fn decay_report(&self, x0: &[f64], radii: &[f64], zero_tol: f64) -> Result<DecayReport> {
        check_dyadic(radii)?;
        let q = self.g.homogeneous_dim() as f64;
        let mut measures = Vec::with_capacity(radii.len());
        let mut p_norms = Vec::with_capacity(radii.len());
        for &r in radii {
            measures.push(self.coincidence_measure(x0, r, zero_tol)?);
            p_norms.push(self.p_matrix(x0, r)?.norm());
        }
        let beta_eff = measures.windows(2).map(|w| beta_between(w[0], w[1], q)).collect();
        Ok(DecayReport { x0: GroupPoint(x0.to_vec()), radii: radii.to_vec(), measures, p_norms, beta_eff })
    }

    /// `|P_{r1} − P_{r2}|` and the factor `(r2/r1)^Q`.
    pub fn scaling_deviation(&self, x0: &[f64], r1: f64, r2: f64) -> Result<ScalingDeviation> {
        if !(r1 > 0.0 && r1 < r2) {
            return Err(Error::Precondition(alloc::format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
        }
        let a = self.p_matrix(x0, r1)?;
        let b = self.p_matrix(x0, r2)?;
        Ok(ScalingDeviation {
            r1,
            r2,
            value: a.sub(&b).norm(),
            factor: math::powi(r2 / r1, self.g.homogeneous_dim() as i32),
        })
    }

    /// `max_{region} |D_h² u|` (Frobenius).
    pub fn c11_norm(&self, region: &NodeSet) -> Result<f64> {
        if region.count() == 0 {
            return Err(Error::Empty("c11 region".into()));
        }
        let valid = self.d.hessian_valid();
        if !region.is_subset(&valid) {
            return Err(Error::Precondition("c11 region contains nodes without a valid Hessian stencil".into()));
        }
        Ok(region.iter().map(|i| self.d.hessian_norm_at(i)).fold(0.0, f64::max))
    }

    /// `max_{region} |u(x·2he_j) − 3u(x·he_j) + 3u(x) − u(x·(−h)e_j)| / h³`,
    /// the discrete third derivative along the flow of `X_j`.
    pub fn third_difference_sup(&self, region: &NodeSet, j: usize) -> Result<f64> {
        if j >= self.g.m() {
            return Err(Error::IndexOutOfRange(alloc::format!("direction {j} (m = {})", self.g.m())));
        }
        if region.count() == 0 {
            return Err(Error::Empty("third-difference region".into()));
        }
        let grid = self.u.grid();
        let h = grid.h(j);
        let mut x = vec![0.0; self.g.n()];
        let mut e = vec![0.0; self.g.n()];
        let mut best: f64 = 0.0;
        for i in region.iter() {
            grid.point_into(i, &mut x);
            let mut vals = [0.0; 4];
            for (k, s) in [-1.0, 0.0, 1.0, 2.0].iter().enumerate() {
                e[j] = s * h;
                let y = self.g.multiply(&x, &e);
                vals[k] = sample_at(&self.u, &y).map_err(|_| Error::Precondition("third-difference stencil leaves the grid".into()))?;
            }
            let t = (vals[3] - 3.0 * vals[2] + 3.0 * vals[1] - vals[0]) / (h * h * h);
            best = best.max(math::abs(t));
        }
        Ok(best)
    }
}

fn check_decreasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Empty("radius list".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("radii must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn check_dyadic(radii: &[f64]) -> Result<()> {
    check_decreasing(radii)?;
    if radii.windows(2).any(|w| math::abs(w[1] * 2.0 - w[0]) > 1e-12 * w[0]) {
        return Err(Error::Precondition("radii must halve from one entry to the next".into()));
    }
    Ok(())
}

/// `log₂(m_r / m_{r/2}) / Q`; `None` when both measures vanish.
pub fn beta_between(m_r: f64, m_half: f64, q: f64) -> Option<f64> {
    match (m_r > 0.0, m_half > 0.0) {
        (false, false) => None,
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(f64::NEG_INFINITY),
        (true, true) => Some(math::log2(m_r / m_half) / q),
    }
}

/// Growth of `u` away from its best affine-plus-quadratic model.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub x0: GroupPoint,
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    /// `sups[k] / radii[k]²`.
    pub ratios: Vec<f64>,
    pub sigma: f64,
}

/// Coincidence-set decay measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub x0: GroupPoint,
    pub radii: Vec<f64>,
    /// Fraction of ball nodes in the zero set, per radius.
    pub measures: Vec<f64>,
    /// `|P_r|` per radius.
    pub p_norms: Vec<f64>,
    /// Between consecutive radii; `None` when both measures are zero.
    pub beta_eff: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingDeviation {
    pub r1: f64,
    pub r2: f64,
    /// `|P_{r1} − P_{r2}|`.
    pub value: f64,
    /// `(r2/r1)^Q`.
    pub factor: f64,
}

/// Outcome of [`blowup_compare`].
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub r: f64,
    pub sigma: f64,
    /// `max |D_h² v|` over `B_{σ²}` in rescaled coordinates.
    pub sup_d2_v: f64,
    /// `max |v − u_r|` over the equation nodes.
    pub sup_w: f64,
    /// Equation nodes of the rescaled solve.
    pub ball_nodes: usize,
    /// Intervals per axis of the rescaled grid.
    pub intervals: usize,
}

/// Settings for [`blowup_compare`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupSettings {
    /// Intervals per axis of the rescaled grid.
    pub intervals: usize,
    pub krylov: KrylovSettings,
}

impl Default for BlowupSettings {
    fn default() -> Self {
        BlowupSettings { intervals: 32, krylov: KrylovSettings::default() }
    }
}

/// Blow-up at `x0` and scale `r`: forms
/// `u_r(x) = [u(x0·δ_r x) − ℓ(δ_r x) − p_r(δ_r x)] / r²` on a fresh grid
/// covering `B_σ`, solves `Δ_H v = f(x0·δ_r x)` on the discrete ball `B_σ`
/// with `v = u_r` outside, and compares.
pub fn blowup_compare(
    g: &GroupSpec,
    u: &ScalarField,
    f: &ScalarField,
    x0: &[f64],
    r: f64,
    sigma: f64,
    settings: &BlowupSettings,
) -> Result<BlowupReport> {
    let lab = Analysis::new(g, u)?;
    blowup_with(&lab, f, x0, r, sigma, settings)
}

/// [`blowup_compare`] reusing precomputed derivatives.
pub fn blowup_with(
    lab: &Analysis,
    f: &ScalarField,
    x0: &[f64],
    r: f64,
    sigma: f64,
    settings: &BlowupSettings,
) -> Result<BlowupReport> {
    let g = lab.group();
    let u = lab.field();
    u.same_grid(f)?;
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Precondition(alloc::format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if !(r > 0.0) {
        return Err(Error::NonPositiveScale(r));
    }
    let h = u.grid().max_spacing(g.m());
    if r * sigma < 2.0 * h {
        return Err(Error::Precondition(alloc::format!(
            "blow-up ball under-resolved: r·σ = {} is below two grid spacings ({})",
            r * sigma,
            2.0 * h
        )));
    }
    let p = lab.approx_polynomial(x0, r)?;
    let l = lab.affine_part(x0)?;

    let half1 = 1.25 * sigma;
    let half2 = half1 * half1 / math::sqrt(g.gauge_c());
    let bounds: Vec<(f64, f64)> = (0..g.n()).map(|a| if a < g.m() { (-half1, half1) } else { (-half2, half2) }).collect();
    let fine = GridSpec::with_intervals(&bounds, &vec![settings.intervals; g.n()])?;

    let mut ur = vec![0.0; fine.len()];
    let mut fr = vec![0.0; fine.len()];
    let mut ok = NodeSet::empty(fine.len());
    let mut x = vec![0.0; g.n()];
    for i in 0..fine.len() {
        fine.point_into(i, &mut x);
        let dx = g.dilate_unchecked(r, &x);
        let y = g.multiply(x0, &dx);
        if let (Ok(uy), Ok(fy)) = (sample_at(u, &y), sample_at(f, &y)) {
            ur[i] = (uy - l.eval_unchecked(&dx) - p.eval_unchecked(&dx)) / (r * r);
            fr[i] = fy;
            ok.insert(i);
        }
    }
    let ur = ScalarField::with_mask(fine.clone(), ur, ok.clone())?;
    let fr = ScalarField::with_mask(fine.clone(), fr, ok)?;

    let ball = Ball::new(g, &fine, &vec![0.0; g.n()], sigma)?;
    let interior = poisson::box_domain(g, &fine)?;
    let domain = NodeSet::from_fn(fine.len(), |i| interior.contains(i) && ball.nodes.binary_search(&i).is_ok());
    let sol = match poisson::solve_dirichlet(g, &fr, &ur, &domain, &settings.krylov) {
        Err(Error::InvalidDomainNode(_)) => return Err(Error::ResampleOutOfRange),
        other => other?,
    };
    let v = sol.v;

    let dv = Derivatives::compute(g, &v)?;
    let small = Ball::new(g, &fine, &vec![0.0; g.n()], sigma * sigma)?;
    let hv = dv.hessian_valid();
    if small.nodes.iter().any(|&i| !hv.contains(i)) {
        return Err(Error::BallOutsideValidRegion { radius: sigma * sigma });
    }
    let sup_d2_v = small.nodes.iter().map(|&i| dv.hessian_norm_at(i)).fold(0.0, f64::max);
    let sup_w = domain.iter().map(|i| math::abs(v.get(i) - ur.get(i))).fold(0.0, f64::max);
    Ok(BlowupReport { r, sigma, sup_d2_v, sup_w, ball_nodes: domain.count(), intervals: settings.intervals })
}

/// Free-function forms of the [`Analysis`] methods.
pub fn p_matrix(g: &GroupSpec, u: &ScalarField, x0: &[f64], r: f64) -> Result<HessianMatrix> {
    Analysis::new(g, u)?.p_matrix(x0, r)
}

pub fn approx_polynomial(g: &GroupSpec, u: &ScalarField, x0: &[f64], r: f64) -> Result<HomPoly2> {
    Analysis::new(g, u)?.approx_polynomial(x0, r)
}

pub fn growth_sup(g: &GroupSpec, u: &ScalarField, x0: &[f64], r: f64, sigma: f64) -> Result<f64> {
    Analysis::new(g, u)?.growth_sup(x0, r, sigma)
}

pub fn coincidence_measure(g: &GroupSpec, u: &ScalarField, x0: &[f64], r: f64, zero_tol: f64) -> Result<f64> {
    Analysis::new(g, u)?.coincidence_measure(x0, r, zero_tol)
}

pub fn decay_report(g: &GroupSpec, u: &ScalarField, x0: &[f64], radii: &[f64], zero_tol: f64) -> Result<DecayReport> {
    Analysis::new(g, u)?.decay_report(x0, radii, zero_tol)
}

pub fn scaling_deviation(g: &GroupSpec, u: &ScalarField, x0: &[f64], r1: f64, r2: f64) -> Result<ScalingDeviation> {
    Analysis::new(g, u)?.scaling_deviation(x0, r1, r2)
}

pub fn c11_norm(g: &GroupSpec, u: &ScalarField, region: &NodeSet) -> Result<f64> {
    Analysis::new(g, u)?.c11_norm(region)
}

/// Dyadic radii `r0, r0/2, …` down to the smallest one not below `8h`
/// (`h` the largest first-layer spacing).
pub fn dyadic_radii(g: &GroupSpec, grid: &GridSpec, r0: f64) -> Vec<f64> {
    let floor = 8.0 * grid.max_spacing(g.m());
    let mut out = Vec::new();
    let mut r = r0;
    while r >= floor * (1.0 - 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out
}

/// Nodes with every coordinate inside `[lo_a, hi_a]`.
pub fn box_region(grid: &GridSpec, lo: &[f64], hi: &[f64]) -> NodeSet {
    let mut x = vec![0.0; grid.ndim()];
    NodeSet::from_fn(grid.len(), |i| {
        grid.point_into(i, &mut x);
        (0..x.len()).all(|a| x[a] >= lo[a] - 1e-12 && x[a] <= hi[a] + 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::horizontal_hessian;

    #[test]
    fn harmonic_polynomial_is_its_own_approximation() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 16).unwrap();
        let p = HomPoly2::quadratic(&g, vec![1.0, 0.5, 0.5, -1.0], vec![3.0]).unwrap();
        let u = ScalarField::from_fn(&grid, |x| p.eval_unchecked(x));
        let lab = Analysis::new(&g, &u).unwrap();
        let x0 = [0.0; 3];
        let pm = lab.p_matrix(&x0, 0.5).unwrap();
        assert!(pm.max_abs_diff(&horizontal_hessian(&g, &p)) < 1e-9);
        let q = lab.approx_polynomial(&x0, 0.5).unwrap();
        assert!(q.c.iter().zip(&p.c).all(|(a, b)| (a - b).abs() < 1e-9));
        assert!((q.c2[0] - 3.0).abs() < 1e-9);
        assert!(pm.trace().abs() < 1e-10);
    }

    #[test]
    fn beta_conventions() {
        assert_eq!(beta_between(0.0, 0.0, 4.0), None);
        assert_eq!(beta_between(0.5, 0.0, 4.0), Some(f64::INFINITY));
        assert_eq!(beta_between(0.5, 0.5, 4.0), Some(0.0));
        assert!((beta_between(1.0, 1.0 / 16.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radius_lists_validated() {
        assert!(check_dyadic(&[0.5, 0.25, 0.125]).is_ok());
        assert!(check_dyadic(&[0.5, 0.3]).is_err());
        assert!(check_decreasing(&[0.5, 0.5]).is_err());
        assert!(check_decreasing(&[]).is_err());
    }

    #[test]
    fn dyadic_family_stops_at_eight_spacings() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 64).unwrap();
        assert_eq!(dyadic_radii(&g, &grid, 0.25), vec![0.25]);
        let grid = GridSpec::cube(3, -1.0, 1.0, 128).unwrap();
        assert_eq!(dyadic_radii(&g, &grid, 0.5), vec![0.5, 0.25, 0.125]);
    }
}
