//! Maximal nets in the arccos metric with Voronoi companion cells,
//! sampling / Marcinkiewicz-Zygmund diagnostics on band-limited functions,
//! and positive-weight cubature rules exact on spectral bands.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::{integrate_adaptive, JacobiSetting};
use crate::spectral::{lp_norm_rule, random_band_limited, SpectralVector};
use crate::util::{compensated_total, linspace, CompensatedSum};

/// A maximal `delta`-net of `[0, pi]` (theta-coordinates) together with its
/// Voronoi companion cells. Centers are `delta`-separated, every point lies
/// within `delta` of a center, and the half-open cells satisfy
/// `B(xi, delta/2) /\ [0,pi] c A_xi c B(xi, delta)`.
#[derive(Clone, Debug)]
pub struct NetLevel {
    delta: f64,
    centers: Vec<f64>,
    cell_bounds: Vec<(f64, f64)>,
    cell_measures: Vec<f64>,
}

impl NetLevel {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn cell_bounds(&self) -> &[(f64, f64)] {
        &self.cell_bounds
    }

    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_measures
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Rebuilds a net from serialized parts, checking only shape and
    /// ordering; run [`NetLevel::verify_invariants`] for the full contract.
    pub fn from_parts(
        delta: f64,
        centers: Vec<f64>,
        cell_bounds: Vec<(f64, f64)>,
        cell_measures: Vec<f64>,
    ) -> Result<Self> {
        if centers.len() != cell_bounds.len() || centers.len() != cell_measures.len() {
            return Err(Error::Shape(format!(
                "net parts disagree: {} centers, {} cells, {} measures",
                centers.len(),
                cell_bounds.len(),
                cell_measures.len()
            )));
        }
        if centers.is_empty() {
            return Err(Error::Shape("net must have at least one center".into()));
        }
        if centers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("net centers must be strictly increasing".into()));
        }
        Ok(Self {
            delta,
            centers,
            cell_bounds,
            cell_measures,
        })
    }

    /// Checks every structural invariant: separation >= delta, covering
    /// radius <= delta, cells partition `[0, pi]` with the ball sandwich,
    /// and cell measures summing to the total mass.
    pub fn verify_invariants(&self, setting: &JacobiSetting) -> Result<()> {
        let slack = 1e-12;
        let d = self.delta;
        let n = self.centers.len();
        for w in self.centers.windows(2) {
            if w[1] - w[0] < d - slack {
                return Err(Error::Domain(format!(
                    "net separation violated: {} and {} closer than delta = {d}",
                    w[0], w[1]
                )));
            }
            if w[1] - w[0] > 2.0 * d + slack {
                return Err(Error::Domain(format!(
                    "net not maximal: gap between {} and {} exceeds 2 delta",
                    w[0], w[1]
                )));
            }
        }
        if self.centers[0] > d + slack || PI - self.centers[n - 1] > d + slack {
            return Err(Error::Domain("net does not cover the endpoints".into()));
        }
        if self.cell_bounds[0].0 != 0.0 || self.cell_bounds[n - 1].1 != PI {
            return Err(Error::Domain("cells must span exactly [0, pi]".into()));
        }
        for i in 0..n {
            let (lo, hi) = self.cell_bounds[i];
            let xi = self.centers[i];
            if !(lo < hi) {
                return Err(Error::Domain(format!("cell {i} is empty or inverted")));
            }
            if i + 1 < n && self.cell_bounds[i + 1].0 != hi {
                return Err(Error::Domain(format!("cells {i} and {} are not adjacent", i + 1)));
            }
            // A_xi inside B(xi, delta), and B(xi, delta/2) clipped inside A_xi.
            if lo < xi - d - slack || hi > xi + d + slack {
                return Err(Error::Domain(format!("cell {i} escapes B(center, delta)")));
            }
            if lo > (xi - 0.5 * d).max(0.0) + slack || hi < (xi + 0.5 * d).min(PI) - slack {
                return Err(Error::Domain(format!(
                    "cell {i} does not contain B(center, delta/2)"
                )));
            }
        }
        let sum = compensated_total(self.cell_measures.iter().copied());
        let tol = 1e-12 * setting.total_mass().max(1.0);
        if (sum - setting.total_mass()).abs() > tol {
            return Err(Error::Domain(format!(
                "cell measures sum to {sum}, expected {} within {tol}",
                setting.total_mass()
            )));
        }
        Ok(())
    }
}

/// Builds the greedy maximal `delta`-net `0, delta, 2 delta, ...` capped at
/// `pi`. When the residual gap to `pi` is at least `delta/2` the last center
/// moves to `pi` (keeping separation >= delta while representing the weight
/// singularity there); otherwise the previous cell absorbs the tail.
pub fn maximal_net(setting: &JacobiSetting, delta: f64) -> Result<NetLevel> {
    if !(delta > 0.0 && delta <= PI) || !delta.is_finite() {
        return Err(Error::Domain(format!("net delta must lie in (0, pi] (got {delta})")));
    }
    let m = (PI / delta).floor() as usize;
    let mut centers: Vec<f64> = (0..=m).map(|i| (i as f64 * delta).min(PI)).collect();
    let gap = PI - centers[m];
    if gap >= 0.5 * delta {
        centers[m] = PI;
    }
    let n = centers.len();
    let mut cell_bounds = Vec::with_capacity(n);
    for i in 0..n {
        let lo = if i == 0 {
            0.0
        } else {
            0.5 * (centers[i - 1] + centers[i])
        };
        let hi = if i == n - 1 {
            PI
        } else {
            0.5 * (centers[i] + centers[i + 1])
        };
        cell_bounds.push((lo, hi));
    }
    let cell_measures: Vec<f64> = cell_bounds
        .par_iter()
        .map(|&(lo, hi)| setting.interval_measure_theta(lo, hi))
        .collect();
    let net = NetLevel {
        delta,
        centers,
        cell_bounds,
        cell_measures,
    };
    net.verify_invariants(setting)?;
    Ok(net)
}

/// Marcinkiewicz-Zygmund defect
/// `(sum_xi int_{A_xi} |f(x) - f(xi)|^p dmu)^{1/p} / ||f||_p`,
/// each cell integrated by adaptive quadrature.
pub fn mz_defect(
    setting: &JacobiSetting,
    net: &NetLevel,
    f: &SpectralVector,
    p: f64,
) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("mz_defect needs 1 <= p < inf (got {p})")));
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    let rule = setting.gauss_jacobi_rule(2 * (f.degree() + 1) + 8)?;
    let norm = lp_norm_rule(setting, f, p, &rule, &[])?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let cell_tol = 1e-12 * setting.total_mass() / net.len() as f64;
    let pieces: Vec<f64> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = net.cell_bounds()[i];
            let f_center = f
                .eval(setting, net.centers()[i].cos())
                .expect("degree within limit");
            integrate_adaptive(
                |th| {
                    let v = f.eval(setting, th.cos()).expect("degree within limit");
                    setting.theta_weight(th) * (v - f_center).abs().powf(p)
                },
                lo,
                hi,
                cell_tol,
            )
        })
        .collect();
    Ok(compensated_total(pieces.into_iter()).powf(1.0 / p) / norm)
}

/// Outcome of a discrete-sampling comparison at one net.
#[derive(Clone, Copy, Debug)]
pub struct SamplingCheck {
    /// `sum_xi |A_xi| |f(xi)|^p / ||f||_p^p`.
    pub ratio: f64,
    /// `|ratio - 1| <= epsilon`.
    pub within_epsilon: bool,
    /// `ratio` within the two-sided factor-2 window `[2^-p, 2^p]`.
    pub within_factor2: bool,
}

/// Compares the cell-weighted samples of `f` on the net against its `L^p`
/// norm.
pub fn sampling_check(
    setting: &JacobiSetting,
    net: &NetLevel,
    f: &SpectralVector,
    p: f64,
    epsilon: f64,
) -> Result<SamplingCheck> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("sampling_check needs 1 <= p < inf (got {p})")));
    }
    let rule = setting.gauss_jacobi_rule(2 * (f.degree() + 1) + 8)?;
    let norm = lp_norm_rule(setting, f, p, &rule, &[])?;
    if norm == 0.0 {
        return Err(Error::Domain("sampling_check needs a nonzero function".into()));
    }
    let xs: Vec<f64> = net.centers().iter().map(|t| t.cos()).collect();
    let vals = f.eval_many(setting, &xs)?;
    let mut acc = CompensatedSum::new();
    for (&a, &v) in net.cell_measures().iter().zip(&vals) {
        acc.add(a * v.abs().powf(p));
    }
    let ratio = acc.value() / norm.powf(p);
    Ok(SamplingCheck {
        ratio,
        within_epsilon: (ratio - 1.0).abs() <= epsilon,
        within_factor2: (0.5_f64.powf(p)..=2.0_f64.powf(p)).contains(&ratio),
    })
}

/// One mesh-ratio candidate in a gamma certification sweep.
#[derive(Clone, Copy, Debug)]
pub struct GammaRow {
    pub gamma: f64,
    /// Extreme values of `ratio^{1/p}` over the ensemble.
    pub worst_low: f64,
    pub worst_high: f64,
    pub pass: bool,
}

/// Result of certifying the mesh ratio: the largest dyadic `gamma` whose
/// ensemble stays within factor 2, and the recommended working value
/// `gamma_star / 2`.
#[derive(Clone, Debug)]
pub struct GammaCertificate {
    pub gamma_star: f64,
    pub recommended: f64,
    pub rows: Vec<GammaRow>,
}

/// Finds the largest `gamma in {2^-m}` for which an ensemble of random
/// band-`lambda` functions passes the factor-2 sampling comparison on the
/// net with `delta = gamma / lambda`.
pub fn certify_gamma(
    setting: &JacobiSetting,
    lambda: f64,
    p: f64,
    draws: usize,
    rng: &mut impl Rng,
) -> Result<GammaCertificate> {
    if lambda <= 0.0 {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    let mut rows = Vec::new();
    for m in 0..=8 {
        let gamma = 0.5_f64.powi(m);
        let delta = gamma / lambda;
        if delta > PI {
            continue;
        }
        let net = maximal_net(setting, delta)?;
        let mut worst_low = f64::INFINITY;
        let mut worst_high: f64 = 0.0;
        for _ in 0..draws.max(1) {
            let f = random_band_limited(setting, lambda, rng);
            let check = sampling_check(setting, &net, &f, p, 0.5)?;
            let r = check.ratio.powf(1.0 / p);
            worst_low = worst_low.min(r);
            worst_high = worst_high.max(r);
        }
        let pass = worst_low >= 0.5 && worst_high <= 2.0;
        rows.push(GammaRow {
            gamma,
            worst_low,
            worst_high,
            pass,
        });
        if pass {
            return Ok(GammaCertificate {
                gamma_star: gamma,
                recommended: 0.5 * gamma,
                rows,
            });
        }
    }
    Err(Error::Domain(
        "no gamma down to 2^-8 passed the factor-2 sampling ensemble".into(),
    ))
}

/// A positive-weight quadrature exact on a spectral band, anchored at the
/// companion-cell measures.
#[derive(Clone, Debug)]
pub struct CubatureRule {
    net: NetLevel,
    weights: Vec<f64>,
    degree_exact: usize,
    moment_defect: f64,
    comparability: Vec<bool>,
    floored: usize,
}

impl CubatureRule {
    pub fn net(&self) -> &NetLevel {
        &self.net
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree_exact(&self) -> usize {
        self.degree_exact
    }

    /// Largest moment residual `|sum_xi w_xi p_k(cos xi) - int p_k dmu|`
    /// over `k <= degree_exact`.
    pub fn moment_defect(&self) -> f64 {
        self.moment_defect
    }

    /// Per-weight pass/fail against the window
    /// `[2/3 mu(B(xi, delta/2)), 2 mu(B(xi, delta))]`.
    pub fn comparability(&self) -> &[bool] {
        &self.comparability
    }

    pub fn comparability_fraction(&self) -> f64 {
        if self.comparability.is_empty() {
            return 1.0;
        }
        self.comparability.iter().filter(|&&b| b).count() as f64 / self.comparability.len() as f64
    }

    /// Number of weights clamped at the positivity floor (a nonzero count
    /// signals the net is too coarse for comfortably interior weights).
    pub fn floored(&self) -> usize {
        self.floored
    }

    /// Applies the rule to a function of `x = cos theta`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (&w, &th) in self.weights.iter().zip(self.net.centers()) {
            acc.add(w * f(th.cos()));
        }
        acc.value()
    }

    /// Rebuilds a rule from serialized parts without re-solving; the moment
    /// defect and comparability report are recomputed.
    pub fn from_parts(
        setting: &JacobiSetting,
        net: NetLevel,
        weights: Vec<f64>,
        degree_exact: usize,
    ) -> Result<Self> {
        if weights.len() != net.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} centers",
                weights.len(),
                net.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Shape("cubature weights must be positive and finite".into()));
        }
        let table = basis_table(setting, &net, degree_exact)?;
        let moment_defect = moment_residual(setting, &table, &weights, degree_exact)
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));
        let comparability = comparability_report(setting, &net, &weights);
        Ok(Self {
            net,
            weights,
            degree_exact,
            moment_defect,
            comparability,
            floored: 0,
        })
    }
}

fn basis_table(
    setting: &JacobiSetting,
    net: &NetLevel,
    degree: usize,
) -> Result<Vec<Vec<f64>>> {
    if degree > setting.max_degree() {
        return Err(Error::DegreeLimit {
            requested: degree,
            max: setting.max_degree(),
        });
    }
    Ok(net
        .centers()
        .par_iter()
        .map(|&th| {
            setting
                .ortho_jacobi_all(degree, th.cos())
                .expect("degree checked")
        })
        .collect())
}

/// Moment residuals `r_k - sum_i p_k(x_i) w_i`; the exact moments are
/// `sqrt(total_mass)` for `k = 0` and zero otherwise, by orthonormality.
fn moment_residual(
    setting: &JacobiSetting,
    table: &[Vec<f64>],
    w: &[f64],
    degree: usize,
) -> Vec<f64> {
    (0..=degree)
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for (row, &wi) in table.iter().zip(w) {
                acc.add(row[k] * wi);
            }
            let target = if k == 0 {
                setting.total_mass().sqrt()
            } else {
                0.0
            };
            target - acc.value()
        })
        .collect()
}

fn comparability_report(setting: &JacobiSetting, net: &NetLevel, w: &[f64]) -> Vec<bool> {
    net.centers()
        .par_iter()
        .zip(w)
        .map(|(&th, &wi)| {
            let lo = 2.0 / 3.0 * setting.ball_measure_theta(th, 0.5 * net.delta());
            let hi = 2.0 * setting.ball_measure_theta(th, net.delta());
            (lo..=hi).contains(&wi)
        })
        .collect()
}

/// Finds the largest leading moment block that is still positive definite,
/// to name the offending degree in an infeasibility report.
fn largest_feasible_degree(g: &DMatrix<f64>) -> usize {
    let n = g.nrows();
    let mut lo = 0;
    let mut hi = n;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if Cholesky::new(g.view((0, 0), (mid, mid)).into_owned()).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves for positive cubature weights exact on degrees `0..=degree_exact`:
/// minimizes `sum ((w_i - |A_i|)/|A_i|)^2` subject to the moment equations
/// and the positivity floor `w_i >= 1e-8 |A_i|`. Weights pinned at the floor
/// stay fixed (they are never released; for the nets produced here the floor
/// is inactive unless the net is badly undersized).
pub fn build_cubature(
    setting: &JacobiSetting,
    net: &NetLevel,
    degree_exact: usize,
) -> Result<CubatureRule> {
    let n_c = net.len();
    let n_k = degree_exact + 1;
    if n_c < n_k {
        return Err(Error::CubatureInfeasible {
            degree: degree_exact,
            detail: format!("net has {n_c} centers; exactness to degree {degree_exact} needs at least {n_k}"),
        });
    }
    let table = basis_table(setting, net, degree_exact)?;
    let a = net.cell_measures();
    let floor: Vec<f64> = a.iter().map(|&ai| 1e-8 * ai).collect();
    let mut w: Vec<f64> = a.to_vec();
    let mut fixed = vec![false; n_c];
    let mut floored = 0usize;
    let tol = 1e-13 * setting.total_mass();

    'active: for _round in 0..32 {
        let free: Vec<usize> = (0..n_c).filter(|&i| !fixed[i]).collect();
        if free.len() < n_k {
            return Err(Error::CubatureInfeasible {
                degree: degree_exact,
                detail: "positivity floor leaves fewer free weights than moment equations".into(),
            });
        }
        // A[k, c] = p_k(x_{free[c]}) * |A_{free[c]}|; correction dw = a^2 M^T y.
        let a_mat = DMatrix::from_fn(n_k, free.len(), |k, c| table[free[c]][k] * a[free[c]]);
        let gram = &a_mat * a_mat.transpose();
        let chol = match Cholesky::new(gram.clone()) {
            Some(c) => c,
            None => {
                let ok = largest_feasible_degree(&gram);
                return Err(Error::CubatureInfeasible {
                    degree: ok,
                    detail: format!(
                        "moment system loses rank past degree {}; refine the net",
                        ok.saturating_sub(1)
                    ),
                });
            }
        };
        for _it in 0..48 {
            let res = moment_residual(setting, &table, &w, degree_exact);
            if res.iter().all(|r| r.abs() <= tol) {
                break;
            }
            let y = chol.solve(&DVector::from_vec(res));
            for (c, &i) in free.iter().enumerate() {
                let mut dot = 0.0;
                for k in 0..n_k {
                    dot += a_mat[(k, c)] * y[k];
                }
                w[i] += a[i] * dot;
            }
        }
        for &i in &free {
            if w[i] < floor[i] {
                w[i] = floor[i];
                fixed[i] = true;
                floored += 1;
                continue 'active;
            }
        }
        break;
    }

    let residual = moment_residual(setting, &table, &w, degree_exact);
    let (worst_k, moment_defect) = residual
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.abs()))
        .fold((0, 0.0), |acc, it| if it.1 > acc.1 { it } else { acc });
    if moment_defect > 1e-10 * setting.total_mass() {
        return Err(Error::CubatureInfeasible {
            degree: worst_k,
            detail: format!(
                "moment residual {moment_defect:.3e} at degree {worst_k} exceeds tolerance; refine the net"
            ),
        });
    }
    let comparability = comparability_report(setting, net, &w);
    Ok(CubatureRule {
        net: net.clone(),
        weights: w,
        degree_exact,
        moment_defect,
        comparability,
        floored,
    })
}

/// The level-`j` cubature of a frame construction: net spacing
/// `gamma / (kappa b^{j+1})` and exactness on the band `kappa b^{j+1}`,
/// which covers products of two level-`j` band elements when `kappa = 2`
/// (valid whenever `alpha + beta + 1 >= 0`).
pub fn cubature_for_level(
    setting: &JacobiSetting,
    j: usize,
    b: f64,
    gamma: f64,
    kappa: f64,
) -> Result<CubatureRule> {
    if !(b > 1.0) || !(gamma > 0.0) || !(kappa >= 1.0) {
        return Err(Error::Domain(format!(
            "need b > 1, gamma > 0, kappa >= 1 (got b = {b}, gamma = {gamma}, kappa = {kappa})"
        )));
    }
    let band = kappa * b.powi(j as i32 + 1);
    let degree = setting.degree_for_band(band);
    if degree == setting.max_degree() && setting.sqrt_eigenvalue(degree + 1) <= band {
        return Err(Error::DegreeLimit {
            requested: degree + 1,
            max: setting.max_degree(),
        });
    }
    let delta = (gamma / band).min(PI);
    let net = maximal_net(setting, delta)?;
    build_cubature(setting, &net, degree)
}

/// Realized constants of the companion-cell decay bounds: the maxima over
/// an `x`-grid of
/// `sum_xi |A_xi| (1 + rho/delta)^{-d-1} / mu(B(x, delta))` and
/// `sum_xi (1 + rho/delta)^{-2d-1}`.
pub fn companion_bounds_check(
    setting: &JacobiSetting,
    net: &NetLevel,
    d: f64,
    grid_n: usize,
) -> (f64, f64) {
    let thetas = linspace(0.0, PI, grid_n.max(17));
    let per_point: Vec<(f64, f64)> = thetas
        .par_iter()
        .map(|&th| {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (&xi, &ai) in net.centers().iter().zip(net.cell_measures()) {
                let q = 1.0 + (th - xi).abs() / net.delta();
                s1 += ai * q.powf(-d - 1.0);
                s2 += q.powf(-2.0 * d - 1.0);
            }
            (s1 / setting.ball_measure_theta(th, net.delta()), s2)
        })
        .collect();
    per_point
        .into_iter()
        .fold((0.0_f64, 0.0_f64), |(m1, m2), (c1, c2)| (m1.max(c1), m2.max(c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn legendre() -> JacobiSetting {
        JacobiSetting::with_max_degree(0.0, 0.0, 1024).unwrap()
    }

    #[test]
    fn coarse_net_matches_hand_construction() {
        let s = legendre();
        let net = maximal_net(&s, PI / 2.0).unwrap();
        assert_eq!(net.centers(), &[0.0, PI / 2.0, PI]);
        let b = net.cell_bounds();
        assert_abs_diff_eq!(b[0].1, PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].1, 3.0 * PI / 4.0, epsilon = 1e-14);
        assert_eq!(b[0].0, 0.0);
        assert_eq!(b[2].1, PI);
        // Frozen from an extended-precision evaluation of the cell measures.
        let m = net.cell_measures();
        assert_relative_eq!(m[0], 2.92893218813452427e-01, max_relative = 1e-13);
        assert_relative_eq!(m[1], 1.41421356237309492e+00, max_relative = 1e-13);
        assert_relative_eq!(m[2], 2.92893218813452538e-01, max_relative = 1e-13);
    }

    #[test]
    fn net_rejects_bad_delta() {
        let s = legendre();
        assert!(maximal_net(&s, 0.0).is_err());
        assert!(maximal_net(&s, -1.0).is_err());
        assert!(maximal_net(&s, 3.2).is_err());
    }

    #[test]
    fn net_cardinality_grows_geometrically() {
        let s = JacobiSetting::with_max_degree(-0.3, 0.7, 2048).unwrap();
        let b: f64 = 2.0;
        let counts: Vec<usize> = (0..=6)
            .map(|j| maximal_net(&s, 0.25 * b.powi(-j)).unwrap().len())
            .collect();
        for w in counts.windows(2) {
            let ratio = w[1] as f64 / w[0] as f64;
            assert!((b / 2.0..=2.0 * b).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn mz_defect_vanishes_for_constants_and_shrinks_with_gamma() {
        let s = legendre();
        let constant = SpectralVector::new(vec![3.7]);
        let net = maximal_net(&s, 0.05).unwrap();
        assert_eq!(mz_defect(&s, &net, &constant, 2.0).unwrap(), 0.0);

        let lambda = 32.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<SpectralVector> = (0..8)
            .map(|_| random_band_limited(&s, lambda, &mut rng))
            .collect();
        let mut means = Vec::new();
        for m in 0..4 {
            let gamma = 0.5_f64.powi(m);
            let net = maximal_net(&s, gamma / lambda).unwrap();
            let mean = draws
                .iter()
                .map(|f| mz_defect(&s, &net, f, 2.0).unwrap())
                .sum::<f64>()
                / draws.len() as f64;
            means.push(mean);
        }
        for w in means.windows(2) {
            assert!(w[1] <= w[0] * 1.1, "defect failed to shrink: {means:?}");
        }
        assert!(means[3] < 0.5 * means[0]);
    }

    #[test]
    fn sampling_ratio_exact_for_constants() {
        let s = JacobiSetting::with_max_degree(0.5, 0.5, 256).unwrap();
        let net = maximal_net(&s, 0.1).unwrap();
        let f = SpectralVector::new(vec![-2.2]);
        let check = sampling_check(&s, &net, &f, 1.7, 1e-10).unwrap();
        assert_abs_diff_eq!(check.ratio, 1.0, epsilon = 1e-13);
        assert!(check.within_epsilon && check.within_factor2);
    }

    #[test]
    fn certified_gamma_gives_factor_two_sampling() {
        let s = legendre();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cert = certify_gamma(&s, 32.0, 2.0, 60, &mut rng).unwrap();
        assert!(cert.gamma_star >= 1.0 / 8.0, "gamma_star {}", cert.gamma_star);
        assert_eq!(cert.recommended, 0.5 * cert.gamma_star);
        let last = cert.rows.last().unwrap();
        assert!(last.pass && last.worst_low >= 0.5 && last.worst_high <= 2.0);

        // Tighter two-sided window at a four-times-finer net.
        let net = maximal_net(&s, cert.gamma_star / 4.0 / 64.0).unwrap();
        for _ in 0..30 {
            let f = random_band_limited(&s, 64.0, &mut rng);
            let check = sampling_check(&s, &net, &f, 2.0, 0.1).unwrap();
            assert!(check.within_epsilon, "ratio {}", check.ratio);
        }
    }

    #[test]
    fn degree_zero_cubature_returns_cell_measures() {
        let s = JacobiSetting::with_max_degree(-0.3, 0.7, 256).unwrap();
        let net = maximal_net(&s, 0.2).unwrap();
        let rule = build_cubature(&s, &net, 0).unwrap();
        for (w, a) in rule.weights().iter().zip(net.cell_measures()) {
            assert_relative_eq!(w, a, max_relative = 1e-13);
        }
        assert_eq!(rule.floored(), 0);
    }

    #[test]
    fn three_point_degree_two_rule_is_the_interpolatory_one() {
        // Unique solution of the 3x3 moment system, derived by hand:
        // weights (1/3, 4/3, 1/3) at x = (1, 0, -1).
        let s = legendre();
        let net = maximal_net(&s, PI / 2.0).unwrap();
        let rule = build_cubature(&s, &net, 2).unwrap();
        assert_relative_eq!(rule.weights()[0], 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(rule.weights()[1], 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(rule.weights()[2], 1.0 / 3.0, max_relative = 1e-12);
        // Degree 1 on the same net leaves the anchor untouched (the cell
        // measures already satisfy both moments).
        let rule1 = build_cubature(&s, &net, 1).unwrap();
        for (w, a) in rule1.weights().iter().zip(net.cell_measures()) {
            assert_relative_eq!(w, a, max_relative = 1e-12);
        }
    }

    #[test]
    fn cubature_moments_match_oracle_quadrature() {
        for &(alpha, beta) in &[(0.0, 0.0), (0.5, -0.5), (-0.3, 0.7)] {
            let s = JacobiSetting::with_max_degree(alpha, beta, 512).unwrap();
            let net = maximal_net(&s, 0.02).unwrap();
            let degree = 24;
            let rule = build_cubature(&s, &net, degree).unwrap();
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            let oracle = s.gauss_jacobi_rule(degree + 4).unwrap();
            for k in 0..=degree {
                let got = rule.apply(|x| s.ortho_jacobi(k, x).unwrap());
                let want = oracle.integrate(|x| s.ortho_jacobi(k, x).unwrap());
                assert_abs_diff_eq!(got, want, epsilon = 1e-10 * s.total_mass());
            }
            assert!(rule.moment_defect() <= 1e-10 * s.total_mass());
            assert!(rule.comparability_fraction() > 0.9, "window fraction too low");
        }
    }

    #[test]
    fn odd_moment_vanishes_for_symmetric_weight() {
        let s = legendre();
        let net = maximal_net(&s, 0.03).unwrap();
        let rule = build_cubature(&s, &net, 12).unwrap();
        let p1 = rule.apply(|x| s.ortho_jacobi(1, x).unwrap());
        assert_abs_diff_eq!(p1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn level_cubature_reaches_expected_degree() {
        let s = legendre();
        // Band 2^2 = 4: largest k with k(k+1) <= 16 is 3.
        let rule = cubature_for_level(&s, 0, 2.0, 0.25, 2.0).unwrap();
        assert_eq!(rule.degree_exact(), 3);
        for j in 1..=6 {
            let rule = cubature_for_level(&s, j, 2.0, 0.25, 2.0).unwrap();
            assert!(rule.weights().iter().all(|&w| w > 0.0), "level {j}");
            assert_eq!(rule.floored(), 0, "level {j}");
        }
    }

    #[test]
    fn doubling_band_covers_products_when_parameter_sum_nonnegative() {
        // sqrt(lambda_{2n} / lambda_n) <= 2 iff alpha + beta + 1 >= 0.
        for &(alpha, beta) in &[(0.0, 0.0), (0.5, 0.5), (0.5, -0.5), (-0.3, 0.7)] {
            let s = JacobiSetting::with_max_degree(alpha, beta, 1100).unwrap();
            for n in 1..=512 {
                let ratio = (s.eigenvalue(2 * n) / s.eigenvalue(n)).sqrt();
                assert!(ratio <= 2.0 + 1e-12, "({alpha},{beta}) n={n}: {ratio}");
            }
        }
        // And the bound genuinely fails once the sum drops below -1.
        let s = JacobiSetting::with_max_degree(-0.9, -0.9, 64).unwrap();
        assert!((s.eigenvalue(2) / s.eigenvalue(1)).sqrt() > 2.0);
    }

    #[test]
    fn cubature_is_deterministic() {
        let s = JacobiSetting::with_max_degree(0.5, 0.5, 256).unwrap();
        let net = maximal_net(&s, 0.04).unwrap();
        let r1 = build_cubature(&s, &net, 16).unwrap();
        let r2 = build_cubature(&s, &net, 16).unwrap();
        for (a, b) in r1.weights().iter().zip(r2.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn companion_bounds_are_uniform() {
        for &(alpha, beta) in &[(0.0, 0.0), (-0.3, 0.7)] {
            let s = JacobiSetting::with_max_degree(alpha, beta, 256).unwrap();
            let d = s.doubling_exponent();
            for &delta in &[0.2, 0.05, 0.0125] {
                let net = maximal_net(&s, delta).unwrap();
                let (c1, c2) = companion_bounds_check(&s, &net, d, 65);
                assert!(c1.is_finite() && c1 < 50.0, "c1 = {c1} at delta {delta}");
                assert!(c2.is_finite() && c2 < 50.0, "c2 = {c2} at delta {delta}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// Construction invariants hold for arbitrary spacings.
        #[test]
        fn net_invariants_hold(delta in 0.01f64..=std::f64::consts::PI) {
            let s = JacobiSetting::with_max_degree(0.5, -0.5, 64).unwrap();
            let net = maximal_net(&s, delta).unwrap();
            prop_assert!(net.verify_invariants(&s).is_ok());
        }
    }
}
