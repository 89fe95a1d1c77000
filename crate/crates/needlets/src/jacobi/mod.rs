//! The concrete space the whole crate works on: `[-1, 1]` equipped with the
//! Jacobi measure `dmu = (1-x)^alpha (1+x)^beta dx` (`alpha, beta > -1`), the
//! arccos metric `rho(x, y) = |arccos x - arccos y|`, and the orthonormal
//! Jacobi polynomials, which diagonalize the divergence-form operator
//! `L f = -[(1-x^2) w f']' / w` with eigenvalues `lambda_k = k (k + alpha + beta + 1)`.
//!
//! In the canonical coordinate `theta = arccos x` the metric is Euclidean on
//! `[0, pi]` and the measure has density
//! `W(theta) = 2^{alpha+beta+1} sin^{2alpha+1}(theta/2) cos^{2beta+1}(theta/2)`.
//! All ball and interval measures are computed in this coordinate.

pub mod quadrature;

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::util::CompensatedSum;
pub use quadrature::{integrate_adaptive, GaussJacobiRule};

/// Default cap on polynomial degree; high enough for every band used by the
/// frame and Besov machinery at reasonable level counts.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

/// Number of theta-grid points used for cached sup-norm estimates of the
/// basis polynomials (heat-kernel truncation bounds).
const SUP_GRID: usize = 257;

/// A point of `[-1, 1]` in the canonical coordinate `theta = arccos x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointTheta(f64);

impl PointTheta {
    /// Wraps an angle, clamping to `[0, pi]` (guards against rounding spill).
    pub fn new(theta: f64) -> Self {
        Self(theta.clamp(0.0, PI))
    }

    pub fn from_x(x: f64) -> Self {
        Self(x.clamp(-1.0, 1.0).acos())
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.cos()
    }

    /// Metric distance `rho` to another point.
    pub fn dist(self, other: PointTheta) -> f64 {
        (self.0 - other.0).abs()
    }
}

/// Metric distance between two points given in the `x` coordinate.
pub fn intrinsic_distance(x: f64, y: f64) -> f64 {
    (x.clamp(-1.0, 1.0).acos() - y.clamp(-1.0, 1.0).acos()).abs()
}

/// Fixed data of a Jacobi setting: parameters, total mass, orthonormalization
/// constants, and lazily certified doubling exponents.
#[derive(Debug)]
pub struct JacobiSetting {
    alpha: f64,
    beta: f64,
    total_mass: f64,
    /// `h_k = ||P_k^{(alpha,beta)}||_{L^2(dmu)}`, classical normalization.
    norm_constants: Vec<f64>,
    max_degree: usize,
    /// Estimated sup of |p_k| over a theta grid, filled on first use.
    sup_bounds: OnceLock<Vec<f64>>,
    /// (d_est, beta_est) from `doubling_certify`, filled on first use.
    doubling: OnceLock<(f64, f64)>,
}

impl JacobiSetting {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_max_degree(alpha, beta, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(alpha: f64, beta: f64, max_degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "Jacobi parameters must satisfy alpha, beta > -1 (got {alpha}, {beta})"
            )));
        }
        if max_degree == 0 {
            return Err(Error::Domain("max_degree must be positive".into()));
        }
        // mu([-1,1]) = 2^{alpha+beta+1} B(alpha+1, beta+1).
        let total_mass = ((alpha + beta + 1.0) * 2.0_f64.ln() + ln_gamma(alpha + 1.0)
            + ln_gamma(beta + 1.0)
            - ln_gamma(alpha + beta + 2.0))
        .exp();
        let mut norm_constants = Vec::with_capacity(max_degree + 1);
        norm_constants.push(total_mass.sqrt());
        for k in 1..=max_degree {
            let kf = k as f64;
            // h_k^2 = 2^{a+b+1}/(2k+a+b+1) * G(k+a+1) G(k+b+1) / (G(k+a+b+1) k!).
            let ln_h2 = (alpha + beta + 1.0) * 2.0_f64.ln()
                - (2.0 * kf + alpha + beta + 1.0).ln()
                + ln_gamma(kf + alpha + 1.0)
                + ln_gamma(kf + beta + 1.0)
                - ln_gamma(kf + alpha + beta + 1.0)
                - ln_gamma(kf + 1.0);
            norm_constants.push((0.5 * ln_h2).exp());
        }
        Ok(Self {
            alpha,
            beta,
            total_mass,
            norm_constants,
            max_degree,
            sup_bounds: OnceLock::new(),
            doubling: OnceLock::new(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `lambda_k = k (k + alpha + beta + 1)`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let kf = k as f64;
        kf * (kf + self.alpha + self.beta + 1.0)
    }

    pub fn sqrt_eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalue(k).sqrt()
    }

    /// Largest degree `k` with `sqrt(lambda_k) <= lam`, saturated at
    /// `max_degree`.
    pub fn degree_for_band(&self, lam: f64) -> usize {
        if lam <= 0.0 {
            return 0;
        }
        let s1 = self.alpha + self.beta + 1.0;
        let guess = 0.5 * (-s1 + (s1 * s1 + 4.0 * lam * lam).sqrt());
        let mut k = guess.floor().max(0.0) as usize;
        while k + 1 <= self.max_degree && self.sqrt_eigenvalue(k + 1) <= lam {
            k += 1;
        }
        while k > 0 && self.sqrt_eigenvalue(k) > lam {
            k -= 1;
        }
        k.min(self.max_degree)
    }

    /// Classical L2 norm `h_k` of the degree-`k` Jacobi polynomial.
    pub fn norm_constant(&self, k: usize) -> f64 {
        self.norm_constants[k]
    }

    /// Measure density against `dx`.
    pub fn weight(&self, x: f64) -> f64 {
        (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }

    /// Measure density against `dtheta` in the canonical coordinate.
    pub fn theta_weight(&self, theta: f64) -> f64 {
        let (s, c) = ((0.5 * theta).sin(), (0.5 * theta).cos());
        2.0_f64.powf(self.alpha + self.beta + 1.0)
            * s.powf(2.0 * self.alpha + 1.0)
            * c.powf(2.0 * self.beta + 1.0)
    }

    /// Values of the orthonormal polynomials `p_0(x), ..., p_k(x)`, by the
    /// classical three-term recurrence rescaled with the norm constants.
    pub fn ortho_jacobi_all(&self, k: usize, x: f64) -> Result<Vec<f64>> {
        if k > self.max_degree {
            return Err(Error::DegreeLimit {
                requested: k,
                max: self.max_degree,
            });
        }
        let (a, b) = (self.alpha, self.beta);
        let mut out = Vec::with_capacity(k + 1);
        let mut p_prev = 1.0; // classical P_0
        out.push(p_prev / self.norm_constants[0]);
        if k == 0 {
            return Ok(out);
        }
        let mut p_cur = 0.5 * (a + b + 2.0) * x + 0.5 * (a - b);
        out.push(p_cur / self.norm_constants[1]);
        for m in 2..=k {
            let mf = m as f64;
            let c1 = 2.0 * mf * (mf + a + b) * (2.0 * mf + a + b - 2.0);
            let c2 = (2.0 * mf + a + b - 1.0) * (a * a - b * b);
            let c3 = (2.0 * mf + a + b - 1.0)
                * (2.0 * mf + a + b)
                * (2.0 * mf + a + b - 2.0);
            let c4 = 2.0 * (mf + a - 1.0) * (mf + b - 1.0) * (2.0 * mf + a + b);
            let p_next = ((c2 + c3 * x) * p_cur - c4 * p_prev) / c1;
            p_prev = p_cur;
            p_cur = p_next;
            out.push(p_cur / self.norm_constants[m]);
        }
        Ok(out)
    }

    /// Value of the degree-`k` orthonormal polynomial at `x`.
    pub fn ortho_jacobi(&self, k: usize, x: f64) -> Result<f64> {
        Ok(*self.ortho_jacobi_all(k, x)?.last().unwrap())
    }

    /// Same values through the orthonormal recurrence
    /// `sqrt(c_{m+1}) p_{m+1} = (x - a_m) p_m - sqrt(c_m) p_{m-1}`;
    /// used to cross-check the classical route.
    #[cfg(test)]
    pub(crate) fn ortho_jacobi_all_alt(&self, k: usize, x: f64) -> Vec<f64> {
        let (a, b) = (self.alpha, self.beta);
        let mut out = Vec::with_capacity(k + 1);
        let mut p_prev = 0.0;
        let mut p_cur = 1.0 / self.total_mass.sqrt();
        out.push(p_cur);
        for m in 0..k {
            let am = quadrature::recurrence_a(a, b, m);
            let cm = if m == 0 {
                0.0
            } else {
                quadrature::recurrence_c(a, b, m).sqrt()
            };
            let cnext = quadrature::recurrence_c(a, b, m + 1).sqrt();
            let p_next = ((x - am) * p_cur - cm * p_prev) / cnext;
            p_prev = p_cur;
            p_cur = p_next;
            out.push(p_cur);
        }
        out
    }

    /// Cached sup estimate of |p_k| over a theta grid (crude but adequate for
    /// truncation bounds; the grid resolves degrees well below `SUP_GRID`
    /// oscillations and overestimates are harmless there).
    pub(crate) fn sup_bound(&self, k: usize) -> f64 {
        let sups = self.sup_bounds.get_or_init(|| {
            let mut sups = vec![0.0_f64; self.max_degree + 1];
            for i in 0..SUP_GRID {
                let theta = PI * (i as f64 + 0.5) / SUP_GRID as f64;
                let vals = self
                    .ortho_jacobi_all(self.max_degree, theta.cos())
                    .expect("degree within limit");
                for (s, v) in sups.iter_mut().zip(&vals) {
                    *s = s.max(v.abs());
                }
            }
            // Endpoint values dominate for alpha, beta > -1/2; include them.
            for &x in &[-1.0, 1.0] {
                let vals = self
                    .ortho_jacobi_all(self.max_degree, x)
                    .expect("degree within limit");
                for (s, v) in sups.iter_mut().zip(&vals) {
                    *s = s.max(v.abs());
                }
            }
            sups
        });
        sups[k.min(self.max_degree)]
    }

    /// Measure of the theta-interval `[lo, hi]` clipped to `[0, pi]`.
    ///
    /// Computed by adaptive quadrature in the variable `u = sin^2(theta/2)`,
    /// where the density is `2^{alpha+beta+1} u^alpha (1-u)^beta`. When an
    /// exponent is negative, the corresponding endpoint singularity is
    /// absorbed by one further power substitution so that the advertised
    /// tolerance is reached at shallow recursion depth (plain quadrature in
    /// theta stalls on the algebraic singularity).
    pub fn interval_measure_theta(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(PI);
        if lo >= hi {
            return 0.0;
        }
        if lo == 0.0 && hi == PI {
            return self.total_mass;
        }
        let u_lo = (0.5 * lo).sin().powi(2);
        let u_hi = if hi == PI {
            1.0
        } else {
            (0.5 * hi).sin().powi(2)
        };
        let scale = 2.0_f64.powf(self.alpha + self.beta + 1.0);
        // Error budget proportional to the theta-width, so that cell
        // decompositions sum to the total mass within ~1e-12 * total.
        let tol = 1e-13 * self.total_mass / scale * ((hi - lo) / PI).max(1e-4);
        let mut acc = 0.0;
        if u_lo < 0.5 {
            acc += self.beta_density_lower(u_lo, u_hi.min(0.5), tol);
        }
        if u_hi > 0.5 {
            acc += self.beta_density_upper(u_lo.max(0.5), u_hi, tol);
        }
        scale * acc
    }

    /// `int_{u0}^{u1} u^alpha (1-u)^beta du` for `[u0, u1]` inside `[0, 0.5]`.
    /// For `alpha < 0` substitute `v = u^{alpha+1}`, which removes the
    /// endpoint singularity at `u = 0`.
    fn beta_density_lower(&self, u0: f64, u1: f64, tol: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if a < 0.0 {
            let p = a + 1.0;
            integrate_adaptive(
                |v| (1.0 - v.powf(1.0 / p)).powf(b),
                u0.powf(p),
                u1.powf(p),
                tol * p,
            ) / p
        } else {
            integrate_adaptive(|u| u.powf(a) * (1.0 - u).powf(b), u0, u1, tol)
        }
    }

    /// Mirror of `beta_density_lower` for `[u0, u1]` inside `[0.5, 1]`, with
    /// the substitution `w = (1-u)^{beta+1}` when `beta < 0`.
    fn beta_density_upper(&self, u0: f64, u1: f64, tol: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if b < 0.0 {
            let p = b + 1.0;
            integrate_adaptive(
                |w| (1.0 - w.powf(1.0 / p)).powf(a),
                (1.0 - u1).powf(p),
                (1.0 - u0).powf(p),
                tol * p,
            ) / p
        } else {
            integrate_adaptive(|u| u.powf(a) * (1.0 - u).powf(b), u0, u1, tol)
        }
    }

    /// Measure of the ball `B(x, r)` in the arccos metric, `x` in `[-1, 1]`.
    pub fn ball_measure(&self, x: f64, r: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("center {x} outside [-1, 1]")));
        }
        if r <= 0.0 {
            return Err(Error::Domain(format!("ball radius {r} must be positive")));
        }
        Ok(self.ball_measure_theta(x.acos(), r))
    }

    /// Ball measure with the center given in the canonical coordinate.
    /// Radii `>= pi` cover the whole space and return the total mass exactly.
    pub fn ball_measure_theta(&self, theta: f64, r: f64) -> f64 {
        assert!(r > 0.0, "ball radius must be positive");
        self.interval_measure_theta(theta - r, theta + r)
    }

    /// Localization envelope
    /// `(mu(B(x,delta)) mu(B(y,delta)))^{-1/2} (1 + rho(x,y)/delta)^{-sigma}`:
    /// the natural decay scale for band-limited kernels at bandwidth
    /// `1/delta`.
    pub fn d_localizer(&self, delta: f64, sigma: f64, x: f64, y: f64) -> Result<f64> {
        if delta <= 0.0 {
            return Err(Error::Domain("delta must be positive".into()));
        }
        let mx = self.ball_measure(x, delta)?;
        let my = self.ball_measure(y, delta)?;
        let rho = intrinsic_distance(x, y);
        Ok((mx * my).powf(-0.5) * (1.0 + rho / delta).powf(-sigma))
    }

    /// Measures the volume-doubling behaviour on a grid and returns
    /// `(d_est, beta_est)`: the smallest exponent (to 1e-3) with
    /// `mu(B(x,2r)) <= 2^d mu(B(x,r))` on the grid, and the largest exponent
    /// with `mu(B(x,2r)) >= 2^beta mu(B(x,r))` there.
    ///
    /// The radius grid spans `[1e-3, 0.15]`, the scaling regime in which both
    /// exponents express the local geometry (for large radii every ratio
    /// degenerates towards 1 as balls saturate, which carries no information
    /// about dimension). Radii stay well below a third of the diameter, where
    /// the reverse bound is meaningful.
    pub fn doubling_certify(&self, grid_density: usize) -> (f64, f64) {
        let n_x = grid_density.max(17);
        // Geometric radius grid with ratio 2^{1/8}, so that 2r is again a
        // grid point eight steps up and each measure is computed once.
        let (r_min, r_max): (f64, f64) = (1e-3, 0.15);
        let octaves = (r_max / r_min).log2();
        let steps = (octaves * 8.0).ceil() as usize;
        let radii: Vec<f64> = (0..=steps + 8)
            .map(|i| r_min * 2.0_f64.powf(i as f64 / 8.0))
            .collect();
        let n_pairs = steps + 1;

        let per_theta: Vec<(f64, f64)> = (0..n_x)
            .into_par_iter()
            .map(|i| {
                let theta = PI * i as f64 / (n_x - 1) as f64;
                let measures: Vec<f64> = radii
                    .iter()
                    .map(|&r| self.ball_measure_theta(theta, r))
                    .collect();
                let mut hi = f64::NEG_INFINITY;
                let mut lo = f64::INFINITY;
                for p in 0..n_pairs {
                    let ratio = (measures[p + 8] / measures[p]).log2();
                    hi = hi.max(ratio);
                    lo = lo.min(ratio);
                }
                (hi, lo)
            })
            .collect();

        let d_raw = per_theta.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.0));
        let beta_raw = per_theta.iter().fold(f64::INFINITY, |m, p| m.min(p.1));
        ((d_raw * 1e3).ceil() / 1e3, (beta_raw * 1e3).floor() / 1e3)
    }

    /// Cached `(d_est, beta_est)` at default grid density.
    pub fn doubling_exponents(&self) -> (f64, f64) {
        *self.doubling.get_or_init(|| self.doubling_certify(161))
    }

    /// Cached doubling exponent `d_est`.
    pub fn doubling_exponent(&self) -> f64 {
        self.doubling_exponents().0
    }

    /// Smallest measure of a unit ball over a center grid (non-collapsing
    /// witness).
    pub fn non_collapsing_inf(&self, grid_density: usize) -> f64 {
        let n = grid_density.max(17);
        (0..n)
            .map(|i| self.ball_measure_theta(PI * i as f64 / (n - 1) as f64, 1.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Gauss-Jacobi rule with `n` nodes for this measure.
    pub fn gauss_jacobi_rule(&self, n: usize) -> Result<GaussJacobiRule> {
        GaussJacobiRule::new(self.alpha, self.beta, self.total_mass, n)
    }

    /// Realized constant of the Poincare inequality
    /// `int_I |f - mean_I(f)|^2 dmu <= c diam(I)^2 int_I |f'|^2 (1-x^2) dmu`
    /// on the interval `I = [x_lo, x_hi]`, with `diam` in the arccos metric.
    /// Returns `c` realized by `f` (0 when `f` is constant on `I`).
    pub fn verify_poincare(
        &self,
        f: impl Fn(f64) -> f64,
        f_deriv: impl Fn(f64) -> f64,
        x_lo: f64,
        x_hi: f64,
    ) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x_lo) || !(-1.0..=1.0).contains(&x_hi) || x_lo >= x_hi {
            return Err(Error::Domain(format!(
                "invalid interval [{x_lo}, {x_hi}]"
            )));
        }
        let (t_lo, t_hi) = (x_hi.acos(), x_lo.acos());
        let diam = t_hi - t_lo;
        let tol = 1e-13 * self.total_mass;
        let mass = self.interval_measure_theta(t_lo, t_hi);
        let mean = integrate_adaptive(
            |t| self.theta_weight(t) * f(t.cos()),
            t_lo,
            t_hi,
            tol,
        ) / mass;
        let var = integrate_adaptive(
            |t| {
                let d = f(t.cos()) - mean;
                self.theta_weight(t) * d * d
            },
            t_lo,
            t_hi,
            tol,
        );
        let energy = integrate_adaptive(
            |t| {
                let x = t.cos();
                let d = f_deriv(x);
                self.theta_weight(t) * d * d * (1.0 - x * x)
            },
            t_lo,
            t_hi,
            tol,
        );
        if energy <= tol {
            return if var <= 10.0 * tol {
                Ok(0.0)
            } else {
                Err(Error::Domain(
                    "function varies on the interval but has no Dirichlet energy".into(),
                ))
            };
        }
        Ok(var / (diam * diam * energy))
    }
}

/// Sums `w_i f(x_i)` over a slice of pairs with compensation (helper for
/// callers that hold nodes and weights separately).
pub fn weighted_sum(nodes: &[f64], weights: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&x, &w) in nodes.iter().zip(weights) {
        acc.add(w * f(x));
    }
    acc.value()
}
