//! Smooth spectral calculus for the Jacobi operator: cutoff functions,
//! Littlewood-Paley systems, band-limited kernels `fn(delta sqrt(L))(x, y)`,
//! the heat kernel with certified truncation, and the standard inequalities
//! (localization, norms, Nikolski/Bernstein/Jackson, spectral dimension).

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::{integrate_adaptive, JacobiSetting};
use crate::util::{linspace, CompensatedSum};

// ---------------------------------------------------------------------------
// Cutoff functions
// ---------------------------------------------------------------------------

/// Shape of a smooth spectral cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffKind {
    /// `Phi`: identically 1 on `[0, 1]`, supported in `[0, b]`, decreasing.
    Plateau,
    /// `Psi(u) = Phi(u) - Phi(b u)`: supported in `[1/b, b]`, positive on
    /// `(1/b, b)`.
    Band,
}

/// A concrete infinitely smooth cutoff at scale parameter `b > 1`.
///
/// The plateau is glued from the standard bump `h(t) = exp(-1/t)`:
/// `Phi(u) = h((b-u)/(b-1)) / (h((b-u)/(b-1)) + h((u-1)/(b-1)))` between the
/// plateau edge and the support edge. All derivatives vanish at both edges,
/// so every declared smoothness order is honoured.
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    kind: CutoffKind,
    b: f64,
    /// Smoothness order the caller relies on; `None` means "all orders".
    /// The construction is C-infinity, so any declaration is valid.
    declared_smoothness: Option<u32>,
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

pub(crate) fn plateau_value(u: f64, b: f64) -> f64 {
    if u <= 1.0 {
        1.0
    } else if u >= b {
        0.0
    } else {
        let x1 = bump((b - u) / (b - 1.0));
        let x2 = bump((u - 1.0) / (b - 1.0));
        x1 / (x1 + x2)
    }
}

impl CutoffSpec {
    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn declared_smoothness(&self) -> Option<u32> {
        self.declared_smoothness
    }

    /// Support interval (closed hull).
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            CutoffKind::Plateau => (0.0, self.b),
            CutoffKind::Band => (1.0 / self.b, self.b),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            CutoffKind::Plateau => plateau_value(u, self.b),
            CutoffKind::Band => plateau_value(u, self.b) - plateau_value(self.b * u, self.b),
        }
    }
}

/// Builds a cutoff of the requested kind at scale `b > 1`.
pub fn make_cutoff(kind: CutoffKind, b: f64, smoothness_order: Option<u32>) -> Result<CutoffSpec> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("cutoff scale b must exceed 1 (got {b})")));
    }
    Ok(CutoffSpec {
        kind,
        b,
        declared_smoothness: smoothness_order,
    })
}

// ---------------------------------------------------------------------------
// Littlewood-Paley systems
// ---------------------------------------------------------------------------

/// Normalization of a Littlewood-Paley family `{Psi_j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LPFlavor {
    /// `sum_j Psi_j = 1` (plateau differences); squares sum into `[1/2, 1]`.
    Partition,
    /// `Psi_j = sqrt` of the partition blocks, so `sum_j Psi_j^2 = 1`.
    SqrtPartition,
}

/// The dyadic-type family `Psi_0 = Phi`, `Psi_j(u) = Psi(b^{-j} u)` for
/// `j >= 1`, in one of the two normalizations, together with the canonical
/// dual family `Psi~_j = Psi_j / sum_v Psi_v^2` (for the square-root flavor
/// the family is its own dual).
#[derive(Clone, Copy, Debug)]
pub struct LPSystem {
    b: f64,
    flavor: LPFlavor,
}

impl LPSystem {
    pub fn new(b: f64, flavor: LPFlavor) -> Result<Self> {
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("LP scale b must exceed 1 (got {b})")));
        }
        Ok(Self { b, flavor })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn flavor(&self) -> LPFlavor {
        self.flavor
    }

    /// Partition block `chi_j(u)` (before any square root).
    fn block(&self, j: usize, u: f64) -> f64 {
        if j == 0 {
            plateau_value(u, self.b)
        } else {
            let v = u / self.b.powi(j as i32);
            plateau_value(v, self.b) - plateau_value(self.b * v, self.b)
        }
    }

    /// `Psi_j(u)` in the chosen flavor.
    pub fn psi(&self, j: usize, u: f64) -> f64 {
        let chi = self.block(j, u);
        match self.flavor {
            LPFlavor::Partition => chi,
            LPFlavor::SqrtPartition => chi.max(0.0).sqrt(),
        }
    }

    /// `sum_{v >= 0} Psi_v(u)^2`; locally only two adjacent blocks are
    /// active, and the sum lies in `[1/2, 1]` for the partition flavor.
    pub fn square_sum(&self, u: f64) -> f64 {
        if u <= 1.0 {
            return 1.0;
        }
        let top = (u.ln() / self.b.ln()).ceil() as usize + 1;
        let mut s = 0.0;
        for j in top.saturating_sub(3)..=top {
            let p = self.psi(j, u);
            s += p * p;
        }
        s
    }

    /// Canonical dual `Psi~_j(u)`: equal supports, `sum_j Psi_j Psi~_j = 1`
    /// on the covered band.
    pub fn psi_dual(&self, j: usize, u: f64) -> f64 {
        match self.flavor {
            LPFlavor::SqrtPartition => self.psi(j, u),
            LPFlavor::Partition => {
                let p = self.psi(j, u);
                if p == 0.0 {
                    0.0
                } else {
                    p / self.square_sum(u)
                }
            }
        }
    }

    /// Edges of the support of `Psi_j`: `[b^{j-1}, b^{j+1}]` (`[0, b]` for
    /// `j = 0`).
    pub fn support(&self, j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, self.b)
        } else {
            (self.b.powi(j as i32 - 1), self.b.powi(j as i32 + 1))
        }
    }
}

// ---------------------------------------------------------------------------
// Spectral vectors
// ---------------------------------------------------------------------------

/// A function in the linear span of the basis, stored by its orthonormal
/// coefficients `c_k` (so the L2 norm is the Euclidean norm of `coeffs`).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    coeffs: Vec<f64>,
}

impl SpectralVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![0.0; len],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest stored degree (0 for an empty vector).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// L2(mu) norm, exact by orthonormality.
    pub fn norm2(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &c in &self.coeffs {
            acc.add(c * c);
        }
        acc.value().sqrt()
    }

    /// Drops trailing coefficients that are exactly zero.
    pub fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    /// Pointwise value `sum_k c_k p_k(x)`.
    pub fn eval(&self, setting: &JacobiSetting, x: f64) -> Result<f64> {
        if self.coeffs.is_empty() {
            return Ok(0.0);
        }
        let basis = setting.ortho_jacobi_all(self.degree(), x)?;
        let mut acc = CompensatedSum::new();
        for (c, p) in self.coeffs.iter().zip(&basis) {
            acc.add(c * p);
        }
        Ok(acc.value())
    }

    /// Values on many points (parallel over points, deterministic order).
    pub fn eval_many(&self, setting: &JacobiSetting, xs: &[f64]) -> Result<Vec<f64>> {
        if self.coeffs.is_empty() {
            return Ok(vec![0.0; xs.len()]);
        }
        if self.degree() > setting.max_degree() {
            return Err(Error::DegreeLimit {
                requested: self.degree(),
                max: setting.max_degree(),
            });
        }
        Ok(xs
            .par_iter()
            .map(|&x| {
                let basis = setting
                    .ortho_jacobi_all(self.degree(), x)
                    .expect("degree checked");
                let mut acc = CompensatedSum::new();
                for (c, p) in self.coeffs.iter().zip(&basis) {
                    acc.add(c * p);
                }
                acc.value()
            })
            .collect())
    }
}

/// Draws a random element of the band `sqrt(lambda_k) <= lambda` with
/// independent standard normal coefficients.
pub fn random_band_limited(
    setting: &JacobiSetting,
    lambda: f64,
    rng: &mut impl Rng,
) -> SpectralVector {
    let n = setting.degree_for_band(lambda);
    SpectralVector::new(
        (0..=n)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect(),
    )
}

/// Applies the spectral multiplier `u -> m(delta u)` to `f`:
/// output coefficients `m(delta sqrt(lambda_k)) c_k`, trailing zeros trimmed.
pub fn apply_spectral(
    setting: &JacobiSetting,
    f: &SpectralVector,
    multiplier: impl Fn(f64) -> f64,
    delta: f64,
) -> SpectralVector {
    let mut out: Vec<f64> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| multiplier(delta * setting.sqrt_eigenvalue(k)) * c)
        .collect();
    while out.last() == Some(&0.0) {
        out.pop();
    }
    SpectralVector::new(out)
}

// ---------------------------------------------------------------------------
// Band-limited kernels
// ---------------------------------------------------------------------------

/// Result of a kernel evaluation. `complete` is false when the multiplier's
/// support extends past the available degrees, i.e. the value misses a tail.
#[derive(Clone, Copy, Debug)]
pub struct KernelEval {
    pub value: f64,
    pub complete: bool,
}

/// Evaluates the kernel `fn(delta sqrt(L))(x, y) = sum_k m(delta
/// sqrt(lambda_k)) p_k(x) p_k(y)` with at most `max_degree + 1` terms.
pub fn kernel_eval(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    delta: f64,
    x: f64,
    y: f64,
    max_degree: usize,
) -> Result<KernelEval> {
    if delta <= 0.0 {
        return Err(Error::Domain("delta must be positive".into()));
    }
    let (_, hi) = cutoff.support();
    let needed = setting.degree_for_band(hi / delta);
    let cap = max_degree.min(setting.max_degree());
    let k_top = needed.min(cap);
    let px = setting.ortho_jacobi_all(k_top, x)?;
    let py = setting.ortho_jacobi_all(k_top, y)?;
    let mut acc = CompensatedSum::new();
    for k in 0..=k_top {
        let m = cutoff.eval(delta * setting.sqrt_eigenvalue(k));
        if m != 0.0 {
            acc.add(m * px[k] * py[k]);
        }
    }
    // Complete iff every eigenvalue past k_top lies beyond the support.
    let complete = setting.sqrt_eigenvalue(k_top + 1) * delta >= hi || needed <= cap;
    Ok(KernelEval {
        value: acc.value(),
        complete,
    })
}

// ---------------------------------------------------------------------------
// Heat kernel
// ---------------------------------------------------------------------------

/// Truncation degree for the heat kernel at time `t`: the first `K` past
/// which every term is below `tol` times a safety margin, using the cached
/// sup bounds of the basis.
fn heat_truncation(setting: &JacobiSetting, t: f64, tol: f64) -> Result<usize> {
    let margin = 1e-3 * tol;
    for k in 0..=setting.max_degree() {
        let s = setting.sup_bound(k);
        if (-setting.eigenvalue(k) * t).exp() * s * s < margin {
            return Ok(k);
        }
    }
    let k = setting.max_degree();
    let s = setting.sup_bound(k);
    Err(Error::TailTolerance {
        degree: k,
        tail: (-setting.eigenvalue(k) * t).exp() * s * s,
        tol,
    })
}

/// Heat kernel `p_t(x, y) = sum_k e^{-lambda_k t} p_k(x) p_k(y)`, truncated
/// once the certified term bound drops below `tol`.
pub fn heat_kernel(setting: &JacobiSetting, t: f64, x: f64, y: f64, tol: f64) -> Result<f64> {
    if t <= 0.0 || tol <= 0.0 {
        return Err(Error::Domain(format!(
            "heat kernel needs t > 0 and tol > 0 (got t = {t}, tol = {tol})"
        )));
    }
    let k_top = heat_truncation(setting, t, tol)?;
    let px = setting.ortho_jacobi_all(k_top, x)?;
    let py = setting.ortho_jacobi_all(k_top, y)?;
    let mut acc = CompensatedSum::new();
    for k in 0..=k_top {
        acc.add((-setting.eigenvalue(k) * t).exp() * px[k] * py[k]);
    }
    Ok(acc.value())
}

/// Heat kernel on a theta-grid: returns the symmetric matrix
/// `p_t(x_i, x_j)` for `x_i = cos(theta_i)`. One basis sweep per point.
pub fn heat_kernel_grid(
    setting: &JacobiSetting,
    t: f64,
    thetas: &[f64],
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let k_top = heat_truncation(setting, t, tol)?;
    let table: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&th| {
            setting
                .ortho_jacobi_all(k_top, th.cos())
                .expect("degree within limit")
        })
        .collect();
    let damp: Vec<f64> = (0..=k_top)
        .map(|k| (-setting.eigenvalue(k) * t).exp())
        .collect();
    let n = thetas.len();
    let mut out = vec![vec![0.0; n]; n];
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = CompensatedSum::new();
                    for k in 0..=k_top {
                        acc.add(damp[k] * table[i][k] * table[j][k]);
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();
    for (o, r) in out.iter_mut().zip(rows) {
        *o = r;
    }
    Ok(out)
}

/// Largest deviation of `int p_t(x, .) dmu` from 1 over `n_centers` centers
/// and the listed times, with the integral computed honestly by a
/// Gauss-Jacobi rule covering the truncated kernel degree.
pub fn verify_markov(
    setting: &JacobiSetting,
    ts: &[f64],
    n_centers: usize,
    tol: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in ts {
        let k_top = heat_truncation(setting, t, tol)?;
        let rule = setting.gauss_jacobi_rule(k_top + 2)?;
        for i in 0..n_centers {
            let theta = PI * (i as f64 + 0.5) / n_centers as f64;
            let x = theta.cos();
            let px = setting.ortho_jacobi_all(k_top, x)?;
            let node_vals: Vec<f64> = rule
                .nodes()
                .iter()
                .map(|&y| {
                    let py = setting.ortho_jacobi_all(k_top, y).expect("within limit");
                    let mut acc = CompensatedSum::new();
                    for k in 0..=k_top {
                        acc.add((-setting.eigenvalue(k) * t).exp() * px[k] * py[k]);
                    }
                    acc.value()
                })
                .collect();
            let mut integral = CompensatedSum::new();
            for (&w, &v) in rule.weights().iter().zip(&node_vals) {
                integral.add(w * v);
            }
            worst = worst.max((integral.value() - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Two-sided Gaussian envelope constants for the heat kernel, plus a
/// finite-difference estimate of the spatial Holder exponent.
#[derive(Clone, Copy, Debug)]
pub struct GaussianFit {
    /// Lower envelope `c1_prime * exp(-c1 rho^2/t) / sqrt(mu mu)`.
    pub c1_prime: f64,
    pub c1: f64,
    /// Upper envelope `c2_prime * exp(-c2 rho^2/t) / sqrt(mu mu)`.
    pub c2_prime: f64,
    pub c2: f64,
    pub holder_exponent_est: f64,
}

/// Fits one Gaussian decay rate by regression of
/// `ln(p_t sqrt(mu(B(x,sqrt t)) mu(B(y,sqrt t))))` against `rho^2/t`, then
/// takes the extreme prefactors making both envelope inequalities hold at
/// every usable grid point. Points where the kernel is below the double
/// precision noise floor are excluded (they carry no envelope information).
pub fn gaussian_bound_fit(
    setting: &JacobiSetting,
    t_list: &[f64],
    grid_n: usize,
) -> Result<GaussianFit> {
    if t_list.is_empty() || grid_n < 4 {
        return Err(Error::Domain("need at least one time and a 4-point grid".into()));
    }
    let thetas: Vec<f64> = (0..grid_n)
        .map(|i| PI * (i as f64 + 0.5) / grid_n as f64)
        .collect();
    // (z, ln q) samples over all pairs and times.
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for &t in t_list {
        let kern = heat_kernel_grid(setting, t, &thetas, 1e-13)?;
        let mus: Vec<f64> = thetas
            .iter()
            .map(|&th| setting.ball_measure_theta(th, t.sqrt().min(PI)))
            .collect();
        let q_max = (0..grid_n)
            .map(|i| kern[i][i] * mus[i])
            .fold(0.0_f64, f64::max);
        let floor = 1e-13 * q_max;
        for i in 0..grid_n {
            for j in i..grid_n {
                let q = kern[i][j] * (mus[i] * mus[j]).sqrt();
                if q > floor {
                    let rho = (thetas[i] - thetas[j]).abs();
                    samples.push((rho * rho / t, q.ln()));
                }
            }
        }
    }
    // Least squares ln q = a - c z on the decaying range.
    let fit: Vec<&(f64, f64)> = samples.iter().filter(|(z, _)| *z > 0.5).collect();
    if fit.len() < 8 {
        return Err(Error::Domain("grid too coarse for a Gaussian fit".into()));
    }
    let n = fit.len() as f64;
    let (mut sz, mut sq, mut szz, mut szq) = (0.0, 0.0, 0.0, 0.0);
    for (z, lq) in &fit {
        sz += z;
        sq += lq;
        szz += z * z;
        szq += z * lq;
    }
    let slope = (n * szq - sz * sq) / (n * szz - sz * sz);
    let c = (-slope).max(1e-3);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (z, lq) in &samples {
        let shifted = lq + c * z;
        lo = lo.min(shifted);
        hi = hi.max(shifted);
    }
    Ok(GaussianFit {
        c1_prime: lo.exp(),
        c1: c,
        c2_prime: hi.exp(),
        c2: c,
        holder_exponent_est: holder_exponent_est(setting, t_list)?,
    })
}

/// Estimates the spatial Holder exponent of `p_t(x, .)` from two-scale
/// finite differences at a few anchors, clamped to `[0, 1]`.
fn holder_exponent_est(setting: &JacobiSetting, t_list: &[f64]) -> Result<f64> {
    let t = t_list[t_list.len() / 2];
    let h = 0.02_f64.min(0.2 * t.sqrt());
    let mut slopes = Vec::new();
    for &fx in &[0.3, 0.5, 0.7] {
        let x = (PI * fx).cos();
        for &fy in &[0.35, 0.55] {
            let y0 = PI * fy;
            let p0 = heat_kernel(setting, t, x, y0.cos(), 1e-13)?;
            let p1 = heat_kernel(setting, t, x, (y0 + h).cos(), 1e-13)?;
            let p2 = heat_kernel(setting, t, x, (y0 + 2.0 * h).cos(), 1e-13)?;
            let d1 = (p1 - p0).abs();
            let d2 = (p2 - p0).abs();
            if d1 > 1e-12 && d2 > 1e-12 {
                slopes.push((d2 / d1).ln() / 2.0_f64.ln());
            }
        }
    }
    if slopes.is_empty() {
        return Ok(1.0);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    Ok(mean.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Localization and norm profiles
// ---------------------------------------------------------------------------

/// One row of a localization profile: the realized constant
/// `max |K_delta(x,y)| sqrt(mu(B(x,delta)) mu(B(y,delta))) (1 + rho/delta)^sigma`.
#[derive(Clone, Copy, Debug)]
pub struct ProfileRow {
    pub delta: f64,
    pub sigma: f64,
    pub constant: f64,
}

/// Sweeps the localization constants of `cutoff(delta sqrt(L))` over a
/// theta-grid for each `(delta, sigma)` combination.
///
/// With `scaled_window = Some(U)` the sup runs over pairs with
/// `rho(x, y)/delta <= U` only, so constants for different `delta` are taken
/// over the same range of the envelope variable `rho/delta`; this is the
/// right mode for cross-`delta` uniformity comparisons, because the domain
/// ends at `rho = pi` and coarse scales otherwise cover a shorter stretch of
/// the envelope than fine ones.  `None` takes the sup over the full grid.
pub fn localization_profile(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    deltas: &[f64],
    sigmas: &[f64],
    grid_n: usize,
    scaled_window: Option<f64>,
) -> Result<Vec<ProfileRow>> {
    let thetas = linspace(0.0, PI, grid_n.max(16));
    let mut rows = Vec::new();
    for &delta in deltas {
        match scaled_window {
            None => {
                let (kern, mus) = kernel_grid(setting, cutoff, delta, &thetas)?;
                for &sigma in sigmas {
                    let mut worst: f64 = 0.0;
                    for i in 0..thetas.len() {
                        for j in 0..thetas.len() {
                            let rho = (thetas[i] - thetas[j]).abs();
                            let c = kern[i][j].abs()
                                * (mus[i] * mus[j]).sqrt()
                                * (1.0 + rho / delta).powf(sigma);
                            worst = worst.max(c);
                        }
                    }
                    rows.push(ProfileRow {
                        delta,
                        sigma,
                        constant: worst,
                    });
                }
            }
            Some(window) => {
                let mult = cutoff_multipliers(setting, cutoff, delta)?;
                let k_top = mult.len().saturating_sub(1);
                // Pair sample (x, x + u delta) with u on a fixed scaled grid.
                let us = linspace(0.0, window, (4 * grid_n.max(16) / 3).max(32));
                let sups: Vec<Vec<f64>> = thetas
                    .par_iter()
                    .map(|&x| {
                        let bx = setting
                            .ortho_jacobi_all(k_top, x.cos())
                            .expect("within limit");
                        let mx = setting.ball_measure_theta(x, delta);
                        us.iter()
                            .map(|&u| {
                                let y = x + u * delta;
                                if y > PI {
                                    return 0.0;
                                }
                                let by = setting
                                    .ortho_jacobi_all(k_top, y.cos())
                                    .expect("within limit");
                                let mut acc = CompensatedSum::new();
                                for k in 0..=k_top {
                                    if mult[k] != 0.0 {
                                        acc.add(mult[k] * bx[k] * by[k]);
                                    }
                                }
                                let my = setting.ball_measure_theta(y, delta);
                                acc.value().abs() * (mx * my).sqrt()
                            })
                            .collect()
                    })
                    .collect();
                for &sigma in sigmas {
                    let mut worst: f64 = 0.0;
                    for row in &sups {
                        for (&u, &base) in us.iter().zip(row) {
                            worst = worst.max(base * (1.0 + u).powf(sigma));
                        }
                    }
                    rows.push(ProfileRow {
                        delta,
                        sigma,
                        constant: worst,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Multiplier sequence `cutoff(delta sqrt(lambda_k))`, trimmed at the cutoff
/// support; errors if the support exceeds the representable degree range.
fn cutoff_multipliers(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    delta: f64,
) -> Result<Vec<f64>> {
    let (_, hi) = cutoff.support();
    let k_top = setting.degree_for_band(hi / delta);
    if setting.sqrt_eigenvalue(k_top) * delta < hi && k_top == setting.max_degree() {
        return Err(Error::DegreeLimit {
            requested: k_top + 1,
            max: setting.max_degree(),
        });
    }
    Ok((0..=k_top)
        .map(|k| cutoff.eval(delta * setting.sqrt_eigenvalue(k)))
        .collect())
}

/// Kernel matrix of `cutoff(delta sqrt(L))` on a theta-grid together with
/// the ball measures `mu(B(x_i, delta))`.
fn kernel_grid(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    delta: f64,
    thetas: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mult = cutoff_multipliers(setting, cutoff, delta)?;
    let k_top = mult.len() - 1;
    let table: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&th| {
            setting
                .ortho_jacobi_all(k_top, th.cos())
                .expect("within limit")
        })
        .collect();
    let n = thetas.len();
    let kern: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = CompensatedSum::new();
                    for k in 0..=k_top {
                        if mult[k] != 0.0 {
                            acc.add(mult[k] * table[i][k] * table[j][k]);
                        }
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();
    let mus: Vec<f64> = thetas
        .iter()
        .map(|&th| setting.ball_measure_theta(th, delta))
        .collect();
    Ok((kern, mus))
}

/// Estimated smoothness exponent of `y -> K_delta(x, y)` at scale `delta`:
/// two-scale fit of the weighted finite differences, plus the realized
/// Lipschitz-profile constant at the base scale.
pub fn lipschitz_profile(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    delta: f64,
    sigma: f64,
    grid_n: usize,
) -> Result<(f64, f64)> {
    let thetas = linspace(0.0, PI, grid_n.max(64));
    let (kern, mus) = kernel_grid(setting, cutoff, delta, &thetas)?;
    let step = thetas[1] - thetas[0];
    let mut worst_c: f64 = 0.0;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    let n = thetas.len();
    for i in 0..n {
        for j in 0..n - 2 {
            let d1 = (kern[i][j + 1] - kern[i][j]).abs();
            let d2 = (kern[i][j + 2] - kern[i][j]).abs();
            let rho = (thetas[i] - thetas[j]).abs();
            let envelope =
                (mus[i] * mus[j]).sqrt().recip() * (1.0 + rho / delta).powf(-sigma);
            if envelope > 0.0 && d1 > 1e-13 {
                worst_c = worst_c.max(d1 / ((step / delta) * envelope));
            }
            if d1 > 1e-11 && d2 > 1e-11 && rho > 4.0 * step {
                num += (d2 / d1).ln();
                den += 2.0_f64.ln();
            }
        }
    }
    let exponent = if den > 0.0 { (num / den).clamp(0.0, 1.5) } else { 1.0 };
    Ok((exponent, worst_c))
}

/// Aggregated `L^p` norm ratios of kernel sections against the expected
/// scaling `mu(B(x, delta))^{1/p - 1}`.
#[derive(Clone, Copy, Debug)]
pub struct NormRow {
    pub p: f64,
    pub c_lo: f64,
    pub c_hi: f64,
}

/// Computes `||K_delta(x, .)||_p / mu(B(x,delta))^{1/p-1}` over a grid of
/// centers and reports the extreme ratios per `p`. Norms are evaluated by a
/// Gauss-Jacobi rule at four times the kernel band (`p = inf` on a dense
/// grid).
pub fn kernel_norms_check(
    setting: &JacobiSetting,
    cutoff: &CutoffSpec,
    delta: f64,
    ps: &[f64],
    n_centers: usize,
) -> Result<Vec<NormRow>> {
    let (_, hi) = cutoff.support();
    let k_top = setting.degree_for_band(hi / delta);
    let rule = setting.gauss_jacobi_rule(2 * (k_top + 1) + 8)?;
    let centers: Vec<f64> = (0..n_centers)
        .map(|i| PI * (i as f64 + 0.5) / n_centers as f64)
        .collect();
    let fine = linspace(0.0, PI, 2049);
    let mut rows = Vec::new();
    for &p in ps {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("p must be >= 1 (got {p})")));
        }
        let mut c_lo = f64::INFINITY;
        let mut c_hi: f64 = 0.0;
        for &th in &centers {
            let x = th.cos();
            let norm = if p.is_infinite() {
                fine.iter()
                    .map(|&t| {
                        kernel_eval(setting, cutoff, delta, x, t.cos(), setting.max_degree())
                            .expect("within limit")
                            .value
                            .abs()
                    })
                    .fold(0.0_f64, f64::max)
            } else {
                let px = setting.ortho_jacobi_all(k_top, x)?;
                let mult: Vec<f64> = (0..=k_top)
                    .map(|k| cutoff.eval(delta * setting.sqrt_eigenvalue(k)))
                    .collect();
                rule.integrate(|y| {
                    let py = setting.ortho_jacobi_all(k_top, y).expect("within limit");
                    let mut acc = CompensatedSum::new();
                    for k in 0..=k_top {
                        acc.add(mult[k] * px[k] * py[k]);
                    }
                    acc.value().abs().powf(p)
                })
                .powf(1.0 / p)
            };
            let scale = setting
                .ball_measure_theta(th, delta)
                .powf(1.0 / p - 1.0);
            let ratio = norm / scale;
            c_lo = c_lo.min(ratio);
            c_hi = c_hi.max(ratio);
        }
        rows.push(NormRow { p, c_lo, c_hi });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Spectral inequalities
// ---------------------------------------------------------------------------

/// Which classical inequality to measure on random band-limited functions.
#[derive(Clone, Copy, Debug)]
pub enum SpectralCheck {
    /// `||g||_q <= C lambda^{d(1/p - 1/q)} ||g||_p`, `q >= p`.
    Nikolski { p: f64, q: f64 },
    /// `||L^m g||_p <= C lambda^{2m} ||g||_p`.
    Bernstein { p: f64, m: u32 },
    /// `E_lambda(f)_p <= C lambda^{-2m} ||L^m f||_p` for smooth `f`.
    Jackson { p: f64, m: u32 },
}

/// Realized constant at one bandwidth.
#[derive(Clone, Copy, Debug)]
pub struct IneqRow {
    pub lambda: f64,
    pub constant: f64,
}

/// Measures the realized constants of the requested inequality over random
/// draws at each bandwidth; all randomness comes from the caller's `rng`.
pub fn verify_spectral_inequalities(
    setting: &JacobiSetting,
    check: SpectralCheck,
    lambdas: &[f64],
    draws: usize,
    rng: &mut impl Rng,
) -> Result<Vec<IneqRow>> {
    let d_est = setting.doubling_exponent();
    let mut rows = Vec::new();
    for &lam in lambdas {
        let n = setting.degree_for_band(lam);
        let rule = setting.gauss_jacobi_rule(2 * (n + 1) + 8)?;
        let fine = linspace(0.0, PI, 2049);
        let mut worst: f64 = 0.0;
        for _ in 0..draws.max(1) {
            let coeffs: Vec<f64> = (0..=n)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let g = SpectralVector::new(coeffs);
            let c = match check {
                SpectralCheck::Nikolski { p, q } => {
                    if q < p {
                        return Err(Error::Domain("Nikolski needs q >= p".into()));
                    }
                    let np = lp_norm_rule(setting, &g, p, &rule, &fine)?;
                    let nq = lp_norm_rule(setting, &g, q, &rule, &fine)?;
                    nq / (lam.powf(d_est * (1.0 / p - 1.0 / q)) * np)
                }
                SpectralCheck::Bernstein { p, m } => {
                    let lg = apply_spectral(setting, &g, |u| (u * u).powi(m as i32), 1.0);
                    let nl = lp_norm_rule(setting, &lg, p, &rule, &fine)?;
                    let ng = lp_norm_rule(setting, &g, p, &rule, &fine)?;
                    nl / (lam.powf(2.0 * m as f64) * ng)
                }
                SpectralCheck::Jackson { p, m } => {
                    // Smooth test function: heat-damped noise at scale 4/lam.
                    let f = apply_spectral(
                        setting,
                        &SpectralVector::new(
                            (0..=setting.degree_for_band(4.0 * lam))
                                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                                .collect(),
                        ),
                        |u| (-u * u).exp(),
                        2.0 / lam,
                    );
                    let big_rule = setting.gauss_jacobi_rule(2 * (f.degree() + 1) + 8)?;
                    let err = best_approx_error(setting, &f, lam, p, &big_rule, &fine)?;
                    let lmf = apply_spectral(setting, &f, |u| (u * u).powi(m as i32), 1.0);
                    let nl = lp_norm_rule(setting, &lmf, p, &big_rule, &fine)?;
                    if nl == 0.0 {
                        0.0
                    } else {
                        err * lam.powf(2.0 * m as f64) / nl
                    }
                }
            };
            worst = worst.max(c);
        }
        rows.push(IneqRow {
            lambda: lam,
            constant: worst,
        });
    }
    Ok(rows)
}

/// `L^p(mu)` norm of a spectral vector through a quadrature rule (`p = inf`
/// via the supplied theta-grid). The rule must integrate `|f|^p` adequately:
/// callers pass rules at several times the band.
pub fn lp_norm_rule(
    setting: &JacobiSetting,
    f: &SpectralVector,
    p: f64,
    rule: &crate::jacobi::GaussJacobiRule,
    fine_thetas: &[f64],
) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    if p.is_infinite() {
        let vals = f.eval_many(
            setting,
            &fine_thetas.iter().map(|t| t.cos()).collect::<Vec<_>>(),
        )?;
        return Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    if (p - 2.0).abs() < 1e-14 {
        return Ok(f.norm2());
    }
    let vals = f.eval_many(setting, rule.nodes())?;
    let mut acc = CompensatedSum::new();
    for (&w, &v) in rule.weights().iter().zip(&vals) {
        acc.add(w * v.abs().powf(p));
    }
    Ok(acc.value().powf(1.0 / p))
}

/// Error of best approximation from the band `sqrt(lambda_k) <= lam`:
/// exact tail norm for `p = 2`, plateau-damped surrogate otherwise.
pub fn best_approx_error(
    setting: &JacobiSetting,
    f: &SpectralVector,
    lam: f64,
    p: f64,
    rule: &crate::jacobi::GaussJacobiRule,
    fine_thetas: &[f64],
) -> Result<f64> {
    if (p - 2.0).abs() < 1e-14 {
        let n = setting.degree_for_band(lam);
        let mut acc = CompensatedSum::new();
        for (k, &c) in f.coeffs().iter().enumerate() {
            if k > n {
                acc.add(c * c);
            }
        }
        return Ok(acc.value().sqrt());
    }
    // || f - Phi(sqrt(L)/lam) f ||_p as a near-best surrogate.
    let mut tail = f.clone();
    for (k, c) in tail.coeffs_mut().iter_mut().enumerate() {
        let u = setting.sqrt_eigenvalue(k) / lam;
        *c *= 1.0 - plateau_value(u, 2.0);
    }
    tail.trim();
    lp_norm_rule(setting, &tail, p, rule, fine_thetas)
}

// ---------------------------------------------------------------------------
// Spectral dimension and approximate identity
// ---------------------------------------------------------------------------

/// One bandwidth row of the dimension comparison
/// `dim(band) ~ int mu(B(x, 1/lambda))^{-1} dmu(x)`.
#[derive(Clone, Copy, Debug)]
pub struct DimRow {
    pub lambda: f64,
    pub dim: usize,
    pub integral: f64,
    pub ratio: f64,
}

/// Compares the dimension of the band space with the measure-theoretic
/// integral for each bandwidth.
pub fn spectral_dim_check(setting: &JacobiSetting, lambdas: &[f64]) -> Result<Vec<DimRow>> {
    lambdas
        .iter()
        .map(|&lam| {
            if lam <= 0.0 {
                return Err(Error::Domain("lambda must be positive".into()));
            }
            let dim = setting.degree_for_band(lam) + 1;
            let integral = integrate_adaptive(
                |th| setting.theta_weight(th) / setting.ball_measure_theta(th, 1.0 / lam),
                0.0,
                PI,
                1e-10 * setting.total_mass(),
            );
            Ok(DimRow {
                lambda: lam,
                dim,
                integral,
                ratio: dim as f64 / integral,
            })
        })
        .collect()
}

/// `L^p` error of the approximate identity `Phi(delta sqrt(L)) f -> f` for a
/// pointwise-defined `f`, per `delta`. The function is projected onto the
/// band once per `delta`; errors include the projection discrepancy because
/// the difference is measured against the true point values.
pub fn approx_identity_check(
    setting: &JacobiSetting,
    plateau: &CutoffSpec,
    f: &dyn Fn(f64) -> f64,
    p: f64,
    deltas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let (_, hi) = plateau.support();
    let mut out = Vec::new();
    for &delta in deltas {
        if delta <= 0.0 {
            return Err(Error::Domain("delta must be positive".into()));
        }
        let k_top = setting.degree_for_band(hi / delta);
        let proj_rule = setting.gauss_jacobi_rule(k_top + 24)?;
        // Coefficients of the projection onto degrees <= k_top.
        let tables: Vec<Vec<f64>> = proj_rule
            .nodes()
            .par_iter()
            .map(|&x| setting.ortho_jacobi_all(k_top, x).expect("within limit"))
            .collect();
        let fvals: Vec<f64> = proj_rule.nodes().iter().map(|&x| f(x)).collect();
        let coeffs: Vec<f64> = (0..=k_top)
            .map(|k| {
                let mut acc = CompensatedSum::new();
                for ((w, t), fv) in proj_rule.weights().iter().zip(&tables).zip(&fvals) {
                    acc.add(w * t[k] * fv);
                }
                acc.value()
            })
            .collect();
        let damped: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| plateau.eval(delta * setting.sqrt_eigenvalue(k)) * c)
            .collect();
        let err = if p.is_infinite() {
            let fine = linspace(0.0, PI, 2049);
            fine.iter()
                .map(|&th| {
                    let x = th.cos();
                    let basis = setting.ortho_jacobi_all(k_top, x).expect("within limit");
                    let mut acc = CompensatedSum::new();
                    for (d, b) in damped.iter().zip(&basis) {
                        acc.add(d * b);
                    }
                    (acc.value() - f(x)).abs()
                })
                .fold(0.0_f64, f64::max)
        } else {
            let mut acc = CompensatedSum::new();
            for (i, (&w, t)) in proj_rule.weights().iter().zip(&tables).enumerate() {
                let mut v = CompensatedSum::new();
                for (d, b) in damped.iter().zip(t) {
                    v.add(d * b);
                }
                acc.add(w * (v.value() - fvals[i]).abs().powf(p));
            }
            acc.value().powf(1.0 / p)
        };
        out.push((delta, err));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn legendre() -> JacobiSetting {
        JacobiSetting::with_max_degree(0.0, 0.0, 1024).unwrap()
    }

    #[test]
    fn plateau_matches_reference_values() {
        // Frozen from an independent evaluation of the same closed form.
        let phi = make_cutoff(CutoffKind::Plateau, 2.0, None).unwrap();
        assert_relative_eq!(phi.eval(1.25), 9.35030830871335983e-01, max_relative = 1e-14);
        assert_relative_eq!(phi.eval(1.5), 0.5, max_relative = 1e-14);
        assert_relative_eq!(phi.eval(1.75), 6.49691691286640588e-02, max_relative = 1e-14);
        assert_eq!(phi.eval(0.3), 1.0);
        assert_eq!(phi.eval(2.0), 0.0);
        assert_eq!(phi.eval(5.0), 0.0);
    }

    #[test]
    fn band_cutoff_positive_on_central_interval() {
        let psi = make_cutoff(CutoffKind::Band, 2.0, None).unwrap();
        // min over [2^{-3/4}, 2^{3/4}] frozen from a 20001-point scan.
        let grid = linspace(2.0_f64.powf(-0.75), 2.0_f64.powf(0.75), 20001);
        let min = grid
            .iter()
            .map(|&u| psi.eval(u))
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, 1.70928752973436016e-02, max_relative = 1e-10);
        assert_eq!(psi.eval(0.49), 0.0);
        assert_eq!(psi.eval(2.01), 0.0);
    }

    #[test]
    fn lp_partition_sums_to_one() {
        let lp = LPSystem::new(2.0, LPFlavor::Partition).unwrap();
        for &u in &[0.0, 0.3, 1.0, 1.7, 2.0, 3.5, 8.0, 31.9, 60.0] {
            let s: f64 = (0..=8).map(|j| lp.psi(j, u)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
            let sq = lp.square_sum(u);
            assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&sq), "sq = {sq} at u = {u}");
            let dual: f64 = (0..=8).map(|j| lp.psi(j, u) * lp.psi_dual(j, u)).sum();
            assert_abs_diff_eq!(dual, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sqrt_partition_squares_to_one() {
        let lp = LPSystem::new(2.0, LPFlavor::SqrtPartition).unwrap();
        for &u in &[0.0, 0.9, 1.4, 2.0, 5.3, 16.0, 50.0] {
            let s: f64 = (0..=8).map(|j| lp.psi(j, u).powi(2)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-13);
            for j in 0..=8 {
                assert_eq!(lp.psi(j, u), lp.psi_dual(j, u));
            }
        }
    }

    #[test]
    fn heat_kernel_matches_extended_precision_reference() {
        // Frozen from a 50-digit evaluation of the eigenfunction series.
        let cases: [(f64, f64, f64, f64, f64, f64); 4] = [
            (0.0, 0.0, 0.1, 0.2, -0.4, 3.87789151472655580e-01),
            (0.0, 0.0, 0.01, 0.9, 0.85, 4.55974406182195580e+00),
            (0.5, 0.5, 0.05, 0.1, 0.3, 1.13358102051038201e+00),
            (-0.3, 0.7, 0.1, -0.5, 0.6, 3.73104063197928632e-02),
        ];
        for &(a, b, t, x, y, want) in &cases {
            let s = JacobiSetting::with_max_degree(a, b, 1024).unwrap();
            let got = heat_kernel(&s, t, x, y, 1e-12).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn heat_kernel_symmetry_and_semigroup() {
        let s = legendre();
        let p1 = heat_kernel(&s, 0.07, 0.3, -0.6, 1e-12).unwrap();
        let p2 = heat_kernel(&s, 0.07, -0.6, 0.3, 1e-12).unwrap();
        assert_relative_eq!(p1, p2, max_relative = 1e-12);
        // p_{2t}(x,y) = int p_t(x,z) p_t(z,y) dmu(z).
        let (t, x, y) = (0.05, 0.2, 0.5);
        let rule = s.gauss_jacobi_rule(96).unwrap();
        let composed = rule.integrate(|z| {
            heat_kernel(&s, t, x, z, 1e-13).unwrap() * heat_kernel(&s, t, z, y, 1e-13).unwrap()
        });
        let direct = heat_kernel(&s, 2.0 * t, x, y, 1e-13).unwrap();
        assert_relative_eq!(composed, direct, max_relative = 1e-10);
    }

    #[test]
    fn heat_kernel_rejects_unreachable_tolerance() {
        let s = JacobiSetting::with_max_degree(0.0, 0.0, 64).unwrap();
        // t so small that degree 64 cannot certify a 1e-12 tail.
        assert!(matches!(
            heat_kernel(&s, 1e-6, 0.1, 0.2, 1e-12),
            Err(Error::TailTolerance { .. })
        ));
    }

    #[test]
    fn markov_property_holds_to_high_accuracy() {
        for &(a, b) in &[(0.0, 0.0), (0.5, 0.5), (-0.3, 0.7)] {
            let s = JacobiSetting::with_max_degree(a, b, 1024).unwrap();
            let worst = verify_markov(&s, &[0.01, 0.1, 0.5, 1.0], 9, 1e-12).unwrap();
            assert!(worst < 1e-10, "markov deviation {worst} for ({a}, {b})");
        }
    }

    #[test]
    fn kernel_eval_reports_completeness() {
        let s = JacobiSetting::with_max_degree(0.0, 0.0, 2048).unwrap();
        let phi = make_cutoff(CutoffKind::Plateau, 2.0, None).unwrap();
        let full = kernel_eval(&s, &phi, 1.0 / 16.0, 0.3, 0.4, 2048).unwrap();
        assert!(full.complete);
        let cut = kernel_eval(&s, &phi, 1.0 / 16.0, 0.3, 0.4, 10).unwrap();
        assert!(!cut.complete);
        assert!((full.value - cut.value).abs() > 1e-6);
    }

    #[test]
    fn gaussian_fit_reasonable_for_legendre() {
        let s = legendre();
        let fit = gaussian_bound_fit(&s, &[0.02, 0.05, 0.1, 0.3], 24).unwrap();
        assert!(fit.c1 > 0.0 && fit.c1.is_finite());
        assert!(fit.c1_prime > 0.0 && fit.c2_prime >= fit.c1_prime);
        assert!(fit.holder_exponent_est > 0.5 && fit.holder_exponent_est <= 1.0);
    }

    #[test]
    fn spectral_dim_integral_matches_reference() {
        // Frozen from an independent quadrature of the closed-form measure.
        let s = legendre();
        let rows = spectral_dim_check(&s, &[10.0, 32.0]).unwrap();
        assert_relative_eq!(rows[0].integral, 1.55062320755980299e+01, max_relative = 1e-8);
        assert_relative_eq!(rows[1].integral, 5.00462016547599120e+01, max_relative = 1e-8);
        assert_eq!(rows[0].dim, 10);
        assert_eq!(rows[1].dim, 32);
    }

    #[test]
    fn nikolski_and_bernstein_constants_are_bounded() {
        let s = legendre();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows = verify_spectral_inequalities(
            &s,
            SpectralCheck::Nikolski {
                p: 2.0,
                q: f64::INFINITY,
            },
            &[8.0, 32.0],
            12,
            &mut rng,
        )
        .unwrap();
        for r in &rows {
            assert!(r.constant.is_finite() && r.constant > 0.0 && r.constant < 10.0);
        }
        let rows = verify_spectral_inequalities(
            &s,
            SpectralCheck::Bernstein { p: 2.0, m: 1 },
            &[8.0, 32.0],
            12,
            &mut rng,
        )
        .unwrap();
        for r in &rows {
            // lambda^{2m} dominates L^m exactly on the band, so C <= 1.
            assert!(r.constant > 0.0 && r.constant <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn approx_identity_error_decays() {
        let s = legendre();
        let phi = make_cutoff(CutoffKind::Plateau, 2.0, None).unwrap();
        let rows =
            approx_identity_check(&s, &phi, &|x| (3.0 * x).sin(), 2.0, &[0.5, 0.125, 1.0 / 32.0])
                .unwrap();
        assert!(rows[0].1 > rows[2].1);
        assert!(rows[2].1 < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Multiplier application composes multiplicatively.
        #[test]
        fn apply_spectral_composes(seed in 0u64..1000) {
            let s = JacobiSetting::with_max_degree(0.5, 0.5, 64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = SpectralVector::new((0..33).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect());
            let m1 = |u: f64| (-u).exp();
            let m2 = |u: f64| 1.0 / (1.0 + u * u);
            let once = apply_spectral(&s, &f, |u| m1(u) * m2(u), 0.3);
            let twice = apply_spectral(&s, &apply_spectral(&s, &f, m1, 0.3), m2, 0.3);
            for (a, b) in once.coeffs().iter().zip(twice.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
            }
        }

        /// Parseval: the coefficient norm equals the quadrature L2 norm.
        #[test]
        fn parseval_under_quadrature(seed in 0u64..1000) {
            let s = JacobiSetting::with_max_degree(-0.3, 0.7, 64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = SpectralVector::new((0..25).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect());
            let rule = s.gauss_jacobi_rule(40).unwrap();
            let vals = f.eval_many(&s, rule.nodes()).unwrap();
            let mut acc = 0.0;
            for (w, v) in rule.weights().iter().zip(&vals) {
                acc += w * v * v;
            }
            prop_assert!((acc.sqrt() - f.norm2()).abs() < 1e-10 * (1.0 + f.norm2()));
        }
    }
}
