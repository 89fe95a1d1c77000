//! Quadrature backends: adaptive Gauss-Kronrod integration on intervals and
//! Gauss-Jacobi rules obtained from the spectral decomposition of the
//! three-term recurrence (Golub-Welsch).

use crate::error::{Error, Result};
use crate::util::CompensatedSum;

/// 15-point Kronrod abscissae (positive half), embedding the 7-point Gauss rule
/// at indices 1, 3, 5 and the midpoint.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7-15 panel; returns the Kronrod value and the
/// |Kronrod - Gauss| error estimate.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for i in 0..7 {
        let dx = XGK[i] * h;
        let fv = f(c - dx) + f(c + dx);
        resk += WGK[i] * fv;
        if i % 2 == 1 {
            resg += WG[i / 2] * fv;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

fn adaptive_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth >= 48 || (b - a) <= 1e-15 * (a.abs() + b.abs() + 1.0) {
        return v;
    }
    let c = 0.5 * (a + b);
    adaptive_rec(f, a, c, 0.5 * tol, depth + 1) + adaptive_rec(f, c, b, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by bisecting panels
/// depth-first. Deterministic: the panel tree depends only on `(f, a, b, tol)`.
/// Endpoints are never evaluated, so integrable endpoint singularities
/// (e.g. the Jacobi theta-weight with negative parameters) are handled.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    adaptive_rec(&f, a, b, tol.max(1e-300), 0)
}

/// A Gauss-Jacobi quadrature rule: nodes in `(-1, 1)` ascending and positive
/// weights, exact for polynomials of degree `2n - 1` against the Jacobi weight.
#[derive(Clone, Debug)]
pub struct GaussJacobiRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobiRule {
    /// Builds the `n`-point rule for parameters `alpha, beta > -1` with total
    /// weight mass `mu0`. Nodes and weights come from the symmetric
    /// tridiagonal eigenproblem of the orthonormal recurrence.
    pub fn new(alpha: f64, beta: f64, mu0: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("quadrature rule needs at least one node".into()));
        }
        let mut diag = Vec::with_capacity(n);
        let mut off = vec![0.0; n];
        for k in 0..n {
            diag.push(recurrence_a(alpha, beta, k));
            if k >= 1 {
                off[k - 1] = recurrence_c(alpha, beta, k).sqrt();
            }
        }
        let mut first = vec![0.0; n];
        first[0] = 1.0;
        tridiag_ql(&mut diag, &mut off, &mut first)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
        let nodes: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let weights: Vec<f64> = order.iter().map(|&i| mu0 * first[i] * first[i]).collect();

        for (&x, &w) in nodes.iter().zip(&weights) {
            if !(-1.0..=1.0).contains(&x) || w <= 0.0 || !w.is_finite() {
                return Err(Error::LinearAlgebra(format!(
                    "invalid Gauss-Jacobi pair (node {x}, weight {w})"
                )));
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree_exact(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    /// Integrates `f` against the Jacobi measure, summing in node order with
    /// compensation.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Diagonal entry `a_k` of the orthonormal Jacobi recurrence (the mean of `x`
/// under the degree-`k` step).
pub(crate) fn recurrence_a(alpha: f64, beta: f64, k: usize) -> f64 {
    let (a, b) = (alpha, beta);
    if k == 0 {
        (b - a) / (a + b + 2.0)
    } else {
        let two_k = 2.0 * k as f64;
        (b * b - a * a) / ((two_k + a + b) * (two_k + a + b + 2.0))
    }
}

/// Off-diagonal entry `c_k` (squared) of the orthonormal Jacobi recurrence,
/// `k >= 1`. All denominators are nonzero for `alpha, beta > -1`.
pub(crate) fn recurrence_c(alpha: f64, beta: f64, k: usize) -> f64 {
    let (a, b) = (alpha, beta);
    if k == 1 {
        4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
    } else {
        let kf = k as f64;
        let two_k = 2.0 * kf;
        4.0 * kf * (kf + a) * (kf + b) * (kf + a + b)
            / ((two_k + a + b).powi(2) * (two_k + a + b + 1.0) * (two_k + a + b - 1.0))
    }
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix,
/// accumulating only the first row of the eigenvector matrix (all that
/// Golub-Welsch needs). `d` holds the diagonal, `e[i]` the coupling between
/// rows `i` and `i + 1`, and `z` the first-component row (initialized to e_0).
fn tridiag_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::LinearAlgebra(
                    "tridiagonal QL failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation annihilated early; restart the sweep.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
