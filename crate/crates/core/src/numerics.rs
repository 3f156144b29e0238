//! Small numerical kernels shared by the field, lagrange and reconstruct modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Finite-difference weights for derivatives `0..=max_order` at `x0` from
/// arbitrary distinct `nodes` (Fornberg's recursion).
///
/// `w[k][i]` is the weight of `f(nodes[i])` in the `k`-th derivative.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let m = max_order;
    let mut c = vec![vec![vec![0.0; n]; n]; m + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i][i] = c1 * (k as f64 * c[k - 1][i - 1][i - 1] - c5 * c[k][i - 1][i - 1]) / c2;
                }
                c[0][i][i] = -c1 * c5 * c[0][i - 1][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][i][j] = (c4 * c[k][i - 1][j] - k as f64 * c[k - 1][i - 1][j]) / c3;
            }
            c[0][i][j] = c4 * c[0][i - 1][j] / c3;
        }
        c1 = c2;
    }
    (0..=m).map(|k| (0..n).map(|j| c[k][n - 1][j]).collect()).collect()
}

/// Index range of the `width` nodes nearest to `x` in ascending `nodes`.
pub fn nearest_window(nodes: &[f64], x: f64, width: usize) -> std::ops::Range<usize> {
    let n = nodes.len();
    let width = width.min(n);
    let i = nodes.partition_point(|&v| v < x);
    let lo = i.saturating_sub(width).min(n - width);
    let hi = i.min(n - width);
    let spread = |s: usize| (x - nodes[s]).abs().max((nodes[s + width - 1] - x).abs());
    let start = (lo..=hi)
        .min_by(|&a, &b| spread(a).total_cmp(&spread(b)))
        .unwrap_or(lo);
    start..start + width
}

/// Not-a-knot cubic spline on fixed nodes, expressed as linear weights on the
/// nodal values so one factorization serves every data line.
#[derive(Debug, Clone)]
pub struct SplineAxis {
    nodes: Vec<f64>,
    /// Second derivatives `M = k * y`.
    k: DMatrix<f64>,
}

impl SplineAxis {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 4 {
            return Err(Error::InvalidGrid(format!("spline axis needs >= 4 nodes, got {n}")));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("spline nodes must be strictly increasing".into()));
        }
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        // a * M = b * y
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, n);
        // not-a-knot: continuous third derivative at nodes 1 and n-2
        a[(0, 0)] = h[1];
        a[(0, 1)] = -(h[0] + h[1]);
        a[(0, 2)] = h[0];
        a[(n - 1, n - 3)] = h[n - 2];
        a[(n - 1, n - 2)] = -(h[n - 3] + h[n - 2]);
        a[(n - 1, n - 1)] = h[n - 3];
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1];
            a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            a[(i, i + 1)] = h[i];
            b[(i, i - 1)] = 6.0 / h[i - 1];
            b[(i, i)] = -6.0 / h[i - 1] - 6.0 / h[i];
            b[(i, i + 1)] = 6.0 / h[i];
        }
        let lu = a.lu();
        let k = lu
            .solve(&b)
            .ok_or_else(|| Error::InvalidGrid("singular spline system".into()))?;
        Ok(Self { nodes, k })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * (self.nodes[self.nodes.len() - 1] - self.nodes[0]);
        x >= self.nodes[0] - tol && x <= self.nodes[self.nodes.len() - 1] + tol
    }

    /// Weights `w` with `S^(order)(x) = sum_j w[j] y[j]`, for `order <= 2`.
    pub fn weights(&self, x: f64, order: u32) -> Vec<f64> {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.nodes[i + 1] - self.nodes[i];
        let a = (self.nodes[i + 1] - x) / h;
        let b = 1.0 - a;
        let (wy0, wy1, wm0, wm1) = match order {
            0 => (a, b, (a * a * a - a) * h * h / 6.0, (b * b * b - b) * h * h / 6.0),
            1 => (-1.0 / h, 1.0 / h, -(3.0 * a * a - 1.0) * h / 6.0, (3.0 * b * b - 1.0) * h / 6.0),
            2 => (0.0, 0.0, a, b),
            _ => panic!("spline derivative order {order} not supported"),
        };
        let mut w: Vec<f64> = (0..n).map(|j| wm0 * self.k[(i, j)] + wm1 * self.k[(i + 1, j)]).collect();
        w[i] += wy0;
        w[i + 1] += wy1;
        w
    }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let whole = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (k, g) = gk15(&mut f, lo, hi)?;
        let err = (k - g).abs();
        let allowed = tol.max(f64::EPSILON * k.abs()) * ((hi - lo).abs() / whole).max(1e-3);
        if err <= allowed || depth >= 40 {
            total += k;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// One Gauss-Kronrod 15-point panel: `(kronrod, gauss)` estimates.
#[allow(clippy::excessive_precision)]
pub fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
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
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += WK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * hw, g * hw))
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for increasing `f`, by bisection
/// with Newton acceleration. `df` supplies the derivative.
pub fn monotone_root<F, D>(f: F, df: D, target: f64, mut lo: f64, mut hi: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let flo = f(lo)? - target;
    let fhi = f(hi)? - target;
    if flo > ftol || fhi < -ftol {
        return Err(Error::NonMonotone(target));
    }
    if flo.abs() <= ftol {
        return Ok(lo);
    }
    if fhi.abs() <= ftol {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x)? - target;
        if fx.abs() <= ftol || (hi - lo) <= xtol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x)?;
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_polynomial_derivatives() {
        let nodes = [0.0, 0.01, 0.04, 0.09, 0.16];
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x + 0.5 * x.powi(4);
        let vals: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        let x0 = 0.05;
        let w = fornberg_weights(x0, &nodes, 3);
        let d: Vec<f64> = w.iter().map(|wk| wk.iter().zip(&vals).map(|(a, b)| a * b).sum()).collect();
        assert!((d[0] - f(x0)).abs() < 1e-13);
        assert!((d[1] - (2.0 - 6.0 * x0 + 2.0 * x0.powi(3))).abs() < 1e-10);
        assert!((d[2] - (-6.0 + 6.0 * x0 * x0)).abs() < 1e-8);
        assert!((d[3] - 12.0 * x0).abs() < 1e-5);
    }

    #[test]
    fn window_selection() {
        let nodes: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(nearest_window(&nodes, -1.0, 5), 0..5);
        assert_eq!(nearest_window(&nodes, 4.2, 5), 2..7);
        assert_eq!(nearest_window(&nodes, 100.0, 5), 5..10);
        assert_eq!(nearest_window(&nodes, 4.6, 4), 3..7);
        assert_eq!(nearest_window(&nodes[..3], 1.0, 5), 0..3);
    }

    #[test]
    fn not_a_knot_spline_is_exact_for_cubics() {
        let nodes = vec![0.0, 0.3, 0.5, 1.1, 1.6, 2.0];
        let f = |x: f64| 1.0 - x + 2.0 * x * x - 0.7 * x * x * x;
        let y: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        let s = SplineAxis::new(nodes).unwrap();
        for &x in &[0.1, 0.77, 1.9] {
            let v: f64 = s.weights(x, 0).iter().zip(&y).map(|(a, b)| a * b).sum();
            let d: f64 = s.weights(x, 1).iter().zip(&y).map(|(a, b)| a * b).sum();
            let dd: f64 = s.weights(x, 2).iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!((v - f(x)).abs() < 1e-12);
            assert!((d - (-1.0 + 4.0 * x - 2.1 * x * x)).abs() < 1e-11);
            assert!((dd - (4.0 - 4.2 * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn spline_rejects_short_or_unsorted_axes() {
        assert!(SplineAxis::new(vec![0.0, 1.0, 2.0]).is_err());
        assert!(SplineAxis::new(vec![0.0, 1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn gauss_kronrod_integrates_smooth_functions() {
        let v = integrate(|x| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate(|x| Ok((1.0 - x * x).powi(2) * 2.0 * x), 0.0, 1.0, 1e-14).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_root_finds_inverse() {
        let x = monotone_root(|x| Ok(x * x * x + x), |x| Ok(3.0 * x * x + 1.0), 10.0, 0.0, 5.0, 1e-15, 1e-13).unwrap();
        assert!((x - 2.0).abs() < 1e-12);
        assert!(monotone_root(Ok, |_| Ok(1.0), 10.0, 0.0, 5.0, 1e-15, 1e-13).is_err());
    }
}
