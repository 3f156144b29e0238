//! Dormand-Prince 5(4) integrator with continuous output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed `|h|`; `None` means the full span.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_max: None, max_steps: 200_000 }
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = Some(h);
        self
    }
}

/// Continuous-output coefficients for one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<const N: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    /// Fourth-order interpolant at `x` within the step.
    pub fn eval(&self, x: f64) -> [f64; N] {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }
}

/// Result of an integration: step endpoints plus dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub segments: Vec<Segment<N>>,
    /// Set when integration stopped early at a domain boundary.
    pub stopped_at: Option<f64>,
}

impl<const N: usize> Solution<N> {
    pub fn x_first(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_last(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn forward(&self) -> bool {
        self.x_last() >= self.x_first()
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = (self.x_first().min(self.x_last()), self.x_first().max(self.x_last()));
        x >= a && x <= b
    }

    /// Index of the step whose interval holds `x`.
    pub fn segment_index(&self, x: f64) -> Option<usize> {
        if !self.contains(x) || self.segments.is_empty() {
            return None;
        }
        let i = if self.forward() {
            self.xs.partition_point(|&v| v <= x)
        } else {
            self.xs.partition_point(|&v| v >= x)
        };
        Some(i.saturating_sub(1).min(self.segments.len() - 1))
    }

    pub fn eval(&self, x: f64) -> Option<[f64; N]> {
        if self.segments.is_empty() {
            return (x == self.xs[0]).then(|| self.ys[0]);
        }
        self.segment_index(x).map(|i| self.segments[i].eval(x))
    }
}

fn is_domain_error(e: &Error) -> bool {
    matches!(e, Error::OutOfDomain { .. } | Error::NegativeRadius(_))
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

struct Stages<const N: usize> {
    k: [[f64; N]; 7],
    y1: [f64; N],
}

fn stages<const N: usize, F>(f: &mut F, x: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Result<Stages<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(x + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(x + h, &y1)?;
    Ok(Stages { k: [*k1, k2, k3, k4, k5, k6, k7], y1 })
}

/// One fixed Dormand-Prince step without error control.
pub fn dopri5_step<const N: usize, F>(f: &mut F, x: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k1 = f(x, y)?;
    Ok(stages(f, x, y, &k1, h)?.y1)
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (either direction).
///
/// Domain errors raised by `f` shrink the step; if the step underflows while
/// the domain is being left, the partial solution is returned with
/// `stopped_at` set. Any other error from `f` is returned immediately.
pub fn dopri5<const N: usize, F>(mut f: F, x0: f64, y0: [f64; N], x_end: f64, opts: &OdeOptions) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut sol = Solution { xs: vec![x0], ys: vec![y0], segments: Vec::new(), stopped_at: None };
    let span = x_end - x0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let h_max = opts.h_max.unwrap_or(span.abs()).min(span.abs());
    let h_min = 1e-14 * x0.abs().max(x_end.abs()).max(span.abs());

    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y)?;
    let mut h = initial_step(&y, &k1, opts, h_max, span.abs()) * dir;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected_domain = false;

    for _ in 0..opts.max_steps {
        if (x_end - x) * dir <= h_min {
            break;
        }
        if (x + h - x_end) * dir > 0.0 {
            h = x_end - x;
        }
        match stages(&mut f, x, &y, &k1, h) {
            Err(e) if is_domain_error(&e) => {
                if h.abs() <= h_min {
                    sol.stopped_at = Some(x);
                    return Ok(sol);
                }
                h *= 0.25;
                last_rejected_domain = true;
                continue;
            }
            Err(e) => return Err(e),
            Ok(st) => {
                let err = error_norm(&y, &st, h, opts);
                if err <= 1.0 {
                    let k = &st.k;
                    let y1 = st.y1;
                    let mut rcont = [[0.0; N]; 5];
                    for i in 0..N {
                        let dy = y1[i] - y[i];
                        let bspl = h * k[0][i] - dy;
                        rcont[0][i] = y[i];
                        rcont[1][i] = dy;
                        rcont[2][i] = bspl;
                        rcont[3][i] = dy - h * k[6][i] - bspl;
                        rcont[4][i] = h
                            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                    }
                    sol.segments.push(Segment { x0: x, h, rcont });
                    x += h;
                    if (x_end - x) * dir <= h_min {
                        x = x_end;
                    }
                    y = y1;
                    k1 = k[6];
                    sol.xs.push(x);
                    sol.ys.push(y);
                    // PI step-size controller
                    let fac11 = err.max(1e-10).powf(0.17);
                    let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
                    fac_old = err.max(1e-4);
                    let mut h_new = (h.abs() / fac).min(h_max);
                    if last_rejected_domain {
                        h_new = h_new.min(h.abs());
                    }
                    last_rejected_domain = false;
                    h = h_new * dir;
                } else {
                    let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                    h *= fac;
                    if h.abs() <= h_min {
                        return Err(Error::StiffnessFailure { x });
                    }
                }
            }
        }
    }
    if (x_end - x) * dir > h_min {
        return Err(Error::StiffnessFailure { x });
    }
    Ok(sol)
}

fn error_norm<const N: usize>(y: &[f64; N], st: &Stages<N>, h: f64, opts: &OdeOptions) -> f64 {
    let k = &st.k;
    let mut acc = 0.0;
    for i in 0..N {
        let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(st.y1[i].abs());
        acc += (e / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize>(y: &[f64; N], f0: &[f64; N], opts: &OdeOptions, h_max: f64, span: f64) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        dnf += (f0[i] / sc).powi(2);
        dny += (y[i] / sc).powi(2);
    }
    let h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 * span.max(1.0) } else { 0.01 * (dny / dnf).sqrt() };
    // fifth root of the tolerance ratio keeps the first step conservative
    let h = h.min(span * opts.rtol.max(1e-16).powf(0.2));
    h.min(h_max).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_and_dense_output() {
        let sol = dopri5(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, &OdeOptions::with_tol(1e-12)).unwrap();
        assert_eq!(sol.x_last(), 2.0);
        assert!((sol.ys.last().unwrap()[0] - 2f64.exp()).abs() < 1e-10);
        for k in 0..=40 {
            let x = 0.05 * k as f64;
            let y = sol.eval(x).unwrap()[0];
            assert!((y - x.exp()).abs() < 1e-9 * x.exp(), "{x}");
        }
        assert!(sol.eval(2.1).is_none());
    }

    #[test]
    fn backward_integration() {
        let sol =
            dopri5(|x, _y: &[f64; 2]| Ok([x.cos(), -x.sin()]), 1.0, [1f64.sin(), 1f64.cos()], -1.0, &OdeOptions::with_tol(1e-11))
                .unwrap();
        let y = sol.ys.last().unwrap();
        assert!((y[0] - (-1f64).sin()).abs() < 1e-9);
        assert!((y[1] - (-1f64).cos()).abs() < 1e-9);
        let mid = sol.eval(0.3).unwrap();
        assert!((mid[0] - 0.3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn stops_at_domain_boundary() {
        // y' = 1 with the domain y < 0.5
        let sol = dopri5(
            |_, y: &[f64; 1]| if y[0] > 0.5 { Err(Error::OutOfDomain { r: y[0], z: 0.0, t: 0.0 }) } else { Ok([1.0]) },
            0.0,
            [0.0],
            1.0,
            &OdeOptions::with_tol(1e-10),
        )
        .unwrap();
        let stop = sol.stopped_at.unwrap();
        assert!((stop - 0.5).abs() < 1e-6, "{stop}");
    }

    #[test]
    fn other_errors_propagate() {
        let r = dopri5(
            |x, _: &[f64; 1]| if x > 0.3 { Err(Error::NotUnilateral { r: 0.0, z: 0.0, t: x, v_z: 0.0 }) } else { Ok([1.0]) },
            0.0,
            [0.0],
            1.0,
            &OdeOptions::with_tol(1e-8),
        );
        assert!(matches!(r, Err(Error::NotUnilateral { .. })));
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let err = |h: f64| {
            let y = dopri5_step(&mut |_, y: &[f64; 1]| Ok([-y[0]]), 0.0, &[1.0], h).unwrap();
            (y[0] - (-h).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 50.0 && ratio < 80.0, "{ratio}");
    }
}
