//! Gridded velocity fields: tensor-product cubic splines in `(r, z)`, cubic in `t`.

use std::fmt::Write as _;
use std::path::Path;

use super::{check_radius, CylVec, FieldJet, FlowField};
use crate::error::{Error, Result};
use crate::numerics::{fornberg_weights, nearest_window, SplineAxis};

pub const GRID_HEADER: [&str; 6] = ["r", "z", "t", "v_r", "v_theta", "v_z"];

/// Velocity samples on a full `(r, z, t)` tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub r_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    /// Indexed `[(k * nz + j) * nr + i]` for `(t_k, z_j, r_i)`.
    pub values: Vec<CylVec>,
}

impl GridData {
    pub fn from_fn<F: Fn(f64, f64, f64) -> CylVec>(
        r_nodes: Vec<f64>,
        z_nodes: Vec<f64>,
        t_nodes: Vec<f64>,
        f: F,
    ) -> Self {
        let mut values = Vec::with_capacity(r_nodes.len() * z_nodes.len() * t_nodes.len());
        for &t in &t_nodes {
            for &z in &z_nodes {
                for &r in &r_nodes {
                    values.push(f(r, z, t));
                }
            }
        }
        Self { r_nodes, z_nodes, t_nodes, values }
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.z_nodes.len() + j) * self.r_nodes.len() + i
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("r", &self.r_nodes), ("z", &self.z_nodes), ("t", &self.t_nodes)] {
            if axis.len() < 4 {
                return Err(Error::InvalidGrid(format!("{name} axis has {} nodes, need >= 4", axis.len())));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidGrid(format!("{name} nodes are not strictly increasing")));
            }
        }
        if self.r_nodes[0] < 0.0 {
            return Err(Error::InvalidGrid("negative radius node".into()));
        }
        let n = self.r_nodes.len() * self.z_nodes.len() * self.t_nodes.len();
        if self.values.len() != n {
            return Err(Error::InvalidGrid(format!("expected {n} samples, got {}", self.values.len())));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite velocity sample".into()));
        }
        if self.r_nodes[0] == 0.0 {
            let scale = self.values.iter().map(CylVec::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for k in 0..self.t_nodes.len() {
                for j in 0..self.z_nodes.len() {
                    let v = self.values[self.index(0, j, k)];
                    if v.v_r.abs() > 1e-12 * scale || v.v_theta.abs() > 1e-12 * scale {
                        return Err(Error::InvalidGrid(format!(
                            "axis parity violated at z={}, t={}: v_r={}, v_theta={}",
                            self.z_nodes[j], self.t_nodes[k], v.v_r, v.v_theta
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the columnar text format: header `r z t v_r v_theta v_z`, one
    /// whitespace-separated row per node, ordered with `r` fastest, then `z`, then `t`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| Error::InvalidGrid("empty grid file".into()))?.split_whitespace().collect();
        if header != GRID_HEADER {
            return Err(Error::InvalidGrid(format!("bad header {header:?}, expected {GRID_HEADER:?}")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidGrid(format!("row {}: {e}", n + 1))))
                .collect::<Result<_>>()?;
            if nums.len() != 6 {
                return Err(Error::InvalidGrid(format!("row {} has {} columns, expected 6", n + 1, nums.len())));
            }
            rows.push(nums);
        }
        if rows.is_empty() {
            return Err(Error::InvalidGrid("no data rows".into()));
        }
        // r varies fastest: the r axis is the prefix before r first fails to increase
        let nr = rows.iter().skip(1).position(|row| row[0] <= rows[0][0]).map_or(rows.len(), |p| p + 1);
        let r_nodes: Vec<f64> = rows[..nr].iter().map(|row| row[0]).collect();
        let nz = rows.iter().step_by(nr).skip(1).position(|row| row[1] <= rows[0][1]).map_or(rows.len() / nr, |p| p + 1);
        let z_nodes: Vec<f64> = rows.iter().step_by(nr).take(nz).map(|row| row[1]).collect();
        let t_nodes: Vec<f64> = rows.iter().step_by(nr * nz).map(|row| row[2]).collect();
        if rows.len() != nr * nz * t_nodes.len() {
            return Err(Error::InvalidGrid("rows do not form a full (t, z, r) tensor grid".into()));
        }
        let mut values = Vec::with_capacity(rows.len());
        for (n, row) in rows.iter().enumerate() {
            let (i, j, k) = (n % nr, (n / nr) % nz, n / (nr * nz));
            if row[0] != r_nodes[i] || row[1] != z_nodes[j] || row[2] != t_nodes[k] {
                return Err(Error::InvalidGrid(format!("row {} breaks the (t, z, r) row-major layout", n + 1)));
            }
            values.push(CylVec::new(row[3], row[4], row[5]));
        }
        let grid = Self { r_nodes, z_nodes, t_nodes, values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidGrid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = GRID_HEADER.join(" ");
        out.push('\n');
        for (k, &t) in self.t_nodes.iter().enumerate() {
            for (j, &z) in self.z_nodes.iter().enumerate() {
                for (i, &r) in self.r_nodes.iter().enumerate() {
                    let v = self.values[self.index(i, j, k)];
                    let _ = writeln!(out, "{r} {z} {t} {} {} {}", v.v_r, v.v_theta, v.v_z);
                }
            }
        }
        out
    }
}

/// Spline-interpolated field over a [`GridData`].
#[derive(Debug, Clone)]
pub struct GridField {
    grid: GridData,
    r_axis: SplineAxis,
    z_axis: SplineAxis,
    t_axis: SplineAxis,
    steady: bool,
}

impl GridField {
    pub fn new(grid: GridData) -> Result<Self> {
        grid.validate()?;
        let steady = {
            let per_t = grid.r_nodes.len() * grid.z_nodes.len();
            grid.values.chunks(per_t).all(|slice| slice == &grid.values[..per_t])
        };
        Ok(Self {
            r_axis: SplineAxis::new(grid.r_nodes.clone())?,
            z_axis: SplineAxis::new(grid.z_nodes.clone())?,
            t_axis: SplineAxis::new(grid.t_nodes.clone())?,
            grid,
            steady,
        })
    }

    pub fn grid(&self) -> &GridData {
        &self.grid
    }

    pub fn length_scale(&self) -> f64 {
        self.grid.r_nodes[self.grid.r_nodes.len() - 1]
    }

    pub fn max_radius(&self) -> Option<f64> {
        Some(self.length_scale())
    }

    pub fn is_steady(&self) -> bool {
        self.steady
    }

    fn check(&self, r: f64, z: f64, t: f64) -> Result<()> {
        check_radius(r)?;
        if !(self.r_axis.contains(r) && self.z_axis.contains(z) && self.t_axis.contains(t)) {
            return Err(Error::OutOfDomain { r, z, t });
        }
        Ok(())
    }

    /// Contracts the grid against per-axis weight vectors.
    fn contract(&self, wr: &[f64], wz: &[f64], wt: &[(usize, f64)]) -> CylVec {
        let nr = self.grid.r_nodes.len();
        let nz = self.grid.z_nodes.len();
        let mut acc = CylVec::ZERO;
        for &(k, ct) in wt {
            for (j, &cz) in wz.iter().enumerate() {
                let base = (k * nz + j) * nr;
                let mut line = CylVec::ZERO;
                for (i, &cr) in wr.iter().enumerate() {
                    line = line + self.grid.values[base + i] * cr;
                }
                acc = acc + line * (cz * ct);
            }
        }
        acc
    }

    fn t_spline(&self, t: f64) -> Vec<(usize, f64)> {
        self.t_axis.weights(t, 0).into_iter().enumerate().collect()
    }

    /// Four-node divided-difference weights for `d^order / dt^order`.
    fn t_stencil(&self, t: f64, order: usize) -> Vec<(usize, f64)> {
        let win = nearest_window(&self.grid.t_nodes, t, 4);
        let w = fornberg_weights(t, &self.grid.t_nodes[win.clone()], order);
        win.zip(w[order].iter().copied()).collect()
    }

    pub fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        self.check(r, z, t)?;
        Ok(self.contract(&self.r_axis.weights(r, 0), &self.z_axis.weights(z, 0), &self.t_spline(t)))
    }

    pub fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        if want_third {
            return Err(Error::ThirdOrderUnavailable);
        }
        self.check(r, z, t)?;
        let wr: Vec<Vec<f64>> = (0..3).map(|o| self.r_axis.weights(r, o)).collect();
        let wz: Vec<Vec<f64>> = (0..3).map(|o| self.z_axis.weights(z, o)).collect();
        let ts = self.t_spline(t);
        let t1 = self.t_stencil(t, 1);
        let t2 = self.t_stencil(t, 2);
        Ok(FieldJet {
            value: self.contract(&wr[0], &wz[0], &ts),
            d_r: self.contract(&wr[1], &wz[0], &ts),
            d_z: self.contract(&wr[0], &wz[1], &ts),
            d_t: self.contract(&wr[0], &wz[0], &t1),
            d_rr: self.contract(&wr[2], &wz[0], &ts),
            d_rz: self.contract(&wr[1], &wz[1], &ts),
            d_zz: self.contract(&wr[0], &wz[2], &ts),
            d_rt: self.contract(&wr[1], &wz[0], &t1),
            d_zt: self.contract(&wr[0], &wz[1], &t1),
            d_tt: self.contract(&wr[0], &wz[0], &t2),
            third: None,
        })
    }
}

impl FlowField for GridField {
    fn name(&self) -> &str {
        "Gridded"
    }
    fn eval(&self, r: f64, z: f64, t: f64) -> Result<CylVec> {
        GridField::eval(self, r, z, t)
    }
    fn jet(&self, r: f64, z: f64, t: f64, want_third: bool) -> Result<FieldJet> {
        GridField::jet(self, r, z, t, want_third)
    }
    fn length_scale(&self) -> f64 {
        GridField::length_scale(self)
    }
    fn is_steady(&self) -> bool {
        self.steady
    }
    fn has_third_order(&self) -> bool {
        false
    }
    fn max_radius(&self) -> Option<f64> {
        GridField::max_radius(self)
    }
}
