//! Radial grids, quadrature, interpolation and finite-difference stencils.
//!
//! The radial variable is discretized on a graded grid: geometric spacing from
//! `r_min` up to a join radius (2 by default), uniform spacing from there to
//! `r_max`. The geometric ratio is tied to the outer spacing so that the node
//! spacing is continuous across the join.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};

const STENCIL: usize = 7;
/// Points of the local interpolant used by interval quadrature.
const QUAD: usize = 6;

/// Parameters of the graded grid family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub r_join: f64,
    /// Node spacing on the uniform part `[r_join, r_max]`.
    pub h_outer: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_min: 1e-4,
            r_max: 40.0,
            r_join: 2.0,
            h_outer: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct IntervalRule {
    start: usize,
    weights: [f64; QUAD],
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    start: usize,
    d1: [f64; STENCIL],
    d2: [f64; STENCIL],
}

/// Strictly increasing radii in `[r_min, r_max]` with cached quadrature and
/// differentiation weights.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spec: GridSpec,
    n_geometric: usize,
    n_uniform: usize,
    rules: Vec<IntervalRule>,
    stencils: Vec<Stencil>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        if !(spec.r_min > 0.0 && spec.r_min < spec.r_join && spec.r_join < spec.r_max) {
            return Err(VortexError::Config(format!(
                "grid requires 0 < r_min < r_join < r_max, got {:?}",
                spec
            )));
        }
        if spec.r_max < 30.0 {
            return Err(VortexError::Config(format!(
                "r_max = {} is below the minimum of 30",
                spec.r_max
            )));
        }
        if !(spec.h_outer > 0.0 && spec.h_outer <= 0.25) {
            return Err(VortexError::Config(format!(
                "outer spacing {} must lie in (0, 0.25]",
                spec.h_outer
            )));
        }
        let log_span = (spec.r_join / spec.r_min).ln();
        let n_geometric = (log_span * spec.r_join / spec.h_outer).ceil() as usize;
        let n_uniform = ((spec.r_max - spec.r_join) / spec.h_outer).round().max(1.0) as usize;
        Self::from_counts(spec, n_geometric, n_uniform)
    }

    /// Builds the grid from explicit interval counts on the two pieces.
    pub fn from_counts(spec: GridSpec, n_geometric: usize, n_uniform: usize) -> Result<Arc<Self>> {
        let log_span = (spec.r_join / spec.r_min).ln();
        let decades = log_span / std::f64::consts::LN_10;
        if (n_geometric as f64) < 8.0 * decades {
            return Err(VortexError::Config(format!(
                "{} geometric intervals over {:.2} decades is below 8 per decade",
                n_geometric, decades
            )));
        }
        let dt = log_span / n_geometric as f64;
        let h = (spec.r_max - spec.r_join) / n_uniform as f64;
        let mut nodes = Vec::with_capacity(n_geometric + n_uniform + 1);
        for j in 0..n_geometric {
            nodes.push(spec.r_min * (j as f64 * dt).exp());
        }
        nodes.push(spec.r_join);
        for i in 1..=n_uniform {
            nodes.push(if i == n_uniform {
                spec.r_max
            } else {
                spec.r_join + i as f64 * h
            });
        }
        let rules = interval_rules(&nodes);
        let stencils = derivative_stencils(&nodes);
        Ok(Arc::new(RadialGrid {
            nodes,
            spec,
            n_geometric,
            n_uniform,
            rules,
            stencils,
        }))
    }

    /// The nested grid obtained by halving every spacing.
    pub fn refined(&self) -> Result<Arc<Self>> {
        let mut spec = self.spec;
        spec.h_outer *= 0.5;
        Self::from_counts(spec, 2 * self.n_geometric, 2 * self.n_uniform)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x < r);
        if i == 0 {
            0
        } else if i >= self.nodes.len() {
            self.nodes.len() - 1
        } else if (r - self.nodes[i - 1]) <= (self.nodes[i] - r) {
            i - 1
        } else {
            i
        }
    }

    /// Index `i` such that `nodes[i] <= r <= nodes[i + 1]`.
    pub fn interval_of(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }

    fn check_range(&self, r: f64) -> Result<()> {
        let (lo, hi) = (self.r_min(), self.r_max());
        let slack = 1e-12 * hi;
        if !(r >= lo - slack * 1e-8 && r <= hi + slack) {
            return Err(VortexError::Extrapolation { r, lo, hi });
        }
        Ok(())
    }

    /// Local cubic interpolation weights at `r`, returned as (stencil start, weights).
    pub fn interp_weights(&self, r: f64) -> Result<(usize, [f64; 4])> {
        self.check_range(r)?;
        let i = self.interval_of(r);
        let start = i.saturating_sub(1).min(self.nodes.len() - 4);
        Ok((start, lagrange4(&self.nodes[start..start + 4], r)))
    }

    pub fn interp(&self, values: &[f64], r: f64) -> Result<f64> {
        let (s, w) = self.interp_weights(r)?;
        Ok((0..4).map(|j| w[j] * values[s + j]).sum())
    }

    /// First derivative of nodal data by 7-point finite differences.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        self.stencils
            .iter()
            .map(|st| (0..STENCIL).map(|j| st.d1[j] * values[st.start + j]).sum())
            .collect()
    }

    /// Second derivative of nodal data by 7-point finite differences.
    pub fn differentiate2(&self, values: &[f64]) -> Vec<f64> {
        self.stencils
            .iter()
            .map(|st| (0..STENCIL).map(|j| st.d2[j] * values[st.start + j]).sum())
            .collect()
    }

    /// Integral of the local quintic over `[nodes[i], nodes[i+1]]`.
    pub fn interval_integral(&self, values: &[f64], i: usize) -> f64 {
        let rule = &self.rules[i];
        (0..QUAD).map(|j| rule.weights[j] * values[rule.start + j]).sum()
    }
}

fn lagrange4(x: &[f64], r: f64) -> [f64; 4] {
    let mut w = [0.0; 4];
    for j in 0..4 {
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..4 {
            if m != j {
                num *= r - x[m];
                den *= x[j] - x[m];
            }
        }
        w[j] = num / den;
    }
    w
}

fn lagrange_weights(x: &[f64], r: f64) -> [f64; QUAD] {
    let mut w = [0.0; QUAD];
    for j in 0..QUAD {
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..QUAD {
            if m != j {
                num *= r - x[m];
                den *= x[j] - x[m];
            }
        }
        w[j] = num / den;
    }
    w
}

fn interval_rules(nodes: &[f64]) -> Vec<IntervalRule> {
    let n = nodes.len();
    let gauss = [
        (-(0.6f64).sqrt() * 0.5, 5.0 / 18.0),
        (0.0, 8.0 / 18.0),
        ((0.6f64).sqrt() * 0.5, 5.0 / 18.0),
    ];
    (0..n - 1)
        .map(|i| {
            let start = i.saturating_sub(QUAD / 2 - 1).min(n - QUAD);
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (mid, len) = (0.5 * (a + b), b - a);
            let mut weights = [0.0; QUAD];
            for (t, gw) in gauss {
                let l = lagrange_weights(&nodes[start..start + QUAD], mid + t * len);
                for j in 0..QUAD {
                    weights[j] += gw * len * l[j];
                }
            }
            IntervalRule { start, weights }
        })
        .collect()
}

fn derivative_stencils(nodes: &[f64]) -> Vec<Stencil> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(STENCIL / 2).min(n - STENCIL);
            let c = fd_weights(nodes[i], &nodes[start..start + STENCIL], 2);
            let mut d1 = [0.0; STENCIL];
            let mut d2 = [0.0; STENCIL];
            for j in 0..STENCIL {
                d1[j] = c[j][1];
                d2[j] = c[j][2];
            }
            Stencil { start, d1, d2 }
        })
        .collect()
}

/// Fornberg's recursion for finite-difference weights on arbitrary nodes.
/// `c[j][k]` is the weight of node `j` for the `k`-th derivative at `z`.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Real samples on a radial grid, optionally with derivative samples.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    derivs: Option<Vec<f64>>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values, "values")?;
        Ok(RadialFunction {
            grid,
            values,
            derivs: None,
        })
    }

    pub fn with_derivs(grid: Arc<RadialGrid>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values, "values")?;
        check_samples(&grid, &derivs, "derivatives")?;
        Ok(RadialFunction {
            grid,
            values,
            derivs: Some(derivs),
        })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialFunction {
            grid,
            values: vec![0.0; n],
            derivs: None,
        }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> Option<&[f64]> {
        self.derivs.as_deref()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Stored derivative, or a finite-difference one when none is stored.
    pub fn derivative(&self) -> Vec<f64> {
        match &self.derivs {
            Some(d) => d.clone(),
            None => self.grid.differentiate(&self.values),
        }
    }

    pub fn same_grid(&self, other: &RadialFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interpolated value at `r` by local cubic interpolation.
    pub fn interp_eval(&self, r: f64) -> Result<f64> {
        self.grid.interp(&self.values, r)
    }

    /// `a*self + b*other`, pointwise (derivatives kept when both carry them).
    pub fn lin_comb(&self, a: f64, other: &RadialFunction, b: f64) -> Result<Self> {
        require_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let derivs = match (&self.derivs, &other.derivs) {
            (Some(d1), Some(d2)) => Some(d1.iter().zip(d2).map(|(x, y)| a * x + b * y).collect()),
            _ => None,
        };
        Ok(RadialFunction {
            grid: self.grid.clone(),
            values,
            derivs,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| VortexError::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| VortexError::io(path, e);
        match &self.derivs {
            Some(d) => {
                writeln!(out, "r,value,dvalue").map_err(io)?;
                for ((r, v), dv) in self.grid.nodes().iter().zip(&self.values).zip(d) {
                    writeln!(out, "{:.16e},{:.16e},{:.16e}", r, v, dv).map_err(io)?;
                }
            }
            None => {
                writeln!(out, "r,value").map_err(io)?;
                for (r, v) in self.grid.nodes().iter().zip(&self.values) {
                    writeln!(out, "{:.16e},{:.16e}", r, v).map_err(io)?;
                }
            }
        }
        out.flush().map_err(io)
    }

    /// Reads a `r,value[,dvalue]` file whose radii must coincide with `grid`.
    pub fn read_csv(path: impl AsRef<Path>, grid: Arc<RadialGrid>) -> Result<Self> {
        let table = read_table(path.as_ref())?;
        if table.is_empty() || !(table[0].len() == 2 || table[0].len() == 3) {
            return Err(VortexError::Data("expected columns r,value[,dvalue]".into()));
        }
        if table.len() != grid.len()
            || table
                .iter()
                .zip(grid.nodes())
                .any(|(row, r)| (row[0] - r).abs() > 1e-12 * r.max(1.0))
        {
            return Err(VortexError::GridMismatch(format!(
                "{} does not match the radial grid",
                path.as_ref().display()
            )));
        }
        let values = table.iter().map(|row| row[1]).collect();
        if table[0].len() == 3 {
            let derivs = table.iter().map(|row| row[2]).collect();
            Self::with_derivs(grid, values, derivs)
        } else {
            Self::new(grid, values)
        }
    }
}

fn check_samples(grid: &RadialGrid, values: &[f64], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(VortexError::GridMismatch(format!(
            "{} has length {} but the grid has {} nodes",
            what,
            values.len(),
            grid.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(VortexError::Data(format!(
            "non-finite {} at r = {}",
            what,
            grid.nodes()[i]
        )));
    }
    Ok(())
}

fn require_same_grid(a: &RadialFunction, b: &RadialFunction) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(VortexError::GridMismatch(
            "radial functions live on different grids".into(),
        ))
    }
}

/// Reads a numeric CSV with a header row into rows of floats.
pub fn read_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => VortexError::io(path, io),
            other => VortexError::Data(format!("{}: {:?}", path.display(), other)),
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| VortexError::Data(format!("{}: {}", path.display(), e)))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    VortexError::Data(format!("{}: cannot parse '{}'", path.display(), field))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Behaviour of an integrand on `[0, r_min]`, used for the head of `∫_0^r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Head {
    Zero,
    /// Integrand behaves like `s^q` with `q > -1`.
    Power(f64),
    /// Exponent estimated from the first two nodes.
    Auto,
}

/// Decay of an integrand beyond `r_max`, used for the tail of `∫_r^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailDecay {
    None,
    /// Like `e^{-rate s}` up to algebraic factors.
    Exponential(f64),
    /// Like `s^{-p}` with `p > 1`.
    Power(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub tail_value: f64,
    pub measured_rate: Option<f64>,
    pub warning: Option<String>,
}

fn head_integral(grid: &RadialGrid, g: &[f64], head: Head) -> Result<f64> {
    let r0 = grid.nodes()[0];
    match head {
        Head::Zero => Ok(0.0),
        Head::Power(q) => {
            if q <= -1.0 {
                return Err(VortexError::Domain(format!(
                    "integrand exponent {} is not integrable at 0",
                    q
                )));
            }
            Ok(g[0] * r0 / (q + 1.0))
        }
        Head::Auto => {
            if g[0] == 0.0 {
                return Ok(0.0);
            }
            let r1 = grid.nodes()[1];
            let q = if g[1] != 0.0 && g[0].signum() == g[1].signum() {
                (g[1] / g[0]).ln() / (r1 / r0).ln()
            } else {
                0.0
            };
            if q <= -1.0 {
                return Err(VortexError::Domain(format!(
                    "integrand exponent {:.3} at r_min is not integrable",
                    q
                )));
            }
            Ok(g[0] * r0 / (q + 1.0))
        }
    }
}

fn product(f: &RadialFunction, weight: &RadialFunction) -> Result<Vec<f64>> {
    require_same_grid(f, weight)?;
    Ok(f.values.iter().zip(&weight.values).map(|(a, b)| a * b).collect())
}

/// `F(r) = ∫_0^r f·weight ds` with piecewise-quintic quadrature and a power-law head.
pub fn cumulative_integral(
    f: &RadialFunction,
    weight: &RadialFunction,
    head: Head,
) -> Result<RadialFunction> {
    let g = product(f, weight)?;
    let values = cumulative_from_samples(&f.grid, &g, head)?;
    RadialFunction::with_derivs(f.grid.clone(), values, g)
}

pub fn cumulative_from_samples(grid: &RadialGrid, g: &[f64], head: Head) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = head_integral(grid, g, head)?;
    out.push(acc);
    for i in 0..g.len() - 1 {
        acc += grid.interval_integral(g, i);
        out.push(acc);
    }
    Ok(out)
}

/// `F(r) = ∫_r^{r_max} f·weight ds` plus an analytic tail from `decay`.
pub fn tail_integral(
    f: &RadialFunction,
    weight: &RadialFunction,
    decay: TailDecay,
) -> Result<(RadialFunction, TailReport)> {
    let g = product(f, weight)?;
    let (values, report) = tail_from_samples(&f.grid, &g, decay)?;
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    Ok((RadialFunction::with_derivs(f.grid.clone(), values, neg)?, report))
}

pub fn tail_from_samples(
    grid: &RadialGrid,
    g: &[f64],
    decay: TailDecay,
) -> Result<(Vec<f64>, TailReport)> {
    let n = g.len();
    let nodes = grid.nodes();
    let (ra, rb) = (nodes[n - 5], nodes[n - 1]);
    let (ga, gb) = (g[n - 5], g[n - 1]);
    let same_sign = ga != 0.0 && gb != 0.0 && ga.signum() == gb.signum();
    let mut report = TailReport::default();
    let tail = match decay {
        TailDecay::None => 0.0,
        TailDecay::Exponential(rate) => {
            if rate <= 0.0 {
                return Err(VortexError::Config("exponential tail rate must be positive".into()));
            }
            if same_sign {
                let measured = -(gb / ga).ln() / (rb - ra);
                report.measured_rate = Some(measured);
                if (measured - rate).abs() > 0.25 * rate {
                    report.warning = Some(format!(
                        "declared exponential rate {:.4} but measured {:.4}",
                        rate, measured
                    ));
                }
            }
            gb / rate
        }
        TailDecay::Power(p) => {
            if p <= 1.0 {
                return Err(VortexError::Config(format!(
                    "power tail exponent {} must exceed 1",
                    p
                )));
            }
            if same_sign {
                let measured = -(gb / ga).ln() / (rb / ra).ln();
                report.measured_rate = Some(measured);
                if (measured - p).abs() > 0.25 * p {
                    report.warning = Some(format!(
                        "declared power decay {:.4} but measured {:.4}",
                        p, measured
                    ));
                }
            }
            gb * rb / (p - 1.0)
        }
    };
    report.tail_value = tail;
    let mut out = vec![0.0; n];
    out[n - 1] = tail;
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + grid.interval_integral(g, i);
    }
    Ok((out, report))
}

/// One classical Runge-Kutta step for `y' = f(r, y)`.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    r: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *a;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = f(r, y);
    let k2 = f(r + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(r + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(r + h, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `d ln|f| / d ln r` between nodes `i` and `j`.
pub fn log_slope(r: &[f64], f: &[f64], i: usize, j: usize) -> f64 {
    (f[j].abs() / f[i].abs()).ln() / (r[j] / r[i]).ln()
}

/// `d ln|f| / dr` between nodes `i` and `j`.
pub fn exp_slope(r: &[f64], f: &[f64], i: usize, j: usize) -> f64 {
    (f[j].abs() / f[i].abs()).ln() / (r[j] - r[i])
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        RadialGrid::new(GridSpec::default()).unwrap()
    }

    fn ones(g: &Arc<RadialGrid>) -> RadialFunction {
        RadialFunction::from_fn(g.clone(), |_| 1.0).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid();
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.r_min(), 1e-4);
        assert_eq!(g.r_max(), 40.0);
        assert!(g.nodes().contains(&2.0));
        let fine = g.refined().unwrap();
        assert_eq!(fine.len(), 2 * g.len() - 1);
        // nested: every coarse node is a fine node
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((fine.nodes()[2 * i] - r).abs() <= 1e-13 * r);
        }
    }

    #[test]
    fn rejects_short_domain() {
        let spec = GridSpec {
            r_max: 20.0,
            ..GridSpec::default()
        };
        assert!(matches!(RadialGrid::new(spec), Err(VortexError::Config(_))));
    }

    #[test]
    fn zero_integrand() {
        let g = grid();
        let z = RadialFunction::zeros(g.clone());
        let f = cumulative_integral(&z, &ones(&g), Head::Auto).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let (t, _) = tail_integral(&z, &ones(&g), TailDecay::Exponential(1.0)).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_integrand_gives_r() {
        let g = grid();
        let f = cumulative_integral(&ones(&g), &ones(&g), Head::Power(0.0)).unwrap();
        for (r, v) in g.nodes().iter().zip(f.values()) {
            assert!((v - r).abs() <= 1e-10 * r, "{} vs {}", v, r);
        }
    }

    #[test]
    fn cubic_integrand_is_exact() {
        let g = grid();
        let s = RadialFunction::from_fn(g.clone(), |r| r).unwrap();
        let f = cumulative_integral(&s, &s, Head::Power(2.0)).unwrap();
        for (r, v) in g.nodes().iter().zip(f.values()) {
            let exact = r * r * r / 3.0;
            assert!((v - exact).abs() <= 1e-12 * exact.max(1e-12), "{} {}", v, exact);
        }
    }

    fn cumulative_error(g: &Arc<RadialGrid>) -> f64 {
        let f = RadialFunction::from_fn(g.clone(), |r| (3.0 * r).sin()).unwrap();
        let w = RadialFunction::from_fn(g.clone(), |r| r.exp() / 10.0).unwrap();
        let big = cumulative_integral(&f, &w, Head::Power(1.0)).unwrap();
        // ∫ sin(3s) e^s / 10 ds = e^s (sin 3s - 3 cos 3s) / 100
        let exact = |r: f64| (r.exp() * ((3.0 * r).sin() - 3.0 * (3.0 * r).cos()) + 3.0) / 100.0;
        g.nodes()
            .iter()
            .zip(big.values())
            .map(|(&r, v)| (v - exact(r)).abs() / exact(r).abs().max(1.0))
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadrature_order_by_refinement() {
        let coarse = RadialGrid::new(GridSpec {
            h_outer: 0.1,
            ..GridSpec::default()
        })
        .unwrap();
        let fine = coarse.refined().unwrap();
        let (e1, e2) = (cumulative_error(&coarse), cumulative_error(&fine));
        assert!(e1 / e2 >= 4.0, "refinement ratio {} ({} -> {})", e1 / e2, e1, e2);
    }

    #[test]
    fn exponential_tail_closed_form() {
        let g = grid();
        let s2 = std::f64::consts::SQRT_2;
        let f = RadialFunction::from_fn(g.clone(), |r| (-s2 * r).exp()).unwrap();
        let (t, rep) = tail_integral(&f, &ones(&g), TailDecay::Exponential(s2)).unwrap();
        assert!(rep.warning.is_none());
        for (&r, v) in g.nodes().iter().zip(t.values()) {
            let exact = (-s2 * r).exp() / s2;
            assert!((v - exact).abs() <= 1e-8 * exact, "r={} {} {}", r, v, exact);
        }
    }

    #[test]
    fn power_tail_closed_form_with_refinement() {
        let err = |g: &Arc<RadialGrid>| {
            let f = RadialFunction::from_fn(g.clone(), |r| r.powi(-3)).unwrap();
            let w = RadialFunction::from_fn(g.clone(), |r| r).unwrap();
            let (t, rep) = tail_integral(&f, &w, TailDecay::Power(2.0)).unwrap();
            assert!(rep.warning.is_none());
            g.nodes()
                .iter()
                .zip(t.values())
                .filter(|(r, _)| **r >= 1e-2)
                .map(|(&r, v)| (v * r - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let coarse = grid();
        let (e1, e2) = (err(&coarse), err(&coarse.refined().unwrap()));
        assert!(e2 <= 1e-8, "{}", e2);
        assert!(e1 / e2 >= 4.0 || e2 < 1e-12);
    }

    #[test]
    fn tail_mismatch_is_reported() {
        let g = grid();
        let f = RadialFunction::from_fn(g.clone(), |r| (-3.0 * r).exp()).unwrap();
        let (_, rep) = tail_integral(&f, &ones(&g), TailDecay::Exponential(1.0)).unwrap();
        assert!(rep.warning.is_some());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_cubics() {
        let g = grid();
        let cubic = |r: f64| 1.0 - 2.0 * r + 0.5 * r * r - 0.01 * r * r * r;
        let f = RadialFunction::from_fn(g.clone(), cubic).unwrap();
        for &r in &g.nodes()[..50] {
            assert_eq!(f.interp_eval(r).unwrap(), cubic(r));
        }
        for &r in &[1e-4 * 1.5, 0.37, 2.0, 13.3333, 39.99] {
            let v = f.interp_eval(r).unwrap();
            assert!((v - cubic(r)).abs() <= 1e-12 * cubic(r).abs().max(1.0));
        }
        assert!(matches!(
            f.interp_eval(41.0),
            Err(VortexError::Extrapolation { .. })
        ));
    }

    #[test]
    fn interpolation_fourth_order() {
        let err = |g: &Arc<RadialGrid>| {
            let f = RadialFunction::from_fn(g.clone(), f64::sin).unwrap();
            let nodes = g.nodes();
            let mut worst: f64 = 0.0;
            for w in nodes.windows(2).filter(|w| w[0] >= 2.0) {
                let r = 0.5 * (w[0] + w[1]);
                worst = worst.max((f.interp_eval(r).unwrap() - r.sin()).abs());
            }
            worst
        };
        let coarse = RadialGrid::new(GridSpec {
            h_outer: 0.2,
            ..GridSpec::default()
        })
        .unwrap();
        let (e1, e2) = (err(&coarse), err(&coarse.refined().unwrap()));
        // O(h^4): halving the spacing gains close to 16x
        assert!(e1 / e2 > 12.0, "{} {}", e1, e2);
    }

    #[test]
    fn differentiation_is_high_order() {
        let g = grid();
        let f: Vec<f64> = g.nodes().iter().map(|r| r.ln() * r.sin()).collect();
        let d1 = g.differentiate(&f);
        let d2 = g.differentiate2(&f);
        for (i, &r) in g.nodes().iter().enumerate() {
            let e1 = r.sin() / r + r.ln() * r.cos();
            let e2 = -r.sin() / (r * r) + 2.0 * r.cos() / r - r.ln() * r.sin();
            assert!((d1[i] - e1).abs() <= 1e-7 * (1.0 + e1.abs() + 1.0 / r));
            assert!((d2[i] - e2).abs() <= 1e-5 * (1.0 + e2.abs() + 1.0 / (r * r)));
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = grid();
        let f = RadialFunction::with_derivs(
            g.clone(),
            g.nodes().iter().map(|r| r.sin()).collect(),
            g.nodes().iter().map(|r| r.cos()).collect(),
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("vortex-num-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        f.write_csv(&path).unwrap();
        let back = RadialFunction::read_csv(&path, g.clone()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.derivs(), f.derivs());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("r,value,dvalue\n"));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g = grid();
        let other = g.refined().unwrap();
        let a = ones(&g);
        let b = ones(&other);
        assert!(matches!(
            cumulative_integral(&a, &b, Head::Zero),
            Err(VortexError::GridMismatch(_))
        ));
        assert!(matches!(
            RadialFunction::new(g.clone(), vec![f64::NAN; g.len()]),
            Err(VortexError::Data(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn cumulative_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..2.0) {
                let g = RadialGrid::new(GridSpec { h_outer: 0.1, ..GridSpec::default() }).unwrap();
                let f = RadialFunction::from_fn(g.clone(), |r| (c * r).cos()).unwrap();
                let h = RadialFunction::from_fn(g.clone(), |r| r / (1.0 + r * r)).unwrap();
                let w = RadialFunction::from_fn(g.clone(), |r| r).unwrap();
                let combo = f.lin_comb(a, &h, b).unwrap();
                let lhs = cumulative_integral(&combo, &w, Head::Power(1.0)).unwrap();
                let fi = cumulative_integral(&f, &w, Head::Power(1.0)).unwrap();
                let hi = cumulative_integral(&h, &w, Head::Power(1.0)).unwrap();
                for i in 0..g.len() {
                    let rhs = a * fi.values()[i] + b * hi.values()[i];
                    prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()) * 40.0);
                }
            }
        }
    }
}
