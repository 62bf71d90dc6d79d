//! B-spline knot management, basis evaluation and the [`Spline`] function type.
//!
//! Every function handled by this crate is a coefficient vector over the
//! B-spline basis of a shared [`BasisEnv`]. The environment owns the knot
//! vector, its extended (clamped) form and an in-filled evaluation grid on
//! which all basis functions and their first two derivatives are tabulated
//! once. Only the `k` nonzero basis functions per grid point are stored.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative slack accepted when checking that a time lies in the domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Tolerance of the numerical surrogate for the pointwise order `f ⪯ g`.
pub const ORDER_TOL: f64 = 1e-12;

/// Strictly increasing knot sequence `τ₀ < … < τ_{ℓ−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::TooFewKnots {
                required: 2,
                got: knots.len(),
            });
        }
        if !knots[0].is_finite() {
            return Err(Error::NonIncreasingKnots { index: 0 });
        }
        for (index, pair) in knots.windows(2).enumerate() {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::NonIncreasingKnots { index: index + 1 });
            }
        }
        Ok(Self(knots))
    }

    /// `count` equidistant knots spanning `[start, end]`; the last knot is exactly `end`.
    pub fn uniform(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::TooFewKnots {
                required: 2,
                got: count,
            });
        }
        let step = (end - start) / (count - 1) as f64;
        let mut knots: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
        knots[count - 1] = end;
        Self::new(knots)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Mean distance between consecutive knots.
    pub fn mean_spacing(&self) -> f64 {
        (self.last() - self.first()) / (self.len() - 1) as f64
    }
}

/// Clamped knot sequence: first and last knot repeated `k` times, interior knots once.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedKnotVector {
    delta: Vec<f64>,
    order: usize,
}

/// Builds the extended knot vector of length `n + k`, with `n = k + ℓ − 2`.
pub fn extended_knots(knots: &KnotVector, order: usize) -> Result<ExtendedKnotVector> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "spline order must be at least 1".into(),
        ));
    }
    let inner = knots.as_slice();
    let mut delta = Vec::with_capacity(inner.len() + 2 * order - 2);
    delta.extend(std::iter::repeat_n(knots.first(), order));
    delta.extend_from_slice(&inner[1..inner.len() - 1]);
    delta.extend(std::iter::repeat_n(knots.last(), order));
    Ok(ExtendedKnotVector { delta, order })
}

impl ExtendedKnotVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.delta
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions `n` defined on this knot sequence.
    pub fn basis_count(&self) -> usize {
        self.delta.len() - self.order
    }

    /// Index `μ` of the knot interval `[δ_μ, δ_{μ+1})` holding `t`; the last
    /// nonempty interval is closed on the right.
    fn span(&self, t: f64) -> usize {
        let n = self.basis_count();
        let k = self.order;
        let idx = self.delta.partition_point(|&d| d <= t);
        idx.saturating_sub(1).clamp(k - 1, n - 1)
    }

    /// Values and first two derivatives of the `k` basis functions that are
    /// nonzero at `t`, starting with index `span − k + 1`.
    fn nonzero_basis(&self, t: f64) -> BasisBlock {
        let k = self.order;
        let span = self.span(t);
        let d = &self.delta;

        // levels[o - 1] holds the o nonzero order-o functions B_{span-o+1..=span, o}.
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(k);
        levels.push(vec![1.0]);
        for o in 2..=k {
            let lower = &levels[o - 2];
            let mut next = vec![0.0; o];
            for (r, slot) in next.iter_mut().enumerate() {
                let i = span + 1 + r - o;
                let left = if r >= 1 {
                    ratio(t - d[i], d[i + o - 1] - d[i]) * lower[r - 1]
                } else {
                    0.0
                };
                let right = if r < o - 1 {
                    ratio(d[i + o] - t, d[i + o] - d[i + 1]) * lower[r]
                } else {
                    0.0
                };
                *slot = left + right;
            }
            levels.push(next);
        }

        let first = span + 1 - k;
        let values = levels[k - 1].clone();
        let d1 = if k >= 2 {
            self.differentiate(span, k, &levels[k - 2])
        } else {
            vec![0.0; k]
        };
        let d2 = if k >= 3 {
            let lower_d1 = self.differentiate(span, k - 1, &levels[k - 3]);
            self.differentiate(span, k, &lower_d1)
        } else {
            vec![0.0; k]
        };
        BasisBlock {
            first,
            values,
            d1,
            d2,
        }
    }

    /// Derivative rule `B'_{i,o} = (o−1)·[B_{i,o−1}/(δ_{i+o−1}−δ_i) − B_{i+1,o−1}/(δ_{i+o}−δ_{i+1})]`
    /// applied to a block of `o − 1` lower-order quantities (values or derivatives).
    fn differentiate(&self, span: usize, o: usize, lower: &[f64]) -> Vec<f64> {
        let d = &self.delta;
        let scale = (o - 1) as f64;
        (0..o)
            .map(|r| {
                let i = span + 1 + r - o;
                let left = if r >= 1 {
                    ratio(lower[r - 1], d[i + o - 1] - d[i])
                } else {
                    0.0
                };
                let right = if r < o - 1 {
                    ratio(lower[r], d[i + o] - d[i + 1])
                } else {
                    0.0
                };
                scale * (left - right)
            })
            .collect()
    }
}

/// Quotient with the coinciding-knot convention: a zero denominator drops the summand.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// The `k` nonzero basis functions at one point, with first and second derivatives.
#[derive(Debug, Clone)]
pub struct BasisBlock {
    pub first: usize,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl BasisBlock {
    fn derivative(&self, deriv: usize) -> &[f64] {
        match deriv {
            0 => &self.values,
            1 => &self.d1,
            2 => &self.d2,
            _ => unreachable!("derivative order checked by caller"),
        }
    }

    fn combine(&self, coeffs: &[f64], deriv: usize) -> f64 {
        self.derivative(deriv)
            .iter()
            .zip(&coeffs[self.first..])
            .map(|(b, c)| b * c)
            .sum()
    }
}

/// Borrowed view of one precomputed table row.
#[derive(Debug, Clone, Copy)]
pub struct GridBasis<'a> {
    pub first: usize,
    pub values: &'a [f64],
    pub d1: &'a [f64],
    pub d2: &'a [f64],
}

impl GridBasis<'_> {
    fn derivative(&self, deriv: usize) -> &[f64] {
        match deriv {
            0 => self.values,
            1 => self.d1,
            2 => self.d2,
            _ => unreachable!("derivative order checked by caller"),
        }
    }
}

/// How knots are picked from the sample times in [`BasisEnv::from_times`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnotSelection {
    #[default]
    Uniform,
    Adaptive,
}

/// Spline order, knots, in-filled evaluation grid and basis tables.
#[derive(Debug)]
pub struct BasisEnv {
    order: usize,
    knots: KnotVector,
    extended: ExtendedKnotVector,
    infill: usize,
    extgrid: Vec<f64>,
    table_first: Vec<usize>,
    // 3·k entries per grid point: values, first and second derivatives.
    table: Vec<f64>,
}

impl PartialEq for BasisEnv {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.infill == other.infill && self.knots == other.knots
    }
}

impl BasisEnv {
    pub fn new(knots: KnotVector, order: usize, infill: usize) -> Result<Arc<Self>> {
        let extended = extended_knots(&knots, order)?;

        let tau = knots.as_slice();
        let mut extgrid = Vec::with_capacity(tau.len() + infill * (tau.len() - 1));
        for pair in tau.windows(2) {
            extgrid.push(pair[0]);
            let step = (pair[1] - pair[0]) / (infill + 1) as f64;
            extgrid.extend((1..=infill).map(|m| pair[0] + step * m as f64));
        }
        extgrid.push(knots.last());

        let mut table_first = Vec::with_capacity(extgrid.len());
        let mut table = Vec::with_capacity(extgrid.len() * 3 * order);
        for &t in &extgrid {
            let block = extended.nonzero_basis(t);
            table_first.push(block.first);
            table.extend_from_slice(&block.values);
            table.extend_from_slice(&block.d1);
            table.extend_from_slice(&block.d2);
        }

        Ok(Arc::new(Self {
            order,
            knots,
            extended,
            infill,
            extgrid,
            table_first,
            table,
        }))
    }

    /// Uniform knots over `[start, end]` chosen so that the basis has exactly
    /// `basis_size` functions (`ℓ = n − k + 2`).
    pub fn uniform(
        start: f64,
        end: f64,
        order: usize,
        basis_size: usize,
        infill: usize,
    ) -> Result<Arc<Self>> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "spline order must be at least 1".into(),
            ));
        }
        if basis_size < order {
            return Err(Error::TooFewKnots {
                required: 2,
                got: (basis_size + 2).saturating_sub(order),
            });
        }
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidParameter(format!(
                "domain [{start}, {end}] is empty or not finite"
            )));
        }
        let knots = KnotVector::uniform(start, end, basis_size - order + 2)?;
        Self::new(knots, order, infill)
    }

    /// Picks `max(2, round(density·N))` knots out of the sample times.
    pub fn from_times(
        times: &[f64],
        order: usize,
        infill: usize,
        density: f64,
        selection: KnotSelection,
    ) -> Result<Arc<Self>> {
        if !(density > 0.0 && density < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "knot density {density} must lie in (0, 1)"
            )));
        }
        if times.len() < 2 {
            return Err(Error::TooFewKnots {
                required: 2,
                got: times.len(),
            });
        }
        match selection {
            KnotSelection::Uniform => {
                let count = ((density * times.len() as f64).round() as usize).max(2);
                let last = times.len() - 1;
                let knots = (0..count)
                    .map(|i| times[(i * last + (count - 1) / 2) / (count - 1)])
                    .collect();
                Self::new(KnotVector::new(knots)?, order, infill)
            }
            KnotSelection::Adaptive => Err(Error::Unsupported(
                "adaptive knot selection is not implemented".into(),
            )),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn extended_knots(&self) -> &ExtendedKnotVector {
        &self.extended
    }

    pub fn infill(&self) -> usize {
        self.infill
    }

    pub fn basis_count(&self) -> usize {
        self.extended.basis_count()
    }

    /// Knots in-filled with `infill` equidistant points per knot interval.
    pub fn extgrid(&self) -> &[f64] {
        &self.extgrid
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots.first(), self.knots.last())
    }

    /// Precomputed basis block at the `j`-th extgrid point.
    pub fn grid_basis(&self, j: usize) -> GridBasis<'_> {
        let k = self.order;
        let row = &self.table[3 * k * j..3 * k * (j + 1)];
        GridBasis {
            first: self.table_first[j],
            values: &row[..k],
            d1: &row[k..2 * k],
            d2: &row[2 * k..],
        }
    }

    /// Nonzero basis block at an arbitrary time in the domain.
    pub fn basis_at(&self, t: f64) -> Result<BasisBlock> {
        let t = self.clamp_to_domain(t)?;
        Ok(self.extended.nonzero_basis(t))
    }

    /// Returns `t` clamped into the domain, or an error if it lies outside
    /// beyond rounding slack.
    pub fn clamp_to_domain(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = DOMAIN_SLACK * (hi - lo);
        if t.is_nan() || t < lo - slack || t > hi + slack {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    fn ensure_order(&self, required: usize) -> Result<()> {
        if self.order < required {
            Err(Error::InsufficientOrder {
                order: self.order,
                required,
            })
        } else {
            Ok(())
        }
    }

    /// Fails unless the spline order provides two continuous derivatives.
    pub fn require_smooth(&self) -> Result<()> {
        self.ensure_order(4)
    }
}

fn same_env(a: &Arc<BasisEnv>, b: &Arc<BasisEnv>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Value of the `i`-th B-spline at `t`, straight from the de Boor–Cox recursion.
///
/// This walks the full recursion tree and is meant for spot checks; bulk
/// evaluation goes through [`Spline::eval`] and the precomputed tables.
pub fn bspline_value(env: &BasisEnv, i: usize, t: f64) -> Result<f64> {
    bspline_deriv_any(env, i, t, 0)
}

/// First or second derivative of the `i`-th B-spline at `t` by the recursive
/// derivative rule. Pieces of polynomial degree below `order` give zero.
pub fn bspline_deriv(env: &BasisEnv, i: usize, t: f64, order: usize) -> Result<f64> {
    if !(order == 1 || order == 2) {
        return Err(Error::UnsupportedDerivative(order));
    }
    bspline_deriv_any(env, i, t, order)
}

fn bspline_deriv_any(env: &BasisEnv, i: usize, t: f64, deriv: usize) -> Result<f64> {
    let n = env.basis_count();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let t = env.clamp_to_domain(t)?;
    Ok(recursive_basis(
        env.extended.as_slice(),
        i,
        env.order,
        t,
        deriv,
    ))
}

fn recursive_basis(d: &[f64], i: usize, o: usize, t: f64, deriv: usize) -> f64 {
    if o == 1 {
        if deriv > 0 {
            return 0.0;
        }
        let last = d[d.len() - 1];
        let inside = d[i] <= t && t < d[i + 1];
        let right_closed = t == last && d[i] < d[i + 1] && d[i + 1] == last;
        return if inside || right_closed { 1.0 } else { 0.0 };
    }
    if deriv == 0 {
        let left = ratio(t - d[i], d[i + o - 1] - d[i]);
        let right = ratio(d[i + o] - t, d[i + o] - d[i + 1]);
        let mut value = 0.0;
        if left != 0.0 {
            value += left * recursive_basis(d, i, o - 1, t, 0);
        }
        if right != 0.0 {
            value += right * recursive_basis(d, i + 1, o - 1, t, 0);
        }
        value
    } else {
        let left = ratio(
            recursive_basis(d, i, o - 1, t, deriv - 1),
            d[i + o - 1] - d[i],
        );
        let right = ratio(
            recursive_basis(d, i + 1, o - 1, t, deriv - 1),
            d[i + o] - d[i + 1],
        );
        (o - 1) as f64 * (left - right)
    }
}

/// Coefficient vector over the B-spline basis of a [`BasisEnv`].
#[derive(Debug, Clone)]
pub struct Spline {
    env: Arc<BasisEnv>,
    coeffs: Vec<f64>,
}

impl Spline {
    pub fn new(env: Arc<BasisEnv>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != env.basis_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                env.basis_count(),
                coeffs.len()
            )));
        }
        Ok(Self { env, coeffs })
    }

    pub fn zeros(env: Arc<BasisEnv>) -> Self {
        Self::constant(env, 0.0)
    }

    /// The constant function `c`; exact by partition of unity.
    pub fn constant(env: Arc<BasisEnv>, c: f64) -> Self {
        let coeffs = vec![c; env.basis_count()];
        Self { env, coeffs }
    }

    pub fn env(&self) -> &Arc<BasisEnv> {
        &self.env
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn same_env(&self, other: &Spline) -> bool {
        same_env(&self.env, &other.env)
    }

    pub(crate) fn ensure_same_env(&self, other: &Spline) -> Result<()> {
        if self.same_env(other) {
            Ok(())
        } else {
            Err(Error::MismatchedEnv)
        }
    }

    /// Value (`deriv = 0`) or derivative (`1`, `2`) at `t`.
    pub fn eval(&self, t: f64, deriv: usize) -> Result<f64> {
        if deriv > 2 {
            return Err(Error::UnsupportedDerivative(deriv));
        }
        let t = self.env.clamp_to_domain(t)?;
        let grid = &self.env.extgrid;
        if let Ok(j) = grid.binary_search_by(|g| g.total_cmp(&t)) {
            return Ok(self.grid_value(j, deriv));
        }
        Ok(self
            .env
            .extended
            .nonzero_basis(t)
            .combine(&self.coeffs, deriv))
    }

    fn grid_value(&self, j: usize, deriv: usize) -> f64 {
        let row = self.env.grid_basis(j);
        row.derivative(deriv)
            .iter()
            .zip(&self.coeffs[row.first..])
            .map(|(b, c)| b * c)
            .sum()
    }

    /// Values of the spline (or its first/second derivative) on the extgrid.
    ///
    /// Panics if `deriv > 2`.
    pub fn grid_values(&self, deriv: usize) -> Vec<f64> {
        assert!(deriv <= 2, "derivative order {deriv} not tabulated");
        (0..self.env.extgrid.len())
            .map(|j| self.grid_value(j, deriv))
            .collect()
    }

    /// `‖coeffs‖_∞`, an upper bound for the sup norm of the function.
    pub fn sup_norm_bound(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Largest absolute value over the extgrid.
    pub fn grid_sup_norm(&self) -> f64 {
        self.grid_values(0)
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Spline {
        Spline {
            env: Arc::clone(&self.env),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `alpha·self + beta·other`, checked for a shared environment.
    pub fn lin_comb(&self, alpha: f64, other: &Spline, beta: f64) -> Result<Spline> {
        self.ensure_same_env(other)?;
        Ok(Spline {
            env: Arc::clone(&self.env),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }
}

impl Add for &Spline {
    type Output = Spline;

    /// Panics when the operands live on different environments.
    fn add(self, rhs: &Spline) -> Spline {
        self.lin_comb(1.0, rhs, 1.0)
            .expect("adding splines from different environments")
    }
}

impl Sub for &Spline {
    type Output = Spline;

    /// Panics when the operands live on different environments.
    fn sub(self, rhs: &Spline) -> Spline {
        self.lin_comb(1.0, rhs, -1.0)
            .expect("subtracting splines from different environments")
    }
}

impl Neg for &Spline {
    type Output = Spline;

    fn neg(self) -> Spline {
        Spline {
            env: Arc::clone(&self.env),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul<f64> for &Spline {
    type Output = Spline;

    fn mul(self, rhs: f64) -> Spline {
        self.scaled(rhs)
    }
}

/// `f(t)` or one of its first two derivatives.
pub fn spline_eval(f: &Spline, t: f64, deriv: usize) -> Result<f64> {
    f.eval(t, deriv)
}

pub fn sup_norm_bound(f: &Spline) -> f64 {
    f.sup_norm_bound()
}

/// Numerical surrogate for `f ⪯ g`: `f(t) ≤ g(t) + 1e−12` at every grid point.
pub fn pointwise_leq(f: &Spline, g: &Spline, grid: &[f64]) -> Result<bool> {
    f.ensure_same_env(g)?;
    for &t in grid {
        if f.eval(t, 0)? > g.eval(t, 0)? + ORDER_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
