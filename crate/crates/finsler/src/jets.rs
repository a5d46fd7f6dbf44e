//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores every partial derivative of a scalar function up to a
//! truncation order, expanded at a fixed center. Arithmetic on jets
//! (ring operations plus composition with analytic functions) propagates
//! derivatives exactly, so a jet of a composite expression carries the
//! exact partials of that expression — no step-size noise.
//!
//! Storage is *normalized*: the internal coefficient for multi-index α is
//! the Taylor coefficient ∂^α f / α!. The public [`Jet::partial`] accessor
//! rescales back to the raw partial ∂^α f. Normalized storage makes
//! multiplication a plain truncated convolution and keeps magnitudes tame
//! at high order.
//!
//! Monomials are laid out densely in graded lexicographic order and shared
//! through a cached [`JetSpace`], which precomputes the product-index and
//! derivative-shift tables so inner loops never hash.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, JetError, Result};

/// Environment variable controlling the derivative depth the engine carries.
pub const MAX_ORDER_ENV: &str = "FINSLER_MAX_JET_ORDER";

/// Default truncation order when [`MAX_ORDER_ENV`] is unset: deep enough for
/// every curvature and difference block the engine produces.
pub const DEFAULT_MAX_ORDER: usize = 6;

/// Truncation order requested via the environment, falling back to
/// [`DEFAULT_MAX_ORDER`]. Values below 2 cannot even support a metric and
/// are clamped up to 2; blocks needing more depth than the configured order
/// report [`FinslerError::OrderTooLow`] when asked for.
pub fn max_order_from_env() -> usize {
    match std::env::var(MAX_ORDER_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) => k.max(2),
            Err(_) => DEFAULT_MAX_ORDER,
        },
        Err(_) => DEFAULT_MAX_ORDER,
    }
}

// ---------------------------------------------------------------------------
// Multi-indices
// ---------------------------------------------------------------------------

/// Exponent vector α identifying one mixed partial ∂^α, one entry per
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(orders: Vec<usize>) -> Self {
        MultiIndex(orders)
    }

    /// Multi-index with a single 1 in position `var` (first derivative).
    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut v = vec![0; num_vars];
        v[var] = 1;
        MultiIndex(v)
    }

    pub fn orders(&self) -> &[usize] {
        &self.0
    }

    /// Total derivative order |α|.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// α! as a float (exact for the orders the engine carries).
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| fact(k)).product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

// ---------------------------------------------------------------------------
// Jet space: shared monomial tables
// ---------------------------------------------------------------------------

/// Dense monomial layout for a fixed variable count and maximum order,
/// with precomputed multiplication and derivative index tables.
///
/// Spaces are interned: [`JetSpace::get`] returns a shared handle, so every
/// jet over the same (variables, order) pair reuses one table set.
pub struct JetSpace {
    num_vars: usize,
    max_order: usize,
    /// Exponent vectors in graded lexicographic order.
    monomials: Vec<Vec<u8>>,
    /// `offsets[d]` = index of the first monomial of total degree d;
    /// final entry is the total count.
    offsets: Vec<usize>,
    /// Position lookup for an exponent vector.
    index_of: HashMap<Vec<u8>, usize>,
    /// Flattened product table: for monomial `i`, the products `i * j` for
    /// all `j` with deg(i) + deg(j) <= max_order live at
    /// `mul_table[mul_offsets[i] + j]`.
    mul_table: Vec<u32>,
    mul_offsets: Vec<usize>,
    /// `shift_up[v][m]` = index of monomial `m + e_v`, for deg(m) < max.
    shift_up: Vec<Vec<u32>>,
    /// 1/α! per monomial (normalization) and α! (denormalization).
    factorials: Vec<f64>,
}

impl JetSpace {
    /// Shared space for `num_vars` variables truncated at `max_order`.
    pub fn get(num_vars: usize, max_order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet-space cache poisoned");
        guard
            .entry((num_vars, max_order))
            .or_insert_with(|| Arc::new(JetSpace::build(num_vars, max_order)))
            .clone()
    }

    fn build(num_vars: usize, max_order: usize) -> JetSpace {
        assert!(num_vars > 0, "jet space needs at least one variable");
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        let mut offsets = vec![0usize];
        for degree in 0..=max_order {
            emit_degree(num_vars, degree, &mut monomials);
            offsets.push(monomials.len());
        }
        let index_of: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let degree = |m: &[u8]| m.iter().map(|&e| e as usize).sum::<usize>();

        let mut mul_offsets = Vec::with_capacity(monomials.len() + 1);
        let mut mul_table = Vec::new();
        for mi in &monomials {
            mul_offsets.push(mul_table.len());
            let budget = max_order - degree(mi);
            for mj in &monomials[..offsets[budget + 1]] {
                let sum: Vec<u8> = mi.iter().zip(mj).map(|(a, b)| a + b).collect();
                mul_table.push(index_of[&sum] as u32);
            }
        }
        mul_offsets.push(mul_table.len());

        let upper = if max_order == 0 { 0 } else { offsets[max_order] };
        let shift_up = (0..num_vars)
            .map(|v| {
                monomials[..upper]
                    .iter()
                    .map(|m| {
                        let mut bumped = m.clone();
                        bumped[v] += 1;
                        index_of[&bumped] as u32
                    })
                    .collect()
            })
            .collect();

        let factorials: Vec<f64> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| fact(e as usize)).product())
            .collect();

        JetSpace {
            num_vars,
            max_order,
            monomials,
            offsets,
            index_of,
            mul_table,
            mul_offsets,
            shift_up,
            factorials,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of total degree <= `order`.
    fn len_upto(&self, order: usize) -> usize {
        self.offsets[order.min(self.max_order) + 1]
    }

    fn monomial_index(&self, alpha: &[usize]) -> Option<usize> {
        let key: Vec<u8> = alpha.iter().map(|&e| e as u8).collect();
        self.index_of.get(&key).copied()
    }
}

/// Append all exponent vectors of the given total degree, lexicographically.
fn emit_degree(num_vars: usize, degree: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, remaining: usize, slots: usize, out: &mut Vec<Vec<u8>>) {
        if slots == 1 {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e as u8);
            rec(prefix, remaining - e, slots - 1, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(num_vars), degree, num_vars, out);
}

// ---------------------------------------------------------------------------
// Jets
// ---------------------------------------------------------------------------

/// All partial derivatives of one scalar quantity up to `order`, at a fixed
/// expansion center.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    center: Arc<[f64]>,
    order: usize,
    /// Normalized Taylor coefficients, graded-lex order, length
    /// `space.len_upto(order)`.
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.space.num_vars)
            .field("order", &self.order)
            .field("value", &self.value())
            .finish()
    }
}

impl Jet {
    /// Constant function `value`, truncated at `order`.
    pub fn constant(space: &Arc<JetSpace>, center: &Arc<[f64]>, value: f64, order: usize) -> Jet {
        assert_eq!(space.num_vars, center.len());
        let mut coeffs = vec![0.0; space.len_upto(order)];
        coeffs[0] = value;
        Jet {
            space: space.clone(),
            center: center.clone(),
            order,
            coeffs,
        }
    }

    /// The coordinate function for variable `var`: value = center[var],
    /// first derivative 1, everything else 0.
    pub fn coordinate(
        space: &Arc<JetSpace>,
        center: &Arc<[f64]>,
        var: usize,
        order: usize,
    ) -> Jet {
        let mut jet = Jet::constant(space, center, center[var], order);
        if order >= 1 {
            // Degree-1 monomials sit right after the constant, in variable
            // order... which graded-lex lists as e_0, e_1, ... e_{n-1}?
            // Lex on exponents with earlier variables more significant lists
            // e_0 (1,0,..) first, then e_1, etc.
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    /// Coordinate jets for every variable, sharing one center.
    pub fn coordinates(space: &Arc<JetSpace>, center: &[f64], order: usize) -> Vec<Jet> {
        let center: Arc<[f64]> = center.into();
        (0..space.num_vars)
            .map(|v| Jet::coordinate(space, &center, v, order))
            .collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_vars(&self) -> usize {
        self.space.num_vars
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Function value at the center (the order-zero coefficient).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw partial derivative ∂^α f at the center.
    ///
    /// Errors if α has the wrong arity or exceeds the truncation order.
    pub fn partial(&self, alpha: &MultiIndex) -> std::result::Result<f64, JetError> {
        if alpha.orders().len() != self.space.num_vars {
            return Err(JetError::BadMultiIndex {
                expected: self.space.num_vars,
                got: alpha.orders().len(),
            });
        }
        let total = alpha.total();
        if total > self.order {
            return Err(JetError::PartialOutOfRange {
                requested: total,
                order: self.order,
            });
        }
        let idx = self
            .space
            .monomial_index(alpha.orders())
            .expect("multi-index within order must be tabulated");
        Ok(self.coeffs[idx] * self.space.factorials[idx])
    }

    /// Raw partial with respect to the listed variables (repetition allowed):
    /// `partial_vars(&[i, j])` is ∂_i ∂_j f. Panics on out-of-order requests;
    /// internal pipeline use only builds in-range lists.
    pub(crate) fn partial_vars(&self, vars: &[usize]) -> f64 {
        let mut alpha = vec![0usize; self.space.num_vars];
        for &v in vars {
            alpha[v] += 1;
        }
        let idx = self
            .space
            .monomial_index(&alpha)
            .expect("derivative order exceeds jet order");
        self.coeffs[idx] * self.space.factorials[idx]
    }

    /// True when every coefficient is finite; otherwise names the first
    /// offender.
    pub fn check_finite(&self) -> std::result::Result<(), JetError> {
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_finite() {
                let orders = self.space.monomials[i].iter().map(|&e| e as usize).collect();
                return Err(JetError::NonFinite {
                    index: MultiIndex::new(orders),
                });
            }
        }
        Ok(())
    }

    fn assert_compatible(&self, rhs: &Jet) {
        assert!(
            Arc::ptr_eq(&self.space, &rhs.space) || {
                self.space.num_vars == rhs.space.num_vars
                    && self.space.max_order == rhs.space.max_order
            },
            "jets from different spaces"
        );
        assert!(
            Arc::ptr_eq(&self.center, &rhs.center) || self.center[..] == rhs.center[..],
            "jets centered at different points"
        );
    }

    /// Sum, truncated to the lower of the two orders.
    pub fn add(&self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let order = self.order.min(rhs.order);
        let len = self.space.len_upto(order);
        let coeffs = (0..len).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect();
        Jet {
            space: self.space.clone(),
            center: self.center.clone(),
            order,
            coeffs,
        }
    }

    /// Difference, truncated to the lower of the two orders.
    pub fn sub(&self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let order = self.order.min(rhs.order);
        let len = self.space.len_upto(order);
        let coeffs = (0..len).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect();
        Jet {
            space: self.space.clone(),
            center: self.center.clone(),
            order,
            coeffs,
        }
    }

    /// Product: truncated convolution, order = min of the operand orders.
    pub fn mul(&self, rhs: &Jet) -> Jet {
        self.assert_compatible(rhs);
        let order = self.order.min(rhs.order);
        let space = &self.space;
        let mut coeffs = vec![0.0; space.len_upto(order)];
        for i in 0..space.len_upto(order) {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let deg_i = space.degree_of(i);
            let base = space.mul_offsets[i];
            let jmax = space.len_upto(order - deg_i);
            for j in 0..jmax {
                let b = rhs.coeffs[j];
                if b != 0.0 {
                    coeffs[space.mul_table[base + j] as usize] += a * b;
                }
            }
        }
        Jet {
            space: space.clone(),
            center: self.center.clone(),
            order,
            coeffs,
        }
    }

    /// Multiply by a scalar in place-free style.
    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    /// Partial derivative with respect to variable `var`; drops one order.
    ///
    /// Panics if the jet is already order zero — the pipeline budgets orders
    /// statically, so hitting that is a programming error.
    pub fn derive(&self, var: usize) -> Jet {
        assert!(self.order > 0, "cannot derive an order-zero jet");
        let space = &self.space;
        let order = self.order - 1;
        let len = space.len_upto(order);
        let shift = &space.shift_up[var];
        let mut coeffs = vec![0.0; len];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let src = shift[m] as usize;
            // d/dx_v of t_{m+e_v} x^{m+e_v} contributes (m_v + 1) t_{m+e_v}
            // to the normalized coefficient of x^m.
            let bumped_exp = space.monomials[m][var] as f64 + 1.0;
            *c = self.coeffs[src] * bumped_exp;
        }
        Jet {
            space: space.clone(),
            center: self.center.clone(),
            order,
            coeffs,
        }
    }

    /// Compose with a univariate analytic function given by the Taylor
    /// coefficients of g around the jet's value: `series[k]` = g^(k)(a0)/k!.
    /// Horner evaluation in the zero-constant part keeps every step exact
    /// at the truncation order.
    fn compose_series(&self, series: &[f64]) -> Jet {
        debug_assert_eq!(series.len(), self.order + 1);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = Jet::constant(
            &self.space,
            &self.center,
            series[self.order],
            self.order,
        );
        for k in (0..self.order).rev() {
            acc = acc.mul(&delta);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    /// exp(f).
    pub fn exp(&self) -> Jet {
        let a0 = self.value();
        let e = a0.exp();
        let series: Vec<f64> = (0..=self.order)
            .scan(e, |state, k| {
                let out = *state;
                *state /= (k + 1) as f64;
                Some(out)
            })
            .collect();
        self.compose_series(&series)
    }

    /// sqrt(f); requires a strictly positive value at the center.
    pub fn sqrt(&self) -> Jet {
        let a0 = self.value();
        assert!(a0 > 0.0, "sqrt of a jet with non-positive value");
        // Binomial series: c_k = C(1/2, k) a0^(1/2 - k).
        let mut series = Vec::with_capacity(self.order + 1);
        let mut c = a0.sqrt();
        for k in 0..=self.order {
            series.push(c);
            let half_minus_k = 0.5 - k as f64;
            c *= half_minus_k / ((k + 1) as f64 * a0);
        }
        self.compose_series(&series)
    }

    /// 1/f; requires a nonzero value at the center.
    pub fn recip(&self) -> Jet {
        let a0 = self.value();
        assert!(a0 != 0.0, "reciprocal of a jet with zero value");
        // c_k = (-1)^k / a0^(k+1).
        let mut series = Vec::with_capacity(self.order + 1);
        let mut c = 1.0 / a0;
        for _ in 0..=self.order {
            series.push(c);
            c *= -1.0 / a0;
        }
        self.compose_series(&series)
    }

    /// sin(f).
    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                let g = match k % 4 {
                    0 => s,
                    1 => c,
                    2 => -s,
                    _ => -c,
                };
                g / fact(k)
            })
            .collect();
        self.compose_series(&series)
    }

    /// cos(f).
    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                let g = match k % 4 {
                    0 => c,
                    1 => -s,
                    2 => -c,
                    _ => s,
                };
                g / fact(k)
            })
            .collect();
        self.compose_series(&series)
    }

    /// Natural logarithm; requires a strictly positive value at the center.
    pub fn ln(&self) -> Jet {
        let a0 = self.value();
        assert!(a0 > 0.0, "log of a jet with non-positive value");
        let mut series = Vec::with_capacity(self.order + 1);
        series.push(a0.ln());
        // c_k = (-1)^(k+1) / (k a0^k) for k >= 1.
        let mut p = 1.0;
        for k in 1..=self.order {
            p *= 1.0 / a0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign * p / k as f64);
        }
        self.compose_series(&series)
    }

    /// Constant jet sharing this jet's space, center, and order.
    pub fn constant_like(&self, value: f64) -> Jet {
        Jet::constant(&self.space, &self.center, value, self.order)
    }

    /// Truncate to a lower order (no-op if already at or below it).
    pub fn truncated(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let mut out = self.clone();
        out.order = order;
        out.coeffs.truncate(self.space.len_upto(order));
        out
    }
}

impl JetSpace {
    fn degree_of(&self, idx: usize) -> usize {
        // offsets is short (max_order + 2 entries); linear scan beats a
        // binary search at these sizes.
        let mut d = 0;
        while self.offsets[d + 1] <= idx {
            d += 1;
        }
        d
    }
}

// ---------------------------------------------------------------------------
// Support elements
// ---------------------------------------------------------------------------

/// A point of the slit tangent bundle: base point `x` plus a nonzero fiber
/// vector `y`. All geometry is evaluated at support elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportElement {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SupportElement {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<SupportElement> {
        if x.len() != y.len() {
            return Err(FinslerError::DimMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(FinslerError::ZeroFiberVector);
        }
        Ok(SupportElement { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Concatenated (x, y) coordinates — the jet expansion center.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.extend_from_slice(&self.y);
        c
    }
}

// ---------------------------------------------------------------------------
// Checked public operations
// ---------------------------------------------------------------------------

/// Binary jet operations exposed through [`jet_arithmetic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic: validates arity, center, and order agreement
/// before combining, and screens the result for non-finite coefficients.
pub fn jet_arithmetic(a: &Jet, b: &Jet, op: JetOp) -> std::result::Result<Jet, JetError> {
    if a.num_vars() != b.num_vars() {
        return Err(JetError::ArityMismatch {
            left: a.num_vars(),
            right: b.num_vars(),
        });
    }
    if a.center() != b.center() {
        return Err(JetError::CenterMismatch);
    }
    if a.order() != b.order() {
        return Err(JetError::OrderMismatch {
            left: a.order(),
            right: b.order(),
        });
    }
    let out = match op {
        JetOp::Add => a.add(b),
        JetOp::Sub => a.sub(b),
        JetOp::Mul => a.mul(b),
        JetOp::Div => {
            if b.value() == 0.0 {
                return Err(JetError::ReciprocalOfZero);
            }
            a.mul(&b.recip())
        }
    };
    out.check_finite()?;
    Ok(out)
}

/// Evaluate a scalar field through jet arithmetic at a support element.
///
/// The field is handed one coordinate jet per slit-tangent-bundle variable
/// (x first, then y) and must return the jet of its value; the result then
/// carries every partial of the field up to `order`. The output is screened
/// for non-finite coefficients.
pub fn jet_eval<F>(field: F, u: &SupportElement, order: usize) -> Result<Jet>
where
    F: FnOnce(&[Jet]) -> Jet,
{
    let space = JetSpace::get(2 * u.dim(), order);
    let coords = Jet::coordinates(&space, &u.coords(), order);
    let out = field(&coords);
    out.check_finite()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(x: &[f64], y: &[f64]) -> SupportElement {
        SupportElement::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let u = support(&[0.3, -0.2], &[1.0, 0.5]);
        let jet = jet_eval(|coords| coords[0].constant_like(7.0), &u, 4).unwrap();
        assert_eq!(jet.value(), 7.0);
        assert_eq!(jet.partial(&MultiIndex::unit(4, 2)).unwrap(), 0.0);
        assert_eq!(
            jet.partial(&MultiIndex::new(vec![1, 0, 2, 1])).unwrap(),
            0.0
        );
    }

    #[test]
    fn bilinear_fiber_monomial() {
        // f = y1 * y2 on a 2-dimensional base: variables (x1, x2, y1, y2).
        let u = support(&[0.0, 0.0], &[1.0, 2.0]);
        let jet = jet_eval(|c| c[2].mul(&c[3]), &u, 3).unwrap();
        assert_eq!(jet.value(), 2.0);
        let d_y1y2 = MultiIndex::new(vec![0, 0, 1, 1]);
        assert_eq!(jet.partial(&d_y1y2).unwrap(), 1.0);
        let d_y1y1 = MultiIndex::new(vec![0, 0, 2, 0]);
        assert_eq!(jet.partial(&d_y1y1).unwrap(), 0.0);
        let d_y1 = MultiIndex::unit(4, 2);
        assert_eq!(jet.partial(&d_y1).unwrap(), 2.0);
    }

    #[test]
    fn exp_composite_matches_closed_form() {
        // f = exp(x1) * (y1)^2 at x = (0.3, 0), y = (1.5, 0.2):
        // ∂x1 ∂y1 ∂y1 f = 2 exp(0.3).
        let u = support(&[0.3, 0.0], &[1.5, 0.2]);
        let jet = jet_eval(|c| c[0].exp().mul(&c[2].mul(&c[2])), &u, 4).unwrap();
        let alpha = MultiIndex::new(vec![1, 0, 2, 0]);
        let got = jet.partial(&alpha).unwrap();
        let want = 2.0 * 0.3f64.exp();
        assert!((got - want).abs() < 1e-12 * want.abs());
        // Value and a mixed partial that kills the jet: ∂y2 f = 0.
        assert!((jet.value() - 0.3f64.exp() * 2.25).abs() < 1e-12);
        assert_eq!(jet.partial(&MultiIndex::unit(4, 3)).unwrap(), 0.0);
    }

    #[test]
    fn product_with_reciprocal_is_one() {
        let u = support(&[0.7, -0.4], &[0.9, 1.3]);
        let jet = jet_eval(
            |c| {
                // A busy positive field: f = exp(x2) + (y1)^2 + sqrt(1 + (y2)^2).
                let one = c[0].constant_like(1.0);
                c[1].exp()
                    .add(&c[2].mul(&c[2]))
                    .add(&one.add(&c[3].mul(&c[3])).sqrt())
            },
            &u,
            6,
        )
        .unwrap();
        let product = jet.mul(&jet.recip());
        assert!((product.value() - 1.0).abs() < 1e-14);
        for i in 1..product.coeffs.len() {
            assert!(
                product.coeffs[i].abs() < 1e-12,
                "coefficient {i} = {}",
                product.coeffs[i]
            );
        }
    }

    #[test]
    fn polynomial_product_is_exact() {
        // (x1 + y1)(x1 - y1) = x1^2 - y1^2 exactly.
        let u = support(&[2.0], &[3.0]);
        let space = JetSpace::get(2, 4);
        let coords = Jet::coordinates(&space, &u.coords(), 4);
        let prod = coords[0].add(&coords[1]).mul(&coords[0].sub(&coords[1]));
        assert_eq!(prod.value(), 4.0 - 9.0);
        assert_eq!(prod.partial(&MultiIndex::new(vec![2, 0])).unwrap(), 2.0);
        assert_eq!(prod.partial(&MultiIndex::new(vec![0, 2])).unwrap(), -2.0);
        assert_eq!(prod.partial(&MultiIndex::new(vec![1, 1])).unwrap(), 0.0);
        assert_eq!(prod.partial(&MultiIndex::new(vec![1, 0])).unwrap(), 4.0);
        assert_eq!(prod.partial(&MultiIndex::new(vec![0, 1])).unwrap(), -6.0);
    }

    #[test]
    fn derive_shifts_order_down_and_matches_partials() {
        let space = JetSpace::get(2, 5);
        let center: Arc<[f64]> = vec![0.5, 1.5].into();
        let x = Jet::coordinate(&space, &center, 0, 5);
        let y = Jet::coordinate(&space, &center, 1, 5);
        // f = x^2 y + y^3
        let f = x.mul(&x).mul(&y).add(&y.mul(&y).mul(&y));
        let fx = f.derive(0);
        assert_eq!(fx.order(), 4);
        // fx = 2xy -> value 2 * 0.5 * 1.5.
        assert_eq!(fx.value(), 1.5);
        // Raw partial of f wrt (x, y) equals value of d/dy of fx.
        assert_eq!(
            f.partial(&MultiIndex::new(vec![1, 1])).unwrap(),
            fx.derive(1).value()
        );
    }

    #[test]
    fn checked_arithmetic_rejects_mismatches() {
        let space = JetSpace::get(2, 3);
        let c1: Arc<[f64]> = vec![0.0, 1.0].into();
        let c2: Arc<[f64]> = vec![0.0, 2.0].into();
        let a = Jet::constant(&space, &c1, 1.0, 3);
        let b = Jet::constant(&space, &c2, 1.0, 3);
        assert!(matches!(
            jet_arithmetic(&a, &b, JetOp::Add),
            Err(JetError::CenterMismatch)
        ));
        let shallow = Jet::constant(&space, &c1, 1.0, 2);
        assert!(matches!(
            jet_arithmetic(&a, &shallow, JetOp::Mul),
            Err(JetError::OrderMismatch { left: 3, right: 2 })
        ));
        let zero = Jet::constant(&space, &c1, 0.0, 3);
        assert!(matches!(
            jet_arithmetic(&a, &zero, JetOp::Div),
            Err(JetError::ReciprocalOfZero)
        ));
    }

    #[test]
    fn non_finite_coefficients_are_named() {
        let u = support(&[1.0], &[1.0]);
        // exp(x^2 * 1e6) overflows in a high coefficient once scaled hard.
        let err = jet_eval(
            |c| c[0].scale(400.0).exp().mul(&c[0].scale(400.0).exp()),
            &u,
            2,
        )
        .unwrap_err();
        match err {
            FinslerError::Jet(JetError::NonFinite { index }) => {
                assert_eq!(index.orders().len(), 2);
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn zero_fiber_vector_is_rejected() {
        assert!(SupportElement::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(SupportElement::new(vec![0.0], vec![f64::NAN]).is_err());
        assert!(SupportElement::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn ln_inverts_exp() {
        let space = JetSpace::get(2, 6);
        let center: Arc<[f64]> = vec![0.2, -0.1].into();
        let x = Jet::coordinate(&space, &center, 0, 6);
        let y = Jet::coordinate(&space, &center, 1, 6);
        let f = x.mul(&y).add(&Jet::constant(&space, &center, 0.5, 6));
        let round = f.exp().ln();
        for (a, b) in round.coeffs.iter().zip(&f.coeffs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn trig_pythagoras_holds_in_all_coefficients() {
        let space = JetSpace::get(2, 6);
        let center: Arc<[f64]> = vec![0.9, 0.4].into();
        let x = Jet::coordinate(&space, &center, 0, 6);
        let y = Jet::coordinate(&space, &center, 1, 6);
        let f = x.mul(&y).add(&x);
        let s = f.sin();
        let c = f.cos();
        let unit = s.mul(&s).add(&c.mul(&c));
        assert!((unit.value() - 1.0).abs() < 1e-14);
        for coeff in &unit.coeffs[1..] {
            assert!(coeff.abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_order_caps_partial_requests() {
        let u = support(&[0.0], &[1.0]);
        let jet = jet_eval(|c| c[1].mul(&c[1]), &u, 2).unwrap();
        let err = jet.partial(&MultiIndex::new(vec![0, 3])).unwrap_err();
        assert!(matches!(
            err,
            JetError::PartialOutOfRange {
                requested: 3,
                order: 2
            }
        ));
    }
}
