//! Truncated multivariate Taylor expansions ("jets").
//!
//! A jet of order `d` in `n` variables stores the Taylor coefficients
//! `c_α = ∂^α f(x₀) / α!` for every multi-index with `|α| ≤ d`. Monomials are
//! kept in graded order, so the coefficients of a lower-order truncation are a
//! prefix of the coefficient vector. Arithmetic is exact up to the stored
//! order.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficient field of a jet: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn modulus(self) -> f64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Monomial bookkeeping shared by all jets with the same number of variables.
#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    max_order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `count[d]` = number of monomials with degree ≤ d.
    count: Vec<usize>,
    /// Product triples `(i, j, k)` with `α_i + α_j = α_k`, sorted by `|α_k|`.
    products: Vec<(u32, u32, u32)>,
    /// `product_count[d]` = number of triples whose result has degree ≤ d.
    product_count: Vec<usize>,
    /// `raise[v][i]` = index of `α_i + e_v` if within `max_order`.
    raise: Vec<Vec<Option<usize>>>,
}

impl JetLayout {
    fn build(nvars: usize, max_order: usize) -> Self {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        let mut count = Vec::with_capacity(max_order + 1);
        for deg in 0..=max_order {
            let mut level = Vec::new();
            exponents_of_degree(nvars, deg, &mut Vec::new(), &mut level);
            // reverse lexicographic inside a degree puts x₀ first
            level.sort_by(|a, b| b.cmp(a));
            monomials.extend(level);
            count.push(monomials.len());
        }
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let degree = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if degree(a) + degree(b) > max_order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| k);
        let mut product_count = Vec::with_capacity(max_order + 1);
        for deg in 0..=max_order {
            let limit = count[deg] as u32;
            product_count.push(products.iter().filter(|p| p.2 < limit).count());
        }
        let raise = (0..nvars)
            .map(|v| {
                monomials
                    .iter()
                    .map(|m| {
                        let mut up = m.clone();
                        up[v] += 1;
                        index.get(&up).copied()
                    })
                    .collect()
            })
            .collect();
        Self {
            nvars,
            max_order,
            monomials,
            index,
            count,
            products,
            product_count,
            raise,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of total degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn monomials(&self) -> &[Vec<u8>] {
        &self.monomials
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.index.get(exponents).copied()
    }
}

fn exponents_of_degree(nvars: usize, deg: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == nvars {
        let mut m = prefix.clone();
        m.push(deg as u8);
        out.push(m);
        return;
    }
    if nvars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in 0..=deg {
        prefix.push(e as u8);
        exponents_of_degree(nvars, deg - e, prefix, out);
        prefix.pop();
    }
}

/// Shared layout for `nvars` variables supporting orders up to `max_order`.
pub fn layout(nvars: usize, max_order: usize) -> Arc<JetLayout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetLayout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard
        .entry((nvars, max_order))
        .or_insert_with(|| Arc::new(JetLayout::build(nvars, max_order)))
        .clone()
}

#[derive(Debug, Clone)]
pub struct Jet<T: Scalar> {
    layout: Arc<JetLayout>,
    order: usize,
    coeffs: Vec<T>,
}

pub type RealJet = Jet<f64>;
pub type ComplexJet = Jet<Complex64>;

impl<T: Scalar> Jet<T> {
    pub fn constant(nvars: usize, order: usize, value: T) -> Self {
        let layout = layout(nvars, order);
        let mut coeffs = vec![T::zero(); layout.len(order)];
        coeffs[0] = value;
        Self {
            layout,
            order,
            coeffs,
        }
    }

    /// The coordinate function `x_var` expanded at `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: T) -> Self {
        let mut jet = Self::constant(nvars, order, value);
        if order >= 1 {
            let mut e = vec![0u8; nvars];
            e[var] = 1;
            let idx = jet.layout.index_of(&e).expect("linear monomial");
            jet.coeffs[idx] = T::one();
        }
        jet
    }

    /// Coordinate jets for all variables at a base point.
    pub fn variables(base: &[T], order: usize) -> Vec<Self> {
        (0..base.len())
            .map(|v| Self::variable(base.len(), order, v, base[v]))
            .collect()
    }

    pub fn from_coefficients(nvars: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        let layout = layout(nvars, order);
        if coeffs.len() != layout.len(order) {
            return Err(Error::OrderMismatch(format!(
                "expected {} coefficients for order {order} in {nvars} variables, got {}",
                layout.len(order),
                coeffs.len()
            )));
        }
        Ok(Self {
            layout,
            order,
            coeffs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    /// Taylor coefficient `∂^α f / α!`.
    pub fn coefficient(&self, alpha: &[u8]) -> T {
        match self.layout.index_of(alpha) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => T::zero(),
        }
    }

    /// The mixed partial derivative `∂^α f` at the base point.
    pub fn partial(&self, alpha: &[u8]) -> T {
        let factorial: f64 = alpha
            .iter()
            .map(|&a| (1..=a as u64).product::<u64>() as f64)
            .product();
        self.coefficient(alpha) * T::from_f64(factorial)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + s;
        out
    }

    fn common(&self, other: &Self) -> (Arc<JetLayout>, usize) {
        assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets over different variable counts"
        );
        let layout = if self.layout.max_order >= other.layout.max_order {
            self.layout.clone()
        } else {
            other.layout.clone()
        };
        (layout, self.order.min(other.order))
    }

    /// `∂f/∂x_var` as a jet of one lower order.
    pub fn differentiate(&self, var: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::OrderMismatch(
                "cannot differentiate an order-0 jet".into(),
            ));
        }
        let order = self.order - 1;
        let n = self.layout.len(order);
        let mut coeffs = vec![T::zero(); n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let up = self.layout.raise[var][i].expect("raised monomial within order");
            let factor = self.layout.monomials[i][var] as f64 + 1.0;
            *c = self.coeffs[up] * T::from_f64(factor);
        }
        Ok(Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        })
    }

    /// Compose a univariate function given its derivatives `f^{(k)}(u₀)`,
    /// `k = 0..=order`, at `u₀ = self.value()`.
    pub fn compose_univariate(&self, derivatives: &[T]) -> Self {
        let order = self.order.min(derivatives.len().saturating_sub(1));
        let mut delta = self.truncate(order);
        delta.coeffs[0] = T::zero();
        let mut out = Self::constant(self.nvars(), order, derivatives[0]);
        out.layout = self.layout.clone();
        let mut power = Self::constant(self.nvars(), order, T::one());
        power.layout = self.layout.clone();
        let mut factorial = 1.0;
        for (k, &dk) in derivatives.iter().enumerate().take(order + 1).skip(1) {
            power = &power * &delta;
            factorial *= k as f64;
            let w = dk / T::from_f64(factorial);
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o = *o + w * *p;
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose_univariate(&vec![e; self.order + 1])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [s, c, -s, -c];
        let d: Vec<T> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose_univariate(&d)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [c, -s, -c, s];
        let d: Vec<T> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose_univariate(&d)
    }

    /// `1/f`; the base value must be nonzero.
    pub fn recip(&self) -> Self {
        let u = self.value();
        let inv = T::one() / u;
        let mut d = Vec::with_capacity(self.order + 1);
        let mut cur = inv;
        for k in 0..=self.order {
            d.push(cur);
            // d/du u^{-(k+1)} = -(k+1) u^{-(k+2)}
            cur = -(cur * inv) * T::from_f64(k as f64 + 1.0);
        }
        self.compose_univariate(&d)
    }

    /// `f^p` for real exponent `p`, via derivatives of `u ↦ u^p`.
    pub fn powf(&self, p: f64) -> Self
    where
        T: PowF,
    {
        let u = self.value();
        let mut d = Vec::with_capacity(self.order + 1);
        let mut coeff = 1.0;
        for k in 0..=self.order {
            d.push(u.powf(p - k as f64) * T::from_f64(coeff));
            coeff *= p - k as f64;
        }
        self.compose_univariate(&d)
    }

    pub fn sqrt(&self) -> Self
    where
        T: PowF,
    {
        self.powf(0.5)
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(self.nvars(), self.order, T::one());
        out.layout = self.layout.clone();
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Real powers of a scalar.
pub trait PowF: Scalar {
    fn powf(self, p: f64) -> Self;
}

impl PowF for f64 {
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

impl PowF for Complex64 {
    fn powf(self, p: f64) -> Self {
        Complex64::powf(self, p)
    }
}

impl RealJet {
    pub fn to_complex(&self) -> ComplexJet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        let n = self.nvars();
        (0..n)
            .map(|v| {
                let mut e = vec![0u8; n];
                e[v] = 1;
                self.coefficient(&e)
            })
            .collect()
    }

    /// Hessian matrix from the order-2 coefficients.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.nvars();
        let mut h = vec![vec![0.0; n]; n];
        for (i, row) in h.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let mut e = vec![0u8; n];
                e[i] += 1;
                e[j] += 1;
                *entry = self.partial(&e);
            }
        }
        h
    }
}

/// Substitute `inner` jets into the Taylor polynomial `outer`.
///
/// `outer` is a jet in `m` variables expanded at `u₀`; `inner` holds `m` jets
/// over common variables whose values must equal `u₀`. The result is the jet
/// of the composite at the inner base point, at the inner order.
pub fn jet_compose<T: Scalar>(outer: &Jet<T>, inner: &[Jet<T>]) -> Result<Jet<T>> {
    if inner.len() != outer.nvars() {
        return Err(Error::OrderMismatch(format!(
            "outer jet has {} variables but {} inner jets were supplied",
            outer.nvars(),
            inner.len()
        )));
    }
    let Some(first) = inner.first() else {
        return Ok(outer.clone());
    };
    let order = first.order;
    let nvars = first.nvars();
    if inner.iter().any(|j| j.order != order || j.nvars() != nvars) {
        return Err(Error::OrderMismatch(
            "inner jets must share order and variables".into(),
        ));
    }
    if outer.order < order {
        return Err(Error::OrderMismatch(format!(
            "outer order {} below inner order {order}",
            outer.order
        )));
    }
    // powers of δ_i = inner_i - value for 0..=order
    let mut powers: Vec<Vec<Jet<T>>> = Vec::with_capacity(inner.len());
    for j in inner {
        let mut delta = j.clone();
        delta.coeffs[0] = T::zero();
        let mut list = vec![Jet::constant(nvars, order, T::one())];
        for p in 1..=order {
            let next = &list[p - 1] * &delta;
            list.push(next);
        }
        powers.push(list);
    }
    let mut out = Jet::constant(nvars, order, T::zero());
    let n_outer = outer.layout.len(order);
    for (idx, alpha) in outer.layout.monomials[..n_outer].iter().enumerate() {
        let c = outer.coeffs[idx];
        if c == T::zero() {
            continue;
        }
        let mut term = Jet::constant(nvars, order, c);
        for (v, &e) in alpha.iter().enumerate() {
            if e > 0 {
                term = &term * &powers[v][e as usize];
            }
        }
        out = &out + &term;
    }
    Ok(out)
}

impl<'a, T: Scalar> Add for &'a Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        let (layout, order) = self.common(rhs);
        let n = layout.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&rhs.coeffs[..n])
            .map(|(&a, &b)| a + b)
            .collect();
        Jet {
            layout,
            order,
            coeffs,
        }
    }
}

impl<'a, T: Scalar> Sub for &'a Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        let (layout, order) = self.common(rhs);
        let n = layout.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&rhs.coeffs[..n])
            .map(|(&a, &b)| a - b)
            .collect();
        Jet {
            layout,
            order,
            coeffs,
        }
    }
}

impl<'a, T: Scalar> Mul for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Jet<T> {
        let (layout, order) = self.common(rhs);
        let mut coeffs = vec![T::zero(); layout.len(order)];
        for &(i, j, k) in &layout.products[..layout.product_count[order]] {
            coeffs[k as usize] = coeffs[k as usize] + self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet {
            layout,
            order,
            coeffs,
        }
    }
}

impl<'a, T: Scalar> Div for &'a Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: Self) -> Jet<T> {
        self * &rhs.recip()
    }
}

impl<'a, T: Scalar> Neg for &'a Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_identity() {
        // f(u) = u² at u = 3, composed with u(x) = x
        let outer = Jet::<f64>::from_coefficients(1, 2, vec![9.0, 6.0, 1.0]).unwrap();
        let inner = vec![Jet::variable(1, 2, 0, 3.0)];
        let c = jet_compose(&outer, &inner).unwrap();
        assert_eq!(c.partial(&[0]), 9.0);
        assert_eq!(c.partial(&[1]), 6.0);
        assert_eq!(c.partial(&[2]), 2.0);
    }

    #[test]
    fn reciprocal_first_order() {
        let f = Jet::<f64>::from_coefficients(1, 1, vec![2.0, 1.0]).unwrap();
        let r = f.recip();
        assert_eq!(r.partial(&[0]), 0.5);
        assert_eq!(r.partial(&[1]), -0.25);
    }

    #[test]
    fn compose_rejects_order_mismatch() {
        let outer = Jet::<f64>::constant(2, 1, 1.0);
        let inner = vec![Jet::variable(1, 2, 0, 0.0), Jet::variable(1, 2, 0, 0.0)];
        assert!(matches!(
            jet_compose(&outer, &inner),
            Err(Error::OrderMismatch(_))
        ));
        let inner = vec![Jet::variable(1, 1, 0, 0.0)];
        assert!(jet_compose(&outer, &inner).is_err());
    }

    #[test]
    fn polynomial_derivatives_exact() {
        // p(x, y) = x³y + 2xy² − y at (1.5, −0.5), all partials to order 4
        let vars = Jet::<f64>::variables(&[1.5, -0.5], 4);
        let (x, y) = (&vars[0], &vars[1]);
        let p = &(&(&x.powi(3) * y) + &(&x.scale(2.0) * &y.powi(2))) - y;
        let (a, b) = (1.5f64, -0.5f64);
        assert!((p.value() - (a.powi(3) * b + 2.0 * a * b * b - b)).abs() < 1e-14);
        assert!((p.partial(&[1, 0]) - (3.0 * a * a * b + 2.0 * b * b)).abs() < 1e-14);
        assert!((p.partial(&[0, 1]) - (a.powi(3) + 4.0 * a * b - 1.0)).abs() < 1e-14);
        assert!((p.partial(&[2, 1]) - 6.0 * a).abs() < 1e-13);
        assert!((p.partial(&[1, 2]) - 4.0).abs() < 1e-13);
        assert!((p.partial(&[3, 1]) - 6.0).abs() < 1e-13);
        assert_eq!(p.partial(&[4, 0]), 0.0);
    }

    #[test]
    fn differentiate_lowers_order() {
        let vars = Jet::<f64>::variables(&[0.3, 0.7], 3);
        let f = (&vars[0] * &vars[1]).exp();
        let fx = f.differentiate(0).unwrap();
        assert_eq!(fx.order(), 2);
        let (a, b) = (0.3f64, 0.7f64);
        assert!((fx.value() - b * (a * b).exp()).abs() < 1e-14);
        // ∂_y ∂_x e^{xy} = (1 + xy) e^{xy}
        assert!((fx.partial(&[0, 1]) - (1.0 + a * b) * (a * b).exp()).abs() < 1e-13);
    }

    #[test]
    fn trig_identity() {
        let x = Jet::<f64>::variable(1, 4, 0, 0.9);
        let one = &x.sin().powi(2) + &x.cos().powi(2);
        assert!((one.value() - 1.0).abs() < 1e-15);
        for k in 1..=4u8 {
            assert!(one.partial(&[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn layout_counts() {
        let l = layout(2, 4);
        assert_eq!(l.len(0), 1);
        assert_eq!(l.len(1), 3);
        assert_eq!(l.len(2), 6);
        assert_eq!(l.len(4), 15);
        assert_eq!(layout(5, 2).len(2), 21);
    }
}
