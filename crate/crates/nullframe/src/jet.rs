//! Truncated multivariate Taylor jets: the differentiation backbone.
//!
//! A `Jet` holds the Taylor coefficients of a complex-valued function of the
//! four real coordinates (x1..x4) about a base point, up to a total degree
//! `order`.  The coefficient stored at multi-index α = (i1,i2,i3,i4) is
//! ∂^α f / α!, so the zeroth coefficient is the value of the function and the
//! four degree-one coefficients are the first partials.
//!
//! Jets form a commutative ring under truncated convolution; analytic
//! functions (exp, log, sin, ...) are lifted by composing the scalar Taylor
//! series of the function with the nilpotent part of the jet.  Everything an
//! expression can do, a jet can absorb — this is how all directional
//! derivatives downstream (δ, ∂, △, D) are realized without any symbolic
//! differentiation.

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Highest jet order the engine supports (CLI clamps to [1,6]; internal
/// consumers never need more than the input order).
pub const MAX_ORDER: usize = 8;

/// Multi-index over 4 variables.
pub type MultiIndex = [u8; 4];

/// Precomputed index bookkeeping for a given truncation order: the graded
/// list of multi-indices, the rank lookup, and the multiplication table of
/// all coefficient-index triples (ia, ib, ic) with α_ia + α_ib = α_ic.
pub struct JetTable {
    pub order: usize,
    pub indices: Vec<MultiIndex>,
    rank: HashMap<MultiIndex, usize>,
    /// (ia, ib, ic) triples for truncated convolution, ia ≤ ib.
    mul: Vec<(u32, u32, u32)>,
    /// For each variable k and each index i of degree ≥ 1 in x_k:
    /// (i, j, factor) meaning (∂_k f)[j] += factor * f[i] where j = i − e_k
    /// and factor = i_k (the multi-index component before the shift).
    diff: [Vec<(u32, u32, f64)>; 4],
}

fn build_table(order: usize) -> JetTable {
    // Graded lexicographic enumeration of multi-indices with |α| ≤ order.
    let mut indices = Vec::new();
    for total in 0..=order {
        for i1 in (0..=total).rev() {
            for i2 in (0..=(total - i1)).rev() {
                for i3 in (0..=(total - i1 - i2)).rev() {
                    let i4 = total - i1 - i2 - i3;
                    indices.push([i1 as u8, i2 as u8, i3 as u8, i4 as u8]);
                }
            }
        }
    }
    let rank: HashMap<MultiIndex, usize> =
        indices.iter().enumerate().map(|(n, &a)| (a, n)).collect();
    let deg = |a: &MultiIndex| (a[0] + a[1] + a[2] + a[3]) as usize;
    let mut mul = Vec::new();
    for (ia, a) in indices.iter().enumerate() {
        for (ib, b) in indices.iter().enumerate().skip(ia) {
            if deg(a) + deg(b) > order {
                continue;
            }
            let c = [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
            mul.push((ia as u32, ib as u32, rank[&c] as u32));
        }
    }
    let mut diff: [Vec<(u32, u32, f64)>; 4] = Default::default();
    for k in 0..4 {
        for (i, a) in indices.iter().enumerate() {
            if a[k] == 0 {
                continue;
            }
            let mut b = *a;
            b[k] -= 1;
            diff[k].push((i as u32, rank[&b] as u32, a[k] as f64));
        }
    }
    JetTable { order, indices, rank, mul, diff }
}

/// Shared per-order tables, built once and leaked (orders are tiny).
pub fn table(order: usize) -> &'static JetTable {
    assert!(order <= MAX_ORDER, "jet order {order} exceeds MAX_ORDER");
    static TABLES: OnceLock<Mutex<HashMap<usize, &'static JetTable>>> = OnceLock::new();
    let cache = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(order)
        .or_insert_with(|| Box::leak(Box::new(build_table(order))))
}

/// A truncated Taylor expansion of a complex function of 4 real variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub order: usize,
    /// Coefficients indexed per `table(order).indices`; coeffs[α] = ∂^α f/α!.
    pub coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn zero(order: usize) -> Jet {
        Jet { order, coeffs: vec![Complex64::ZERO; table(order).indices.len()] }
    }

    pub fn constant(order: usize, v: Complex64) -> Jet {
        let mut j = Jet::zero(order);
        j.coeffs[0] = v;
        j
    }

    /// The coordinate function x_k (k in 0..4) expanded about `base`.
    pub fn coordinate(order: usize, k: usize, base: f64) -> Jet {
        let mut j = Jet::constant(order, Complex64::new(base, 0.0));
        if order >= 1 {
            let mut e = [0u8; 4];
            e[k] = 1;
            let r = table(order).rank[&e];
            j.coeffs[r] = Complex64::ONE;
        }
        j
    }

    /// Value at the base point.
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// First partial ∂_k at the base point (0 for order-0 jets).
    pub fn partial_value(&self, k: usize) -> Complex64 {
        if self.order == 0 {
            return Complex64::ZERO;
        }
        let mut e = [0u8; 4];
        e[k] = 1;
        self.coeffs[table(self.order).rank[&e]]
    }

    /// Taylor coefficient at an explicit multi-index (0 if beyond order).
    pub fn coeff(&self, alpha: MultiIndex) -> Complex64 {
        let t = table(self.order);
        match t.rank.get(&alpha) {
            Some(&r) => self.coeffs[r],
            None => Complex64::ZERO,
        }
    }

    /// Drop coefficients above `order` (no-op if already lower).
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let t = table(order);
        let src = table(self.order);
        let mut out = Jet::zero(order);
        for (i, &a) in t.indices.iter().enumerate() {
            out.coeffs[i] = self.coeffs[src.rank[&a]];
        }
        out
    }

    /// Partial derivative ∂_k as a jet of one lower order.
    pub fn partial(&self, k: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let mut out = Jet::zero(self.order - 1);
        let t = table(self.order);
        let dst = table(self.order - 1);
        for &(i, j, factor) in &t.diff[k] {
            // The shift target index set of order-1 lower is a prefix of the
            // full index set only by value, so re-rank through the multi-index.
            let a = t.indices[j as usize];
            out.coeffs[dst.rank[&a]] += self.coeffs[i as usize] * factor;
        }
        out
    }

    fn common_order(&self, rhs: &Jet) -> usize {
        self.order.min(rhs.order)
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        let n = self.common_order(rhs);
        let (a, b) = (self.truncate(n), rhs.truncate(n));
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        Jet { order: n, coeffs }
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        let n = self.common_order(rhs);
        let (a, b) = (self.truncate(n), rhs.truncate(n));
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
        Jet { order: n, coeffs }
    }

    pub fn neg(&self) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|x| -x).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|x| x * s).collect() }
    }

    pub fn mul(&self, rhs: &Jet) -> Jet {
        let n = self.common_order(rhs);
        let (a, b) = (self.truncate(n), rhs.truncate(n));
        let t = table(n);
        let mut out = Jet::zero(n);
        for &(ia, ib, ic) in &t.mul {
            let (ia, ib, ic) = (ia as usize, ib as usize, ic as usize);
            if ia == ib {
                out.coeffs[ic] += a.coeffs[ia] * b.coeffs[ia];
            } else {
                out.coeffs[ic] += a.coeffs[ia] * b.coeffs[ib] + a.coeffs[ib] * b.coeffs[ia];
            }
        }
        out
    }

    /// Compose a scalar Taylor series c_0 + c_1 t + c_2 t² + … with the
    /// nilpotent part of `self` (Horner form).  `series[k]` must be
    /// f^{(k)}(value)/k! for the analytic function being lifted.
    fn compose(&self, series: &[Complex64]) -> Jet {
        let n = self.order;
        let mut nil = self.clone();
        nil.coeffs[0] = Complex64::ZERO;
        let mut acc = Jet::constant(n, series[n]);
        for k in (0..n).rev() {
            acc = acc.mul(&nil);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let v = self.value().exp();
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *s = v / fact;
        }
        self.compose(&series)
    }

    /// Principal-branch logarithm; caller must reject |value| near 0.
    pub fn log(&self) -> Jet {
        let v = self.value();
        let mut series = vec![Complex64::ZERO; self.order + 1];
        series[0] = v.ln();
        // f^{(k)} = (−1)^{k−1}(k−1)!/v^k, so c_k = (−1)^{k−1}/(k v^k).
        let mut vpow = Complex64::ONE;
        for k in 1..=self.order {
            vpow *= v;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series[k] = sign / (k as f64) / vpow;
        }
        self.compose(&series)
    }

    pub fn sin(&self) -> Jet {
        let v = self.value();
        let (s, c) = (v.sin(), v.cos());
        // Derivative cycle sin → cos → −sin → −cos.
        let cycle = [s, c, -s, -c];
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 4] / fact;
        }
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let v = self.value();
        let (s, c) = (v.sin(), v.cos());
        let cycle = [c, -s, -c, s];
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 4] / fact;
        }
        self.compose(&series)
    }

    pub fn sinh(&self) -> Jet {
        let v = self.value();
        let (s, c) = (v.sinh(), v.cosh());
        let cycle = [s, c];
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 2] / fact;
        }
        self.compose(&series)
    }

    pub fn cosh(&self) -> Jet {
        let v = self.value();
        let (s, c) = (v.sinh(), v.cosh());
        let cycle = [c, s];
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut fact = 1.0;
        for (k, out) in series.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *out = cycle[k % 2] / fact;
        }
        self.compose(&series)
    }

    /// Principal-branch square root; caller must reject |value| near 0.
    pub fn sqrt(&self) -> Jet {
        let v = self.value();
        let r = v.sqrt();
        // Binomial series: c_k = √v · C(1/2, k) / v^k.
        let mut series = vec![Complex64::ZERO; self.order + 1];
        series[0] = r;
        let mut binom = Complex64::ONE;
        let mut vpow = Complex64::ONE;
        for k in 1..=self.order {
            binom *= Complex64::new(0.5 - (k as f64 - 1.0), 0.0) / (k as f64);
            vpow *= v;
            series[k] = r * binom / vpow;
        }
        self.compose(&series)
    }

    /// Multiplicative inverse; caller must reject |value| near 0.
    pub fn recip(&self) -> Jet {
        let v = self.value();
        let mut series = vec![Complex64::ZERO; self.order + 1];
        let mut p = v.inv();
        for s in series.iter_mut() {
            *s = p;
            p = -p / v;
        }
        self.compose(&series)
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        self.mul(&rhs.recip())
    }

    /// Integer power by binary exponentiation (negative via recip).
    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut acc = Jet::constant(self.order, Complex64::ONE);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Largest coefficient magnitude (scale estimate for tolerances).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn table_sizes() {
        // Number of multi-indices of degree ≤ n in 4 variables is C(n+4, 4).
        assert_eq!(table(0).indices.len(), 1);
        assert_eq!(table(1).indices.len(), 5);
        assert_eq!(table(2).indices.len(), 15);
        assert_eq!(table(4).indices.len(), 70);
    }

    #[test]
    fn coordinate_jet_shape() {
        let x2 = Jet::coordinate(3, 1, 7.5);
        assert_eq!(x2.value(), c(7.5, 0.0));
        assert_eq!(x2.partial_value(1), Complex64::ONE);
        assert_eq!(x2.partial_value(0), Complex64::ZERO);
        assert_eq!(x2.coeff([0, 2, 0, 0]), Complex64::ZERO);
    }

    #[test]
    fn square_of_coordinate() {
        // (x1)² at x1=3: value 9, ∂₁ = 6 → coeff 6, ∂₁₁/2! = 1.
        let x = Jet::coordinate(2, 0, 3.0);
        let sq = x.mul(&x);
        assert_eq!(sq.value(), c(9.0, 0.0));
        assert_eq!(sq.coeff([1, 0, 0, 0]), c(6.0, 0.0));
        assert_eq!(sq.coeff([2, 0, 0, 0]), c(1.0, 0.0));
    }

    #[test]
    fn exp_series_along_x1() {
        let x = Jet::coordinate(4, 0, 0.0);
        let e = x.exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (k, &want) in expect.iter().enumerate() {
            let got = e.coeff([k as u8, 0, 0, 0]);
            assert_relative_eq!(got.re, want, epsilon = 1e-14);
            assert_relative_eq!(got.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_exp_roundtrip() {
        let x = Jet::coordinate(4, 2, 0.3);
        let f = x.mul(&x).add(&Jet::constant(4, c(1.0, 0.5)));
        let back = f.exp().log();
        for (a, b) in back.coeffs.iter().zip(&f.coeffs) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let x = Jet::coordinate(4, 0, 0.7);
        let y = Jet::coordinate(4, 3, -0.2);
        let f = x.mul(&x).add(&y.mul(&y)).add(&Jet::constant(4, c(2.0, 1.0)));
        let r = f.sqrt();
        let sq = r.mul(&r);
        for (a, b) in sq.coeffs.iter().zip(&f.coeffs) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn recip_multiplies_to_one() {
        let x = Jet::coordinate(4, 1, 0.4);
        let f = x.exp().add(&Jet::constant(4, c(0.5, -0.3)));
        let one = f.mul(&f.recip());
        assert_relative_eq!(one.value().re, 1.0, epsilon = 1e-12);
        for coeff in &one.coeffs[1..] {
            assert!(coeff.norm() < 1e-12);
        }
    }

    #[test]
    fn mixed_partial_of_product() {
        // f = x1·x3·sin(x2): ∂²f/∂x1∂x3 = sin(x2).
        let x1 = Jet::coordinate(3, 0, 0.5);
        let x2 = Jet::coordinate(3, 1, 0.9);
        let x3 = Jet::coordinate(3, 2, -1.1);
        let f = x1.mul(&x3).mul(&x2.sin());
        // coeff at (1,0,1,0) is ∂₁∂₃ f / (1!·1!) = sin(0.9).
        assert_relative_eq!(f.coeff([1, 0, 1, 0]).re, 0.9f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn partial_reduces_order() {
        let x1 = Jet::coordinate(4, 0, 2.0);
        let f = x1.powi(3); // x³: ∂₁ = 3x² = 12 at x=2
        let d = f.partial(0);
        assert_eq!(d.order, 3);
        assert_relative_eq!(d.value().re, 12.0, epsilon = 1e-13);
        assert_relative_eq!(d.partial_value(0).re, 12.0, epsilon = 1e-13); // 6x
    }

    #[test]
    fn ring_axioms_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let rand_jet = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut j = Jet::zero(3);
            for coeff in j.coeffs.iter_mut() {
                *coeff = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            j
        };
        for _ in 0..20 {
            let (a, b, cc) = (rand_jet(&mut rng), rand_jet(&mut rng), rand_jet(&mut rng));
            let assoc_l = a.mul(&b).mul(&cc);
            let assoc_r = a.mul(&b.mul(&cc));
            let dist_l = a.mul(&b.add(&cc));
            let dist_r = a.mul(&b).add(&a.mul(&cc));
            for i in 0..assoc_l.coeffs.len() {
                assert!((assoc_l.coeffs[i] - assoc_r.coeffs[i]).norm() < 1e-12);
                assert!((dist_l.coeffs[i] - dist_r.coeffs[i]).norm() < 1e-12);
            }
        }
    }
}
