//! Exact eigenvalues of `iS` for small real skew-symmetric `S`, computed in
//! rational arithmetic without touching the floating-point solver.
//!
//! `det(x I - S) = x^(N mod 2) * prod_j (x^2 + mu_j^2)`, and the coefficient
//! of `x^(N - 2m)` is the sum of the `2m x 2m` principal minors. Substituting
//! `u = -x^2` gives a polynomial whose roots are the `mu_j^2 >= 0`. Those are
//! isolated with Sturm sequences after a square-free factorization, so
//! repeated levels keep their multiplicity.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

type Q = BigRational;

/// Coefficients, lowest degree first, with no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
struct Poly(Vec<Q>);

impl Poly {
    fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Poly(c)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> &Q {
        self.0.last().expect("nonzero polynomial")
    }

    fn monic(&self) -> Poly {
        let l = self.lead().clone();
        Poly(self.0.iter().map(|c| c / &l).collect())
    }

    fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Q::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let zero = Q::zero();
        Poly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&zero) - other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let mut r = self.0.clone();
        if self.0.len() < d.0.len() {
            return (Poly(vec![]), self.clone());
        }
        let mut q = vec![Q::zero(); self.0.len() - d.0.len() + 1];
        for i in (0..q.len()).rev() {
            let c = &r[i + d.degree()] / d.lead();
            for (j, dc) in d.0.iter().enumerate() {
                r[i + j] -= &c * dc;
            }
            q[i] = c;
        }
        r.truncate(d.degree());
        (Poly::new(q), Poly::new(r))
    }

    fn div_exact(&self, d: &Poly) -> Poly {
        let (q, r) = self.div_rem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }
}

/// Yun's algorithm: `(factor, multiplicity)` with square-free factors.
fn square_free(f: &Poly) -> Vec<(Poly, usize)> {
    let f = f.monic();
    let df = f.derivative();
    if df.is_zero() {
        return vec![];
    }
    let a0 = f.gcd(&df);
    let mut b = f.div_exact(&a0);
    let c = df.div_exact(&a0);
    let mut d = c.sub(&b.derivative());
    let mut out = Vec::new();
    let mut i = 1;
    while b.degree() > 0 {
        let a = b.gcd(&d);
        let b_next = b.div_exact(&a);
        let c_next = d.div_exact(&a);
        d = c_next.sub(&b_next.derivative());
        if a.degree() > 0 {
            out.push((a, i));
        }
        b = b_next;
        i += 1;
    }
    out
}

fn sturm_chain(f: &Poly) -> Vec<Poly> {
    let mut chain = vec![f.clone(), f.derivative()];
    loop {
        let n = chain.len();
        let r = chain[n - 2].div_rem(&chain[n - 1]).1;
        if r.is_zero() {
            return chain;
        }
        chain.push(Poly(r.0.iter().map(|c| -c).collect()));
    }
}

fn sign_changes(chain: &[Poly], x: &Q) -> usize {
    let signs: Vec<bool> = chain
        .iter()
        .map(|p| p.eval(x))
        .filter(|v| !v.is_zero())
        .map(|v| v.is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Real roots of a square-free polynomial in `(lo, hi]`, each refined to an
/// interval narrower than `width`.
fn isolate(f: &Poly, lo: Q, hi: Q, width: &Q) -> Vec<Q> {
    let chain = sturm_chain(f);
    let mut roots = Vec::new();
    let mut stack = vec![(lo, hi)];
    let two = Q::from_integer(BigInt::from(2));
    while let Some((a, b)) = stack.pop() {
        let count = sign_changes(&chain, &a) - sign_changes(&chain, &b);
        if count == 0 {
            continue;
        }
        if count == 1 && &(&b - &a) < width {
            roots.push((&a + &b) / &two);
            continue;
        }
        let m = (&a + &b) / &two;
        stack.push((a, m.clone()));
        stack.push((m, b));
    }
    roots
}

fn determinant(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut det = Q::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Q::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= &m[col][col];
        for r in col + 1..n {
            let f = &m[r][col] / &m[col][col];
            for c in col..n {
                let v = &f * &m[col][c];
                m[r][c] -= v;
            }
        }
    }
    det
}

/// Sum of all principal minors of order `order`.
fn principal_minor_sum(s: &[Vec<Q>], order: usize) -> Q {
    let n = s.len();
    let mut total = Q::zero();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != order {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = idx.iter().map(|&i| idx.iter().map(|&j| s[i][j].clone()).collect()).collect();
        total += determinant(sub);
    }
    total
}

/// Ascending eigenvalues of `iS` for a dense row-major skew-symmetric `s`.
pub fn exact_spectrum(s: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(s.len(), n * n);
    assert!(n <= 12, "principal-minor expansion is exponential in N");
    let exact: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| Q::from_float(s[i * n + j]).expect("finite entry")).collect())
        .collect();
    let half = n / 2;
    // Q(u) = sum_m E_{2m} (-u)^(half - m), coefficient index = half - m.
    let mut coeffs = vec![Q::zero(); half + 1];
    for m in 0..=half {
        let e = if m == 0 { Q::one() } else { principal_minor_sum(&exact, 2 * m) };
        let power = half - m;
        coeffs[power] = if power.is_multiple_of(2) { e } else { -e };
    }
    let q = Poly::new(coeffs);

    let bound = Q::one()
        + q.0
            .iter()
            .map(|c| (c / q.lead()).abs())
            .fold(Q::zero(), |a, b| if b > a { b } else { a });
    let width = &bound / Q::from_integer(BigInt::one() << 110usize);
    let lo = -Q::one();

    let mut levels = Vec::with_capacity(n);
    if n % 2 == 1 {
        levels.push(0.0);
    }
    if half > 0 {
        for (factor, mult) in square_free(&q) {
            for u in isolate(&factor, lo.clone(), bound.clone(), &width) {
                let mu = u.to_f64().expect("finite root").max(0.0).sqrt();
                for _ in 0..mult {
                    levels.push(mu);
                    levels.push(-mu);
                }
            }
        }
    }
    assert_eq!(levels.len(), n, "oracle lost roots");
    levels.sort_by(f64::total_cmp);
    levels
}
