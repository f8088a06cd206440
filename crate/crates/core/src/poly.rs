//! Exact values in the symbol `N`: Laurent polynomials, rational functions
//! with denominators factored over `N + k`, and polynomials in symbolic
//! moments with rational-function coefficients.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// Commutative ring operations shared by the exact value types.
pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(q: &BigRational) -> Self;
    /// Multiplication by a rational function of `N`.
    fn mul_ratfunc(&self, r: &RatFunc) -> Self;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

#[cfg(test)]
pub(crate) fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Exact map from exponent of `N` to a nonzero rational coefficient.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<i32, BigRational>,
}

impl LaurentPoly {
    pub fn zero() -> LaurentPoly {
        LaurentPoly::default()
    }

    pub fn constant(c: BigRational) -> LaurentPoly {
        LaurentPoly::monomial(0, c)
    }

    pub fn monomial(exp: i32, c: BigRational) -> LaurentPoly {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&c) {
            terms.insert(exp, c);
        }
        LaurentPoly { terms }
    }

    /// `N^exp`.
    pub fn n_pow(exp: i32) -> LaurentPoly {
        LaurentPoly::monomial(exp, <BigRational as One>::one())
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i32, BigRational)>) -> LaurentPoly {
        let mut p = LaurentPoly::zero();
        for (e, c) in terms {
            p.add_term(e, &c);
        }
        p
    }

    pub fn add_term(&mut self, exp: i32, c: &BigRational) {
        if Zero::is_zero(c) {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(<BigRational as Zero>::zero);
        *slot += c;
        if Zero::is_zero(&*slot) {
            self.terms.remove(&exp);
        }
    }

    pub fn coeff(&self, exp: i32) -> BigRational {
        self.terms.get(&exp).cloned().unwrap_or_else(<BigRational as Zero>::zero)
    }

    /// Terms in descending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigRational)> {
        self.terms.iter().rev().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest exponent and its coefficient.
    pub fn leading(&self) -> Option<(i32, BigRational)> {
        self.terms.iter().next_back().map(|(e, c)| (*e, c.clone()))
    }

    pub fn lowest(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    /// Second-highest exponent, if any.
    pub fn subleading_exp(&self) -> Option<i32> {
        self.terms.keys().rev().nth(1).copied()
    }

    pub fn scale(&self, c: &BigRational) -> LaurentPoly {
        if Zero::is_zero(c) {
            return LaurentPoly::zero();
        }
        LaurentPoly {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
        }
    }

    pub fn shift(&self, by: i32) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, x)| (e + by, x.clone())).collect(),
        }
    }

    /// Multiplication by `N + k`.
    pub fn mul_linear(&self, k: i64) -> LaurentPoly {
        let mut out = self.shift(1);
        if k != 0 {
            let kk = BigRational::from_integer(k.into());
            for (e, c) in &self.terms {
                out.add_term(*e, &(c * &kk));
            }
        }
        out
    }

    /// Substitutes `N → t·N`.
    pub fn substitute_scale(&self, t: &BigRational) -> LaurentPoly {
        LaurentPoly::from_terms(
            self.terms
                .iter()
                .map(|(e, c)| (*e, c * pow_rat(t, *e))),
        )
    }

    pub fn eval(&self, n: &BigRational) -> BigRational {
        self.terms.iter().map(|(e, c)| c * pow_rat(n, *e)).sum()
    }

    pub fn eval_f64(&self, n: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64().unwrap_or(f64::NAN) * n.powi(*e))
            .sum()
    }

    fn div_linear_exact(&self, k: i64) -> LaurentPoly {
        // synthetic division by N − r, r = −k, on N^low · P(N)
        let (Some(low), Some((high, _))) = (self.lowest(), self.leading()) else {
            return LaurentPoly::zero();
        };
        let r = BigRational::from_integer((-k).into());
        let mut q = LaurentPoly::zero();
        let mut carry = <BigRational as Zero>::zero();
        for e in (low + 1..=high).rev() {
            carry = self.coeff(e) + &r * carry;
            q.add_term(e - 1, &carry);
        }
        debug_assert!(Zero::is_zero(&(self.coeff(low) + &r * carry)), "inexact division by N+{k}");
        q
    }
}

fn pow_rat(x: &BigRational, e: i32) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

impl Ring for LaurentPoly {
    fn zero() -> Self {
        LaurentPoly::zero()
    }
    fn one() -> Self {
        LaurentPoly::n_pow(0)
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1 + e2, &(c1 * c2));
            }
        }
        out
    }
    fn neg(&self) -> Self {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_rational(q: &BigRational) -> Self {
        LaurentPoly::constant(q.clone())
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        let out = RatFunc::from(self.clone()).mul(r);
        out.to_laurent()
            .expect("product with a rational function left the Laurent ring")
    }
}

impl fmt::Display for LaurentPoly {
    /// Human-readable form such as `N + 1/2 N^-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono = match e {
                0 => String::new(),
                1 => "N".to_string(),
                _ => format!("N^{e}"),
            };
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{a} {mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl LaurentPoly {
    /// LaTeX rendering, e.g. `N - \frac{1}{2} N^{-1}`.
    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (e, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let coef = if a.is_integer() {
                a.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", a.numer(), a.denom())
            };
            match e {
                0 => s.push_str(&coef),
                _ => {
                    if !a.is_one() {
                        s.push_str(&coef);
                        s.push(' ');
                    }
                    if e == 1 {
                        s.push('N');
                    } else {
                        s.push_str(&format!("N^{{{e}}}"));
                    }
                }
            }
        }
        s
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(i32, String)> = self.terms().map(|(e, c)| (e, c.to_string())).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<(i32, String)> = Vec::deserialize(d)?;
        let mut p = LaurentPoly::zero();
        for (e, c) in v {
            let q: BigRational = c.parse().map_err(serde::de::Error::custom)?;
            p.add_term(e, &q);
        }
        Ok(p)
    }
}

impl Ring for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        r.as_constant()
            .map(|c| self * c)
            .expect("rational scalar multiplied by a non-constant function of N")
    }
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_rational(q: &BigRational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        r.as_constant()
            .map(|c| self * c.to_f64().unwrap_or(f64::NAN))
            .expect("float scalar multiplied by a non-constant function of N")
    }
}

/// A rational function `num / ∏_{k≠0} (N + k)^{e_k}` with a Laurent
/// numerator. Normal form: no factor `N + k` divides the numerator, so
/// equality is structural.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RatFunc {
    num: LaurentPoly,
    den: BTreeMap<i64, u32>,
}

impl From<LaurentPoly> for RatFunc {
    fn from(num: LaurentPoly) -> RatFunc {
        RatFunc {
            num,
            den: BTreeMap::new(),
        }
    }
}

impl RatFunc {
    /// `num / ∏ (N + k)^{e}`; factors with `k = 0` move into the numerator.
    pub fn new(num: LaurentPoly, den: impl IntoIterator<Item = (i64, u32)>) -> RatFunc {
        let mut num = num;
        let mut factors: BTreeMap<i64, u32> = BTreeMap::new();
        for (k, e) in den {
            if e == 0 {
                continue;
            }
            if k == 0 {
                num = num.shift(-(e as i32));
            } else {
                *factors.entry(k).or_default() += e;
            }
        }
        let mut r = RatFunc { num, den: factors };
        r.normalize();
        r
    }

    /// `1 / (N + k)`.
    pub fn inv_linear(k: i64) -> RatFunc {
        RatFunc::new(LaurentPoly::n_pow(0), [(k, 1)])
    }

    pub fn constant(c: BigRational) -> RatFunc {
        RatFunc::from(LaurentPoly::constant(c))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let ks: Vec<i64> = self.den.keys().copied().collect();
        for k in ks {
            let root = BigRational::from_integer((-k).into());
            loop {
                let e = self.den[&k];
                if e == 0 || !Zero::is_zero(&self.num.eval(&root)) {
                    break;
                }
                self.num = self.num.div_linear_exact(k);
                *self.den.get_mut(&k).unwrap() -= 1;
            }
            if self.den[&k] == 0 {
                self.den.remove(&k);
            }
        }
    }

    pub fn numerator(&self) -> &LaurentPoly {
        &self.num
    }

    /// Denominator factors `(k, e)` for `(N + k)^e`.
    pub fn denominator(&self) -> &BTreeMap<i64, u32> {
        &self.den
    }

    pub fn is_laurent(&self) -> bool {
        self.den.is_empty()
    }

    pub fn to_laurent(&self) -> Option<LaurentPoly> {
        self.is_laurent().then(|| self.num.clone())
    }

    pub fn as_constant(&self) -> Option<&BigRational> {
        if !self.is_laurent() {
            return None;
        }
        if self.num.is_zero() {
            return None;
        }
        match self.num.leading() {
            Some((0, _)) if self.num.terms.len() == 1 => self.num.terms.get(&0),
            _ => None,
        }
    }

    fn den_degree(&self) -> i32 {
        self.den.values().map(|&e| e as i32).sum()
    }

    /// Leading large-`N` behaviour `c · N^e`.
    pub fn leading(&self) -> Option<(i32, BigRational)> {
        self.num
            .leading()
            .map(|(e, c)| (e - self.den_degree(), c))
    }

    /// Laurent expansion at large `N`, keeping exponents `≥ min_exp`.
    pub fn expand(&self, min_exp: i32) -> LaurentPoly {
        // 1/(N+k) = Σ_j (−k)^j N^{−1−j}
        let mut acc = self.num.clone();
        for (&k, &e) in &self.den {
            for _ in 0..e {
                let mut next = LaurentPoly::zero();
                for (pe, c) in &acc.terms {
                    let mut j = 0i32;
                    let mut coeff = c.clone();
                    while pe - 1 - j >= min_exp {
                        next.add_term(pe - 1 - j, &coeff);
                        coeff *= BigRational::from_integer((-k).into());
                        j += 1;
                    }
                }
                acc = next;
            }
        }
        acc
    }

    pub fn eval(&self, n: &BigRational) -> Option<BigRational> {
        let mut d = <BigRational as One>::one();
        for (&k, &e) in &self.den {
            d *= num_traits::pow(n + BigRational::from_integer(k.into()), e as usize);
        }
        if Zero::is_zero(&d) || Zero::is_zero(n) && self.num.lowest().is_some_and(|l| l < 0) {
            return None;
        }
        Some(self.num.eval(n) / d)
    }

    pub fn eval_f64(&self, n: f64) -> f64 {
        let mut d = 1.0;
        for (&k, &e) in &self.den {
            d *= (n + k as f64).powi(e as i32);
        }
        self.num.eval_f64(n) / d
    }

    /// Polynomial pair `(P, Q)` with `self = P / Q`, integer coefficients,
    /// lowest degree first, overall content 1, positive leading `Q`.
    pub fn to_polynomials(&self) -> (Vec<BigInt>, Vec<BigInt>) {
        if self.num.is_zero() {
            return (vec![], vec![BigInt::one()]);
        }
        let low = self.num.lowest().unwrap().min(0);
        let p = self.num.shift(-low);
        let mut q = LaurentPoly::n_pow(-low);
        for (&k, &e) in &self.den {
            for _ in 0..e {
                q = q.mul_linear(k);
            }
        }
        let lcm = p
            .terms
            .values()
            .chain(q.terms.values())
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let to_ints = |x: &LaurentPoly| -> Vec<BigInt> {
            let deg = x.leading().map_or(0, |(e, _)| e);
            (0..=deg)
                .map(|e| (x.coeff(e) * BigRational::from_integer(lcm.clone())).to_integer())
                .collect()
        };
        let (mut pi, mut qi) = (to_ints(&p), to_ints(&q));
        let g = pi
            .iter()
            .chain(&qi)
            .fold(BigInt::zero(), |g, c| g.gcd(c));
        for c in pi.iter_mut().chain(qi.iter_mut()) {
            *c /= &g;
        }
        (pi, qi)
    }

    /// `"p0,p1,…/q0,q1,…"`, lowest degree first.
    pub fn to_coeff_string(&self) -> String {
        let (p, q) = self.to_polynomials();
        let j = |v: &[BigInt]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        format!("{}/{}", j(&p), j(&q))
    }

    /// Inverse of [`RatFunc::to_coeff_string`]; the denominator must split
    /// into integer linear factors.
    pub fn parse_coeff_string(s: &str) -> Result<RatFunc> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("missing `/` in `{s}`")))?;
        let ints = |t: &str| -> Result<Vec<BigInt>> {
            if t.trim().is_empty() {
                return Ok(vec![]);
            }
            t.split(',')
                .map(|x| x.trim().parse::<BigInt>().map_err(|e| Error::Parse(e.to_string())))
                .collect()
        };
        let (p, q) = (ints(a)?, ints(b)?);
        let to_poly = |v: &[BigInt]| {
            LaurentPoly::from_terms(
                v.iter()
                    .enumerate()
                    .map(|(e, c)| (e as i32, BigRational::from_integer(c.clone()))),
            )
        };
        let mut qp = to_poly(&q);
        if qp.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        let low = qp.lowest().unwrap();
        qp = qp.shift(-low);
        let lead = qp.leading().unwrap().1;
        let c0 = (qp.coeff(0) / &lead).to_integer();
        let mut factors: Vec<(i64, u32)> = Vec::new();
        let mut cand: Vec<i64> = Vec::new();
        let c0i = c0.abs().to_i64().ok_or_else(|| Error::Parse("denominator too large".into()))?;
        for d in 1..=c0i {
            if c0i % d == 0 {
                cand.push(d);
                cand.push(-d);
            }
        }
        for k in cand {
            let root = BigRational::from_integer((-k).into());
            while qp.leading().is_some_and(|(e, _)| e > 0) && Zero::is_zero(&qp.eval(&root)) {
                qp = qp.div_linear_exact(k);
                factors.push((k, 1));
            }
        }
        if qp.leading().is_none_or(|(e, _)| e != 0) {
            return Err(Error::Parse(format!("denominator of `{s}` does not split")));
        }
        let scale = qp.coeff(0).recip();
        Ok(RatFunc::new(to_poly(&p).shift(-low).scale(&scale), factors))
    }

    /// Rendering with the denominator factored, e.g. `(-1)/(N (N - 1) (N + 1))`.
    pub fn to_latex(&self) -> String {
        if self.is_laurent() {
            return self.num.to_latex();
        }
        let den: Vec<String> = self
            .den
            .iter()
            .map(|(&k, &e)| {
                let base = if k > 0 {
                    format!("(N + {k})")
                } else {
                    format!("(N - {})", -k)
                };
                if e == 1 {
                    base
                } else {
                    format!("{base}^{{{e}}}")
                }
            })
            .collect();
        format!("\\frac{{{}}}{{{}}}", self.num.to_latex(), den.join(" "))
    }
}

impl Ring for RatFunc {
    fn zero() -> Self {
        RatFunc::default()
    }
    fn one() -> Self {
        RatFunc::from(LaurentPoly::n_pow(0))
    }
    fn add(&self, other: &Self) -> Self {
        if self.num.is_zero() {
            return other.clone();
        }
        if other.num.is_zero() {
            return self.clone();
        }
        let mut den = self.den.clone();
        for (&k, &e) in &other.den {
            let slot = den.entry(k).or_default();
            *slot = (*slot).max(e);
        }
        let lift = |r: &RatFunc| {
            let mut p = r.num.clone();
            for (&k, &e) in &den {
                for _ in r.den.get(&k).copied().unwrap_or(0)..e {
                    p = p.mul_linear(k);
                }
            }
            p
        };
        let mut out = RatFunc {
            num: Ring::add(&lift(self), &lift(other)),
            den,
        };
        out.normalize();
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut den = self.den.clone();
        for (&k, &e) in &other.den {
            *den.entry(k).or_default() += e;
        }
        let mut out = RatFunc {
            num: Ring::mul(&self.num, &other.num),
            den,
        };
        out.normalize();
        out
    }
    fn neg(&self) -> Self {
        RatFunc {
            num: Ring::neg(&self.num),
            den: self.den.clone(),
        }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn from_rational(q: &BigRational) -> Self {
        RatFunc::constant(q.clone())
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        Ring::mul(self, r)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_laurent() {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})", self.num)?;
        write!(f, "/(")?;
        let parts: Vec<String> = self
            .den
            .iter()
            .map(|(&k, &e)| {
                let base = if k > 0 {
                    format!("(N+{k})")
                } else {
                    format!("(N-{})", -k)
                };
                if e == 1 {
                    base
                } else {
                    format!("{base}^{e}")
                }
            })
            .collect();
        write!(f, "{})", parts.join(""))
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for RatFunc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_coeff_string().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatFunc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        RatFunc::parse_coeff_string(&s).map_err(serde::de::Error::custom)
    }
}

/// Polynomial in named moment symbols with rational-function coefficients.
/// A monomial is the sorted multiset of its symbol names.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Symbolic {
    terms: BTreeMap<Vec<String>, RatFunc>,
}

impl Symbolic {
    pub fn symbol(name: &str) -> Symbolic {
        let mut terms = BTreeMap::new();
        terms.insert(vec![name.to_string()], Ring::one());
        Symbolic { terms }
    }

    pub fn coeff(&self, monomial: &[&str]) -> RatFunc {
        let mut key: Vec<String> = monomial.iter().map(|s| s.to_string()).collect();
        key.sort();
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<String>, &RatFunc)> {
        self.terms.iter()
    }

    fn insert(&mut self, key: Vec<String>, c: RatFunc) {
        if Ring::is_zero(&c) {
            return;
        }
        let slot = self.terms.entry(key.clone()).or_default();
        *slot = Ring::add(slot, &c);
        if Ring::is_zero(slot) {
            self.terms.remove(&key);
        }
    }
}

impl Ring for Symbolic {
    fn zero() -> Self {
        Symbolic::default()
    }
    fn one() -> Self {
        let mut s = Symbolic::default();
        s.insert(vec![], Ring::one());
        s
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = Symbolic::default();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let mut k: Vec<String> = k1.iter().chain(k2).cloned().collect();
                k.sort();
                out.insert(k, Ring::mul(c1, c2));
            }
        }
        out
    }
    fn neg(&self) -> Self {
        Symbolic {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), Ring::neg(c))).collect(),
        }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_rational(q: &BigRational) -> Self {
        let mut s = Symbolic::default();
        s.insert(vec![], RatFunc::constant(q.clone()));
        s
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        let mut out = Symbolic::default();
        for (k, c) in &self.terms {
            out.insert(k.clone(), Ring::mul(c, r));
        }
        out
    }
}

impl fmt::Display for Symbolic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                if k.is_empty() {
                    format!("[{c}]")
                } else {
                    format!("[{c}]*{}", k.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for Symbolic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
