//! Exact unitary Weingarten functions.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::perm::{all_perms, factorial, moebius_nc, IntegerPartition, Perm};
use crate::poly::{LaurentPoly, RatFunc, Ring};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// `χ^λ(μ)` by Murnaghan–Nakayama on beta-sets.
pub fn character(lambda: &IntegerPartition, mu: &IntegerPartition) -> BigInt {
    assert_eq!(lambda.n(), mu.n(), "partitions of different sizes");
    let l = lambda.num_parts();
    let beta: Vec<usize> = lambda
        .parts()
        .iter()
        .enumerate()
        .map(|(i, &p)| p + l - 1 - i)
        .collect();
    mn(&beta, mu.parts())
}

fn mn(beta: &[usize], mu: &[usize]) -> BigInt {
    let Some((&r, rest)) = mu.split_first() else {
        return BigInt::from(1);
    };
    let mut total = BigInt::from(0);
    for (i, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let between = beta.iter().filter(|&&x| x > b - r && x < b).count();
        let mut next = beta.to_vec();
        next[i] = b - r;
        let v = mn(&next, rest);
        if between % 2 == 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    total
}

/// `χ^λ(id)` by the hook length formula.
pub fn dimension(lambda: &IntegerPartition) -> BigInt {
    let parts = lambda.parts();
    let mut hooks = BigInt::from(1);
    for (i, &row) in parts.iter().enumerate() {
        for j in 0..row {
            let below = parts[i + 1..].iter().filter(|&&r| r > j).count();
            hooks *= BigInt::from(row - j + below);
        }
    }
    BigInt::from(factorial(lambda.n())) / hooks
}

fn cache() -> &'static Mutex<HashMap<IntegerPartition, RatFunc>> {
    static CACHE: OnceLock<Mutex<HashMap<IntegerPartition, RatFunc>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `W(μ) = (1/n!) Σ_λ χ^λ(id) χ^λ(μ) / ∏_{(i,j)∈λ} (N + j − i)`.
pub fn weingarten_of_type(mu: &IntegerPartition) -> Result<RatFunc> {
    let n = mu.n();
    check("weingarten degree", n as u64, caps().weingarten as u64)?;
    if let Some(w) = cache().lock().unwrap().get(mu) {
        return Ok(w.clone());
    }
    let mut total = RatFunc::zero();
    for lambda in IntegerPartition::all(n) {
        let chi = character(&lambda, mu);
        if chi == BigInt::from(0) {
            continue;
        }
        let coeff = BigRational::new(dimension(&lambda) * chi, BigInt::from(factorial(n)));
        let mut den: Vec<(i64, u32)> = Vec::new();
        for (i, &row) in lambda.parts().iter().enumerate() {
            for j in 0..row {
                den.push((j as i64 - i as i64, 1));
            }
        }
        total = total.add(&RatFunc::new(LaurentPoly::constant(coeff), den));
    }
    cache().lock().unwrap().insert(mu.clone(), total.clone());
    Ok(total)
}

pub fn weingarten(nu: &Perm) -> Result<RatFunc> {
    weingarten_of_type(&nu.cycle_type())
}

/// Leading term `𝖬(ν) N^{−n−|ν|}` as `(coefficient, exponent)`.
pub fn weingarten_asymptotic(nu: &Perm) -> (BigRational, i32) {
    (moebius_nc(nu), -((nu.degree() + nu.length()) as i32))
}

/// `∏_c W(s_c t_c⁻¹)`.
pub fn weingarten_product(s: &[Perm], t: &[Perm]) -> Result<RatFunc> {
    if s.len() != t.len() {
        return Err(Error::Shape(format!("{} vs {} colors", s.len(), t.len())));
    }
    let mut out = RatFunc::one();
    for (a, b) in s.iter().zip(t) {
        if a.degree() != b.degree() {
            return Err(Error::DegreeMismatch(a.degree(), b.degree()));
        }
        out = out.mul(&weingarten(&a.mul(&b.inverse()))?);
    }
    Ok(out)
}

/// `Σ_{u∈S_n} W(x u⁻¹) N^{#u}` for a representative `x` of each cycle type;
/// the Gram identity says this is `δ_{x,id}`.
pub fn gram_residuals(n: usize) -> Result<Vec<(IntegerPartition, RatFunc)>> {
    let perms = all_perms(n);
    IntegerPartition::all(n)
        .into_iter()
        .map(|mu| {
            let x = mu.representative();
            let mut s = RatFunc::zero();
            for u in &perms {
                let w = weingarten(&x.mul(&u.inverse()))?;
                s = s.add(&w.mul(&RatFunc::from(LaurentPoly::n_pow(u.num_cycles() as i32))));
            }
            Ok((mu, s))
        })
        .collect()
}
