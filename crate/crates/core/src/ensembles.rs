//! Exact Gaussian and Wishart moments, scaling functions, the melonic
//! covariance fixed point and the subadditivity probe.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::invariants::{canonicalize, distance_to, k_pure, k_pure_with, Flavor, InvariantClass, PermTuple};
use crate::melonic::is_melonic;
use crate::par;
use crate::perm::{enumerate_noncrossing, sym_group, Perm};
use crate::poly::LaurentPoly;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Sums `N^{n − d(𝛔,η)}` over the pairings `η` accepted by `keep`.
fn wick_sum(s: &PermTuple, keep: impl Fn(&Perm) -> bool + Sync + Send) -> Result<LaurentPoly> {
    let n = s.n();
    check("pairing scan degree", n as u64, caps().eta as u64)?;
    let group = sym_group(n);
    let counts = par::map_reduce(
        &group,
        |eta| {
            let mut m = BTreeMap::new();
            if keep(eta) {
                *m.entry(n as i32 - distance_to(s, eta) as i32).or_insert(0u64) += 1;
            }
            m
        },
        BTreeMap::new,
        |mut a, b| {
            for (e, c) in b {
                *a.entry(e).or_insert(0) += c;
            }
            a
        },
    );
    Ok(LaurentPoly::from_terms(
        counts
            .into_iter()
            .map(|(e, c)| (e, BigRational::from_integer(BigInt::from(c)))),
    ))
}

/// `E[Tr_𝛔(T, T̄)] = Σ_η N^{n − d(𝛔,η)}` for the unit-covariance Gaussian
/// with `E[T T̄] = N^{1−D}`.
pub fn gaussian_moment_exact(s: &PermTuple) -> Result<LaurentPoly> {
    wick_sum(s, |_| true)
}

/// As [`gaussian_moment_exact`] with covariance `C`: every pairing carries `C^n`.
pub fn gaussian_moment_with_covariance(s: &PermTuple, c: &BigRational) -> Result<LaurentPoly> {
    let cn = num_traits::pow(c.clone(), s.n());
    Ok(gaussian_moment_exact(s)?.scale(&cn))
}

fn union_of(components: &[PermTuple]) -> Result<PermTuple> {
    let (first, rest) = components
        .split_first()
        .ok_or_else(|| Error::Precondition("no components".into()))?;
    rest.iter().try_fold(first.clone(), |acc, c| acc.disjoint_union(c))
}

/// Classical cumulant of `Tr_{𝛔_1}, …, Tr_{𝛔_q}`: the Wick sum restricted to
/// pairings that connect the disjoint union.
pub fn gaussian_cumulant_exact(components: &[PermTuple]) -> Result<LaurentPoly> {
    for c in components {
        if k_pure(c) != 1 {
            return Err(Error::Precondition(format!("component {c} is not purely connected")));
        }
    }
    let u = union_of(components)?;
    wick_sum(&u, |eta| k_pure_with(&u, eta) == 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScalingReport {
    #[serde(serialize_with = "ser_class")]
    pub invariant: InvariantClass,
    pub scaling_exponent: i64,
    #[serde(serialize_with = "ser_bigint")]
    pub asymptotic_moment: BigInt,
    #[serde(serialize_with = "ser_perms")]
    pub minimizer_pairings: Vec<Perm>,
}

fn ser_class<S: serde::Serializer>(c: &InvariantClass, s: S) -> std::result::Result<S::Ok, S::Error> {
    c.to_json().serialize(s)
}

fn ser_bigint<S: serde::Serializer>(b: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

fn ser_perms<S: serde::Serializer>(p: &[Perm], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<String> = p.iter().map(Perm::to_string).collect();
    v.serialize(s)
}

/// `r = n − min{d(𝛕,η) : K_p(𝛕,η) = 1}` with its minimizers.
fn scaling_of(t: &PermTuple) -> Result<(i64, Vec<Perm>)> {
    let n = t.n();
    check("pairing scan degree", n as u64, caps().eta as u64)?;
    let group = sym_group(n);
    let vals = par::map(&group, |eta| (k_pure_with(t, eta) == 1).then(|| distance_to(t, eta)));
    let m = vals.iter().flatten().min().copied().expect("some pairing connects");
    let args = group
        .iter()
        .zip(&vals)
        .filter(|(_, v)| **v == Some(m))
        .map(|(e, _)| e.clone())
        .collect();
    Ok((n as i64 - m as i64, args))
}

/// Pure Gaussian scaling `r(𝛔)` and asymptotic moment `φ_𝛔`.
pub fn gaussian_scaling(s: &PermTuple) -> Result<ScalingReport> {
    let (r, mins) = scaling_of(s)?;
    Ok(ScalingReport {
        invariant: canonicalize(s, Flavor::Pure)?,
        scaling_exponent: r,
        asymptotic_moment: BigInt::from(mins.len()),
        minimizer_pairings: mins,
    })
}

/// Wishart scaling `r_W(𝛔) = r(𝛔, id)` of a mixed invariant.
pub fn wishart_scaling(s: &PermTuple) -> Result<ScalingReport> {
    let (r, mins) = scaling_of(&s.extended(&Perm::identity(s.n())))?;
    Ok(ScalingReport {
        invariant: canonicalize(s, Flavor::Mixed)?,
        scaling_exponent: r,
        asymptotic_moment: BigInt::from(mins.len()),
        minimizer_pairings: mins,
    })
}

fn t_pow(t: &BigRational, k: usize) -> BigRational {
    num_traits::pow(t.clone(), k)
}

/// `E[Tr W^n] = Σ_τ N^{#(γτ⁻¹) + #τ − n} t^{#τ}` for the rectangular
/// Wishart matrix of aspect ratio `t`.
pub fn wishart_matrix_moment(n: usize, t: &BigRational) -> Result<LaurentPoly> {
    check("Wishart moment degree", n as u64, 9)?;
    let gamma = Perm::full_cycle(n);
    let mut out = LaurentPoly::zero();
    for tau in sym_group(n).iter() {
        let k = tau.num_cycles();
        let e = gamma.mul(&tau.inverse()).num_cycles() + k;
        out.add_term(e as i32 - n as i32, &t_pow(t, k));
    }
    Ok(out)
}

/// `lim E[Tr W^n]/N = Σ_{τ⪯γ_n} t^{#τ}`.
pub fn wishart_matrix_moment_asymptotic(n: usize, t: &BigRational) -> BigRational {
    enumerate_noncrossing(&Perm::full_cycle(n))
        .iter()
        .map(|tau| t_pow(t, tau.num_cycles()))
        .fold(<BigRational as Zero>::zero(), |a, b| a + b)
}

/// Truncated power series in finitely many commuting variables with
/// rational coefficients, keyed by exponent vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PowerSeries {
    vars: usize,
    order: usize,
    coeffs: BTreeMap<Vec<u32>, BigRational>,
}

impl PowerSeries {
    pub fn constant(vars: usize, order: usize, c: BigRational) -> PowerSeries {
        let mut coeffs = BTreeMap::new();
        if !Zero::is_zero(&c) {
            coeffs.insert(vec![0; vars], c);
        }
        PowerSeries { vars, order, coeffs }
    }

    pub fn variable(vars: usize, order: usize, i: usize) -> PowerSeries {
        let mut e = vec![0; vars];
        e[i] = 1;
        let mut coeffs = BTreeMap::new();
        if order >= 1 {
            coeffs.insert(e, <BigRational as One>::one());
        }
        PowerSeries { vars, order, coeffs }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, exps: &[u32]) -> BigRational {
        self.coeffs.get(exps).cloned().unwrap_or_else(<BigRational as Zero>::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn add(&self, o: &PowerSeries) -> PowerSeries {
        let mut coeffs = self.coeffs.clone();
        for (e, c) in &o.coeffs {
            let slot = coeffs.entry(e.clone()).or_insert_with(<BigRational as Zero>::zero);
            *slot += c;
            if Zero::is_zero(&*slot) {
                coeffs.remove(e);
            }
        }
        PowerSeries { coeffs, ..*self }
    }

    pub fn scale(&self, k: &BigRational) -> PowerSeries {
        let coeffs = if Zero::is_zero(k) {
            BTreeMap::new()
        } else {
            self.coeffs.iter().map(|(e, c)| (e.clone(), c * k)).collect()
        };
        PowerSeries { coeffs, ..*self }
    }

    pub fn mul(&self, o: &PowerSeries) -> PowerSeries {
        let mut out = PowerSeries::constant(self.vars, self.order, <BigRational as Zero>::zero());
        for (ea, ca) in &self.coeffs {
            let da: u32 = ea.iter().sum();
            for (eb, cb) in &o.coeffs {
                if (da + eb.iter().sum::<u32>()) as usize > self.order {
                    continue;
                }
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let slot = out.coeffs.entry(e).or_insert_with(<BigRational as Zero>::zero);
                *slot += ca * cb;
            }
        }
        out.coeffs.retain(|_, c| !Zero::is_zero(c));
        out
    }

    pub fn pow(&self, k: usize) -> PowerSeries {
        let mut out = PowerSeries::constant(self.vars, self.order, <BigRational as One>::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Value of the truncation at the given point.
    pub fn eval(&self, z: &[BigRational]) -> BigRational {
        self.coeffs
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(z)
                    .fold(c.clone(), |acc, (&k, x)| acc * num_traits::pow(x.clone(), k as usize))
            })
            .fold(<BigRational as Zero>::zero(), |a, b| a + b)
    }
}

impl fmt::Display for PowerSeries {
    /// `1 - 2 z1 + 8 z1^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<&Vec<u32>> = self.coeffs.keys().collect();
        keys.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse((*e).clone())));
        for (i, e) in keys.into_iter().enumerate() {
            let c = &self.coeffs[e];
            let neg = c < &<BigRational as Zero>::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| if k == 1 { format!("z{}", v + 1) } else { format!("z{}^{k}", v + 1) })
                .collect();
            if mono.is_empty() || !a.is_one() {
                write!(f, "{a}")?;
                if !mono.is_empty() {
                    write!(f, " ")?;
                }
            }
            write!(f, "{}", mono.join(" "))?;
        }
        Ok(())
    }
}

/// A term `z_𝛕 Tr_𝛕` of the potential, scaled by `N^{−ζ}` relative to the
/// Gaussian part. `zeta = None` means the melonic value `D−1`.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub label: String,
    pub class: PermTuple,
    pub z: BigRational,
    pub zeta: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    /// Labels of the couplings kept, in variable order.
    pub labels: Vec<String>,
    /// Values of the kept couplings.
    pub z: Vec<BigRational>,
    /// `n_𝛕` of the kept couplings.
    pub sizes: Vec<usize>,
    /// Labels of couplings that do not affect the limit.
    pub dropped: Vec<String>,
    pub series: PowerSeries,
}

impl FixedPoint {
    /// Truncated `G` at the coupling values.
    pub fn value(&self) -> BigRational {
        self.series.eval(&self.z)
    }

    /// `φ_𝛔[T,T̄] = φ_𝛔[T₀,T̄₀] · G^n` as a series.
    pub fn moment_series(&self, gaussian: &BigRational, n: usize) -> PowerSeries {
        self.series.pow(n).scale(gaussian)
    }
}

/// Solves `G = 1 − Σ n_𝛕 z_𝛕 G^{n_𝛕}` over the melonic couplings at scaling
/// `D−1`, order by order up to total degree `order`.
///
/// Melonic couplings with `ζ < D−1` and non-melonic ones with `ζ ≤ D−1`
/// drop out of the limit. Any `ζ > D−1` leaves the Gaussian regime and is
/// rejected.
pub fn melonic_fixed_point(couplings: &[Coupling], order: usize) -> Result<FixedPoint> {
    let mut kept: Vec<&Coupling> = Vec::new();
    let mut dropped = Vec::new();
    for c in couplings {
        let d1 = c.class.d() as i64 - 1;
        let zeta = c.zeta.unwrap_or(d1);
        if zeta > d1 {
            return Err(Error::OutOfScope(format!(
                "coupling {} has scaling {zeta} above D-1 = {d1}",
                c.label
            )));
        }
        if zeta == d1 && is_melonic(&c.class) {
            kept.push(c);
        } else {
            dropped.push(c.label.clone());
        }
    }
    let vars = kept.len();
    let one = PowerSeries::constant(vars, order, <BigRational as One>::one());
    let mut g = one.clone();
    // each pass fixes one more total degree
    for _ in 0..order {
        let mut next = one.clone();
        for (i, c) in kept.iter().enumerate() {
            let n = c.class.n();
            let k = BigRational::from_integer(BigInt::from(n));
            let term = PowerSeries::variable(vars, order, i).mul(&g.pow(n)).scale(&-k);
            next = next.add(&term);
        }
        g = next;
    }
    Ok(FixedPoint {
        labels: kept.iter().map(|c| c.label.clone()).collect(),
        z: kept.iter().map(|c| c.z.clone()).collect(),
        sizes: kept.iter().map(|c| c.class.n()).collect(),
        dropped,
        series: g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Additivity {
    Strict,
    Equal,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubadditivityReport {
    pub union_scaling: i64,
    pub component_scalings: Vec<i64>,
    /// `Σ r(𝛔_i) − r(∪𝛔_i)`.
    pub gap: i64,
    pub verdict: Additivity,
}

/// Compares `r(∪𝛔_i)` with `Σ r(𝛔_i)` for purely connected components.
pub fn subadditivity_probe(components: &[PermTuple]) -> Result<SubadditivityReport> {
    let mut rs = Vec::with_capacity(components.len());
    for c in components {
        if k_pure(c) != 1 {
            return Err(Error::Precondition(format!("component {c} is not purely connected")));
        }
        rs.push(scaling_of(c)?.0);
    }
    let (ru, _) = scaling_of(&union_of(components)?)?;
    let gap = rs.iter().sum::<i64>() - ru;
    let verdict = match gap {
        g if g > 0 => Additivity::Strict,
        0 => Additivity::Equal,
        _ => Additivity::Violation,
    };
    Ok(SubadditivityReport {
        union_scaling: ru,
        component_scalings: rs,
        gap,
        verdict,
    })
}

/// Pure Gaussian scaling exponent alone.
pub fn scaling_exponent(s: &PermTuple) -> Result<i64> {
    Ok(scaling_of(s)?.0)
}
