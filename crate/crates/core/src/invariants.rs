//! Trace-invariants indexed by `D`-tuples of permutations: connectivity,
//! orbit classes, orbit distances, Gram entries and dense evaluation.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::par;
use crate::partition::{BipartitePartition, Dsu, SetPartition};
use crate::perm::{factorial, sym_group, Perm};
use crate::poly::{LaurentPoly, Ring};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A `D`-tuple of permutations of a common degree `n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermTuple {
    perms: Vec<Perm>,
}

impl PermTuple {
    pub fn new(perms: Vec<Perm>) -> Result<PermTuple> {
        let Some(first) = perms.first() else {
            return Err(Error::Shape("a tuple needs at least one color".into()));
        };
        let n = first.degree();
        if let Some(p) = perms.iter().find(|p| p.degree() != n) {
            return Err(Error::DegreeMismatch(n, p.degree()));
        }
        Ok(PermTuple { perms })
    }

    pub fn identity(n: usize, d: usize) -> PermTuple {
        PermTuple {
            perms: vec![Perm::identity(n); d],
        }
    }

    /// Every color equal to `p`.
    pub fn constant(p: &Perm, d: usize) -> PermTuple {
        PermTuple {
            perms: vec![p.clone(); d],
        }
    }

    /// Parses `"(1 2);(1)(2);(1 2)"` or the keyed form `"c1=(1 2);c2=…"`.
    pub fn parse(text: &str, n: Option<usize>) -> Result<PermTuple> {
        let perms = text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let body = match item.split_once('=') {
                    Some((_, v)) => v,
                    None => item,
                };
                Perm::parse(body, n)
            })
            .collect::<Result<Vec<_>>>()?;
        // cycle forms without explicit degree take the largest label overall
        let n = n.unwrap_or_else(|| perms.iter().map(Perm::degree).max().unwrap_or(0));
        let perms = perms
            .into_iter()
            .map(|p| {
                if p.degree() == n {
                    Ok(p)
                } else {
                    Perm::parse(&p.to_string(), Some(n))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        PermTuple::new(perms)
    }

    pub fn n(&self) -> usize {
        self.perms[0].degree()
    }

    pub fn d(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    pub fn color(&self, c: usize) -> &Perm {
        &self.perms[c]
    }

    /// `(σ_1, …, σ_D, η)`.
    pub fn extended(&self, eta: &Perm) -> PermTuple {
        let mut perms = self.perms.clone();
        perms.push(eta.clone());
        PermTuple { perms }
    }

    /// `(η σ_c η⁻¹)_c`.
    pub fn conjugate(&self, eta: &Perm) -> PermTuple {
        PermTuple {
            perms: self.perms.iter().map(|p| p.conjugate_by(eta)).collect(),
        }
    }

    /// `(β σ_c α⁻¹)_c`: black vertices relabeled by `α`, white by `β`.
    pub fn relabel(&self, alpha: &Perm, beta: &Perm) -> PermTuple {
        let ai = alpha.inverse();
        PermTuple {
            perms: self.perms.iter().map(|p| beta.mul(p).mul(&ai)).collect(),
        }
    }

    /// `(σ_c τ_c⁻¹)_c`.
    pub fn div(&self, other: &PermTuple) -> PermTuple {
        PermTuple {
            perms: self
                .perms
                .iter()
                .zip(&other.perms)
                .map(|(a, b)| a.mul(&b.inverse()))
                .collect(),
        }
    }

    /// `(σ_c η)_c`.
    pub fn mul_right(&self, eta: &Perm) -> PermTuple {
        PermTuple {
            perms: self.perms.iter().map(|p| p.mul(eta)).collect(),
        }
    }

    /// Restriction of every color to an invariant set, relabeled monotonically.
    pub fn restrict(&self, subset: &[usize]) -> PermTuple {
        PermTuple {
            perms: self.perms.iter().map(|p| p.restrict(subset)).collect(),
        }
    }

    /// Restriction to a pure block: blacks `u` and whites `b`, each relabeled
    /// monotonically.
    pub fn restrict_bipartite(&self, u: &[usize], b: &[usize]) -> PermTuple {
        let mut pos = vec![usize::MAX; self.n()];
        for (k, &t) in b.iter().enumerate() {
            pos[t] = k;
        }
        PermTuple {
            perms: self
                .perms
                .iter()
                .map(|p| {
                    Perm::from_u8(
                        u.iter()
                            .map(|&s| {
                                let k = pos[p.apply(s)];
                                debug_assert!(k != usize::MAX, "block not closed");
                                k as u8
                            })
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    /// Disjoint union, the second tuple relabeled after the first.
    pub fn disjoint_union(&self, other: &PermTuple) -> Result<PermTuple> {
        if self.d() != other.d() {
            return Err(Error::Shape(format!("{} vs {} colors", self.d(), other.d())));
        }
        let n = self.n();
        let perms = self
            .perms
            .iter()
            .zip(&other.perms)
            .map(|(a, b)| {
                let img: Vec<usize> = a
                    .images()
                    .into_iter()
                    .chain(b.images().into_iter().map(|x| x + n))
                    .collect();
                Perm::from_images(img)
            })
            .collect::<Result<Vec<_>>>()?;
        PermTuple::new(perms)
    }
}

impl fmt::Display for PermTuple {
    /// `c1=(1 2);c2=(1)(2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .perms
            .iter()
            .enumerate()
            .map(|(c, p)| format!("c{}={p}", c + 1))
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl fmt::Debug for PermTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Mixed,
    Pure,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Mixed => "mixed",
            Flavor::Pure => "pure",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Flavor> {
        match s {
            "mixed" => Ok(Flavor::Mixed),
            "pure" => Ok(Flavor::Pure),
            _ => Err(Error::Parse(format!("unknown flavor `{s}`"))),
        }
    }
}

/// An orbit under `∼m` or `∼p`, represented by its lexicographic minimum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InvariantClass {
    pub flavor: Flavor,
    pub rep: PermTuple,
}

#[derive(Serialize, Deserialize)]
struct ClassJson {
    flavor: Flavor,
    #[serde(rename = "D")]
    d: usize,
    n: usize,
    perms: Vec<Vec<usize>>,
}

impl InvariantClass {
    pub fn n(&self) -> usize {
        self.rep.n()
    }

    pub fn d(&self) -> usize {
        self.rep.d()
    }

    /// `flavor=pure;D=3;n=2;c1=(1 2);c2=(1)(2);c3=(1 2)`.
    pub fn to_text(&self) -> String {
        format!("flavor={};D={};n={};{}", self.flavor, self.d(), self.n(), self.rep)
    }

    /// Parses the text form and canonicalizes.
    pub fn parse(text: &str) -> Result<InvariantClass> {
        let mut flavor = None;
        let mut d = None;
        let mut n = None;
        let mut colors: Vec<(usize, String)> = Vec::new();
        for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            let bad = |_| Error::Parse(format!("bad value in `{item}`"));
            match k.trim() {
                "flavor" => flavor = Some(v.trim().parse::<Flavor>()?),
                "D" => d = Some(v.trim().parse::<usize>().map_err(bad)?),
                "n" => n = Some(v.trim().parse::<usize>().map_err(bad)?),
                key => {
                    let c = key
                        .strip_prefix('c')
                        .and_then(|c| c.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("unknown key `{key}`")))?;
                    colors.push((c, v.to_string()));
                }
            }
        }
        let flavor = flavor.ok_or_else(|| Error::Parse("missing flavor".into()))?;
        let n = n.ok_or_else(|| Error::Parse("missing n".into()))?;
        colors.sort();
        if let Some(d) = d {
            if colors.len() != d || colors.iter().enumerate().any(|(i, (c, _))| *c != i + 1) {
                return Err(Error::Parse(format!("expected colors c1..c{d}")));
            }
        }
        let perms = colors
            .iter()
            .map(|(_, v)| Perm::parse(v, Some(n)))
            .collect::<Result<Vec<_>>>()?;
        canonicalize(&PermTuple::new(perms)?, flavor)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ClassJson {
            flavor: self.flavor,
            d: self.d(),
            n: self.n(),
            perms: self
                .rep
                .perms()
                .iter()
                .map(|p| p.images().into_iter().map(|x| x + 1).collect())
                .collect(),
        })
        .expect("class serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<InvariantClass> {
        let c: ClassJson =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let perms = c
            .perms
            .into_iter()
            .map(|img| {
                if img.len() != c.n {
                    return Err(Error::DegreeMismatch(c.n, img.len()));
                }
                Perm::from_images(img.into_iter().map(|x| x.wrapping_sub(1)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        if perms.len() != c.d {
            return Err(Error::Shape(format!("expected {} colors", c.d)));
        }
        canonicalize(&PermTuple::new(perms)?, c.flavor)
    }
}

impl fmt::Display for InvariantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for InvariantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `Π(𝛔) = ∨_c Π(σ_c)`.
pub fn components_mixed(s: &PermTuple) -> SetPartition {
    let n = s.n();
    let mut dsu = Dsu::new(n);
    for p in s.perms() {
        for i in 0..n {
            dsu.union(i, p.apply(i));
        }
    }
    SetPartition::from_dsu(n, &mut dsu)
}

/// `Π_p(𝛔) = ∨_c Π_p(σ_c)` on blacks `0..n` and whites `n..2n`.
pub fn components_pure(s: &PermTuple) -> BipartitePartition {
    let n = s.n();
    let mut dsu = pure_dsu(s);
    BipartitePartition::from_dsu(n, &mut dsu)
}

fn pure_dsu(s: &PermTuple) -> Dsu {
    let n = s.n();
    let mut dsu = Dsu::new(2 * n);
    for p in s.perms() {
        for i in 0..n {
            dsu.union(i, n + p.apply(i));
        }
    }
    dsu
}

pub fn k_mixed(s: &PermTuple) -> usize {
    let n = s.n();
    let mut dsu = Dsu::new(n);
    for p in s.perms() {
        for i in 0..n {
            dsu.union(i, p.apply(i));
        }
    }
    dsu.count()
}

pub fn k_pure(s: &PermTuple) -> usize {
    pure_dsu(s).count()
}

/// `K_p(𝛔, η)` without building the extended tuple.
pub fn k_pure_with(s: &PermTuple, eta: &Perm) -> usize {
    let n = s.n();
    let mut dsu = pure_dsu(s);
    for i in 0..n {
        dsu.union(i, n + eta.apply(i));
    }
    dsu.count()
}

pub fn connected(s: &PermTuple, flavor: Flavor) -> bool {
    match flavor {
        Flavor::Mixed => k_mixed(s) == 1,
        Flavor::Pure => k_pure(s) == 1,
    }
}

/// `d(𝛔, 𝛕) = Σ_c |σ_c τ_c⁻¹|`.
pub fn tuple_distance(s: &PermTuple, t: &PermTuple) -> usize {
    s.perms()
        .iter()
        .zip(t.perms())
        .map(|(a, b)| crate::perm::dist(a, b))
        .sum()
}

/// `d(𝛔, η) = Σ_c |σ_c η⁻¹|`.
pub fn distance_to(s: &PermTuple, eta: &Perm) -> usize {
    s.perms().iter().map(|a| crate::perm::dist(a, eta)).sum()
}

/// Lexicographically least `(η σ_c η⁻¹)_c` and every `η` attaining it.
fn min_conjugate(perms: &[Perm]) -> (Vec<Perm>, Vec<Perm>) {
    let n = perms.first().map_or(0, Perm::degree);
    let group = sym_group(n);
    let mut best: Option<Vec<Perm>> = None;
    let mut arg: Vec<Perm> = Vec::new();
    let mut buf: Vec<Perm> = Vec::with_capacity(perms.len());
    for eta in group.iter() {
        buf.clear();
        let mut ord = std::cmp::Ordering::Equal;
        for (c, p) in perms.iter().enumerate() {
            let q = p.conjugate_by(eta);
            if let Some(b) = &best {
                if ord == std::cmp::Ordering::Equal {
                    ord = q.cmp(&b[c]);
                    if ord == std::cmp::Ordering::Greater {
                        break;
                    }
                }
            }
            buf.push(q);
        }
        match (&best, ord) {
            (None, _) | (Some(_), std::cmp::Ordering::Less) => {
                best = Some(buf.clone());
                arg.clear();
                arg.push(eta.clone());
            }
            (Some(_), std::cmp::Ordering::Equal) => arg.push(eta.clone()),
            _ => {}
        }
    }
    (best.unwrap_or_default(), arg)
}

/// Canonical representative of the orbit of `s`.
pub fn canonicalize(s: &PermTuple, flavor: Flavor) -> Result<InvariantClass> {
    check("canonicalization degree", s.n() as u64, caps().perm as u64)?;
    let rep = match flavor {
        Flavor::Mixed => min_conjugate(s.perms()).0,
        Flavor::Pure => {
            let (reduced, _) = pure_reduce(s);
            let mut perms = vec![Perm::identity(s.n())];
            perms.extend(min_conjugate(&reduced).0);
            perms
        }
    };
    Ok(InvariantClass {
        flavor,
        rep: PermTuple { perms: rep },
    })
}

/// `(σ_1⁻¹ σ_c)_{c≥2}` and `σ_1⁻¹`.
fn pure_reduce(s: &PermTuple) -> (Vec<Perm>, Perm) {
    let first_inv = s.perms()[0].inverse();
    (
        s.perms()[1..].iter().map(|p| first_inv.mul(p)).collect(),
        first_inv,
    )
}

/// Vertex labels carried along a relabeling: `n` labels for mixed tuples,
/// `2n` (blacks then whites) for pure ones.
pub type Word = Vec<u8>;

fn relabel_word(word: &[u8], n: usize, alpha: &Perm, beta: Option<&Perm>) -> Word {
    let mut out = vec![0u8; word.len()];
    for s in 0..n {
        out[alpha.apply(s)] = word[s];
    }
    if let Some(beta) = beta {
        for t in 0..n {
            out[n + beta.apply(t)] = word[n + t];
        }
    }
    out
}

/// Canonical class together with the lexicographically least relabeled word.
pub fn canonicalize_with_word(
    s: &PermTuple,
    flavor: Flavor,
    word: &[u8],
) -> Result<(InvariantClass, Word)> {
    let n = s.n();
    let expect = match flavor {
        Flavor::Mixed => n,
        Flavor::Pure => 2 * n,
    };
    if word.len() != expect {
        return Err(Error::Shape(format!("word of length {} for n = {n}", word.len())));
    }
    check("canonicalization degree", n as u64, caps().perm as u64)?;
    let (rep, best_word) = match flavor {
        Flavor::Mixed => {
            let (rep, args) = min_conjugate(s.perms());
            let w = args
                .iter()
                .map(|a| relabel_word(word, n, a, None))
                .min()
                .unwrap_or_default();
            (rep, w)
        }
        Flavor::Pure => {
            let (reduced, first_inv) = pure_reduce(s);
            let (rest, args) = min_conjugate(&reduced);
            let w = args
                .iter()
                .map(|a| {
                    let beta = a.mul(&first_inv);
                    relabel_word(word, n, a, Some(&beta))
                })
                .min()
                .unwrap_or_default();
            let mut rep = vec![Perm::identity(n)];
            rep.extend(rest);
            (rep, w)
        }
    };
    Ok((
        InvariantClass {
            flavor,
            rep: PermTuple { perms: rep },
        },
        best_word,
    ))
}

pub fn same_class(a: &PermTuple, b: &PermTuple, flavor: Flavor) -> Result<bool> {
    Ok(canonicalize(a, flavor)? == canonicalize(b, flavor)?)
}

/// One representative per orbit of `S_n^D`, optionally only connected ones.
pub fn enumerate_classes(
    n: usize,
    d: usize,
    flavor: Flavor,
    connected_only: bool,
) -> Result<Vec<InvariantClass>> {
    if d == 0 {
        return Err(Error::Shape("D must be at least 1".into()));
    }
    check("canonicalization degree", n as u64, caps().perm as u64)?;
    let free = match flavor {
        Flavor::Mixed => d,
        Flavor::Pure => d - 1,
    };
    let count = (factorial(n) as u128).pow(free as u32) * factorial(n) as u128;
    check("tuple enumeration", count.min(u64::MAX as u128) as u64, caps().tuples)?;
    let group = sym_group(n);
    // split by the first free color so threads share nothing
    let heads: Vec<usize> = (0..group.len().pow(free.min(1) as u32)).collect();
    let chunks = par::map(&heads, |&h| {
        let mut seen = BTreeSet::new();
        let mut idx = vec![0usize; free];
        if free > 0 {
            idx[0] = h;
        }
        loop {
            let mut perms = Vec::with_capacity(d);
            if flavor == Flavor::Pure {
                perms.push(Perm::identity(n));
            }
            perms.extend(idx.iter().map(|&i| group[i].clone()));
            let t = PermTuple { perms };
            if !connected_only || connected(&t, flavor) {
                seen.insert(canonicalize(&t, flavor).expect("within caps").rep);
            }
            // odometer over colors after the first
            let mut k = free;
            loop {
                if k <= 1 {
                    return seen;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < group.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    });
    let all: BTreeSet<PermTuple> = chunks.into_iter().flatten().collect();
    Ok(all
        .into_iter()
        .map(|rep| InvariantClass { flavor, rep })
        .collect())
}

/// Orbit distance and the number of minimizing relabelings.
pub fn orbit_distance(a: &InvariantClass, b: &InvariantClass) -> Result<(usize, u64)> {
    if a.flavor != b.flavor {
        return Err(Error::FlavorMismatch);
    }
    if a.n() != b.n() || a.d() != b.d() {
        return Err(Error::Shape(format!(
            "(n, D) = ({}, {}) vs ({}, {})",
            a.n(),
            a.d(),
            b.n(),
            b.d()
        )));
    }
    let dists = orbit_distance_profile(&a.rep, &b.rep, a.flavor)?;
    let min = *dists.iter().min().unwrap_or(&0);
    Ok((min, dists.iter().filter(|&&x| x == min).count() as u64))
}

/// Every relabeling's distance: `Σ_c |σ_c η τ_c⁻¹ η⁻¹|` over `η` (mixed) or
/// `Σ_c |σ_c η τ_c⁻¹ ν|` over pairs `(η, ν)` (pure).
fn orbit_distance_profile(s: &PermTuple, t: &PermTuple, flavor: Flavor) -> Result<Vec<usize>> {
    let n = s.n();
    check("pairing scan degree", n as u64, caps().eta as u64)?;
    let group = sym_group(n);
    Ok(match flavor {
        Flavor::Mixed => par::map(&group, |eta| tuple_distance(s, &t.conjugate(eta))),
        Flavor::Pure => par::map(&group, |eta| {
            let ti: Vec<Perm> = t.perms().iter().map(|p| eta.mul(&p.inverse())).collect();
            group
                .iter()
                .map(|nu| {
                    s.perms()
                        .iter()
                        .zip(&ti)
                        .map(|(a, b)| a.mul(b).mul(nu).length())
                        .sum::<usize>()
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect(),
    })
}

/// Exact Ginibre scalar product `Σ N^{−distance}` over relabelings.
pub fn gram_entry(a: &InvariantClass, b: &InvariantClass) -> Result<LaurentPoly> {
    if a.flavor != b.flavor {
        return Err(Error::FlavorMismatch);
    }
    let mut p = LaurentPoly::zero();
    let one = <BigRational as One>::one();
    for d in orbit_distance_profile(&a.rep, &b.rep, a.flavor)? {
        p.add_term(-(d as i32), &one);
    }
    Ok(p)
}

/// Leading term `C · N^{−d}` of the Gram entry as `(−d, C)`.
pub fn gram_leading(a: &InvariantClass, b: &InvariantClass) -> Result<(i32, BigInt)> {
    let (d, c) = orbit_distance(a, b)?;
    Ok((-(d as i32), BigInt::from(c)))
}

/// Gram matrix of a family of classes.
pub fn gram_matrix(classes: &[InvariantClass]) -> Result<Vec<Vec<LaurentPoly>>> {
    classes
        .iter()
        .map(|a| classes.iter().map(|b| gram_entry(a, b)).collect())
        .collect()
}

/// Exact determinant by expansion over column subsets.
pub fn determinant<R: Ring>(m: &[Vec<R>]) -> R {
    let k = m.len();
    assert!(k <= 20, "determinant of a {k}×{k} matrix by subset expansion");
    let mut f: Vec<R> = vec![R::zero(); 1 << k];
    f[0] = R::one();
    for mask in 1usize..(1 << k) {
        let row = mask.count_ones() as usize - 1;
        let mut acc = R::zero();
        for j in 0..k {
            if mask >> j & 1 == 0 || m[row][j].is_zero() {
                continue;
            }
            let prev = &f[mask & !(1 << j)];
            if prev.is_zero() {
                continue;
            }
            let term = m[row][j].mul(prev);
            let above = (mask >> (j + 1)).count_ones();
            acc = if above % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        f[mask] = acc;
    }
    f[(1 << k) - 1].clone()
}

/// Whether the Gram matrix of `classes` is invertible as a function of `N`,
/// with its determinant.
pub fn gram_invertible(classes: &[InvariantClass]) -> Result<(bool, LaurentPoly)> {
    let det = determinant(&gram_matrix(classes)?);
    Ok((!det.is_zero(), det))
}

/// Sylvester criterion for the Gram matrix evaluated at an integer `N`.
pub fn gram_positive_definite_at(classes: &[InvariantClass], n_val: i64) -> Result<bool> {
    let m = gram_matrix(classes)?;
    let x = BigRational::from_integer(n_val.into());
    let ev: Vec<Vec<BigRational>> = m
        .iter()
        .map(|row| row.iter().map(|p| p.eval(&x)).collect())
        .collect();
    for k in 1..=ev.len() {
        let minor: Vec<Vec<BigRational>> = ev[..k].iter().map(|r| r[..k].to_vec()).collect();
        if determinant(&minor) <= <BigRational as Zero>::zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(σ_c σ_D⁻¹)_{c<D}`.
pub fn pure_to_mixed(s: &PermTuple) -> Result<PermTuple> {
    if s.d() < 2 {
        return Err(Error::Shape("pure_to_mixed needs D ≥ 2".into()));
    }
    let last_inv = s.perms()[s.d() - 1].inverse();
    PermTuple::new(s.perms()[..s.d() - 1].iter().map(|p| p.mul(&last_inv)).collect())
}

/// A dense complex tensor with `d_out` output and `d_in` input slots of
/// range `N`, row-major with outputs first.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub dim: usize,
    pub d_out: usize,
    pub d_in: usize,
    pub data: Vec<Complex64>,
}

impl DenseTensor {
    pub fn new(dim: usize, d_out: usize, d_in: usize, data: Vec<Complex64>) -> Result<DenseTensor> {
        let len = dim.pow((d_out + d_in) as u32);
        if data.len() != len {
            return Err(Error::Shape(format!("{} entries, expected {len}", data.len())));
        }
        Ok(DenseTensor {
            dim,
            d_out,
            d_in,
            data,
        })
    }

    pub fn zeros(dim: usize, d_out: usize, d_in: usize) -> DenseTensor {
        DenseTensor {
            dim,
            d_out,
            d_in,
            data: vec![Complex64::zero(); dim.pow((d_out + d_in) as u32)],
        }
    }

    /// The identity operator on `(ℂ^N)^{⊗D}`.
    pub fn identity(dim: usize, d: usize) -> DenseTensor {
        let mut t = DenseTensor::zeros(dim, d, d);
        let side = dim.pow(d as u32);
        for i in 0..side {
            t.data[i * side + i] = Complex64::one();
        }
        t
    }

    pub fn slots(&self) -> usize {
        self.d_out + self.d_in
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[idx.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }

    pub fn conj(&self) -> DenseTensor {
        DenseTensor {
            data: self.data.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }
}

/// Legs of each tensor in the contraction network of a trace-invariant.
/// Edge `(c, s)` joins the output of color `c` at `s` with the input of
/// color `c` at `σ_c(s)`.
fn network(s: &PermTuple, flavor: Flavor) -> Vec<Vec<usize>> {
    let (n, d) = (s.n(), s.d());
    let edge = |c: usize, v: usize| c * n + v;
    let inv: Vec<Perm> = s.perms().iter().map(Perm::inverse).collect();
    let outs = (0..n).map(|v| (0..d).map(|c| edge(c, v)).collect::<Vec<_>>());
    let ins = (0..n).map(|t| (0..d).map(|c| edge(c, inv[c].apply(t))).collect::<Vec<_>>());
    match flavor {
        Flavor::Mixed => outs
            .zip(ins)
            .map(|(mut o, i)| {
                o.extend(i);
                o
            })
            .collect(),
        Flavor::Pure => outs.chain(ins).collect(),
    }
}

fn check_tensors(s: &PermTuple, flavor: Flavor, tensors: &[DenseTensor]) -> Result<usize> {
    let (n, d) = (s.n(), s.d());
    let expect = match flavor {
        Flavor::Mixed => n,
        Flavor::Pure => 2 * n,
    };
    if tensors.len() != expect {
        return Err(Error::Shape(format!("{} tensors, expected {expect}", tensors.len())));
    }
    let dim = tensors.first().map_or(1, |t| t.dim);
    for t in tensors {
        let ok = match flavor {
            Flavor::Mixed => t.d_out == d && t.d_in == d,
            Flavor::Pure => t.slots() == d,
        };
        if !ok || t.dim != dim {
            return Err(Error::Shape("tensor slots do not match the invariant".into()));
        }
    }
    Ok(dim)
}

/// Exact contraction `Tr_𝛔` by summing over all free indices.
///
/// Mixed: `tensors[s]` is `A_s`. Pure: the first `n` are the black `T_s`,
/// the last `n` the white `T̄_t` (already conjugated by the caller).
pub fn eval_trace_invariant(
    s: &PermTuple,
    flavor: Flavor,
    tensors: &[DenseTensor],
) -> Result<Complex64> {
    let dim = check_tensors(s, flavor, tensors)?;
    let edges = s.n() * s.d();
    let work = (dim as u128).pow(edges as u32);
    check("contraction size", work.min(u64::MAX as u128) as u64, caps().mc_entries)?;
    let legs = network(s, flavor);
    let mut idx = vec![0usize; edges];
    let mut total = Complex64::zero();
    loop {
        let mut term = Complex64::one();
        for (t, l) in tensors.iter().zip(&legs) {
            term *= t.data[l.iter().fold(0, |acc, &e| acc * dim + idx[e])];
            if term == Complex64::zero() {
                break;
            }
        }
        total += term;
        let mut k = 0;
        loop {
            if k == edges {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < dim {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

struct Node {
    legs: Vec<usize>,
    data: Vec<Complex64>,
}

fn trace_self_loops(mut node: Node, dim: usize) -> Node {
    loop {
        let dup = (0..node.legs.len()).find_map(|i| {
            (i + 1..node.legs.len())
                .find(|&j| node.legs[j] == node.legs[i])
                .map(|j| (i, j))
        });
        let Some((i, j)) = dup else {
            return node;
        };
        let r = node.legs.len();
        let keep: Vec<usize> = (0..r).filter(|&k| k != i && k != j).collect();
        let in_strides = strides(r, dim);
        let diag = in_strides[i] + in_strides[j];
        let kept: Vec<usize> = keep.iter().map(|&k| in_strides[k]).collect();
        let mut data = vec![Complex64::zero(); dim.pow(keep.len() as u32)];
        for_each_offset(&kept, dim, |out, src| {
            data[out] = (0..dim).map(|x| node.data[src + x * diag]).sum();
        });
        node = Node {
            legs: keep.iter().map(|&k| node.legs[k]).collect(),
            data,
        };
    }
}

/// Row-major strides of a rank-`r` tensor.
fn strides(r: usize, dim: usize) -> Vec<usize> {
    let mut s = vec![1; r];
    for k in (0..r.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dim;
    }
    s
}

/// Calls `f(i, offset)` for every row-major index `i` of a box of rank
/// `src.len()`, where `offset = Σ digit_k · src[k]`.
fn for_each_offset(src: &[usize], dim: usize, mut f: impl FnMut(usize, usize)) {
    let r = src.len();
    let mut digits = vec![0; r];
    let mut offset = 0;
    for i in 0..dim.pow(r as u32) {
        f(i, offset);
        for k in (0..r).rev() {
            digits[k] += 1;
            offset += src[k];
            if digits[k] < dim {
                break;
            }
            digits[k] = 0;
            offset -= dim * src[k];
        }
    }
}

fn permute(node: &Node, order: &[usize], dim: usize) -> Vec<Complex64> {
    let in_strides = strides(node.legs.len(), dim);
    let src: Vec<usize> = order.iter().map(|&k| in_strides[k]).collect();
    let mut out = vec![Complex64::zero(); node.data.len()];
    for_each_offset(&src, dim, |o, i| out[o] = node.data[i]);
    out
}

fn contract_pair(a: &Node, b: &Node, dim: usize) -> Node {
    let shared: Vec<usize> = a.legs.iter().copied().filter(|l| b.legs.contains(l)).collect();
    let fa: Vec<usize> = (0..a.legs.len()).filter(|&k| !shared.contains(&a.legs[k])).collect();
    let fb: Vec<usize> = (0..b.legs.len()).filter(|&k| !shared.contains(&b.legs[k])).collect();
    let sa: Vec<usize> = shared
        .iter()
        .map(|l| a.legs.iter().position(|x| x == l).unwrap())
        .collect();
    let sb: Vec<usize> = shared
        .iter()
        .map(|l| b.legs.iter().position(|x| x == l).unwrap())
        .collect();
    let am = permute(a, &[fa.clone(), sa].concat(), dim);
    let bm = permute(b, &[sb, fb.clone()].concat(), dim);
    let (rows, inner, cols) = (
        dim.pow(fa.len() as u32),
        dim.pow(shared.len() as u32),
        dim.pow(fb.len() as u32),
    );
    let mut data = vec![Complex64::zero(); rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let x = am[i * inner + k];
            if x == Complex64::zero() {
                continue;
            }
            let brow = &bm[k * cols..(k + 1) * cols];
            let out = &mut data[i * cols..(i + 1) * cols];
            for (o, y) in out.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
    let legs = fa
        .iter()
        .map(|&k| a.legs[k])
        .chain(fb.iter().map(|&k| b.legs[k]))
        .collect();
    Node { legs, data }
}

/// Same value as [`eval_trace_invariant`], by greedy pairwise contraction.
pub fn eval_trace_invariant_fast(
    s: &PermTuple,
    flavor: Flavor,
    tensors: &[DenseTensor],
) -> Result<Complex64> {
    let dim = check_tensors(s, flavor, tensors)?;
    let mut nodes: Vec<Node> = tensors
        .iter()
        .zip(network(s, flavor))
        .map(|(t, legs)| {
            trace_self_loops(
                Node {
                    legs,
                    data: t.data.clone(),
                },
                dim,
            )
        })
        .collect();
    let mut scalar = Complex64::one();
    loop {
        nodes.retain(|node| {
            if node.legs.is_empty() {
                scalar *= node.data[0];
                false
            } else {
                true
            }
        });
        if nodes.is_empty() {
            return Ok(scalar);
        }
        // pair with the smallest result among those sharing a leg
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let shared = nodes[i].legs.iter().filter(|l| nodes[j].legs.contains(l)).count();
                if shared == 0 {
                    continue;
                }
                let size = nodes[i].legs.len() + nodes[j].legs.len() - 2 * shared;
                if best.is_none_or(|(_, _, b)| size < b) {
                    best = Some((i, j, size));
                }
            }
        }
        let (i, j, size) = best.expect("closed network always has a shared leg");
        check("contraction size", dim.pow(size as u32) as u64, caps().mc_entries)?;
        let b = nodes.swap_remove(j);
        let a = nodes.swap_remove(i);
        nodes.push(trace_self_loops(contract_pair(&a, &b, dim), dim));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_perms;
    use proptest::prelude::*;

    fn tup(s: &str, n: usize) -> PermTuple {
        PermTuple::parse(s, Some(n)).unwrap()
    }

    #[test]
    fn connectivity_examples() {
        let id = PermTuple::identity(2, 3);
        assert_eq!((k_mixed(&id), k_pure(&id)), (2, 2));
        let tt = tup("(1 2);(1 2)", 2);
        assert_eq!((k_mixed(&tt), k_pure(&tt)), (1, 2));
        let ti = tup("(1 2);(1)(2)", 2);
        assert_eq!((k_mixed(&ti), k_pure(&ti)), (1, 1));
        assert_eq!(k_pure(&PermTuple::identity(2, 2)), 2);
        assert_eq!(components_pure(&ti).num_blocks(), 1);
        assert_eq!(components_mixed(&tt), SetPartition::coarsest(2));
    }

    #[test]
    fn canonical_examples() {
        // D = 1 mixed: classes are cycle types
        for p in all_perms(4) {
            let c = canonicalize(&PermTuple::new(vec![p.clone()]).unwrap(), Flavor::Mixed).unwrap();
            let q = &c.rep.perms()[0];
            assert_eq!(q.cycle_type(), p.cycle_type());
            assert!(all_perms(4)
                .iter()
                .filter(|r| r.cycle_type() == p.cycle_type())
                .all(|r| q <= r));
        }
        let c = canonicalize(&tup("(1 2);(1 2)", 2), Flavor::Pure).unwrap();
        assert_eq!(c.rep, PermTuple::identity(2, 2));
        let again = canonicalize(&c.rep, Flavor::Pure).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn pure_canonical_is_orbit_minimum() {
        let group = all_perms(3);
        for t in crate::perm::all_tuples(3, 2) {
            let s = PermTuple::new(t).unwrap();
            let brute = group
                .iter()
                .flat_map(|a| group.iter().map(move |b| (a, b)))
                .map(|(a, b)| s.relabel(a, b))
                .min()
                .unwrap();
            assert_eq!(canonicalize(&s, Flavor::Pure).unwrap().rep, brute);
        }
    }

    /// Orbit partition of `S_n^D` by closure, as an oracle for enumeration.
    fn brute_orbits(n: usize, d: usize, flavor: Flavor, connected_only: bool) -> usize {
        let group = all_perms(n);
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for t in crate::perm::all_tuples(n, d) {
            let s = PermTuple::new(t).unwrap();
            if seen.contains(&s) {
                continue;
            }
            if !connected_only || connected(&s, flavor) {
                count += 1;
            }
            for a in &group {
                match flavor {
                    Flavor::Mixed => {
                        seen.insert(s.conjugate(a));
                    }
                    Flavor::Pure => {
                        for b in &group {
                            seen.insert(s.relabel(a, b));
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn enumeration_matches_orbit_closure() {
        assert_eq!(enumerate_classes(1, 3, Flavor::Pure, false).unwrap().len(), 1);
        assert_eq!(enumerate_classes(2, 1, Flavor::Mixed, false).unwrap().len(), 2);
        for (n, d) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            for flavor in [Flavor::Mixed, Flavor::Pure] {
                for conn in [false, true] {
                    let got = enumerate_classes(n, d, flavor, conn).unwrap().len();
                    assert_eq!(got, brute_orbits(n, d, flavor, conn), "{n} {d} {flavor} {conn}");
                }
            }
        }
    }

    #[test]
    fn mixed_equivalence_implies_pure() {
        let mut counterexample = false;
        for n in 2..=3 {
            for t in crate::perm::all_tuples(n, 2) {
                let s = PermTuple::new(t).unwrap();
                let m = canonicalize(&s, Flavor::Mixed).unwrap().rep;
                let p = canonicalize(&s, Flavor::Pure).unwrap().rep;
                assert_eq!(canonicalize(&m, Flavor::Pure).unwrap().rep, p);
                if canonicalize(&p, Flavor::Mixed).unwrap().rep != m {
                    counterexample = true;
                }
            }
        }
        assert!(counterexample, "pure equivalence should be strictly coarser");
    }

    #[test]
    fn orbit_distance_examples() {
        for flavor in [Flavor::Mixed, Flavor::Pure] {
            let classes = enumerate_classes(2, 2, flavor, false).unwrap();
            for a in &classes {
                for b in &classes {
                    let (d, c) = orbit_distance(a, b).unwrap();
                    assert_eq!(d == 0, a == b);
                    assert!(c >= 1);
                    assert_eq!(orbit_distance(b, a).unwrap().0, d);
                }
            }
        }
        // mixed diagonal multiplicity is the centralizer size
        let s = canonicalize(&tup("(1 2)(3);(1 2)(3)", 3), Flavor::Mixed).unwrap();
        let cent = all_perms(3)
            .iter()
            .filter(|e| s.rep.conjugate(e) == s.rep)
            .count() as u64;
        assert_eq!(orbit_distance(&s, &s).unwrap(), (0, cent));
        // n = 2, D = 2: (id, id) vs ((12), (12)) differ in both colors
        let a = canonicalize(&PermTuple::identity(2, 2), Flavor::Mixed).unwrap();
        let b = canonicalize(&tup("(1 2);(1 2)", 2), Flavor::Mixed).unwrap();
        assert_eq!(orbit_distance(&a, &b).unwrap(), (2, 2));
        let p = canonicalize(&PermTuple::identity(2, 2), Flavor::Pure).unwrap();
        assert!(orbit_distance(&a, &p).is_err());
    }

    #[test]
    fn gram_examples() {
        let one = canonicalize(&PermTuple::identity(1, 3), Flavor::Pure).unwrap();
        assert_eq!(gram_leading(&one, &one).unwrap(), (0, BigInt::from(1)));
        for flavor in [Flavor::Mixed, Flavor::Pure] {
            for d in 1..=3 {
                let classes = enumerate_classes(2, d, flavor, false).unwrap();
                for a in &classes {
                    for b in &classes {
                        let (e, c) = gram_leading(a, b).unwrap();
                        if a == b {
                            assert_eq!(e, 0);
                            assert!(c > BigInt::zero());
                        } else {
                            assert!(e <= -1);
                        }
                        assert_eq!(gram_entry(a, b).unwrap().leading(), Some((e, BigRational::from_integer(c))));
                    }
                }
                let (inv, det) = gram_invertible(&classes).unwrap();
                assert!(inv, "{flavor} D={d}: det = {det}");
            }
        }
    }

    #[test]
    fn class_text_round_trip() {
        let c = canonicalize(&tup("(1 2);(1)(2);(1 2)", 2), Flavor::Mixed).unwrap();
        let text = c.to_text();
        assert_eq!(InvariantClass::parse(&text).unwrap(), c);
        assert_eq!(InvariantClass::from_json(&c.to_json()).unwrap(), c);
        let p = InvariantClass::parse("flavor=pure;D=3;n=2;c1=(1 2);c2=(1)(2);c3=(1 2)").unwrap();
        assert_eq!(p.to_text(), "flavor=pure;D=3;n=2;c1=(1)(2);c2=(1 2);c3=(1)(2)");
        assert!(InvariantClass::parse("flavor=pure;D=2;n=2;c1=(1 2)").is_err());
    }

    #[test]
    fn pure_to_mixed_examples() {
        let s = PermTuple::constant(&Perm::full_cycle(3), 3);
        assert_eq!(pure_to_mixed(&s).unwrap(), PermTuple::identity(3, 2));
        let t = tup("(1 2 3);(1 2)(3)", 3);
        let r = pure_to_mixed(&t).unwrap();
        assert_eq!(r.perms()[0], t.perms()[0].mul(&t.perms()[1].inverse()));
        assert!(pure_to_mixed(&PermTuple::identity(2, 1)).is_err());
        // class equality transported both ways
        for a in crate::perm::all_tuples(3, 2).into_iter().step_by(5) {
            for b in crate::perm::all_tuples(3, 2).into_iter().step_by(7) {
                let (a, b) = (PermTuple::new(a.clone()).unwrap(), PermTuple::new(b).unwrap());
                let pure = same_class(&a, &b, Flavor::Pure).unwrap();
                let mixed = same_class(
                    &pure_to_mixed(&a).unwrap(),
                    &pure_to_mixed(&b).unwrap(),
                    Flavor::Mixed,
                )
                .unwrap();
                assert_eq!(pure, mixed);
            }
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluation_examples() {
        // full trace of the identity on (C^N)^{⊗D}
        let id = DenseTensor::identity(3, 2);
        let v = eval_trace_invariant(&PermTuple::identity(1, 2), Flavor::Mixed, &[id]).unwrap();
        assert!((v - c(9.0, 0.0)).norm() < 1e-12);
        // D = 1, σ = γ_3: Tr(M³)
        let m = DenseTensor::new(2, 1, 1, vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)])
            .unwrap();
        let g = PermTuple::new(vec![Perm::full_cycle(3)]).unwrap();
        let v = eval_trace_invariant(&g, Flavor::Mixed, &[m.clone(), m.clone(), m.clone()]).unwrap();
        // M² = (1+2i)·I, so Tr M³ = (1+2i)·Tr M = 0
        assert!(v.norm() < 1e-12);
        let g2 = PermTuple::new(vec![Perm::full_cycle(2)]).unwrap();
        let v2 = eval_trace_invariant(&g2, Flavor::Mixed, &[m.clone(), m]).unwrap();
        assert!((v2 - c(2.0, 4.0)).norm() < 1e-12);
    }

    fn pseudo_tensor(dim: usize, slots: usize, seed: u64) -> DenseTensor {
        let len = dim.pow(slots as u32);
        let mut x = seed;
        let data = (0..len)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((x >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((x >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
                c(a, b)
            })
            .collect();
        DenseTensor { dim, d_out: slots, d_in: 0, data }
    }

    #[test]
    fn fast_contraction_agrees_and_factorizes() {
        for t in crate::perm::all_tuples(2, 3) {
            let s = PermTuple::new(t).unwrap();
            let a = pseudo_tensor(2, 3, 7);
            let tensors = vec![a.clone(), a.clone(), a.conj(), a.conj()];
            let slow = eval_trace_invariant(&s, Flavor::Pure, &tensors).unwrap();
            let fast = eval_trace_invariant_fast(&s, Flavor::Pure, &tensors).unwrap();
            assert!((slow - fast).norm() < 1e-10);
            // product over pure components
            let comps = components_pure(&s);
            let mut prod = c(1.0, 0.0);
            for (u, b) in comps.blocks() {
                let sub = s.restrict_bipartite(u, b);
                let ts: Vec<DenseTensor> = u.iter().map(|_| a.clone()).chain(b.iter().map(|_| a.conj())).collect();
                prod *= eval_trace_invariant(&sub, Flavor::Pure, &ts).unwrap();
            }
            assert!((slow - prod).norm() < 1e-10);
        }
        let mut m = pseudo_tensor(2, 4, 3);
        m.d_out = 2;
        m.d_in = 2;
        for t in crate::perm::all_tuples(3, 2).into_iter().step_by(3) {
            let s = PermTuple::new(t).unwrap();
            let ts = vec![m.clone(); 3];
            let slow = eval_trace_invariant(&s, Flavor::Mixed, &ts).unwrap();
            let fast = eval_trace_invariant_fast(&s, Flavor::Mixed, &ts).unwrap();
            assert!((slow - fast).norm() < 1e-10, "{s}");
        }
    }

    fn arb_tuple(n: usize, d: usize) -> impl Strategy<Value = PermTuple> {
        proptest::collection::vec(Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), d)
            .prop_map(|v| PermTuple::new(v.into_iter().map(|p| Perm::from_images(p).unwrap()).collect()).unwrap())
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Perm> {
        Just((0..n).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| Perm::from_images(v).unwrap())
    }

    proptest! {
        #[test]
        fn canonical_constant_on_orbits(s in arb_tuple(5, 3), a in arb_perm(5), b in arb_perm(5)) {
            let m = canonicalize(&s, Flavor::Mixed).unwrap();
            prop_assert_eq!(&canonicalize(&s.conjugate(&a), Flavor::Mixed).unwrap(), &m);
            prop_assert_eq!(&canonicalize(&m.rep, Flavor::Mixed).unwrap(), &m);
            let p = canonicalize(&s, Flavor::Pure).unwrap();
            prop_assert_eq!(&canonicalize(&s.relabel(&a, &b), Flavor::Pure).unwrap(), &p);
            prop_assert_eq!(&canonicalize(&p.rep, Flavor::Pure).unwrap(), &p);
        }

        #[test]
        fn word_canonical_constant_on_orbits(s in arb_tuple(4, 3), a in arb_perm(4), b in arb_perm(4),
                                             w in proptest::collection::vec(0u8..2, 8)) {
            let (c1, w1) = canonicalize_with_word(&s, Flavor::Pure, &w).unwrap();
            let moved = relabel_word(&w, 4, &a, Some(&b));
            let (c2, w2) = canonicalize_with_word(&s.relabel(&a, &b), Flavor::Pure, &moved).unwrap();
            prop_assert_eq!(c1, c2);
            prop_assert_eq!(w1, w2);
            let (m1, v1) = canonicalize_with_word(&s, Flavor::Mixed, &w[..4]).unwrap();
            let (m2, v2) = canonicalize_with_word(&s.conjugate(&a), Flavor::Mixed, &relabel_word(&w[..4], 4, &a, None)).unwrap();
            prop_assert_eq!(m1, m2);
            prop_assert_eq!(v1, v2);
        }

        #[test]
        fn orbit_distance_triangle(x in arb_tuple(3, 2), y in arb_tuple(3, 2), z in arb_tuple(3, 2)) {
            for flavor in [Flavor::Mixed, Flavor::Pure] {
                let (a, b, c) = (canonicalize(&x, flavor).unwrap(), canonicalize(&y, flavor).unwrap(), canonicalize(&z, flavor).unwrap());
                let ab = orbit_distance(&a, &b).unwrap().0;
                let bc = orbit_distance(&b, &c).unwrap().0;
                let ac = orbit_distance(&a, &c).unwrap().0;
                prop_assert!(ac <= ab + bc);
            }
        }
    }
}
