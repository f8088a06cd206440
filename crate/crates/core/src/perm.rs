//! Permutations, Cayley distance, geodesics and the non-crossing lattice.
//!
//! Permutations are stored in one-line form over `0..n`; the text forms use
//! the customary 1-based labels (`"(1 3 2)(4)"`, `"[3,1,2,4]"`).

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    img: Vec<u8>,
}

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm {
            img: (0..n as u8).collect(),
        }
    }

    /// The full cycle `(1 2 … n)`.
    pub fn full_cycle(n: usize) -> Perm {
        Perm {
            img: (0..n).map(|i| ((i + 1) % n) as u8).collect(),
        }
    }

    /// Builds from 0-based images, checking bijectivity.
    pub fn from_images(img: Vec<usize>) -> Result<Perm> {
        let n = img.len();
        if n > u8::MAX as usize {
            return Err(Error::NotAPermutation(format!("degree {n} too large")));
        }
        let mut seen = vec![false; n];
        for &x in &img {
            if x >= n || seen[x] {
                return Err(Error::NotAPermutation(format!("{img:?}")));
            }
            seen[x] = true;
        }
        Ok(Perm {
            img: img.into_iter().map(|x| x as u8).collect(),
        })
    }

    pub(crate) fn from_u8(img: Vec<u8>) -> Perm {
        debug_assert!(Perm::from_images(img.iter().map(|&x| x as usize).collect()).is_ok());
        Perm { img }
    }

    /// Builds from 1-based cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut img: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        for cyc in cycles {
            for (k, &a) in cyc.iter().enumerate() {
                if a == 0 || a > n || used[a - 1] {
                    return Err(Error::NotAPermutation(format!("bad cycle {cyc:?}")));
                }
                used[a - 1] = true;
                img[a - 1] = cyc[(k + 1) % cyc.len()] - 1;
            }
        }
        Perm::from_images(img)
    }

    pub fn degree(&self) -> usize {
        self.img.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.img[i] as usize
    }

    pub fn images(&self) -> Vec<usize> {
        self.img.iter().map(|&x| x as usize).collect()
    }

    /// `(self ∘ q)(i) = self(q(i))`.
    pub fn compose(&self, q: &Perm) -> Result<Perm> {
        if self.degree() != q.degree() {
            return Err(Error::DegreeMismatch(self.degree(), q.degree()));
        }
        Ok(self.mul(q))
    }

    /// Unchecked composition `self ∘ q`.
    #[inline]
    pub fn mul(&self, q: &Perm) -> Perm {
        Perm {
            img: q.img.iter().map(|&i| self.img[i as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u8; self.degree()];
        for (i, &x) in self.img.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Perm { img: inv }
    }

    /// `η ∘ self ∘ η⁻¹`.
    pub fn conjugate_by(&self, eta: &Perm) -> Perm {
        let mut out = vec![0u8; self.degree()];
        for (i, &x) in self.img.iter().enumerate() {
            out[eta.img[i] as usize] = eta.img[x as usize];
        }
        Perm { img: out }
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// Cycles, each starting at its minimum, sorted by minimum.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut cyc = vec![s];
            seen[s] = true;
            let mut t = self.apply(s);
            while t != s {
                seen[t] = true;
                cyc.push(t);
                t = self.apply(t);
            }
            out.push(cyc);
        }
        out
    }

    pub fn num_cycles(&self) -> usize {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if !seen[s] {
                count += 1;
                let mut t = s;
                while !seen[t] {
                    seen[t] = true;
                    t = self.apply(t);
                }
            }
        }
        count
    }

    /// `|σ| = n − #σ`, the minimal number of transpositions.
    pub fn length(&self) -> usize {
        self.degree() - self.num_cycles()
    }

    pub fn cycle_type(&self) -> IntegerPartition {
        IntegerPartition::new(self.cycles().iter().map(Vec::len).collect())
    }

    /// Restriction to an invariant subset, relabeled monotonically.
    pub fn restrict(&self, subset: &[usize]) -> Perm {
        let mut pos = vec![usize::MAX; self.degree()];
        for (k, &s) in subset.iter().enumerate() {
            pos[s] = k;
        }
        Perm {
            img: subset
                .iter()
                .map(|&s| {
                    let p = pos[self.apply(s)];
                    debug_assert!(p != usize::MAX, "subset not invariant");
                    p as u8
                })
                .collect(),
        }
    }

    /// Parses cycle notation `"(1 3 2)(4)"` or one-line `"[3,1,2,4]"`.
    /// Cycle notation needs the degree; `None` uses the largest label seen.
    pub fn parse(text: &str, degree: Option<usize>) -> Result<Perm> {
        let t = text.trim();
        if let Some(body) = t.strip_prefix('[') {
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("unterminated one-line form `{t}`")))?;
            let img: Vec<usize> = if body.trim().is_empty() {
                Vec::new()
            } else {
                body.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<usize>()
                            .ok()
                            .filter(|&v| v >= 1)
                            .map(|v| v - 1)
                            .ok_or_else(|| Error::Parse(format!("bad image `{x}`")))
                    })
                    .collect::<Result<_>>()?
            };
            if let Some(n) = degree {
                if n != img.len() {
                    return Err(Error::DegreeMismatch(n, img.len()));
                }
            }
            return Perm::from_images(img);
        }
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = t;
        while !rest.is_empty() {
            let r = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected `(` in `{t}`")))?;
            let end = r
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unterminated cycle in `{t}`")))?;
            let cyc = r[..end]
                .split([' ', ','])
                .filter(|s| !s.is_empty())
                .map(|x| {
                    x.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad label `{x}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if !cyc.is_empty() {
                cycles.push(cyc);
            }
            rest = r[end + 1..].trim_start();
        }
        let max = cycles.iter().flatten().copied().max().unwrap_or(0);
        let n = degree.unwrap_or(max);
        if max > n {
            return Err(Error::Parse(format!("label {max} exceeds degree {n}")));
        }
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        Perm::from_cycles(n, &refs)
    }

    /// One-line form `[3,1,2,4]`, 1-based.
    pub fn one_line(&self) -> String {
        let parts: Vec<String> = self.img.iter().map(|x| (x + 1).to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Display for Perm {
    /// Cycle notation with fixed points shown, cycles sorted by minimum.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "()");
        }
        for cyc in self.cycles() {
            let parts: Vec<String> = cyc.iter().map(|x| (x + 1).to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A weakly decreasing list of positive parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct IntegerPartition {
    parts: Vec<usize>,
}

impl IntegerPartition {
    pub fn new(mut parts: Vec<usize>) -> IntegerPartition {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        IntegerPartition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// `d_i`: the number of parts equal to `i`, for `i = 1..=n`.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut d = vec![0; self.n() + 1];
        for &p in &self.parts {
            d[p] += 1;
        }
        d
    }

    /// A permutation with this cycle type, cycles on consecutive labels.
    pub fn representative(&self) -> Perm {
        let n = self.n();
        let mut img = vec![0u8; n];
        let mut start = 0;
        for &p in &self.parts {
            for k in 0..p {
                img[start + k] = (start + (k + 1) % p) as u8;
            }
            start += p;
        }
        Perm { img }
    }

    /// All partitions of `n` in reverse lexicographic order.
    pub fn all(n: usize) -> Vec<IntegerPartition> {
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<IntegerPartition>) {
            if rem == 0 {
                out.push(IntegerPartition { parts: cur.clone() });
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n, &mut Vec::new(), &mut out);
        out
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..n as u8).collect();
    loop {
        out.push(Perm { img: cur.clone() });
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// `S_n` in lexicographic order, built once per degree.
pub fn sym_group(n: usize) -> Arc<Vec<Perm>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Perm>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(g) = cache.lock().unwrap().get(&n) {
        return g.clone();
    }
    let g = Arc::new(all_perms(n));
    cache.lock().unwrap().insert(n, g.clone());
    g
}

/// All `D`-tuples over `S_n`, in lexicographic order.
pub fn all_tuples(n: usize, d: usize) -> Vec<Vec<Perm>> {
    let perms = all_perms(n);
    let mut out: Vec<Vec<Perm>> = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * perms.len());
        for t in &out {
            for p in &perms {
                let mut t2 = t.clone();
                t2.push(p.clone());
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// `d(p, q) = |p q⁻¹|`.
pub fn cayley_distance(p: &Perm, q: &Perm) -> Result<usize> {
    if p.degree() != q.degree() {
        return Err(Error::DegreeMismatch(p.degree(), q.degree()));
    }
    Ok(dist(p, q))
}

#[inline]
pub(crate) fn dist(p: &Perm, q: &Perm) -> usize {
    // number of cycles of p q⁻¹ equals that of q⁻¹ p; walk i -> q⁻¹(p(i))
    let n = p.degree();
    let qi = q.inverse();
    let mut seen = [false; 256];
    let mut cycles = 0;
    for s in 0..n {
        if !seen[s] {
            cycles += 1;
            let mut t = s;
            while !seen[t] {
                seen[t] = true;
                t = qi.apply(p.apply(t));
            }
        }
    }
    n - cycles
}

/// `τ ⪯ σ`: `|τ| + |τσ⁻¹| = |σ|`.
pub fn is_geodesic(tau: &Perm, sigma: &Perm) -> Result<bool> {
    Ok(tau.length() + cayley_distance(tau, sigma)? == sigma.length())
}

/// Non-crossing partitions of `0..k`, blocks listed in increasing order.
pub fn nc_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let list: Vec<usize> = (0..k).collect();
    nc_of(&list)
}

fn nc_of(list: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if list.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    grow(&list[1..], vec![list[0]], Vec::new(), &mut out);
    out
}

// Extend the block containing the first element; every gap is an independent
// non-crossing partition.
fn grow(
    rest: &[usize],
    block: Vec<usize>,
    others: Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    for tail in nc_of(rest) {
        let mut blocks = others.clone();
        blocks.push(block.clone());
        blocks.extend(tail);
        out.push(blocks);
    }
    for j in 0..rest.len() {
        let mut b = block.clone();
        b.push(rest[j]);
        for gap in nc_of(&rest[..j]) {
            let mut o = others.clone();
            o.extend(gap);
            grow(&rest[j + 1..], b.clone(), o, out);
        }
    }
}

/// All `τ ⪯ σ`, built per cycle of `σ` from non-crossing partitions of the
/// cycle read in `σ`'s cyclic order.
pub fn enumerate_noncrossing(sigma: &Perm) -> Vec<Perm> {
    let n = sigma.degree();
    let mut acc: Vec<Vec<u8>> = vec![(0..n as u8).collect()];
    for cyc in sigma.cycles() {
        if cyc.len() == 1 {
            continue;
        }
        let mut next = Vec::new();
        for part in nc_partitions(cyc.len()) {
            for base in &acc {
                let mut img = base.clone();
                for block in &part {
                    for (k, &p) in block.iter().enumerate() {
                        img[cyc[p]] = cyc[block[(k + 1) % block.len()]] as u8;
                    }
                }
                next.push(img);
            }
        }
        acc = next;
    }
    acc.into_iter().map(|img| Perm { img }).collect()
}

/// `𝖬(ν) = ∏ over cycles of length p of (−1)^{p−1} C_{p−1}`.
pub fn moebius_nc(nu: &Perm) -> BigRational {
    BigRational::from_integer(moebius_nc_int(nu))
}

pub fn moebius_nc_int(nu: &Perm) -> BigInt {
    let mut m = BigInt::one();
    for cyc in nu.cycles() {
        let p = cyc.len();
        let c = catalan(p - 1);
        m *= if p % 2 == 1 { c } else { -c };
    }
    m
}

/// Genus of the bipartite map `(σ, τ)`.
pub fn genus(sigma: &Perm, tau: &Perm) -> Result<usize> {
    let n = sigma.degree();
    if n != tau.degree() {
        return Err(Error::DegreeMismatch(n, tau.degree()));
    }
    let k = crate::partition::SetPartition::from_perm(sigma)
        .join(&crate::partition::SetPartition::from_perm(tau))?
        .num_blocks();
    let chi = (2 * k + n) as i64
        - (sigma.num_cycles() + tau.num_cycles() + sigma.mul(&tau.inverse()).num_cycles()) as i64;
    assert!(chi >= 0 && chi % 2 == 0, "Euler relation violated");
    Ok((chi / 2) as usize)
}

pub fn catalan(n: usize) -> BigInt {
    // C_n = binom(2n, n) / (n + 1)
    let mut c = BigInt::one();
    for k in 0..n {
        c = c * BigInt::from(2 * (2 * k + 1)) / BigInt::from(k + 2);
    }
    c
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Number of connected melonic pure classes at `(n, D)`, by enumeration.
pub fn fuss_catalan_probe(n: usize, d: usize) -> Result<u64> {
    use crate::invariants::{enumerate_classes, Flavor};
    let classes = enumerate_classes(n, d, Flavor::Pure, true)?;
    Ok(classes
        .iter()
        .filter(|c| crate::melonic::is_melonic(&c.rep))
        .count() as u64)
}
