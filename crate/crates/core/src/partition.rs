//! Set partitions, bipartite partitions, lattice Möbius functions and
//! classical moment/cumulant conversion.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::poly::Ring;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;

/// Union-find over `0..n`.
#[derive(Clone, Debug)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Groups of `0..n` sorted by minimum, each sorted.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut idx = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if idx[r] == usize::MAX {
                idx[r] = out.len();
                out.push(Vec::new());
            }
            out[idx[r]].push(x);
        }
        out
    }

    pub fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Validates and canonicalizes 0-based blocks.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<SetPartition> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::Shape("empty block".into()));
            }
            for &x in b {
                if x >= n || seen[x] {
                    return Err(Error::Shape(format!("blocks {blocks:?} do not partition {n}")));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Shape(format!("blocks {blocks:?} do not cover {n}")));
        }
        Ok(SetPartition::canonical(n, blocks))
    }

    fn canonical(n: usize, mut blocks: Vec<Vec<usize>>) -> SetPartition {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        SetPartition { n, blocks }
    }

    /// `0_n`: all singletons.
    pub fn finest(n: usize) -> SetPartition {
        SetPartition {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// `1_n`: one block.
    pub fn coarsest(n: usize) -> SetPartition {
        SetPartition {
            n,
            blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] },
        }
    }

    /// `Π(σ)`, the partition into cycles.
    pub fn from_perm(p: &Perm) -> SetPartition {
        SetPartition {
            n: p.degree(),
            blocks: p
                .cycles()
                .into_iter()
                .map(|mut c| {
                    c.sort_unstable();
                    c
                })
                .collect(),
        }
    }

    pub(crate) fn from_dsu(n: usize, dsu: &mut Dsu) -> SetPartition {
        SetPartition {
            n,
            blocks: dsu.groups(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing each element.
    pub fn block_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for (k, b) in self.blocks.iter().enumerate() {
            for &x in b {
                idx[x] = k;
            }
        }
        idx
    }

    pub fn join(&self, other: &SetPartition) -> Result<SetPartition> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch(self.n, other.n));
        }
        let mut dsu = Dsu::new(self.n);
        for b in self.blocks.iter().chain(&other.blocks) {
            for w in b.windows(2) {
                dsu.union(w[0], w[1]);
            }
        }
        Ok(SetPartition::from_dsu(self.n, &mut dsu))
    }

    /// Refinement order: every block of `self` sits inside a block of `other`.
    pub fn leq(&self, other: &SetPartition) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch(self.n, other.n));
        }
        let idx = other.block_index();
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&x| idx[x] == idx[b[0]])))
    }

    /// All partitions coarser than `self`: set partitions of its blocks.
    pub fn coarsenings(&self) -> Vec<SetPartition> {
        rgs(self.blocks.len())
            .into_iter()
            .map(|groups| {
                let merged = groups
                    .into_iter()
                    .map(|g| g.into_iter().flat_map(|k| self.blocks[k].clone()).collect())
                    .collect();
                SetPartition::canonical(self.n, merged)
            })
            .collect()
    }

    /// Parses `"{1,2|3}"` (1-based).
    pub fn parse(text: &str) -> Result<SetPartition> {
        let t = text.trim();
        let body = t
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("expected braces in `{t}`")))?;
        if body.trim().is_empty() {
            return SetPartition::new(0, vec![]);
        }
        let blocks = body
            .split('|')
            .map(|b| parse_labels(b, false))
            .collect::<Result<Vec<_>>>()?;
        let n = blocks.iter().map(Vec::len).sum();
        SetPartition::new(n, blocks)
    }
}

fn parse_labels(text: &str, barred: bool) -> Result<Vec<usize>> {
    text.split(',')
        .map(|x| {
            let x = x.trim();
            let x = if barred {
                x.strip_suffix('b')
                    .ok_or_else(|| Error::Parse(format!("expected barred label, got `{x}`")))?
            } else {
                x
            };
            x.parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .map(|v| v - 1)
                .ok_or_else(|| Error::Parse(format!("bad label `{x}`")))
        })
        .collect()
}

fn fmt_labels(xs: &[usize], suffix: &str) -> String {
    xs.iter()
        .map(|x| format!("{}{suffix}", x + 1))
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| fmt_labels(b, "")).collect();
        write!(f, "{{{}}}", parts.join("|"))
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Set partitions of `0..k` via restricted growth strings.
fn rgs(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, k: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, k, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, k, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, k, &mut Vec::new(), &mut out);
    out
}

pub fn enumerate_partitions(n: usize) -> Result<Vec<SetPartition>> {
    check("partition size", n as u64, caps().partition as u64)?;
    Ok(rgs(n)
        .into_iter()
        .map(|b| SetPartition::canonical(n, b))
        .collect())
}

/// `λ_π = (−1)^{#π−1} (#π−1)!`.
pub fn moebius_partition(pi: &SetPartition) -> BigRational {
    BigRational::from_integer(lambda(pi.num_blocks()))
}

pub(crate) fn lambda(k: usize) -> BigInt {
    if k == 0 {
        return BigInt::from(1);
    }
    let f: BigInt = (1..k).map(BigInt::from).product();
    if k % 2 == 1 {
        f
    } else {
        -f
    }
}

/// `λ_{finer, coarser}`: product over blocks of `coarser` of `λ` of the
/// number of `finer` blocks inside.
pub fn moebius_partition_rel(finer: &SetPartition, coarser: &SetPartition) -> Result<BigRational> {
    if !finer.leq(coarser)? {
        return Err(Error::NotRefinement(finer.to_string(), coarser.to_string()));
    }
    let idx = coarser.block_index();
    let mut counts = vec![0usize; coarser.num_blocks()];
    for b in &finer.blocks {
        counts[idx[b[0]]] += 1;
    }
    Ok(BigRational::from_integer(
        counts.into_iter().map(lambda).product(),
    ))
}

/// A partition of `{1..n} ⊔ {1̄..n̄}` whose blocks are balanced.
/// Blocks are `(unbarred, barred)` pairs, sorted, ordered by unbarred minimum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BipartitePartition {
    n: usize,
    blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

impl BipartitePartition {
    pub fn new(n: usize, blocks: Vec<(Vec<usize>, Vec<usize>)>) -> Result<BipartitePartition> {
        let mut seen = vec![false; 2 * n];
        for (u, b) in &blocks {
            if u.len() != b.len() || u.is_empty() {
                return Err(Error::Shape(format!("unbalanced block {u:?};{b:?}")));
            }
            for (&x, off) in u.iter().map(|x| (x, 0)).chain(b.iter().map(|x| (x, n))) {
                if x >= n || seen[x + off] {
                    return Err(Error::Shape("bipartite blocks overlap".into()));
                }
                seen[x + off] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Shape("bipartite blocks do not cover".into()));
        }
        Ok(BipartitePartition::canonical(n, blocks))
    }

    fn canonical(n: usize, mut blocks: Vec<(Vec<usize>, Vec<usize>)>) -> BipartitePartition {
        for (u, b) in &mut blocks {
            u.sort_unstable();
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|(u, _)| u[0]);
        BipartitePartition { n, blocks }
    }

    /// `1_{n,n̄}`.
    pub fn coarsest(n: usize) -> BipartitePartition {
        let all: Vec<usize> = (0..n).collect();
        BipartitePartition {
            n,
            blocks: if n == 0 { vec![] } else { vec![(all.clone(), all)] },
        }
    }

    /// `Π_p(σ)`: blocks `{s, σ(s)̄}`.
    pub fn from_perm(p: &Perm) -> BipartitePartition {
        BipartitePartition {
            n: p.degree(),
            blocks: (0..p.degree()).map(|s| (vec![s], vec![p.apply(s)])).collect(),
        }
    }

    /// Groups nodes `0..2n` (barred = `n + i`) of a union-find.
    pub(crate) fn from_dsu(n: usize, dsu: &mut Dsu) -> BipartitePartition {
        let blocks = dsu
            .groups()
            .into_iter()
            .map(|g| {
                let (u, b): (Vec<usize>, Vec<usize>) = g.into_iter().partition(|&x| x < n);
                (u, b.into_iter().map(|x| x - n).collect())
            })
            .collect();
        BipartitePartition::canonical(n, blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block profile `d_i`: number of blocks with `i` unbarred elements.
    pub fn profile(&self) -> Vec<usize> {
        let mut d = vec![0; self.n + 1];
        for (u, _) in &self.blocks {
            d[u.len()] += 1;
        }
        d
    }

    fn dsu(&self) -> Dsu {
        let mut dsu = Dsu::new(2 * self.n);
        for (u, b) in &self.blocks {
            for &x in u.iter().skip(1) {
                dsu.union(u[0], x);
            }
            for &x in b {
                dsu.union(u[0], self.n + x);
            }
        }
        dsu
    }

    pub fn join(&self, other: &BipartitePartition) -> Result<BipartitePartition> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch(self.n, other.n));
        }
        let mut dsu = self.dsu();
        for (u, b) in &other.blocks {
            for &x in u.iter().skip(1) {
                dsu.union(u[0], x);
            }
            for &x in b {
                dsu.union(u[0], self.n + x);
            }
        }
        Ok(BipartitePartition::from_dsu(self.n, &mut dsu))
    }

    pub fn leq(&self, other: &BipartitePartition) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch(self.n, other.n));
        }
        let mut idx = vec![0; 2 * self.n];
        for (k, (u, b)) in other.blocks.iter().enumerate() {
            for &x in u {
                idx[x] = k;
            }
            for &x in b {
                idx[self.n + x] = k;
            }
        }
        Ok(self.blocks.iter().all(|(u, b)| {
            let k = idx[u[0]];
            u.iter().all(|&x| idx[x] == k) && b.iter().all(|&x| idx[self.n + x] == k)
        }))
    }

    pub fn coarsenings(&self) -> Vec<BipartitePartition> {
        rgs(self.blocks.len())
            .into_iter()
            .map(|groups| {
                let merged = groups
                    .into_iter()
                    .map(|g| {
                        let mut u = Vec::new();
                        let mut b = Vec::new();
                        for k in g {
                            u.extend_from_slice(&self.blocks[k].0);
                            b.extend_from_slice(&self.blocks[k].1);
                        }
                        (u, b)
                    })
                    .collect();
                BipartitePartition::canonical(self.n, merged)
            })
            .collect()
    }

    /// Relative Möbius function, a product over coarser blocks.
    pub fn moebius_rel(&self, coarser: &BipartitePartition) -> Result<BigRational> {
        if !self.leq(coarser)? {
            return Err(Error::NotRefinement(self.to_string(), coarser.to_string()));
        }
        let mut idx = vec![0; self.n];
        for (k, (u, _)) in coarser.blocks.iter().enumerate() {
            for &x in u {
                idx[x] = k;
            }
        }
        let mut counts = vec![0usize; coarser.num_blocks()];
        for (u, _) in &self.blocks {
            counts[idx[u[0]]] += 1;
        }
        Ok(BigRational::from_integer(
            counts.into_iter().map(lambda).product(),
        ))
    }

    /// Parses `"{1,2;1b,2b|3;3b}"`.
    pub fn parse(text: &str) -> Result<BipartitePartition> {
        let t = text.trim();
        let body = t
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("expected braces in `{t}`")))?;
        if body.trim().is_empty() {
            return BipartitePartition::new(0, vec![]);
        }
        let blocks = body
            .split('|')
            .map(|blk| {
                let (u, b) = blk
                    .split_once(';')
                    .ok_or_else(|| Error::Parse(format!("missing `;` in `{blk}`")))?;
                Ok((parse_labels(u, false)?, parse_labels(b, true)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = blocks.iter().map(|(u, _)| u.len()).sum();
        BipartitePartition::new(n, blocks)
    }
}

impl fmt::Display for BipartitePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|(u, b)| format!("{};{}", fmt_labels(u, ""), fmt_labels(b, "b")))
            .collect();
        write!(f, "{{{}}}", parts.join("|"))
    }
}

impl fmt::Debug for BipartitePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// All bipartite partitions of `{1..n} ⊔ {1̄..n̄}`: a set partition of the
/// unbarred side, then an ordered choice of equally sized barred subsets.
pub fn enumerate_bipartite(n: usize) -> Result<Vec<BipartitePartition>> {
    check("partition size", n as u64, caps().partition as u64)?;
    let mut out = Vec::new();
    for pi in rgs(n) {
        let mut chosen: Vec<Vec<usize>> = Vec::new();
        assign_barred(&pi, 0, &mut vec![false; n], &mut chosen, &mut |barred| {
            let blocks = pi.iter().cloned().zip(barred.iter().cloned()).collect();
            out.push(BipartitePartition::canonical(n, blocks));
        });
    }
    Ok(out)
}

fn assign_barred(
    pi: &[Vec<usize>],
    k: usize,
    used: &mut Vec<bool>,
    chosen: &mut Vec<Vec<usize>>,
    emit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if k == pi.len() {
        emit(chosen);
        return;
    }
    let free: Vec<usize> = (0..used.len()).filter(|&x| !used[x]).collect();
    for_subsets(&free, pi[k].len(), &mut |sub| {
        for &x in sub {
            used[x] = true;
        }
        chosen.push(sub.to_vec());
        assign_barred(pi, k + 1, used, chosen, emit);
        chosen.pop();
        for &x in sub {
            used[x] = false;
        }
    });
}

fn for_subsets(items: &[usize], size: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], size: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        if items.len() < size - cur.len() {
            return;
        }
        for (i, &x) in items.iter().enumerate() {
            cur.push(x);
            rec(&items[i + 1..], size, cur, f);
            cur.pop();
        }
    }
    rec(items, size, &mut Vec::new(), f);
}

/// All nonempty subsets of `0..n`, as sorted vectors.
fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

/// Classical cumulant `k_n = Σ_π λ_π ∏_{B∈π} m(B)` of `n` variables, with
/// joint moments supplied per block.
pub fn classical_cumulant<R: Ring>(n: usize, moment: impl Fn(&[usize]) -> Result<R>) -> Result<R> {
    let mut total = R::zero();
    for pi in enumerate_partitions(n)? {
        let mut term = R::from_rational(&moebius_partition(&pi));
        for b in pi.blocks() {
            term = term.mul(&moment(b)?);
        }
        total = total.add(&term);
    }
    Ok(total)
}

/// Joint moment `Σ_π ∏_{B∈π} k(B)`.
pub fn classical_moment<R: Ring>(n: usize, cumulant: impl Fn(&[usize]) -> Result<R>) -> Result<R> {
    let mut total = R::zero();
    for pi in enumerate_partitions(n)? {
        let mut term = R::one();
        for b in pi.blocks() {
            term = term.mul(&cumulant(b)?);
        }
        total = total.add(&term);
    }
    Ok(total)
}

fn sub_lookup<'a, R>(table: &'a BTreeMap<Vec<usize>, R>, set: &[usize], blk: &[usize]) -> Result<&'a R> {
    let key: Vec<usize> = blk.iter().map(|&i| set[i]).collect();
    table
        .get(&key)
        .ok_or_else(|| Error::Missing(format!("entry for subset {key:?}")))
}

/// Cumulants of every nonempty subset from a table of joint moments keyed by
/// sorted 0-based subsets of `0..n`.
pub fn cumulants_from_moments<R: Ring>(
    n: usize,
    moments: &BTreeMap<Vec<usize>, R>,
) -> Result<BTreeMap<Vec<usize>, R>> {
    nonempty_subsets(n)
        .into_iter()
        .map(|set| {
            let k = classical_cumulant(set.len(), |b| Ok(sub_lookup(moments, &set, b)?.clone()))?;
            Ok((set, k))
        })
        .collect()
}

pub fn moments_from_cumulants<R: Ring>(
    n: usize,
    cumulants: &BTreeMap<Vec<usize>, R>,
) -> Result<BTreeMap<Vec<usize>, R>> {
    nonempty_subsets(n)
        .into_iter()
        .map(|set| {
            let m = classical_moment(set.len(), |b| Ok(sub_lookup(cumulants, &set, b)?.clone()))?;
            Ok((set, m))
        })
        .collect()
}

/// Bipartite cumulant `Σ_{Π∈𝒫(n,n̄)} λ_Π ∏_B m(B, B̄)`.
pub fn bipartite_cumulant<R: Ring>(
    n: usize,
    moment: impl Fn(&[usize], &[usize]) -> Result<R>,
) -> Result<R> {
    let mut total = R::zero();
    for pi in enumerate_bipartite(n)? {
        let mut term = R::from_rational(&BigRational::from_integer(lambda(pi.num_blocks())));
        for (u, b) in pi.blocks() {
            term = term.mul(&moment(u, b)?);
        }
        total = total.add(&term);
    }
    Ok(total)
}

pub fn bipartite_moment<R: Ring>(
    n: usize,
    cumulant: impl Fn(&[usize], &[usize]) -> Result<R>,
) -> Result<R> {
    let mut total = R::zero();
    for pi in enumerate_bipartite(n)? {
        let mut term = R::one();
        for (u, b) in pi.blocks() {
            term = term.mul(&cumulant(u, b)?);
        }
        total = total.add(&term);
    }
    Ok(total)
}
