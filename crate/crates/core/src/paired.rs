//! Paired tensors and melonic graphs of paired tensors: strict splits of
//! first-order invariants, grouping and ungrouping, centering, paired free
//! cumulants and the asymptotic freeness checker.
//!
//! A graph stores, per color, the cycles `γ_{c,b}` over slots
//! `(thick edge, shade)`: the output of one slot is summed with the input of
//! the next slot of its cycle.

use crate::error::{Error, Result};
use crate::ensembles::{gaussian_scaling, wishart_scaling};
use crate::invariants::{enumerate_classes, k_mixed, k_pure, Flavor, PermTuple, Word};
use crate::melonic::canonical_pairing;
use crate::partition::Dsu;
use crate::perm::{enumerate_noncrossing, moebius_nc, Perm};
use crate::poly::Ring;
use crate::transforms::{
    asymptotic_cumulant_melonic_word, asymptotic_cumulant_wishart_mixed_word, MomentTable, Table,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::{HashMap, HashSet};

/// `(thick edge, shade)`.
pub type Slot = (usize, usize);

/// Sub-cycles of one cycle with their Möbius weight.
type WeightedSplit = (Vec<Vec<Slot>>, BigRational);

/// Number of shaded input/output pairs per color.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairedShape {
    k: Vec<usize>,
}

impl PairedShape {
    pub fn new(k: Vec<usize>) -> Result<PairedShape> {
        if k.is_empty() {
            return Err(Error::Shape("a paired shape needs D ≥ 1 colors".into()));
        }
        if k.iter().sum::<usize>() == 0 {
            return Err(Error::Shape("a paired tensor needs at least one input".into()));
        }
        Ok(PairedShape { k })
    }

    /// Shape of a closed component, produced only by grouping with no open edge.
    fn closed(d: usize) -> PairedShape {
        PairedShape { k: vec![0; d] }
    }

    pub fn k(&self) -> &[usize] {
        &self.k
    }

    pub fn d(&self) -> usize {
        self.k.len()
    }

    /// `𝒟 = Σ_c k_c`.
    pub fn inputs(&self) -> usize {
        self.k.iter().sum()
    }
}

/// A paired tensor built from `n` regular tensors: internal edges plus the
/// shaded free half-edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedTensor {
    flavor: Flavor,
    /// `internal[c][s]`: white vertex joined to black `s` by color `c`, or
    /// `None` when that output is free.
    internal: Vec<Vec<Option<usize>>>,
    /// `shades[c][r]`: black vertex with the free output and white vertex
    /// with the free input of shade `r`.
    shades: Vec<Vec<(usize, usize)>>,
    word: Word,
}

impl PairedTensor {
    pub fn new(
        flavor: Flavor,
        internal: Vec<Vec<Option<usize>>>,
        shades: Vec<Vec<(usize, usize)>>,
        word: Word,
    ) -> Result<PairedTensor> {
        let d = internal.len();
        if d == 0 || shades.len() != d {
            return Err(Error::Shape("internal edges and shades need one entry per color".into()));
        }
        let n = internal[0].len();
        let want = match flavor {
            Flavor::Mixed => n,
            Flavor::Pure => 2 * n,
        };
        if word.len() != want {
            return Err(Error::Shape(format!("word of length {} for {n} regular tensors", word.len())));
        }
        for c in 0..d {
            if internal[c].len() != n {
                return Err(Error::Shape(format!("color {} has {} blacks, expected {n}", c + 1, internal[c].len())));
            }
            let mut black_free = vec![false; n];
            let mut white_used = vec![false; n];
            for (s, w) in internal[c].iter().enumerate() {
                match *w {
                    Some(w) if w < n && !white_used[w] => white_used[w] = true,
                    Some(_) => return Err(Error::Shape(format!("color {} internal edges are not injective", c + 1))),
                    None => black_free[s] = true,
                }
            }
            for &(b, w) in &shades[c] {
                if b >= n || w >= n || !black_free[b] || white_used[w] {
                    return Err(Error::Shape(format!("color {} shade ({b}, {w}) is not a free pair", c + 1)));
                }
                black_free[b] = false;
                white_used[w] = true;
            }
            if black_free.iter().any(|&f| f) || white_used.iter().any(|&u| !u) {
                return Err(Error::Shape(format!("color {} leaves a half-edge unshaded", c + 1)));
            }
        }
        Ok(PairedTensor {
            flavor,
            internal,
            shades,
            word,
        })
    }

    /// The mixed cycle-form tensor `M_1 M_2 ⋯ M_k`: shade `r` pairs the
    /// output at `M_r` with the input at `M_{r−1}`.
    pub fn cycle_form(labels: &[u8], d: usize) -> Result<PairedTensor> {
        let k = labels.len();
        if k == 0 || d == 0 {
            return Err(Error::Shape("cycle form needs k ≥ 1 and D ≥ 1".into()));
        }
        let shades: Vec<(usize, usize)> = (0..k).map(|r| (r, (r + k - 1) % k)).collect();
        PairedTensor::new(Flavor::Mixed, vec![vec![None; k]; d], vec![shades; d], labels.to_vec())
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Number of regular tensors.
    pub fn n(&self) -> usize {
        self.internal[0].len()
    }

    pub fn d(&self) -> usize {
        self.internal.len()
    }

    pub fn internal(&self) -> &[Vec<Option<usize>>] {
        &self.internal
    }

    pub fn shades(&self) -> &[Vec<(usize, usize)>] {
        &self.shades
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn shape(&self) -> PairedShape {
        PairedShape {
            k: self.shades.iter().map(Vec::len).collect(),
        }
    }

    /// The common label when every regular tensor carries the same one.
    pub fn symbol(&self) -> Option<u8> {
        let first = *self.word.first()?;
        self.word.iter().all(|&x| x == first).then_some(first)
    }

    /// Same tensor with every regular tensor relabeled to `label`.
    pub fn with_label(&self, label: u8) -> PairedTensor {
        PairedTensor {
            word: vec![label; self.word.len()],
            ..self.clone()
        }
    }
}

/// A thick edge's paired tensor: a generated tensor or the identity `1_𝒟`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Identity(PairedShape),
    Tensor(PairedTensor),
}

impl Generator {
    pub fn shape(&self) -> PairedShape {
        match self {
            Generator::Identity(s) => s.clone(),
            Generator::Tensor(t) => t.shape(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Generator::Identity(_))
    }
}

/// Per thick edge: the generating symbol, or `None` for an identity.
pub type GeneratorAssignment = Vec<Option<u8>>;

/// Symbols of the generators; tensors must carry a constant word.
pub fn assignment(gens: &[Generator]) -> Result<GeneratorAssignment> {
    gens.iter()
        .map(|g| match g {
            Generator::Identity(_) => Ok(None),
            Generator::Tensor(t) => t
                .symbol()
                .map(Some)
                .ok_or_else(|| Error::Precondition("a generator mixes several labels".into())),
        })
        .collect()
}

/// Pure first-order tuples relabeled so that the canonical pairing is the
/// identity; `None` when `s` is not first order.
pub fn pure_normal_form(s: &PermTuple) -> Option<PermTuple> {
    if k_pure(s) != 1 {
        return None;
    }
    let eta = canonical_pairing(s)?;
    Some(s.relabel(&Perm::identity(s.n()), &eta.inverse()))
}

/// First order in the given flavor: pure tuples purely connected and melonic
/// with canonical pairing the identity, mixed tuples connected with
/// `(𝛔, id)` melonic.
pub fn is_first_order(s: &PermTuple, flavor: Flavor) -> bool {
    match flavor {
        Flavor::Pure => k_pure(s) == 1 && canonical_pairing(s).is_some_and(|e| e.is_identity()),
        Flavor::Mixed => k_mixed(s) == 1 && canonical_pairing(&s.extended(&Perm::identity(s.n()))).is_some(),
    }
}

/// Canonical pairing used for alternating cycles.
fn alternating_pairing(s: &PermTuple, flavor: Flavor) -> Result<Perm> {
    if !is_first_order(s, flavor) {
        return Err(Error::Precondition(format!("{s} is not first order ({flavor})")));
    }
    Ok(match flavor {
        Flavor::Pure => Perm::identity(s.n()),
        Flavor::Mixed => canonical_pairing(&s.extended(&Perm::identity(s.n()))).expect("checked melonic"),
    })
}

/// Cycles alternating color `c` and canonical pairs, as cycles of `η⁻¹σ_c`
/// on black vertices.
pub fn alternating_cycles(s: &PermTuple, flavor: Flavor) -> Result<Vec<Vec<Vec<usize>>>> {
    let ei = alternating_pairing(s, flavor)?.inverse();
    Ok(s.perms().iter().map(|p| ei.mul(p).cycles()).collect())
}

/// Splits open the edges `(c, s)` (color, black vertex) of a first-order
/// tuple, one per alternating cycle, and returns the generated paired tensor.
pub fn split_first_order(s: &PermTuple, flavor: Flavor, edges: &[(usize, usize)], word: &[u8]) -> Result<PairedTensor> {
    let (n, d) = (s.n(), s.d());
    let cycles = alternating_cycles(s, flavor)?;
    let mut open = vec![vec![false; n]; d];
    for &(c, b) in edges {
        if c >= d || b >= n || open[c][b] {
            return Err(Error::Precondition(format!("edge ({}, {}) is invalid or repeated", c + 1, b + 1)));
        }
        open[c][b] = true;
    }
    for (c, cyc) in cycles.iter().enumerate() {
        for cycle in cyc {
            if cycle.iter().filter(|&&b| open[c][b]).count() != 1 {
                return Err(Error::Precondition(format!(
                    "color {} needs exactly one open edge on each alternating cycle",
                    c + 1
                )));
            }
        }
    }
    let internal = (0..d)
        .map(|c| (0..n).map(|b| (!open[c][b]).then(|| s.color(c).apply(b))).collect())
        .collect();
    let shades = (0..d)
        .map(|c| (0..n).filter(|&b| open[c][b]).map(|b| (b, s.color(c).apply(b))).collect())
        .collect();
    PairedTensor::new(flavor, internal, shades, word.to_vec())
}

/// Every strict edge set of a first-order tuple: one edge per alternating cycle.
pub fn strict_splits(s: &PermTuple, flavor: Flavor) -> Result<Vec<Vec<(usize, usize)>>> {
    let cycles = alternating_cycles(s, flavor)?;
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for (c, cyc) in cycles.iter().enumerate() {
        for cycle in cyc {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    cycle.iter().map(move |&b| {
                        let mut e = prefix.clone();
                        e.push((c, b));
                        e
                    })
                })
                .collect();
        }
    }
    Ok(out)
}

/// A graph of `q` paired tensors stored by its cycles per color.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PairedGraph {
    shapes: Vec<PairedShape>,
    labels: Vec<String>,
    cycles: Vec<Vec<Vec<Slot>>>,
}

fn normalize_cycles(cycles: &mut [Vec<Vec<Slot>>]) {
    for color in cycles.iter_mut() {
        for cycle in color.iter_mut() {
            let m = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
            cycle.rotate_left(m);
        }
        color.sort();
    }
}

impl PairedGraph {
    pub fn new(shapes: Vec<PairedShape>, labels: Vec<String>, mut cycles: Vec<Vec<Vec<Slot>>>) -> Result<PairedGraph> {
        let d = shapes.first().map(PairedShape::d).unwrap_or(cycles.len());
        if shapes.iter().any(|s| s.d() != d) || cycles.len() != d {
            return Err(Error::Shape("thick edges and cycles disagree on D".into()));
        }
        if labels.len() != shapes.len() {
            return Err(Error::Shape("one label per thick edge".into()));
        }
        for (c, color) in cycles.iter().enumerate() {
            let mut seen = HashSet::new();
            for &(l, r) in color.iter().flatten() {
                if l >= shapes.len() || r >= shapes[l].k[c] || !seen.insert((l, r)) {
                    return Err(Error::Shape(format!("color {} slot ({}, {}) is invalid or repeated", c + 1, l + 1, r + 1)));
                }
            }
            if color.iter().any(Vec::is_empty) {
                return Err(Error::Shape("empty cycle".into()));
            }
            let total: usize = shapes.iter().map(|s| s.k[c]).sum();
            if seen.len() != total {
                return Err(Error::Shape(format!("color {} leaves a slot dangling", c + 1)));
            }
        }
        normalize_cycles(&mut cycles);
        Ok(PairedGraph { shapes, labels, cycles })
    }

    /// `succ[c][ℓ][r]`: the slot whose input receives the output of `(ℓ, r)`.
    pub fn from_successors(shapes: Vec<PairedShape>, labels: Vec<String>, succ: &[Vec<Vec<Slot>>]) -> Result<PairedGraph> {
        let mut cycles = Vec::with_capacity(succ.len());
        for color in succ {
            let mut seen: HashSet<Slot> = HashSet::new();
            let mut cyc = Vec::new();
            for (l, row) in color.iter().enumerate() {
                for r in 0..row.len() {
                    if seen.contains(&(l, r)) {
                        continue;
                    }
                    let mut cycle = Vec::new();
                    let mut x = (l, r);
                    while seen.insert(x) {
                        cycle.push(x);
                        x = *color
                            .get(x.0)
                            .and_then(|row| row.get(x.1))
                            .ok_or_else(|| Error::Shape("successor out of range".into()))?;
                    }
                    if x != (l, r) {
                        return Err(Error::Shape("successors are not a permutation of slots".into()));
                    }
                    cyc.push(cycle);
                }
            }
            cycles.push(cyc);
        }
        PairedGraph::new(shapes, labels, cycles)
    }

    /// `𝐢𝐝_1`: one thick edge whose outputs are summed with their paired inputs.
    pub fn single(shape: PairedShape, label: &str) -> PairedGraph {
        let cycles = (0..shape.d()).map(|c| (0..shape.k[c]).map(|r| vec![(0, r)]).collect()).collect();
        PairedGraph {
            shapes: vec![shape],
            labels: vec![label.to_string()],
            cycles,
        }
    }

    pub fn q(&self) -> usize {
        self.shapes.len()
    }

    pub fn d(&self) -> usize {
        self.cycles.len()
    }

    pub fn shapes(&self) -> &[PairedShape] {
        &self.shapes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Normalized cycles of color `c`.
    pub fn cycles(&self, c: usize) -> &[Vec<Slot>] {
        &self.cycles[c]
    }

    pub fn successors(&self) -> Vec<Vec<Vec<Slot>>> {
        (0..self.d())
            .map(|c| {
                let mut succ: Vec<Vec<Slot>> = self.shapes.iter().map(|s| vec![(0, 0); s.k[c]]).collect();
                for cycle in &self.cycles[c] {
                    for (i, &(l, r)) in cycle.iter().enumerate() {
                        succ[l][r] = cycle[(i + 1) % cycle.len()];
                    }
                }
                succ
            })
            .collect()
    }

    /// Thick edges grouped by connected component, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut dsu = Dsu::new(self.q());
        for cycle in self.cycles.iter().flatten() {
            for w in cycle.windows(2) {
                dsu.union(w[0].0, w[1].0);
            }
        }
        dsu.groups()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// The subgraph on `edges` (sorted), which must be a union of cycles.
    pub fn restrict(&self, edges: &[usize]) -> Result<PairedGraph> {
        let mut pos = vec![usize::MAX; self.q()];
        for (i, &l) in edges.iter().enumerate() {
            pos[l] = i;
        }
        let mut cycles = Vec::with_capacity(self.d());
        for color in &self.cycles {
            let mut cyc = Vec::new();
            for cycle in color {
                let inside = cycle.iter().filter(|x| pos[x.0] != usize::MAX).count();
                if inside == cycle.len() {
                    cyc.push(cycle.iter().map(|&(l, r)| (pos[l], r)).collect());
                } else if inside != 0 {
                    return Err(Error::Precondition("restriction cuts a cycle".into()));
                }
            }
            cycles.push(cyc);
        }
        PairedGraph::new(
            edges.iter().map(|&l| self.shapes[l].clone()).collect(),
            edges.iter().map(|&l| self.labels[l].clone()).collect(),
            cycles,
        )
    }

    /// Removes thick edges and reconnects each cycle around them; cycles
    /// made only of removed slots disappear.
    pub fn remove(&self, drop: &[usize]) -> PairedGraph {
        let dropped: HashSet<usize> = drop.iter().copied().collect();
        let keep: Vec<usize> = (0..self.q()).filter(|l| !dropped.contains(l)).collect();
        let mut pos = vec![usize::MAX; self.q()];
        for (i, &l) in keep.iter().enumerate() {
            pos[l] = i;
        }
        let mut cycles: Vec<Vec<Vec<Slot>>> = self
            .cycles
            .iter()
            .map(|color| {
                color
                    .iter()
                    .map(|cycle| cycle.iter().filter(|x| pos[x.0] != usize::MAX).map(|&(l, r)| (pos[l], r)).collect::<Vec<_>>())
                    .filter(|c| !c.is_empty())
                    .collect()
            })
            .collect();
        normalize_cycles(&mut cycles);
        PairedGraph {
            shapes: keep.iter().map(|&l| self.shapes[l].clone()).collect(),
            labels: keep.iter().map(|&l| self.labels[l].clone()).collect(),
            cycles,
        }
    }

    /// A thick edge all of whose slots are self-loops but one.
    fn leaf(&self) -> Option<usize> {
        let mut open = vec![0usize; self.q()];
        for cycle in self.cycles.iter().flatten() {
            if cycle.len() > 1 {
                for &(l, _) in cycle {
                    open[l] += 1;
                }
            }
        }
        open.iter().position(|&k| k == 1)
    }

    /// Connected and reducible to `𝐢𝐝_1` by removing leaves.
    pub fn is_melonic(&self) -> bool {
        if self.q() == 0 || !self.is_connected() {
            return false;
        }
        let mut g = self.clone();
        while g.q() > 1 {
            match g.leaf() {
                Some(l) => g = g.remove(&[l]),
                None => return false,
            }
        }
        g.cycles.iter().flatten().all(|c| c.len() == 1)
    }

    /// All `𝗁 ⪯ 𝗀` with `𝖬(𝗁, 𝗀) = ∏ M(τ_{c,b} γ_{c,b}⁻¹)`.
    pub fn below(&self) -> Vec<(PairedGraph, BigRational)> {
        // per cycle: (sub-cycles, Möbius weight)
        let mut options: Vec<(usize, Vec<WeightedSplit>)> = Vec::new();
        for (c, color) in self.cycles.iter().enumerate() {
            for cycle in color {
                let len = cycle.len();
                let gamma = Perm::full_cycle(len);
                let opts = enumerate_noncrossing(&gamma)
                    .into_iter()
                    .map(|tau| {
                        let subs = tau
                            .cycles()
                            .into_iter()
                            .map(|cyc| cyc.into_iter().map(|i| cycle[i]).collect())
                            .collect();
                        (subs, moebius_nc(&gamma.mul(&tau.inverse())))
                    })
                    .collect();
                options.push((c, opts));
            }
        }
        let mut out: Vec<(Vec<Vec<Vec<Slot>>>, BigRational)> = vec![(vec![Vec::new(); self.d()], <BigRational as One>::one())];
        for (c, opts) in &options {
            let mut next = Vec::with_capacity(out.len() * opts.len());
            for (cycles, m) in &out {
                for (subs, w) in opts {
                    let mut cy = cycles.clone();
                    cy[*c].extend(subs.iter().cloned());
                    next.push((cy, m * w));
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(mut cycles, m)| {
                normalize_cycles(&mut cycles);
                (
                    PairedGraph {
                        shapes: self.shapes.clone(),
                        labels: self.labels.clone(),
                        cycles,
                    },
                    m,
                )
            })
            .collect()
    }

    /// `{thick_edges: [{shape, label}], cycles: {color: [[[edge, shade], …], …]}}`,
    /// all indices 1-based.
    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self
            .shapes
            .iter()
            .zip(&self.labels)
            .map(|(s, l)| json!({ "shape": s.k, "label": l }))
            .collect();
        let mut cycles = Map::new();
        for (c, color) in self.cycles.iter().enumerate() {
            let v: Vec<Vec<[usize; 2]>> = color
                .iter()
                .map(|cycle| cycle.iter().map(|&(l, r)| [l + 1, r + 1]).collect())
                .collect();
            cycles.insert((c + 1).to_string(), json!(v));
        }
        json!({ "thick_edges": edges, "cycles": cycles })
    }

    pub fn from_json(v: &Value) -> Result<PairedGraph> {
        let bad = |m: &str| Error::Parse(format!("paired graph: {m}"));
        let edges = v["thick_edges"].as_array().ok_or_else(|| bad("thick_edges must be an array"))?;
        let mut shapes = Vec::new();
        let mut labels = Vec::new();
        for e in edges {
            let k: Vec<usize> = serde_json::from_value(e["shape"].clone()).map_err(|_| bad("shape must list integers"))?;
            shapes.push(PairedShape::new(k)?);
            labels.push(match &e["label"] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            });
        }
        let d = shapes.first().map(PairedShape::d).ok_or_else(|| bad("no thick edges"))?;
        let obj = v["cycles"].as_object().ok_or_else(|| bad("cycles must be an object"))?;
        let mut cycles = vec![Vec::new(); d];
        for (key, val) in obj {
            let c: usize = key.parse().map_err(|_| bad("color keys must be integers"))?;
            if c == 0 || c > d {
                return Err(bad("color out of range"));
            }
            let raw: Vec<Vec<[usize; 2]>> = serde_json::from_value(val.clone()).map_err(|_| bad("cycles must be lists of [edge, shade]"))?;
            for cycle in raw {
                if cycle.iter().any(|x| x[0] == 0 || x[1] == 0) {
                    return Err(bad("indices are 1-based"));
                }
                cycles[c - 1].push(cycle.iter().map(|x| (x[0] - 1, x[1] - 1)).collect());
            }
        }
        PairedGraph::new(shapes, labels, cycles)
    }
}

/// Connected melonic graphs on thick edges of the given shapes, generated by
/// inserting one thick edge at a time with a single slot placed into an
/// existing cycle and all its other slots closed on themselves.
pub fn enumerate_melonic(shapes: &[PairedShape], labels: &[String]) -> Result<Vec<PairedGraph>> {
    let q = shapes.len();
    if q == 0 {
        return Ok(Vec::new());
    }
    let d = shapes[0].d();
    if shapes.iter().any(|s| s.d() != d) || labels.len() != q {
        return Err(Error::Shape("thick edges disagree on D or labels".into()));
    }
    crate::caps::check("paired graph size", q as u64, 8)?;
    let closed = |l: usize, skip: Option<(usize, usize)>| -> Vec<Vec<Vec<Slot>>> {
        (0..d)
            .map(|c| (0..shapes[l].k[c]).filter(|&r| skip != Some((c, r))).map(|r| vec![(l, r)]).collect())
            .collect()
    };
    let mut level: HashSet<(u64, Vec<Vec<Vec<Slot>>>)> = HashSet::new();
    for l in 0..q {
        let mut cy = closed(l, None);
        normalize_cycles(&mut cy);
        level.insert((1 << l, cy));
    }
    for _ in 1..q {
        let mut next = HashSet::new();
        for (mask, cycles) in &level {
            for l in (0..q).filter(|l| mask & (1 << l) == 0) {
                for c in 0..d {
                    for r in 0..shapes[l].k[c] {
                        let rest = closed(l, Some((c, r)));
                        for (b, cycle) in cycles[c].iter().enumerate() {
                            for p in 0..cycle.len() {
                                let mut cy = cycles.clone();
                                cy[c][b].insert(p + 1, (l, r));
                                for (cc, extra) in rest.iter().enumerate() {
                                    cy[cc].extend(extra.iter().cloned());
                                }
                                normalize_cycles(&mut cy);
                                next.insert((mask | (1 << l), cy));
                            }
                        }
                    }
                }
            }
        }
        level = next;
    }
    let mut out: Vec<PairedGraph> = level
        .into_iter()
        .map(|(_, cycles)| PairedGraph {
            shapes: shapes.to_vec(),
            labels: labels.to_vec(),
            cycles,
        })
        .collect();
    out.sort_by(|a, b| a.cycles.cmp(&b.cycles));
    Ok(out)
}

fn tensors_of<'a>(g: &PairedGraph, gens: &'a [Generator]) -> Result<Vec<&'a PairedTensor>> {
    if gens.len() != g.q() {
        return Err(Error::Shape(format!("{} generators for {} thick edges", gens.len(), g.q())));
    }
    let mut out = Vec::with_capacity(gens.len());
    for (l, gen) in gens.iter().enumerate() {
        match gen {
            Generator::Identity(_) => return Err(Error::Precondition("identity generators must be contracted first".into())),
            Generator::Tensor(t) => {
                if t.shape() != g.shapes[l] {
                    return Err(Error::Shape(format!("generator {} does not fit thick edge {}", l + 1, l + 1)));
                }
                out.push(t);
            }
        }
    }
    if out.windows(2).any(|w| w[0].flavor != w[1].flavor) {
        return Err(Error::FlavorMismatch);
    }
    Ok(out)
}

fn concat_words(ts: &[&PairedTensor]) -> Word {
    match ts.first().map(|t| t.flavor) {
        Some(Flavor::Pure) => {
            let blacks = ts.iter().flat_map(|t| t.word[..t.n()].iter().copied());
            let whites = ts.iter().flat_map(|t| t.word[t.n()..].iter().copied());
            blacks.chain(whites).collect()
        }
        _ => ts.iter().flat_map(|t| t.word.iter().copied()).collect(),
    }
}

/// Merges the edges of `𝗀` with the internal edges of its generators into
/// `𝛔`, with the label word of the regular tensors.
pub fn ungroup(g: &PairedGraph, gens: &[Generator]) -> Result<(PermTuple, Word)> {
    let ts = tensors_of(g, gens)?;
    let mut off = Vec::with_capacity(ts.len());
    let mut n = 0;
    for t in &ts {
        off.push(n);
        n += t.n();
    }
    let succ = g.successors();
    let mut perms = Vec::with_capacity(g.d());
    for (c, succ_c) in succ.iter().enumerate() {
        let mut img = vec![usize::MAX; n];
        for (l, t) in ts.iter().enumerate() {
            for (s, w) in t.internal[c].iter().enumerate() {
                if let Some(w) = w {
                    img[off[l] + s] = off[l] + w;
                }
            }
            for (r, &(b, _)) in t.shades[c].iter().enumerate() {
                let (l2, r2) = succ_c[l][r];
                img[off[l] + b] = off[l2] + ts[l2].shades[c][r2].1;
            }
        }
        perms.push(Perm::from_images(img).map_err(|_| Error::Precondition("inconsistent internal edges".into()))?);
    }
    Ok((PermTuple::new(perms)?, concat_words(&ts)))
}

/// Canonical pairing of each generator's closed invariant, placed block by
/// block on the regular tensors of `gens`.
fn generator_pairings(gens: &[&PairedTensor]) -> Result<Perm> {
    let mut img = Vec::new();
    for t in gens {
        let g = PairedGraph::single(t.shape(), "");
        let (s, _) = ungroup(&g, &[Generator::Tensor((*t).clone())])?;
        let eta = match t.flavor {
            Flavor::Pure => Perm::identity(s.n()),
            Flavor::Mixed => canonical_pairing(&s.extended(&Perm::identity(s.n())))
                .ok_or_else(|| Error::Precondition("generator is not first order".into()))?,
        };
        let off = img.len();
        img.extend(eta.images().into_iter().map(|x| x + off));
    }
    Perm::from_images(img)
}

/// Whether an ungrouped invariant is first order with its canonical pairs
/// inside the generators, which is what a melonic graph produces. In the
/// mixed flavor first order alone is not enough: a non-melonic graph can
/// ungroup to a first-order invariant whose canonical pairs straddle two
/// regular tensors of one generator.
pub fn ungrouped_first_order(g: &PairedGraph, gens: &[Generator]) -> Result<bool> {
    let ts = tensors_of(g, gens)?;
    let (s, _) = ungroup(g, gens)?;
    let flavor = ts.first().map(|t| t.flavor).unwrap_or(Flavor::Mixed);
    if !is_first_order(&s, flavor) {
        return Ok(false);
    }
    Ok(match flavor {
        Flavor::Pure => true,
        Flavor::Mixed => canonical_pairing(&s.extended(&Perm::identity(s.n()))) == Some(generator_pairings(&ts)?),
    })
}

/// Removes identity thick edges, keeping the remaining generators.
pub fn contract_identities(g: &PairedGraph, gens: &[Generator]) -> Result<(PairedGraph, Vec<Generator>)> {
    if gens.len() != g.q() {
        return Err(Error::Shape(format!("{} generators for {} thick edges", gens.len(), g.q())));
    }
    let ids: Vec<usize> = (0..g.q()).filter(|&l| gens[l].is_identity()).collect();
    let rest = gens.iter().filter(|h| !h.is_identity()).cloned().collect();
    Ok((g.remove(&ids), rest))
}

fn lookup<R: Ring>(table: &Table<R>, s: &PermTuple, word: &[u8]) -> Result<R> {
    match table.get_word(s, word) {
        Ok(v) => Ok(v),
        Err(e @ Error::Missing(_)) => {
            if word.windows(2).all(|w| w[0] == w[1]) {
                table.get(s).map_err(|_| e)
            } else {
                Err(e)
            }
        }
        Err(e) => Err(e),
    }
}

/// `φ` of one connected melonic graph whose generators are all tensors.
fn phi_connected<R: Ring>(g: &PairedGraph, gens: &[Generator], table: &Table<R>) -> Result<R> {
    let (s, word) = ungroup(g, gens)?;
    if !is_first_order(&s, table.flavor()) {
        return Err(Error::Precondition(format!("ungrouped invariant {s} is not first order")));
    }
    lookup(table, &s, &word)
}

/// `φ_{Π(𝗀),𝗀}(h⃗)`: identity thick edges are contracted, then the table
/// value of each remaining component is multiplied in. All identities give 1.
pub fn phi_paired<R: Ring>(g: &PairedGraph, gens: &[Generator], table: &Table<R>) -> Result<R> {
    let (g2, rest) = contract_identities(g, gens)?;
    let mut out = R::one();
    for comp in g2.components() {
        let sub = g2.restrict(&comp)?;
        let sub_gens: Vec<Generator> = comp.iter().map(|&l| rest[l].clone()).collect();
        out = out.mul(&phi_connected(&sub, &sub_gens, table)?);
    }
    Ok(out)
}

/// `φ(h) = φ_{𝐢𝐝_1}(h)`.
pub fn generator_phi<R: Ring>(h: &Generator, table: &Table<R>) -> Result<R> {
    phi_paired(&PairedGraph::single(h.shape(), ""), std::slice::from_ref(h), table)
}

fn product_over_components<R: Ring>(
    h: &PairedGraph,
    f: &mut dyn FnMut(&PairedGraph, &[usize]) -> Result<R>,
) -> Result<R> {
    let mut out = R::one();
    for comp in h.components() {
        out = out.mul(&f(&h.restrict(&comp)?, &comp)?);
    }
    Ok(out)
}

/// `ϰ_𝗀 = Σ_{𝗁⪯𝗀} φ_{Π(𝗁),𝗁} 𝖬(𝗁, 𝗀)`, with `φ` supplied per connected
/// component (the subgraph and its thick edges in `𝗀`).
pub fn varkappa_with<R: Ring>(
    g: &PairedGraph,
    phi: &mut dyn FnMut(&PairedGraph, &[usize]) -> Result<R>,
) -> Result<R> {
    if !g.is_melonic() {
        return Err(Error::Precondition("ϰ needs a connected melonic graph".into()));
    }
    let mut total = R::zero();
    for (h, m) in g.below() {
        total = total.add(&product_over_components(&h, phi)?.mul(&R::from_rational(&m)));
    }
    Ok(total)
}

/// `φ_{Π(𝗀),𝗀} = Σ_{𝗁⪯𝗀} ϰ_{Π(𝗁),𝗁}`, with `ϰ` supplied per connected component.
pub fn phi_from_varkappa_with<R: Ring>(
    g: &PairedGraph,
    kappa: &mut dyn FnMut(&PairedGraph, &[usize]) -> Result<R>,
) -> Result<R> {
    let mut total = R::zero();
    for (h, _) in g.below() {
        total = total.add(&product_over_components(&h, kappa)?);
    }
    Ok(total)
}

/// Paired free cumulant `ϰ_𝗀(h⃗)` from a (multilabel) moment table.
pub fn varkappa_paired<R: Ring>(g: &PairedGraph, gens: &[Generator], table: &Table<R>) -> Result<R> {
    if gens.len() != g.q() {
        return Err(Error::Shape(format!("{} generators for {} thick edges", gens.len(), g.q())));
    }
    varkappa_with(g, &mut |sub, ids| {
        let sub_gens: Vec<Generator> = ids.iter().map(|&l| gens[l].clone()).collect();
        phi_paired(sub, &sub_gens, table)
    })
}

/// Inverse of [`varkappa_paired`]: `φ` from paired cumulants of connected
/// subgraphs given by `kappa(subgraph, generators)`.
pub fn phi_from_varkappa<R: Ring>(
    g: &PairedGraph,
    gens: &[Generator],
    kappa: &mut dyn FnMut(&PairedGraph, &[Generator]) -> Result<R>,
) -> Result<R> {
    phi_from_varkappa_with(g, &mut |sub, ids| {
        let sub_gens: Vec<Generator> = ids.iter().map(|&l| gens[l].clone()).collect();
        kappa(sub, &sub_gens)
    })
}

/// Formal combination `Σ coefficient · generator`.
pub type Centered<R> = Vec<(R, Generator)>;

/// `h − φ(h)·1_𝒟`; the identity centers to the empty combination.
pub fn center<R: Ring>(h: &Generator, phi_h: &R) -> Centered<R> {
    match h {
        Generator::Identity(_) => Vec::new(),
        Generator::Tensor(_) => vec![(R::one(), h.clone()), (phi_h.neg(), Generator::Identity(h.shape()))],
    }
}

/// Multilinear expansion of `Tr_𝗀` over combinations, one term per choice.
pub fn expand<R: Ring>(args: &[Centered<R>]) -> Vec<(R, Vec<Generator>)> {
    let mut out = vec![(R::one(), Vec::new())];
    for arg in args {
        let mut next = Vec::with_capacity(out.len() * arg.len());
        for (coef, gens) in &out {
            for (a, h) in arg {
                let mut g = gens.clone();
                g.push(h.clone());
                next.push((coef.mul(a), g));
            }
        }
        out = next;
    }
    out
}

/// `φ_𝗀` of formal combinations by multilinearity.
pub fn phi_multilinear<R: Ring>(g: &PairedGraph, args: &[Centered<R>], table: &Table<R>) -> Result<R> {
    let mut total = R::zero();
    for (coef, gens) in expand(args) {
        total = total.add(&coef.mul(&phi_paired(g, &gens, table)?));
    }
    Ok(total)
}

/// `φ_𝗀(h⃗′)` with every argument asymptotically centered.
pub fn phi_centered<R: Ring>(g: &PairedGraph, gens: &[Generator], table: &Table<R>) -> Result<R> {
    let args: Vec<Centered<R>> = gens
        .iter()
        .map(|h| Ok(center(h, &generator_phi(h, table)?)))
        .collect::<Result<_>>()?;
    phi_multilinear(g, &args, table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternation {
    Strict,
    Almost,
    Neither,
}

impl Alternation {
    /// Strictly alternating graphs are almost alternating too.
    pub fn is_almost(self) -> bool {
        self != Alternation::Neither
    }
}

/// Counts edges between distinct thick edges: at least one must join
/// different generators; none (strict) or at most one (almost) may join
/// equal ones.
pub fn classify_alternating(g: &PairedGraph, labels: &[Option<u8>]) -> Result<Alternation> {
    if labels.len() != g.q() {
        return Err(Error::Shape("one generator symbol per thick edge".into()));
    }
    if g.q() < 2 {
        return Ok(Alternation::Neither);
    }
    let (mut diff, mut same) = (0usize, 0usize);
    for cycle in g.cycles.iter().flatten() {
        for i in 0..cycle.len() {
            let (a, b) = (cycle[i].0, cycle[(i + 1) % cycle.len()].0);
            if a != b {
                if labels[a] == labels[b] {
                    same += 1;
                } else {
                    diff += 1;
                }
            }
        }
    }
    Ok(match (diff, same) {
        (0, _) => Alternation::Neither,
        (_, 0) => Alternation::Strict,
        (_, 1) => Alternation::Almost,
        _ => Alternation::Neither,
    })
}

/// Result of splitting a set of edges of `𝗀` open.
#[derive(Clone, Debug)]
pub struct Grouping {
    /// Thick edges of `𝗀` in each component `P_ȷ`.
    pub components: Vec<Vec<usize>>,
    /// The grouped paired tensors `P_ȷ`.
    pub tensors: Vec<Generator>,
    /// `𝗁`, whose connected components are the `𝗁_ȷ`, on the thick edges of `𝗀`.
    pub h: PairedGraph,
    /// `𝗄`: one thick edge per `P_ȷ`, colored edges from `E`.
    pub k: PairedGraph,
}

/// Splits open the edges `E = {(c, slot)}` (the edge leaving the output of
/// `slot` in color `c`) of a melonic graph.
pub fn group(g: &PairedGraph, gens: &[Generator], e: &[(usize, Slot)]) -> Result<Grouping> {
    if !g.is_melonic() {
        return Err(Error::Precondition("grouping needs a connected melonic graph".into()));
    }
    let ts = tensors_of(g, gens)?;
    let d = g.d();
    let mut open: HashSet<(usize, Slot)> = HashSet::new();
    for &(c, (l, r)) in e {
        if c >= d || l >= g.q() || r >= g.shapes[l].k[c] {
            return Err(Error::Precondition(format!("edge ({}, ({}, {})) is not in the graph", c + 1, l + 1, r + 1)));
        }
        open.insert((c, (l, r)));
    }
    let succ = g.successors();
    let mut pred = succ.clone();
    for (c, succ_c) in succ.iter().enumerate().take(d) {
        for (l, row) in succ_c.iter().enumerate() {
            for (r, &t) in row.iter().enumerate() {
                pred[c][t.0][t.1] = (l, r);
            }
        }
    }
    let mut dsu = Dsu::new(g.q());
    for (c, succ_c) in succ.iter().enumerate().take(d) {
        for (l, row) in succ_c.iter().enumerate() {
            for (r, &t) in row.iter().enumerate() {
                if !open.contains(&(c, (l, r))) {
                    dsu.union(l, t.0);
                }
            }
        }
    }
    let components = dsu.groups();
    let mut comp_of = vec![0; g.q()];
    let mut off = vec![0; g.q()];
    let mut sizes = Vec::with_capacity(components.len());
    for (j, comp) in components.iter().enumerate() {
        let mut n = 0;
        for &l in comp {
            comp_of[l] = j;
            off[l] = n;
            n += ts[l].n();
        }
        sizes.push(n);
    }
    // arc start: walk back while the incoming edge is closed
    let arc_start = |c: usize, s: Slot| -> Slot {
        let mut t = s;
        loop {
            let p = pred[c][t.0][t.1];
            if open.contains(&(c, p)) {
                return t;
            }
            t = p;
        }
    };
    let arc_end = |c: usize, s: Slot| -> Slot {
        let mut t = s;
        while !open.contains(&(c, t)) {
            t = succ[c][t.0][t.1];
        }
        t
    };
    let mut h_succ = succ.clone();
    let mut shade_idx: Vec<HashMap<Slot, usize>> = vec![HashMap::new(); d];
    let mut internal: Vec<Vec<Vec<Option<usize>>>> = sizes.iter().map(|&n| vec![vec![None; n]; d]).collect();
    let mut shades: Vec<Vec<Vec<(usize, usize)>>> = vec![vec![Vec::new(); d]; components.len()];
    for c in 0..d {
        for (l, t) in ts.iter().enumerate() {
            let j = comp_of[l];
            for (s, w) in t.internal[c].iter().enumerate() {
                if let Some(w) = w {
                    internal[j][c][off[l] + s] = Some(off[l] + w);
                }
            }
        }
        for comp in &components {
            for &l in comp {
                for r in 0..g.shapes[l].k[c] {
                    let s = (l, r);
                    let j = comp_of[l];
                    let black = off[l] + ts[l].shades[c][r].0;
                    if open.contains(&(c, s)) {
                        let t0 = arc_start(c, s);
                        h_succ[c][l][r] = t0;
                        shade_idx[c].insert(s, shades[j][c].len());
                        shades[j][c].push((black, off[t0.0] + ts[t0.0].shades[c][t0.1].1));
                    } else {
                        let t = succ[c][l][r];
                        internal[j][c][black] = Some(off[t.0] + ts[t.0].shades[c][t.1].1);
                    }
                }
            }
        }
    }
    let mut tensors = Vec::with_capacity(components.len());
    for (j, comp) in components.iter().enumerate() {
        let members: Vec<&PairedTensor> = comp.iter().map(|&l| ts[l]).collect();
        let word = concat_words(&members);
        tensors.push(Generator::Tensor(PairedTensor::new(
            ts[0].flavor,
            std::mem::take(&mut internal[j]),
            std::mem::take(&mut shades[j]),
            word,
        )?));
    }
    let k_shapes: Vec<PairedShape> = tensors
        .iter()
        .map(|t| {
            let s = t.shape();
            if s.inputs() == 0 {
                PairedShape::closed(d)
            } else {
                s
            }
        })
        .collect();
    let mut k_succ: Vec<Vec<Vec<Slot>>> = (0..d).map(|c| k_shapes.iter().map(|s| vec![(0, 0); s.k[c]]).collect()).collect();
    for c in 0..d {
        for (&s, &a) in &shade_idx[c] {
            let t = succ[c][s.0][s.1];
            let end = arc_end(c, t);
            k_succ[c][comp_of[s.0]][a] = (comp_of[end.0], shade_idx[c][&end]);
        }
    }
    let k_labels = (1..=components.len()).map(|j| format!("P{j}")).collect();
    Ok(Grouping {
        h: PairedGraph::from_successors(g.shapes.clone(), g.labels.clone(), &h_succ)?,
        k: PairedGraph::from_successors(k_shapes, k_labels, &k_succ)?,
        components,
        tensors,
    })
}

/// All words of length `len` over the letters `0..labels`.
pub fn all_words(len: usize, labels: u8) -> Vec<Word> {
    let mut out = vec![Word::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..labels).map(move |x| {
                    let mut v = w.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// One first-order representative per class of size `n`; pure ones are
/// labeled so that the canonical pairing is the identity.
pub fn first_order_classes(n: usize, d: usize, flavor: Flavor) -> Result<Vec<PermTuple>> {
    let mut out = Vec::new();
    for class in enumerate_classes(n, d, flavor, true)? {
        let rep = match flavor {
            Flavor::Pure => match pure_normal_form(&class.rep) {
                Some(s) => s,
                None => continue,
            },
            Flavor::Mixed => class.rep,
        };
        if is_first_order(&rep, flavor) {
            out.push(rep);
        }
    }
    Ok(out)
}

/// Leading-order moments of independent ensembles, one per label: a
/// minimizing pairing contributes when it matches equal labels only.
/// Pure: independent Gaussian tensors; mixed: independent Wishart tensors.
pub fn independent_table(flavor: Flavor, d: usize, n_max: usize, labels: u8) -> Result<MomentTable<BigRational>> {
    let mut table = Table::new(flavor);
    for n in 1..=n_max {
        for s in first_order_classes(n, d, flavor)? {
            let report = match flavor {
                Flavor::Pure => gaussian_scaling(&s)?,
                Flavor::Mixed => wishart_scaling(&s)?,
            };
            let len = if flavor == Flavor::Pure { 2 * n } else { n };
            for w in all_words(len, labels) {
                let white = |t: usize| if flavor == Flavor::Pure { w[n + t] } else { w[t] };
                let count = report
                    .minimizer_pairings
                    .iter()
                    .filter(|eta| (0..n).all(|b| w[b] == white(eta.apply(b))))
                    .count();
                table.insert_word(&s, &w, BigRational::from_integer(BigInt::from(count)))?;
            }
        }
    }
    Ok(table)
}

/// One ensemble seen under `labels` names: every labeling of a class takes
/// the single-label value. Never free for two or more labels.
pub fn diagonal_table(flavor: Flavor, d: usize, n_max: usize, labels: u8) -> Result<MomentTable<BigRational>> {
    let single = independent_table(flavor, d, n_max, 1)?;
    let mut table = Table::new(flavor);
    for n in 1..=n_max {
        for s in first_order_classes(n, d, flavor)? {
            let len = if flavor == Flavor::Pure { 2 * n } else { n };
            let v = single.get_word(&s, &vec![0; len])?;
            for w in all_words(len, labels) {
                table.insert_word(&s, &w, v.clone())?;
            }
        }
    }
    Ok(table)
}

/// First-order cumulant of a labeled invariant from a multilabel table.
pub fn multilabel_cumulant(phi: &Table<BigRational>, s: &PermTuple, word: &[u8]) -> Result<BigRational> {
    match phi.flavor() {
        Flavor::Pure => asymptotic_cumulant_melonic_word(phi, s, word),
        Flavor::Mixed => asymptotic_cumulant_wishart_mixed_word(phi, s, word),
    }
}

/// Outcome of one formulation of asymptotic freeness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Formulation {
    pub checked: usize,
    pub holds: bool,
    pub counterexample: Option<String>,
}

impl Formulation {
    fn new() -> Formulation {
        Formulation {
            checked: 0,
            holds: true,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.holds {
            self.holds = false;
            self.counterexample = Some(what());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessReport {
    pub flavor: String,
    pub d: usize,
    pub n_max: usize,
    pub labels: u8,
    /// Mixed first-order cumulants vanish.
    pub cumulants: Formulation,
    /// Mismatched-pair cumulants and cross-generator paired cumulants vanish.
    pub paired_cumulants: Formulation,
    /// Mismatched-pair moments and centered almost-alternating moments vanish.
    pub centered_moments: Formulation,
    pub agree: bool,
    pub free: bool,
}

/// Generators from strict splits of first-order classes with `n ≤ n_max`.
pub fn strict_generators(flavor: Flavor, d: usize, n_max: usize) -> Result<Vec<PairedTensor>> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for s in first_order_classes(n, d, flavor)? {
            let len = if flavor == Flavor::Pure { 2 * n } else { n };
            for e in strict_splits(&s, flavor)? {
                out.push(split_first_order(&s, flavor, &e, &vec![0; len])?);
            }
        }
    }
    Ok(out)
}

/// Mismatch of a labeled first-order invariant with its canonical pairing.
fn mismatched(s: &PermTuple, flavor: Flavor, w: &[u8]) -> Result<bool> {
    let n = s.n();
    Ok(match flavor {
        Flavor::Pure => (0..n).any(|b| w[b] != w[n + b]),
        Flavor::Mixed => {
            let eta = alternating_pairing(s, flavor)?;
            !eta.is_identity() && (0..n).any(|b| w[b] != w[eta.apply(b)])
        }
    })
}

/// Evaluates the three equivalent formulations of asymptotic freeness of
/// the ensembles `0..labels` on a first-order multilabel table closed up to
/// `n_max`. The label checks also cover `n = 1`, where
/// a pure covariance between different ensembles shows up.
pub fn freeness_check(phi: &Table<BigRational>, labels: u8, n_max: usize) -> Result<FreenessReport> {
    let flavor = phi.flavor();
    let d = phi
        .entries()
        .next()
        .map(|(c, _, _)| c.d())
        .ok_or_else(|| Error::Precondition("empty moment table".into()))?;
    let zero = |x: &BigRational| Zero::is_zero(x);
    let mut f1 = Formulation::new();
    let mut f2 = Formulation::new();
    let mut f3 = Formulation::new();
    for n in 1..=n_max {
        for s in first_order_classes(n, d, flavor)? {
            let len = if flavor == Flavor::Pure { 2 * n } else { n };
            for w in all_words(len, labels) {
                let constant = w.windows(2).all(|x| x[0] == x[1]);
                let mism = mismatched(&s, flavor, &w)?;
                if constant && !mism {
                    continue;
                }
                let kappa = multilabel_cumulant(phi, &s, &w)?;
                let what = |name: &str, v: &BigRational| format!("{name}_{s}{w:?} = {v}");
                if !constant {
                    f1.record(zero(&kappa), || what("κ", &kappa));
                }
                if mism {
                    f2.record(zero(&kappa), || what("κ", &kappa));
                    let m = lookup(phi, &s, &w)?;
                    f3.record(zero(&m), || what("φ", &m));
                }
            }
        }
    }
    let base = strict_generators(flavor, d, n_max.saturating_sub(1).max(1))?;
    for q in 2..=3usize {
        for combo in multisets(base.len() * labels as usize, q) {
            let gens: Vec<Generator> = combo
                .iter()
                .map(|&i| Generator::Tensor(base[i / labels as usize].with_label((i % labels as usize) as u8)))
                .collect();
            let total: usize = gens
                .iter()
                .map(|h| match h {
                    Generator::Tensor(t) => t.n(),
                    Generator::Identity(_) => 0,
                })
                .sum();
            if total > n_max {
                continue;
            }
            let syms = assignment(&gens)?;
            let mixed_labels = syms.windows(2).any(|x| x[0] != x[1]);
            let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
            let names: Vec<String> = syms.iter().map(|s| s.map(|x| x.to_string()).unwrap_or_default()).collect();
            for g in enumerate_melonic(&shapes, &names)? {
                let describe = |name: &str, v: &BigRational| format!("{name} of {} = {v}", g.to_json());
                if mixed_labels {
                    let k = varkappa_paired(&g, &gens, phi)?;
                    f2.record(zero(&k), || describe("ϰ", &k));
                }
                if classify_alternating(&g, &syms)?.is_almost() {
                    let v = phi_centered(&g, &gens, phi)?;
                    f3.record(zero(&v), || describe("centered φ", &v));
                }
            }
        }
    }
    let agree = f1.holds == f2.holds && f2.holds == f3.holds;
    let free = f1.holds && f2.holds && f3.holds;
    Ok(FreenessReport {
        flavor: flavor.to_string(),
        d,
        n_max,
        labels,
        cumulants: f1,
        paired_cumulants: f2,
        centered_moments: f3,
        agree,
        free,
    })
}

/// Non-decreasing index sequences of length `q` over `0..m`.
fn multisets(m: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..q {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                let lo = v.last().copied().unwrap_or(0);
                (lo..m).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::canonicalize_with_word;
    use crate::transforms::asymptotic_cumulant_wishart_mixed;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn random_phi(flavor: Flavor, d: usize, n_max: usize, seed: u64) -> Table<BigRational> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Table::new(flavor);
        for n in 1..=n_max {
            for s in first_order_classes(n, d, flavor).unwrap() {
                t.insert(&s, q(rng.random_range(-5..=5), rng.random_range(1..=3))).unwrap();
            }
        }
        t
    }

    fn tensor(t: &PairedTensor) -> Generator {
        Generator::Tensor(t.clone())
    }

    fn labels(q: usize) -> Vec<String> {
        (1..=q).map(|l| l.to_string()).collect()
    }

    fn same_class(a: &(PermTuple, Word), b: &(PermTuple, Word), flavor: Flavor) -> bool {
        canonicalize_with_word(&a.0, flavor, &a.1).unwrap() == canonicalize_with_word(&b.0, flavor, &b.1).unwrap()
    }

    #[test]
    fn single_tensor_split() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let s = PermTuple::identity(1, 3);
            let len = if flavor == Flavor::Pure { 2 } else { 1 };
            let t = split_first_order(&s, flavor, &[(0, 0), (1, 0), (2, 0)], &vec![0; len]).unwrap();
            assert_eq!(t.shape().inputs(), 3);
            assert!(split_first_order(&s, flavor, &[(0, 0), (1, 0)], &vec![0; len]).is_err());
        }
        let not_first = PermTuple::parse("(12);(12);(12)", None).unwrap();
        assert!(split_first_order(&not_first, Flavor::Pure, &[], &[0; 4]).is_err());
    }

    #[test]
    fn strict_split_input_count() {
        for n in 1..=4 {
            let classes = first_order_classes(n, 3, Flavor::Pure).unwrap();
            assert!(!classes.is_empty());
            for s in classes {
                for e in strict_splits(&s, Flavor::Pure).unwrap() {
                    let t = split_first_order(&s, Flavor::Pure, &e, &vec![0; 2 * n]).unwrap();
                    assert_eq!(t.shape().inputs(), 2 * n + 1, "{s}");
                }
            }
        }
        for n in 1..=3 {
            for s in first_order_classes(n, 3, Flavor::Mixed).unwrap() {
                let eta = canonical_pairing(&s.extended(&Perm::identity(n))).unwrap();
                // one component per thick edge beyond the first in each η-cycle
                let k = 1 + n - eta.num_cycles();
                for e in strict_splits(&s, Flavor::Mixed).unwrap() {
                    let t = split_first_order(&s, Flavor::Mixed, &e, &vec![0; n]).unwrap();
                    assert_eq!(t.shape().inputs(), 2 * n + k, "{s}");
                }
            }
        }
    }

    #[test]
    fn closing_a_split_gives_back_the_invariant() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            for n in 1..=3 {
                for s in first_order_classes(n, 3, flavor).unwrap() {
                    let len = if flavor == Flavor::Pure { 2 * n } else { n };
                    let word: Word = (0..len).map(|i| (i % 2) as u8).collect();
                    for e in strict_splits(&s, flavor).unwrap() {
                        let t = split_first_order(&s, flavor, &e, &word).unwrap();
                        let g = PairedGraph::single(t.shape(), "a");
                        assert!(g.is_melonic());
                        assert_eq!(ungroup(&g, &[tensor(&t)]).unwrap(), (s.clone(), word.clone()));
                    }
                }
            }
        }
    }

    #[test]
    fn cycle_form_is_the_split_of_a_constant_full_cycle() {
        let p = PairedTensor::cycle_form(&[0, 0, 0], 3).unwrap();
        let (s, _) = ungroup(&PairedGraph::single(p.shape(), "P"), &[tensor(&p)]).unwrap();
        assert_eq!(s, PermTuple::constant(&Perm::full_cycle(3).inverse(), 3));
        let all: Vec<(usize, usize)> = (0..3).flat_map(|c| (0..3).map(move |b| (c, b))).collect();
        assert_eq!(split_first_order(&s, Flavor::Mixed, &all, &[0, 0, 0]).unwrap(), p);
        assert_eq!(p.shape().inputs(), 9);
    }

    #[test]
    fn melonic_enumeration_small_cases() {
        let unit = PairedShape::new(vec![1, 1, 1]).unwrap();
        assert_eq!(enumerate_melonic(std::slice::from_ref(&unit), &labels(1)).unwrap().len(), 1);
        let two = enumerate_melonic(&[unit.clone(), unit.clone()], &labels(2)).unwrap();
        assert_eq!(two.len(), 3);
        assert!(two.iter().all(|g| g.is_melonic() && g.q() == 2));
        let wide = PairedShape::new(vec![2, 1, 0]).unwrap();
        let graphs = enumerate_melonic(&[unit.clone(), wide, unit], &labels(3)).unwrap();
        assert!(!graphs.is_empty());
        assert!(graphs.iter().all(PairedGraph::is_melonic));
        let twisted = PairedGraph::new(
            vec![PairedShape::new(vec![2]).unwrap()],
            labels(1),
            vec![vec![vec![(0, 0), (0, 1)]]],
        )
        .unwrap();
        assert!(!twisted.is_melonic());
    }

    #[test]
    fn melonic_iff_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let pool = strict_generators(flavor, 3, 2).unwrap();
            let (mut yes, mut no, mut straddling) = (0, 0, 0);
            for _ in 0..2000 {
                let q = rng.random_range(1..=3);
                let gens: Vec<Generator> = (0..q).map(|_| tensor(&pool[rng.random_range(0..pool.len())])).collect();
                let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
                let succ: Vec<Vec<Vec<Slot>>> = (0..3)
                    .map(|c| {
                        let mut slots: Vec<Slot> = (0..q).flat_map(|l| (0..shapes[l].k()[c]).map(move |r| (l, r))).collect();
                        let src = slots.clone();
                        slots.shuffle(&mut rng);
                        let mut succ: Vec<Vec<Slot>> = shapes.iter().map(|s| vec![(0, 0); s.k()[c]]).collect();
                        for (a, b) in src.iter().zip(&slots) {
                            succ[a.0][a.1] = *b;
                        }
                        succ
                    })
                    .collect();
                let g = PairedGraph::from_successors(shapes, labels(q), &succ).unwrap();
                let (s, _) = ungroup(&g, &gens).unwrap();
                assert_eq!(g.is_melonic(), ungrouped_first_order(&g, &gens).unwrap(), "{s} {}", g.to_json());
                if g.is_melonic() {
                    yes += 1;
                } else {
                    no += 1;
                    if is_first_order(&s, flavor) {
                        straddling += 1;
                    }
                }
            }
            assert!(yes > 0 && no > 0);
            // pure: first order already forces melonic graphs
            assert_eq!(straddling > 0, flavor == Flavor::Mixed);
            for i in 0..pool.len().min(4) {
                for j in 0..pool.len().min(4) {
                    let gens = vec![tensor(&pool[i]), tensor(&pool[j])];
                    let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
                    for g in enumerate_melonic(&shapes, &labels(2)).unwrap() {
                        let (s, _) = ungroup(&g, &gens).unwrap();
                        assert!(is_first_order(&s, flavor), "{s}");
                    }
                }
            }
        }
    }

    #[test]
    fn below_lattice_counts_and_weights() {
        let unit = PairedShape::new(vec![1, 1, 1]).unwrap();
        let graphs = enumerate_melonic(&[unit.clone(), unit.clone(), unit], &labels(3)).unwrap();
        for g in &graphs {
            let below = g.below();
            let expect: usize = (0..3)
                .flat_map(|c| g.cycles(c).iter().map(|cy| crate::perm::catalan(cy.len())))
                .fold(BigInt::one(), |a, b| a * b)
                .try_into()
                .unwrap();
            assert_eq!(below.len(), expect);
            assert!(below.iter().any(|(h, m)| h == g && m.is_one()));
            // Σ_𝗁 𝖬(𝗁, 𝗀) vanishes unless 𝗀 is all self-loops
            let total: BigRational = below.iter().map(|(_, m)| m.clone()).sum();
            assert!(Zero::is_zero(&total));
        }
    }

    #[test]
    fn varkappa_phi_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shapes = [PairedShape::new(vec![1, 1, 1]).unwrap(),
            PairedShape::new(vec![2, 1, 1]).unwrap(),
            PairedShape::new(vec![1, 0, 2]).unwrap()];
        let mut phi: HashMap<(Vec<usize>, PairedGraph), BigRational> = HashMap::new();
        let mut value = |sub: &PairedGraph, ids: &[usize], rng: &mut ChaCha8Rng| {
            phi.entry((ids.to_vec(), sub.clone()))
                .or_insert_with(|| q(rng.random_range(-4..=4), rng.random_range(1..=3)))
                .clone()
        };
        let mut kappa: HashMap<(Vec<usize>, PairedGraph), BigRational> = HashMap::new();
        let mut cases = Vec::new();
        for subset in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]] {
            let sub_shapes: Vec<PairedShape> = subset.iter().map(|&l| shapes[l].clone()).collect();
            let names: Vec<String> = subset.iter().map(|l| l.to_string()).collect();
            for g in enumerate_melonic(&sub_shapes, &names).unwrap() {
                cases.push((subset.clone(), g));
            }
        }
        // ϰ in increasing size so that smaller components are known
        for (ids, g) in &cases {
            let k = varkappa_with(g, &mut |sub, local| {
                let global: Vec<usize> = local.iter().map(|&i| ids[i]).collect();
                Ok(value(sub, &global, &mut rng))
            })
            .unwrap();
            kappa.insert((ids.clone(), g.clone()), k);
        }
        for (ids, g) in &cases {
            let back = phi_from_varkappa_with(g, &mut |sub, local| {
                let global: Vec<usize> = local.iter().map(|&i| ids[i]).collect();
                kappa
                    .get(&(global, sub.clone()))
                    .cloned()
                    .ok_or_else(|| Error::Missing("component".into()))
            })
            .unwrap();
            assert_eq!(back, phi[&(ids.clone(), g.clone())]);
        }
    }

    #[test]
    fn cumulant_with_an_identity_vanishes() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let table = random_phi(flavor, 3, 3, 5);
            let pool = strict_generators(flavor, 3, 2).unwrap();
            let small: Vec<&PairedTensor> = pool.iter().filter(|t| t.n() == 1).collect();
            let pair: Vec<&PairedTensor> = pool.iter().filter(|t| t.n() == 2).take(2).collect();
            let mut checked = 0;
            for heads in [vec![small[0]], vec![pair[0]], vec![small[0], small[0]], vec![pair[1]]] {
                for id_shape in [vec![1, 1, 1], vec![2, 0, 1], vec![1, 2, 2]] {
                    let mut gens: Vec<Generator> = heads.iter().map(|t| tensor(t)).collect();
                    gens.push(Generator::Identity(PairedShape::new(id_shape.clone()).unwrap()));
                    let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
                    for g in enumerate_melonic(&shapes, &labels(gens.len())).unwrap() {
                        let k = varkappa_paired(&g, &gens, &table).unwrap();
                        assert!(Zero::is_zero(&k), "{}", g.to_json());
                        checked += 1;
                    }
                }
            }
            assert!(checked > 20);
        }
    }

    #[test]
    fn identities_and_contraction() {
        let table = independent_table(Flavor::Pure, 3, 3, 2).unwrap();
        let shapes = vec![PairedShape::new(vec![1, 2, 0]).unwrap(), PairedShape::new(vec![1, 1, 1]).unwrap()];
        let ids: Vec<Generator> = shapes.iter().cloned().map(Generator::Identity).collect();
        let pool = strict_generators(Flavor::Pure, 3, 2).unwrap();
        for g in enumerate_melonic(&shapes, &labels(2)).unwrap() {
            assert!(phi_paired(&g, &ids, &table).unwrap().is_one());
        }
        // a graph of h and an identity contracts to 𝐢𝐝_1 of h
        for t in &pool {
            let h = tensor(&t.with_label(1));
            let shapes = vec![h.shape(), shapes[1].clone()];
            let gens = vec![h.clone(), Generator::Identity(shapes[1].clone())];
            for g in enumerate_melonic(&shapes, &labels(2)).unwrap() {
                assert_eq!(phi_paired(&g, &gens, &table).unwrap(), generator_phi(&h, &table).unwrap());
            }
        }
    }

    #[test]
    fn centering() {
        let table = independent_table(Flavor::Pure, 3, 3, 2).unwrap();
        let shape = PairedShape::new(vec![1, 1, 1]).unwrap();
        assert!(center(&Generator::Identity(shape.clone()), &q(3, 1)).is_empty());
        let ginibre = split_first_order(&PermTuple::identity(1, 3), Flavor::Pure, &[(0, 0), (1, 0), (2, 0)], &[0, 0]).unwrap();
        let h = tensor(&ginibre);
        let phi_h = generator_phi(&h, &table).unwrap();
        assert!(phi_h.is_one());
        let c = center(&h, &phi_h);
        assert_eq!(c, vec![(q(1, 1), h.clone()), (q(-1, 1), Generator::Identity(shape))]);
        let args = vec![c.clone(), c.clone(), c];
        assert_eq!(expand(&args).len(), 8);
        assert!(Zero::is_zero(&phi_multilinear(&PairedGraph::single(h.shape(), "a"), &args[..1], &table).unwrap()));
    }

    fn chain(labels_: &[Option<u8>]) -> PairedGraph {
        // thick edges 0 - 1 - 2 - … joined through color 1, closed otherwise
        let q = labels_.len();
        let shape = PairedShape::new(vec![1, 1, 1]).unwrap();
        let mut cycles = vec![vec![(0..q).map(|l| (l, 0)).collect::<Vec<_>>()], Vec::new(), Vec::new()];
        for color in &mut cycles[1..] {
            *color = (0..q).map(|l| vec![(l, 0)]).collect();
        }
        PairedGraph::new(vec![shape; q], labels(q), cycles).unwrap()
    }

    #[test]
    fn alternation() {
        let (a, b) = (Some(0), Some(1));
        assert_eq!(classify_alternating(&chain(&[a]), &[a]).unwrap(), Alternation::Neither);
        assert_eq!(classify_alternating(&chain(&[a, b]), &[a, b]).unwrap(), Alternation::Strict);
        assert_eq!(classify_alternating(&chain(&[a, b, a, b]), &[a, b, a, b]).unwrap(), Alternation::Strict);
        assert_eq!(classify_alternating(&chain(&[a, b, b]), &[a, b, b]).unwrap(), Alternation::Almost);
        assert_eq!(classify_alternating(&chain(&[a, a, b, b]), &[a, a, b, b]).unwrap(), Alternation::Neither);
        assert_eq!(classify_alternating(&chain(&[a, a]), &[a, a]).unwrap(), Alternation::Neither);
        assert!(Alternation::Strict.is_almost());
    }

    #[test]
    fn json_round_trip() {
        let g = chain(&[Some(0), Some(1), Some(0)]);
        let v = g.to_json();
        assert_eq!(v["cycles"]["1"], json!([[[1, 1], [2, 1], [3, 1]]]));
        assert_eq!(PairedGraph::from_json(&v).unwrap(), g);
        assert!(PairedGraph::from_json(&json!({"thick_edges": [{"shape": [1], "label": "a"}], "cycles": {"1": []}})).is_err());
    }

    #[test]
    fn grouping_with_nothing_open() {
        let pool = strict_generators(Flavor::Pure, 3, 2).unwrap();
        let gens = vec![tensor(&pool[0]), tensor(&pool[1])];
        let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
        let g = &enumerate_melonic(&shapes, &labels(2)).unwrap()[0];
        let grp = group(g, &gens, &[]).unwrap();
        assert_eq!(grp.components, vec![vec![0, 1]]);
        assert_eq!(grp.k.q(), 1);
        assert_eq!(grp.k.shapes()[0].inputs(), 0);
        assert_eq!(&grp.h, g);
        assert_eq!(ungroup(&grp.k, &grp.tensors).unwrap(), ungroup(g, &gens).unwrap());
    }

    type GroupingCase = (PairedGraph, Vec<Generator>, Vec<(usize, Slot)>);

    fn grouping_cases(flavor: Flavor, seed: u64) -> Vec<GroupingCase> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = strict_generators(flavor, 3, 2).unwrap();
        let ones: Vec<&PairedTensor> = pool.iter().filter(|t| t.n() == 1).collect();
        let twos: Vec<&PairedTensor> = pool.iter().filter(|t| t.n() == 2).collect();
        let mut out = Vec::new();
        for heads in [vec![ones[0]; 3], vec![ones[0], twos[0]], vec![twos[twos.len() - 1], ones[0]], vec![ones[0]; 2]] {
            let gens: Vec<Generator> = heads.iter().map(|t| tensor(t)).collect();
            let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
            for g in enumerate_melonic(&shapes, &labels(gens.len())).unwrap() {
                let all: Vec<(usize, Slot)> = (0..3)
                    .flat_map(|c| g.cycles(c).iter().flatten().map(move |&s| (c, s)).collect::<Vec<_>>())
                    .collect();
                for _ in 0..3 {
                    let e: Vec<(usize, Slot)> = all.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
                    out.push((g.clone(), gens.clone(), e));
                }
            }
        }
        out
    }

    #[test]
    fn grouping_preserves_the_trace() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            for (g, gens, e) in grouping_cases(flavor, 3) {
                let grp = group(&g, &gens, &e).unwrap();
                assert!(grp.k.is_melonic());
                assert!(same_class(&ungroup(&grp.k, &grp.tensors).unwrap(), &ungroup(&g, &gens).unwrap(), flavor));
                assert!(g.below().iter().any(|(h, _)| h == &grp.h));
                assert_eq!(grp.h.components(), grp.components);
                for (j, comp) in grp.components.iter().enumerate() {
                    let hj = grp.h.restrict(comp).unwrap();
                    assert!(hj.is_melonic());
                    let sub: Vec<Generator> = comp.iter().map(|&l| gens[l].clone()).collect();
                    let closed = PairedGraph::single(grp.tensors[j].shape(), "P");
                    if grp.tensors[j].shape().inputs() > 0 {
                        assert!(same_class(
                            &ungroup(&hj, &sub).unwrap(),
                            &ungroup(&closed, &grp.tensors[j..=j]).unwrap(),
                            flavor
                        ));
                    }
                }
            }
        }
    }

    #[test]
    fn grouping_identity_for_paired_cumulants() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let table = random_phi(flavor, 3, 4, 9);
            let mut checked = 0;
            for (g, gens, e) in grouping_cases(flavor, 4) {
                let grp = group(&g, &gens, &e).unwrap();
                if grp.tensors.iter().any(|t| t.shape().inputs() == 0) {
                    continue;
                }
                let lhs = varkappa_paired(&grp.k, &grp.tensors, &table).unwrap();
                let mut block = vec![0; g.q()];
                for (j, comp) in grp.components.iter().enumerate() {
                    for &l in comp {
                        block[l] = j;
                    }
                }
                let mut rhs = q(0, 1);
                for (h, _) in g.below() {
                    let comps = h.components();
                    let mut dsu = Dsu::new(grp.components.len());
                    for comp in &comps {
                        for w in comp.windows(2) {
                            dsu.union(block[w[0]], block[w[1]]);
                        }
                    }
                    if dsu.count() != 1 {
                        continue;
                    }
                    let mut term = q(1, 1);
                    for comp in &comps {
                        let sub = h.restrict(comp).unwrap();
                        let sub_gens: Vec<Generator> = comp.iter().map(|&l| gens[l].clone()).collect();
                        term *= varkappa_paired(&sub, &sub_gens, &table).unwrap();
                    }
                    rhs += term;
                }
                assert_eq!(lhs, rhs, "{}", g.to_json());
                checked += 1;
            }
            assert!(checked > 10);
        }
    }

    #[test]
    fn cycle_form_paired_cumulant_is_the_mixed_cumulant() {
        let table = random_phi(Flavor::Mixed, 3, 4, 21);
        let forms = [
            PairedTensor::cycle_form(&[0], 3).unwrap(),
            PairedTensor::cycle_form(&[0, 0], 3).unwrap(),
            PairedTensor::cycle_form(&[0, 0, 0], 3).unwrap(),
        ];
        let mut checked = 0;
        for (i, j) in [(0, 0), (0, 1), (1, 1), (0, 2)] {
            let gens = vec![tensor(&forms[i]), tensor(&forms[j])];
            let shapes: Vec<PairedShape> = gens.iter().map(Generator::shape).collect();
            for g in enumerate_melonic(&shapes, &labels(2)).unwrap() {
                let (s, _) = ungroup(&g, &gens).unwrap();
                let kappa = asymptotic_cumulant_wishart_mixed(&table, &s).unwrap();
                assert_eq!(varkappa_paired(&g, &gens, &table).unwrap(), kappa, "{s}");
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn independent_gaussians_and_wisharts_are_free() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let table = independent_table(flavor, 3, 3, 2).unwrap();
            let r = freeness_check(&table, 2, 3).unwrap();
            assert!(r.free && r.agree, "{r:?}");
            assert!(r.cumulants.checked > 0 && r.paired_cumulants.checked > 0 && r.centered_moments.checked > 0);
        }
    }

    #[test]
    fn corrupted_tables_fail_everywhere() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let clean = independent_table(flavor, 3, 3, 2).unwrap();
            let s = first_order_classes(2, 3, flavor).unwrap()[0].clone();
            let word: Word = if flavor == Flavor::Pure { vec![0, 1, 0, 1] } else { vec![0, 1] };
            let mut bad = clean.clone();
            let old = bad.get_word(&s, &word).unwrap();
            bad.insert_word(&s, &word, old + q(1, 2)).unwrap();
            let r = freeness_check(&bad, 2, 3).unwrap();
            assert!(!r.free, "{r:?}");
            assert!(r.agree, "{r:?}");
        }
    }

    #[test]
    fn an_ensemble_is_not_free_from_itself() {
        for flavor in [Flavor::Pure, Flavor::Mixed] {
            let copy = diagonal_table(flavor, 3, 3, 2).unwrap();
            let r = freeness_check(&copy, 2, 3).unwrap();
            assert!(!r.free && r.agree, "{r:?}");
            if flavor == Flavor::Pure {
                // the mismatched-bar branch catches the cross covariance
                let cx = r.centered_moments.counterexample.unwrap();
                assert!(cx.starts_with("φ_"), "{cx}");
            }
        }
    }
}
