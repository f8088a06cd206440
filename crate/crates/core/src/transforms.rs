//! Moment and free-cumulant transforms: exact finite-`N` relations through
//! Weingarten sums, first-order limits over non-crossing posets, the
//! mixed/pure bridge and the dominant set of higher orders.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::invariants::{
    canonicalize, canonicalize_with_word, components_mixed, components_pure, k_mixed, k_pure,
    tuple_distance, Flavor, InvariantClass, PermTuple, Word,
};
use crate::melonic::{canonical_pairing, is_compatible};
use crate::par;
use crate::partition::{lambda, BipartitePartition};
use crate::perm::{enumerate_noncrossing, factorial, moebius_nc, sym_group, Perm};
use crate::poly::{LaurentPoly, RatFunc, Ring};
use crate::weingarten::weingarten;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

fn class_cache() -> &'static Mutex<HashMap<(Flavor, PermTuple), InvariantClass>> {
    static CACHE: OnceLock<Mutex<HashMap<(Flavor, PermTuple), InvariantClass>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Memoized [`canonicalize`].
pub fn class_of(s: &PermTuple, flavor: Flavor) -> Result<InvariantClass> {
    let key = (flavor, s.clone());
    if let Some(c) = class_cache().lock().unwrap().get(&key) {
        return Ok(c.clone());
    }
    let c = canonicalize(s, flavor)?;
    class_cache().lock().unwrap().insert(key, c.clone());
    Ok(c)
}

/// Values indexed by invariant classes of one flavor, optionally refined by
/// a label word. Single-label entries carry the empty word.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<R> {
    flavor: Flavor,
    entries: BTreeMap<(InvariantClass, Word), R>,
}

pub type MomentTable<R> = Table<R>;
pub type CumulantTable<R> = Table<R>;

impl<R: Ring> Table<R> {
    pub fn new(flavor: Flavor) -> Table<R> {
        Table {
            flavor,
            entries: BTreeMap::new(),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&InvariantClass, &Word, &R)> {
        self.entries.iter().map(|((c, w), v)| (c, w, v))
    }

    pub fn insert(&mut self, s: &PermTuple, value: R) -> Result<()> {
        let c = class_of(s, self.flavor)?;
        self.entries.insert((c, Word::new()), value);
        Ok(())
    }

    pub fn insert_class(&mut self, c: InvariantClass, value: R) -> Result<()> {
        if c.flavor != self.flavor {
            return Err(Error::FlavorMismatch);
        }
        self.entries.insert((c, Word::new()), value);
        Ok(())
    }

    pub fn insert_word(&mut self, s: &PermTuple, word: &[u8], value: R) -> Result<()> {
        let key = canonicalize_with_word(s, self.flavor, word)?;
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn get(&self, s: &PermTuple) -> Result<R> {
        let c = class_of(s, self.flavor)?;
        self.entries
            .get(&(c, Word::new()))
            .cloned()
            .ok_or_else(|| Error::Missing(format!("{} class {s}", self.flavor)))
    }

    pub fn get_word(&self, s: &PermTuple, word: &[u8]) -> Result<R> {
        let key = canonicalize_with_word(s, self.flavor, word)?;
        self.entries
            .get(&key)
            .cloned()
            .ok_or_else(|| Error::Missing(format!("{} class {s} with word {word:?}", self.flavor)))
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Table<S> {
        Table {
            flavor: self.flavor,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }
}

/// Values that a table can write to and read from JSON.
pub trait TableValue: Ring {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl TableValue for BigRational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        let s = v.as_str().ok_or_else(|| Error::Parse("rational value must be a string".into()))?;
        BigRational::from_str(s.trim()).map_err(|_| Error::Parse(format!("bad rational `{s}`")))
    }
}

impl TableValue for LaurentPoly {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("Laurent polynomials serialize")
    }
    fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl TableValue for RatFunc {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("rational functions serialize")
    }
    fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl<R: TableValue> Table<R> {
    /// `{flavor, entries: [{class, word?, value}]}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|((c, w), v)| {
                let mut e = json!({ "class": c.to_json(), "value": v.to_json() });
                if !w.is_empty() {
                    e["word"] = json!(w);
                }
                e
            })
            .collect();
        json!({ "flavor": self.flavor.to_string(), "entries": entries })
    }

    pub fn from_json(v: &Value) -> Result<Table<R>> {
        let flavor: Flavor = v["flavor"]
            .as_str()
            .ok_or_else(|| Error::Parse("table lacks a flavor".into()))?
            .parse()?;
        let mut t = Table::new(flavor);
        let entries = v["entries"]
            .as_array()
            .ok_or_else(|| Error::Parse("table lacks entries".into()))?;
        for e in entries {
            let class = InvariantClass::from_json(&e["class"])?;
            if class.flavor != flavor {
                return Err(Error::FlavorMismatch);
            }
            let value = R::from_json(&e["value"])?;
            match e.get("word") {
                Some(w) => {
                    let word: Word = serde_json::from_value(w.clone()).map_err(|e| Error::Parse(e.to_string()))?;
                    t.insert_word(&class.rep, &word, value)?;
                }
                None => t.insert(&class.rep, value)?,
            }
        }
        Ok(t)
    }
}

/// Every tuple of `S_k^D`, checked against the tuple budget.
fn tuples(k: usize, d: usize) -> Result<Vec<PermTuple>> {
    let count = (factorial(k) as u128).pow(d as u32);
    check("tuple enumeration", count.min(u64::MAX as u128) as u64, caps().tuples)?;
    Ok(crate::perm::all_tuples(k, d)
        .into_iter()
        .map(|p| PermTuple::new(p).expect("same degree"))
        .collect())
}

fn w_product(s: &PermTuple, t: &PermTuple) -> Result<RatFunc> {
    let mut out = RatFunc::one();
    for (a, b) in s.perms().iter().zip(t.perms()) {
        out = Ring::mul(&out, &weingarten(&a.mul(&b.inverse()))?);
    }
    Ok(out)
}

/// `Σ_{𝛕∈S_k^D} E[Tr_𝛕] ∏_c W(σ_c τ_c⁻¹)` for a block restriction `s`.
fn weingarten_block<R: Ring>(moments: &Table<R>, s: &PermTuple) -> Result<R> {
    let all = tuples(s.n(), s.d())?;
    let terms = par::map(&all, |t| -> Result<R> { Ok(moments.get(t)?.mul_ratfunc(&w_product(s, t)?)) });
    let mut total = R::zero();
    for t in terms {
        total = total.add(&t?);
    }
    Ok(total)
}

fn lambda_r<R: Ring>(k: usize) -> R {
    R::from_rational(&BigRational::from_integer(lambda(k)))
}

/// Mixed finite free cumulant `𝒦^m_𝛔[A]`. Moments must be exact in `N`
/// and `R` must absorb rational functions of `N` (e.g. [`RatFunc`]).
pub fn finite_cumulant_mixed<R: Ring>(moments: &Table<R>, s: &PermTuple) -> Result<R> {
    if moments.flavor() != Flavor::Mixed {
        return Err(Error::FlavorMismatch);
    }
    let mut memo: HashMap<Vec<usize>, R> = HashMap::new();
    let mut total = R::zero();
    for pi in components_mixed(s).coarsenings() {
        let mut term = lambda_r::<R>(pi.num_blocks());
        for g in pi.blocks() {
            if !memo.contains_key(g) {
                let v = weingarten_block(moments, &s.restrict(g))?;
                memo.insert(g.clone(), v);
            }
            term = term.mul(&memo[g]);
        }
        total = total.add(&term);
    }
    Ok(total)
}

/// Pure finite free cumulant `𝒦_𝛔[T, T̄]`.
pub fn finite_cumulant_pure<R: Ring>(moments: &Table<R>, s: &PermTuple) -> Result<R> {
    if moments.flavor() != Flavor::Pure {
        return Err(Error::FlavorMismatch);
    }
    let mut memo: HashMap<(Vec<usize>, Vec<usize>), R> = HashMap::new();
    let mut total = R::zero();
    for pi in components_pure(s).coarsenings() {
        let mut term = lambda_r::<R>(pi.num_blocks());
        for blk in pi.blocks() {
            if !memo.contains_key(blk) {
                let v = weingarten_block(moments, &s.restrict_bipartite(&blk.0, &blk.1))?;
                memo.insert(blk.clone(), v);
            }
            term = term.mul(&memo[blk]);
        }
        total = total.add(&term);
    }
    Ok(total)
}

/// Finite free cumulant in the flavor of the table.
pub fn finite_cumulant<R: Ring>(moments: &Table<R>, s: &PermTuple) -> Result<R> {
    match moments.flavor() {
        Flavor::Mixed => finite_cumulant_mixed(moments, s),
        Flavor::Pure => finite_cumulant_pure(moments, s),
    }
}

/// `Σ_{Π ≥ Π(𝛕)} 𝒦_{Π,𝛕}` in the flavor of the table.
fn coarsened_product<R: Ring>(cumulants: &Table<R>, t: &PermTuple) -> Result<R> {
    let mut total = R::zero();
    match cumulants.flavor() {
        Flavor::Mixed => {
            for pi in components_mixed(t).coarsenings() {
                let mut term = R::one();
                for g in pi.blocks() {
                    term = term.mul(&cumulants.get(&t.restrict(g))?);
                }
                total = total.add(&term);
            }
        }
        Flavor::Pure => {
            for pi in components_pure(t).coarsenings() {
                let mut term = R::one();
                for (u, b) in pi.blocks() {
                    term = term.mul(&cumulants.get(&t.restrict_bipartite(u, b))?);
                }
                total = total.add(&term);
            }
        }
    }
    Ok(total)
}

/// `E[Tr_𝛔] = Σ_𝛕 Σ_{Π ≥ Π(𝛕)} 𝒦_{Π,𝛕} N^{nD − d(𝛔,𝛕)}`.
pub fn finite_moment_from_cumulants<R: Ring>(cumulants: &Table<R>, s: &PermTuple) -> Result<R> {
    let (n, d) = (s.n(), s.d());
    let all = tuples(n, d)?;
    let mut memo: HashMap<InvariantClass, R> = HashMap::new();
    let mut total = R::zero();
    for t in &all {
        let c = class_of(t, cumulants.flavor())?;
        if !memo.contains_key(&c) {
            let v = coarsened_product(cumulants, t)?;
            memo.insert(c.clone(), v);
        }
        let e = (n * d) as i32 - tuple_distance(s, t) as i32;
        total = total.add(&memo[&c].mul_ratfunc(&RatFunc::from(LaurentPoly::n_pow(e))));
    }
    Ok(total)
}

/// Entry pattern of the microscopic cumulant formula, with `i_c(s) = s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MicroscopicPattern {
    pub flavor: Flavor,
    /// Per vertex `s`: the output multi-index `(σ_1(s), …, σ_D(s))`.
    pub outputs: Vec<Vec<usize>>,
    /// Per vertex `s`: the input multi-index `(s, …, s)`.
    pub inputs: Vec<Vec<usize>>,
}

/// Mixed flavor: `𝒦^m_𝛔 = k_n(A_{out(s); in(s)})`. Pure flavor:
/// `𝒦_𝛔 = k_{2n}(T_{out(s)}, T̄_{in(s)})`.
pub fn microscopic_cumulant(s: &PermTuple, flavor: Flavor) -> MicroscopicPattern {
    let n = s.n();
    MicroscopicPattern {
        flavor,
        outputs: (0..n).map(|v| s.perms().iter().map(|p| p.apply(v)).collect()).collect(),
        inputs: (0..n).map(|v| vec![v; s.d()]).collect(),
    }
}

/// `M(𝛎) = ∏_c M(ν_c)` as a ring element.
fn moebius_tuple<R: Ring>(nu: &PermTuple) -> R {
    nu.perms()
        .iter()
        .fold(R::one(), |acc, p| acc.mul(&R::from_rational(&moebius_nc(p))))
}

/// All `𝛕` with `τ_c η⁻¹ ⪯ σ_c η⁻¹` for every color.
pub fn poset_below(s: &PermTuple, eta: &Perm) -> Vec<PermTuple> {
    let ei = eta.inverse();
    let per_color: Vec<Vec<Perm>> = s
        .perms()
        .iter()
        .map(|p| {
            enumerate_noncrossing(&p.mul(&ei))
                .into_iter()
                .map(|r| r.mul(eta))
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for options in &per_color {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for prefix in &out {
            for p in options {
                let mut v: Vec<Perm> = prefix.clone();
                v.push(p.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|v| PermTuple::new(v).expect("same degree"))
        .collect()
}

fn lookup<R: Ring>(table: &Table<R>, t: &PermTuple, word: &[u8]) -> Result<R> {
    if word.is_empty() {
        table.get(t)
    } else {
        table.get_word(t, word)
    }
}

/// Multiplicative extension over pure components. An empty word means a
/// single label.
fn mult_pure<R: Ring>(table: &Table<R>, t: &PermTuple, word: &[u8]) -> Result<R> {
    let n = t.n();
    let mut out = R::one();
    for (u, b) in components_pure(t).blocks() {
        let sub: Word = if word.is_empty() {
            Word::new()
        } else {
            u.iter().map(|&i| word[i]).chain(b.iter().map(|&j| word[n + j])).collect()
        };
        out = out.mul(&lookup(table, &t.restrict_bipartite(u, b), &sub)?);
    }
    Ok(out)
}

/// Multiplicative extension over mixed components.
fn mult_mixed<R: Ring>(table: &Table<R>, t: &PermTuple, word: &[u8]) -> Result<R> {
    let mut out = R::one();
    for g in components_mixed(t).blocks() {
        let sub: Word = if word.is_empty() { Word::new() } else { g.iter().map(|&i| word[i]).collect() };
        out = out.mul(&lookup(table, &t.restrict(g), &sub)?);
    }
    Ok(out)
}

fn check_word(s: &PermTuple, flavor: Flavor, word: &[u8]) -> Result<()> {
    let want = match flavor {
        Flavor::Mixed => s.n(),
        Flavor::Pure => 2 * s.n(),
    };
    if !word.is_empty() && word.len() != want {
        return Err(Error::Shape(format!("word of length {} for {s}, expected {want}", word.len())));
    }
    Ok(())
}

/// Canonical pairing of a melonic tuple, and its poset.
pub fn melonic_poset(s: &PermTuple) -> Result<(Perm, Vec<PermTuple>)> {
    let eta = canonical_pairing(s).ok_or_else(|| Error::Precondition(format!("{s} is not melonic")))?;
    let poset = poset_below(s, &eta);
    Ok((eta, poset))
}

fn check_first_order_pure(s: &PermTuple) -> Result<()> {
    if k_pure(s) != 1 {
        return Err(Error::Precondition(format!("{s} is not purely connected")));
    }
    Ok(())
}

/// `κ_𝛔 = Σ_{𝛕η⁻¹ ⪯ 𝛔η⁻¹} φ_{Π_p(𝛕),𝛕} M(𝛔𝛕⁻¹)` for purely connected melonic `𝛔`.
pub fn asymptotic_cumulant_melonic<R: Ring>(phi: &Table<R>, s: &PermTuple) -> Result<R> {
    asymptotic_cumulant_melonic_word(phi, s, &[])
}

/// Multilabel form of [`asymptotic_cumulant_melonic`]; `word` labels the
/// black vertices, then the white ones.
pub fn asymptotic_cumulant_melonic_word<R: Ring>(phi: &Table<R>, s: &PermTuple, word: &[u8]) -> Result<R> {
    if phi.flavor() != Flavor::Pure {
        return Err(Error::FlavorMismatch);
    }
    check_word(s, Flavor::Pure, word)?;
    check_first_order_pure(s)?;
    let (_, poset) = melonic_poset(s)?;
    let mut total = R::zero();
    for t in &poset {
        total = total.add(&mult_pure(phi, t, word)?.mul(&moebius_tuple(&s.div(t))));
    }
    Ok(total)
}

/// `φ_{Π_p(𝛔),𝛔} = Σ_{𝛕η⁻¹ ⪯ 𝛔η⁻¹} κ_{Π_p(𝛕),𝛕}` for melonic `𝛔`.
pub fn asymptotic_moment_from_cumulants_melonic<R: Ring>(kappa: &Table<R>, s: &PermTuple) -> Result<R> {
    asymptotic_moment_from_cumulants_melonic_word(kappa, s, &[])
}

pub fn asymptotic_moment_from_cumulants_melonic_word<R: Ring>(
    kappa: &Table<R>,
    s: &PermTuple,
    word: &[u8],
) -> Result<R> {
    if kappa.flavor() != Flavor::Pure {
        return Err(Error::FlavorMismatch);
    }
    check_word(s, Flavor::Pure, word)?;
    let (_, poset) = melonic_poset(s)?;
    let mut total = R::zero();
    for t in &poset {
        total = total.add(&mult_pure(kappa, t, word)?);
    }
    Ok(total)
}

/// Canonical pairing of `(𝛔, id)` and the Wishart poset, for connected `𝛔`
/// with `(𝛔, id)` melonic.
pub fn wishart_poset(s: &PermTuple) -> Result<(Perm, Vec<PermTuple>)> {
    if k_mixed(s) != 1 {
        return Err(Error::Precondition(format!("{s} is not connected")));
    }
    // at D = 2 a planar (𝛔, id) need not be melonic, so test by contraction
    let ext = s.extended(&Perm::identity(s.n()));
    let eta = canonical_pairing(&ext).ok_or_else(|| Error::Precondition(format!("(𝛔, id) is not melonic for {s}")))?;
    let poset = poset_below(s, &eta);
    Ok((eta, poset))
}

/// `κ^m_𝛔 = Σ_{𝛕η⁻¹ ⪯ 𝛔η⁻¹} φ^m_{Π(𝛕),𝛕} M(𝛔𝛕⁻¹)`.
pub fn asymptotic_cumulant_wishart_mixed<R: Ring>(phi: &Table<R>, s: &PermTuple) -> Result<R> {
    asymptotic_cumulant_wishart_mixed_word(phi, s, &[])
}

pub fn asymptotic_cumulant_wishart_mixed_word<R: Ring>(phi: &Table<R>, s: &PermTuple, word: &[u8]) -> Result<R> {
    if phi.flavor() != Flavor::Mixed {
        return Err(Error::FlavorMismatch);
    }
    check_word(s, Flavor::Mixed, word)?;
    let (_, poset) = wishart_poset(s)?;
    let mut total = R::zero();
    for t in &poset {
        total = total.add(&mult_mixed(phi, t, word)?.mul(&moebius_tuple(&s.div(t))));
    }
    Ok(total)
}

/// `φ^m_𝛔 = Σ_{𝛕η⁻¹ ⪯ 𝛔η⁻¹} κ^m_{Π(𝛕),𝛕}`.
pub fn asymptotic_moment_from_cumulants_wishart_mixed<R: Ring>(kappa: &Table<R>, s: &PermTuple) -> Result<R> {
    asymptotic_moment_from_cumulants_wishart_mixed_word(kappa, s, &[])
}

pub fn asymptotic_moment_from_cumulants_wishart_mixed_word<R: Ring>(
    kappa: &Table<R>,
    s: &PermTuple,
    word: &[u8],
) -> Result<R> {
    if kappa.flavor() != Flavor::Mixed {
        return Err(Error::FlavorMismatch);
    }
    check_word(s, Flavor::Mixed, word)?;
    let (_, poset) = wishart_poset(s)?;
    let mut total = R::zero();
    for t in &poset {
        total = total.add(&mult_mixed(kappa, t, word)?);
    }
    Ok(total)
}

/// `ν` with `νη⁻¹ ⪯ η⁻¹`, where `η` is the canonical pairing of `(𝛔, id)`.
fn thick_edge_changes(s: &PermTuple) -> Result<(Perm, Vec<Perm>)> {
    let ext = s.extended(&Perm::identity(s.n()));
    let eta = canonical_pairing(&ext).ok_or_else(|| Error::Precondition(format!("(𝛔, id) is not melonic for {s}")))?;
    let nus = enumerate_noncrossing(&eta.inverse())
        .into_iter()
        .map(|r| r.mul(&eta))
        .collect();
    Ok((eta, nus))
}

/// Pure cumulant `κ_{Π_p(𝛔,id),(𝛔,id)}` of the `(D+1)`-index tensor from the
/// mixed cumulants of `A = Σ_k T_{·k} T̄_{·k}`:
/// `Σ_{νη⁻¹ ⪯ η⁻¹} κ^m_{Π(𝛔ν⁻¹),𝛔ν⁻¹} M(ν)`.
pub fn pure_from_mixed_cumulants<R: Ring>(kappa_m: &Table<R>, s: &PermTuple) -> Result<R> {
    if kappa_m.flavor() != Flavor::Mixed {
        return Err(Error::FlavorMismatch);
    }
    let (_, nus) = thick_edge_changes(s)?;
    let mut total = R::zero();
    for nu in &nus {
        let t = s.mul_right(&nu.inverse());
        total = total.add(&mult_mixed(kappa_m, &t, &[])?.mul(&R::from_rational(&moebius_nc(nu))));
    }
    Ok(total)
}

/// Mixed cumulant `κ^m_{Π(𝛔),𝛔}` from the pure `(D+1)`-color table:
/// `Σ_{νη⁻¹ ⪯ η⁻¹} κ_{Π_p(𝛔,ν),(𝛔,ν)}`.
pub fn mixed_from_pure_cumulants<R: Ring>(kappa_p: &Table<R>, s: &PermTuple) -> Result<R> {
    if kappa_p.flavor() != Flavor::Pure {
        return Err(Error::FlavorMismatch);
    }
    let (_, nus) = thick_edge_changes(s)?;
    let mut total = R::zero();
    for nu in &nus {
        total = total.add(&mult_pure(kappa_p, &s.extended(nu), &[])?);
    }
    Ok(total)
}

/// A dominant term `(π, 𝛕)` of a higher-order cumulant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DominantTerm {
    pub partition: BipartitePartition,
    pub tau: PermTuple,
}

/// `Π_p(𝛕, η)` as a bipartite partition.
fn pure_components_with(t: &PermTuple, eta: &Perm) -> BipartitePartition {
    components_pure(&t.extended(eta))
}

/// `𝐒(𝛔)`, the pairs `(π, 𝛕)` with `π ≥ Π_p(𝛕)` and
/// `d(𝛔,𝛕) + min_{η∈H_{𝛕,π}} d(𝛕,η) = min_η d(𝛔,η)`, found by direct scan.
///
/// With `conjectural` the set is instead built from the pairings `η` with
/// `∇(𝛔;η) = 0` as `{(Π_p(𝛕),𝛕) : 𝛕η⁻¹ ⪯ 𝛔η⁻¹}`, which assumes the
/// compatible-and-η conjecture.
pub fn dominant_set(s: &PermTuple, conjectural: bool) -> Result<Vec<DominantTerm>> {
    check_first_order_pure(s)?;
    let n = s.n();
    check("pairing scan degree", n as u64, caps().eta as u64)?;
    let group = sym_group(n);
    if conjectural {
        let (ok, _, etas) = is_compatible(s)?;
        if !ok {
            return Err(Error::Precondition(format!("{s} is not compatible")));
        }
        let mut out = std::collections::BTreeSet::new();
        for eta in &etas {
            for t in poset_below(s, eta) {
                out.insert(DominantTerm {
                    partition: components_pure(&t),
                    tau: t,
                });
            }
        }
        return Ok(out.into_iter().collect());
    }
    let m0 = group
        .iter()
        .map(|eta| crate::invariants::distance_to(s, eta))
        .min()
        .expect("S_n is nonempty");
    let all = tuples(n, s.d())?;
    let found = par::map(&all, |t| {
        let mut terms = Vec::new();
        let dst = tuple_distance(s, t);
        if dst > m0 {
            return terms;
        }
        for pi in components_pure(t).coarsenings() {
            let best = group
                .iter()
                .filter(|eta| pure_components_with(t, eta) == pi)
                .map(|eta| crate::invariants::distance_to(t, eta))
                .min();
            if best.is_some_and(|b| dst + b == m0) {
                terms.push(DominantTerm {
                    partition: pi,
                    tau: t.clone(),
                });
            }
        }
        terms
    });
    let mut out: Vec<DominantTerm> = found.into_iter().flatten().collect();
    out.sort();
    Ok(out)
}

/// `lim N^{nD − r(𝛔)} 𝒦_𝛔 = Σ_{(π,𝛕)∈𝐒(𝛔)} φ_{π,𝛕} M(𝛔𝛕⁻¹)`, where the
/// table holds rescaled classical cumulants `φ` of every block class.
pub fn asymptotic_cumulant_general<R: Ring>(phi: &Table<R>, s: &PermTuple) -> Result<R> {
    if phi.flavor() != Flavor::Pure {
        return Err(Error::FlavorMismatch);
    }
    let mut total = R::zero();
    for term in dominant_set(s, false)? {
        let mut v = moebius_tuple::<R>(&s.div(&term.tau));
        for (u, b) in term.partition.blocks() {
            v = v.mul(&phi.get(&term.tau.restrict_bipartite(u, b))?);
        }
        total = total.add(&v);
    }
    Ok(total)
}

/// Entrywise sum of two first-order cumulant tables; an entry missing from
/// one side counts as zero.
pub fn free_additive_convolution_melonic<R: Ring>(a: &Table<R>, b: &Table<R>) -> Result<Table<R>> {
    if a.flavor() != b.flavor() {
        return Err(Error::FlavorMismatch);
    }
    let mut out = a.clone();
    for (k, v) in &b.entries {
        let slot = out.entries.entry(k.clone()).or_insert_with(R::zero);
        *slot = slot.add(v);
    }
    Ok(out)
}

/// Number of tuples in the melonic poset, `∏_c ∏_cycles C_len`.
pub fn poset_size(s: &PermTuple, eta: &Perm) -> BigInt {
    let ei = eta.inverse();
    s.perms()
        .iter()
        .flat_map(|p| p.mul(&ei).cycles())
        .map(|c| crate::perm::catalan(c.len()))
        .product()
}
