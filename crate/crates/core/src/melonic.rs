//! Degrees, melonic recognition by dipole contraction, canonical pairings,
//! compatibility and the order of dominance.

use crate::caps::{caps, check};
use crate::error::{Error, Result};
use crate::invariants::{distance_to, k_pure, k_pure_with, PermTuple};
use crate::par;
use crate::perm::{dist, sym_group, Perm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairwise_sum(s: &PermTuple) -> usize {
    let p = s.perms();
    let mut total = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            total += dist(&p[a], &p[b]);
        }
    }
    total
}

/// Gurau degree `ω(𝛔) = Σ_{c1<c2} |σ_{c1}σ_{c2}⁻¹| − (D−1)(n − K_p(𝛔))`.
pub fn degree(s: &PermTuple) -> usize {
    let d = s.d() as i64;
    let w = pairwise_sum(s) as i64 - (d - 1) * (s.n() - k_pure(s)) as i64;
    assert!(w >= 0, "negative degree {w} for {s}");
    w as usize
}

/// `ω̄(𝛔; η) = D·K_p(𝛔,η) − (D−1)K_p(𝛔) − n + d(𝛔,η)`.
pub fn bar_degree(s: &PermTuple, eta: &Perm) -> i64 {
    let d = s.d() as i64;
    d * k_pure_with(s, eta) as i64 - (d - 1) * k_pure(s) as i64 - s.n() as i64
        + distance_to(s, eta) as i64
}

/// Contracts `(D−1)`-dipoles until nothing is left; returns the recorded
/// pairing, or `None` when the graph gets stuck. `pick` chooses among the
/// available dipoles.
fn contract(s: &PermTuple, mut pick: impl FnMut(usize) -> usize) -> Option<Perm> {
    let (n, d) = (s.n(), s.d());
    let mut sig: Vec<Vec<usize>> = s.perms().iter().map(Perm::images).collect();
    let mut inv: Vec<Vec<usize>> = s.perms().iter().map(|p| p.inverse().images()).collect();
    let mut alive = vec![true; n];
    let mut eta = vec![usize::MAX; n];
    for _ in 0..n {
        let mut dipoles: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for b in (0..n).filter(|&b| alive[b]) {
            let mut cands: Vec<usize> = (0..d).map(|c| sig[c][b]).collect();
            cands.sort_unstable();
            cands.dedup();
            for w in cands {
                let missing: Vec<usize> = (0..d).filter(|&c| sig[c][b] != w).collect();
                match missing.len() {
                    0 => dipoles.push((b, w, None)),
                    1 if d >= 2 => dipoles.push((b, w, Some(missing[0]))),
                    _ => {}
                }
            }
        }
        // isolated pairs first: they close a component
        let full: Vec<_> = dipoles.iter().filter(|x| x.2.is_none()).copied().collect();
        let pool = if full.is_empty() { dipoles } else { full };
        if pool.is_empty() {
            return None;
        }
        let (b, w, missing) = pool[pick(pool.len()) % pool.len()];
        eta[b] = w;
        alive[b] = false;
        if let Some(c) = missing {
            let w2 = sig[c][b];
            let b2 = inv[c][w];
            sig[c][b2] = w2;
            inv[c][w2] = b2;
        }
    }
    Some(Perm::from_images(eta).expect("pairing is a bijection"))
}

pub fn canonical_pairing(s: &PermTuple) -> Option<Perm> {
    contract(s, |_| 0)
}

/// Dipole contraction in a pseudo-random order fixed by `seed`.
pub fn canonical_pairing_shuffled(s: &PermTuple, seed: u64) -> Option<Perm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    contract(s, |k| rng.random_range(0..k))
}

pub fn is_melonic(s: &PermTuple) -> bool {
    canonical_pairing(s).is_some()
}

/// `∇(𝛔; η) = Σ_{c1<c2} (|σ_{c1}η⁻¹| + |σ_{c2}η⁻¹| − |σ_{c1}σ_{c2}⁻¹|)`.
pub fn nabla(s: &PermTuple, eta: &Perm) -> usize {
    let d = s.d();
    (d - 1) * distance_to(s, eta) - pairwise_sum(s)
}

/// `∇^{(2)}(𝛔; 𝛕)`.
pub fn nabla2(s: &PermTuple, t: &PermTuple) -> Result<usize> {
    if s.d() != t.d() || s.n() != t.n() {
        return Err(Error::Shape("tuples of different shapes".into()));
    }
    let (sp, tp) = (s.perms(), t.perms());
    let mut total = 0i64;
    for a in 0..s.d() {
        for b in a + 1..s.d() {
            total += (dist(&sp[a], &tp[a]) + dist(&tp[a], &tp[b]) + dist(&tp[b], &sp[b])) as i64
                - dist(&sp[a], &sp[b]) as i64;
        }
    }
    assert!(total >= 0);
    Ok(total as usize)
}

/// Minimum of `f` over `S_n` and all minimizers, in lexicographic order.
fn scan_min<F>(n: usize, f: F) -> Result<Option<(i64, Vec<Perm>)>>
where
    F: Fn(&Perm) -> Option<i64> + Sync + Send,
{
    check("pairing scan degree", n as u64, caps().eta as u64)?;
    let group = sym_group(n);
    let vals = par::map(&group, |eta| f(eta));
    let min = vals.iter().flatten().min().copied();
    Ok(min.map(|m| {
        let args = group
            .iter()
            .zip(&vals)
            .filter(|(_, v)| **v == Some(m))
            .map(|(e, _)| e.clone())
            .collect();
        (m, args)
    }))
}

/// Compatibility: whether `min_η ∇ = 0`, with the minimum and its minimizers.
pub fn is_compatible(s: &PermTuple) -> Result<(bool, usize, Vec<Perm>)> {
    let (m, args) = scan_min(s.n(), |eta| Some(nabla(s, eta) as i64))?.expect("S_n is nonempty");
    Ok((m == 0, m as usize, args))
}

/// `min ω̄(𝛔; η)` over `η`, restricted to `K_p(𝛔, η) = 1` when asked.
pub fn min_bar_degree(s: &PermTuple, connecting_only: bool) -> Result<Option<(i64, Vec<Perm>)>> {
    scan_min(s.n(), |eta| {
        (!connecting_only || k_pure_with(s, eta) == 1).then(|| bar_degree(s, eta))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scaling {
    PureGaussian,
    WishartMixed,
}

/// Order of dominance `1 + (D−1)(K_p − 1) + min{ω̄ : K_p(𝛔,η) = 1}`; the
/// Wishart scaling evaluates the pure formula on `(𝛔, id)`.
pub fn order_of_dominance(s: &PermTuple, scaling: Scaling) -> Result<usize> {
    let t = match scaling {
        Scaling::PureGaussian => s.clone(),
        Scaling::WishartMixed => s.extended(&Perm::identity(s.n())),
    };
    let d = t.d();
    let (m, _) = min_bar_degree(&t, true)?.expect("a connecting pairing always exists");
    let order = 1 + ((d - 1) * (k_pure(&t) - 1)) as i64 + m;
    assert!(order >= 1, "order of dominance {order} for {s}");
    Ok(order as usize)
}
