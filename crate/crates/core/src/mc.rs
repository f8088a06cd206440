//! Monte Carlo oracle: samples Gaussian and Wishart tensors, evaluates
//! trace-invariants numerically and compares estimates with the exact
//! polynomials.
//!
//! Sample `i` of a run with seed `s` draws from its own ChaCha stream
//! `(s, i)`, and samples are merged chunk by chunk in a fixed order, so
//! results are bit-identical for any thread count.

use crate::caps::{caps, check};
use crate::ensembles::gaussian_moment_exact;
use crate::error::{Error, Result};
use crate::invariants::{
    enumerate_classes, eval_trace_invariant_fast, DenseTensor, Flavor, InvariantClass, PermTuple,
};
use crate::par;
use crate::partition::classical_cumulant;
use crate::perm::Perm;
use crate::poly::RatFunc;
use crate::transforms::{finite_cumulant, microscopic_cumulant, MicroscopicPattern, Table};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};
use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

const CHUNK: usize = 256;
const JACKKNIFE_GROUPS: usize = 20;

/// Random stream of sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn complex_normal(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// `T` with `D` output slots and i.i.d. entries, `E[T T̄] = C N^{1−D}`.
/// Returns `(T, T̄)`.
pub fn sample_ginibre(
    dim: usize,
    d: usize,
    covariance: f64,
    rng: &mut impl Rng,
) -> Result<(DenseTensor, DenseTensor)> {
    let len = dim.pow(d as u32);
    check("tensor entries", len as u64, caps().mc_entries)?;
    let var = covariance * (dim as f64).powi(1 - d as i32);
    let data = (0..len).map(|_| complex_normal(rng, var)).collect();
    let t = DenseTensor::new(dim, d, 0, data)?;
    let tb = t.conj();
    Ok((t, tb))
}

/// Wishart tensor `W = Σ_k T_{·k} T̄_{·k}` from a Ginibre tensor with
/// `D + 1` slots, the last one traced. `D = 1` gives `X X†`.
pub fn sample_wishart_tensor(dim: usize, d: usize, rng: &mut impl Rng) -> Result<DenseTensor> {
    check("tensor entries", dim.pow(2 * d as u32) as u64, caps().mc_entries)?;
    let (t, _) = sample_ginibre(dim, d + 1, 1.0, rng)?;
    Ok(wishart_from(&t, d))
}

fn wishart_from(t: &DenseTensor, d: usize) -> DenseTensor {
    let dim = t.dim;
    let side = dim.pow(d as u32);
    let x = DMatrix::from_row_slice(side, dim, &t.data);
    let w = &x * x.adjoint();
    let mut data = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            data.push(w[(r, c)]);
        }
    }
    DenseTensor {
        dim,
        d_out: d,
        d_in: d,
        data,
    }
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_haar_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng, 1.0));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Applies `m` to slot `k` of a tensor with `slots` slots of range `dim`.
fn mode_product(data: &[Complex64], dim: usize, slots: usize, k: usize, m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let inner = dim.pow((slots - k - 1) as u32);
    let outer = dim.pow(k as u32);
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for o in 0..outer {
        for i in 0..dim {
            for j in 0..dim {
                let u = m[(i, j)];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = &data[(o * dim + j) * inner..(o * dim + j + 1) * inner];
                let dst = &mut out[(o * dim + i) * inner..(o * dim + i + 1) * inner];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x += u * y;
                }
            }
        }
    }
    out
}

/// `(U_1 ⊗ … ⊗ U_D) A (U_1 ⊗ … ⊗ U_D)†`: `U_c` on output slot `c`,
/// `Ū_c` on input slot `c`. A tensor with outputs only is rotated as a
/// vector.
pub fn lu_rotate(a: &DenseTensor, us: &[DMatrix<Complex64>]) -> Result<DenseTensor> {
    let d = a.d_out.max(a.d_in);
    if us.len() != d || (a.d_in != 0 && a.d_in != a.d_out) {
        return Err(Error::Shape(format!("{} unitaries for {} output slots", us.len(), a.d_out)));
    }
    let slots = a.slots();
    let mut data = a.data.clone();
    for (c, u) in us.iter().enumerate() {
        if u.nrows() != a.dim || u.ncols() != a.dim {
            return Err(Error::Shape("unitary size differs from N".into()));
        }
        data = mode_product(&data, a.dim, slots, c, u);
        if a.d_in > 0 {
            data = mode_product(&data, a.dim, slots, a.d_out + c, &u.map(|z| z.conj()));
        }
    }
    DenseTensor::new(a.dim, a.d_out, a.d_in, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Ensemble {
    /// Complex Gaussian `T` with covariance `C`, evaluated in the pure flavor.
    Gaussian { covariance: f64 },
    /// Wishart tensor, evaluated in the mixed flavor.
    Wishart,
}

impl Ensemble {
    pub fn flavor(&self) -> Flavor {
        match self {
            Ensemble::Gaussian { .. } => Flavor::Pure,
            Ensemble::Wishart => Flavor::Mixed,
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::Gaussian { .. } => write!(f, "gaussian"),
            Ensemble::Wishart => write!(f, "wishart"),
        }
    }
}

/// One draw of an ensemble, kept in the form its invariants are built from.
pub enum Sample {
    Gaussian { t: DenseTensor, tb: DenseTensor },
    /// The `D + 1`-slot Ginibre tensor; the Wishart tensor is built on demand.
    Wishart { g: DenseTensor, gb: DenseTensor, w: OnceCell<DenseTensor> },
}

impl Sample {
    pub fn draw(ens: Ensemble, dim: usize, d: usize, rng: &mut impl Rng) -> Result<Sample> {
        match ens {
            Ensemble::Gaussian { covariance } => {
                let (t, tb) = sample_ginibre(dim, d, covariance, rng)?;
                Ok(Sample::Gaussian { t, tb })
            }
            Ensemble::Wishart => {
                let (g, gb) = sample_ginibre(dim, d + 1, 1.0, rng)?;
                Ok(Sample::Wishart {
                    g,
                    gb,
                    w: OnceCell::new(),
                })
            }
        }
    }

    /// The Wishart tensor of a Wishart sample.
    pub fn wishart(&self) -> Option<&DenseTensor> {
        match self {
            Sample::Gaussian { .. } => None,
            Sample::Wishart { g, w, .. } => Some(w.get_or_init(|| wishart_from(g, g.d_out - 1))),
        }
    }

    /// `Tr_𝛔`; for a Wishart sample, `Tr_𝛔(W) = Tr_{(𝛔, id)}(G, Ḡ)`, which
    /// never forms `W`.
    pub fn trace(&self, s: &PermTuple) -> Result<Complex64> {
        let pure = |t: &DenseTensor, tb: &DenseTensor, s: &PermTuple| {
            let mut ts = vec![t.clone(); s.n()];
            ts.extend(std::iter::repeat_n(tb.clone(), s.n()));
            eval_trace_invariant_fast(s, Flavor::Pure, &ts)
        };
        match self {
            Sample::Gaussian { t, tb } => pure(t, tb, s),
            Sample::Wishart { g, gb, .. } => pure(g, gb, &s.extended(&Perm::identity(s.n()))),
        }
    }

    /// Entries named by a microscopic pattern: `T_{out(s)}` then `T̄_{in(s)}`
    /// (pure), or `W_{out(s); in(s)}` (mixed).
    pub fn entries(&self, p: &MicroscopicPattern) -> Vec<Complex64> {
        match self {
            Sample::Gaussian { t, tb } => p
                .outputs
                .iter()
                .map(|o| t.get(o))
                .chain(p.inputs.iter().map(|i| tb.get(i)))
                .collect(),
            Sample::Wishart { g, .. } => p
                .outputs
                .iter()
                .zip(&p.inputs)
                .map(|(o, i)| {
                    (0..g.dim)
                        .map(|k| {
                            let mut a = o.clone();
                            a.push(k);
                            let mut b = i.clone();
                            b.push(k);
                            g.get(&a) * g.get(&b).conj()
                        })
                        .sum()
                })
                .collect(),
        }
    }
}

/// Count, mean and centered second moments of complex observations,
/// combined associatively.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: Complex64,
    m2_re: f64,
    m2_im: f64,
}

impl Welford {
    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = x - self.mean;
        self.m2_re += delta.re * delta2.re;
        self.m2_im += delta.im * delta2.im;
    }

    pub fn merge(&self, o: &Welford) -> Welford {
        if self.count == 0 {
            return *o;
        }
        if o.count == 0 {
            return *self;
        }
        let n = (self.count + o.count) as f64;
        let (na, nb) = (self.count as f64, o.count as f64);
        let delta = o.mean - self.mean;
        Welford {
            count: self.count + o.count,
            mean: self.mean + delta * (nb / n),
            m2_re: self.m2_re + o.m2_re + delta.re * delta.re * na * nb / n,
            m2_im: self.m2_im + o.m2_im + delta.im * delta.im * na * nb / n,
        }
    }

    /// Standard error of the mean, per component.
    pub fn stderr(&self) -> (f64, f64) {
        if self.count < 2 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let n = self.count as f64;
        ((self.m2_re / (n - 1.0) / n).sqrt(), (self.m2_im / (n - 1.0) / n).sqrt())
    }

    pub fn estimate(&self) -> Estimate {
        let (se_re, se_im) = self.stderr();
        Estimate {
            re: self.mean.re,
            im: self.mean.im,
            stderr_re: se_re,
            stderr_im: se_im,
            samples: self.count,
        }
    }
}

/// A complex Monte Carlo estimate with per-component standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub samples: u64,
}

impl Estimate {
    /// Largest deviation from a real target, in standard errors.
    pub fn z_score(&self, exact: f64) -> f64 {
        let z = |dev: f64, se: f64| {
            if dev == 0.0 {
                0.0
            } else if se > 0.0 {
                dev.abs() / se
            } else {
                f64::INFINITY
            }
        };
        z(self.re - exact, self.stderr_re).max(z(self.im, self.stderr_im))
    }

    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        self.z_score(exact) <= sigmas
    }
}

/// Parameters shared by every estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Run {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
}

impl Run {
    pub fn gaussian(dim: usize, d: usize, samples: usize, seed: u64) -> Run {
        Run {
            dim,
            d,
            samples,
            seed,
            ensemble: Ensemble::Gaussian { covariance: 1.0 },
        }
    }

    pub fn wishart(dim: usize, d: usize, samples: usize, seed: u64) -> Run {
        Run {
            ensemble: Ensemble::Wishart,
            ..Run::gaussian(dim, d, samples, seed)
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.ensemble.flavor()
    }

    /// Maps every sample of chunk `c` through `f`, chunks in parallel,
    /// returning per-chunk results in chunk order.
    fn chunks<R: Send>(&self, f: impl Fn(&Sample) -> Result<R> + Sync + Send) -> Result<Vec<Vec<R>>> {
        let n_chunks = self.samples.div_ceil(CHUNK);
        par::map_range(n_chunks, |c| {
            let end = ((c + 1) * CHUNK).min(self.samples);
            (c * CHUNK..end)
                .map(|i| {
                    let mut rng = stream(self.seed, i as u64);
                    f(&Sample::draw(self.ensemble, self.dim, self.d, &mut rng)?)
                })
                .collect()
        })
        .into_iter()
        .collect()
    }

    fn check_degree(&self, s: &PermTuple) -> Result<()> {
        if s.d() != self.d {
            return Err(Error::Shape(format!("invariant has D = {}, run has D = {}", s.d(), self.d)));
        }
        Ok(())
    }
}

/// `(mean, stderr)` estimates of `E[Tr_𝛔]` for several invariants from the
/// same samples.
pub fn estimate_moments(classes: &[PermTuple], run: &Run) -> Result<Vec<Estimate>> {
    for s in classes {
        run.check_degree(s)?;
    }
    let chunks = run.chunks(|x| {
        let mut acc = Vec::with_capacity(classes.len());
        for s in classes {
            acc.push(x.trace(s)?);
        }
        Ok(acc)
    })?;
    let mut accs = vec![Welford::default(); classes.len()];
    for chunk in chunks {
        let mut local = vec![Welford::default(); classes.len()];
        for vals in chunk {
            for (a, v) in local.iter_mut().zip(vals) {
                a.push(v);
            }
        }
        for (a, l) in accs.iter_mut().zip(&local) {
            *a = a.merge(l);
        }
    }
    Ok(accs.iter().map(Welford::estimate).collect())
}

pub fn estimate_moment(s: &PermTuple, run: &Run) -> Result<Estimate> {
    Ok(estimate_moments(std::slice::from_ref(s), run)?[0])
}

/// Plug-in classical cumulant of `m` variables from per-subset sums, with a
/// delete-one-group jackknife over contiguous sample groups.
struct SubsetSums {
    m: usize,
    groups: Vec<(u64, Vec<Complex64>)>,
}

impl SubsetSums {
    fn new(m: usize) -> SubsetSums {
        SubsetSums {
            m,
            groups: vec![(0, vec![Complex64::new(0.0, 0.0); 1 << m]); JACKKNIFE_GROUPS],
        }
    }

    fn push(&mut self, group: usize, vals: &[Complex64]) {
        let (count, sums) = &mut self.groups[group];
        *count += 1;
        for (mask, s) in sums.iter_mut().enumerate() {
            *s += (0..self.m)
                .filter(|i| mask >> i & 1 == 1)
                .fold(Complex64::new(1.0, 0.0), |p, i| p * vals[i]);
        }
    }

    fn cumulant(&self, skip: Option<usize>) -> Result<Complex64> {
        let mut count = 0u64;
        let mut sums = vec![Complex64::new(0.0, 0.0); 1 << self.m];
        for (g, (c, s)) in self.groups.iter().enumerate() {
            if Some(g) == skip {
                continue;
            }
            count += c;
            for (a, b) in sums.iter_mut().zip(s) {
                *a += b;
            }
        }
        let k = classical_cumulant(self.m, |b| Ok(ComplexRing(moment_part(&sums, count, b))))?;
        Ok(k.0)
    }

    fn estimate(&self) -> Result<Estimate> {
        let full = self.cumulant(None)?;
        let used: Vec<usize> = (0..self.groups.len()).filter(|&g| self.groups[g].0 > 0).collect();
        let g = used.len() as f64;
        let jk: Vec<Complex64> = used.iter().map(|&k| self.cumulant(Some(k))).collect::<Result<_>>()?;
        let mean = jk.iter().sum::<Complex64>() / g;
        let var = |f: fn(Complex64) -> f64| (g - 1.0) / g * jk.iter().map(|z| (f(*z) - f(mean)).powi(2)).sum::<f64>();
        Ok(Estimate {
            re: full.re,
            im: full.im,
            stderr_re: var(|z| z.re).sqrt(),
            stderr_im: var(|z| z.im).sqrt(),
            samples: self.groups.iter().map(|(c, _)| c).sum(),
        })
    }
}

fn moment_part(sums: &[Complex64], count: u64, block: &[usize]) -> Complex64 {
    let mask: usize = block.iter().map(|i| 1 << i).sum();
    sums[mask] / count as f64
}

/// Floating complex numbers as a ring, for the partition sums.
#[derive(Clone, Copy, Debug, PartialEq)]
struct ComplexRing(Complex64);

impl crate::poly::Ring for ComplexRing {
    fn zero() -> Self {
        ComplexRing(Complex64::new(0.0, 0.0))
    }
    fn one() -> Self {
        ComplexRing(Complex64::new(1.0, 0.0))
    }
    fn add(&self, o: &Self) -> Self {
        ComplexRing(self.0 + o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        ComplexRing(self.0 * o.0)
    }
    fn neg(&self) -> Self {
        ComplexRing(-self.0)
    }
    fn is_zero(&self) -> bool {
        self.0 == Complex64::new(0.0, 0.0)
    }
    fn from_rational(q: &num_rational::BigRational) -> Self {
        ComplexRing(Complex64::new(<f64 as crate::poly::Ring>::from_rational(q), 0.0))
    }
    fn mul_ratfunc(&self, r: &RatFunc) -> Self {
        let c = r.as_constant().expect("complex scalar multiplied by a non-constant function of N");
        ComplexRing(self.0 * <f64 as crate::poly::Ring>::from_rational(c))
    }
}

fn cumulant_of<F>(m: usize, run: &Run, vals: F) -> Result<Estimate>
where
    F: Fn(&Sample) -> Result<Vec<Complex64>> + Sync + Send,
{
    let chunks = run.chunks(vals)?;
    let n_chunks = chunks.len().max(1);
    let mut sums = SubsetSums::new(m);
    for (c, chunk) in chunks.into_iter().enumerate() {
        let group = c * JACKKNIFE_GROUPS.min(n_chunks) / n_chunks;
        for v in chunk {
            sums.push(group, &v);
        }
    }
    sums.estimate()
}

/// Classical cumulant of `Tr_{𝛔_1}, …, Tr_{𝛔_q}` under the run's ensemble.
pub fn estimate_classical_cumulant(components: &[PermTuple], run: &Run) -> Result<Estimate> {
    for s in components {
        run.check_degree(s)?;
    }
    cumulant_of(components.len(), run, |x| components.iter().map(|s| x.trace(s)).collect())
}

/// Classical cumulant of the entries a microscopic pattern names.
pub fn estimate_entry_cumulant(p: &MicroscopicPattern, run: &Run) -> Result<Estimate> {
    if p.flavor != run.flavor() {
        return Err(Error::FlavorMismatch);
    }
    let m = match p.flavor {
        Flavor::Pure => 2 * p.outputs.len(),
        Flavor::Mixed => p.outputs.len(),
    };
    cumulant_of(m, run, |x| Ok(x.entries(p)))
}

/// Exact `E[Tr_𝛔]` of the run's ensemble as a polynomial in `N`. The
/// Wishart moment of `𝛔` is the Gaussian moment of `(𝛔, id)`.
pub fn exact_moment(s: &PermTuple, ensemble: Ensemble) -> Result<RatFunc> {
    match ensemble {
        Ensemble::Gaussian { covariance } => {
            let c = num_rational::BigRational::from_float(covariance)
                .ok_or_else(|| Error::Precondition("covariance is not finite".into()))?;
            Ok(gaussian_moment_exact(s)?.scale(&num_traits::pow(c, s.n())).into())
        }
        Ensemble::Wishart => Ok(gaussian_moment_exact(&s.extended(&Perm::identity(s.n())))?.into()),
    }
}

/// Exact moments of every class of degree at most `n`, as a table.
pub fn exact_table(n: usize, d: usize, ensemble: Ensemble) -> Result<Table<RatFunc>> {
    let mut table = Table::new(ensemble.flavor());
    for k in 1..=n {
        for c in enumerate_classes(k, d, ensemble.flavor(), false)? {
            table.insert_class(c.clone(), exact_moment(&c.rep, ensemble)?)?;
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, Serialize)]
pub struct MicroscopicReport {
    pub invariant: String,
    pub flavor: String,
    pub exact: f64,
    pub estimate: Estimate,
    pub z: f64,
    pub pass: bool,
}

/// Compares the sampled classical cumulant of a pattern's entries with an
/// exact value at the run's `N`.
pub fn check_pattern(p: &MicroscopicPattern, exact: f64, run: &Run, sigmas: f64) -> Result<(Estimate, f64, bool)> {
    let est = estimate_entry_cumulant(p, run)?;
    let z = est.z_score(exact);
    Ok((est, z, z <= sigmas))
}

/// Microscopic cumulant check: the finite free cumulant of `𝛔` against the
/// classical cumulant of the tensor entries at distinct indices.
pub fn check_microscopic_cumulant(s: &PermTuple, run: &Run, sigmas: f64) -> Result<MicroscopicReport> {
    run.check_degree(s)?;
    if run.dim < s.n() {
        return Err(Error::Precondition(format!("N = {} is below n = {}", run.dim, s.n())));
    }
    let table = exact_table(s.n(), s.d(), run.ensemble)?;
    let exact = finite_cumulant(&table, s)?.eval_f64(run.dim as f64);
    let p = microscopic_cumulant(s, run.flavor());
    let (estimate, z, pass) = check_pattern(&p, exact, run, sigmas)?;
    Ok(MicroscopicReport {
        invariant: s.to_string(),
        flavor: run.flavor().to_string(),
        exact,
        estimate,
        z,
        pass,
    })
}

/// Largest `|Tr_𝛔(rotated) − Tr_𝛔(original)|` over `classes` for one
/// sample and one draw of Haar unitaries.
pub fn lu_residual(classes: &[PermTuple], run: &Run) -> Result<f64> {
    let mut rng = stream(run.seed, u64::MAX);
    let x = Sample::draw(run.ensemble, run.dim, run.d, &mut rng)?;
    let us: Vec<_> = (0..run.d).map(|_| sample_haar_unitary(run.dim, &mut rng)).collect();
    let y = match &x {
        Sample::Gaussian { t, .. } => {
            let t = lu_rotate(t, &us)?;
            let tb = t.conj();
            Sample::Gaussian { t, tb }
        }
        Sample::Wishart { .. } => {
            let w = x.wishart().expect("Wishart sample");
            let r = lu_rotate(w, &us)?;
            let mut worst: f64 = 0.0;
            for s in classes {
                run.check_degree(s)?;
                let a = eval_trace_invariant_fast(s, Flavor::Mixed, &vec![w.clone(); s.n()])?;
                let b = eval_trace_invariant_fast(s, Flavor::Mixed, &vec![r.clone(); s.n()])?;
                worst = worst.max((a - b).norm());
            }
            return Ok(worst);
        }
    };
    let mut worst: f64 = 0.0;
    for s in classes {
        run.check_degree(s)?;
        worst = worst.max((x.trace(s)? - y.trace(s)?).norm());
    }
    Ok(worst)
}

/// A run read from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub run: Run,
    pub classes: Vec<InvariantClass>,
    pub sigmas: f64,
}

impl FromStr for Config {
    type Err = Error;

    /// Keys: `N`, `D`, `samples`, `seed`, `ensemble` (`gaussian` or
    /// `wishart`), `covariance`, `sigmas`, and `class` (repeatable, text
    /// form) or `classes` (all classes up to that degree). `#` starts a
    /// comment.
    fn from_str(text: &str) -> Result<Config> {
        let mut dim = None;
        let mut d = None;
        let mut samples = 10_000;
        let mut seed = 0;
        let mut ensemble = "gaussian".to_string();
        let mut covariance = 1.0;
        let mut sigmas = 3.0;
        let mut listed = Vec::new();
        let mut up_to = None;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key = value, got `{line}`")))?;
            let v = v.trim();
            let num = |what: &str| Error::Parse(format!("bad {what} `{v}`"));
            match k.trim() {
                "N" => dim = Some(v.parse().map_err(|_| num("N"))?),
                "D" => d = Some(v.parse().map_err(|_| num("D"))?),
                "samples" => samples = v.parse().map_err(|_| num("sample count"))?,
                "seed" => seed = v.parse().map_err(|_| num("seed"))?,
                "ensemble" => ensemble = v.to_string(),
                "covariance" => covariance = v.parse().map_err(|_| num("covariance"))?,
                "sigmas" => sigmas = v.parse().map_err(|_| num("band"))?,
                "class" => listed.push(v.to_string()),
                "classes" => up_to = Some(v.parse::<usize>().map_err(|_| num("degree"))?),
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            }
        }
        let dim = dim.ok_or_else(|| Error::Parse("config lacks N".into()))?;
        let d = d.ok_or_else(|| Error::Parse("config lacks D".into()))?;
        let ensemble = match ensemble.as_str() {
            "gaussian" => Ensemble::Gaussian { covariance },
            "wishart" => Ensemble::Wishart,
            other => return Err(Error::Parse(format!("unknown ensemble `{other}`"))),
        };
        let mut classes = Vec::new();
        for text in &listed {
            let c = InvariantClass::parse(text)?;
            if c.flavor != ensemble.flavor() {
                return Err(Error::FlavorMismatch);
            }
            classes.push(c);
        }
        if let Some(n) = up_to {
            for k in 1..=n {
                classes.extend(enumerate_classes(k, d, ensemble.flavor(), false)?);
            }
        }
        Ok(Config {
            run: Run {
                dim,
                d,
                samples,
                seed,
                ensemble,
            },
            classes,
            sigmas,
        })
    }
}

/// Estimates every configured class and compares with the exact moment.
/// The report's `pass` is true when every estimate lies within the band.
pub fn verify(cfg: &Config) -> Result<Value> {
    let reps: Vec<PermTuple> = cfg.classes.iter().map(|c| c.rep.clone()).collect();
    let ests = estimate_moments(&reps, &cfg.run)?;
    let mut rows = Vec::new();
    let mut all = true;
    for (c, e) in cfg.classes.iter().zip(&ests) {
        let exact = exact_moment(&c.rep, cfg.run.ensemble)?;
        let x = exact.eval_f64(cfg.run.dim as f64);
        let z = e.z_score(x);
        let pass = z <= cfg.sigmas;
        all &= pass;
        rows.push(json!({
            "class": c.to_text(),
            "exact": exact.to_string(),
            "exact_value": x,
            "estimate": e,
            "z": z,
            "pass": pass,
        }));
    }
    Ok(json!({
        "run": cfg.run,
        "sigmas": cfg.sigmas,
        "estimates": rows,
        "pass": all,
    }))
}
