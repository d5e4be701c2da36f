//! Restricted operator bases and the least-squares fit of control amplitudes.
//!
//! Given the adiabatic state `|ψ⟩` and the exact counterdiabatic image
//! `|Φ_aux⟩ = H_aux|ψ⟩`, the amplitudes `h` minimize
//! `‖(H_aux − Σ_I h_I P_I)|ψ⟩‖²`. With `|Φ_I⟩ = P_I|ψ⟩` the normal equations
//! read `Ā h = C̄` where `Ā_{IJ} = 2 Re⟨Φ_I|Φ_J⟩` and `C̄_I = 2 Re⟨Φ_I|Φ_aux⟩`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstsq;
use crate::pauli::{real_pair_overlap_unchecked, Pauli, PauliString, StateVector};
use crate::scalar::{c, czero, norm_sqr, CMatrix, CVector, Real};
use crate::spectral::AuxMatrix;

/// Default relative eigenvalue cutoff for the Gram pseudo-inverse.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzMode {
    /// Fixed component tuples placed on every ordered tuple of distinct sites.
    Patterns(Vec<Vec<Pauli>>),
    /// Every Pauli string with support size 1..=K.
    CanonicalFull,
}

/// Declarative description of a K-body, range-R operator set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub mode: AnsatzMode,
    pub max_body: usize,
    pub range: usize,
}

impl AnsatzSpec {
    pub fn patterns(patterns: Vec<Vec<Pauli>>, range: usize) -> Self {
        let max_body = patterns.first().map(Vec::len).unwrap_or(0);
        Self {
            mode: AnsatzMode::Patterns(patterns),
            max_body,
            range,
        }
    }

    /// The two-body `σʸ σᶻ` ansatz.
    pub fn two_body_yz(range: usize) -> Self {
        Self::patterns(vec![vec![Pauli::Y, Pauli::Z]], range)
    }

    pub fn canonical(max_body: usize, range: usize) -> Self {
        Self {
            mode: AnsatzMode::CanonicalFull,
            max_body,
            range,
        }
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        let k = self.max_body;
        if k == 0 {
            return Err(Error::Config("max_body must be at least 1".into()));
        }
        if n_sites < k {
            return Err(Error::Config(format!(
                "{k}-body ansatz on a {n_sites}-site chain"
            )));
        }
        if self.range + 1 < k || self.range + 1 > n_sites {
            return Err(Error::Config(format!(
                "range {} outside [{}, {}]",
                self.range,
                k - 1,
                n_sites - 1
            )));
        }
        if let AnsatzMode::Patterns(patterns) = &self.mode {
            if patterns.is_empty() {
                return Err(Error::Config("patterns mode needs at least one pattern".into()));
            }
            if let Some(bad) = patterns.iter().find(|p| p.len() != k) {
                return Err(Error::Config(format!(
                    "pattern of length {} in a {k}-body ansatz",
                    bad.len()
                )));
            }
        }
        Ok(())
    }
}

/// Concrete, deduplicated, deterministically ordered operator list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorBasis {
    strings: Vec<PauliString>,
    spec: Option<AnsatzSpec>,
    n_sites: usize,
}

impl OperatorBasis {
    /// Explicit operator list, sorted and deduplicated.
    pub fn from_strings(strings: Vec<PauliString>, n_sites: usize) -> Result<Self> {
        if let Some(p) = strings.iter().find(|p| p.max_site() > n_sites) {
            return Err(Error::Config(format!("{p} does not fit on {n_sites} sites")));
        }
        let set: BTreeSet<PauliString> = strings.into_iter().collect();
        Ok(Self {
            strings: set.into_iter().collect(),
            spec: None,
            n_sites,
        })
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// Generating spec, absent for explicit lists.
    pub fn spec(&self) -> Option<&AnsatzSpec> {
        self.spec.as_ref()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn position(&self, p: &PauliString) -> Option<usize> {
        self.strings.binary_search(p).ok()
    }

    /// Images `P_I |ψ⟩` as columns of a `2^N × M` matrix.
    pub fn images<T: Real>(&self, psi: &[num_complex::Complex<T>]) -> CMatrix<T> {
        let dim = psi.len();
        let mut out = CMatrix::from_element(dim, self.len(), czero());
        let mut buf = vec![czero(); dim];
        for (k, p) in self.strings.iter().enumerate() {
            p.apply_into(psi, &mut buf);
            out.column_mut(k).copy_from_slice(&buf);
        }
        out
    }
}

/// Ordered tuples of distinct sites in `1..=n` with pairwise distance ≤ `range`.
fn site_tuples(n: usize, len: usize, range: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, range: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 1..=n {
            if cur.iter().all(|&t| t != s && t.abs_diff(s) <= range) {
                cur.push(s);
                rec(n, len, range, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, len, range, &mut Vec::with_capacity(len), &mut out);
    out
}

/// Ascending site subsets of size `len` whose span is at most `range`.
fn site_subsets(n: usize, len: usize, range: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, range: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in start..=n {
            if let Some(&first) = cur.first() {
                if s - first > range {
                    break;
                }
            }
            cur.push(s);
            rec(n, len, range, s + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, len, range, 1, &mut Vec::with_capacity(len), &mut out);
    out
}

fn component_tuples(len: usize) -> Vec<Vec<Pauli>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                Pauli::ALL.iter().map(move |&p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    out
}

/// Expands an ansatz spec into its operator basis on an `n_sites` chain.
pub fn enumerate_basis(spec: &AnsatzSpec, n_sites: usize) -> Result<OperatorBasis> {
    spec.validate(n_sites)?;
    let mut set = BTreeSet::new();
    match &spec.mode {
        AnsatzMode::Patterns(patterns) => {
            let tuples = site_tuples(n_sites, spec.max_body, spec.range);
            for pattern in patterns {
                for sites in &tuples {
                    set.insert(PauliString::from_parts(sites, pattern)?);
                }
            }
        }
        AnsatzMode::CanonicalFull => {
            for k in 1..=spec.max_body {
                let comps = component_tuples(k);
                for sites in site_subsets(n_sites, k, spec.range) {
                    for cs in &comps {
                        set.insert(PauliString::from_parts(&sites, cs)?);
                    }
                }
            }
        }
    }
    Ok(OperatorBasis {
        strings: set.into_iter().collect(),
        spec: Some(spec.clone()),
        n_sites,
    })
}

/// Real normal equations `Ā h = C̄` of the amplitude fit.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem<T: Real> {
    pub gram: DMatrix<T>,
    pub target: DVector<T>,
    /// `‖Φ_aux‖²` (pure state) or `Tr[ρ H_aux²]` (density matrix).
    pub aux_norm_sq: T,
    /// Adiabatic state the system was built on (pure-state route only).
    pub state_ref: Option<StateVector<T>>,
    images: Option<(CMatrix<T>, CVector<T>)>,
}

impl<T: Real> NormalSystem<T> {
    pub fn dim(&self) -> usize {
        self.target.len()
    }
}

/// Pure-state route: `Ā_{IJ} = 2 Re⟨Φ_I|Φ_J⟩`, `C̄_I = 2 Re⟨Φ_I|Φ_aux⟩`.
pub fn build_system<T: Real>(
    basis: &OperatorBasis,
    psi: &StateVector<T>,
    aux: &AuxMatrix<T>,
) -> Result<NormalSystem<T>> {
    let image = aux.apply(psi.as_slice())?;
    build_system_from_image(basis, psi, image)
}

/// Same as [`build_system`] with `H_aux|ψ⟩` supplied directly.
pub fn build_system_from_image<T: Real>(
    basis: &OperatorBasis,
    psi: &StateVector<T>,
    aux_image: CVector<T>,
) -> Result<NormalSystem<T>> {
    if basis.n_sites() != psi.n_sites() || aux_image.len() != psi.dim() {
        return Err(Error::Config(format!(
            "basis on {} sites, state on {}, aux image of length {}",
            basis.n_sites(),
            psi.n_sites(),
            aux_image.len()
        )));
    }
    let images = basis.images(psi.as_slice());
    let m = basis.len();
    let mut gram = DMatrix::zeros(m, m);
    for j in 0..m {
        let phi_j = images.column(j);
        for i in 0..=j {
            let v = real_pair_overlap_unchecked(images.column(i).as_slice(), phi_j.as_slice());
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let target = DVector::from_fn(m, |i, _| {
        real_pair_overlap_unchecked(images.column(i).as_slice(), aux_image.as_slice())
    });
    Ok(NormalSystem {
        gram,
        target,
        aux_norm_sq: norm_sqr(aux_image.as_slice()),
        state_ref: Some(psi.clone()),
        images: Some((images, aux_image)),
    })
}

/// Density-matrix route: `A_{IJ} = Tr[ρ {P_I, P_J}]`, `C_I = Tr[ρ {H_aux, P_I}]`.
///
/// Dense and slow; kept as an independent check of the pure-state route and
/// for mixed states.
pub fn oracle_system<T: Real>(
    basis: &OperatorBasis,
    rho: &CMatrix<T>,
    aux: &AuxMatrix<T>,
) -> Result<NormalSystem<T>> {
    let dim = 1usize << basis.n_sites();
    if rho.shape() != (dim, dim) || aux.matrix.shape() != (dim, dim) {
        return Err(Error::Config("density matrix or aux dimension mismatch".into()));
    }
    validate_density_matrix(rho)?;
    let dense: Vec<CMatrix<T>> = basis
        .strings()
        .iter()
        .map(|p| p.to_dense(basis.n_sites()))
        .collect::<Result<_>>()?;
    let tr = |m: &CMatrix<T>| (rho * m).trace().re;
    let m = basis.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let anti = &dense[i] * &dense[j] + &dense[j] * &dense[i];
            gram[(i, j)] = tr(&anti);
        }
    }
    let h = &aux.matrix;
    let target = DVector::from_fn(m, |i, _| tr(&(h * &dense[i] + &dense[i] * h)));
    let aux_norm_sq = tr(&(h * h));
    Ok(NormalSystem {
        gram,
        target,
        aux_norm_sq,
        state_ref: None,
        images: None,
    })
}

fn validate_density_matrix<T: Real>(rho: &CMatrix<T>) -> Result<()> {
    let tol = T::lit(1e-10);
    if crate::scalar::hermiticity_defect(rho) > tol {
        return Err(Error::Contract("density matrix is not Hermitian".into()));
    }
    let trace = rho.trace();
    if (trace.re - T::one()).abs() > tol || trace.im.abs() > tol {
        return Err(Error::Contract(format!("density matrix has trace {trace}")));
    }
    let herm = (rho + rho.adjoint()) * c(T::lit(0.5), T::zero());
    let (values, _) = T::herm_eigen(herm)?;
    let min = values
        .iter()
        .fold(T::max_value().unwrap_or(T::one()), |a, x| a.min(*x));
    if min < -tol {
        return Err(Error::Contract(format!(
            "density matrix has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Optimal amplitudes of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSolution<T: Real> {
    /// Aligned with the basis order.
    pub amplitudes: DVector<T>,
    /// Cost at `amplitudes`.
    pub residual: T,
    /// Cost at `h = 0`, i.e. `‖H_aux ψ‖²`.
    pub aux_norm_sq: T,
    pub rank: usize,
    pub cutoff: T,
    /// Ascending eigenvalues of the Gram matrix.
    pub spectrum: Vec<T>,
}

/// Minimum-norm solution of the normal system through a symmetric
/// eigendecomposition of the Gram matrix, dropping eigenvalues at or below
/// `cutoff × λ_max`.
pub fn solve<T: Real>(system: &NormalSystem<T>, cutoff: T) -> Result<AuxSolution<T>> {
    if !(cutoff > T::zero() && cutoff < T::one()) {
        return Err(Error::Config(format!("cutoff {cutoff} outside (0, 1)")));
    }
    let sol = lstsq::solve_gram(&system.gram, &system.target, cutoff)?;
    let h = sol.solution;
    let residual = match &system.images {
        Some((images, aux_image)) => residual_with_images(images, &h, aux_image),
        None => {
            let quad = h.dot(&(&system.gram * &h));
            (system.aux_norm_sq - h.dot(&system.target) + quad * T::lit(0.5)).max(T::zero())
        }
    };
    Ok(AuxSolution {
        amplitudes: h,
        residual,
        aux_norm_sq: system.aux_norm_sq,
        rank: sol.rank,
        cutoff,
        spectrum: sol.spectrum,
    })
}

/// Result of the fast fit used inside propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit<T: Real> {
    pub amplitudes: DVector<T>,
    pub residual: T,
    pub aux_norm_sq: T,
    pub rank: usize,
}

/// Fits amplitudes straight from the images, working on the smaller of the
/// `M × M` Gram matrix and its `2D × 2D` dual. Same solution as
/// `solve(build_system_from_image(..))`.
pub fn fit<T: Real>(
    basis: &OperatorBasis,
    psi: &[num_complex::Complex<T>],
    aux_image: &CVector<T>,
    cutoff: T,
) -> Result<Fit<T>> {
    if psi.len() != 1usize << basis.n_sites() || aux_image.len() != psi.len() {
        return Err(Error::Config("state or aux image dimension mismatch".into()));
    }
    let aux_norm_sq = norm_sqr(aux_image.as_slice());
    if aux_norm_sq == T::zero() {
        return Ok(Fit {
            amplitudes: DVector::zeros(basis.len()),
            residual: T::zero(),
            aux_norm_sq,
            rank: 0,
        });
    }
    let images = basis.images(psi);
    let dim = psi.len();
    let m = basis.len();
    let x = DMatrix::from_fn(2 * dim, m, |r, k| {
        if r < dim {
            images[(r, k)].re
        } else {
            images[(r - dim, k)].im
        }
    });
    let y = DVector::from_fn(2 * dim, |r, _| {
        if r < dim {
            aux_image[r].re
        } else {
            aux_image[r - dim].im
        }
    });
    let sol = lstsq::solve_columns(&x, &y, cutoff)?;
    let residual = residual_with_images(&images, &sol.solution, aux_image);
    Ok(Fit {
        amplitudes: sol.solution,
        residual,
        aux_norm_sq,
        rank: sol.rank,
    })
}

fn residual_with_images<T: Real>(images: &CMatrix<T>, h: &DVector<T>, aux_image: &CVector<T>) -> T {
    let hc = h.map(|x| c(x, T::zero()));
    let r = aux_image - images * hc;
    norm_sqr(r.as_slice())
}

/// `‖(H_aux − Σ_I h_I P_I)|ψ⟩‖²`, evaluated directly.
pub fn residual<T: Real>(
    basis: &OperatorBasis,
    h: &DVector<T>,
    psi: &StateVector<T>,
    aux: &AuxMatrix<T>,
) -> Result<T> {
    let image = aux.apply(psi.as_slice())?;
    residual_from_image(basis, h, psi, &image)
}

pub fn residual_from_image<T: Real>(
    basis: &OperatorBasis,
    h: &DVector<T>,
    psi: &StateVector<T>,
    aux_image: &CVector<T>,
) -> Result<T> {
    if h.len() != basis.len() {
        return Err(Error::Config(format!(
            "{} amplitudes for {} basis strings",
            h.len(),
            basis.len()
        )));
    }
    if basis.n_sites() != psi.n_sites() || aux_image.len() != psi.dim() {
        return Err(Error::Config("state or aux image dimension mismatch".into()));
    }
    let mut r: Vec<_> = aux_image.iter().copied().collect();
    for (coeff, p) in h.iter().zip(basis.strings()) {
        p.accumulate_into(c(-*coeff, T::zero()), psi.as_slice(), &mut r);
    }
    Ok(norm_sqr(&r))
}

/// Experimental resource count `½ · 4^K · N! / (N − K)!`.
pub fn resource_count(n_sites: u64, k_body: u64) -> Result<u64> {
    if k_body == 0 || k_body > n_sites {
        return Err(Error::Config(format!(
            "need 1 <= K <= N, got N = {n_sites}, K = {k_body}"
        )));
    }
    let overflow = || Error::Overflow(format!("resource count for N = {n_sites}, K = {k_body}"));
    // ½ · 4^K = 2^(2K−1)
    let shift = u32::try_from(2 * k_body - 1).map_err(|_| overflow())?;
    let mut count = 1u128.checked_shl(shift).filter(|_| shift < 128).ok_or_else(overflow)?;
    for f in (n_sites - k_body + 1)..=n_sites {
        count = count.checked_mul(u128::from(f)).ok_or_else(overflow)?;
    }
    u64::try_from(count).map_err(|_| overflow())
}
