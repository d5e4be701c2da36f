//! Ising Hamiltonian, exact diagonalization and the exact counterdiabatic term.
//!
//! The chain Hamiltonian is
//! `H0(B) = −B Σⱼ σˣⱼ + J0 Σⱼ σᶻⱼ σᶻⱼ₊₁` with open boundaries, and the
//! driven parameter is the field `B`. Both `H0` and `∂H0/∂B = −Σⱼ σˣⱼ`
//! commute with the global spin flip `Π = ⊗ⱼ σˣⱼ`, so the model spectrum is
//! computed one parity sector at a time. That keeps the two quasi-degenerate
//! ferromagnetic ground states cleanly separated at small `B`, where a plain
//! dense solver would return arbitrary mixtures of them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, StateVector, DEFAULT_DENSE_CAP};
use crate::scalar::{c, cabs, czero, hermiticity_defect, max_abs, CMatrix, CVector, Real};

/// Relative tolerance used when a Hermitian input is validated.
const HERMITIAN_RTOL: f64 = 1e-10;

/// Overlaps below this magnitude mean gauge tracking has lost the level.
pub const MIN_TRACKING_OVERLAP: f64 = 1e-6;

/// Default gap tolerance relative to the spectral width.
pub const DEFAULT_GAP_RTOL: f64 = 1e-8;

/// Open transverse-field Ising chain with uniform coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingModel<T: Real> {
    n_sites: usize,
    coupling: T,
}

impl<T: Real> IsingModel<T> {
    pub fn new(n_sites: usize, coupling: T) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Config("the chain needs at least one site".into()));
        }
        if !coupling.is_finite() {
            return Err(Error::Config(format!("coupling {coupling} is not finite")));
        }
        if n_sites >= 2 && coupling == T::zero() {
            return Err(Error::Config("coupling must be nonzero for N >= 2".into()));
        }
        if n_sites > crate::pauli::MAX_SITES {
            return Err(Error::Config(format!("{n_sites} sites is more than supported")));
        }
        Ok(Self { n_sites, coupling })
    }

    /// Unit coupling, the energy scale used throughout.
    pub fn unit(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, T::one())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// `H0(B)` as a sum of Pauli strings (N field terms, N−1 bonds).
    pub fn hamiltonian_terms(&self, field: T) -> PauliSum<T> {
        let mut h = PauliSum::new();
        for j in 1..=self.n_sites {
            h.push(-field, PauliString::single(j, Pauli::X).expect("valid site"));
        }
        for j in 1..self.n_sites {
            h.push(
                self.coupling,
                PauliString::new([(j, Pauli::Z), (j + 1, Pauli::Z)]).expect("valid bond"),
            );
        }
        h
    }

    /// `∂H0/∂B = −Σⱼ σˣⱼ`.
    pub fn field_derivative_terms(&self) -> PauliSum<T> {
        let mut h = PauliSum::new();
        for j in 1..=self.n_sites {
            h.push(-T::one(), PauliString::single(j, Pauli::X).expect("valid site"));
        }
        h
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_sites > DEFAULT_DENSE_CAP {
            return Err(Error::Resource(format!(
                "dense Hamiltonian for {} sites exceeds the cap of {DEFAULT_DENSE_CAP}",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// Dense `∂H0/∂B`.
    pub fn field_derivative(&self) -> Result<CMatrix<T>> {
        self.check_dense()?;
        Ok(real_to_complex(&dense_real(self.dim(), |b, out| {
            for j in 0..self.n_sites {
                out.push((b ^ (1 << j), -T::one()));
            }
        })))
    }
}

/// Builds a real matrix column by column from a sparse column generator.
fn dense_real<T: Real>(dim: usize, column: impl Fn(usize, &mut Vec<(usize, T)>)) -> DMatrix<T> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut entries = Vec::new();
    for b in 0..dim {
        entries.clear();
        column(b, &mut entries);
        for &(row, v) in &entries {
            m[(row, b)] += v;
        }
    }
    m
}

fn real_to_complex<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| c(x, T::zero()))
}

/// Dense `H0(B)`; real symmetric, stored as complex.
pub fn build_hamiltonian<T: Real>(model: &IsingModel<T>, field: T) -> Result<CMatrix<T>> {
    model.check_dense()?;
    if !field.is_finite() {
        return Err(Error::Config(format!("field {field} is not finite")));
    }
    let n = model.n_sites;
    let j0 = model.coupling;
    Ok(real_to_complex(&dense_real(model.dim(), |b, out| {
        let mut diag = T::zero();
        for j in 0..n.saturating_sub(1) {
            let same = ((b >> j) & 1) == ((b >> (j + 1)) & 1);
            diag += if same { j0 } else { -j0 };
        }
        out.push((b, diag));
        for j in 0..n {
            out.push((b ^ (1 << j), -field));
        }
    })))
}

/// Eigenvalue of the global spin flip `⊗σˣ` on a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign<T: Real>(self) -> T {
        match self {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
        }
    }
}

/// Full eigensystem of a Hermitian matrix at one parameter value.
///
/// Eigenvalues ascend; when the spectrum was resolved by spin-flip parity,
/// levels of different parity closer than a few ulps are ordered even first.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSnapshot<T: Real> {
    field: Option<T>,
    eigenvalues: DVector<T>,
    eigenvectors: CMatrix<T>,
    sectors: Option<Vec<Parity>>,
}

impl<T: Real> SpectralSnapshot<T> {
    pub fn field(&self) -> Option<T> {
        self.field
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix<T> {
        &self.eigenvectors
    }

    /// Parity of every level, when the spectrum was resolved by sector.
    pub fn sectors(&self) -> Option<&[Parity]> {
        self.sectors.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_width(&self) -> T {
        let n = self.dim();
        self.eigenvalues[n - 1] - self.eigenvalues[0]
    }

    /// `DEFAULT_GAP_RTOL` times the spectral width (or times the largest
    /// |ε| for a flat spectrum).
    pub fn default_gap_tol(&self) -> T {
        let width = self.spectral_width();
        let scale = if width > T::zero() {
            width
        } else {
            self.eigenvalues.iter().fold(T::one(), |a, e| a.max(e.abs()))
        };
        T::lit(DEFAULT_GAP_RTOL) * scale
    }

    pub fn eigenvector(&self, level: usize) -> CVector<T> {
        self.eigenvectors.column(level).into_owned()
    }

    /// Whether levels `m` and `n` can be coupled by a parity-preserving operator.
    pub fn same_sector(&self, m: usize, n: usize) -> bool {
        match &self.sectors {
            Some(s) => s[m] == s[n],
            None => true,
        }
    }

    /// Replaces each eigenvector column by `phases[k]` times itself.
    pub fn rephased(&self, phases: &[Complex<T>]) -> Self {
        let mut out = self.clone();
        for (k, ph) in phases.iter().enumerate() {
            let mut col = out.eigenvectors.column_mut(k);
            col.iter_mut().for_each(|z| *z *= *ph);
        }
        out
    }

    /// Reconstructs `V diag(ε) V†`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= c(*e, T::zero()));
        }
        scaled * v.adjoint()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.dim() {
            return Err(Error::Config(format!(
                "level {level} requested from a {}-level spectrum",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Errors when a level of the same sector lies within `gap_tol` of `level`.
    pub fn check_isolated(&self, level: usize, gap_tol: T) -> Result<()> {
        self.check_level(level)?;
        let e = self.eigenvalues[level];
        for m in 0..self.dim() {
            if m != level && self.same_sector(m, level) {
                let gap = (self.eigenvalues[m] - e).abs();
                if gap <= gap_tol {
                    return Err(degeneracy(m, level, gap, gap_tol));
                }
            }
        }
        Ok(())
    }

    /// Eigenvector `level` with its global phase fixed.
    ///
    /// With `prev`, the phase makes `⟨prev|out⟩` real and positive; without
    /// it, the largest-magnitude amplitude (first on ties) is made real positive.
    pub fn gauge_fixed_state(
        &self,
        level: usize,
        prev: Option<&StateVector<T>>,
        gap_tol: T,
    ) -> Result<StateVector<T>> {
        self.check_isolated(level, gap_tol)?;
        let v = self.eigenvector(level);
        let n_sites = self.dim().trailing_zeros() as usize;
        let phase = match prev {
            Some(p) => {
                if p.dim() != v.len() {
                    return Err(Error::Config(format!(
                        "previous state has dimension {}, spectrum has {}",
                        p.dim(),
                        v.len()
                    )));
                }
                let ov = crate::scalar::inner(p.as_slice(), v.as_slice());
                let mag = cabs(ov);
                if mag < T::lit(MIN_TRACKING_OVERLAP) {
                    return Err(Error::Tracking(format!(
                        "overlap {mag:e} with the previous state at level {level}; level crossing suspected"
                    )));
                }
                ov.conj().unscale(mag)
            }
            None => {
                let mut best = czero();
                let mut best_mag = T::zero();
                for z in v.iter() {
                    let m = cabs(*z);
                    if m > best_mag {
                        best_mag = m;
                        best = *z;
                    }
                }
                best.conj().unscale(best_mag)
            }
        };
        Ok(StateVector::from_raw(v.map(|z| z * phase), n_sites))
    }
}

fn degeneracy<T: Real>(a: usize, b: usize, gap: T, tol: T) -> Error {
    Error::Degeneracy {
        lower: a.min(b),
        upper: a.max(b),
        gap: gap.to_f64_lossy(),
        tolerance: tol.to_f64_lossy(),
    }
}

fn check_hermitian<T: Real>(h: &CMatrix<T>) -> Result<()> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Contract(format!(
            "expected a nonempty square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = max_abs(h).max(T::one());
    let defect = hermiticity_defect(h);
    if defect > T::lit(HERMITIAN_RTOL) * scale {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Eigenpairs of a validated Hermitian matrix, ascending.
fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let (values, vectors) = if h.iter().all(|z| z.im == T::zero()) {
        let re = h.map(|z| z.re);
        let (values, vectors) = T::sym_eigen((&re + re.transpose()) * T::lit(0.5))?;
        (values, real_to_complex(&vectors))
    } else {
        T::herm_eigen((h + h.adjoint()) * c(T::lit(0.5), T::zero()))?
    };
    Ok((values.iter().copied().collect(), vectors))
}

/// Full dense eigendecomposition of a Hermitian matrix.
pub fn diagonalize<T: Real>(h: &CMatrix<T>) -> Result<SpectralSnapshot<T>> {
    check_hermitian(h)?;
    let (values, vectors) = hermitian_eigen(h)?;
    Ok(SpectralSnapshot {
        field: None,
        eigenvalues: DVector::from_vec(values),
        eigenvectors: vectors,
        sectors: None,
    })
}

/// Eigendecomposition of a `2^N`-dimensional Hermitian matrix that commutes
/// with the global spin flip, resolved into even and odd sectors.
///
/// Each sector is spanned by `(|b⟩ ± |b̄⟩)/√2` where `b̄` flips every bit of
/// `b`; the two blocks are diagonalized separately and lifted back.
pub fn diagonalize_by_parity<T: Real>(h: &CMatrix<T>) -> Result<SpectralSnapshot<T>> {
    check_hermitian(h)?;
    let dim = h.nrows();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Config(format!(
            "dimension {dim} is not 2^N with N >= 1"
        )));
    }
    let all = dim - 1;
    let scale = max_abs(h).max(T::one());
    for b in 0..dim {
        for k in 0..dim {
            if cabs(h[(b, k)] - h[(b ^ all, k ^ all)]) > T::lit(HERMITIAN_RTOL) * scale {
                return Err(Error::Contract(
                    "matrix does not commute with the global spin flip".into(),
                ));
            }
        }
    }
    let half = dim / 2;
    let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut sector_parts = Vec::with_capacity(2);
    for parity in [Parity::Even, Parity::Odd] {
        let s = c(parity.sign::<T>(), T::zero());
        let block = CMatrix::from_fn(half, half, |k, l| h[(k, l)] + s * h[(k, l ^ all)]);
        let (values, vectors) = hermitian_eigen(&block)?;
        let mut lifted = CMatrix::from_element(dim, half, czero());
        for j in 0..half {
            for k in 0..half {
                let u = vectors[(k, j)] * c(inv_sqrt2, T::zero());
                lifted[(k, j)] = u;
                lifted[(k ^ all, j)] = u * s;
            }
        }
        sector_parts.push((parity, values, lifted));
    }
    let tie = T::lit(64.0) * T::default_epsilon() * scale;
    let (even, odd) = (&sector_parts[0], &sector_parts[1]);
    let mut values = Vec::with_capacity(dim);
    let mut sectors = Vec::with_capacity(dim);
    let mut vectors = CMatrix::from_element(dim, dim, czero());
    let (mut i, mut j) = (0, 0);
    while i < half || j < half {
        let take_even = j >= half || (i < half && even.1[i] <= odd.1[j] + tie);
        let (part, idx) = if take_even { (even, &mut i) } else { (odd, &mut j) };
        let col = values.len();
        values.push(part.1[*idx]);
        sectors.push(part.0);
        vectors.set_column(col, &part.2.column(*idx));
        *idx += 1;
    }
    Ok(SpectralSnapshot {
        field: None,
        eigenvalues: DVector::from_vec(values),
        eigenvectors: vectors,
        sectors: Some(sectors),
    })
}

/// Parity-resolved spectrum of `H0(B)`.
pub fn snapshot<T: Real>(model: &IsingModel<T>, field: T) -> Result<SpectralSnapshot<T>> {
    let h = build_hamiltonian(model, field)?;
    let mut snap = diagonalize_by_parity(&h)?;
    snap.field = Some(field);
    Ok(snap)
}

/// Exact counterdiabatic term built at one field value and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxMatrix<T: Real> {
    pub matrix: CMatrix<T>,
    pub field_rate: T,
}

impl<T: Real> AuxMatrix<T> {
    pub fn zeros(dim: usize, field_rate: T) -> Self {
        Self {
            matrix: CMatrix::from_element(dim, dim, czero()),
            field_rate,
        }
    }

    /// `H_aux |ψ⟩`.
    pub fn apply(&self, psi: &[Complex<T>]) -> Result<CVector<T>> {
        if psi.len() != self.matrix.ncols() {
            return Err(Error::Config(format!(
                "vector of length {} against a {}-dimensional operator",
                psi.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * CVector::from_column_slice(psi))
    }
}

/// `H_aux = i Ḃ Σ_{m≠n} |ε_m⟩⟨ε_m| ∂_B H0 |ε_n⟩⟨ε_n| / (ε_n − ε_m)`.
///
/// Gauge invariant and needs a single diagonalization. Pairs in different
/// parity sectors are skipped (their matrix element vanishes identically);
/// any other pair closer than `gap_tol` is a degeneracy error.
pub fn exact_aux<T: Real>(
    snap: &SpectralSnapshot<T>,
    d_hamiltonian: &CMatrix<T>,
    field_rate: T,
    gap_tol: Option<T>,
) -> Result<AuxMatrix<T>> {
    let dim = snap.dim();
    if d_hamiltonian.nrows() != dim || d_hamiltonian.ncols() != dim {
        return Err(Error::Config(format!(
            "derivative is {}x{}, spectrum has {dim} levels",
            d_hamiltonian.nrows(),
            d_hamiltonian.ncols()
        )));
    }
    if field_rate == T::zero() {
        return Ok(AuxMatrix::zeros(dim, field_rate));
    }
    let tol = gap_tol.unwrap_or_else(|| snap.default_gap_tol());
    let v = &snap.eigenvectors;
    let w = v.adjoint() * d_hamiltonian * v;
    let e = &snap.eigenvalues;
    let mut m = CMatrix::from_element(dim, dim, czero());
    for col in 0..dim {
        for row in 0..dim {
            if row == col || !snap.same_sector(row, col) {
                continue;
            }
            let gap = e[col] - e[row];
            if gap.abs() <= tol {
                return Err(degeneracy(row, col, gap.abs(), tol));
            }
            m[(row, col)] = w[(row, col)] * c(T::zero(), field_rate / gap);
        }
    }
    let matrix = v * m * v.adjoint();
    Ok(AuxMatrix { matrix, field_rate })
}

/// `H_aux |ε_level⟩` without forming the full matrix; O(D²).
pub fn aux_image<T: Real>(
    snap: &SpectralSnapshot<T>,
    d_hamiltonian: &CMatrix<T>,
    field_rate: T,
    level: usize,
    gap_tol: Option<T>,
) -> Result<CVector<T>> {
    let dim = snap.dim();
    snap.check_level(level)?;
    if d_hamiltonian.nrows() != dim {
        return Err(Error::Config("derivative dimension mismatch".into()));
    }
    if field_rate == T::zero() {
        return Ok(CVector::from_element(dim, czero()));
    }
    let tol = gap_tol.unwrap_or_else(|| snap.default_gap_tol());
    snap.check_isolated(level, tol)?;
    let v = &snap.eigenvectors;
    let w = d_hamiltonian * v.column(level);
    let mut coeffs = v.ad_mul(&w);
    let e_n = snap.eigenvalues[level];
    for m in 0..dim {
        coeffs[m] = if m == level || !snap.same_sector(m, level) {
            czero()
        } else {
            coeffs[m] * c(T::zero(), field_rate / (e_n - snap.eigenvalues[m]))
        };
    }
    Ok(v * coeffs)
}

/// Instantaneous eigenstate `level` of `H0(field_path(t))`, gauge-continued from `prev`.
pub fn adiabatic_state<T: Real>(
    model: &IsingModel<T>,
    field_path: impl Fn(T) -> T,
    t: T,
    level: usize,
    prev: Option<&StateVector<T>>,
    gap_tol: Option<T>,
) -> Result<StateVector<T>> {
    let snap = snapshot(model, field_path(t))?;
    let tol = gap_tol.unwrap_or_else(|| snap.default_gap_tol());
    snap.gauge_fixed_state(level, prev, tol)
}
