//! Pauli strings acting on spin-½ chains in the computational basis.
//!
//! Basis convention: index `b` in `0..2^N` stores the spin of site `j`
//! (1-based) in bit `j - 1`; bit value 0 is σᶻ = +1. With the standard
//! matrices this gives σʸ|0⟩ = i|1⟩ and σʸ|1⟩ = −i|0⟩.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, czero, inner, norm_sqr, CMatrix, CVector, Real};

/// Largest chain length for which dense 2^N × 2^N matrices are built by default.
pub const DEFAULT_DENSE_CAP: usize = 12;

/// Largest site index a string can address (one bit per site in a `u64` mask).
pub const MAX_SITES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Self> {
        match ch.to_ascii_lowercase() {
            'x' => Some(Pauli::X),
            'y' => Some(Pauli::Y),
            'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-site Pauli operators with identity elsewhere.
///
/// Terms are kept sorted by site, which makes derived equality and hashing
/// structural. Strings order by support size first and by sites after that,
/// with components breaking ties.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    terms: Vec<(usize, Pauli)>,
    flip: u64,
    sign: u64,
    n_y: u32,
}

impl PauliString {
    /// Builds a string from `(site, component)` pairs given in any order.
    /// Sites are 1-based and must be distinct.
    pub fn new<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        let mut terms: Vec<(usize, Pauli)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(Error::Config("a Pauli string needs at least one site".into()));
        }
        terms.sort_unstable_by_key(|&(site, _)| site);
        for w in terms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!("site {} listed twice", w[0].0)));
            }
        }
        let mut flip = 0u64;
        let mut sign = 0u64;
        let mut n_y = 0u32;
        for &(site, p) in &terms {
            if site == 0 || site > MAX_SITES {
                return Err(Error::Config(format!(
                    "site index {site} outside 1..={MAX_SITES}"
                )));
            }
            let bit = 1u64 << (site - 1);
            match p {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        Ok(Self {
            terms,
            flip,
            sign,
            n_y,
        })
    }

    /// Single-site operator.
    pub fn single(site: usize, p: Pauli) -> Result<Self> {
        Self::new([(site, p)])
    }

    /// Builds from parallel site and component slices.
    pub fn from_parts(sites: &[usize], components: &[Pauli]) -> Result<Self> {
        if sites.len() != components.len() {
            return Err(Error::Config(format!(
                "{} sites but {} components",
                sites.len(),
                components.len()
            )));
        }
        Self::new(sites.iter().copied().zip(components.iter().copied()))
    }

    pub fn terms(&self) -> &[(usize, Pauli)] {
        &self.terms
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|t| t.0)
    }

    pub fn components(&self) -> impl Iterator<Item = Pauli> + '_ {
        self.terms.iter().map(|t| t.1)
    }

    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    pub fn max_site(&self) -> usize {
        self.terms.last().map(|t| t.0).unwrap_or(0)
    }

    /// Largest distance between any two sites of the support (0 for one site).
    pub fn span(&self) -> usize {
        match (self.terms.first(), self.terms.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0,
        }
    }

    pub fn count(&self, p: Pauli) -> usize {
        self.terms.iter().filter(|t| t.1 == p).count()
    }

    fn check_sites(&self, n_sites: usize) -> Result<()> {
        if self.max_site() > n_sites {
            return Err(Error::Config(format!(
                "string {self} addresses site {} on a {n_sites}-site chain",
                self.max_site()
            )));
        }
        Ok(())
    }

    #[inline]
    fn base_phase<T: Real>(&self) -> Complex<T> {
        match self.n_y % 4 {
            0 => c(T::one(), T::zero()),
            1 => c(T::zero(), T::one()),
            2 => c(-T::one(), T::zero()),
            _ => c(T::zero(), -T::one()),
        }
    }

    /// `out += coeff · P · input` on raw amplitude slices.
    ///
    /// The caller guarantees both slices have length 2^N with N covering the
    /// support.
    pub fn accumulate_into<T: Real>(&self, coeff: Complex<T>, input: &[Complex<T>], out: &mut [Complex<T>]) {
        debug_assert_eq!(input.len(), out.len());
        debug_assert!(self.max_site() == 0 || (1usize << (self.max_site() - 1)) < input.len());
        let phase = coeff * self.base_phase::<T>();
        let neg = -phase;
        for (b, &amp) in input.iter().enumerate() {
            let b = b as u64;
            let target = (b ^ self.flip) as usize;
            let ph = if (b & self.sign).count_ones().is_multiple_of(2) { phase } else { neg };
            out[target] += ph * amp;
        }
    }

    /// `out = P · input` on raw amplitude slices.
    pub fn apply_into<T: Real>(&self, input: &[Complex<T>], out: &mut [Complex<T>]) {
        out.iter_mut().for_each(|z| *z = czero());
        self.accumulate_into(c(T::one(), T::zero()), input, out);
    }

    /// P·ψ computed by index bit manipulation in O(2^N).
    pub fn apply<T: Real>(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        self.check_sites(psi.n_sites)?;
        let mut out = vec![czero(); psi.dim()];
        self.apply_into(psi.as_slice(), &mut out);
        Ok(StateVector {
            amplitudes: DVector::from_vec(out),
            n_sites: psi.n_sites,
        })
    }

    /// Dense matrix of the string on an `n_sites` chain, capped at [`DEFAULT_DENSE_CAP`].
    pub fn to_dense<T: Real>(&self, n_sites: usize) -> Result<CMatrix<T>> {
        self.to_dense_capped(n_sites, DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped<T: Real>(&self, n_sites: usize, cap: usize) -> Result<CMatrix<T>> {
        self.check_sites(n_sites)?;
        if n_sites > cap {
            return Err(Error::Resource(format!(
                "dense matrix for {n_sites} sites exceeds the cap of {cap}"
            )));
        }
        let dim = 1usize << n_sites;
        let mut m = DMatrix::from_element(dim, dim, czero());
        let mut col = vec![czero(); dim];
        let mut e = vec![czero::<T>(); dim];
        for j in 0..dim {
            e[j] = c(T::one(), T::zero());
            self.apply_into(&e, &mut col);
            e[j] = czero();
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Ok(m)
    }

    /// True when the string commutes with the global spin flip ⊗σˣ.
    pub fn commutes_with_spin_flip(&self) -> bool {
        self.sign.count_ones().is_multiple_of(2)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.terms
            .len()
            .cmp(&other.terms.len())
            .then_with(|| self.sites().cmp(other.sites()))
            .then_with(|| self.components().cmp(other.components()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (site, p)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.symbol().to_ascii_uppercase(), site)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses the `Display` form, e.g. `"Y1 Z3"`.
    fn from_str(s: &str) -> Result<Self> {
        let terms = s
            .split_whitespace()
            .map(|tok| {
                let mut chars = tok.chars();
                let p = chars
                    .next()
                    .and_then(Pauli::from_symbol)
                    .ok_or_else(|| Error::Config(format!("bad Pauli token {tok:?}")))?;
                let site = chars
                    .as_str()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad site in token {tok:?}")))?;
                Ok((site, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Normalized state of an N-site chain (2^N complex amplitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    amplitudes: CVector<T>,
    n_sites: usize,
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes after checking the length and the unit norm.
    pub fn new(amplitudes: CVector<T>, n_sites: usize) -> Result<Self> {
        Self::with_tolerance(amplitudes, n_sites, T::norm_tolerance())
    }

    pub fn with_tolerance(amplitudes: CVector<T>, n_sites: usize, tol: T) -> Result<Self> {
        if n_sites >= usize::BITS as usize || amplitudes.len() != 1usize << n_sites {
            return Err(Error::Config(format!(
                "{} amplitudes do not describe a {n_sites}-site chain",
                amplitudes.len()
            )));
        }
        let norm = norm_sqr(amplitudes.as_slice()).sqrt();
        if (norm - T::one()).abs() > tol {
            return Err(Error::Contract(format!(
                "state norm {norm} differs from 1 by more than {tol}"
            )));
        }
        Ok(Self {
            amplitudes,
            n_sites,
        })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: CVector<T>, n_sites: usize) -> Result<Self> {
        let norm = norm_sqr(amplitudes.as_slice()).sqrt();
        if norm <= T::zero() {
            return Err(Error::Contract("cannot normalize the zero vector".into()));
        }
        Self::new(amplitudes.unscale(norm), n_sites)
    }

    /// Computational basis state |index⟩.
    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::Config(format!("basis index {index} >= {dim}")));
        }
        let mut v = DVector::from_element(dim, czero());
        v[index] = c(T::one(), T::zero());
        Ok(Self {
            amplitudes: v,
            n_sites,
        })
    }

    pub(crate) fn from_raw(amplitudes: CVector<T>, n_sites: usize) -> Self {
        Self {
            amplitudes,
            n_sites,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector<T> {
        self.amplitudes
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        self.amplitudes.as_slice()
    }

    pub fn norm(&self) -> T {
        norm_sqr(self.as_slice()).sqrt()
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(Error::Config(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(inner(self.as_slice(), other.as_slice()))
    }

    /// Multiplies by a global phase factor.
    pub fn with_phase(&self, phase: Complex<T>) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|z| z * phase),
            n_sites: self.n_sites,
        }
    }
}

/// 2 Re⟨φ₁|φ₂⟩, the real pair overlap entering the Gram matrix and target.
pub fn real_pair_overlap<T: Real>(phi1: &[Complex<T>], phi2: &[Complex<T>]) -> Result<T> {
    if phi1.len() != phi2.len() {
        return Err(Error::Config(format!(
            "dimension mismatch: {} vs {}",
            phi1.len(),
            phi2.len()
        )));
    }
    Ok(real_pair_overlap_unchecked(phi1, phi2))
}

#[inline]
pub(crate) fn real_pair_overlap_unchecked<T: Real>(phi1: &[Complex<T>], phi2: &[Complex<T>]) -> T {
    let re = phi1
        .iter()
        .zip(phi2)
        .fold(T::zero(), |acc, (a, b)| acc + a.re * b.re + a.im * b.im);
    re + re
}

/// Real linear combination of Pauli strings, Σ cₖ Pₖ.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum<T: Real> {
    terms: Vec<(T, PauliString)>,
}

impl<T: Real> Default for PauliSum<T> {
    fn default() -> Self {
        Self { terms: Vec::new() }
    }
}

impl<T: Real> PauliSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: T, string: PauliString) {
        self.terms.push((coeff, string));
    }

    pub fn extend<I: IntoIterator<Item = (T, PauliString)>>(&mut self, terms: I) {
        self.terms.extend(terms);
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Σ|cₖ|, an upper bound on the operator norm.
    pub fn one_norm(&self) -> T {
        self.terms.iter().fold(T::zero(), |acc, (c, _)| acc + c.abs())
    }

    /// `out = (Σ cₖ Pₖ) · input`.
    pub fn apply_into(&self, input: &[Complex<T>], out: &mut [Complex<T>]) {
        out.iter_mut().for_each(|z| *z = czero());
        for (coeff, p) in &self.terms {
            if *coeff != T::zero() {
                p.accumulate_into(c(*coeff, T::zero()), input, out);
            }
        }
    }

    pub fn to_dense(&self, n_sites: usize) -> Result<CMatrix<T>> {
        let dim = 1usize << n_sites;
        let mut m = DMatrix::from_element(dim, dim, czero());
        for (coeff, p) in &self.terms {
            m += p.to_dense::<T>(n_sites)? * c(*coeff, T::zero());
        }
        Ok(m)
    }
}
