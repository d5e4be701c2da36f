#![allow(dead_code)]

use cdforge::{CMatrix, CVector, Pauli, PauliString, State};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> State {
    let dim = 1usize << n;
    let v = CVector::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    State::normalized(v, n).unwrap()
}

pub fn random_string(n: usize, rng: &mut impl Rng) -> PauliString {
    loop {
        let terms: Vec<(usize, Pauli)> = (1..=n)
            .filter_map(|s| match rng.gen_range(0..4) {
                0 => None,
                k => Some((s, Pauli::ALL[k - 1])),
            })
            .collect();
        if !terms.is_empty() {
            return PauliString::new(terms).unwrap();
        }
    }
}

fn single(p: Option<Pauli>) -> DMatrix<Complex64> {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    let m = match p {
        None => [l, o, o, l],
        Some(Pauli::X) => [o, l, l, o],
        Some(Pauli::Y) => [o, -i, i, o],
        Some(Pauli::Z) => [l, o, o, -l],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Kronecker product with site `n` leftmost, so that site 1 is the lowest bit.
pub fn kron_string(n: usize, component: impl Fn(usize) -> Option<Pauli>) -> CMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for site in (1..=n).rev() {
        out = out.kronecker(&single(component(site)));
    }
    out
}

pub fn kron_pauli(p: &PauliString, n: usize) -> CMatrix<f64> {
    kron_string(n, |s| p.terms().iter().find(|t| t.0 == s).map(|t| t.1))
}

/// `−B Σ σˣ + J Σ σᶻσᶻ` assembled from Kronecker products.
pub fn kron_hamiltonian(n: usize, b: f64, j: f64) -> CMatrix<f64> {
    let dim = 1usize << n;
    let mut h = CMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for s in 1..=n {
        h -= kron_string(n, |k| (k == s).then_some(Pauli::X)) * Complex64::new(b, 0.0);
    }
    for s in 1..n {
        h += kron_string(n, |k| (k == s || k == s + 1).then_some(Pauli::Z)) * Complex64::new(j, 0.0);
    }
    h
}

pub fn real_part(m: &CMatrix<f64>) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn max_abs(m: &CMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix<f64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Isometries onto the even and odd spin-flip sectors, built column by column.
pub fn parity_isometries(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = 1usize << n;
    let all = dim - 1;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let reps: Vec<usize> = (0..dim).filter(|&b| b < (b ^ all)).collect();
    let mut even = DMatrix::zeros(dim, reps.len());
    let mut odd = DMatrix::zeros(dim, reps.len());
    for (k, &b) in reps.iter().enumerate() {
        even[(b, k)] = r;
        even[(b ^ all, k)] = r;
        odd[(b, k)] = r;
        odd[(b ^ all, k)] = -r;
    }
    (even, odd)
}

/// Eigenpairs of the real symmetric chain Hamiltonian sector by sector,
/// lifted back to the full space. Returns (energies, vectors) for each sector.
pub fn sector_eigen(h: &DMatrix<f64>, n: usize) -> Vec<(Vec<f64>, DMatrix<f64>)> {
    let (even, odd) = parity_isometries(n);
    [even, odd]
        .into_iter()
        .map(|p| {
            let block = p.transpose() * h * &p;
            let eig = block.symmetric_eigen();
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let vecs = DMatrix::from_columns(&order.iter().map(|&k| &p * eig.eigenvectors.column(k)).collect::<Vec<_>>());
            (vals, vecs)
        })
        .collect()
}

/// Mirror image `j → N + 1 − j` of a basis index.
pub fn reflect_index(b: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, j| acc | (((b >> j) & 1) << (n - 1 - j)))
}
