//! Quench protocols, time propagation and tracking metrics.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, StateVector};
use crate::scalar::{c, czero, inner, norm_sqr, CMatrix, Real};
use crate::spectral::{aux_image, exact_aux, snapshot, IsingModel, SpectralSnapshot};
use crate::variational::{enumerate_basis, fit, AnsatzSpec, OperatorBasis, DEFAULT_CUTOFF};

/// Time dependence of the transverse field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuenchProtocol<T: Real> {
    /// `B(t) = B0 − v t` for `t ≥ 0`.
    Linear { b0: T, rate: T },
    /// `B(s) = B0 + 3(Bf − B0)s² − 2(Bf − B0)s³`, `s = t/τ ∈ [0, 1]`.
    Cubic { b0: T, bf: T, tau: T },
}

impl<T: Real> QuenchProtocol<T> {
    pub fn linear(b0: T, rate: T) -> Result<Self> {
        if rate == T::zero() || !rate.is_finite() || !b0.is_finite() {
            return Err(Error::Config(format!("linear quench needs a finite nonzero rate, got {rate}")));
        }
        Ok(Self::Linear { b0, rate })
    }

    pub fn cubic(b0: T, bf: T, tau: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() || !b0.is_finite() || !bf.is_finite() {
            return Err(Error::Config(format!("cubic quench needs tau > 0, got {tau}")));
        }
        Ok(Self::Cubic { b0, bf, tau })
    }

    pub fn initial_field(&self) -> T {
        match *self {
            Self::Linear { b0, .. } | Self::Cubic { b0, .. } => b0,
        }
    }

    /// Time at which a linear quench reaches `bf`, or `τ` for the cubic one.
    pub fn duration_to(&self, bf: T) -> Result<T> {
        match *self {
            Self::Linear { b0, rate } => {
                let t = (b0 - bf) / rate;
                if t > T::zero() {
                    Ok(t)
                } else {
                    Err(Error::NoCrossing { target: bf.to_f64_lossy() })
                }
            }
            Self::Cubic { tau, .. } => Ok(tau),
        }
    }

    fn check_time(&self, t: T) -> Result<()> {
        let ok = match *self {
            Self::Linear { .. } => t >= T::zero() && t.is_finite(),
            Self::Cubic { tau, .. } => t >= T::zero() && t <= tau,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("time {t} outside the protocol domain")))
        }
    }

    pub fn field(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        Ok(self.field_unchecked(t))
    }

    pub fn field_rate(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        Ok(self.field_rate_unchecked(t))
    }

    fn field_unchecked(&self, t: T) -> T {
        match *self {
            Self::Linear { b0, rate } => b0 - rate * t,
            Self::Cubic { b0, bf, tau } => {
                let s = t / tau;
                let d = bf - b0;
                if s <= T::lit(0.5) {
                    b0 + d * s * s * (T::lit(3.0) - T::lit(2.0) * s)
                } else {
                    let u = T::one() - s;
                    bf - d * u * u * (T::one() + T::lit(2.0) * s)
                }
            }
        }
    }

    fn field_rate_unchecked(&self, t: T) -> T {
        match *self {
            Self::Linear { rate, .. } => -rate,
            Self::Cubic { b0, bf, tau } => {
                let s = t / tau;
                T::lit(6.0) * (bf - b0) * s * (T::one() - s) / tau
            }
        }
    }
}

/// Time at which the field crosses `B = J0`.
///
/// Closed form for the linear quench; bisection in `s` to 1e−12 for the cubic one.
pub fn critical_time<T: Real>(protocol: &QuenchProtocol<T>, coupling: T) -> Result<T> {
    let no_crossing = || Error::NoCrossing { target: coupling.to_f64_lossy() };
    match *protocol {
        QuenchProtocol::Linear { b0, rate } => {
            let t = (b0 - coupling) / rate;
            if t >= T::zero() && t.is_finite() {
                Ok(t)
            } else {
                Err(no_crossing())
            }
        }
        QuenchProtocol::Cubic { b0, bf, tau } => {
            let (lo_f, hi_f) = (b0.min(bf), b0.max(bf));
            if coupling < lo_f || coupling > hi_f || b0 == bf {
                return Err(no_crossing());
            }
            // B(s) is monotone on [0, 1]
            let g = |s: T| protocol.field_unchecked(s * tau) - coupling;
            let (mut lo, mut hi) = (T::zero(), T::one());
            let rising = bf > b0;
            let tol = T::lit(1e-12);
            while hi - lo > tol {
                let mid = (lo + hi) * T::lit(0.5);
                let below = g(mid) < T::zero();
                if below == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((lo + hi) * T::lit(0.5) * tau)
        }
    }
}

/// `F = |⟨ψ_a|ψ⟩|²`.
pub fn fidelity<T: Real>(adiabatic: &StateVector<T>, psi: &StateVector<T>) -> Result<T> {
    Ok(adiabatic.overlap(psi)?.norm_sqr())
}

/// What is added to `H0(t)` during propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driving {
    /// `H0` alone.
    Bare,
    /// The exact counterdiabatic matrix.
    Exact,
    /// The variational fit on the given operator set, re-solved per step.
    Ansatz(AnsatzSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig<T: Real> {
    /// Base step.
    pub dt: T,
    /// Allowed change of the final fidelity under step halving.
    pub convergence_tol: T,
    /// Halvings tried after the base run before giving up.
    pub max_refinements: usize,
    /// When false, a single run at `dt` is returned without the halving check.
    pub check_convergence: bool,
    pub norm_tol: T,
    /// Re-fit the ansatz at every step midpoint; otherwise once per grid interval.
    pub resolve_aux_every_step: bool,
    pub cutoff: T,
    /// Absolute gap tolerance; defaults to the snapshot's relative tolerance.
    pub gap_tol: Option<T>,
    /// Tracked instantaneous level (0 = ground state).
    pub level: usize,
}

impl<T: Real> PropagationConfig<T> {
    /// Defaults with `dt = 10⁻³ · duration`.
    pub fn for_duration(duration: T) -> Self {
        Self {
            dt: duration * T::lit(1e-3),
            convergence_tol: T::lit(1e-6),
            max_refinements: 4,
            check_convergence: true,
            norm_tol: T::lit(1e-9),
            resolve_aux_every_step: true,
            cutoff: T::lit(DEFAULT_CUTOFF),
            gap_tol: None,
            level: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cutoff > T::zero() && self.cutoff < T::one()) {
            return Err(Error::Config(format!("cutoff {} outside (0, 1)", self.cutoff)));
        }
        Ok(())
    }
}

/// Time series produced by [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T: Real> {
    pub times: Vec<T>,
    pub fields: Vec<T>,
    pub fidelity: Vec<T>,
    /// `1 − F` at every grid time.
    pub defect_density: Vec<T>,
    /// Fit cost at every grid time (`‖H_aux ψ_a‖²` for bare driving, 0 for exact).
    pub residual: Vec<T>,
    /// `‖H_aux ψ_a‖²` at every grid time.
    pub aux_norm_sq: Vec<T>,
    /// Amplitudes at every grid time, aligned with `basis`.
    pub amplitudes: Option<Vec<DVector<T>>>,
    pub basis: Option<OperatorBasis>,
    /// Largest fit cost over all solves (grid and step midpoints).
    pub max_residual: T,
    /// Largest `residual / ‖H_aux ψ_a‖²` over all solves with nonzero aux.
    pub max_relative_residual: T,
    /// Step of the returned run.
    pub dt: T,
    /// Halvings applied to the base step.
    pub refinements: usize,
    /// `|F_final(dt_prev) − F_final(dt)|` of the last halving.
    pub halving_delta: Option<T>,
    /// `max_t |‖ψ(t)‖ − 1|`.
    pub norm_drift: T,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn final_fidelity(&self) -> T {
        *self.fidelity.last().expect("nonempty grid")
    }

    pub fn final_defect_density(&self) -> T {
        *self.defect_density.last().expect("nonempty grid")
    }
}

/// Instantaneous generator `H(t)`: Pauli terms plus an optional dense part.
struct Generator<T: Real> {
    terms: PauliSum<T>,
    dense: Option<CMatrix<T>>,
}

impl<T: Real> Generator<T> {
    fn apply(&self, input: &[Complex<T>], out: &mut [Complex<T>]) {
        self.terms.apply_into(input, out);
        if let Some(m) = &self.dense {
            let n = input.len();
            for (j, &x) in input.iter().enumerate() {
                if x == czero() {
                    continue;
                }
                let col = m.column(j);
                for i in 0..n {
                    out[i] += col[i] * x;
                }
            }
        }
    }

    /// Upper bound on the operator norm.
    fn norm_bound(&self) -> T {
        let dense = self
            .dense
            .as_ref()
            .map(|m| norm_sqr(m.as_slice()).sqrt())
            .unwrap_or_else(T::zero);
        self.terms.one_norm() + dense
    }

    /// `ψ ← exp(−i H dt) ψ` by a Taylor series summed to machine precision,
    /// split into substeps with `‖H‖ dt ≤ 1`.
    fn exp_step(&self, dt: T, psi: &mut [Complex<T>], term: &mut Vec<Complex<T>>, next: &mut [Complex<T>]) {
        let bound = self.norm_bound() * dt;
        let substeps = bound.ceil().to_f64_lossy().max(1.0) as usize;
        let h = dt / T::from_usize(substeps).expect("substep count");
        let eps = T::default_epsilon();
        for _ in 0..substeps {
            term.clear();
            term.extend_from_slice(psi);
            for k in 1..=64usize {
                self.apply(term, next);
                let f = c(T::zero(), -h / T::from_usize(k).expect("term index"));
                let mut size = T::zero();
                for (p, (t, n)) in psi.iter_mut().zip(term.iter_mut().zip(next.iter())) {
                    *t = *n * f;
                    *p += *t;
                    size += t.norm_sqr();
                }
                if size.sqrt() <= eps {
                    break;
                }
            }
        }
    }
}

struct GridPoint<T: Real> {
    time: T,
    field: T,
    adiabatic: StateVector<T>,
    residual: T,
    aux_norm_sq: T,
    amplitudes: Option<DVector<T>>,
}

struct Run<T: Real> {
    fidelity: Vec<T>,
    max_residual: T,
    max_relative: T,
    norm_drift: T,
}

struct Propagator<'a, T: Real> {
    model: &'a IsingModel<T>,
    protocol: &'a QuenchProtocol<T>,
    driving: &'a Driving,
    basis: Option<OperatorBasis>,
    config: &'a PropagationConfig<T>,
    d_hamiltonian: CMatrix<T>,
}

struct Solved<T: Real> {
    amplitudes: Option<DVector<T>>,
    residual: T,
    aux_norm_sq: T,
}

impl<'a, T: Real> Propagator<'a, T> {
    fn gap_tol(&self, snap: &SpectralSnapshot<T>) -> T {
        self.config.gap_tol.unwrap_or_else(|| snap.default_gap_tol())
    }

    /// Fit (or exact cost) at one instant from a precomputed snapshot.
    fn solve_at(&self, snap: &SpectralSnapshot<T>, t: T) -> Result<Solved<T>> {
        let rate = self.protocol.field_rate_unchecked(t);
        let level = self.config.level;
        let image = aux_image(snap, &self.d_hamiltonian, rate, level, Some(self.gap_tol(snap)))?;
        let aux_norm_sq = norm_sqr(image.as_slice());
        match (&self.basis, self.driving) {
            (Some(basis), _) => {
                let v = snap.eigenvector(level);
                let f = fit(basis, v.as_slice(), &image, self.config.cutoff)?;
                Ok(Solved {
                    amplitudes: Some(f.amplitudes),
                    residual: f.residual,
                    aux_norm_sq,
                })
            }
            (None, Driving::Exact) => Ok(Solved {
                amplitudes: None,
                residual: T::zero(),
                aux_norm_sq,
            }),
            (None, _) => Ok(Solved {
                amplitudes: None,
                residual: aux_norm_sq,
                aux_norm_sq,
            }),
        }
    }

    fn grid(&self, times: &[T]) -> Result<Vec<GridPoint<T>>> {
        let mut out: Vec<GridPoint<T>> = Vec::with_capacity(times.len());
        for &t in times {
            let field = self.protocol.field(t)?;
            let snap = snapshot(self.model, field)?;
            let prev = out.last().map(|g| &g.adiabatic);
            let adiabatic = snap.gauge_fixed_state(self.config.level, prev, self.gap_tol(&snap))?;
            let solved = self.solve_at(&snap, t)?;
            out.push(GridPoint {
                time: t,
                field,
                adiabatic,
                residual: solved.residual,
                aux_norm_sq: solved.aux_norm_sq,
                amplitudes: solved.amplitudes,
            });
        }
        Ok(out)
    }

    fn ansatz_terms(&self, basis: &OperatorBasis, h: &DVector<T>) -> impl Iterator<Item = (T, crate::pauli::PauliString)> + '_ {
        let h = h.clone();
        basis
            .strings()
            .to_vec()
            .into_iter()
            .enumerate()
            .map(move |(k, p)| (h[k], p))
    }

    fn run(&self, psi0: &StateVector<T>, grid: &[GridPoint<T>], dt: T) -> Result<Run<T>> {
        let dim = psi0.dim();
        let mut psi: Vec<Complex<T>> = psi0.as_slice().to_vec();
        let mut term = Vec::with_capacity(dim);
        let mut next = vec![czero(); dim];
        let mut fidelity = Vec::with_capacity(grid.len());
        let overlap = |a: &StateVector<T>, psi: &[Complex<T>]| inner(a.as_slice(), psi).norm_sqr();
        fidelity.push(overlap(&grid[0].adiabatic, &psi));
        let mut max_residual = T::zero();
        let mut max_relative = T::zero();
        let mut norm_drift = T::zero();
        let mut note = |res: T, aux: T| {
            if res > max_residual {
                max_residual = res;
            }
            if aux > T::zero() && res / aux > max_relative {
                max_relative = res / aux;
            }
        };
        for g in grid {
            if self.basis.is_some() {
                note(g.residual, g.aux_norm_sq);
            }
        }
        for w in grid.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let span = b.time - a.time;
            let n = (span / dt - T::lit(1e-9)).ceil().to_f64_lossy().max(1.0) as usize;
            let h = span / T::from_usize(n).expect("step count");
            for s in 0..n {
                let tm = a.time + (T::from_usize(s).expect("step") + T::lit(0.5)) * h;
                let field = self.protocol.field_unchecked(tm);
                let mut gen = Generator {
                    terms: self.model.hamiltonian_terms(field),
                    dense: None,
                };
                match self.driving {
                    Driving::Bare => {}
                    Driving::Exact => {
                        let snap = snapshot(self.model, field)?;
                        let rate = self.protocol.field_rate_unchecked(tm);
                        let aux = exact_aux(&snap, &self.d_hamiltonian, rate, Some(self.gap_tol(&snap)))?;
                        gen.dense = Some(aux.matrix);
                    }
                    Driving::Ansatz(_) => {
                        let basis = self.basis.as_ref().expect("ansatz basis");
                        let h_amp = if self.config.resolve_aux_every_step {
                            let snap = snapshot(self.model, field)?;
                            let solved = self.solve_at(&snap, tm)?;
                            note(solved.residual, solved.aux_norm_sq);
                            solved.amplitudes.expect("ansatz amplitudes")
                        } else {
                            a.amplitudes.clone().expect("ansatz amplitudes")
                        };
                        gen.terms.extend(self.ansatz_terms(basis, &h_amp));
                    }
                }
                gen.exp_step(h, &mut psi, &mut term, &mut next);
            }
            let norm = norm_sqr(&psi).sqrt();
            norm_drift = norm_drift.max((norm - T::one()).abs());
            fidelity.push(overlap(&b.adiabatic, &psi));
        }
        if norm_drift > self.config.norm_tol {
            return Err(Error::Contract(format!(
                "norm drift {norm_drift:e} exceeds {:e}",
                self.config.norm_tol
            )));
        }
        Ok(Run {
            fidelity,
            max_residual,
            max_relative,
            norm_drift,
        })
    }
}

/// Propagates `psi0` (given at `times[0]`) under `H0(t)` plus the chosen
/// driving with the exponential midpoint rule, recording fidelity against the
/// gauge-tracked adiabatic state at every grid time.
///
/// The base step is halved until the final fidelity changes by at most
/// `convergence_tol`; the finest run is returned.
pub fn propagate<T: Real>(
    model: &IsingModel<T>,
    protocol: &QuenchProtocol<T>,
    driving: &Driving,
    psi0: &StateVector<T>,
    config: &PropagationConfig<T>,
    times: &[T],
) -> Result<TrajectoryRecord<T>> {
    config.validate()?;
    if psi0.n_sites() != model.n_sites() {
        return Err(Error::Config(format!(
            "initial state on {} sites, model on {}",
            psi0.n_sites(),
            model.n_sites()
        )));
    }
    if (psi0.norm() - T::one()).abs() > config.norm_tol.max(T::norm_tolerance()) {
        return Err(Error::Contract("initial state is not normalized".into()));
    }
    if times.len() < 2 {
        return Err(Error::Config("the time grid needs at least two points".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("grid times must be strictly increasing".into()));
    }
    let basis = match driving {
        Driving::Ansatz(spec) => Some(enumerate_basis(spec, model.n_sites())?),
        _ => None,
    };
    let prop = Propagator {
        model,
        protocol,
        driving,
        basis,
        config,
        d_hamiltonian: model.field_derivative()?,
    };
    let grid = prop.grid(times)?;

    let mut dt = config.dt;
    let mut run = prop.run(psi0, &grid, dt)?;
    let mut refinements = 0;
    let mut halving_delta = None;
    if config.check_convergence {
        loop {
            if refinements == config.max_refinements {
                return Err(Error::Convergence {
                    delta: halving_delta.map(|d: T| d.to_f64_lossy()).unwrap_or(f64::NAN),
                    refinements,
                    tolerance: config.convergence_tol.to_f64_lossy(),
                });
            }
            dt *= T::lit(0.5);
            refinements += 1;
            let finer = prop.run(psi0, &grid, dt)?;
            let delta = (*finer.fidelity.last().unwrap() - *run.fidelity.last().unwrap()).abs();
            halving_delta = Some(delta);
            run = finer;
            if delta <= config.convergence_tol {
                break;
            }
        }
    }

    let defect_density = run.fidelity.iter().map(|f| T::one() - *f).collect();
    let has_amps = grid.iter().all(|g| g.amplitudes.is_some());
    Ok(TrajectoryRecord {
        times: grid.iter().map(|g| g.time).collect(),
        fields: grid.iter().map(|g| g.field).collect(),
        fidelity: run.fidelity,
        defect_density,
        residual: grid.iter().map(|g| g.residual).collect(),
        aux_norm_sq: grid.iter().map(|g| g.aux_norm_sq).collect(),
        amplitudes: has_amps.then(|| grid.iter().map(|g| g.amplitudes.clone().unwrap()).collect()),
        basis: prop.basis,
        max_residual: run.max_residual,
        max_relative_residual: run.max_relative,
        dt,
        refinements,
        halving_delta,
        norm_drift: run.norm_drift,
    })
}

/// Evenly spaced grid of `points` times on `[t0, t1]` (endpoints exact).
pub fn uniform_grid<T: Real>(t0: T, t1: T, points: usize) -> Vec<T> {
    let n = points.max(2) - 1;
    (0..=n)
        .map(|k| {
            if k == n {
                t1
            } else {
                t0 + (t1 - t0) * T::from_usize(k).unwrap() / T::from_usize(n).unwrap()
            }
        })
        .collect()
}

/// Ground state of `H0(B0)` with the default gauge, the usual initial state.
pub fn initial_ground_state<T: Real>(model: &IsingModel<T>, protocol: &QuenchProtocol<T>) -> Result<StateVector<T>> {
    let snap = snapshot(model, protocol.initial_field())?;
    let tol = snap.default_gap_tol();
    snap.gauge_fixed_state(0, None, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_and_rate() {
        let p = QuenchProtocol::linear(2.0, 1.0).unwrap();
        assert_eq!(p.field(0.5).unwrap(), 1.5);
        assert_eq!(p.field_rate(0.5).unwrap(), -1.0);
        assert!(matches!(p.field(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn cubic_midpoint_and_silent_endpoints() {
        let p = QuenchProtocol::cubic(2.0, 0.0, 4.0).unwrap();
        assert_eq!(p.field(2.0).unwrap(), 1.0);
        for (b0, bf, tau) in [(2.0f64, 0.0, 4.0), (-1.3, 5.0, 0.7), (3.0, 3.5, 10.0)] {
            let q = QuenchProtocol::cubic(b0, bf, tau).unwrap();
            assert_eq!(q.field_rate(0.0).unwrap(), 0.0);
            assert_eq!(q.field_rate(tau).unwrap(), 0.0);
            assert_eq!(q.field(0.0).unwrap(), b0);
            assert!((q.field(tau).unwrap() - bf).abs() < 1e-15);
        }
        assert!(matches!(p.field(4.1), Err(Error::Domain(_))));
    }

    #[test]
    fn critical_times() {
        let p = QuenchProtocol::linear(2.0, 1.0).unwrap();
        let tc = critical_time(&p, 1.0).unwrap();
        assert_eq!(tc, 1.0);
        assert_eq!(p.field(tc).unwrap(), 1.0);
        let p = QuenchProtocol::linear(2.0, 0.5).unwrap();
        assert_eq!(critical_time(&p, 1.0).unwrap(), 2.0);
        let c = QuenchProtocol::cubic(2.0f64, 0.0, 1.0).unwrap();
        assert!((critical_time(&c, 1.0).unwrap() - 0.5).abs() < 1e-12);
        let never = QuenchProtocol::cubic(3.0, 2.0, 1.0).unwrap();
        assert!(matches!(critical_time(&never, 1.0), Err(Error::NoCrossing { .. })));
        let up = QuenchProtocol::linear(0.5, 1.0).unwrap();
        assert!(matches!(critical_time(&up, 1.0), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn bad_configs() {
        assert!(QuenchProtocol::linear(2.0, 0.0).is_err());
        assert!(QuenchProtocol::cubic(2.0, 0.0, 0.0).is_err());
        let m = IsingModel::<f64>::unit(2).unwrap();
        let p = QuenchProtocol::linear(2.0, 1.0).unwrap();
        let psi = initial_ground_state(&m, &p).unwrap();
        let mut cfg = PropagationConfig::for_duration(1.0);
        assert!(propagate(&m, &p, &Driving::Bare, &psi, &cfg, &[0.0]).is_err());
        assert!(propagate(&m, &p, &Driving::Bare, &psi, &cfg, &[0.0, 0.5, 0.5]).is_err());
        cfg.dt = 0.0;
        assert!(propagate(&m, &p, &Driving::Bare, &psi, &cfg, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let a = StateVector::<f64>::basis(2, 1).unwrap();
        let b = StateVector::<f64>::basis(2, 2).unwrap();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        let ph = a.with_phase(Complex::from_polar(1.0, 0.7));
        assert!((fidelity(&a, &ph).unwrap() - 1.0).abs() < 1e-12);
        let c3 = StateVector::<f64>::basis(3, 1).unwrap();
        assert!(fidelity(&a, &c3).is_err());
    }

    #[test]
    fn uniform_grid_hits_endpoints() {
        let g = uniform_grid(0.0, 0.3, 4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[3], 0.3);
    }
}
