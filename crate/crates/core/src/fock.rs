//! Independent truncated-Fock-space oracle.
//!
//! Everything in this module is built from ladder-operator matrix elements
//! on a photon-number grid and never touches the covariance-matrix engine,
//! so the two can cross-validate each other. The two-mode squeezed vacuum is
//! constructed directly from its number-state expansion
//! `(1/cosh s) Σ (−e^{iθ} tanh s)^n |n,n⟩` and loss is applied with the exact
//! Kraus decomposition `K_k = ((1−η)^k/k!)^{1/2} η^{n̂/2} â^k`, which keeps a
//! lossy state as a mixture of at most `cutoff+1` pure branches instead of a
//! `(N+1)²`-squared dense matrix.
//!
//! Only undisplaced states are supported here: displacements drop out of
//! every variance downstream, and the Gaussian engine owns the means.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::SqueezeParams;

/// Default photon-number cutoff per mode.
pub const DEFAULT_CUTOFF: usize = 60;

/// Pure two-mode state on a truncated photon-number grid.
///
/// Amplitudes are indexed by `(n1, n2)` with `n1*(cutoff+1) + n2`.
#[derive(Debug, Clone)]
pub struct FockVector {
    cutoff: usize,
    amps: Vec<Complex64>,
}

/// Single-mode density matrix in the number basis.
#[derive(Debug, Clone)]
pub struct FockDensity {
    cutoff: usize,
    rho: DMatrix<Complex64>,
}

/// Two-mode mixed state stored as its exact Kraus-branch ensemble
/// `ρ = Σ_k |φ_k⟩⟨φ_k|` (branch vectors carry their weights).
#[derive(Debug, Clone)]
pub struct TwoModeFockDensity {
    cutoff: usize,
    branches: Vec<Vec<Complex64>>,
}

/// First and second moments of the pair of rotated quadratures
/// `(x_{χ1} of mode 1, x_{χ2} of mode 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov: f64,
}

impl QuadratureMoments {
    /// Variance of the summed photocurrent `i1 + i2`.
    pub fn sum_variance(&self) -> f64 {
        self.var1 + self.var2 + 2.0 * self.cov
    }
}

/// Number-state expansion of the two-mode squeezed vacuum.
///
/// `amps(n,n) = (−e^{iθ} tanh s)^n / cosh s`; everything off the diagonal is
/// zero. The discarded tail is `tanh^{2(N+1)} s`.
pub fn tmss_fock(params: SqueezeParams, cutoff: usize) -> Result<FockVector> {
    if cutoff < 1 {
        return Err(Error::invalid("fock cutoff must be at least 1"));
    }
    let dim = cutoff + 1;
    let mut amps = vec![Complex64::ZERO; dim * dim];
    let ratio = -Complex64::from_polar(params.s().tanh(), params.theta());
    let mut amp = Complex64::new(1.0 / params.s().cosh(), 0.0);
    for n in 0..dim {
        amps[n * dim + n] = amp;
        amp *= ratio;
    }
    Ok(FockVector { cutoff, amps })
}

/// Analytic truncation tail of the two-mode squeezed vacuum at this cutoff.
pub fn tmss_tail(params: SqueezeParams, cutoff: usize) -> f64 {
    params.s().tanh().powi(2 * (cutoff as i32 + 1))
}

impl FockVector {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amp(&self, n1: usize, n2: usize) -> Complex64 {
        self.amps[n1 * (self.cutoff + 1) + n2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Truncation tail `1 − ‖ψ‖²` (clamped at zero).
    pub fn tail(&self) -> f64 {
        (1.0 - self.norm_sq()).max(0.0)
    }

    /// Fail with a truncation error unless the tail is below `tol`.
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let tail = self.tail();
        if tail > tol {
            return Err(Error::Truncation { tail, tol });
        }
        Ok(())
    }

    /// View as a single-branch mixture.
    fn as_density(&self) -> TwoModeFockDensity {
        TwoModeFockDensity {
            cutoff: self.cutoff,
            branches: vec![self.amps.clone()],
        }
    }
}

/// Partial trace of a pure two-mode state onto one mode.
pub fn reduced_density(state: &FockVector, keep_mode: usize) -> FockDensity {
    let dim = state.cutoff + 1;
    let mut rho = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for m in 0..dim {
        for n in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..dim {
                let (am, an) = if keep_mode == 0 {
                    (state.amps[m * dim + k], state.amps[n * dim + k])
                } else {
                    (state.amps[k * dim + m], state.amps[k * dim + n])
                };
                acc += am * an.conj();
            }
            rho[(m, n)] = acc;
        }
    }
    FockDensity {
        cutoff: state.cutoff,
        rho,
    }
}

impl FockDensity {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        (0..=self.cutoff).map(|n| self.rho[(n, n)].re).sum()
    }

    /// Photon-number distribution (diagonal of ρ).
    pub fn number_distribution(&self) -> Vec<f64> {
        (0..=self.cutoff).map(|n| self.rho[(n, n)].re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..=self.cutoff)
            .map(|n| n as f64 * self.rho[(n, n)].re)
            .sum()
    }

    /// Largest off-diagonal magnitude; zero for a number-diagonal state.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..=self.cutoff {
            for n in 0..=self.cutoff {
                if m != n {
                    worst = worst.max(self.rho[(m, n)].norm());
                }
            }
        }
        worst
    }

    /// Max elementwise difference to another density matrix.
    pub fn max_difference(&self, other: &FockDensity) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..=self.cutoff.min(other.cutoff) {
            for n in 0..=self.cutoff.min(other.cutoff) {
                worst = worst.max((self.rho[(m, n)] - other.rho[(m, n)]).norm());
            }
        }
        worst
    }

    /// Hermiticity, trace and positivity checks.
    pub fn validate(&self, tail_tol: f64) -> Result<()> {
        for m in 0..=self.cutoff {
            for n in 0..m {
                if (self.rho[(m, n)] - self.rho[(n, m)].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidState("density matrix not Hermitian".into()));
                }
            }
        }
        let tr = self.trace();
        if !(tr <= 1.0 + 1e-12 && tr >= 1.0 - tail_tol - 1e-12) {
            return Err(Error::InvalidState(format!(
                "trace {tr} outside [1 − tail, 1]"
            )));
        }
        let eig = self.rho.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|ev| *ev < -1e-9) {
            return Err(Error::InvalidState(
                "density matrix has a negative eigenvalue".into(),
            ));
        }
        Ok(())
    }
}

/// Exact loss channel on one mode of a pure state, as a Kraus-branch mixture.
///
/// Loss never raises the photon number, so the input cutoff stays exact; the
/// branch count is at most `cutoff + 1`.
pub fn apply_loss_fock(state: &FockVector, mode: usize, eta: f64) -> Result<TwoModeFockDensity> {
    if mode > 1 {
        return Err(Error::invalid("fock states here have modes 0 and 1"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!(
            "transmissivity must lie in [0, 1], got {eta}"
        )));
    }
    if eta == 1.0 {
        return Ok(state.as_density());
    }
    let dim = state.cutoff + 1;
    let mut branches = Vec::new();
    // running a^k on a scratch copy; weights added afterwards
    let mut lowered = state.amps.clone();
    let mut log_coef = 0.0f64; // ln[(1-eta)^k / k!]
    for k in 0..dim {
        if k > 0 {
            lowered = lower(&lowered, dim, mode);
            log_coef += (1.0 - eta).ln() - (k as f64).ln();
        }
        let coef = (log_coef / 2.0).exp();
        let mut phi = lowered.clone();
        let mut nonzero = false;
        for n1 in 0..dim {
            for n2 in 0..dim {
                let n = if mode == 0 { n1 } else { n2 };
                let w = if eta == 0.0 {
                    if n == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    eta.powf(n as f64 / 2.0)
                };
                let v = phi[n1 * dim + n2] * (coef * w);
                phi[n1 * dim + n2] = v;
                nonzero |= v != Complex64::ZERO;
            }
        }
        if nonzero {
            branches.push(phi);
        }
    }
    Ok(TwoModeFockDensity {
        cutoff: state.cutoff,
        branches,
    })
}

impl TwoModeFockDensity {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn trace(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn tail(&self) -> f64 {
        (1.0 - self.trace()).max(0.0)
    }

    /// Moments of `(x_{χ1}, x_{χ2})`; errors if the truncation tail is above
    /// `tail_tol`.
    pub fn quadrature_moments(
        &self,
        chi1: f64,
        chi2: f64,
        tail_tol: f64,
    ) -> Result<QuadratureMoments> {
        let tail = self.tail();
        if tail > tail_tol {
            return Err(Error::Truncation {
                tail,
                tol: tail_tol,
            });
        }
        Ok(moments_over_branches(
            &self.branches,
            self.cutoff,
            chi1,
            chi2,
        ))
    }
}

/// Moments of `(x_{χ1}, x_{χ2})` for a pure two-mode state.
pub fn quadrature_moments(
    state: &FockVector,
    chi1: f64,
    chi2: f64,
    tail_tol: f64,
) -> Result<QuadratureMoments> {
    state.check_tail(tail_tol)?;
    Ok(moments_over_branches(
        std::slice::from_ref(&state.amps),
        state.cutoff,
        chi1,
        chi2,
    ))
}

/// Apply the annihilation operator to one mode: `a|n⟩ = √n |n−1⟩`.
fn lower(amps: &[Complex64], dim: usize, mode: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    for n1 in 0..dim {
        for n2 in 0..dim {
            let a = amps[n1 * dim + n2];
            if a == Complex64::ZERO {
                continue;
            }
            if mode == 0 {
                if n1 > 0 {
                    out[(n1 - 1) * dim + n2] += (n1 as f64).sqrt() * a;
                }
            } else if n2 > 0 {
                out[n1 * dim + (n2 - 1)] += (n2 as f64).sqrt() * a;
            }
        }
    }
    out
}

/// `a†|n⟩ = √(n+1) |n+1⟩` (amplitudes beyond the cutoff are dropped; callers
/// guard truncation via the tail checks).
fn raise(amps: &[Complex64], dim: usize, mode: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    for n1 in 0..dim {
        for n2 in 0..dim {
            let a = amps[n1 * dim + n2];
            if a == Complex64::ZERO {
                continue;
            }
            if mode == 0 {
                if n1 + 1 < dim {
                    out[(n1 + 1) * dim + n2] += ((n1 + 1) as f64).sqrt() * a;
                }
            } else if n2 + 1 < dim {
                out[n1 * dim + (n2 + 1)] += ((n2 + 1) as f64).sqrt() * a;
            }
        }
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn moments_over_branches(
    branches: &[Vec<Complex64>],
    cutoff: usize,
    chi1: f64,
    chi2: f64,
) -> QuadratureMoments {
    let dim = cutoff + 1;
    let mut e_a1 = Complex64::ZERO;
    let mut e_a2 = Complex64::ZERO;
    let mut e_a1a1 = Complex64::ZERO;
    let mut e_a2a2 = Complex64::ZERO;
    let mut e_n1 = 0.0f64;
    let mut e_n2 = 0.0f64;
    let mut e_a1a2 = Complex64::ZERO;
    let mut e_a1a2dag = Complex64::ZERO;
    for phi in branches {
        let a1 = lower(phi, dim, 0);
        let a2 = lower(phi, dim, 1);
        e_a1 += inner(phi, &a1);
        e_a2 += inner(phi, &a2);
        e_a1a1 += inner(phi, &lower(&a1, dim, 0));
        e_a2a2 += inner(phi, &lower(&a2, dim, 1));
        e_n1 += a1.iter().map(|v| v.norm_sqr()).sum::<f64>();
        e_n2 += a2.iter().map(|v| v.norm_sqr()).sum::<f64>();
        e_a1a2 += inner(phi, &lower(&a2, dim, 0));
        // ⟨a1 a2†⟩ = ⟨a1† φ | a2† φ⟩
        e_a1a2dag += inner(&raise(phi, dim, 0), &raise(phi, dim, 1));
    }
    let ph = |chi: f64| Complex64::from_polar(1.0, chi);
    let m1 = (e_a1 * ph(-chi1) + e_a1.conj() * ph(chi1)).re;
    let m2 = (e_a2 * ph(-chi2) + e_a2.conj() * ph(chi2)).re;
    let var1 =
        (e_a1a1 * ph(-2.0 * chi1) + e_a1a1.conj() * ph(2.0 * chi1)).re + 2.0 * e_n1 + 1.0
            - m1 * m1;
    let var2 =
        (e_a2a2 * ph(-2.0 * chi2) + e_a2a2.conj() * ph(2.0 * chi2)).re + 2.0 * e_n2 + 1.0
            - m2 * m2;
    let cross = (e_a1a2 * ph(-(chi1 + chi2))
        + e_a1a2dag * ph(-(chi1 - chi2))
        + e_a1a2dag.conj() * ph(chi1 - chi2)
        + e_a1a2.conj() * ph(chi1 + chi2))
    .re;
    QuadratureMoments {
        mean1: m1,
        mean2: m2,
        var1,
        var2,
        cov: cross - m1 * m2,
    }
}
