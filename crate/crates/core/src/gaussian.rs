//! Exact Gaussian-state engine.
//!
//! States are represented by their first and second moments in the quadrature
//! convention `x = a + a†`, `p = -i(a - a†)`, so the vacuum has unit variance
//! in both quadratures and a coherent state reaches the combined level of 2
//! when both local oscillators have unit amplitude. In this convention a
//! displacement by `α` shifts the mean by `(2·Re α, 2·Im α)`.
//!
//! Quadratures are ordered `x1, p1, x2, p2, …`. All operations return new
//! states; a [`GaussianState`] is an immutable value and freely shareable
//! across threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the covariance-symmetry invariant.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Floor for symplectic eigenvalues of a bona fide state (vacuum = 1).
pub const BONA_FIDE_FLOOR: f64 = 1.0 - 1e-9;

/// Squeezing magnitude and phase of the two-mode squeezer.
///
/// The phase is reduced to `[0, 2π)` on construction; `s` must be finite and
/// non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    s: f64,
    theta: f64,
}

impl SqueezeParams {
    pub fn new(s: f64, theta: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!(
                "squeezing magnitude must be finite and >= 0, got {s}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::invalid(format!(
                "squeezing phase must be finite, got {theta}"
            )));
        }
        Ok(Self {
            s,
            theta: reduce_phase(theta),
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn reduce_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = phi.rem_euclid(tau);
    // rem_euclid can return tau itself for tiny negative inputs
    if r >= tau {
        r - tau
    } else {
        r
    }
}

/// An n-mode bosonic state given by its mean vector and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// The n-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("a state needs at least one mode"));
        }
        let d = 2 * n_modes;
        Ok(Self {
            n_modes,
            mean: DVector::zeros(d),
            cov: DMatrix::identity(d, d),
        })
    }

    /// Two-mode squeezed vacuum on modes 0 and 1.
    pub fn tmss(params: SqueezeParams) -> Self {
        Self::vacuum(2)
            .and_then(|v| v.two_mode_squeeze(0, 1, params))
            .expect("vacuum(2) and in-range squeeze cannot fail")
    }

    /// Crate-internal raw constructor (validation fixtures build tampered
    /// covariances through this).
    pub(crate) fn from_parts(n_modes: usize, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self {
            n_modes,
            mean,
            cov,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::invalid(format!(
                "mode index {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// Apply a symplectic matrix to the moments: `mean -> S mean`,
    /// `cov -> S cov Sᵀ`.
    fn apply_symplectic(&self, sm: &DMatrix<f64>) -> Self {
        Self {
            n_modes: self.n_modes,
            mean: sm * &self.mean,
            cov: sm * &self.cov * sm.transpose(),
        }
    }

    /// Two-mode squeezer `exp(ζ* a₁a₂ − ζ a₁†a₂†)` with `ζ = s e^{iθ}`
    /// acting on modes `mode_a`, `mode_b`.
    ///
    /// On vacuum with θ=0 this produces diagonal blocks `cosh(2s)·I` and
    /// off-diagonal blocks `sinh(2s)·diag(−1, +1)`, which puts the combined
    /// remote-homodyne variance minimum at `χ₁+χ₂ = θ`.
    pub fn two_mode_squeeze(
        &self,
        mode_a: usize,
        mode_b: usize,
        params: SqueezeParams,
    ) -> Result<Self> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(Error::invalid(
                "two-mode squeezing needs two distinct modes",
            ));
        }
        let sm = two_mode_squeeze_symplectic(self.n_modes, mode_a, mode_b, params);
        Ok(self.apply_symplectic(&sm))
    }

    /// Rotate one mode by `phi` in phase space (`a -> a e^{-iφ}`).
    ///
    /// Homodyning the rotated mode at LO phase χ is identical to homodyning
    /// the original at χ+φ, so a mode rotation and an LO phase shift are
    /// interchangeable.
    pub fn phase_rotate(&self, mode: usize, phi: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let sm = phase_rotation_symplectic(self.n_modes, mode, phi);
        Ok(self.apply_symplectic(&sm))
    }

    /// Displace one mode by `α = re + i·im`: mean shifts by `(2·re, 2·im)`,
    /// covariance untouched.
    pub fn displace(&self, mode: usize, re: f64, im: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut mean = self.mean.clone();
        mean[2 * mode] += 2.0 * re;
        mean[2 * mode + 1] += 2.0 * im;
        Ok(Self {
            n_modes: self.n_modes,
            mean,
            cov: self.cov.clone(),
        })
    }

    /// Pure loss on one mode: beamsplitter of transmissivity `eta` against a
    /// vacuum ancilla that is traced out.
    pub fn loss_channel(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!(
                "transmissivity must lie in [0, 1], got {eta}"
            )));
        }
        let rt = eta.sqrt();
        let d = 2 * self.n_modes;
        let mut mean = self.mean.clone();
        let mut cov = self.cov.clone();
        for k in [2 * mode, 2 * mode + 1] {
            mean[k] *= rt;
            for j in 0..d {
                cov[(k, j)] *= rt;
                cov[(j, k)] *= rt;
            }
        }
        // the mode block picked up eta^(1/2) twice; finish V -> ηV + (1-η)I
        cov[(2 * mode, 2 * mode)] += 1.0 - eta;
        cov[(2 * mode + 1, 2 * mode + 1)] += 1.0 - eta;
        Ok(Self {
            n_modes: self.n_modes,
            mean,
            cov,
        })
    }

    /// Beamsplitter tap on one mode: like [`Self::loss_channel`] but the
    /// ancilla output (the tapped beam) is kept as a new mode so it can be
    /// measured. Returns the enlarged state and the index of the tapped mode.
    ///
    /// Tracing the tapped mode back out reproduces `loss_channel(eta)`
    /// exactly. Sign convention: tapped mode = `−√(1−η)·signal + √η·vacuum`.
    pub fn tap_channel(&self, mode: usize, eta: f64) -> Result<(Self, usize)> {
        self.check_mode(mode)?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid(format!(
                "tap transmissivity must lie strictly inside (0, 1), got {eta}"
            )));
        }
        let grown = self.append_vacuum_mode();
        let anc = self.n_modes;
        let sm = beamsplitter_symplectic(grown.n_modes, mode, anc, eta);
        Ok((grown.apply_symplectic(&sm), anc))
    }

    /// Append one vacuum mode at the end of the mode list.
    pub fn append_vacuum_mode(&self) -> Self {
        let n = self.n_modes + 1;
        let d = 2 * n;
        let mut mean = DVector::zeros(d);
        let mut cov = DMatrix::identity(d, d);
        mean.rows_mut(0, 2 * self.n_modes).copy_from(&self.mean);
        cov.view_mut((0, 0), (2 * self.n_modes, 2 * self.n_modes))
            .copy_from(&self.cov);
        Self {
            n_modes: n,
            mean,
            cov,
        }
    }

    /// Discard all modes except `keep` (partial trace), preserving order.
    pub fn keep_modes(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::invalid("must keep at least one mode"));
        }
        for &m in keep {
            self.check_mode(m)?;
        }
        let n = keep.len();
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for (i, &mi) in keep.iter().enumerate() {
            mean[2 * i] = self.mean[2 * mi];
            mean[2 * i + 1] = self.mean[2 * mi + 1];
            for (j, &mj) in keep.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        cov[(2 * i + a, 2 * j + b)] = self.cov[(2 * mi + a, 2 * mj + b)];
                    }
                }
            }
        }
        Ok(Self {
            n_modes: n,
            mean,
            cov,
        })
    }

    /// Add `epsilon` of classical noise to the quadrature `x_φ` of one mode.
    pub fn add_quadrature_noise(&self, mode: usize, epsilon: f64, phi: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(epsilon >= 0.0) {
            return Err(Error::invalid(format!(
                "excess noise must be >= 0, got {epsilon}"
            )));
        }
        let (c, s) = (phi.cos(), phi.sin());
        let mut cov = self.cov.clone();
        let i = 2 * mode;
        cov[(i, i)] += epsilon * c * c;
        cov[(i, i + 1)] += epsilon * c * s;
        cov[(i + 1, i)] += epsilon * c * s;
        cov[(i + 1, i + 1)] += epsilon * s * s;
        Ok(Self {
            n_modes: self.n_modes,
            mean: self.mean.clone(),
            cov,
        })
    }

    /// Symplectic eigenvalues of the covariance matrix (moduli of the
    /// eigenvalues of `Ω·V`; each appears once).
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let om = omega(self.n_modes);
        let m = &om * &self.cov;
        let eig = m.complex_eigenvalues();
        // eigenvalues come in ±iν pairs; keep the non-negative imaginary parts
        let mut nus: Vec<f64> = eig.iter().map(|z| z.im).filter(|v| *v >= 0.0).collect();
        nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nus
    }

    /// Check the symmetry and bona-fide-state invariants.
    pub fn validate(&self) -> Result<()> {
        let scale = self.cov.amax().max(1.0);
        for i in 0..self.cov.nrows() {
            for j in 0..i {
                if (self.cov[(i, j)] - self.cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidState(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let nus = self.symplectic_eigenvalues();
        if nus.len() != self.n_modes {
            return Err(Error::InvalidState(
                "symplectic spectrum has wrong multiplicity".into(),
            ));
        }
        if let Some(&nu) = nus.first() {
            if nu < BONA_FIDE_FLOOR {
                return Err(Error::InvalidState(format!(
                    "symplectic eigenvalue {nu} below the vacuum floor"
                )));
            }
        }
        Ok(())
    }

    /// Determinant of the covariance matrix (1 for pure states).
    pub fn cov_determinant(&self) -> f64 {
        self.cov.clone().lu().determinant()
    }
}

/// The symplectic form Ω for n modes in xpxp ordering
/// (blocks `[[0, 1], [-1, 0]]`).
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let d = 2 * n_modes;
    let mut om = DMatrix::zeros(d, d);
    for m in 0..n_modes {
        om[(2 * m, 2 * m + 1)] = 1.0;
        om[(2 * m + 1, 2 * m)] = -1.0;
    }
    om
}

/// Max-norm of `S Ω Sᵀ − Ω`; zero iff `S` is symplectic.
pub fn symplectic_defect(sm: &DMatrix<f64>) -> f64 {
    let n = sm.nrows() / 2;
    let om = omega(n);
    (sm * &om * sm.transpose() - om).amax()
}

/// Symplectic matrix of the two-mode squeezer on the given pair of modes,
/// embedded into an n-mode identity.
pub fn two_mode_squeeze_symplectic(
    n_modes: usize,
    mode_a: usize,
    mode_b: usize,
    params: SqueezeParams,
) -> DMatrix<f64> {
    let (c, d) = (params.s().cosh(), params.s().sinh());
    let (ct, st) = (params.theta().cos(), params.theta().sin());
    let mut sm = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let (a, b) = (2 * mode_a, 2 * mode_b);
    sm[(a, a)] = c;
    sm[(a + 1, a + 1)] = c;
    sm[(b, b)] = c;
    sm[(b + 1, b + 1)] = c;
    // coupling block: -d * [[cosθ, sinθ], [sinθ, -cosθ]] on each side
    for (i, j) in [(a, b), (b, a)] {
        sm[(i, j)] = -d * ct;
        sm[(i, j + 1)] = -d * st;
        sm[(i + 1, j)] = -d * st;
        sm[(i + 1, j + 1)] = d * ct;
    }
    sm
}

/// Symplectic matrix of the mode rotation `a -> a e^{-iφ}`.
pub fn phase_rotation_symplectic(n_modes: usize, mode: usize, phi: f64) -> DMatrix<f64> {
    let (c, s) = (phi.cos(), phi.sin());
    let mut sm = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let i = 2 * mode;
    sm[(i, i)] = c;
    sm[(i, i + 1)] = s;
    sm[(i + 1, i)] = -s;
    sm[(i + 1, i + 1)] = c;
    sm
}

/// Symplectic matrix of a beamsplitter of transmissivity `eta` between two
/// modes: `sig' = √η·sig + √(1−η)·anc`, `anc' = −√(1−η)·sig + √η·anc`.
pub fn beamsplitter_symplectic(
    n_modes: usize,
    sig: usize,
    anc: usize,
    eta: f64,
) -> DMatrix<f64> {
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let mut sm = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let (a, b) = (2 * sig, 2 * anc);
    for k in 0..2 {
        sm[(a + k, a + k)] = t;
        sm[(a + k, b + k)] = r;
        sm[(b + k, a + k)] = -r;
        sm[(b + k, b + k)] = t;
    }
    sm
}
