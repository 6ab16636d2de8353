//! The mixed Gaussian probe.
//!
//! Density-matrix elements rho(p, p'), coupling-window time moments, the
//! accumulated free-evolution phase Phi_a, the weak-limit function G(p), and
//! the derived scales p_H, kappa^2, nu, Q_0, beta. The probe Hamiltonian is
//! fixed to H_p = p^2 / 2 M_p; its general form is represented through the
//! window moments below.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Mixed Gaussian probe state in the momentum representation,
///
///   rho(p,p') = exp{-(p+p')^2/8 dP^2 - (p-p')^2/8 dp^2 + i(p-p')/2 p_phi}
///               / (sqrt(2 pi) dP),
///
/// with `delta_p_spread` = dP the classical spread, `delta_p_coherence` = dp
/// the coherence scale, and `p_phi` the linear-phase scale
/// (`f64::INFINITY` means no phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProbe {
    pub delta_p_spread: f64,
    pub delta_p_coherence: f64,
    pub p_phi: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl GaussianProbe {
    pub fn new(
        delta_p_spread: f64,
        delta_p_coherence: f64,
        p_phi: f64,
        mass: f64,
        hbar: f64,
    ) -> Result<Self> {
        let probe = Self {
            delta_p_spread,
            delta_p_coherence,
            p_phi,
            mass,
            hbar,
        };
        probe.validate()?;
        Ok(probe)
    }

    /// Natural units: hbar = mass = 1, no linear phase.
    pub fn natural(delta_p_spread: f64, delta_p_coherence: f64) -> Result<Self> {
        Self::new(delta_p_spread, delta_p_coherence, f64::INFINITY, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("delta_P", self.delta_p_spread),
            ("delta_p", self.delta_p_coherence),
            ("mass", self.mass),
            ("hbar", self.hbar),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidProbe {
                    reason: format!("{name} must be finite and > 0, got {value}"),
                });
            }
        }
        if self.delta_p_coherence > self.delta_p_spread {
            return Err(Error::InvalidProbe {
                reason: format!(
                    "coherence scale delta_p = {} exceeds spread delta_P = {}; \
                     density matrix would not be positive semidefinite",
                    self.delta_p_coherence, self.delta_p_spread
                ),
            });
        }
        if self.p_phi == 0.0 || self.p_phi.is_nan() {
            return Err(Error::InvalidProbe {
                reason: format!("p_phi must be nonzero (or inf), got {}", self.p_phi),
            });
        }
        Ok(())
    }

    /// 1/p_phi with the infinite sentinel mapped to 0.
    pub fn inv_p_phi(&self) -> f64 {
        if self.p_phi.is_infinite() {
            0.0
        } else {
            1.0 / self.p_phi
        }
    }
}

/// Density-matrix element rho(p, p').
pub fn rho_elem(probe: &GaussianProbe, p: f64, p_prime: f64) -> Complex64 {
    let sum = p + p_prime;
    let diff = p - p_prime;
    let exponent = -sum * sum / (8.0 * probe.delta_p_spread * probe.delta_p_spread)
        - diff * diff / (8.0 * probe.delta_p_coherence * probe.delta_p_coherence);
    let phase = diff * 0.5 * probe.inv_p_phi();
    let norm = (std::f64::consts::TAU).sqrt() * probe.delta_p_spread;
    Complex64::from_polar(exponent.exp() / norm, phase)
}

/// Coupling window g(t): unit-integral weight on [T_i, T_f], with
/// `prep_lead` = T_i - t_p the delay between probe preparation and the start
/// of the interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingWindow {
    /// g(t) = delta(t - T_i).
    Instantaneous { prep_lead: f64 },
    /// g(t) = 1/T on [T_i, T_i + T].
    Rectangular { duration: f64, prep_lead: f64 },
}

impl CouplingWindow {
    pub fn validate(&self) -> Result<()> {
        let (lead, duration) = match *self {
            CouplingWindow::Instantaneous { prep_lead } => (prep_lead, None),
            CouplingWindow::Rectangular {
                duration,
                prep_lead,
            } => (prep_lead, Some(duration)),
        };
        if !(lead >= 0.0) || !lead.is_finite() {
            return Err(Error::InvalidProbe {
                reason: format!("prep_lead must be finite and >= 0, got {lead}"),
            });
        }
        if let Some(t) = duration {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidProbe {
                    reason: format!("window duration must be finite and > 0, got {t}"),
                });
            }
        }
        Ok(())
    }

    pub fn prep_lead(&self) -> f64 {
        match *self {
            CouplingWindow::Instantaneous { prep_lead } => prep_lead,
            CouplingWindow::Rectangular { prep_lead, .. } => prep_lead,
        }
    }
}

/// Time moments of h(s) = \int_s^{T_f} g(s') ds' over [t_p, T_f]:
/// m_k = \int h(s)^k ds. `m1` is the effective interaction time Delta t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMoments {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Analytic moments of the two supported window shapes. h(s) = 1 on the
/// preparation lead, then 1 (instantaneous) collapses or (T_f - s)/T
/// (rectangular) decays, giving T, T/2, T/3 increments for m0, m1, m2.
pub fn coupling_moments(window: &CouplingWindow) -> Result<PhaseMoments> {
    window.validate()?;
    let lead = window.prep_lead();
    let moments = match *window {
        CouplingWindow::Instantaneous { .. } => PhaseMoments {
            m0: lead,
            m1: lead,
            m2: lead,
        },
        CouplingWindow::Rectangular { duration, .. } => PhaseMoments {
            m0: lead + duration,
            m1: lead + duration / 2.0,
            m2: lead + duration / 3.0,
        },
    };
    debug_assert!(moments.m2 <= moments.m1 + 1e-15 && moments.m1 <= moments.m0 + 1e-15);
    Ok(moments)
}

/// Accumulated free-evolution phase for eigenvalue `a`,
/// Phi_a = (1/hbar) \int ds H_p(p - lambda a h(s)), for H_p = p^2/2M:
/// Phi_a = (p^2 m0 - 2 p lambda a m1 + lambda^2 a^2 m2) / (2 hbar M).
/// Only differences Phi_a - Phi_a' are physical; the p^2 m0 term cancels
/// there.
pub fn phase_phi(probe: &GaussianProbe, moments: &PhaseMoments, lambda: f64, a: f64, p: f64) -> f64 {
    (p * p * moments.m0 - 2.0 * p * lambda * a * moments.m1
        + lambda * lambda * a * a * moments.m2)
        / (2.0 * probe.hbar * probe.mass)
}

/// Weak-limit phase-gradient function
/// G(p) = (2 Delta t / hbar) dH_p/dp - 2 d alpha/dp|_{p'=p}
///      = (2 m1 / hbar M) p - 1/p_phi for this probe family.
pub fn g_function(probe: &GaussianProbe, moments: &PhaseMoments, p: f64) -> f64 {
    2.0 * moments.m1 * p / (probe.hbar * probe.mass) - probe.inv_p_phi()
}

/// Scales derived from the probe and the window moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// p_H = sqrt(hbar M / 2 Delta t); infinite when Delta t = 0.
    pub p_h: f64,
    /// kappa^2 = dP^2 / p_H^2 = 2 dP^2 Delta t / (hbar M).
    pub kappa_sq: f64,
    /// nu = [1/dp^2 + kappa^4/dP^2]^{-1/2}.
    pub nu: f64,
    /// Wigner-function center Q_0 = hbar / (2 p_phi).
    pub q0: f64,
}

pub fn derived_scales(probe: &GaussianProbe, moments: &PhaseMoments) -> DerivedScales {
    let kappa_sq =
        2.0 * probe.delta_p_spread * probe.delta_p_spread * moments.m1 / (probe.hbar * probe.mass);
    let p_h = if moments.m1 > 0.0 {
        (probe.hbar * probe.mass / (2.0 * moments.m1)).sqrt()
    } else {
        f64::INFINITY
    };
    let dp = probe.delta_p_coherence;
    let dp_spread = probe.delta_p_spread;
    let nu = 1.0
        / (1.0 / (dp * dp) + kappa_sq * kappa_sq / (dp_spread * dp_spread)).sqrt();
    debug_assert!(nu <= dp_spread / (1.0 + kappa_sq * kappa_sq).sqrt() + 1e-12);
    DerivedScales {
        p_h,
        kappa_sq,
        nu,
        q0: 0.5 * probe.hbar * probe.inv_p_phi(),
    }
}

/// beta = d Var q(t)/dt at t = T_i = hbar * mean(p G(p)) / M = hbar kappa^2 / M.
pub fn beta(probe: &GaussianProbe, moments: &PhaseMoments) -> f64 {
    probe.hbar * derived_scales(probe, moments).kappa_sq / probe.mass
}
