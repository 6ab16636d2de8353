//! Closed-form spin-1/2 results: conditional pointer pdf, normalizer,
//! exact average, spin weak value, extremum positions/values of the average,
//! and spread extrema. These double as the oracle suite for the generic
//! engine.
//!
//! Geometry convention: the preselection axis n_i is Z, the measured axis n
//! lies in the XZ plane at angle `theta` from Z, and the postselection axis
//! n_f = (sin g cos f, sin g sin f, cos g) with azimuthal angle
//! `gamma` in [0, 2pi] and polar angle `phi` in [0, pi]. (The roles of the
//! two angles are swapped relative to the standard spherical convention;
//! gamma = pi is antiparallel postselection for every phi.)

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measurement_engine::MeasurementSetup;
use crate::probe_model::{
    derived_scales, g_function, CouplingWindow, GaussianProbe, PhaseMoments,
};
use crate::quantum_core::{bloch_to_spinor, cross3, dot3, spin_observable, Direction};

const NORMALIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinGeometry {
    pub theta: f64,
    pub gamma: f64,
    pub phi: f64,
}

impl SpinGeometry {
    pub fn new(theta: f64, gamma: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("gamma", gamma), ("phi", phi)] {
            if !v.is_finite() {
                return Err(Error::Config {
                    section: "geometry".into(),
                    key: name.into(),
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(Self { theta, gamma, phi })
    }

    /// Measured axis n = (sin theta, 0, cos theta).
    pub fn n(&self) -> [f64; 3] {
        [self.theta.sin(), 0.0, self.theta.cos()]
    }

    /// Preselection axis n_i = Z.
    pub fn n_i(&self) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }

    /// Postselection axis n_f = (sin g cos f, sin g sin f, cos g).
    pub fn n_f(&self) -> [f64; 3] {
        let (sg, cg) = self.gamma.sin_cos();
        let (sf, cf) = self.phi.sin_cos();
        [sg * cf, sg * sf, cg]
    }

    /// (n x n_i) . (n x n_f)
    pub fn cross_dot(&self) -> f64 {
        dot3(cross3(self.n(), self.n_i()), cross3(self.n(), self.n_f()))
    }

    /// n . (n_i x n_f)
    pub fn triple_product(&self) -> f64 {
        dot3(self.n(), cross3(self.n_i(), self.n_f()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpinScenario {
    pub geometry: SpinGeometry,
    pub probe: GaussianProbe,
    pub moments: PhaseMoments,
    pub lambda: f64,
}

impl SpinScenario {
    pub fn new(
        geometry: SpinGeometry,
        probe: GaussianProbe,
        moments: PhaseMoments,
        lambda: f64,
    ) -> Result<Self> {
        probe.validate()?;
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidCoupling {
                reason: format!("lambda must be finite and nonzero, got {lambda}"),
            });
        }
        Ok(Self {
            geometry,
            probe,
            moments,
            lambda,
        })
    }

    /// sin(lambda/p_phi), cos(lambda/p_phi) with the infinite sentinel.
    fn phase_trig(&self) -> (f64, f64) {
        (self.lambda * self.probe.inv_p_phi()).sin_cos()
    }

    /// e^{-lambda^2 / 2 nu^2}
    fn envelope(&self) -> f64 {
        let nu = derived_scales(&self.probe, &self.moments).nu;
        (-self.lambda * self.lambda / (2.0 * nu * nu)).exp()
    }
}

/// The generic-engine setup equivalent to a spin scenario, for cross-checks.
pub fn engine_setup(
    geometry: &SpinGeometry,
    probe: &GaussianProbe,
    window: &CouplingWindow,
    lambda: f64,
) -> Result<MeasurementSetup> {
    let n_f = geometry.n_f();
    let n = geometry.n();
    let pre = bloch_to_spinor(&Direction::new(0.0, 0.0, 1.0)?);
    let post = bloch_to_spinor(&Direction::new(n_f[0], n_f[1], n_f[2])?);
    let obs = spin_observable(&Direction::new(n[0], n[1], n[2])?);
    MeasurementSetup::new(pre, post, obs, *probe, *window, lambda)
}

/// Spin weak value A_w = cos theta + sin theta e^{-i phi} tan(gamma / 2).
pub fn spin_weak_value(geom: &SpinGeometry) -> Result<Complex64> {
    let half = geom.gamma / 2.0;
    if half.cos().abs() < 1e-12 {
        return Err(Error::OrthogonalPostselection { overlap: 0.0 });
    }
    let tan = half.tan();
    Ok(Complex64::new(geom.theta.cos(), 0.0)
        + Complex64::from_polar(geom.theta.sin() * tan.abs(), -geom.phi) * tan.signum())
}

/// Same weak value through the vector form
/// A_w = n . [n_i + n_f + i n_i x n_f] / (1 + n_i . n_f).
pub fn spin_weak_value_vector(geom: &SpinGeometry) -> Result<Complex64> {
    let (n, n_i, n_f) = (geom.n(), geom.n_i(), geom.n_f());
    let denom = 1.0 + dot3(n_i, n_f);
    if denom.abs() < 1e-24 {
        return Err(Error::OrthogonalPostselection { overlap: 0.0 });
    }
    let re = dot3(n, n_i) + dot3(n, n_f);
    let im = dot3(n, cross3(n_i, n_f));
    Ok(Complex64::new(re / denom, im / denom))
}

/// Normalizing factor N of the conditional spin pdf. Equals twice the
/// postselection probability.
pub fn normalizer(sc: &SpinScenario) -> f64 {
    let g = &sc.geometry;
    let (sin_ph, cos_ph) = sc.phase_trig();
    let env = sc.envelope();
    1.0 + dot3(g.n_i(), g.n_f()) + env * sin_ph * g.triple_product()
        - (1.0 - env * cos_ph) * g.cross_dot()
}

/// Conditional pointer pdf: two shifted Gaussians plus the coherence
/// interference term oscillating with lambda G(p).
pub fn conditional_pdf_spin(sc: &SpinScenario, p: f64) -> Result<f64> {
    let n = normalizer(sc);
    if n < NORMALIZER_FLOOR {
        return Err(Error::VanishingPostselection {
            probability: n / 2.0,
        });
    }
    let g = &sc.geometry;
    let dp_spread = sc.probe.delta_p_spread;
    let dp_coh = sc.probe.delta_p_coherence;
    let nn_i = dot3(g.n(), g.n_i());
    let nn_f = dot3(g.n(), g.n_f());
    let mut value = 0.0;
    for sigma in [1.0, -1.0] {
        let shift = p - sigma * sc.lambda;
        value += 0.5
            * (1.0 + sigma * nn_i)
            * (1.0 + sigma * nn_f)
            * (-shift * shift / (2.0 * dp_spread * dp_spread)).exp();
    }
    let lam_g = sc.lambda * g_function(&sc.probe, &sc.moments, p);
    let interference = (g.cross_dot() * lam_g.cos() - g.triple_product() * lam_g.sin())
        * (-p * p / (2.0 * dp_spread * dp_spread)
            - sc.lambda * sc.lambda / (2.0 * dp_coh * dp_coh))
            .exp();
    value += interference;
    Ok(value / (std::f64::consts::TAU.sqrt() * dp_spread * n))
}

/// Exact conditional average for any coupling strength:
/// <A> = {n.n_i + n.n_f - kappa^2 e^{-lambda^2/2nu^2}
///        [cos(lambda/p_phi) n.(n_i x n_f)
///         - sin(lambda/p_phi) (n x n_i).(n x n_f)]} / N.
pub fn exact_average_spin(sc: &SpinScenario) -> Result<f64> {
    let n = normalizer(sc);
    if n < NORMALIZER_FLOOR {
        return Err(Error::VanishingPostselection {
            probability: n / 2.0,
        });
    }
    let g = &sc.geometry;
    let kappa_sq = derived_scales(&sc.probe, &sc.moments).kappa_sq;
    let (sin_ph, cos_ph) = sc.phase_trig();
    let env = sc.envelope();
    let numerator = dot3(g.n(), g.n_i()) + dot3(g.n(), g.n_f())
        - kappa_sq * env * (cos_ph * g.triple_product() - sin_ph * g.cross_dot());
    Ok(numerator / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Numeric,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub gamma_star: f64,
    pub value: f64,
    pub method: Method,
}

/// epsilon(phi) = cos phi + kappa^2 sin phi.
pub fn epsilon(phi: f64, kappa_sq: f64) -> f64 {
    phi.cos() + kappa_sq * phi.sin()
}

/// Extremal value of <A> over gamma at fixed theta, phi.
///
/// Uses the closed-form location gamma* = pi - eta* when the weighting
/// epsilon(phi) dominates both lambda/p_phi and lambda/nu; outside that
/// regime it falls back to a brute-force sweep of the exact average and
/// labels the result numeric.
pub fn extremum(sc: &SpinScenario, branch: Branch) -> Result<Extremum> {
    let g = &sc.geometry;
    if g.theta.sin().abs() < 1e-12 {
        return Err(Error::DegenerateGeometry);
    }
    let scales = derived_scales(&sc.probe, &sc.moments);
    let kappa_sq = scales.kappa_sq;
    let nu = scales.nu;
    let inv_p_phi = sc.probe.inv_p_phi();
    let lam = sc.lambda;
    let eps = epsilon(g.phi, kappa_sq);
    let eps_prime = -g.phi.sin() + kappa_sq * g.phi.cos();
    let guard = eps > 10.0 * (lam.abs() * inv_p_phi).max(lam.abs() / nu);

    if guard {
        let root = ((eps * eps) / (nu * nu)
            + (1.0 + kappa_sq * kappa_sq) * g.phi.cos() * g.phi.cos() * inv_p_phi * inv_p_phi)
            .sqrt();
        let sign = match branch {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        };
        let eta = lam * g.theta.sin() / eps * (kappa_sq * inv_p_phi + sign * root);
        let value =
            (eps * eps / lam) / (g.phi.cos() * eps_prime * inv_p_phi + sign * root);
        return Ok(Extremum {
            gamma_star: std::f64::consts::PI - eta,
            value,
            method: Method::Analytic,
        });
    }

    // brute-force sweep of the exact average over gamma
    let steps = 100_000;
    let mut best_gamma = 0.0;
    let mut best = match branch {
        Branch::Upper => f64::NEG_INFINITY,
        Branch::Lower => f64::INFINITY,
    };
    for i in 0..steps {
        let gamma = std::f64::consts::TAU * i as f64 / steps as f64;
        let probe_geom = SpinGeometry {
            gamma,
            ..sc.geometry
        };
        let candidate = SpinScenario {
            geometry: probe_geom,
            ..*sc
        };
        let Ok(value) = exact_average_spin(&candidate) else {
            continue;
        };
        let better = match branch {
            Branch::Upper => value > best,
            Branch::Lower => value < best,
        };
        if better {
            best = value;
            best_gamma = gamma;
        }
    }
    if !best.is_finite() {
        return Err(Error::VanishingPostselection { probability: 0.0 });
    }
    Ok(Extremum {
        gamma_star: best_gamma,
        value: best,
        method: Method::Numeric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadExtrema {
    pub min: f64,
    pub max: f64,
    pub min_gamma: f64,
    pub min_phi: f64,
    pub max_gamma: f64,
    pub max_phi: f64,
}

/// Closed-form extrema of the variance over (gamma, phi), valid for
/// p_phi >> nu:
///   min = [dP^2 - (1 + kappa^4) nu^2/4] / lambda^2
///         at eta* = sqrt(3) sin theta lambda/nu, phi* = arctan kappa^2,
///   max = [dP^2 + 2 (1 + kappa^4) nu^2] / lambda^2 at gamma* = pi.
pub fn spread_extrema(sc: &SpinScenario) -> Result<SpreadExtrema> {
    let scales = derived_scales(&sc.probe, &sc.moments);
    let nu = scales.nu;
    if sc.probe.p_phi < 10.0 * nu {
        return Err(Error::RegimeNotApplicable {
            p_phi: sc.probe.p_phi,
            nu,
        });
    }
    let kappa_sq = scales.kappa_sq;
    let dp = sc.probe.delta_p_spread;
    let lam_sq = sc.lambda * sc.lambda;
    let one_plus_k4 = 1.0 + kappa_sq * kappa_sq;
    let phi_star = kappa_sq.atan();
    let eta_min = 3.0_f64.sqrt() * sc.geometry.theta.sin() * sc.lambda.abs() / nu;
    Ok(SpreadExtrema {
        min: (dp * dp - one_plus_k4 * nu * nu / 4.0) / lam_sq,
        max: (dp * dp + 2.0 * one_plus_k4 * nu * nu) / lam_sq,
        min_gamma: std::f64::consts::PI - eta_min,
        min_phi: phi_star,
        max_gamma: std::f64::consts::PI,
        max_phi: phi_star,
    })
}
