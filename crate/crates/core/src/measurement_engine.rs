//! The generic exact engine.
//!
//! Joint and conditional pointer distributions for any small-dimension
//! system coupled to the Gaussian probe, the inferred average and variance,
//! and the weak-limit closed formulas built from the weak value.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::probe_model::{
    beta, coupling_moments, derived_scales, phase_phi, rho_elem, CouplingWindow,
    GaussianProbe, PhaseMoments,
};
use crate::quantum_core::{ObservableOp, SystemState};

/// Overlap magnitude below which the weak value is treated as undefined.
pub const OVERLAP_FLOOR: f64 = 1e-10;
/// Postselection-probability floor separating "weak formula breaks down"
/// from "numerically meaningless".
pub const POSTSELECTION_FLOOR: f64 = 1e-12;

/// A complete pre/postselected measurement configuration.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    pub pre: SystemState,
    pub post: SystemState,
    pub observable: ObservableOp,
    pub probe: GaussianProbe,
    pub window: CouplingWindow,
    pub lambda: f64,
}

impl MeasurementSetup {
    pub fn new(
        pre: SystemState,
        post: SystemState,
        observable: ObservableOp,
        probe: GaussianProbe,
        window: CouplingWindow,
        lambda: f64,
    ) -> Result<Self> {
        if pre.dim() != observable.dim() {
            return Err(Error::DimensionMismatch {
                left: pre.dim(),
                right: observable.dim(),
            });
        }
        if post.dim() != observable.dim() {
            return Err(Error::DimensionMismatch {
                left: post.dim(),
                right: observable.dim(),
            });
        }
        probe.validate()?;
        window.validate()?;
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidCoupling {
                reason: format!("lambda must be finite and nonzero, got {lambda}"),
            });
        }
        Ok(Self {
            pre,
            post,
            observable,
            probe,
            window,
            lambda,
        })
    }

    pub fn moments(&self) -> PhaseMoments {
        coupling_moments(&self.window).expect("window validated at construction")
    }

    /// True when the weak-limit formula is expected to be reliable:
    /// overlap^2 not smaller than lambda / delta_p.
    pub fn weak_limit_reliable(&self) -> bool {
        let overlap = self.post.inner(&self.pre).norm_sqr();
        overlap * overlap >= self.lambda.abs() / self.probe.delta_p_coherence
    }
}

/// Uniform pointer grid, odd-length so the midpoint is a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub n_points: usize,
}

impl PointerGrid {
    pub fn new(p_min: f64, p_max: f64, n_points: usize) -> Result<Self> {
        if !(p_min < p_max) {
            return Err(Error::InvalidGrid {
                reason: format!("p_min = {p_min} must be below p_max = {p_max}"),
            });
        }
        if n_points < 101 || n_points % 2 == 0 {
            return Err(Error::InvalidGrid {
                reason: format!("n_points = {n_points} must be odd and >= 101"),
            });
        }
        Ok(Self {
            p_min,
            p_max,
            n_points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.n_points).map(move |i| self.p_min + i as f64 * h)
    }

    /// Trapezoid integral of samples taken on this grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        let h = self.step();
        let inner: f64 = samples[1..samples.len() - 1].iter().sum();
        h * (inner + 0.5 * (samples[0] + samples[samples.len() - 1]))
    }
}

/// Default grid: [-(6 dP + |lambda| max|a|), +(6 dP + |lambda| max|a|)],
/// 4001 points.
pub fn default_grid(setup: &MeasurementSetup) -> PointerGrid {
    let reach = 6.0 * setup.probe.delta_p_spread
        + setup.lambda.abs() * setup.observable.max_abs_eigenvalue();
    PointerGrid::new(-reach, reach, 4001).expect("default grid parameters are valid")
}

/// Conditional pointer probability density over a grid.
#[derive(Debug, Clone)]
pub struct PointerDistribution {
    pub grid: PointerGrid,
    pub density: Vec<f64>,
    pub postselection_probability: f64,
    /// Set when overlap^2 < lambda / delta_p, the regime where the
    /// first-order weak-value formula is suspect. The exact density above is
    /// still valid.
    pub weak_limit_flagged: bool,
}

impl PointerDistribution {
    pub fn mean_p(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .points()
            .zip(&self.density)
            .map(|(p, d)| p * d)
            .collect();
        self.grid.integrate(&weighted)
    }

    pub fn variance_p(&self) -> f64 {
        let mean = self.mean_p();
        let weighted: Vec<f64> = self
            .grid
            .points()
            .zip(&self.density)
            .map(|(p, d)| (p - mean) * (p - mean) * d)
            .collect();
        self.grid.integrate(&weighted)
    }
}

/// Weak value and squared-observable weak value for a pre/post pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueReport {
    pub a_w: Complex64,
    pub a2_w: Complex64,
    /// (A^2)_w - (A_w)^2
    pub delta_a2_w: Complex64,
    /// |<post|pre>|^2
    pub overlap: f64,
}

/// A_w = <post|A|pre> / <post|pre>.
pub fn weak_value(
    pre: &SystemState,
    post: &SystemState,
    obs: &ObservableOp,
) -> Result<WeakValueReport> {
    if pre.dim() != obs.dim() || post.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            left: pre.dim(),
            right: obs.dim(),
        });
    }
    let inner = post.inner(pre);
    let overlap = inner.norm_sqr();
    if inner.norm() <= OVERLAP_FLOOR {
        return Err(Error::OrthogonalPostselection { overlap });
    }
    let a_w = obs.matrix_element(post, pre) / inner;
    let a2_w = obs.matrix_element_sq(post, pre) / inner;
    Ok(WeakValueReport {
        a_w,
        a2_w,
        delta_a2_w: a2_w - a_w * a_w,
        overlap,
    })
}

/// Per-setup precomputation for the double eigenvalue sum.
struct JointTerms {
    eigenvalues: Vec<f64>,
    /// w_{a a'} = <post|a><a|pre> * conj(<post|a'><a'|pre>)
    weights: Vec<Complex64>,
    moments: PhaseMoments,
}

fn joint_terms(setup: &MeasurementSetup) -> JointTerms {
    let d = setup.observable.dim();
    let vecs = setup.observable.eigenvectors();
    let amp: Vec<Complex64> = (0..d)
        .map(|k| {
            let post_a: Complex64 = (0..d)
                .map(|i| setup.post.amplitudes()[i].conj() * vecs[i * d + k])
                .sum();
            let a_pre: Complex64 = (0..d)
                .map(|i| vecs[i * d + k].conj() * setup.pre.amplitudes()[i])
                .sum();
            post_a * a_pre
        })
        .collect();
    let mut weights = vec![Complex64::ZERO; d * d];
    for k in 0..d {
        for l in 0..d {
            weights[k * d + l] = amp[k] * amp[l].conj();
        }
    }
    JointTerms {
        eigenvalues: setup.observable.eigenvalues().to_vec(),
        weights,
        moments: setup.moments(),
    }
}

fn joint_density_with(setup: &MeasurementSetup, terms: &JointTerms, p: f64) -> Result<f64> {
    let d = terms.eigenvalues.len();
    let mut total = Complex64::ZERO;
    let phis: Vec<f64> = terms
        .eigenvalues
        .iter()
        .map(|&a| phase_phi(&setup.probe, &terms.moments, setup.lambda, a, p))
        .collect();
    for k in 0..d {
        for l in 0..d {
            let w = terms.weights[k * d + l];
            if w == Complex64::ZERO {
                continue;
            }
            let rho = rho_elem(
                &setup.probe,
                p - setup.lambda * terms.eigenvalues[k],
                p - setup.lambda * terms.eigenvalues[l],
            );
            total += rho * Complex64::from_polar(1.0, -(phis[k] - phis[l])) * w;
        }
    }
    let magnitude = total.norm();
    if total.im.abs() > 1e-12 * magnitude.max(1e-30) {
        return Err(Error::NumericAssertion {
            reason: format!(
                "joint density has imaginary residue {:.3e} at p = {p}",
                total.im
            ),
        });
    }
    let peak_scale = 1.0 / (std::f64::consts::TAU.sqrt() * setup.probe.delta_p_spread);
    if total.re < -1e-12 * peak_scale {
        return Err(Error::NumericAssertion {
            reason: format!("joint density negative ({:.3e}) at p = {p}", total.re),
        });
    }
    Ok(total.re.max(0.0))
}

/// Joint probability density P(p, S_f | rho, S_i): the double eigenvalue sum
/// over shifted density-matrix elements with their accumulated phases.
pub fn joint_density(setup: &MeasurementSetup, p: f64) -> Result<f64> {
    let terms = joint_terms(setup);
    joint_density_with(setup, &terms, p)
}

/// Normalized conditional pointer distribution over the grid, with the
/// postselection probability as the trapezoid integral of the joint density.
pub fn conditional_distribution(
    setup: &MeasurementSetup,
    grid: &PointerGrid,
) -> Result<PointerDistribution> {
    let terms = joint_terms(setup);
    let mut density: Vec<f64> = Vec::with_capacity(grid.n_points);
    for p in grid.points() {
        density.push(joint_density_with(setup, &terms, p)?);
    }
    let postselection_probability = grid.integrate(&density);
    if postselection_probability < POSTSELECTION_FLOOR {
        return Err(Error::VanishingPostselection {
            probability: postselection_probability,
        });
    }
    for d in &mut density {
        *d /= postselection_probability;
    }
    Ok(PointerDistribution {
        grid: *grid,
        density,
        postselection_probability,
        weak_limit_flagged: !setup.weak_limit_reliable(),
    })
}

/// <A> = <p> / lambda under the conditional distribution.
pub fn inferred_average(setup: &MeasurementSetup, grid: &PointerGrid) -> Result<f64> {
    Ok(conditional_distribution(setup, grid)?.mean_p() / setup.lambda)
}

/// Second central moment of p / lambda under the conditional distribution.
pub fn inferred_variance(setup: &MeasurementSetup, grid: &PointerGrid) -> Result<f64> {
    Ok(conditional_distribution(setup, grid)?.variance_p() / (setup.lambda * setup.lambda))
}

/// Weak-limit average <A>_0 = Re A_w - kappa^2 Im A_w
/// (mean p G(p) = kappa^2 for the zero-mean Gaussian probe).
pub fn weak_average_approx(
    report: &WeakValueReport,
    probe: &GaussianProbe,
    moments: &PhaseMoments,
) -> f64 {
    let kappa_sq = derived_scales(probe, moments).kappa_sq;
    report.a_w.re - kappa_sq * report.a_w.im
}

/// Weak-limit variance
/// <Delta A^2> = dP^2/lambda^2 + (1 - kappa^4)/2 Re Delta A^2_w
///               - kappa^2 Im Delta A^2_w.
pub fn weak_variance_approx(
    report: &WeakValueReport,
    probe: &GaussianProbe,
    moments: &PhaseMoments,
    lambda: f64,
) -> f64 {
    let kappa_sq = derived_scales(probe, moments).kappa_sq;
    let dp = probe.delta_p_spread;
    dp * dp / (lambda * lambda) + 0.5 * (1.0 - kappa_sq * kappa_sq) * report.delta_a2_w.re
        - kappa_sq * report.delta_a2_w.im
}

/// Weak-limit expectation of the probe velocity V = p / M_p:
/// <V> = (lambda/M_p) Re A_w - (lambda beta / hbar) Im A_w,
/// so that M_p <V> = <p> = lambda (Re A_w - kappa^2 Im A_w) holds for any
/// hbar (beta = hbar kappa^2 / M_p).
pub fn velocity_expectation_weak(
    report: &WeakValueReport,
    probe: &GaussianProbe,
    moments: &PhaseMoments,
    lambda: f64,
) -> f64 {
    lambda * report.a_w.re / probe.mass
        - lambda * beta(probe, moments) / probe.hbar * report.a_w.im
}
