//! Physical parameters of the qutrit + 2N resonator system.
//!
//! Internally every frequency is an angular frequency in rad/ns, every time
//! is in ns and every rate in 1/ns. The [`units`] helpers convert from the
//! ordinary-frequency (ω/2π) and lifetime conventions used in config files.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};
use crate::quantum::Site;

pub mod units {
    use std::f64::consts::TAU;

    /// ω/2π in GHz to rad/ns.
    pub fn ghz(f: f64) -> f64 {
        TAU * f
    }

    /// ω/2π in MHz to rad/ns.
    pub fn mhz(f: f64) -> f64 {
        TAU * f * 1e-3
    }

    pub fn to_ghz(omega: f64) -> f64 {
        omega / TAU
    }

    pub fn to_mhz(omega: f64) -> f64 {
        omega / TAU * 1e3
    }

    /// Lifetime in μs to a rate in 1/ns. Infinite lifetimes give zero.
    pub fn rate_from_us(lifetime_us: f64) -> f64 {
        1.0 / (lifetime_us * 1e3)
    }

    pub fn us_from_rate(rate: f64) -> f64 {
        1.0 / (rate * 1e3)
    }
}

/// Decay and dephasing rates, all in 1/ns.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationSpec {
    pub kappa_a: Vec<f64>,
    pub kappa_b: Vec<f64>,
    pub gamma_eg: f64,
    pub gamma_fe: f64,
    pub gamma_fg: f64,
    pub gamma_phi_e: f64,
    pub gamma_phi_f: f64,
}

impl DissipationSpec {
    pub fn none(n_pairs: usize) -> Self {
        Self {
            kappa_a: vec![0.0; n_pairs],
            kappa_b: vec![0.0; n_pairs],
            gamma_eg: 0.0,
            gamma_fe: 0.0,
            gamma_fg: 0.0,
            gamma_phi_e: 0.0,
            gamma_phi_f: 0.0,
        }
    }

    /// Flux-qutrit and resonator lifetimes of the reference implementation:
    /// T_φ,e = 2.5 μs, T_φ,f = 1.5 μs, T_eg = 5 μs, T_fe = 2.5 μs,
    /// T_fg = 3.5 μs and κ⁻¹ = 10 μs for every resonator.
    pub fn reference(n_pairs: usize) -> Self {
        use units::rate_from_us;
        Self {
            kappa_a: vec![rate_from_us(10.0); n_pairs],
            kappa_b: vec![rate_from_us(10.0); n_pairs],
            gamma_eg: rate_from_us(5.0),
            gamma_fe: rate_from_us(2.5),
            gamma_fg: rate_from_us(3.5),
            gamma_phi_e: rate_from_us(2.5),
            gamma_phi_f: rate_from_us(1.5),
        }
    }

    fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.kappa_a.iter().chain(&self.kappa_b).copied().chain([
            self.gamma_eg,
            self.gamma_fe,
            self.gamma_fg,
            self.gamma_phi_e,
            self.gamma_phi_f,
        ])
    }
}

/// All physical parameters of one simulation point.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub omega_eg: f64,
    pub omega_fg: f64,
    /// Δ_j = ω_fg − ω_{a_j} = ω_fe − ω_{b_j}.
    pub delta: Vec<f64>,
    /// g_j, coupling of a_j to |g⟩↔|f⟩.
    pub g: Vec<f64>,
    /// μ_j, coupling of b_j to |e⟩↔|f⟩.
    pub mu: Vec<f64>,
    /// Pulse Rabi frequency Ω on |g⟩↔|e⟩.
    pub omega: f64,
    /// Rabi frequency of the pulse on |e⟩↔|f⟩. `None` follows `omega`.
    pub omega_fe: Option<f64>,
    /// g_cs / g_m.
    pub gcs_ratio: f64,
    pub dissipation: DissipationSpec,
    pub n_max: usize,
    pub include_crosstalk: bool,
    pub include_leakage: bool,
    pub include_dissipation: bool,
}

impl SystemSpec {
    /// Two pairs at the reference device point: ω_eg/2π = 7.5 GHz,
    /// ω_fg/2π = 12.5 GHz, Δ/2π = (0.75, 1.5) GHz, couplings from the
    /// matching condition at `c1` with μ = 0.95 g, Ω/2π = 100 MHz,
    /// g_cs = 0.4 g_m and reference dissipation. Everything switched on.
    pub fn reference(c1: f64) -> Result<Self> {
        let delta = vec![units::ghz(0.75), units::ghz(1.5)];
        let matching = resolve_matching(&delta, c1)?;
        let mu = matching.g.iter().map(|g| 0.95 * g).collect();
        Ok(Self {
            omega_eg: units::ghz(7.5),
            omega_fg: units::ghz(12.5),
            delta,
            g: matching.g,
            mu,
            omega: units::mhz(100.0),
            omega_fe: None,
            gcs_ratio: 0.4,
            dissipation: DissipationSpec::reference(2),
            n_max: 2,
            include_crosstalk: true,
            include_leakage: true,
            include_dissipation: true,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.delta.len()
    }

    /// ω_fe = ω_fg − ω_eg.
    pub fn omega_fe_transition(&self) -> f64 {
        self.omega_fg - self.omega_eg
    }

    pub fn leakage_rabi(&self) -> f64 {
        self.omega_fe.unwrap_or(self.omega)
    }

    /// Detuning of the pulse from the |e⟩↔|f⟩ transition, Δ = ω_fe − ω_eg.
    pub fn leakage_detuning(&self) -> f64 {
        self.omega_fe_transition() - self.omega_eg
    }

    /// g_m = max over all g_j, μ_j.
    pub fn g_max(&self) -> f64 {
        self.g.iter().chain(&self.mu).copied().fold(0.0, f64::max)
    }

    pub fn g_cs(&self) -> f64 {
        self.gcs_ratio * self.g_max()
    }

    pub fn omega_a(&self, j: usize) -> f64 {
        self.omega_fg - self.delta[j]
    }

    pub fn omega_b(&self, j: usize) -> f64 {
        self.omega_fe_transition() - self.delta[j]
    }

    /// Check the structural invariants.
    pub fn check(&self) -> Result<()> {
        let n = self.n_pairs();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if n == 0 {
            return bad("at least one resonator pair is required".into());
        }
        if self.g.len() != n || self.mu.len() != n {
            return bad(format!("{n} detunings but {} g and {} mu values", self.g.len(), self.mu.len()));
        }
        if self.dissipation.kappa_a.len() != n || self.dissipation.kappa_b.len() != n {
            return bad("one decay rate per resonator is required".into());
        }
        if let Some(j) = self.delta.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return bad(format!("detuning Δ_{} must be positive", j + 1));
        }
        for j in 0..n {
            for k in j + 1..n {
                if self.delta[j] == self.delta[k] {
                    return bad(format!("detunings Δ_{} and Δ_{} coincide", j + 1, k + 1));
                }
            }
        }
        let nonneg = self
            .g
            .iter()
            .chain(&self.mu)
            .copied()
            .chain([self.omega, self.leakage_rabi(), self.gcs_ratio, self.omega_eg, self.omega_fg])
            .chain(self.dissipation.rates());
        if nonneg.into_iter().any(|x| !(x >= 0.0 && x.is_finite())) {
            return bad("frequencies, couplings and rates must be finite and nonnegative".into());
        }
        if self.omega_fg <= self.omega_eg {
            return bad("ω_fg must exceed ω_eg".into());
        }
        if self.n_max < 1 {
            return bad("n_max must be at least 1".into());
        }
        Ok(())
    }
}

/// Couplings satisfying g_j²/Δ_j = g_1²/Δ_1.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub g: Vec<f64>,
    /// c_j = Δ_j / g_j.
    pub c: Vec<f64>,
}

/// g_1 = Δ_1/c_1 and g_j = g_1 √(Δ_j/Δ_1).
pub fn resolve_matching(delta: &[f64], c1: f64) -> Result<Matching> {
    if delta.is_empty() || delta.iter().any(|&d| !(d > 0.0)) || !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "matching needs positive detunings and c1 > 0 (got c1 = {c1})"
        )));
    }
    let g1 = delta[0] / c1;
    let g: Vec<f64> = delta.iter().map(|d| g1 * (d / delta[0]).sqrt()).collect();
    let c = delta.iter().zip(&g).map(|(d, g)| d / g).collect();
    Ok(Matching { g, c })
}

/// A direct resonator-resonator exchange term x·y† and its detuning ω_y − ω_x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrosstalkLink {
    pub annihilated: Site,
    pub created: Site,
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedQuantities {
    /// λ_j = g_j μ_j / Δ_j.
    pub lambda: Vec<f64>,
    /// δ_j = (g_j² − μ_j²)/Δ_j.
    pub delta: Vec<f64>,
    /// π/(2λ) with the homogeneous λ = g_1²/Δ_1.
    pub t_op: f64,
    pub omega_a: Vec<f64>,
    pub omega_b: Vec<f64>,
    pub c: Vec<f64>,
    pub g_m: f64,
    pub g_cs: f64,
    /// ω κ⁻¹; infinite without decay.
    pub q_a: Vec<f64>,
    pub q_b: Vec<f64>,
    pub crosstalk: Vec<CrosstalkLink>,
}

pub fn derive(spec: &SystemSpec) -> DerivedQuantities {
    let n = spec.n_pairs();
    let lambda = (0..n).map(|j| spec.g[j] * spec.mu[j] / spec.delta[j]).collect();
    let delta = (0..n)
        .map(|j| (spec.g[j].powi(2) - spec.mu[j].powi(2)) / spec.delta[j])
        .collect();
    let lambda_hom = spec.g[0].powi(2) / spec.delta[0];
    let omega_a: Vec<f64> = (0..n).map(|j| spec.omega_a(j)).collect();
    let omega_b: Vec<f64> = (0..n).map(|j| spec.omega_b(j)).collect();
    let q = |w: &[f64], kappa: &[f64]| -> Vec<f64> {
        w.iter().zip(kappa).map(|(w, k)| if *k > 0.0 { w / k } else { f64::INFINITY }).collect()
    };
    DerivedQuantities {
        lambda,
        delta,
        t_op: PI / (2.0 * lambda_hom),
        q_a: q(&omega_a, &spec.dissipation.kappa_a),
        q_b: q(&omega_b, &spec.dissipation.kappa_b),
        crosstalk: crosstalk_links(&omega_a, &omega_b),
        omega_a,
        omega_b,
        c: (0..n).map(|j| spec.delta[j] / spec.g[j]).collect(),
        g_m: spec.g_max(),
        g_cs: spec.g_cs(),
    }
}

/// Every a_j→b_k link, then a_j→a_k and b_j→b_k for j < k.
fn crosstalk_links(omega_a: &[f64], omega_b: &[f64]) -> Vec<CrosstalkLink> {
    let n = omega_a.len();
    let mut links = Vec::new();
    for j in 0..n {
        for k in 0..n {
            links.push(CrosstalkLink {
                annihilated: Site::A(j),
                created: Site::B(k),
                detuning: omega_b[k] - omega_a[j],
            });
        }
    }
    for (freqs, site) in [(omega_a, Site::A as fn(usize) -> Site), (omega_b, Site::B)] {
        for j in 0..n {
            for k in j + 1..n {
                links.push(CrosstalkLink {
                    annihilated: site(j),
                    created: site(k),
                    detuning: freqs[k] - freqs[j],
                });
            }
        }
    }
    links
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioFamily {
    Dispersive,
    PairSeparation,
    StrongDriving,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub fail_below: f64,
    pub warn_below: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fail_below: 5.0,
            warn_below: 10.0,
        }
    }
}

impl Thresholds {
    pub fn classify(&self, ratio: f64) -> Status {
        if !(ratio >= self.fail_below) {
            Status::Fail
        } else if ratio < self.warn_below {
            Status::Warn
        } else {
            Status::Pass
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioCheck {
    pub family: RatioFamily,
    pub label: String,
    pub value: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidityReport {
    pub checks: Vec<RatioCheck>,
}

impl ValidityReport {
    pub fn worst(&self) -> Status {
        self.checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }

    pub fn find(&self, label: &str) -> Option<&RatioCheck> {
        self.checks.iter().find(|c| c.label == label)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RatioCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<32} {:>12.4} {}", c.label, c.value, c.status)?;
        }
        write!(f, "overall: {}", self.worst())
    }
}

pub fn validate(spec: &SystemSpec) -> ValidityReport {
    validate_with(spec, Thresholds::default())
}

/// Dispersive ratios Δ_j/g_j and Δ_j/μ_j, the pair-separation ratios of the
/// Raman couplings between different pairs, and the strong-driving ratios.
pub fn validate_with(spec: &SystemSpec, thresholds: Thresholds) -> ValidityReport {
    let n = spec.n_pairs();
    let mut checks = Vec::new();
    let mut push = |family, label: String, value: f64| {
        checks.push(RatioCheck {
            family,
            label,
            value,
            status: thresholds.classify(value),
        })
    };
    for j in 0..n {
        push(RatioFamily::Dispersive, format!("Delta{0}/g{0}", j + 1), spec.delta[j] / spec.g[j]);
        push(RatioFamily::Dispersive, format!("Delta{0}/mu{0}", j + 1), spec.delta[j] / spec.mu[j]);
    }
    for j in 0..n {
        for k in j + 1..n {
            let (dj, dk) = (spec.delta[j], spec.delta[k]);
            let lhs = (dj - dk).abs() / (1.0 / dj + 1.0 / dk);
            let (gj, gk, mj, mk) = (spec.g[j], spec.g[k], spec.mu[j], spec.mu[k]);
            let rhs = [gj * gk, gj * mk, gk * mj, mj * mk].into_iter().fold(0.0, f64::max);
            push(RatioFamily::PairSeparation, format!("pair separation {}-{}", j + 1, k + 1), lhs / rhs);
        }
    }
    for j in 0..n {
        let d = spec.delta[j];
        let lambda = spec.g[j] * spec.mu[j] / d;
        let scale = [spec.g[j].powi(2) / (4.0 * d), spec.mu[j].powi(2) / (4.0 * d), lambda / 4.0]
            .into_iter()
            .fold(0.0, f64::max);
        push(RatioFamily::StrongDriving, format!("Omega/shift{}", j + 1), spec.omega / scale);
        push(RatioFamily::StrongDriving, format!("Delta{}/Omega", j + 1), d / spec.omega);
    }
    ValidityReport { checks }
}

/// Period of the fastest harmonic in a set of angular frequencies.
pub fn fastest_period(freqs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let max = freqs.into_iter().map(f64::abs).fold(0.0, f64::max);
    (max > 0.0).then(|| TAU / max)
}
