//! TOML configuration: ordinary frequencies in GHz/MHz and lifetimes in μs
//! on the outside, rad/ns and 1/ns inside. Conversion happens here only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{resolve_matching, units, DissipationSpec, SystemSpec};
use crate::sweep::{Param, Scenario, SweepAxis};

/// The configuration shipped with the binary, selected by `--config default`.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

const DEFAULT_MU_RATIO: f64 = 0.95;
const DEFAULT_GCS_RATIO: f64 = 0.4;
const DEFAULT_N_MAX: usize = 2;

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(x) => Ok(vec![*x; n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::Config(format!("`{key}` has {} entries for {n} pairs", v.len()))),
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Document {
    qutrit: Option<Qutrit>,
    resonators: Option<Resonators>,
    couplings: Option<Couplings>,
    pulse: Option<Pulse>,
    crosstalk: Option<Crosstalk>,
    dissipation: Option<Dissipation>,
    sim: Option<Sim>,
    sweep: Option<Sweep>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Qutrit {
    omega_eg_ghz: Option<f64>,
    omega_fg_ghz: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Resonators {
    delta_ghz: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Couplings {
    #[serde(skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g_mhz: Option<Vec<f64>>,
    mu_ratio: Option<OneOrMany>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Pulse {
    omega_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_fe_mhz: Option<f64>,
    leakage: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Crosstalk {
    enabled: Option<bool>,
    gcs_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Dissipation {
    enabled: Option<bool>,
    t_phi_e_us: Option<f64>,
    t_phi_f_us: Option<f64>,
    t_eg_us: Option<f64>,
    t_fe_us: Option<f64>,
    t_fg_us: Option<f64>,
    kappa_a_inv_us: Option<OneOrMany>,
    kappa_b_inv_us: Option<OneOrMany>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Sim {
    n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_ps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final_ns: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Sweep {
    #[serde(default)]
    axes: Vec<Axis>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Axis {
    param: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

/// A parsed configuration: the base scenario and the sweep plan, which may
/// be empty.
#[derive(Clone, Debug)]
pub struct Config {
    pub scenario: Scenario,
    pub axes: Vec<SweepAxis>,
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::MissingKey(key.into()))
}

fn or_notice<T: std::fmt::Debug>(value: Option<T>, key: &str, default: T) -> T {
    value.unwrap_or_else(|| {
        log::info!("`{key}` not set, using {default:?}");
        default
    })
}

/// Rate in 1/ns from a lifetime in μs; an infinite lifetime means no decay.
fn rate(lifetime_us: f64, key: &str) -> Result<f64> {
    if !(lifetime_us > 0.0) {
        return Err(Error::Config(format!("`{key}` must be a positive lifetime, got {lifetime_us}")));
    }
    Ok(units::rate_from_us(lifetime_us))
}

/// Parse and resolve a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;

    let qutrit = require(doc.qutrit, "qutrit")?;
    let omega_eg = units::ghz(require(qutrit.omega_eg_ghz, "qutrit.omega_eg_ghz")?);
    let omega_fg = units::ghz(require(qutrit.omega_fg_ghz, "qutrit.omega_fg_ghz")?);

    let resonators = require(doc.resonators, "resonators")?;
    let delta_ghz = require(resonators.delta_ghz, "resonators.delta_ghz")?;
    if let Some(d) = delta_ghz.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Config(format!("`resonators.delta_ghz` entries must be positive, got {d}")));
    }
    let delta: Vec<f64> = delta_ghz.iter().map(|&d| units::ghz(d)).collect();
    let n = delta.len();
    if n == 0 {
        return Err(Error::Config("`resonators.delta_ghz` is empty".into()));
    }

    let couplings = require(doc.couplings, "couplings")?;
    let g = match (couplings.c1, couplings.g_mhz) {
        (Some(_), Some(_)) => return Err(Error::Config("set either `couplings.c1` or `couplings.g_mhz`, not both".into())),
        (Some(c1), None) => resolve_matching(&delta, c1)?.g,
        (None, Some(g)) if g.len() == n => g.iter().map(|&x| units::mhz(x)).collect(),
        (None, Some(g)) => {
            return Err(Error::Config(format!("`couplings.g_mhz` has {} entries for {n} pairs", g.len())));
        }
        (None, None) => return Err(Error::MissingKey("couplings.c1".into())),
    };
    let mu_ratio = or_notice(couplings.mu_ratio, "couplings.mu_ratio", OneOrMany::One(DEFAULT_MU_RATIO))
        .expand(n, "couplings.mu_ratio")?;
    let mu = g.iter().zip(&mu_ratio).map(|(g, r)| g * r).collect();

    let pulse = require(doc.pulse, "pulse")?;
    let omega = units::mhz(require(pulse.omega_mhz, "pulse.omega_mhz")?);
    let omega_fe = pulse.omega_fe_mhz.map(units::mhz);

    let crosstalk = or_notice(doc.crosstalk, "crosstalk", Crosstalk::default());
    let include_crosstalk = or_notice(crosstalk.enabled, "crosstalk.enabled", true);
    let gcs_ratio = or_notice(crosstalk.gcs_ratio, "crosstalk.gcs_ratio", DEFAULT_GCS_RATIO);

    let diss = or_notice(doc.dissipation, "dissipation", Dissipation::default());
    let reference = DissipationSpec::reference(n);
    let us = units::us_from_rate;
    let lifetime = |v: Option<f64>, key: &str, default_rate: f64| rate(or_notice(v, key, us(default_rate)), key);
    let resonator_rates = |v: Option<OneOrMany>, key: &str, default_rate: f64| -> Result<Vec<f64>> {
        or_notice(v, key, OneOrMany::One(us(default_rate)))
            .expand(n, key)?
            .into_iter()
            .map(|t| rate(t, key))
            .collect()
    };
    let dissipation = DissipationSpec {
        kappa_a: resonator_rates(diss.kappa_a_inv_us, "dissipation.kappa_a_inv_us", reference.kappa_a[0])?,
        kappa_b: resonator_rates(diss.kappa_b_inv_us, "dissipation.kappa_b_inv_us", reference.kappa_b[0])?,
        gamma_eg: lifetime(diss.t_eg_us, "dissipation.t_eg_us", reference.gamma_eg)?,
        gamma_fe: lifetime(diss.t_fe_us, "dissipation.t_fe_us", reference.gamma_fe)?,
        gamma_fg: lifetime(diss.t_fg_us, "dissipation.t_fg_us", reference.gamma_fg)?,
        gamma_phi_e: lifetime(diss.t_phi_e_us, "dissipation.t_phi_e_us", reference.gamma_phi_e)?,
        gamma_phi_f: lifetime(diss.t_phi_f_us, "dissipation.t_phi_f_us", reference.gamma_phi_f)?,
    };
    let include_dissipation = or_notice(diss.enabled, "dissipation.enabled", true);

    let sim = or_notice(doc.sim, "sim", Sim::default());
    let n_max = or_notice(sim.n_max, "sim.n_max", DEFAULT_N_MAX);
    for (key, v) in [("sim.dt_ps", sim.dt_ps), ("sim.t_final_ns", sim.t_final_ns)] {
        if let Some(x) = v.filter(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Config(format!("`{key}` must be positive, got {x}")));
        }
    }

    let spec = SystemSpec {
        omega_eg,
        omega_fg,
        delta,
        g,
        mu,
        omega,
        omega_fe,
        gcs_ratio,
        dissipation,
        n_max,
        include_crosstalk,
        include_leakage: pulse.leakage.unwrap_or(true),
        include_dissipation,
    };
    spec.check()?;

    let axes = doc
        .sweep
        .map(|s| s.axes)
        .unwrap_or_default()
        .iter()
        .map(resolve_axis)
        .collect::<Result<Vec<_>>>()?;

    let mut scenario = Scenario::new(spec);
    scenario.mu_ratio = mu_ratio;
    scenario.dt_ps = sim.dt_ps;
    scenario.t_final_ns = sim.t_final_ns;
    Ok(Config { scenario, axes })
}

fn resolve_axis(axis: &Axis) -> Result<SweepAxis> {
    let param: Param = axis.param.parse()?;
    match (&axis.values, axis.min, axis.max, axis.count) {
        (Some(v), None, None, None) => SweepAxis::list(param, v.clone()),
        (None, Some(lo), Some(hi), Some(count)) => SweepAxis::linear(param, lo, hi, count),
        _ => Err(Error::Config(format!(
            "sweep axis `{}` needs either `values` or all of `min`, `max` and `count`",
            axis.param
        ))),
    }
}

/// Write a configuration that parses back to the same scenario. Couplings
/// are written as explicit `g_mhz`, so no matching is redone on reading.
pub fn serialize(config: &Config) -> Result<String> {
    let s = &config.scenario;
    let spec = &s.spec;
    let d = &spec.dissipation;
    let us = units::us_from_rate;
    let doc = Document {
        qutrit: Some(Qutrit {
            omega_eg_ghz: Some(units::to_ghz(spec.omega_eg)),
            omega_fg_ghz: Some(units::to_ghz(spec.omega_fg)),
        }),
        resonators: Some(Resonators {
            delta_ghz: Some(spec.delta.iter().map(|&x| units::to_ghz(x)).collect()),
        }),
        couplings: Some(Couplings {
            c1: None,
            g_mhz: Some(spec.g.iter().map(|&x| units::to_mhz(x)).collect()),
            mu_ratio: Some(OneOrMany::Many(s.mu_ratio.clone())),
        }),
        pulse: Some(Pulse {
            omega_mhz: Some(units::to_mhz(spec.omega)),
            omega_fe_mhz: spec.omega_fe.map(units::to_mhz),
            leakage: Some(spec.include_leakage),
        }),
        crosstalk: Some(Crosstalk {
            enabled: Some(spec.include_crosstalk),
            gcs_ratio: Some(spec.gcs_ratio),
        }),
        dissipation: Some(Dissipation {
            enabled: Some(spec.include_dissipation),
            t_phi_e_us: Some(us(d.gamma_phi_e)),
            t_phi_f_us: Some(us(d.gamma_phi_f)),
            t_eg_us: Some(us(d.gamma_eg)),
            t_fe_us: Some(us(d.gamma_fe)),
            t_fg_us: Some(us(d.gamma_fg)),
            kappa_a_inv_us: Some(OneOrMany::Many(d.kappa_a.iter().map(|&k| us(k)).collect())),
            kappa_b_inv_us: Some(OneOrMany::Many(d.kappa_b.iter().map(|&k| us(k)).collect())),
        }),
        sim: Some(Sim {
            n_max: Some(spec.n_max),
            dt_ps: s.dt_ps,
            t_final_ns: s.t_final_ns,
        }),
        sweep: (!config.axes.is_empty()).then(|| Sweep {
            axes: config
                .axes
                .iter()
                .map(|a| Axis {
                    param: a.param.name().into(),
                    values: Some(a.values.clone()),
                    ..Default::default()
                })
                .collect(),
        }),
    };
    toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))
}
