//! Named policy experiments, terminal-regime diagnostics and parameter sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationConfig, Method, Trajectory};
use crate::model::{GrowthPolicy, ModelParams, PiWeights, SystemState, DEFAULT_OPINION_CAP};

/// Default cap on the number of cells in one sweep.
pub const DEFAULT_MAX_CELLS: usize = 1_000_000;

pub const PRESET_NAMES: [&str; 8] = [
    "S1_strong",
    "S1_weak",
    "S2_one_sided",
    "S3_low",
    "S3_mid",
    "S3_high",
    "Macro_fixed",
    "Macro_regulated",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    TFVDominant,
    NEVDominant,
    Coexistence,
    Unclassified,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::TFVDominant => "TFVDominant",
            Regime::NEVDominant => "NEVDominant",
            Regime::Coexistence => "Coexistence",
            Regime::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

impl Regime {
    /// Ordering along the opinion axis; `None` for [`Regime::Unclassified`].
    pub fn rank(self) -> Option<i8> {
        match self {
            Regime::TFVDominant => Some(-1),
            Regime::Coexistence => Some(0),
            Regime::NEVDominant => Some(1),
            Regime::Unclassified => None,
        }
    }
}

/// Terminal-`x` cut-offs separating the three regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeThresholds {
    /// `x_T` above this is NEV dominance.
    pub nev: f64,
    /// `x_T` below this is TFV dominance.
    pub tfv: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            nev: 0.5,
            tfv: -0.5,
        }
    }
}

impl RegimeThresholds {
    pub fn classify(&self, x_terminal: f64) -> Regime {
        if !x_terminal.is_finite() {
            Regime::Unclassified
        } else if x_terminal > self.nev {
            Regime::NEVDominant
        } else if x_terminal < self.tfv {
            Regime::TFVDominant
        } else {
            Regime::Coexistence
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub params: ModelParams<f64>,
    pub initial: SystemState<f64>,
    pub integration: IntegrationConfig<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_regime: Option<Regime>,
    #[serde(default)]
    pub thresholds: RegimeThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub x_terminal: f64,
    #[serde(rename = "pi_F_terminal")]
    pub pi_f_terminal: f64,
    #[serde(rename = "pi_E_terminal")]
    pub pi_e_terminal: f64,
    #[serde(rename = "N_terminal")]
    pub n_terminal: f64,
    #[serde(rename = "peak_Pi")]
    pub peak_pi: f64,
    pub regime: Regime,
    pub thresholds: RegimeThresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_regime: Option<Regime>,
    /// Whether `regime` matches `expected_regime`, when one is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches_expected: Option<bool>,
}

impl RegimeDiagnostics {
    pub fn from_trajectory(
        trajectory: &Trajectory<f64>,
        thresholds: RegimeThresholds,
        expected: Option<Regime>,
    ) -> Result<Self> {
        let last = trajectory.last().ok_or(Error::EmptyTrajectory)?;
        let regime = thresholds.classify(last.x);
        Ok(RegimeDiagnostics {
            x_terminal: last.x,
            pi_f_terminal: last.pi_f,
            pi_e_terminal: last.pi_e,
            n_terminal: last.n,
            peak_pi: trajectory.peak_pi().unwrap_or(f64::NAN),
            regime,
            thresholds,
            expected_regime: expected,
            matches_expected: expected.map(|e| e == regime),
        })
    }
}

fn shared_params(
    a0: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    growth: GrowthPolicy<f64>,
) -> ModelParams<f64> {
    ModelParams {
        a0,
        a1,
        a2,
        a3,
        v: 0.6,
        gamma_f: 0.9,
        theta_e: 0.2,
        alpha1: 0.03,
        alpha2: 0.07,
        growth,
        pi_weights: PiWeights::default(),
        opinion_cap: DEFAULT_OPINION_CAP,
    }
}

fn preset_spec(
    name: &str,
    params: ModelParams<f64>,
    integration: IntegrationConfig<f64>,
    expected_regime: Option<Regime>,
) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        params,
        initial: SystemState::new(-0.1, 0.0, 0.0, 10.0),
        integration,
        expected_regime,
        thresholds: RegimeThresholds::default(),
    }
}

/// Fixed-fleet runs are smooth enough for plain RK4 on the base grid.
fn fixed_fleet_integration() -> IntegrationConfig<f64> {
    IntegrationConfig::fixed(0.0, 200.0, 0.01, Method::Rk4)
}

/// Once the fleet grows the externality loop turns stiff (the `x` relaxation
/// rate scales with `N`), so these presets use the implicit method with step
/// splitting.
fn growing_fleet_integration() -> IntegrationConfig<f64> {
    IntegrationConfig {
        rel_tol: 1e-8,
        dt_min: Some(1e-7),
        ..IntegrationConfig::adaptive(0.0, 200.0, 0.01, Method::Radau5)
    }
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let g = GrowthPolicy::Fixed { g: 0.1 };
    let s3 = |a0| shared_params(a0, 1.5, 0.5, -0.5, g);
    let spec = match name {
        "S1_strong" => preset_spec(
            name,
            shared_params(0.0, 1.5, 0.0, 0.0, GrowthPolicy::frozen()),
            fixed_fleet_integration(),
            Some(Regime::TFVDominant),
        ),
        "S1_weak" => preset_spec(
            name,
            shared_params(0.0, 0.5, 0.0, 0.0, GrowthPolicy::frozen()),
            fixed_fleet_integration(),
            Some(Regime::Coexistence),
        ),
        "S2_one_sided" => preset_spec(
            name,
            shared_params(1.0, 1.5, 0.5, 0.0, g),
            growing_fleet_integration(),
            Some(Regime::NEVDominant),
        ),
        "S3_low" => preset_spec(
            name,
            s3(0.5),
            growing_fleet_integration(),
            Some(Regime::Coexistence),
        ),
        "S3_mid" => preset_spec(
            name,
            s3(2.5),
            growing_fleet_integration(),
            Some(Regime::Coexistence),
        ),
        "S3_high" => preset_spec(
            name,
            s3(4.5),
            growing_fleet_integration(),
            Some(Regime::Coexistence),
        ),
        "Macro_fixed" => preset_spec(name, s3(2.5), growing_fleet_integration(), None),
        "Macro_regulated" => preset_spec(
            name,
            ModelParams {
                growth: GrowthPolicy::Regulated {
                    g_bar: 0.1,
                    k1: 0.01,
                    k2: 0.01,
                },
                ..s3(2.5)
            },
            growing_fleet_integration(),
            None,
        ),
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(spec)
}

pub fn all_presets() -> Vec<ScenarioSpec> {
    PRESET_NAMES.iter().map(|n| preset(n).unwrap()).collect()
}

/// Integrates a scenario and classifies its terminal state.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<(Trajectory<f64>, RegimeDiagnostics)> {
    let trajectory = integrate(&spec.params, &spec.initial, &spec.integration)?;
    let diagnostics =
        RegimeDiagnostics::from_trajectory(&trajectory, spec.thresholds, spec.expected_regime)?;
    Ok((trajectory, diagnostics))
}

/// A sweep coordinate: a number for scalar paths, a whole policy for `growth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Growth(GrowthPolicy<f64>),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(v) => write!(f, "{v}"),
            AxisValue::Growth(GrowthPolicy::Fixed { g }) => write!(f, "fixed(g={g})"),
            AxisValue::Growth(GrowthPolicy::Regulated { g_bar, k1, k2 }) => {
                write!(f, "regulated(g_bar={g_bar};k1={k1};k2={k2})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<AxisValue>,
}

fn default_max_cells() -> usize {
    DEFAULT_MAX_CELLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    pub axes: Vec<SweepAxis>,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

impl SweepSpec {
    pub fn cell_count(&self) -> Result<usize> {
        if self.axes.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one axis".into()));
        }
        let mut total: usize = 1;
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "axis {} has no values",
                    axis.path
                )));
            }
            total = total.saturating_mul(axis.values.len());
        }
        if total > self.max_cells {
            return Err(Error::SweepTooLarge {
                cells: total,
                cap: self.max_cells,
            });
        }
        Ok(total)
    }

    /// Coordinates of cell `index`; the last axis varies fastest.
    pub fn coordinates(&self, mut index: usize) -> Vec<AxisValue> {
        let mut out = vec![AxisValue::Number(0.0); self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let len = axis.values.len();
            out[k] = axis.values[index % len].clone();
            index /= len;
        }
        out
    }
}

fn expect_number(path: &str, value: &AxisValue) -> Result<f64> {
    match value {
        AxisValue::Number(v) => Ok(*v),
        AxisValue::Growth(_) => Err(Error::InvalidConfig(format!(
            "axis {path} takes numbers, got a growth policy"
        ))),
    }
}

/// Applies one sweep coordinate to a scenario. Paths name a field of the
/// parameters (`a0`, `gamma_F`, `growth.g_bar`, ...), of the initial state
/// (`initial.x`, `initial.N`, ...) or of the integration settings
/// (`integration.dt`, ...). The bare path `growth` replaces the whole policy.
pub fn apply_axis(spec: &mut ScenarioSpec, path: &str, value: &AxisValue) -> Result<()> {
    let path = path.strip_prefix("params.").unwrap_or(path);
    if path == "growth" {
        return match value {
            AxisValue::Growth(g) => {
                spec.params.growth = *g;
                Ok(())
            }
            AxisValue::Number(_) => Err(Error::InvalidConfig(
                "axis growth takes growth policy objects".into(),
            )),
        };
    }
    let v = expect_number(path, value)?;
    let p = &mut spec.params;
    let slot: &mut f64 = match path {
        "a0" => &mut p.a0,
        "a1" => &mut p.a1,
        "a2" => &mut p.a2,
        "a3" => &mut p.a3,
        "v" => &mut p.v,
        "gamma_F" => &mut p.gamma_f,
        "theta_E" => &mut p.theta_e,
        "alpha1" => &mut p.alpha1,
        "alpha2" => &mut p.alpha2,
        "opinion_cap" => &mut p.opinion_cap,
        "pi_weights.k1" => &mut p.pi_weights.k1,
        "pi_weights.k2" => &mut p.pi_weights.k2,
        "growth.g" => match &mut p.growth {
            GrowthPolicy::Fixed { g } => g,
            _ => return Err(wrong_policy(path)),
        },
        "growth.g_bar" | "growth.k1" | "growth.k2" => match &mut p.growth {
            GrowthPolicy::Regulated { g_bar, k1, k2 } => match path {
                "growth.g_bar" => g_bar,
                "growth.k1" => k1,
                _ => k2,
            },
            _ => return Err(wrong_policy(path)),
        },
        "initial.x" => &mut spec.initial.x,
        "initial.pi_F" => &mut spec.initial.pi_f,
        "initial.pi_E" => &mut spec.initial.pi_e,
        "initial.N" => &mut spec.initial.n,
        "integration.t0" => &mut spec.integration.t0,
        "integration.t_end" => &mut spec.integration.t_end,
        "integration.dt" => &mut spec.integration.dt,
        "integration.rel_tol" => &mut spec.integration.rel_tol,
        "thresholds.nev" => &mut spec.thresholds.nev,
        "thresholds.tfv" => &mut spec.thresholds.tfv,
        _ => return Err(Error::InvalidConfig(format!("unknown sweep path {path}"))),
    };
    *slot = v;
    Ok(())
}

fn wrong_policy(path: &str) -> Error {
    Error::InvalidConfig(format!("{path} does not exist on the base growth policy"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub coordinates: Vec<AxisValue>,
    pub outcome: std::result::Result<RegimeDiagnostics, Error>,
}

fn run_cell(sweep: &SweepSpec, cell: usize) -> SweepRow {
    let coordinates = sweep.coordinates(cell);
    let outcome = (|| {
        let mut spec = sweep.base.clone();
        for (axis, value) in sweep.axes.iter().zip(&coordinates) {
            apply_axis(&mut spec, &axis.path, value)?;
        }
        run_scenario(&spec).map(|(_, d)| d)
    })();
    SweepRow {
        cell,
        coordinates,
        outcome,
    }
}

/// Evaluates every cell of the grid. `jobs = None` uses all hardware threads.
/// Rows come back sorted by cell index whatever the scheduling; a failing cell
/// records its error in place.
pub fn run_sweep(sweep: &SweepSpec, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    let cells = sweep.cell_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        (0..cells)
            .into_par_iter()
            .map(|c| run_cell(sweep, c))
            .collect()
    });
    rows.sort_by_key(|r| r.cell);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Positive root of `tanh(a1 x) = x` by bisection.
    fn herd_root(a1: f64) -> f64 {
        let (mut lo, mut hi) = (1e-6, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (a1 * mid).tanh() - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn preset_values() {
        assert_eq!(preset("S1_strong").unwrap().params.a1, 1.5);
        assert_eq!(preset("S1_weak").unwrap().params.a1, 0.5);
        assert_eq!(preset("S3_high").unwrap().params.a0, 4.5);
        assert_eq!(
            preset("S2_one_sided").unwrap().params.growth,
            GrowthPolicy::Fixed { g: 0.1 }
        );
        let reg = preset("Macro_regulated").unwrap();
        assert_eq!(
            reg.params.growth,
            GrowthPolicy::Regulated {
                g_bar: 0.1,
                k1: 0.01,
                k2: 0.01
            }
        );
        for spec in all_presets() {
            assert_eq!(spec.initial, SystemState::new(-0.1, 0.0, 0.0, 10.0));
            assert_eq!((spec.integration.t_end, spec.integration.dt), (200.0, 0.01));
            assert_eq!(spec, preset(&spec.name).unwrap());
        }
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(
            preset("S4").unwrap_err(),
            Error::UnknownPreset("S4".to_string())
        );
    }

    #[test]
    fn thresholds_classify() {
        let t = RegimeThresholds::default();
        assert_eq!(t.classify(0.51), Regime::NEVDominant);
        assert_eq!(t.classify(-0.51), Regime::TFVDominant);
        assert_eq!(t.classify(0.5), Regime::Coexistence);
        assert_eq!(t.classify(f64::NAN), Regime::Unclassified);
    }

    #[test]
    fn strong_herding_mirrors() {
        let xbar = herd_root(1.5);
        let spec = preset("S1_strong").unwrap();
        let (_, down) = run_scenario(&spec).unwrap();
        assert_eq!(down.regime, Regime::TFVDominant);
        assert!((down.x_terminal + xbar).abs() < 1e-3);
        assert_eq!(down.matches_expected, Some(true));

        let mut up = spec.clone();
        up.initial.x = 0.1;
        let (_, up) = run_scenario(&up).unwrap();
        assert!((up.x_terminal + down.x_terminal).abs() < 1e-6);
    }

    #[test]
    fn weak_herding_meets_in_the_middle() {
        let (_, d) = run_scenario(&preset("S1_weak").unwrap()).unwrap();
        assert_eq!(d.regime, Regime::Coexistence);
        assert!(d.x_terminal.abs() < 1e-3);
    }

    #[test]
    fn coordinates_last_axis_fastest() {
        let sweep = SweepSpec {
            base: preset("S1_weak").unwrap(),
            axes: vec![
                SweepAxis {
                    path: "a0".into(),
                    values: vec![AxisValue::Number(0.0), AxisValue::Number(1.0)],
                },
                SweepAxis {
                    path: "a1".into(),
                    values: vec![
                        AxisValue::Number(0.1),
                        AxisValue::Number(0.2),
                        AxisValue::Number(0.3),
                    ],
                },
            ],
            max_cells: DEFAULT_MAX_CELLS,
        };
        assert_eq!(sweep.cell_count().unwrap(), 6);
        assert_eq!(
            sweep.coordinates(4),
            vec![AxisValue::Number(1.0), AxisValue::Number(0.2)]
        );
    }

    #[test]
    fn sweep_cap_and_empty_axes() {
        let mut sweep = SweepSpec {
            base: preset("S1_weak").unwrap(),
            axes: vec![SweepAxis {
                path: "a0".into(),
                values: vec![AxisValue::Number(0.0); 5],
            }],
            max_cells: 4,
        };
        assert_eq!(
            sweep.cell_count().unwrap_err(),
            Error::SweepTooLarge { cells: 5, cap: 4 }
        );
        sweep.axes[0].values.clear();
        assert!(matches!(sweep.cell_count(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn axis_paths() {
        let mut spec = preset("S3_mid").unwrap();
        apply_axis(&mut spec, "params.a0", &AxisValue::Number(3.0)).unwrap();
        apply_axis(&mut spec, "growth.g", &AxisValue::Number(0.05)).unwrap();
        apply_axis(&mut spec, "initial.N", &AxisValue::Number(20.0)).unwrap();
        assert_eq!(spec.params.a0, 3.0);
        assert_eq!(spec.params.growth, GrowthPolicy::Fixed { g: 0.05 });
        assert_eq!(spec.initial.n, 20.0);
        assert!(apply_axis(&mut spec, "growth.k1", &AxisValue::Number(0.1)).is_err());
        assert!(apply_axis(&mut spec, "nope", &AxisValue::Number(0.1)).is_err());
        let reg = GrowthPolicy::Regulated {
            g_bar: 0.1,
            k1: 0.0,
            k2: 0.0,
        };
        apply_axis(&mut spec, "growth", &AxisValue::Growth(reg)).unwrap();
        apply_axis(&mut spec, "growth.k1", &AxisValue::Number(0.2)).unwrap();
        assert!(matches!(
            spec.params.growth,
            GrowthPolicy::Regulated { k1, .. } if k1 == 0.2
        ));
    }

    #[test]
    fn failed_cells_do_not_abort_and_order_is_canonical() {
        let mut base = preset("S1_weak").unwrap();
        base.integration.t_end = 5.0;
        let sweep = SweepSpec {
            base,
            axes: vec![SweepAxis {
                path: "a0".into(),
                values: [0.0, 600.0, -0.5, 0.5]
                    .into_iter()
                    .map(AxisValue::Number)
                    .collect(),
            }],
            max_cells: DEFAULT_MAX_CELLS,
        };
        let serial = run_sweep(&sweep, Some(1)).unwrap();
        let parallel = run_sweep(&sweep, Some(4)).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(
            serial.iter().map(|r| r.cell).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        assert!(matches!(
            serial[1].outcome,
            Err(Error::OpinionOverflow { .. })
        ));
        assert!(serial[0].outcome.is_ok() && serial[3].outcome.is_ok());
    }
}
