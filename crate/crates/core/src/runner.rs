//! Experiment orchestration: JSON configs, seeded runs, artifact emission.
//!
//! A run reads an [`ExperimentConfig`], builds the map and the initial cloud,
//! minimizes the (optionally augmented) energy, and writes everything a later
//! inspection needs into one output directory:
//!
//! - `cloud_{iter:06}.csv` at the snapshot cadence, plus `cloud_final.csv`
//! - `metrics.csv` with header `iter,value,grad_inf,delta` (delta column is
//!   empty when no pair potential is active)
//! - `quality.csv` when a reference set is configured
//! - `manifest.json` echoing the fully resolved config next to the outcome,
//!   so a rerun from the manifest reproduces the cloud and metrics files
//!   byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, MapSystem};
use crate::energy::{CloudObjective, LJParams};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, PointCloud};
use crate::optimize::{minimize, OptimOptions, OptimRun};
use crate::sampling;
use crate::verify::{self, QualityReport, ReferenceSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl MapSpec {
    pub fn build(&self) -> Result<MapSystem> {
        dynamics::from_name(&self.kind, &self.params)
            .map_err(|e| Error::config("map", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn build(&self) -> Result<AxisBox> {
        AxisBox::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| Error::config("box", e.to_string()))
    }
}

/// Initial-cloud generator. `kind` is one of `uniform_random`, `grid`,
/// `halton`; `counts` belongs to `grid` only, `skip` to `halton` only.
/// Random initialization draws from the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip: Option<u64>,
}

impl InitSpec {
    fn validate(&self, n: usize, dim: usize) -> Result<()> {
        match self.kind.as_str() {
            "uniform_random" | "halton" => {
                if self.counts.is_some() {
                    return Err(Error::config(
                        "init.counts",
                        format!("not a parameter of `{}`", self.kind),
                    ));
                }
                if self.kind == "uniform_random" && self.skip.is_some() {
                    return Err(Error::config("init.skip", "not a parameter of `uniform_random`"));
                }
            }
            "grid" => {
                if self.skip.is_some() {
                    return Err(Error::config("init.skip", "not a parameter of `grid`"));
                }
                let counts = self
                    .counts
                    .as_ref()
                    .ok_or_else(|| Error::config("init.counts", "required for `grid`"))?;
                if counts.len() != dim {
                    return Err(Error::config(
                        "init.counts",
                        format!("{} axis counts for a {}-dimensional map", counts.len(), dim),
                    ));
                }
                let prod: usize = counts.iter().product();
                if prod != n {
                    return Err(Error::config(
                        "init.counts",
                        format!("counts multiply to {prod}, but n = {n}"),
                    ));
                }
            }
            other => {
                return Err(Error::config(
                    "init.kind",
                    format!("unknown generator `{other}` (uniform_random, grid, halton)"),
                ));
            }
        }
        Ok(())
    }

    fn sample(&self, domain: &AxisBox, n: usize, seed: u64) -> Result<PointCloud> {
        match self.kind.as_str() {
            "uniform_random" => sampling::uniform_random(domain, n, seed),
            "grid" => sampling::grid(domain, self.counts.as_ref().expect("validated")),
            "halton" => sampling::halton(domain, n, self.skip.unwrap_or(0)),
            other => Err(Error::config("init.kind", format!("unknown generator `{other}`"))),
        }
    }
}

/// Pair-potential settings. `delta` is the starting well radius; when absent
/// it is derived from the box volume via [`delta_init`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LJSpec {
    #[serde(default = "default_lj_p")]
    pub p: u32,
    pub m: usize,
    #[serde(default = "default_lj_mu")]
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_lj_p() -> u32 {
    1
}

fn default_lj_mu() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSpec {
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_wolfe_c1")]
    pub wolfe_c1: f64,
    #[serde(default = "default_wolfe_c2")]
    pub wolfe_c2: f64,
    /// Cloud snapshot cadence in iterations; 0 keeps only the final cloud.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_grad_tol() -> f64 {
    1e-6
}

fn default_max_iters() -> usize {
    500
}

fn default_memory() -> usize {
    10
}

fn default_wolfe_c1() -> f64 {
    1e-4
}

fn default_wolfe_c2() -> f64 {
    0.9
}

fn default_snapshot_every() -> usize {
    10
}

impl Default for OptimSpec {
    fn default() -> Self {
        Self {
            grad_tol: default_grad_tol(),
            max_iters: default_max_iters(),
            memory: default_memory(),
            wolfe_c1: default_wolfe_c1(),
            wolfe_c2: default_wolfe_c2(),
            snapshot_every: default_snapshot_every(),
        }
    }
}

impl OptimSpec {
    fn to_options(&self) -> OptimOptions {
        OptimOptions {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            memory: self.memory,
            wolfe_c1: self.wolfe_c1,
            wolfe_c2: self.wolfe_c2,
            snapshot_every: self.snapshot_every,
        }
    }
}

/// Reference-set spec. `kind` selects the generator; only the fields of that
/// generator may be set. `trajectory_sample` may omit `map` inside an
/// experiment config, in which case the experiment's own map is simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl ReferenceSpec {
    /// Field names that the given kind accepts (besides `kind`).
    fn allowed(kind: &str) -> Option<&'static [&'static str]> {
        match kind {
            "point_singleton" => Some(&["point"]),
            "interval_grid" => Some(&["a", "b", "n"]),
            "segment_grid" => Some(&["n"]),
            "disk_sample" => Some(&["radius", "n"]),
            "trajectory_sample" => Some(&["map", "start", "transient", "samples"]),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let allowed = Self::allowed(&self.kind).ok_or_else(|| {
            Error::config("reference.kind", format!("unknown reference `{}`", self.kind))
        })?;
        let set: [(&str, bool); 9] = [
            ("point", self.point.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("n", self.n.is_some()),
            ("radius", self.radius.is_some()),
            ("map", self.map.is_some()),
            ("start", self.start.is_some()),
            ("transient", self.transient.is_some()),
            ("samples", self.samples.is_some()),
        ];
        for (name, present) in set {
            if present && !allowed.contains(&name) {
                return Err(Error::config(
                    format!("reference.{name}"),
                    format!("not a parameter of `{}`", self.kind),
                ));
            }
        }
        Ok(())
    }

    fn require<T: Clone>(field: &Option<T>, name: &str) -> Result<T> {
        field
            .clone()
            .ok_or_else(|| Error::config(format!("reference.{name}"), "required"))
    }

    /// Builds the reference sample. `fallback_map` backs a `trajectory_sample`
    /// without an explicit `map` (the surrounding experiment's map).
    pub fn build(&self, fallback_map: Option<&MapSpec>) -> Result<ReferenceSet> {
        self.validate()?;
        let wrap = |e: Error| match e {
            Error::Config { .. } => e,
            other => Error::config("reference", other.to_string()),
        };
        match self.kind.as_str() {
            "point_singleton" => {
                verify::point_singleton(Self::require(&self.point, "point")?).map_err(wrap)
            }
            "interval_grid" => verify::interval_grid(
                Self::require(&self.a, "a")?,
                Self::require(&self.b, "b")?,
                Self::require(&self.n, "n")?,
            )
            .map_err(wrap),
            "segment_grid" => verify::segment_grid(Self::require(&self.n, "n")?).map_err(wrap),
            "disk_sample" => verify::disk_sample(
                Self::require(&self.radius, "radius")?,
                Self::require(&self.n, "n")?,
            )
            .map_err(wrap),
            "trajectory_sample" => {
                let map_spec = match (&self.map, fallback_map) {
                    (Some(spec), _) => spec.clone(),
                    (None, Some(spec)) => spec.clone(),
                    (None, None) => {
                        return Err(Error::config(
                            "reference.map",
                            "required outside an experiment config",
                        ));
                    }
                };
                let map = map_spec.build()?;
                verify::trajectory_sample(
                    &map,
                    &Self::require(&self.start, "start")?,
                    Self::require(&self.transient, "transient")?,
                    Self::require(&self.samples, "samples")?,
                )
                .map_err(wrap)
            }
            other => Err(Error::config(
                "reference.kind",
                format!("unknown reference `{other}`"),
            )),
        }
    }
}

/// One experiment: map, sampling box, initial cloud, objective, optimizer
/// settings, optional reference for quality reporting, output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapSpec,
    #[serde(rename = "box")]
    pub domain: BoxSpec,
    pub init: InitSpec,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lj: Option<LJSpec>,
    #[serde(default)]
    pub optim: OptimSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    pub output: String,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Cheap structural validation; returns the built map and box.
    pub fn validate(&self) -> Result<(MapSystem, AxisBox)> {
        let map = self.map.build()?;
        let domain = self.domain.build()?;
        if domain.dim() != map.dim() {
            return Err(Error::config(
                "box",
                format!("box is {}-dimensional, map `{}` is {}-dimensional", domain.dim(), map.name(), map.dim()),
            ));
        }
        if self.n == 0 {
            return Err(Error::config("n", "need at least one point"));
        }
        self.init.validate(self.n, map.dim())?;
        if let Some(lj) = &self.lj {
            let params = LJParams {
                p: lj.p,
                m: lj.m,
                mu: lj.mu,
                delta: lj.delta.unwrap_or(1.0),
            };
            params
                .validate(self.n)
                .map_err(|e| Error::config("lj", e.to_string()))?;
            if let Some(delta) = lj.delta {
                if !delta.is_finite() {
                    return Err(Error::config("lj.delta", "must be finite"));
                }
            }
        }
        self.optim
            .to_options()
            .validate()
            .map_err(|e| Error::config("optim", e.to_string()))?;
        if let Some(reference) = &self.reference {
            reference.validate()?;
        }
        Ok((map, domain))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Starting well radius: the radius at which `n` equal balls have the same
/// total volume as the box, `(vol(Q) / (n · ω_d))^{1/d}` with `ω_d` the unit
/// ball volume.
pub fn delta_init(domain: &AxisBox, n: usize) -> f64 {
    let d = domain.dim();
    (domain.volume() / (n as f64 * unit_ball_volume(d))).powf(1.0 / d as f64)
}

fn unit_ball_volume(d: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_d = ω_{d-2} · 2π/d
    let mut prev = 1.0f64;
    let mut cur = 2.0f64;
    if d == 0 {
        return prev;
    }
    for k in 2..=d {
        let next = prev * 2.0 * std::f64::consts::PI / k as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Everything a finished run produced, with the trace still in memory.
#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub delta0: Option<f64>,
    pub initial_value: f64,
    pub run: OptimRun,
    pub final_cloud: PointCloud,
    pub delta_final: Option<f64>,
    pub quality: Option<QualityReport>,
    pub runtime_ms: u128,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta0: Option<f64>,
    initial_value: f64,
    iterations: usize,
    termination: &'a str,
    final_value: f64,
    final_grad_inf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_final: Option<f64>,
    runtime_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    quality: Option<QualityReport>,
}

/// Executes one experiment end to end and writes its artifacts.
///
/// `out_override` and `seed_override` replace the config's `output` and
/// `seed`; the manifest echoes whatever was actually used, so rerunning the
/// manifest's `config` object reproduces the cloud and metrics bytes.
pub fn run(
    config: &ExperimentConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunArtifacts> {
    let started = Instant::now();
    let (map, domain) = config.validate()?;
    let seed = seed_override.unwrap_or(config.seed);
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&config.output));

    let cloud0 = config.init.sample(&domain, config.n, seed)?;
    let lj_params = config.lj.as_ref().map(|spec| LJParams {
        p: spec.p,
        m: spec.m,
        mu: spec.mu,
        delta: spec.delta.unwrap_or_else(|| delta_init(&domain, config.n)),
    });
    let delta0 = lj_params.as_ref().map(|p| p.delta);

    let objective = CloudObjective::new(&map, config.n, lj_params.clone())?;
    let z0 = objective.pack(&cloud0, delta0)?;

    // The metrics file reports delta per iteration, which lives only in
    // snapshots; augmented runs therefore snapshot every step and write
    // cloud files at the configured cadence themselves.
    let file_cadence = config.optim.snapshot_every;
    let mut opts = config.optim.to_options();
    if objective.has_lj() {
        opts.snapshot_every = 1;
    }
    let run = minimize(|z| objective.eval(z), &z0, &opts)?;
    let runtime_ms = started.elapsed().as_millis();

    let (final_cloud, delta_final) = objective.unpack(&run.final_x)?;
    let initial_value = run.trace[0].value;

    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    for row in &run.trace {
        let Some(snapshot) = &row.snapshot else { continue };
        if file_cadence == 0 || row.iter % file_cadence != 0 {
            continue;
        }
        let (cloud, _) = objective.unpack(snapshot)?;
        cloud.save_csv(out_dir.join(format!("cloud_{:06}.csv", row.iter)))?;
    }
    final_cloud.save_csv(out_dir.join("cloud_final.csv"))?;

    write_metrics(&out_dir.join("metrics.csv"), &run, &objective)?;

    let quality = match &config.reference {
        Some(spec) => {
            let reference = spec.build(Some(&config.map))?;
            let report = verify::report_quality(&final_cloud, &reference)?;
            let path = out_dir.join("quality.csv");
            let text = format!(
                "d_h,d_forward,d_backward\n{:.16e},{:.16e},{:.16e}\n",
                report.d_h, report.d_forward, report.d_backward
            );
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Some(report)
        }
        None => None,
    };

    let mut echoed = config.clone();
    echoed.seed = seed;
    echoed.output = out_dir.to_string_lossy().into_owned();
    if let (Some(lj), Some(d0)) = (echoed.lj.as_mut(), delta0) {
        lj.delta = Some(d0);
    }
    let manifest = Manifest {
        config: &echoed,
        seed,
        delta0,
        initial_value,
        iterations: run.iterations,
        termination: run.termination.as_str(),
        final_value: run.final_value,
        final_grad_inf: run.final_grad_norm,
        delta_final,
        runtime_ms,
        quality,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    Ok(RunArtifacts {
        out_dir,
        seed,
        delta0,
        initial_value,
        run,
        final_cloud,
        delta_final,
        quality,
        runtime_ms,
    })
}

fn write_metrics(path: &Path, run: &OptimRun, objective: &CloudObjective) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let nd = objective.n_points() * objective.dim();
    (|| -> std::io::Result<()> {
        writeln!(w, "iter,value,grad_inf,delta")?;
        for row in &run.trace {
            write!(w, "{},{:.16e},{:.16e},", row.iter, row.value, row.grad_inf)?;
            match (&row.snapshot, objective.has_lj()) {
                (Some(snapshot), true) => writeln!(w, "{:.16e}", snapshot[nd])?,
                _ => writeln!(w)?,
            }
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use serde_json::json;

    fn config_from(value: serde_json::Value) -> Result<ExperimentConfig> {
        serde_json::from_value(value).map_err(|e| Error::Parse {
            path: PathBuf::from("<test>"),
            message: e.to_string(),
        })
    }

    fn mini_config(output: &str) -> ExperimentConfig {
        config_from(json!({
            "map": {"kind": "linear_1d", "params": {"a": 0.1}},
            "box": {"lower": [-1.0], "upper": [1.0]},
            "init": {"kind": "uniform_random"},
            "n": 8,
            "optim": {"grad_tol": 1e-9, "max_iters": 60, "snapshot_every": 10},
            "reference": {"kind": "point_singleton", "point": [0.0]},
            "output": output,
            "seed": 7
        }))
        .unwrap()
    }

    #[test]
    fn delta_init_matches_ball_packing() {
        let square = AxisBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        assert_relative_eq!(delta_init(&square, 1024), 0.07052369794346953, max_relative = 1e-14);

        let unit = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(delta_init(&unit, 1), 0.5641895835477563, max_relative = 1e-14);

        let line = AxisBox::new(vec![-1.0], vec![1.0]).unwrap();
        assert_relative_eq!(delta_init(&line, 2), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn delta_init_inverts_to_box_volume() {
        // n balls of radius delta_init tile the box volume exactly.
        for d in 1..=4usize {
            let cube = AxisBox::centered_cube(d, 1.3);
            for n in [1usize, 7, 100] {
                let delta = delta_init(&cube, n);
                let total = n as f64 * unit_ball_volume(d) * delta.powi(d as i32);
                assert_relative_eq!(total, cube.volume(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = config_from(json!({
            "map": {"kind": "henon", "params": {"a": 1.3, "b": 0.3}},
            "box": {"lower": [-2.0, -2.0], "upper": [2.0, 2.0]},
            "init": {"kind": "grid", "counts": [4, 4]},
            "n": 16,
            "lj": {"p": 1, "m": 5, "mu": 1.0},
            "optim": {"max_iters": 50},
            "reference": {"kind": "trajectory_sample", "start": [0.1, 0.1], "transient": 100, "samples": 500},
            "output": "out/test",
            "seed": 3
        }))
        .unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
        // defaults filled in
        assert_eq!(config.optim.memory, 10);
        assert_eq!(config.optim.snapshot_every, 10);
        assert_eq!(config.lj.as_ref().unwrap().delta, None);
    }

    #[test]
    fn config_rejects_unknown_and_missing_fields() {
        let err = config_from(json!({"map": {"kind": "henon"}})).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));

        let err = config_from(json!({
            "map": {"kind": "linear_1d", "params": {"a": 0.5}},
            "box": {"lower": [-1.0], "upper": [1.0]},
            "init": {"kind": "uniform_random"},
            "n": 4,
            "output": "o",
            "seed": 1,
            "typo_field": true
        }))
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("typo_field"), "unhelpful message: {text}");
    }

    #[test]
    fn validation_reports_field_level_errors() {
        let mut config = mini_config("unused");
        config.init = InitSpec { kind: "grid".into(), counts: Some(vec![3]), skip: None };
        match config.validate().unwrap_err() {
            Error::Config { field, message } => {
                assert_eq!(field, "init.counts");
                assert!(message.contains("multiply"), "{message}");
            }
            other => panic!("wrong error class: {other:?}"),
        }

        let mut config = mini_config("unused");
        config.map.kind = "lorenz".into();
        assert!(matches!(config.validate().unwrap_err(), Error::Config { field, .. } if field == "map"));

        let mut config = mini_config("unused");
        config.domain = BoxSpec { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        assert!(matches!(config.validate().unwrap_err(), Error::Config { field, .. } if field == "box"));

        let mut config = mini_config("unused");
        config.lj = Some(LJSpec { p: 1, m: 8, mu: 1.0, delta: None });
        assert!(matches!(config.validate().unwrap_err(), Error::Config { field, .. } if field == "lj"));

        let mut config = mini_config("unused");
        config.reference.as_mut().unwrap().radius = Some(1.0);
        assert!(
            matches!(config.validate().unwrap_err(), Error::Config { field, .. } if field == "reference.radius")
        );
    }

    #[test]
    fn load_config_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        fs::write(&path, "{not json").unwrap();
        match load_config(&path).unwrap_err() {
            Error::Parse { path: p, .. } => assert_eq!(p, path),
            other => panic!("wrong error class: {other:?}"),
        }
        match load_config(&dir.path().join("missing.json")).unwrap_err() {
            Error::Io { .. } => {}
            other => panic!("wrong error class: {other:?}"),
        }
    }

    #[test]
    fn mini_run_emits_all_artifacts_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let out_a = dir.path().join("a");
        let config = mini_config(out_a.to_str().unwrap());
        let artifacts = run(&config, None, None).unwrap();

        assert!(out_a.join("cloud_000000.csv").is_file());
        assert!(out_a.join("cloud_final.csv").is_file());
        assert!(out_a.join("quality.csv").is_file());
        let metrics = fs::read_to_string(out_a.join("metrics.csv")).unwrap();
        let mut lines = metrics.lines();
        assert_eq!(lines.next().unwrap(), "iter,value,grad_inf,delta");
        assert_eq!(metrics.lines().count(), artifacts.run.iterations + 2);
        // plain energy: delta column stays empty
        assert!(metrics.lines().nth(1).unwrap().ends_with(','));
        assert!(artifacts.quality.unwrap().d_h < 1e-3);

        // the manifest's config block reproduces the run byte for byte
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], json!(7));
        assert_eq!(manifest["termination"], json!("grad_tol"));
        let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
        let out_b = dir.path().join("b");
        run(&echoed, Some(&out_b), None).unwrap();
        for name in ["cloud_final.csv", "metrics.csv", "cloud_000000.csv"] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn seed_override_changes_the_cloud_and_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s");
        let config = mini_config(out.to_str().unwrap());
        let artifacts = run(&config, None, Some(99)).unwrap();
        assert_eq!(artifacts.seed, 99);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config"]["seed"], json!(99));
    }

    #[test]
    fn augmented_run_fills_the_delta_column() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("lj");
        let config = config_from(json!({
            "map": {"kind": "henon", "params": {"a": 1.3, "b": 0.3}},
            "box": {"lower": [-2.0, -2.0], "upper": [2.0, 2.0]},
            "init": {"kind": "grid", "counts": [3, 3]},
            "n": 9,
            "lj": {"m": 3, "mu": 0.1},
            "optim": {"max_iters": 5, "snapshot_every": 2},
            "output": out.to_str().unwrap(),
            "seed": 1
        }))
        .unwrap();
        let artifacts = run(&config, None, None).unwrap();
        let expected = delta_init(&config.domain.build().unwrap(), 9);
        assert_relative_eq!(artifacts.delta0.unwrap(), expected, max_relative = 1e-15);
        assert!(artifacts.delta_final.is_some());

        let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
        for line in metrics.lines().skip(1) {
            let delta: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!(delta.is_finite());
        }
        // cloud files still follow the configured cadence, not every step
        assert!(out.join("cloud_000000.csv").is_file());
        assert!(!out.join("cloud_000001.csv").exists());
        assert!(out.join("cloud_000002.csv").is_file());

        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert!(manifest["delta_final"].as_f64().unwrap().is_finite());
        assert_relative_eq!(
            manifest["config"]["lj"]["delta"].as_f64().unwrap(),
            expected,
            max_relative = 1e-15
        );
    }

    #[test]
    fn zero_cadence_keeps_only_the_final_cloud() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("z");
        let mut config = mini_config(out.to_str().unwrap());
        config.optim.snapshot_every = 0;
        run(&config, None, None).unwrap();
        let clouds: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| name.starts_with("cloud_"))
            .collect();
        assert_eq!(clouds, vec!["cloud_final.csv"]);
    }

    #[test]
    fn trajectory_reference_falls_back_to_the_experiment_map() {
        let spec = ReferenceSpec {
            kind: "trajectory_sample".into(),
            point: None,
            a: None,
            b: None,
            n: None,
            radius: None,
            map: None,
            start: Some(vec![0.1, 0.1]),
            transient: Some(50),
            samples: Some(200),
        };
        let henon = MapSpec {
            kind: "henon".into(),
            params: BTreeMap::from([("a".into(), 1.3), ("b".into(), 0.3)]),
        };
        let set = spec.build(Some(&henon)).unwrap();
        assert_eq!(set.sample.len(), 200);
        assert!(matches!(
            spec.build(None).unwrap_err(),
            Error::Config { field, .. } if field == "reference.map"
        ));
    }
}
