//! Batch experiment front end: typed configs, validation, dispatch and
//! artifact writing. One experiment per invocation; summaries are
//! byte-reproducible given (config, seed).

use crate::density;
use crate::energy::{self, MinimizeOptions, Recovery2dOptions};
use crate::error::{Error, Result};
use crate::flow::{self, BoundaryCondition, FlowOptions};
use crate::functionals::{GridFunction, GrowthFunction, HessianNormMode, JumpCost};
use crate::geometry::{Point, Rect};
use crate::limit::{self, BorelFn};
use crate::profile::{self, ProfileOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Profile(ProfileParams),
    Gamma1d(Gamma1dParams),
    Gamma2d(Gamma2dParams),
    Slicing(SlicingParams),
    Density(DensityParams),
    Flow(FlowParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileParams {
    pub a: f64,
    pub s: f64,
    #[serde(default = "default_profile_n")]
    pub n: usize,
}

fn default_profile_n() -> usize {
    512
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gamma1dParams {
    pub a: f64,
    pub s: f64,
    pub nus: Vec<f64>,
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gamma2dParams {
    pub shape: String,
    pub nu: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    512
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicingParams {
    pub input: PathBuf,
    pub xi: [f64; 2],
    pub nlines: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityParams {
    pub input: PathBuf,
    pub eps: f64,
    pub delta: f64,
    pub theta: String,
    pub samples: usize,
    /// Margin by which the input is extended before lattice sampling.
    #[serde(default)]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowParams {
    pub n: usize,
    pub nu: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub bc: String,
    pub init: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub constraint: String,
}

/// Check every precondition of the chosen command; an empty list means
/// `run_experiment` will not reject the config.
pub fn validate_config(config: &ExperimentConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut need = |ok: bool, field: &str, value: String, constraint: &str| {
        if !ok {
            v.push(Violation {
                field: field.into(),
                value,
                constraint: constraint.into(),
            });
        }
    };
    match &config.command {
        Command::Profile(p) => {
            need(
                (0.0..1.0).contains(&p.a),
                "a",
                p.a.to_string(),
                "a must lie in [0,1)",
            );
            need(p.s >= 0.0, "s", p.s.to_string(), "s must be >= 0");
            need(p.n >= 32, "n", p.n.to_string(), "n must be >= 32");
        }
        Command::Gamma1d(p) => {
            need(
                (0.0..1.0).contains(&p.a),
                "a",
                p.a.to_string(),
                "a must lie in [0,1)",
            );
            need(p.s >= 0.0, "s", p.s.to_string(), "s must be >= 0");
            need(!p.nus.is_empty(), "nus", format!("{:?}", p.nus), "need >= 1 value");
            for &nu in &p.nus {
                need(
                    nu > 0.0 && nu <= 1.0,
                    "nus",
                    nu.to_string(),
                    "nu must lie in (0,1]",
                );
            }
            need(
                p.length > 0.0,
                "length",
                p.length.to_string(),
                "length must be positive",
            );
        }
        Command::Gamma2d(p) => {
            need(
                p.shape == "halfplane" || p.shape == "disk",
                "shape",
                p.shape.clone(),
                "shape must be halfplane or disk",
            );
            need(
                p.nu > 0.0 && p.nu <= 1.0,
                "nu",
                p.nu.to_string(),
                "nu must lie in (0,1]",
            );
            need(p.grid >= 64, "grid", p.grid.to_string(), "grid must be >= 64");
        }
        Command::Slicing(p) => {
            need(
                p.input.exists(),
                "input",
                p.input.display().to_string(),
                "partition file must exist",
            );
            let norm = (p.xi[0].powi(2) + p.xi[1].powi(2)).sqrt();
            need(norm > 0.0, "xi", format!("{:?}", p.xi), "xi must be nonzero");
            need(
                p.nlines >= 16,
                "nlines",
                p.nlines.to_string(),
                "nlines must be >= 16",
            );
        }
        Command::Density(p) => {
            need(
                p.input.exists(),
                "input",
                p.input.display().to_string(),
                "partition file must exist",
            );
            need(p.eps > 0.0, "eps", p.eps.to_string(), "eps must be positive");
            need(
                p.delta >= 8.0 * p.eps,
                "delta",
                p.delta.to_string(),
                "delta must be >= 8 eps",
            );
            need(
                parse_theta(&p.theta).is_ok(),
                "theta",
                p.theta.clone(),
                "theta must be sqrt or power:<exponent in (0,1]>",
            );
            need(
                p.samples >= 50,
                "samples",
                p.samples.to_string(),
                "samples must be >= 50",
            );
        }
        Command::Flow(p) => {
            need(p.n >= 8, "n", p.n.to_string(), "n must be >= 8");
            need(
                p.nu > 0.0 && p.nu <= 1.0,
                "nu",
                p.nu.to_string(),
                "nu must lie in (0,1]",
            );
            need(
                p.t_end > 0.0,
                "T",
                p.t_end.to_string(),
                "T must be positive",
            );
            need(
                p.bc == "periodic" || p.bc == "neumann",
                "bc",
                p.bc.clone(),
                "bc must be periodic or neumann",
            );
            need(
                p.init == "ramp" || p.init == "sine" || p.init == "step",
                "init",
                p.init.clone(),
                "init must be ramp, sine or step",
            );
        }
    }
    v
}

pub fn parse_theta(spec: &str) -> Result<JumpCost> {
    if spec == "sqrt" {
        return Ok(JumpCost::sqrt());
    }
    if let Some(rest) = spec.strip_prefix("power:") {
        let e: f64 = rest
            .parse()
            .map_err(|_| Error::Validation(format!("bad theta exponent: {rest}")))?;
        return JumpCost::power(e);
    }
    Err(Error::Validation(format!("unknown theta: {spec}")))
}

/// Short hash of the canonical config JSON, embedded in every artifact.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn write_csv(
    path: &Path,
    hash: &str,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# config {hash}")?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Run one experiment; returns the summary that the binary prints as JSON.
pub fn run_experiment(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations
            .iter()
            .map(|v| format!("{}: {} ({})", v.field, v.constraint, v.value))
            .collect();
        return Err(Error::Validation(msgs.join("; ")));
    }
    let hash = config_hash(config);
    match &config.command {
        Command::Profile(p) => run_profile(p, &hash, &config.out),
        Command::Gamma1d(p) => run_gamma1d(p, config.seed, &hash, &config.out),
        Command::Gamma2d(p) => run_gamma2d(p, &hash, &config.out),
        Command::Slicing(p) => run_slicing(p, &hash, &config.out),
        Command::Density(p) => run_density(p, config.seed, &hash, &config.out),
        Command::Flow(p) => run_flow(p, &hash, &config.out),
    }
}

fn run_profile(p: &ProfileParams, hash: &str, out: &Path) -> Result<serde_json::Value> {
    let opts = ProfileOptions {
        n: p.n,
        ..ProfileOptions::default()
    };
    let sol = profile::solve_profile(p.a, p.s, p.n, &opts)?;
    let sigma = profile::sigma_estimate(p.a, &opts)?;
    let n = sol.psi.shape[0];
    let h = sol.eta / (n - 1) as f64;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    energy::d1_line(&sol.psi.values, h, &mut d1);
    energy::d2_line(&sol.psi.values, h, &mut d2);
    write_csv(
        out,
        hash,
        &["t", "psi", "psi_prime", "psi_second"],
        (0..n).map(|i| vec![i as f64 * h, sol.psi.values[i], d1[i], d2[i]]),
    )?;
    Ok(json!({
        "a": sol.a,
        "s": sol.s,
        "eta": sol.eta,
        "energy": sol.energy,
        "sigmaEstimate": sigma,
        "innerIterations": sol.inner_iterations,
        "outerIterations": sol.outer_iterations,
        "artifact": out.display().to_string(),
        "config": hash,
    }))
}

fn run_gamma1d(
    p: &Gamma1dParams,
    seed: u64,
    hash: &str,
    out: &Path,
) -> Result<serde_json::Value> {
    let phi = GrowthFunction::perona_malik();
    let popts = ProfileOptions::default();
    let sigma = profile::sigma_estimate(p.a, &popts)?;
    let kappa = crate::functionals::jump_exponent(p.a)?;
    let sigma_target = sigma * p.s.powf(kappa);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &nu in &p.nus {
        let n = ((32.0 / nu * p.length).ceil() as usize + 1).max(256);
        let mopts = MinimizeOptions {
            seed,
            ..MinimizeOptions::default()
        };
        let rep = energy::minimize_fnu_1d(p.s, p.length, nu, &phi, n, &mopts)?;
        rows.push(vec![
            nu,
            rep.energy.total,
            rep.energy.hessian_term,
            rep.energy.gradient_term,
            rep.tv,
            sigma_target,
        ]);
        entries.push(json!({
            "nu": nu,
            "energy": rep.energy.total,
            "hessianTerm": rep.energy.hessian_term,
            "gradientTerm": rep.energy.gradient_term,
            "tv": rep.tv,
            "iterations": rep.iterations,
        }));
    }
    write_csv(
        out,
        hash,
        &["nu", "energy", "hessianTerm", "gradientTerm", "tv", "sigmaTarget"],
        rows.into_iter(),
    )?;
    Ok(json!({
        "a": p.a,
        "s": p.s,
        "sigmaTarget": sigma_target,
        "runs": entries,
        "artifact": out.display().to_string(),
        "config": hash,
    }))
}

fn run_gamma2d(p: &Gamma2dParams, hash: &str, out: &Path) -> Result<serde_json::Value> {
    let popts = ProfileOptions::default();
    let prof = profile::solve_profile(0.0, 1.0, 512, &popts)?;
    let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
    let n = p.grid;
    let (dist, interface_len, snap) = match p.shape.as_str() {
        "halfplane" => {
            // seam aligned with the node just right of the midline
            let h = 1.0 / (n - 1) as f64;
            let offset = h * (0.5 / h).ceil();
            (
                energy::signed_distance_half_plane(rect, n, n, Point::new(1.0, 0.0), offset)?,
                1.0,
                true,
            )
        }
        "disk" => (
            energy::signed_distance_disk(rect, n, n, Point::new(0.5, 0.5), 0.3)?,
            2.0 * std::f64::consts::PI * 0.3,
            false,
        ),
        other => return Err(Error::Validation(format!("unknown shape {other}"))),
    };
    let ropts = Recovery2dOptions {
        centered: !snap,
        snap_width: snap,
    };
    let u = energy::build_recovery_2d(&dist, 1.0, &prof, p.nu, &ropts)?;
    let phi = GrowthFunction::counting();
    let e = energy::fnu_2d(&u, p.nu, &phi, HessianNormMode::SpectralRadius)?;
    let target = prof.energy * interface_len;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    if u.values.len() <= 1 << 20 {
        u.save_json(out)?;
    } else {
        let header = out.with_extension("header.json");
        let csv = out.with_extension("values.csv");
        u.save_split(&header, &csv)?;
    }
    Ok(json!({
        "shape": p.shape,
        "nu": p.nu,
        "grid": p.grid,
        "energy": e.total,
        "hessianTerm": e.hessian_term,
        "gradientTerm": e.gradient_term,
        "target": target,
        "relError": (e.total - target) / target,
        "artifact": out.display().to_string(),
        "config": hash,
    }))
}

fn run_slicing(p: &SlicingParams, hash: &str, out: &Path) -> Result<serde_json::Value> {
    let u = crate::functionals::PiecewisePoly2::load_json(&p.input)?;
    let bad = u.validate();
    if !bad.is_empty() {
        return Err(Error::Validation(format!(
            "input partition invalid: {}",
            bad.join("; ")
        )));
    }
    let xi = Point::new(p.xi[0], p.xi[1]).normalize();
    let (lhs, rhs) = limit::slicing_identity_check(&u, xi, &BorelFn::Const(1.0), p.nlines)?;
    let theta = JumpCost::sqrt();
    let summary = json!({
        "xi": [xi.x, xi.y],
        "nLines": p.nlines,
        "lhs": lhs,
        "rhs": rhs,
        "absError": (lhs - rhs).abs(),
        "jumpLength": u.jump_length(),
        "limitEnergySqrt": limit::limit_energy_2d(&u, &theta),
        "config": hash,
    });
    std::fs::write(out, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn run_density(
    p: &DensityParams,
    seed: u64,
    hash: &str,
    out: &Path,
) -> Result<serde_json::Value> {
    let raw = crate::functionals::PiecewisePoly2::load_json(&p.input)?;
    let theta = parse_theta(&p.theta)?;
    let omega = raw.domain;
    let margin = p.margin.unwrap_or(3.0 * p.eps);
    let u = raw.extend_constant(margin)?;
    let avg = density::averaged_inequality_check(&u, &omega, p.eps, &theta, p.samples, seed)?;
    let rep = density::polytope_approximate(&u, &omega, p.delta, p.eps, &theta, seed)?;
    let summary = json!({
        "meanD": avg.mean_d,
        "stdErr": avg.std_err,
        "e0": avg.e0,
        "energyApprox": rep.energy_approx,
        "energyTarget": rep.energy_target,
        "l1Error": rep.l1_error,
        "anisotropyDefect": rep.anisotropy_defect,
        "defectConstant": rep.defect_constant,
        "faceMismatch": rep.face_mismatch,
        "cubeShift": rep.cube_shift,
        "cubeDirections": rep.cube_directions.iter().map(|c| json!({
            "center": [c.center.x, c.center.y],
            "xi": [c.xi.x, c.xi.y],
            "measure": c.measure_norm,
        })).collect::<Vec<_>>(),
        "microShifts": rep.micro_shifts,
        "eps": p.eps,
        "delta": p.delta,
        "samples": p.samples,
        "seed": seed,
        "config": hash,
    });
    std::fs::write(out, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn run_flow(p: &FlowParams, hash: &str, out: &Path) -> Result<serde_json::Value> {
    let phi = GrowthFunction::perona_malik();
    let bc = if p.bc == "periodic" {
        BoundaryCondition::Periodic
    } else {
        BoundaryCondition::NaturalNeumann
    };
    let u0 = match p.init.as_str() {
        "ramp" => GridFunction::from_fn_1d(0.0, 1.0, p.n, |x| {
            let t = ((x - 0.1) / 0.8).clamp(0.0, 1.0);
            3.0 * t * t - 2.0 * t * t * t
        })?,
        "sine" => GridFunction::from_fn_1d(0.0, 1.0, p.n, |x| {
            (2.0 * std::f64::consts::PI * x).sin()
        })?,
        "step" => GridFunction::from_fn_1d(0.0, 1.0, p.n, |x| if x < 0.5 { 0.0 } else { 1.0 })?,
        other => return Err(Error::Validation(format!("unknown init {other}"))),
    };
    let opts = FlowOptions::default();
    let snapshot_every = p.t_end / 10.0;
    let (state, snapshots) = flow::flow_run(&u0, p.t_end, p.nu, &phi, bc, snapshot_every, &opts)?;
    let h = u0.spacing()[0];
    write_csv(
        out,
        hash,
        &["t", "x", "u"],
        snapshots.iter().flat_map(|(t, g)| {
            let t = *t;
            g.values
                .iter()
                .enumerate()
                .map(move |(i, &v)| vec![t, i as f64 * h, v])
                .collect::<Vec<_>>()
        }),
    )?;
    let energy_path = out.with_extension("energy.csv");
    write_csv(
        &energy_path,
        hash,
        &["t", "total"],
        state.energy_history.iter().map(|&(t, e)| vec![t, e]),
    )?;
    let slope_tol = 0.1 / (6f64.sqrt() * p.nu);
    let plateaus = flow::detect_plateaus(&state.u, slope_tol)?;
    Ok(json!({
        "tEnd": state.t,
        "accepted": state.accepted,
        "rejected": state.rejected,
        "finalEnergy": state.energy_history.last().unwrap().1,
        "meanDrift": (state.u.mean() - u0.mean()).abs(),
        "plateaus": plateaus.segments.len(),
        "plateauCoverage": plateaus.coverage,
        "artifact": out.display().to_string(),
        "energyArtifact": energy_path.display().to_string(),
        "config": hash,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> ExperimentConfig {
        ExperimentConfig {
            command,
            seed: 7,
            out: std::env::temp_dir().join("gamma_pm_cfg_test.csv"),
        }
    }

    #[test]
    fn validation_catches_bad_nu() {
        let c = cfg(Command::Gamma1d(Gamma1dParams {
            a: 0.0,
            s: 1.0,
            nus: vec![1.5],
            length: 1.0,
        }));
        let v = validate_config(&c);
        assert!(v.iter().any(|x| x.field == "nus" && x.constraint.contains("(0,1]")));
    }

    #[test]
    fn validation_catches_bad_a() {
        let c = cfg(Command::Profile(ProfileParams {
            a: 1.0,
            s: 1.0,
            n: 128,
        }));
        let v = validate_config(&c);
        assert!(v.iter().any(|x| x.field == "a" && x.constraint.contains("[0,1)")));
    }

    #[test]
    fn well_formed_config_passes() {
        let c = cfg(Command::Profile(ProfileParams {
            a: 0.0,
            s: 1.0,
            n: 128,
        }));
        assert!(validate_config(&c).is_empty());
    }

    #[test]
    fn hash_is_stable_and_config_sensitive() {
        let c1 = cfg(Command::Profile(ProfileParams {
            a: 0.0,
            s: 1.0,
            n: 128,
        }));
        let c2 = cfg(Command::Profile(ProfileParams {
            a: 0.0,
            s: 2.0,
            n: 128,
        }));
        assert_eq!(config_hash(&c1), config_hash(&c1));
        assert_ne!(config_hash(&c1), config_hash(&c2));
    }

    #[test]
    fn theta_parsing() {
        assert!(parse_theta("sqrt").is_ok());
        assert!(parse_theta("power:0.7").is_ok());
        assert!(parse_theta("power:1.5").is_err());
        assert!(parse_theta("cube").is_err());
    }
}
