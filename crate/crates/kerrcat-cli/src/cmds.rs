//! The six subcommands: each resolves its inputs, runs the library, writes
//! artifacts plus a manifest, and returns a one-line summary for stdout.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use kerrcat::cat_states::{acs_minus, acs_plus};
use kerrcat::circuit_map::{
    circuit_to_effective, design_outcome_json, effective_to_drives, CircuitParams, HardwareBase,
};
use kerrcat::compiler::{
    compile_request, plan_preparation, verify_gate, wrap_to_pi, CatParity, GateName, GateRequest,
};
use kerrcat::dynamics::{
    evolve_lindblad, evolve_schrodinger, husimi_peaks, monitor_to_csv, stable_steps,
    state_from_json, state_to_json, steady_state_alpha, Schedule,
};
use kerrcat::fock_core::wigner_grid_density;
use kerrcat::hamiltonians::{build_acs_hamiltonian, AcsParams, DriveParams, NoiseParams};
use kerrcat::spectrum::{eigensystem, gap_sweep};
use kerrcat::{wigner_grid, C64, DensityMatrix, StateVector, TruncatedSpace};
use serde::Deserialize;
use serde_json::json;

use crate::io::{
    self, complex_json, parse_grid, read_json_file, CliError, CliResult, CxIn, RunContext,
};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------- spectrum

#[derive(Args)]
pub struct SpectrumArgs {
    /// First well amplitude (mag@deg, [re,im], or a real number).
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha0: Option<C64>,
    /// Second well amplitude.
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha1: Option<C64>,
    /// Number of eigenvalues to write.
    #[arg(long, default_value_t = 12)]
    levels: usize,
    /// Kerr rate.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Fock cutoff; defaults to the adequacy rule for the requested wells.
    #[arg(long)]
    dim: Option<usize>,
    /// Gap-convergence sweep over |d|^2 = lo:hi:step with symmetric wells,
    /// instead of a single eigenvalue run.
    #[arg(long, value_name = "LO:HI:STEP", conflicts_with_all = ["alpha0", "alpha1", "levels"])]
    sweep_d2: Option<String>,
}

pub fn spectrum(ctx: &RunContext, a: &SpectrumArgs) -> CliResult<String> {
    if let Some(spec) = &a.sweep_d2 {
        let d2 = parse_grid(spec).map_err(usage)?;
        let half_max = 0.5 * d2.last().unwrap().sqrt();
        let dim = a.dim.unwrap_or_else(|| TruncatedSpace::recommended_dim(half_max));
        let space = TruncatedSpace::new(dim)?;
        let rows = gap_sweep(a.k, &d2, space)?;

        let mut csv = String::from("d_squared,numeric_gap,analytic_gap,rel_err\n");
        for r in &rows {
            csv.push_str(&io::csv_row(&[r.d_squared, r.numeric_gap, r.analytic_gap, r.rel_err]));
        }
        ctx.save("spectrum.csv", csv.as_bytes())?;
        ctx.manifest(
            "spectrum",
            json!({ "sweep_d2": spec, "k": a.k, "dim": dim }),
            Some(dim),
            json!({}),
            &["spectrum.csv"],
        )?;
        let worst = rows.iter().map(|r| r.rel_err).fold(0.0f64, f64::max);
        Ok(format!(
            "swept {} separations at dim {}; worst gap error {:.3e}; wrote {}",
            rows.len(),
            dim,
            worst,
            ctx.dir.join("spectrum.csv").display()
        ))
    } else {
        let a0 = a.alpha0.ok_or_else(|| usage("missing required field alpha0 (or use --sweep-d2)"))?;
        let a1 = a.alpha1.ok_or_else(|| usage("missing required field alpha1"))?;
        let p = AcsParams::new(a.k, a0, a1)?;
        let dim = a.dim.unwrap_or_else(|| TruncatedSpace::recommended_dim(p.max_amplitude()));
        let space = TruncatedSpace::new(dim)?;
        if a.levels == 0 || a.levels > dim {
            return Err(usage(format!("levels must be in 1..={dim}, got {}", a.levels)));
        }
        let h = build_acs_hamiltonian(space, &p)?;
        let eig = eigensystem(&h, a.levels)?;

        let mut csv = String::from("level,energy_re,energy_im\n");
        for (i, e) in eig.eigenvalues.iter().enumerate() {
            csv.push_str(&format!("{i},{:.11e},{:.11e}\n", e.re, e.im));
        }
        ctx.save("spectrum.csv", csv.as_bytes())?;
        ctx.manifest(
            "spectrum",
            json!({
                "alpha0": complex_json(a0),
                "alpha1": complex_json(a1),
                "k": a.k,
                "levels": a.levels,
                "dim": dim,
            }),
            Some(dim),
            json!({}),
            &["spectrum.csv"],
        )?;
        let ev = eig.real_eigenvalues();
        let mut summary = format!("E0 = {:.3e}", ev[0]);
        if ev.len() > 1 {
            summary.push_str(&format!(", E1-E0 = {:.3e}", ev[1] - ev[0]));
        }
        if ev.len() > 2 {
            summary.push_str(&format!(", E2-E0 = {:.3e}", ev[2] - ev[0]));
        }
        summary.push_str(&format!(
            "; {} levels in {}",
            ev.len(),
            ctx.dir.join("spectrum.csv").display()
        ));
        Ok(summary)
    }
}

// ------------------------------------------------------------------ evolve

#[derive(Args)]
pub struct EvolveArgs {
    /// JSON config file; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha0: Option<C64>,
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha1: Option<C64>,
    /// Kerr rate (hold mode only; a schedule carries its own).
    #[arg(long)]
    k: Option<f64>,
    /// Photon-loss rate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Dephasing rate.
    #[arg(long)]
    kappa_phi: Option<f64>,
    /// Hold duration when no schedule is given.
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// vacuum, acs_plus, acs_minus, or a state-JSON path.
    #[arg(long)]
    initial: Option<String>,
    /// Well-motion schedule JSON file (replaces alpha0/alpha1/t_final).
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Also write wigner.csv of the final state over this grid.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    grid: Option<String>,
}

/// File form of the evolve configuration; every field optional so inline
/// flags can fill the gaps.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolveConfig {
    alpha0: Option<CxIn>,
    alpha1: Option<CxIn>,
    k: Option<f64>,
    kappa: Option<f64>,
    kappa_phi: Option<f64>,
    t_final: Option<f64>,
    dim: Option<usize>,
    steps: Option<usize>,
    initial: Option<String>,
    schedule: Option<Schedule>,
    grid: Option<String>,
}

enum FinalState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

pub fn evolve(ctx: &RunContext, a: &EvolveArgs) -> CliResult<String> {
    let mut cfg: EvolveConfig = match &a.config {
        Some(p) => read_json_file(p)?,
        None => EvolveConfig::default(),
    };
    if a.alpha0.is_some() {
        cfg.alpha0 = a.alpha0.map(CxIn);
    }
    if a.alpha1.is_some() {
        cfg.alpha1 = a.alpha1.map(CxIn);
    }
    if a.k.is_some() {
        cfg.k = a.k;
    }
    if a.kappa.is_some() {
        cfg.kappa = a.kappa;
    }
    if a.kappa_phi.is_some() {
        cfg.kappa_phi = a.kappa_phi;
    }
    if a.t_final.is_some() {
        cfg.t_final = a.t_final;
    }
    if a.dim.is_some() {
        cfg.dim = a.dim;
    }
    if a.steps.is_some() {
        cfg.steps = a.steps;
    }
    if a.initial.is_some() {
        cfg.initial = a.initial.clone();
    }
    if let Some(p) = &a.schedule {
        cfg.schedule = Some(read_json_file(p)?);
    }
    if a.grid.is_some() {
        cfg.grid = a.grid.clone();
    }

    let schedule_mode = cfg.schedule.is_some();
    let sched = match cfg.schedule.take() {
        Some(s) => {
            if cfg.alpha0.is_some() || cfg.alpha1.is_some() || cfg.t_final.is_some() {
                return Err(usage("schedule conflicts with alpha0/alpha1/t_final"));
            }
            if cfg.k.is_some() {
                return Err(usage("k is carried by the schedule; do not set it separately"));
            }
            s
        }
        None => {
            let a0 = cfg.alpha0.ok_or_else(|| usage("missing required field alpha0"))?.0;
            let a1 = cfg.alpha1.ok_or_else(|| usage("missing required field alpha1"))?.0;
            let t = cfg.t_final.ok_or_else(|| usage("missing required field t_final"))?;
            Schedule::hold(cfg.k.unwrap_or(1.0), a0, a1, t)?
        }
    };

    let kappa = cfg.kappa.unwrap_or(0.0);
    let kappa_phi = cfg.kappa_phi.unwrap_or(0.0);
    let noise = NoiseParams::new(kappa, kappa_phi)?;
    let open = kappa > 0.0 || kappa_phi > 0.0;

    let dim = cfg
        .dim
        .unwrap_or_else(|| TruncatedSpace::recommended_dim(sched.max_amplitude()));
    let space = TruncatedSpace::new(dim)?;

    let initial = cfg.initial.clone().unwrap_or_else(|| "vacuum".into());
    let psi0 = match initial.as_str() {
        "vacuum" => StateVector::fock(space, 0)?,
        "acs_plus" | "acs_minus" => {
            let (w0, w1) = sched.wells_at(0.0);
            if initial == "acs_plus" {
                acs_plus(space, w0, w1)?
            } else {
                acs_minus(space, w0, w1)?
            }
        }
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read initial state {path}: {e}")))?;
            let v = state_from_json(&text)?;
            if v.dim() != space.dim() {
                return Err(usage(format!(
                    "initial state dim {} does not match run dim {}",
                    v.dim(),
                    space.dim()
                )));
            }
            v
        }
    };

    let steps = cfg
        .steps
        .unwrap_or_else(|| stable_steps(space, &sched, open.then_some(&noise)));

    let mut artifacts: Vec<&str> = vec!["monitor.csv"];
    let (fin, monitor) = if open {
        let rho0 = DensityMatrix::from_pure(&psi0);
        let res = evolve_lindblad(space, &sched, &rho0, &noise, steps)?;
        (FinalState::Mixed(res.final_state), res.monitor)
    } else {
        let res = evolve_schrodinger(space, &sched, &psi0, steps)?;
        (FinalState::Pure(res.final_state), res.monitor)
    };
    ctx.save("monitor.csv", monitor_to_csv(&monitor).as_bytes())?;

    let mut report = json!({
        "t_final": sched.total_time(),
        "dim": dim,
        "steps": steps,
        "final": serde_json::to_value(monitor.last().unwrap()).unwrap(),
    });
    let rho_view;
    match &fin {
        FinalState::Pure(v) => {
            ctx.save_json("final_state.json", &state_to_json(v))?;
            artifacts.push("final_state.json");
            report["kind"] = json!("pure");
            rho_view = DensityMatrix::from_pure(v);
        }
        FinalState::Mixed(r) => {
            let n = r.dim();
            let re: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| r.matrix[(i, j)].re)
                .collect();
            let im: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| r.matrix[(i, j)].im)
                .collect();
            ctx.save_json("final_density.json", &json!({ "dim": n, "re": re, "im": im }))?;
            artifacts.push("final_density.json");
            report["kind"] = json!("density");
            report["purity"] = json!(r.purity());
            rho_view = r.clone();
        }
    }

    let half_width = sched.max_amplitude() + 2.5;
    let peaks = husimi_peaks(&rho_view, half_width, 0.05, 2)?;
    report["husimi_peaks"] = json!(peaks
        .iter()
        .map(|p| json!({ "x": p.x, "p": p.p }))
        .collect::<Vec<_>>());

    if open {
        let steady = steady_state_alpha(&sched.params_at(sched.total_time()), &noise)?;
        report["steady_wells"] = json!({
            "roots": steady.roots.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "residuals": steady.residuals,
        });
    }
    ctx.save_json("report.json", &report)?;
    artifacts.push("report.json");

    if let Some(g) = &cfg.grid {
        let axis = parse_grid(g).map_err(usage)?;
        let vals = match &fin {
            FinalState::Pure(v) => wigner_grid(v, &axis, &axis)?,
            FinalState::Mixed(r) => wigner_grid_density(r, &axis, &axis)?,
        };
        let mut csv = String::from("x,p,w\n");
        for (ip, p) in axis.iter().enumerate() {
            for (ix, x) in axis.iter().enumerate() {
                csv.push_str(&io::csv_row(&[*x, *p, vals[ip * axis.len() + ix]]));
            }
        }
        ctx.save("wigner.csv", csv.as_bytes())?;
        artifacts.push("wigner.csv");
    }

    let mut params = json!({
        "kappa": kappa,
        "kappa_phi": kappa_phi,
        "dim": dim,
        "steps": steps,
        "initial": initial,
        "grid": cfg.grid,
    });
    if schedule_mode {
        params["schedule"] = serde_json::to_value(&sched).unwrap();
    } else {
        let (w0, w1) = sched.wells_at(0.0);
        params["alpha0"] = complex_json(w0);
        params["alpha1"] = complex_json(w1);
        params["k"] = json!(sched.k());
        params["t_final"] = json!(sched.total_time());
    }
    ctx.manifest("evolve", params, Some(dim), json!({ "steps": steps }), &artifacts)?;

    let last = monitor.last().unwrap();
    Ok(format!(
        "evolved to t = {:.4} ({} steps, dim {}); final energy {:.3e}, leakage {:.3e}, manifold fidelity {:.6}",
        last.t, steps, dim, last.energy, last.leakage, last.fidelity
    ))
}

// ----------------------------------------------------------------- prepare

#[derive(Args)]
pub struct PrepareArgs {
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha0: C64,
    #[arg(long, value_parser = io::parse_complex, allow_hyphen_values = true)]
    alpha1: C64,
    /// Cat parity of the target: plus or minus.
    #[arg(long, default_value = "plus")]
    parity: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Stretch every segment duration by this factor.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

pub fn prepare(ctx: &RunContext, a: &PrepareArgs) -> CliResult<String> {
    let parity = match a.parity.as_str() {
        "plus" => CatParity::Plus,
        "minus" => CatParity::Minus,
        other => return Err(usage(format!("parity must be plus or minus, got '{other}'"))),
    };
    let plan = plan_preparation(a.alpha0, a.alpha1, parity)?;
    let sched = if a.time_scale != 1.0 {
        plan.schedule.scale_durations(a.time_scale)?
    } else {
        plan.schedule.clone()
    };

    let dim = a
        .dim
        .unwrap_or_else(|| TruncatedSpace::recommended_dim(sched.max_amplitude()));
    let space = TruncatedSpace::new(dim)?;
    let steps = a.steps.unwrap_or_else(|| stable_steps(space, &sched, None));
    let psi0 = StateVector::fock(space, 0)?;
    let res = evolve_schrodinger(space, &sched, &psi0, steps)?;

    let target = match parity {
        CatParity::Plus => acs_plus(space, a.alpha0, a.alpha1)?,
        CatParity::Minus => acs_minus(space, a.alpha0, a.alpha1)?,
    };
    let amp = target.inner(&res.final_state);
    let fidelity = amp.norm_sqr();
    // Relative phase between the two lobes, read off the final state; this
    // is what the plan's winding choice controls. The overall phase of the
    // state is physically empty and not checked.
    let lobe0 = kerrcat::coherent_state(space, a.alpha0).inner(&res.final_state);
    let lobe1 = kerrcat::coherent_state(space, a.alpha1).inner(&res.final_state);
    let lobe_phase = (lobe1 / lobe0).arg();
    let lobe_phase_error = wrap_to_pi(lobe_phase - parity.target_phase());

    ctx.save_json("plan.json", &plan.to_json())?;
    ctx.save("monitor.csv", monitor_to_csv(&res.monitor).as_bytes())?;
    ctx.save_json("final_state.json", &state_to_json(&res.final_state))?;
    ctx.save_json(
        "report.json",
        &json!({
            "parity": serde_json::to_value(parity).unwrap(),
            "fidelity": fidelity,
            "lobe_phase": lobe_phase,
            "target_lobe_phase": parity.target_phase(),
            "lobe_phase_error": lobe_phase_error,
            "global_phase": amp.arg(),
            "total_time": sched.total_time(),
            "dim": dim,
            "steps": steps,
        }),
    )?;
    ctx.manifest(
        "prepare",
        json!({
            "alpha0": complex_json(a.alpha0),
            "alpha1": complex_json(a.alpha1),
            "parity": serde_json::to_value(parity).unwrap(),
            "dim": dim,
            "steps": steps,
            "time_scale": a.time_scale,
        }),
        Some(dim),
        json!({ "steps": steps }),
        &["plan.json", "monitor.csv", "final_state.json", "report.json"],
    )?;
    Ok(format!(
        "prepared {} cat with fidelity {:.6} (lobe phase error {:.2e} rad) in time {:.1}",
        a.parity,
        fidelity,
        lobe_phase_error,
        sched.total_time()
    ))
}

// -------------------------------------------------------------------- gate

#[derive(Args)]
pub struct GateArgs {
    /// Gate to compile: rz, rx, ry, or rzry.
    #[arg(long)]
    name: String,
    /// Gate angle(s); rzry takes two.
    #[arg(long = "param", allow_hyphen_values = true)]
    param: Vec<f64>,
    /// Code-space lobe amplitude.
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Simulate the schedule and report the process fidelity.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Stretch every segment duration by this factor.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
}

pub fn gate(ctx: &RunContext, a: &GateArgs) -> CliResult<String> {
    let name = match a.name.to_lowercase().as_str() {
        "rz" => GateName::Rz,
        "rx" => GateName::Rx,
        "ry" => GateName::Ry,
        "rzry" => GateName::RzRy,
        "cu" => {
            return Err(usage(
                "controlled gates need a two-mode target specification; compile them through the library",
            ))
        }
        other => return Err(usage(format!("unknown gate '{other}'; expected rz, rx, ry, or rzry"))),
    };
    let want = if name == GateName::RzRy { 2 } else { 1 };
    if a.param.len() != want {
        return Err(usage(format!(
            "gate {} takes {} angle parameter(s), got {}",
            a.name,
            want,
            a.param.len()
        )));
    }
    let req = GateRequest {
        gate: name,
        params: a.param.clone(),
        alpha: a.alpha,
    };
    let mut gate = compile_request(&req)?;
    if a.time_scale != 1.0 {
        gate = gate.with_time_scale(a.time_scale)?;
    }
    ctx.save_json("gate.json", &gate.to_json())?;

    let mut artifacts: Vec<&str> = vec!["gate.json"];
    let mut truncation = None;
    let mut summary = format!(
        "compiled {} into {} segments, total time {:.1}",
        a.name,
        gate.schedule.segments().len(),
        gate.total_time()
    );
    if a.verify {
        let dim = a
            .dim
            .unwrap_or_else(|| TruncatedSpace::recommended_dim(gate.schedule.max_amplitude()));
        let space = TruncatedSpace::new(dim)?;
        let v = verify_gate(space, &gate)?;
        ctx.save_json(
            "report.json",
            &json!({
                "gate": serde_json::to_value(v.gate).unwrap(),
                "params": a.param,
                "alpha": a.alpha,
                "process_fidelity": v.fidelity,
                "total_time": v.total_time,
                "dim": dim,
            }),
        )?;
        artifacts.push("report.json");
        truncation = Some(dim);
        summary.push_str(&format!("; process fidelity {:.6} at dim {}", v.fidelity, dim));
    }
    ctx.manifest(
        "gate",
        json!({
            "name": a.name,
            "params": a.param,
            "alpha": a.alpha,
            "time_scale": a.time_scale,
            "verify": a.verify,
            "dim": truncation,
        }),
        truncation,
        json!({}),
        &artifacts,
    )?;
    Ok(summary)
}

// ------------------------------------------------------------------ wigner

#[derive(Args)]
pub struct WignerArgs {
    /// State JSON file, as written by evolve or prepare.
    #[arg(long)]
    state: PathBuf,
    /// Phase-space axis lo:hi:step, applied to both quadratures.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    grid: String,
}

pub fn wigner(ctx: &RunContext, a: &WignerArgs) -> CliResult<String> {
    let text = fs::read_to_string(&a.state)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", a.state.display())))?;
    let psi = state_from_json(&text)?;
    let axis = parse_grid(&a.grid).map_err(usage)?;
    let vals = wigner_grid(&psi, &axis, &axis)?;

    let mut csv = String::from("x,p,w\n");
    let mut peak = (0.0f64, 0.0f64, 0.0f64);
    for (ip, p) in axis.iter().enumerate() {
        for (ix, x) in axis.iter().enumerate() {
            let w = vals[ip * axis.len() + ix];
            if w.abs() > peak.2.abs() {
                peak = (*x, *p, w);
            }
            csv.push_str(&io::csv_row(&[*x, *p, w]));
        }
    }
    ctx.save("wigner.csv", csv.as_bytes())?;
    ctx.manifest(
        "wigner",
        json!({
            "state": a.state.display().to_string(),
            "grid": a.grid,
        }),
        Some(psi.dim()),
        json!({}),
        &["wigner.csv"],
    )?;
    Ok(format!(
        "wrote {}x{} Wigner map; extremum W = {:.4} at ({:.2}, {:.2})",
        axis.len(),
        axis.len(),
        peak.2,
        peak.0,
        peak.1
    ))
}

// ----------------------------------------------------------------- circuit

#[derive(Args)]
pub struct CircuitArgs {
    /// Circuit parameter JSON for the forward map.
    #[arg(long, conflicts_with_all = ["invert", "target", "hardware"])]
    params: Option<PathBuf>,
    /// Solve drive settings for a target instead of the forward map.
    #[arg(long, requires = "target", requires = "hardware")]
    invert: bool,
    /// Target drive-form parameters JSON (with --invert).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Fixed hardware energies JSON (with --invert).
    #[arg(long)]
    hardware: Option<PathBuf>,
}

/// Drive-form target file; complex fields accept every CLI literal form.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveTargetFile {
    detuning: f64,
    #[serde(rename = "K")]
    k: f64,
    beta: CxIn,
    eta: CxIn,
    epsilon: CxIn,
}

pub fn circuit(ctx: &RunContext, a: &CircuitArgs) -> CliResult<String> {
    if a.invert {
        let target_path = a.target.as_ref().ok_or_else(|| usage("missing required field target"))?;
        let hw_path = a.hardware.as_ref().ok_or_else(|| usage("missing required field hardware"))?;
        let raw: DriveTargetFile = read_json_file(target_path)?;
        let hardware: HardwareBase = read_json_file(hw_path)?;
        hardware.validate()?;
        let target = DriveParams {
            detuning: raw.detuning,
            k: raw.k,
            beta: raw.beta.0,
            eta: raw.eta.0,
            epsilon: raw.epsilon.0,
        };
        let result = effective_to_drives(&target, &hardware);
        ctx.save_json("design.json", &design_outcome_json(&result))?;
        ctx.manifest(
            "circuit",
            json!({
                "invert": true,
                "target": {
                    "detuning": target.detuning,
                    "K": target.k,
                    "beta": complex_json(target.beta),
                    "eta": complex_json(target.eta),
                    "epsilon": complex_json(target.epsilon),
                },
                "hardware": serde_json::to_value(hardware).unwrap(),
            }),
            None,
            json!({}),
            &["design.json"],
        )?;
        let c = result?;
        Ok(format!(
            "feasible: delta1 = {:.5}, delta2 = {:.5}, cd_vd = {:.5}, omega_p = {:.6}",
            c.delta1, c.delta2, c.cd_vd, c.omega_p
        ))
    } else {
        let path = a
            .params
            .as_ref()
            .ok_or_else(|| usage("missing required field params (or use --invert)"))?;
        let circuit: CircuitParams = read_json_file(path)?;
        circuit.validate()?;
        let e = circuit_to_effective(&circuit)?;
        let d = kerrcat::circuit_map::as_drive_params(&e);
        ctx.save_json(
            "effective.json",
            &json!({
                "omega_c": e.omega_c,
                "delta": e.delta,
                "K": e.k,
                "beta": complex_json(e.beta),
                "eta": complex_json(e.eta),
                "epsilon": complex_json(e.epsilon),
                "n0": e.n0,
                "varphi0": e.varphi0,
                // positive-K convention accepted by the simulation commands
                // and by circuit --invert targets
                "drive_form": {
                    "detuning": d.detuning,
                    "K": d.k,
                    "beta": complex_json(d.beta),
                    "eta": complex_json(d.eta),
                    "epsilon": complex_json(d.epsilon),
                },
            }),
        )?;
        ctx.manifest(
            "circuit",
            json!({ "invert": false, "circuit": serde_json::to_value(circuit).unwrap() }),
            None,
            json!({}),
            &["effective.json"],
        )?;
        Ok(format!(
            "omega_c = {:.6}, K = {:.6}, |beta| = {:.6}, |eta| = {:.6}",
            e.omega_c,
            e.k,
            e.beta.norm(),
            e.eta.norm()
        ))
    }
}
