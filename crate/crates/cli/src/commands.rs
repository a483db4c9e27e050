use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use telelab::channels::{depolarizing, depolarizing_locc_simulable, KrausChannel};
use telelab::io::{self, matrix_to_record, ExperimentConfig};
use telelab::optimize::{optimize as run_optimizer, sweep_mu};
use telelab::protocol::AncillaResource;
use telelab::qmath::{fidelity, maximally_entangled, random_state, DensityMatrix};
use telelab::teleport::teleport_run;
use telelab::theorem::{block_relation_residual, cauchy_schwarz_violation, necessity_check, no_communication_report};

use crate::output::{emit, emit_text, CliError, CommandResult};
use crate::{ChannelSource, Common};

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn load_channel(src: &ChannelSource, fallback: Option<&Path>) -> Result<(KrausChannel, Value), CliError> {
    match (&src.file, src.depolarizing, fallback) {
        (Some(path), _, _) => Ok((io::load_channel(path)?, json!({ "file": path }))),
        (None, Some(p), _) => Ok((depolarizing(p, src.dim)?, json!({ "depolarizing": p, "dim": src.dim }))),
        (None, None, Some(path)) => Ok((io::load_channel(path)?, json!({ "file": path }))),
        (None, None, None) => Err(CliError::Input("no channel given: pass --channel FILE or --depolarizing P".into())),
    }
}

pub fn channel_info(src: &ChannelSource, common: &Common) -> Result<(), CliError> {
    let (ch, echo) = load_channel(src, None)?;
    let choi = ch.choi();
    let mut outputs = json!({
        "dim": ch.dim(),
        "krausCount": ch.kraus().len(),
        "choiEigenvalues": choi.eigenvalues(),
        "rank": ch.rank(common.tol),
        "fullRank": ch.rank(common.tol) == ch.dim() * ch.dim(),
        "traceResidual": ch.trace_preservation_residual(),
        "choiTrace": telelab::qmath::trace(choi.matrix()).re,
    });
    if let Some(p) = src.depolarizing {
        outputs["loccSimulable"] = json!(depolarizing_locc_simulable(p)?);
    }
    let inputs = json!({ "channel": echo, "tol": common.tol });
    emit(common.out.as_deref(), &CommandResult::new("channel-info", inputs, outputs, None))
}

pub fn teleport(
    src: &ChannelSource,
    state: Option<&Path>,
    random: Option<u64>,
    mu: Option<Vec<f64>>,
    common: &Common,
) -> Result<(), CliError> {
    let (ch, echo) = load_channel(src, None)?;
    let n = ch.dim();
    let (rho, state_echo): (DensityMatrix, Value) = match (state, random) {
        (Some(path), _) => (io::load_state(path)?, json!({ "file": path })),
        (None, Some(seed)) => (random_state(n, seed), json!({ "random": seed })),
        (None, None) => return Err(CliError::Input("no input state: pass --state FILE or --random SEED".into())),
    };
    if rho.dim() != n {
        return Err(telelab::Error::DimensionMismatch { expected: n, found: rho.dim() }.into());
    }
    let resource = match &mu {
        Some(m) => AncillaResource::normalized(m.clone())?,
        None => AncillaResource::maximal(n),
    };
    if resource.local_dim() != n {
        return Err(telelab::Error::DimensionMismatch {
            expected: n,
            found: resource.local_dim(),
        }
        .into());
    }
    let run = teleport_run(&rho, &ch, &resource.state())?;
    let outputs = json!({
        "outputState": matrix_to_record(run.output.matrix()),
        "fidelity": fidelity(&run.output, &rho)?,
        "branchProbabilities": run.branch_probabilities,
        "mu": resource.mu(),
        "sumMu": resource.sum(),
    });
    let inputs = json!({ "channel": echo, "state": state_echo, "mu": mu, "tol": common.tol });
    emit(common.out.as_deref(), &CommandResult::new("teleport", inputs, outputs, random))
}

pub fn protocol_verify(protocol: &Path, src: &ChannelSource, common: &Common) -> Result<(), CliError> {
    let proto = io::load_protocol(protocol)?;
    let (ch, echo) = load_channel(src, None)?;
    if ch.dim() != proto.dim() {
        return Err(telelab::Error::DimensionMismatch {
            expected: proto.dim(),
            found: ch.dim(),
        }
        .into());
    }
    let inputs = json!({ "protocol": protocol, "channel": echo, "tol": common.tol });
    let det = proto.determinism_residuals();
    let blocks = block_relation_residual(&proto.block_operators());
    let determinism = json!({
        "senderCompleteness": det.sender_completeness,
        "senderCoCompleteness": det.sender_co_completeness,
        "receiverUnitarity": det.receiver_unitarity,
        "blockRelations": blocks,
    });
    if det.max() > telelab::qmath::TOL {
        let outputs = json!({ "deterministic": false, "determinism": determinism });
        emit(common.out.as_deref(), &CommandResult::new("protocol-verify", inputs, outputs, None))?;
        return Err(CliError::Semantic(format!(
            "protocol is not deterministic: largest determinism residual {:.3e}",
            det.max()
        )));
    }
    let choi = ch.choi();
    let via_map = proto.control_map(&choi)?;
    let direct = proto.effective_choi(&ch)?;
    let gap = (via_map.matrix() - direct.matrix()).norm();
    let target = maximally_entangled(proto.dim())?.projector();
    let residual = (via_map.matrix() - target).norm();
    let necessity = necessity_check(&proto, &ch, 1e-9)?;
    let proof = if proto.messages() == 1 {
        to_value(&no_communication_report(&proto)?)
    } else {
        Value::Null
    };
    let outputs = json!({
        "deterministic": true,
        "N": proto.dim(),
        "P": proto.local_dim(),
        "M": proto.messages(),
        "determinism": determinism,
        "consistencyGap": gap,
        "residual": residual,
        "entanglementFidelity": proto.entanglement_fidelity(&ch)?,
        "channelRank": ch.rank(common.tol),
        "entanglementBound": to_value(&necessity.bound),
        "cauchySchwarzViolation": cauchy_schwarz_violation(&proto),
        "theoremViolation": necessity.violation,
        "proofReport": proof,
    });
    emit(common.out.as_deref(), &CommandResult::new("protocol-verify", inputs, outputs, None))?;
    if necessity.violation {
        return Err(CliError::Semantic(format!(
            "THEOREM-VIOLATION: residual {:.3e} with sum of mu {:.12} below sqrt(N) = {:.12}",
            residual, necessity.bound.sum, necessity.bound.bound
        )));
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<(ExperimentConfig, Option<PathBuf>), CliError> {
    let mut cfg: ExperimentConfig = io::read_json(path)?;
    if let Some(s) = seed {
        cfg.optimization.seed = s;
    }
    cfg.optimization.validate()?;
    let channel = cfg
        .channel
        .as_ref()
        .map(|c| path.parent().unwrap_or(Path::new(".")).join(c));
    Ok((cfg, channel))
}

pub fn optimize(
    src: &ChannelSource,
    config: &Path,
    seed: Option<u64>,
    trace: Option<&Path>,
    common: &Common,
) -> Result<(), CliError> {
    let (cfg, cfg_channel) = load_config(config, seed)?;
    let (ch, echo) = load_channel(src, cfg_channel.as_deref())?;
    let result = run_optimizer(&ch, &cfg.base()?, &cfg.optimization)?;
    if let Some(path) = trace {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["restart", "evaluation", "bestFidelity"])?;
        for (r, t) in result.traces.iter().enumerate() {
            for (k, f) in t.iter().enumerate() {
                w.write_record([r.to_string(), k.to_string(), f.to_string()])?;
            }
        }
        w.flush()?;
    }
    let mut outputs = to_value(&result);
    if let Some(obj) = outputs.as_object_mut() {
        // traces go to the CSV file
        obj.remove("traces");
    }
    let inputs = json!({ "channel": echo, "config": to_value(&cfg) });
    emit(
        common.out.as_deref(),
        &CommandResult::new("optimize", inputs, outputs, Some(cfg.optimization.seed)),
    )
}

pub fn sweep(src: &ChannelSource, thetas: &[f64], config: &Path, seed: Option<u64>, common: &Common) -> Result<(), CliError> {
    let (cfg, cfg_channel) = load_config(config, seed)?;
    let (ch, echo) = load_channel(src, cfg_channel.as_deref())?;
    if let Some(bad) = thetas.iter().find(|t| !(0.0..=std::f64::consts::FRAC_PI_2).contains(*t)) {
        return Err(CliError::Input(format!("theta {bad} is outside [0, pi/2]")));
    }
    let rows = sweep_mu(&ch, thetas, &cfg.base()?, &cfg.optimization)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| CliError::Input(e.to_string()))?)
        .map_err(|e| CliError::Input(e.to_string()))?;
    match &common.out {
        Some(path) => {
            emit_text(Some(path), &table)?;
            let inputs = json!({ "channel": echo, "thetaGrid": thetas, "config": to_value(&cfg) });
            let outputs = json!({ "table": path, "rows": rows });
            emit(None, &CommandResult::new("sweep", inputs, outputs, Some(cfg.optimization.seed)))
        }
        None => emit_text(None, &table),
    }
}
