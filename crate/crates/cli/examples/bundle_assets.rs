//! Regenerates the files in `assets/`: teleportation protocols for N = 2, 3,
//! a depolarizing channel and the experiment configurations used in the docs.
//!
//! Run with `cargo run -p telelab-cli --example bundle_assets`.

use std::path::Path;

use serde_json::json;
use telelab::channels::depolarizing;
use telelab::io::{write_json, ChannelFile, ProtocolFile};
use telelab::protocol::ResourceProtocol;

fn main() -> telelab::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    std::fs::create_dir_all(&dir)?;
    for n in [2, 3] {
        let qt = ResourceProtocol::teleportation(n)?;
        write_json(dir.join(format!("qt_n{n}.json")), &ProtocolFile::from_protocol(&qt))?;
    }
    write_json(dir.join("bare_n2.json"), &ProtocolFile::from_protocol(&ResourceProtocol::bare(2)))?;
    write_json(dir.join("depolarizing_0.5.json"), &ChannelFile::from_channel(&depolarizing(0.5, 2)?))?;
    let configs = [
        ("no_communication.json", json!({"N": 2, "P": 2, "measurement": "none", "channel": "depolarizing_0.5.json", "evaluationBudget": 20000, "restarts": 20, "seed": 20240601})),
        ("fixed_mu.json", json!({"N": 2, "P": 2, "measurement": "full", "muFixed": [0.9238795325112867, 0.3826834323650898], "channel": "depolarizing_0.5.json", "evaluationBudget": 20000, "restarts": 20, "seed": 20240602})),
        ("warm_start.json", json!({"N": 2, "P": 2, "measurement": "full", "warmStart": true, "channel": "depolarizing_0.5.json", "evaluationBudget": 2000, "restarts": 4, "seed": 20240603})),
        ("sweep.json", json!({"N": 2, "P": 2, "measurement": "full", "warmStart": true, "channel": "depolarizing_0.5.json", "evaluationBudget": 1200, "restarts": 4, "seed": 20240604})),
    ];
    for (name, value) in configs {
        write_json(dir.join(name), &value)?;
    }
    Ok(())
}
