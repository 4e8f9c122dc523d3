use std::sync::Arc;

use kinesim_core::robot_model::{load_model, Catalog};
use kinesim_core::session::{decode_log, encode_log, replay, Session};
use kinesim_testkit::{fuzz_commands, PLANAR_2R_DOCUMENT};

use crate::{ensure, Outcome};

pub fn session_replay() -> Outcome {
    let mut models: Vec<_> = Catalog::builtin().models().to_vec();
    models.push(Arc::new(load_model(PLANAR_2R_DOCUMENT).map_err(|e| e.to_string())?));
    let mut total = 0;
    let mut accepted = 0;
    for (m, model) in models.iter().enumerate() {
        let commands = fuzz_commands(model, 60 + m as u64, 10_000);
        let mut live = Session::new("replay", model.clone());
        for c in &commands {
            if live.apply(c).unwrap_or(false) {
                accepted += 1;
            }
            ensure!(
                model.within_limits(&live.state().q),
                "{}: q left its limits after {}: {:?}",
                model.name(),
                c.name(),
                live.state().q
            );
        }
        // The recorded form is the line-delimited log, not the in-memory list.
        let log = encode_log(&commands);
        let decoded = decode_log(&log).map_err(|e| e.to_string())?;
        let again = replay("replay", model.clone(), &decoded);
        let a = serde_json::to_string(live.state()).map_err(|e| e.to_string())?;
        let b = serde_json::to_string(again.state()).map_err(|e| e.to_string())?;
        ensure!(a == b, "{}: replayed state differs", model.name());
        let qa: Vec<u64> = live.state().q.iter().map(|v| v.to_bits()).collect();
        let qb: Vec<u64> = again.state().q.iter().map(|v| v.to_bits()).collect();
        ensure!(qa == qb, "{}: replayed q differs in bits", model.name());
        total += commands.len();
    }
    Ok(format!(
        "{} logs, {total} commands ({accepted} accepted): final states bit-identical, q always within limits",
        models.len()
    ))
}
