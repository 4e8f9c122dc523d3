use std::sync::Arc;

use kinesim_core::robot_model::{load_model, Catalog};
use kinesim_core::session::{decode_log, encode_log, replay, Session};
use kinesim_testkit::{fuzz_commands, PLANAR_2R_DOCUMENT};

const COMMANDS: usize = 3_000;

fn state_json(s: &Session) -> String {
    serde_json::to_string(s.state()).unwrap()
}

#[test]
fn recorded_logs_replay_bit_identically() {
    let mut models: Vec<_> = Catalog::builtin().models().to_vec();
    models.push(Arc::new(load_model(PLANAR_2R_DOCUMENT).unwrap()));
    for (m, model) in models.iter().enumerate() {
        let commands = fuzz_commands(model, 500 + m as u64, COMMANDS);
        let mut live = Session::new("fuzz", model.clone());
        let mut accepted = 0;
        for c in &commands {
            let before = live.revision();
            match live.apply(c) {
                Ok(true) => {
                    accepted += 1;
                    assert_eq!(live.revision(), before + 1);
                }
                Ok(false) | Err(_) => assert_eq!(live.revision(), before),
            }
            assert!(live.model().within_limits(&live.state().q), "{}: {:?}", model.name(), live.state().q);
        }
        assert!(accepted > COMMANDS / 10, "{}: only {accepted} commands accepted", model.name());

        let log = encode_log(&commands);
        let decoded = decode_log(&log).unwrap();
        assert_eq!(decoded, commands);
        let again = replay("fuzz", model.clone(), &decoded);
        assert_eq!(state_json(&again), state_json(&live), "{}", model.name());
        assert_eq!(serde_json::to_string(&again.event()).unwrap(), serde_json::to_string(&live.event()).unwrap());
    }
}
