//! Config text in, resolved configuration or a config error out. Any panic
//! or an error with an exit code other than 2 is a bug.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let raw = dephasing_cli::parse_raw(text);
    let resolved = dephasing_cli::parse_config(text);
    match (&raw, &resolved) {
        (Err(_), Ok(_)) => panic!("resolved a config that did not parse"),
        (_, Err(e)) => assert_eq!(e.exit_code(), 2, "{e}"),
        (Ok(_), Ok(cfg)) => {
            let t = cfg.times();
            assert!(!t.is_empty());
            assert!(t.iter().all(|x| x.is_finite() && *x >= 0.0));
            assert!(!cfg.s_values().is_empty());
            assert!(!cfg.betas().is_empty());
        }
    }
});
