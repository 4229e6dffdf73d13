//! Parse, resolve and run: whatever a config selects must either produce a
//! table whose rows match its header or fail with a proper error. Work is
//! capped so a single input stays fast.

#![no_main]

use dephasing_cli::analysis::{cells_per_point, sweep_points};
use dephasing_cli::{execute, parse_config, Analysis, Command};
use libfuzzer_sys::fuzz_target;

const MAX_SITES: usize = 12;
const MAX_CELLS: u64 = 2_000;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mut cfg) = parse_config(text) else {
        return;
    };
    if cfg.bath.n > MAX_SITES || cfg.sweep.n.iter().any(|&n| n > MAX_SITES) {
        return;
    }
    cfg.output.path = None;
    let mut commands: Vec<Command> = Analysis::ALL.into_iter().map(Command::Analysis).collect();
    commands.push(Command::Sweep);
    for command in commands {
        let cells = match command {
            Command::Analysis(a) => cells_per_point(a, &cfg) * cfg.betas().len() as u64,
            Command::Sweep => match cfg.analysis {
                Some(a) => cells_per_point(a, &cfg) * sweep_points(&cfg).len() as u64,
                None => 0,
            },
        };
        if cells > MAX_CELLS {
            continue;
        }
        match execute(command, &cfg) {
            Ok(out) => {
                let mut lines = out.body.lines();
                let width = lines.next().map(|h| h.split(',').count());
                if cfg.output.format == dephasing_cli::Format::Csv {
                    for line in lines {
                        assert_eq!(Some(line.split(',').count()), width);
                    }
                }
            }
            Err(e) => assert!(matches!(e.exit_code(), 2 | 3), "{e}"),
        }
    }
});
