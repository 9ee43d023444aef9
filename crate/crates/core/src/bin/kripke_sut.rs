//! Serves a Kripke structure file over the SUT line protocol on stdin/stdout.

use std::io::{self, BufWriter};
use std::process::ExitCode;

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: kripke-sut <model.kripke>");
        return ExitCode::from(2);
    };
    let model = match ikl::format::read_kripke(&path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("kripke-sut: {path}: {e}");
            return ExitCode::from(2);
        }
    };
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    match ikl::teacher::serve(&model, stdin, stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kripke-sut: {e}");
            ExitCode::from(3)
        }
    }
}
