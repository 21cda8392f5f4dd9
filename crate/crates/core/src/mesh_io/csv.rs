use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::crack_sim::{CrackState, RNG_ALGORITHM};
use crate::error::{DecError, Result};

fn header(state: &CrackState) -> String {
    match state.rng_seed {
        Some(seed) => format!("# mode={} rng={RNG_ALGORITHM} seed={seed}", state.mode.as_str()),
        None => format!("# mode={}", state.mode.as_str()),
    }
}

fn rows(state: &CrackState, prefix: &str, w: &mut impl Write) -> std::io::Result<()> {
    for (k, ke) in state.kappa_e_history.iter().enumerate() {
        let face = if k == 0 {
            String::new()
        } else {
            state.cracked[k - 1].to_string()
        };
        writeln!(w, "{prefix}{k},{face},{:?},{:?}", state.damage_at(k), ke)?;
    }
    Ok(())
}

/// One row per solved step: `step,cracked_face_id,D_n,kappa_e`. Step 0 is
/// the pristine state and has no cracked face. A comment line before the
/// header records the mode and, for stochastic runs, the generator and
/// seed.
pub fn write_csv_history(state: &CrackState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| DecError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", header(state))?;
        writeln!(w, "step,cracked_face_id,D_n,kappa_e")?;
        rows(state, "", &mut w)?;
        w.flush()
    })()
    .map_err(io)
}

/// All Monte Carlo paths in one file, with leading `path,seed` columns.
pub fn write_monte_carlo_csv(states: &[CrackState], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| DecError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    (|| -> std::io::Result<()> {
        let base = states.first().and_then(|s| s.rng_seed).unwrap_or(0);
        writeln!(w, "# mode=stochastic rng={RNG_ALGORITHM} base_seed={base} paths={}", states.len())?;
        writeln!(w, "path,seed,step,cracked_face_id,D_n,kappa_e")?;
        for (i, s) in states.iter().enumerate() {
            let seed = s.rng_seed.map(|x| x.to_string()).unwrap_or_default();
            rows(s, &format!("{i},{seed},"), &mut w)?;
        }
        w.flush()
    })()
    .map_err(io)
}
