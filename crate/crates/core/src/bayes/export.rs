//! Trace extraction and long-format draw CSV.

use super::PosteriorSamples;
use crate::error::{Error, Result};

/// `(iteration, value)` pairs per chain for one parameter. Iterations count
/// post burn-in sweeps, so thinned draws keep their spacing.
pub fn trace_export(s: &PosteriorSamples, param: &str) -> Result<Vec<Vec<(usize, f64)>>> {
    let j = s.param_index(param)?;
    let thin = s.thin.max(1);
    Ok(s.chains
        .iter()
        .map(|c| c.iter().enumerate().map(|(k, d)| ((k + 1) * thin, d[j])).collect())
        .collect())
}

/// `chain,iteration,parameter,value` rows, chain-major then draw then
/// parameter. Values are written in shortest round-trip form.
pub fn write_draws_csv(s: &PosteriorSamples) -> String {
    let thin = s.thin.max(1);
    let mut out = String::from("chain,iteration,parameter,value\n");
    for (c, chain) in s.chains.iter().enumerate() {
        for (k, draw) in chain.iter().enumerate() {
            for (name, v) in s.names.iter().zip(draw) {
                out.push_str(&format!("{},{},{name},{v}\n", c + 1, (k + 1) * thin));
            }
        }
    }
    out
}

/// Inverse of [`write_draws_csv`]. Acceptance rates are not stored and come
/// back empty.
pub fn read_draws_csv(text: &str) -> Result<PosteriorSamples> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "chain,iteration,parameter,value" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header chain,iteration,parameter,value".into(),
            })
        }
    }
    let mut names: Vec<String> = Vec::new();
    let mut chains: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut thin = 0;
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse {
            line: i as u64 + 1,
            message: m.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        let c: usize = f[0].parse().map_err(|_| err("bad chain"))?;
        let it: usize = f[1].parse().map_err(|_| err("bad iteration"))?;
        let v: f64 = f[3].parse().map_err(|_| err("bad value"))?;
        if c == 0 || it == 0 {
            return Err(err("chain and iteration start at 1"));
        }
        if thin == 0 {
            thin = it;
        }
        if c > chains.len() {
            if c != chains.len() + 1 {
                return Err(err("chains out of order"));
            }
            chains.push(Vec::new());
        }
        let k = it / thin - 1;
        // Parameter names are taken from the first draw of the first chain.
        if c == 1 && k == 0 && !names.iter().any(|n| n == f[2]) {
            names.push(f[2].to_string());
        }
        let chain = &mut chains[c - 1];
        let j = names.iter().position(|n| n == f[2]).ok_or_else(|| err("unknown parameter"))?;
        if it % thin != 0 || k > chain.len() {
            return Err(err("iterations out of order"));
        }
        if k == chain.len() {
            if j != 0 {
                return Err(err("parameters out of order"));
            }
            chain.push(Vec::with_capacity(names.len()));
        }
        let draw = chain.last_mut().unwrap();
        if draw.len() != j {
            return Err(err("parameters out of order"));
        }
        draw.push(v);
    }
    let p = names.len();
    if chains.iter().flatten().any(|d| d.len() != p) {
        return Err(Error::Data("incomplete draw in draws file".into()));
    }
    Ok(PosteriorSamples {
        names,
        chains,
        acceptance_rates: Vec::new(),
        thin: thin.max(1),
    })
}
