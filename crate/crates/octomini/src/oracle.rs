//! Text front end of the direct-sum oracle: `m x y z` per line in,
//! `phi gx gy gz` per line out.

use std::io::{BufRead, Write};

use octomini_core::gravity::{direct_sum_oracle, FieldSample};

use crate::AppError;

pub fn parse_points(input: impl BufRead) -> Result<Vec<(f64, [f64; 3])>, AppError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: Vec<f64> = body
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| AppError::Config(format!("line {}: not a number list", i + 1)))?;
        match v[..] {
            [m, x, y, z] => out.push((m, [x, y, z])),
            _ => return Err(AppError::Config(format!("line {}: expected `m x y z`, got {} values", i + 1, v.len()))),
        }
    }
    Ok(out)
}

pub fn write_samples(mut out: impl Write, samples: &[FieldSample]) -> Result<(), AppError> {
    for s in samples {
        writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e}", s.phi, s.g[0], s.g[1], s.g[2])?;
    }
    Ok(())
}

/// Bad points (duplicates, non-finite values) are input errors.
pub fn run_oracle(input: impl BufRead, out: impl Write) -> Result<usize, AppError> {
    let points = parse_points(input)?;
    let samples = direct_sum_oracle(&points).map_err(|e| AppError::Config(e.to_string()))?;
    write_samples(out, &samples)?;
    Ok(samples.len())
}
