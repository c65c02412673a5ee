//! Deterministic CSV and JSON emission.

use crate::error::CliError;
use resonance_core::density::DensitySample;
use resonance_core::polynomial::Root;
use serde::Serialize;
use std::path::Path;

pub const RESONANCE_HEADER: [&str; 3] = ["re", "im", "multiplicity"];
pub const DENSITY_HEADER: [&str; 4] = ["mu", "gamma", "R", "count"];
pub const CHAIN_HEADER: [&str; 9] = [
    "n", "j", "sign", "t", "pred_re", "pred_im", "found_re", "found_im", "residual",
];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Header line plus rows, comma separated, LF terminated, UTF-8.
pub fn emit_csv<R, I>(path: &Path, header: &[&str], rows: R) -> Result<(), CliError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e.into(),
        })?;
    let csv_err = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Rows sorted by `(re, im)`.
pub fn emit_resonances(path: &Path, zeros: &[Root]) -> Result<(), CliError> {
    let mut z = zeros.to_vec();
    z.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    emit_csv(
        path,
        &RESONANCE_HEADER,
        z.iter().map(|r| {
            [
                r.value.re.to_string(),
                r.value.im.to_string(),
                r.multiplicity.to_string(),
            ]
        }),
    )
}

/// Rows in sample order (by `μ`, then `R`).
pub fn emit_density(path: &Path, samples: &[DensitySample]) -> Result<(), CliError> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.r.total_cmp(&b.r)));
    emit_csv(
        path,
        &DENSITY_HEADER,
        s.iter().map(|s| {
            [
                s.mu.to_string(),
                s.gamma.to_string(),
                s.r.to_string(),
                s.count.to_string(),
            ]
        }),
    )
}

pub fn emit_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use resonance_core::Complex64;

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        emit_resonances(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "re,im,multiplicity\n");
        let p = dir.path().join("d.csv");
        emit_density(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "mu,gamma,R,count\n");
    }

    #[test]
    fn rows_are_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let zeros = [
            Root {
                value: Complex64::new(2.5, -1.0),
                multiplicity: 1,
            },
            Root {
                value: Complex64::new(-0.5, -0.25),
                multiplicity: 2,
            },
        ];
        emit_resonances(&p, &zeros).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "re,im,multiplicity\n-0.5,-0.25,2\n2.5,-1,1\n"
        );
    }
}
