//! Report emission: one CSV table plus one JSON document per run, both
//! written atomically (temp file + rename) and free of timestamps so reruns
//! with the same config and seed are byte-identical.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiments::{ExperimentResult, RunError};

#[derive(Serialize)]
struct ExperimentDoc<'a> {
    name: &'a str,
    kind: &'a str,
    reports: &'a [uclab::report::InequalityReport],
    profiles: &'a [crate::experiments::ProfileTable],
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: &'a Option<uclab::constants::ConstantTable>,
}

#[derive(Serialize)]
struct RunDoc<'a> {
    /// Fully-resolved configuration, canonical text form.
    config: &'a str,
    experiments: Vec<ExperimentDoc<'a>>,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let io = |source: std::io::Error| RunError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp: PathBuf = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

/// Write `report.csv` and `report.json` under `out`.
pub fn write_reports(
    out: &Path,
    config_text: &str,
    results: &[ExperimentResult],
) -> Result<(), RunError> {
    std::fs::create_dir_all(out).map_err(|source| RunError::Io {
        path: out.display().to_string(),
        source,
    })?;

    // CSV table: one row per inequality report.
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let io_csv = |e: csv::Error| {
        RunError::Io {
            path: out.join("report.csv").display().to_string(),
            source: std::io::Error::other(e.to_string()),
        }
    };
    wtr.write_record([
        "experiment",
        "kind",
        "id",
        "mode",
        "lhs",
        "rhs",
        "margin",
        "pass",
        "vacuous",
        "fit_constant",
        "fit_alpha",
        "ensemble",
        "notes",
    ])
    .map_err(io_csv)?;
    for r in results {
        for rep in &r.reports {
            let (fc, fa, ens) = match &rep.fit {
                Some(f) => (
                    format!("{}", f.constant),
                    f.alpha.map(|a| format!("{a}")).unwrap_or_default(),
                    format!("{}", f.ensemble_size),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            wtr.write_record([
                r.name.as_str(),
                r.kind.as_str(),
                rep.id.as_str(),
                &rep.mode.to_string(),
                &format!("{}", rep.lhs),
                &format!("{}", rep.rhs),
                &format!("{}", rep.margin),
                if rep.pass { "true" } else { "false" },
                if rep.vacuous { "true" } else { "false" },
                &fc,
                &fa,
                &ens,
                &rep.notes.join("; "),
            ])
            .map_err(io_csv)?;
        }
    }
    let csv_bytes = wtr
        .into_inner()
        .map_err(|e| io_csv(csv::Error::from(std::io::Error::other(e.to_string()))))?;
    atomic_write(&out.join("report.csv"), &csv_bytes)?;

    // JSON document with the resolved config embedded.
    let doc = RunDoc {
        config: config_text,
        experiments: results
            .iter()
            .map(|r| ExperimentDoc {
                name: &r.name,
                kind: &r.kind,
                reports: &r.reports,
                profiles: &r.profiles,
                constants: &r.table,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&doc).expect("report document serializes");
    atomic_write(&out.join("report.json"), json.as_bytes())?;
    Ok(())
}
