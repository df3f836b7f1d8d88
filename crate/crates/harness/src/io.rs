//! Dataset tables on disk.
//!
//! One row per (instance, replicate). Factual tables have the header
//! `instance_id,<exogenous...>,x,y,replicate,raw_text,parsed,method` and
//! interventional tables `instance_id,<exogenous...>,do_x,y_do,replicate,
//! raw_text,parsed,method`. `y` is empty when the answer was not parsed;
//! `method` is `scm` for model-generated truth, otherwise how the answer
//! was concretized (`lexical`, `extractor`, or `manual` for hand edits).

use std::collections::HashMap;
use std::path::Path;

use causeval_core::causation::{
    DatasetTriple, FactualDataset, FactualRecord, InterventionalDataset, InterventionalRecord,
};
use causeval_core::llm::{Collection, PromptKind};

use crate::HarnessError;

pub const TRUTH_METHOD: &str = "scm";

pub const FACTUAL_FILE: &str = "factual.csv";
pub const DO_TRUE_FILE: &str = "do_true.csv";
pub const DO_FALSE_FILE: &str = "do_false.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Factual,
    Interventional,
}

/// One table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub instance_id: u64,
    pub exogenous: Vec<i64>,
    /// `x` for factual rows, the forced value `do_x` otherwise.
    pub treatment: bool,
    pub y: Option<bool>,
    pub replicate: usize,
    pub raw_text: String,
    pub method: String,
}

fn header(exogenous: &[String], channel: Channel) -> Vec<String> {
    let (x, y) = match channel {
        Channel::Factual => ("x", "y"),
        Channel::Interventional => ("do_x", "y_do"),
    };
    let mut h = vec!["instance_id".to_string()];
    h.extend(exogenous.iter().cloned());
    h.extend([x, y, "replicate", "raw_text", "parsed", "method"].map(String::from));
    h
}

fn bool_text(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

fn write_rows(path: &Path, header: &[String], rows: &[Row]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(HarnessError::io(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let err = |e: csv::Error| HarnessError::format(path, e);
    w.write_record(header).map_err(err)?;
    for r in rows {
        let mut rec = vec![r.instance_id.to_string()];
        rec.extend(r.exogenous.iter().map(i64::to_string));
        rec.push(bool_text(r.treatment).into());
        rec.push(r.y.map(bool_text).unwrap_or_default().into());
        rec.push(r.replicate.to_string());
        rec.push(r.raw_text.clone());
        rec.push(bool_text(r.y.is_some()).into());
        rec.push(r.method.clone());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(HarnessError::io(path))
}

fn truth_rows<'a>(
    records: impl Iterator<Item = (u64, &'a [i64], bool, &'a [Option<bool>])>,
) -> Vec<Row> {
    records
        .flat_map(|(id, exo, treatment, outcomes)| {
            outcomes.iter().enumerate().map(move |(replicate, y)| Row {
                instance_id: id,
                exogenous: exo.to_vec(),
                treatment,
                y: *y,
                replicate,
                raw_text: String::new(),
                method: TRUTH_METHOD.into(),
            })
        })
        .collect()
}

/// Writes the three model-truth tables into `dir`.
pub fn write_truth(
    dir: &Path,
    exogenous: &[String],
    data: &DatasetTriple,
) -> Result<(), HarnessError> {
    let f = truth_rows(
        data.factual
            .records()
            .iter()
            .map(|r| (r.id, r.exogenous.as_slice(), r.x, r.outcomes.as_slice())),
    );
    write_rows(
        &dir.join(FACTUAL_FILE),
        &header(exogenous, Channel::Factual),
        &f,
    )?;
    for (d, file) in [
        (&data.do_true, DO_TRUE_FILE),
        (&data.do_false, DO_FALSE_FILE),
    ] {
        let rows = truth_rows(d.records().iter().map(|r| {
            (
                r.id,
                r.exogenous.as_slice(),
                d.value(),
                r.outcomes.as_slice(),
            )
        }));
        write_rows(
            &dir.join(file),
            &header(exogenous, Channel::Interventional),
            &rows,
        )?;
    }
    Ok(())
}

/// Writes the agent's answers, with raw texts, into `dir`.
pub fn write_collection(
    dir: &Path,
    exogenous: &[String],
    c: &Collection,
) -> Result<(), HarnessError> {
    let exo: HashMap<u64, (&[i64], bool)> = c
        .datasets
        .factual
        .records()
        .iter()
        .map(|r| (r.id, (r.exogenous.as_slice(), r.x)))
        .collect();
    let rows = |kind: PromptKind| -> Vec<Row> {
        c.answers
            .iter()
            .filter(|a| a.kind == kind)
            .map(|a| {
                let (exogenous, x) = exo[&a.instance_id];
                Row {
                    instance_id: a.instance_id,
                    exogenous: exogenous.to_vec(),
                    treatment: match kind {
                        PromptKind::Factual => x,
                        PromptKind::CounterfactualTrue => true,
                        PromptKind::CounterfactualFalse => false,
                    },
                    y: a.parsed,
                    replicate: a.replicate,
                    raw_text: a.raw_text.clone(),
                    method: a.method.as_str().into(),
                }
            })
            .collect()
    };
    write_rows(
        &dir.join(FACTUAL_FILE),
        &header(exogenous, Channel::Factual),
        &rows(PromptKind::Factual),
    )?;
    write_rows(
        &dir.join(DO_TRUE_FILE),
        &header(exogenous, Channel::Interventional),
        &rows(PromptKind::CounterfactualTrue),
    )?;
    write_rows(
        &dir.join(DO_FALSE_FILE),
        &header(exogenous, Channel::Interventional),
        &rows(PromptKind::CounterfactualFalse),
    )
}

fn parse_bool(path: &Path, line: u64, column: &str, text: &str) -> Result<bool, HarnessError> {
    match text.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(HarnessError::format(
            path,
            format!("line {line}: column {column}: expected true or false, got `{other}`"),
        )),
    }
}

fn read_rows(
    path: &Path,
    exogenous: &[String],
    channel: Channel,
) -> Result<Vec<Row>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let expected = header(exogenous, channel);
    let found: Vec<String> = r
        .headers()
        .map_err(|e| HarnessError::format(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != expected {
        return Err(HarnessError::format(
            path,
            format!(
                "header {} does not match expected {}",
                found.join(","),
                expected.join(",")
            ),
        ));
    }
    let k = exogenous.len();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::format(path, e))?;
        let line = i as u64 + 2;
        let int = |col: usize| -> Result<i64, HarnessError> {
            rec[col].trim().parse().map_err(|_| {
                HarnessError::format(
                    path,
                    format!("line {line}: column {}: not an integer", expected[col]),
                )
            })
        };
        let y_text = rec[k + 2].trim();
        let parsed = parse_bool(path, line, "parsed", &rec[k + 5])?;
        let y = match (y_text, parsed) {
            ("", false) => None,
            (v, true) => Some(parse_bool(path, line, &expected[k + 2], v)?),
            (_, false) => {
                return Err(HarnessError::format(
                    path,
                    format!(
                        "line {line}: parsed is false but {} is set",
                        expected[k + 2]
                    ),
                ))
            }
        };
        rows.push(Row {
            instance_id: int(0)? as u64,
            exogenous: (1..=k).map(int).collect::<Result<_, _>>()?,
            treatment: parse_bool(path, line, &expected[k + 1], &rec[k + 1])?,
            y,
            replicate: int(k + 3)? as usize,
            raw_text: rec[k + 4].to_string(),
            method: rec[k + 6].to_string(),
        });
    }
    Ok(rows)
}

struct Grouped {
    id: u64,
    exogenous: Vec<i64>,
    treatment: bool,
    outcomes: Vec<Option<bool>>,
}

/// A group under construction with its (replicate, reading) pairs.
type Pending = (Grouped, Vec<(usize, Option<bool>)>);

/// Groups rows by instance in order of first appearance; replicates must be
/// exactly `0..k` for every instance.
fn group(path: &Path, rows: Vec<Row>) -> Result<Vec<Grouped>, HarnessError> {
    let mut order: HashMap<u64, usize> = HashMap::new();
    let mut groups: Vec<Pending> = Vec::new();
    for row in rows {
        let slot = *order.entry(row.instance_id).or_insert_with(|| {
            groups.push((
                Grouped {
                    id: row.instance_id,
                    exogenous: row.exogenous.clone(),
                    treatment: row.treatment,
                    outcomes: Vec::new(),
                },
                Vec::new(),
            ));
            groups.len() - 1
        });
        let (g, readings) = &mut groups[slot];
        if g.exogenous != row.exogenous || g.treatment != row.treatment {
            return Err(HarnessError::format(
                path,
                format!("instance {} has inconsistent rows", row.instance_id),
            ));
        }
        readings.push((row.replicate, row.y));
    }
    groups
        .into_iter()
        .map(|(mut g, mut readings)| {
            readings.sort_by_key(|(r, _)| *r);
            if readings.iter().enumerate().any(|(i, (r, _))| i != *r) {
                return Err(HarnessError::format(
                    path,
                    format!(
                        "instance {}: replicates must be numbered 0..k without gaps",
                        g.id
                    ),
                ));
            }
            g.outcomes = readings.into_iter().map(|(_, y)| y).collect();
            Ok(g)
        })
        .collect()
}

fn require(path: &Path, command: &'static str) -> Result<(), HarnessError> {
    if path.exists() {
        Ok(())
    } else {
        Err(HarnessError::MissingInput {
            path: path.to_path_buf(),
            command,
        })
    }
}

pub fn read_factual(
    path: &Path,
    exogenous: &[String],
    command: &'static str,
) -> Result<FactualDataset, HarnessError> {
    require(path, command)?;
    let rows = read_rows(path, exogenous, Channel::Factual)?;
    let records = group(path, rows)?
        .into_iter()
        .map(|g| FactualRecord {
            id: g.id,
            exogenous: g.exogenous,
            x: g.treatment,
            outcomes: g.outcomes,
        })
        .collect();
    FactualDataset::new(records).map_err(|e| HarnessError::format(path, e))
}

pub fn read_interventional(
    path: &Path,
    exogenous: &[String],
    value: bool,
    command: &'static str,
) -> Result<InterventionalDataset, HarnessError> {
    require(path, command)?;
    let rows = read_rows(path, exogenous, Channel::Interventional)?;
    let groups = group(path, rows)?;
    if let Some(g) = groups.iter().find(|g| g.treatment != value) {
        return Err(HarnessError::format(
            path,
            format!(
                "instance {}: do_x is {} in a do_x = {value} table",
                g.id, g.treatment
            ),
        ));
    }
    let records = groups
        .into_iter()
        .map(|g| InterventionalRecord {
            id: g.id,
            exogenous: g.exogenous,
            outcomes: g.outcomes,
        })
        .collect();
    InterventionalDataset::new(value, records).map_err(|e| HarnessError::format(path, e))
}

/// Reads the three tables written by [`write_truth`] or [`write_collection`].
pub fn read_triple(
    dir: &Path,
    exogenous: &[String],
    command: &'static str,
) -> Result<DatasetTriple, HarnessError> {
    Ok(DatasetTriple {
        factual: read_factual(&dir.join(FACTUAL_FILE), exogenous, command)?,
        do_true: read_interventional(&dir.join(DO_TRUE_FILE), exogenous, true, command)?,
        do_false: read_interventional(&dir.join(DO_FALSE_FILE), exogenous, false, command)?,
    })
}

#[cfg(test)]
mod tests {
    use causeval_core::causation::problem_truth;
    use causeval_core::llm::{collect, Agent, AgentSpec, CollectOptions, ResponseCache};
    use causeval_core::problems::{build_candyparty, build_div6};

    use super::*;

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = build_candyparty(6).unwrap();
        let names = p.model.exogenous_names();
        let t = problem_truth(&p).unwrap();
        write_truth(dir.path(), &names, &t).unwrap();
        assert_eq!(read_triple(dir.path(), &names, "truth").unwrap(), t);
        let text = std::fs::read_to_string(dir.path().join(FACTUAL_FILE)).unwrap();
        assert!(text.starts_with("instance_id,R,L,E,x,y,replicate,raw_text,parsed,method\n"));
        let text = std::fs::read_to_string(dir.path().join(DO_FALSE_FILE)).unwrap();
        assert!(text.starts_with("instance_id,R,L,E,do_x,y_do,replicate,raw_text,parsed,method\n"));
    }

    #[test]
    fn collection_round_trip_with_awkward_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = build_div6(12).unwrap();
        let names = p.model.exogenous_names();
        let agent = Agent::from_spec(&AgentSpec::Noisy {
            p_factual: 0.3,
            p_counterfactual: 0.3,
            seed: 2,
        })
        .unwrap();
        let opts = CollectOptions {
            replicates: 3,
            ..Default::default()
        };
        let mut c = collect(&p, &agent, &opts, &ResponseCache::in_memory(), None).unwrap();
        c.answers[0].raw_text = "Yes, \"quoted\",\nnew line".into();
        write_collection(dir.path(), &names, &c).unwrap();
        assert_eq!(
            read_triple(dir.path(), &names, "query").unwrap(),
            c.datasets
        );
        let rows = read_rows(&dir.path().join(FACTUAL_FILE), &names, Channel::Factual).unwrap();
        assert_eq!(rows[0].raw_text, "Yes, \"quoted\",\nnew line");
        assert_eq!(rows[0].method, "lexical");
    }

    #[test]
    fn rejects_bad_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let names = vec!["N".to_string()];
        let h = "instance_id,N,x,y,replicate,raw_text,parsed,method\n";
        for body in [
            "0,1,false,false,1,,true,scm\n",
            "0,1,false,maybe,0,,true,scm\n",
            "0,1,false,true,0,,false,scm\n",
            "0,1,false,true,0,,true,scm\n0,2,false,true,1,,true,scm\n",
        ] {
            std::fs::write(&path, format!("{h}{body}")).unwrap();
            assert!(read_factual(&path, &names, "truth").is_err(), "{body}");
        }
        std::fs::write(&path, "id,N,x,y,replicate,raw_text,parsed,method\n").unwrap();
        assert!(read_factual(&path, &names, "truth").is_err());
        std::fs::write(&path, format!("{h}0,1,false,,0,,false,manual\n")).unwrap();
        let d = read_factual(&path, &names, "truth").unwrap();
        assert_eq!(d.records()[0].outcomes, vec![None]);
        assert!(matches!(
            read_factual(&dir.path().join("nope.csv"), &names, "truth"),
            Err(HarnessError::MissingInput {
                command: "truth",
                ..
            })
        ));
    }
}
