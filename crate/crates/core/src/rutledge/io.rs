//! CSV formats for subjects and fit results.
//!
//! Subjects: one row per trial, `subject_id,t,cr,lo,hi,choice,outcome,rating`,
//! with `t` counting from 1 and `rating` blank when no prompt followed the
//! trial. A row with `t = 0` and only the rating filled holds the rating
//! taken before the first trial.
//!
//! Fits: `subject_id,model,gamma,r,r2,R2`.

use std::io::{Read, Write};
use std::path::Path;

use super::{Choice, FitResult, SubjectTrace, Trial};
use crate::cli::format_sig;
use crate::error::{Error, Result};

pub const SUBJECTS_HEADER: [&str; 8] = ["subject_id", "t", "cr", "lo", "hi", "choice", "outcome", "rating"];
pub const FITS_HEADER: [&str; 6] = ["subject_id", "model", "gamma", "r", "r2", "R2"];

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub subject_id: u64,
    pub model: String,
    pub fit: FitResult,
}

fn choice_label(choice: Choice) -> &'static str {
    match choice {
        Choice::Certain => "certain",
        Choice::Gamble => "gamble",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub fn write_subjects<W: Write>(out: W, subjects: &[SubjectTrace]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUBJECTS_HEADER)?;
    for s in subjects {
        let id = s.id.to_string();
        if let Some(r) = s.initial_rating {
            w.write_record([id.as_str(), "0", "", "", "", "", "", &format_sig(r)])?;
        }
        for (i, t) in s.trials.iter().enumerate() {
            w.write_record([
                id.clone(),
                (i + 1).to_string(),
                format_sig(t.certain_reward),
                format_sig(t.gamble_low),
                format_sig(t.gamble_high),
                choice_label(t.choice).to_string(),
                format_sig(t.outcome),
                opt(t.reported_happiness),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<&str> {
    rec.get(idx)
        .ok_or_else(|| Error::Format(format!("line {line}: missing column {}", SUBJECTS_HEADER[idx])))
}

fn number(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<f64> {
    let raw = field(rec, idx, line)?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: {} = {raw:?} is not a number", SUBJECTS_HEADER[idx])))
}

fn optional_number(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<Option<f64>> {
    if field(rec, idx, line)?.trim().is_empty() {
        Ok(None)
    } else {
        number(rec, idx, line).map(Some)
    }
}

/// Parses the subjects format. Rows of one subject must be contiguous and
/// in trial order.
pub fn read_subjects<R: Read>(input: R) -> Result<Vec<SubjectTrace>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?;
    if header.iter().ne(SUBJECTS_HEADER) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            SUBJECTS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut subjects: Vec<SubjectTrace> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: u64 = field(&rec, 0, line)?
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad subject_id")))?;
        let t: usize = field(&rec, 1, line)?
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad t")))?;
        if subjects.last().is_none_or(|s| s.id != id) {
            subjects.push(SubjectTrace {
                id,
                initial_rating: None,
                trials: Vec::new(),
            });
        }
        let subject = subjects.last_mut().expect("pushed above");
        if t == 0 {
            subject.initial_rating = optional_number(&rec, 7, line)?;
            continue;
        }
        if t != subject.trials.len() + 1 {
            return Err(Error::Format(format!(
                "line {line}: subject {id} trial {t} out of order"
            )));
        }
        let choice = match field(&rec, 5, line)? {
            "certain" => Choice::Certain,
            "gamble" => Choice::Gamble,
            other => return Err(Error::Format(format!("line {line}: unknown choice {other:?}"))),
        };
        let trial = Trial::new(
            number(&rec, 2, line)?,
            number(&rec, 3, line)?,
            number(&rec, 4, line)?,
            choice,
            number(&rec, 6, line)?,
            optional_number(&rec, 7, line)?,
        )
        .map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        subject.trials.push(trial);
    }
    Ok(subjects)
}

pub fn write_fits<W: Write>(out: W, rows: &[FitRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FITS_HEADER)?;
    for row in rows {
        w.write_record([
            row.subject_id.to_string(),
            row.model.clone(),
            format_sig(row.fit.gamma),
            format_sig(row.fit.pearson_r),
            format_sig(row.fit.r_squared),
            format_sig(row.fit.big_r_squared),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_subjects(path: &Path, subjects: &[SubjectTrace]) -> Result<()> {
    write_subjects(create(path)?, subjects).map_err(csv_err(path))
}

pub fn load_subjects(path: &Path) -> Result<Vec<SubjectTrace>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_subjects(file).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn save_fits(path: &Path, rows: &[FitRow]) -> Result<()> {
    write_fits(create(path)?, rows).map_err(csv_err(path))
}
