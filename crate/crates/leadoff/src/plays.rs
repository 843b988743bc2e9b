//! Play-by-play CSV.
//!
//! One row per play, with a header. Booleans are `0`/`1`; missing values are
//! `NA` or empty. When `inning_end` is 1 the `post_*` fields are `NA` and
//! `runs_on_play` is required; otherwise `runs_on_play` is optional and, if
//! given, must match the state arithmetic. Lines starting with `#` are
//! comments.

use std::io::{Read, Write};
use std::path::Path;

use leadoff_core::records::{PlayRecord, PostState};
use leadoff_core::state::{BaseState, Count, PlayState, RunnerOutcome};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 24] = [
    "pre_b1",
    "pre_b2",
    "pre_b3",
    "pre_balls",
    "pre_strikes",
    "pre_diseng",
    "pre_outs",
    "post_b1",
    "post_b2",
    "post_b3",
    "post_balls",
    "post_strikes",
    "post_diseng",
    "post_outs",
    "inning_end",
    "runs_on_play",
    "runner_outcome",
    "lead_ft",
    "pickoff_attempt",
    "runner_id",
    "pitcher_id",
    "catcher_id",
    "sprint_speed",
    "arm_strength",
];

const NA: &str = "NA";

fn missing(s: &str) -> bool {
    s.is_empty() || s == NA
}

struct Row<'a> {
    fields: &'a csv::StringRecord,
    order: &'a [usize; 24],
}

impl Row<'_> {
    fn raw(&self, col: usize) -> &str {
        self.fields.get(self.order[col]).unwrap_or("").trim()
    }

    fn opt<T: std::str::FromStr>(&self, col: usize) -> std::result::Result<Option<T>, String> {
        let s = self.raw(col);
        if missing(s) {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| format!("{}: cannot parse {s:?}", COLUMNS[col]))
    }

    fn req<T: std::str::FromStr>(&self, col: usize) -> std::result::Result<T, String> {
        self.opt(col)?.ok_or_else(|| format!("{} is required", COLUMNS[col]))
    }

    fn flag(&self, col: usize) -> std::result::Result<Option<bool>, String> {
        match self.raw(col) {
            s if missing(s) => Ok(None),
            "0" => Ok(Some(false)),
            "1" => Ok(Some(true)),
            s => Err(format!("{}: expected 0, 1 or NA, got {s:?}", COLUMNS[col])),
        }
    }

    fn state(&self, first: usize) -> std::result::Result<PlayState, String> {
        let bit = |c: usize| self.flag(c)?.ok_or_else(|| format!("{} is required", COLUMNS[c]));
        let bases = BaseState::new(bit(first)?, bit(first + 1)?, bit(first + 2)?);
        let count = Count::new(self.req(first + 3)?, self.req(first + 4)?).map_err(|e| e.to_string())?;
        PlayState::new(bases, count, self.req(first + 5)?, self.req(first + 6)?).map_err(|e| e.to_string())
    }

    fn text(&self, col: usize) -> Option<String> {
        let s = self.raw(col);
        (!missing(s)).then(|| s.to_string())
    }

    fn record(&self) -> std::result::Result<PlayRecord, String> {
        let pre = self.state(0)?;
        let end = self.flag(14)?.ok_or("inning_end is required")?;
        let runs: Option<u8> = self.opt(15)?;
        let post = if end {
            if (7..14).any(|c| !missing(self.raw(c))) {
                return Err("post_* fields must be NA on an inning-ending play".into());
            }
            PostState::InningEnd { runs: runs.ok_or("runs_on_play is required when inning_end is 1")? }
        } else {
            PostState::Play(self.state(7)?)
        };
        let runner_outcome = match self.raw(16) {
            s if missing(s) => None,
            s => Some(RunnerOutcome::from_code(s).ok_or_else(|| format!("runner_outcome: unknown code {s:?}"))?),
        };
        let rec = PlayRecord {
            pre,
            post,
            runner_outcome,
            lead: self.opt(17)?,
            pickoff_attempt: self.flag(18)?,
            runner_id: self.text(19),
            pitcher_id: self.text(20),
            catcher_id: self.text(21),
            sprint_speed: self.opt(22)?,
            arm_strength: self.opt(23)?,
        };
        rec.validate().map_err(|e| e.to_string())?;
        if let (false, Some(r)) = (end, runs) {
            let computed = rec.runs().map_err(|e| e.to_string())?;
            if r != computed {
                return Err(format!("runs_on_play is {r} but the states imply {computed}"));
            }
        }
        Ok(rec)
    }
}

/// Stream records from CSV text, calling `sink` for each. Returns the number
/// of records read.
pub fn read_plays<R, F>(input: R, path: &Path, mut sink: F) -> Result<u64>
where
    R: Read,
    F: FnMut(PlayRecord) -> Result<()>,
{
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::parse(path, Some(1), e.to_string()))?.clone();
    let mut order = [0usize; 24];
    for (i, col) in COLUMNS.iter().enumerate() {
        order[i] = header
            .iter()
            .position(|h| h.trim() == *col)
            .ok_or_else(|| Error::parse(path, Some(1), format!("missing column {col}")))?;
    }
    if let Some(extra) = header.iter().find(|h| !COLUMNS.contains(&h.trim())) {
        return Err(Error::parse(path, Some(1), format!("unknown column {extra}")));
    }
    let mut fields = csv::StringRecord::new();
    let mut n = 0;
    loop {
        let more = rdr.read_record(&mut fields).map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = fields.position().map(|p| p.line());
        let rec = Row { fields: &fields, order: &order }.record().map_err(|msg| Error::parse(path, line, msg))?;
        sink(rec)?;
        n += 1;
    }
    Ok(n)
}

pub fn read_plays_file<F>(path: &Path, sink: F) -> Result<u64>
where
    F: FnMut(PlayRecord) -> Result<()>,
{
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    read_plays(std::io::BufReader::new(file), path, sink)
}

/// Streaming CSV writer for play records.
pub struct PlayWriter<W: Write> {
    inner: csv::Writer<W>,
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn opt_str<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn state_fields(s: PlayState) -> [String; 7] {
    [
        bit(s.bases.b1).into(),
        bit(s.bases.b2).into(),
        bit(s.bases.b3).into(),
        s.count.balls().to_string(),
        s.count.strikes().to_string(),
        s.disengagements().to_string(),
        s.outs().to_string(),
    ]
}

impl<W: Write> PlayWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(COLUMNS).map_err(csv_io)?;
        Ok(PlayWriter { inner })
    }

    pub fn write(&mut self, r: &PlayRecord) -> Result<()> {
        let mut row: Vec<String> = state_fields(r.pre).into();
        match r.post {
            PostState::Play(t) => {
                row.extend(state_fields(t));
                row.push("0".into());
            }
            PostState::InningEnd { .. } => {
                row.extend(std::iter::repeat_n(NA.to_string(), 7));
                row.push("1".into());
            }
        }
        row.push(r.runs()?.to_string());
        row.push(r.runner_outcome.map_or(NA, RunnerOutcome::code).to_string());
        row.push(opt_str(r.lead));
        row.push(r.pickoff_attempt.map_or(NA, bit).to_string());
        for id in [&r.runner_id, &r.pitcher_id, &r.catcher_id] {
            row.push(id.clone().unwrap_or_else(|| NA.into()));
        }
        row.push(opt_str(r.sprint_speed));
        row.push(opt_str(r.arm_strength));
        self.inner.write_record(&row).map_err(csv_io)
    }

    pub fn finish(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io { path: "<output>".into(), source: e.into_error() })
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io { path: "<output>".into(), source: std::io::Error::other(e) }
}
