use std::io::Read;
use std::str::FromStr;

use serde::Serialize;

use super::AnalyticsError;

pub const MAX_SCORE: f64 = 54.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Group {
    /// Theory and practice.
    A,
    /// Theory only.
    B,
    /// Self-research placebo.
    P,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::A, Group::B, Group::P];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
            Group::P => "P",
        }
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Group::A),
            "B" | "b" => Ok(Group::B),
            "P" | "p" => Ok(Group::P),
            other => Err(format!("unknown group {other:?} (expected A, B or P)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    Last,
    Prelast,
    ThirdLast,
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "last" => Ok(Cohort::Last),
            "prelast" => Ok(Cohort::Prelast),
            "third_last" => Ok(Cohort::ThirdLast),
            other => Err(format!(
                "unknown cohort {other:?} (expected last, prelast or third_last)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentRecord {
    pub student_id: String,
    pub group: Group,
    pub cohort: Cohort,
    pub pretest: f64,
    pub posttest: f64,
    pub grade: Option<f64>,
}

fn header_index(headers: &csv::StringRecord, name: &'static str) -> Result<usize, AnalyticsError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or(AnalyticsError::MissingColumn(name))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(e: csv::Error) -> AnalyticsError {
    let line = e.position().map_or(0, |p| p.line());
    AnalyticsError::Row {
        line,
        message: e.to_string(),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

/// Reads `content,prerequisite` rows.
pub fn read_edges_csv<R: Read>(input: R) -> Result<Vec<(String, String)>, AnalyticsError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let ci = header_index(&headers, "content")?;
    let pi = header_index(&headers, "prerequisite")?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let field = |i: usize, name: &str| -> Result<String, AnalyticsError> {
            match row.get(i) {
                Some(v) if !v.is_empty() => Ok(v.to_owned()),
                _ => Err(AnalyticsError::Row {
                    line: line_of(&row),
                    message: format!("empty {name}"),
                }),
            }
        };
        out.push((field(ci, "content")?, field(pi, "prerequisite")?));
    }
    Ok(out)
}

/// Reads `student_id,group,cohort,pretest,posttest,grade` rows. The grade
/// column may be absent or empty.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<AssessmentRecord>, AnalyticsError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let idx = [
        header_index(&headers, "student_id")?,
        header_index(&headers, "group")?,
        header_index(&headers, "cohort")?,
        header_index(&headers, "pretest")?,
        header_index(&headers, "posttest")?,
    ];
    let grade_idx = headers.iter().position(|h| h.trim() == "grade");
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = line_of(&row);
        let bad = |message: String| AnalyticsError::Row { line, message };
        let get = |i: usize| row.get(i).unwrap_or("");
        let score = |i: usize, name: &str| -> Result<f64, AnalyticsError> {
            let v: f64 = get(i)
                .parse()
                .map_err(|_| bad(format!("{name} {:?} is not a number", get(i))))?;
            if !(0.0..=MAX_SCORE).contains(&v) {
                return Err(bad(format!("{name} {v} outside 0..=54")));
            }
            Ok(v)
        };
        let student_id = get(idx[0]).to_owned();
        if student_id.is_empty() {
            return Err(bad("empty student_id".into()));
        }
        let grade = match grade_idx.map(get) {
            None | Some("") => None,
            Some(g) => Some(
                g.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("grade {g:?} is not a number")))?,
            ),
        };
        out.push(AssessmentRecord {
            student_id,
            group: get(idx[1]).parse().map_err(bad)?,
            cohort: get(idx[2]).parse().map_err(bad)?,
            pretest: score(idx[3], "pretest")?,
            posttest: score(idx[4], "posttest")?,
            grade,
        });
    }
    Ok(out)
}
