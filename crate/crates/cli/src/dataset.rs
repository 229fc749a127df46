//! CSV ingestion.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use csv::StringRecord;
use toroskew::{wrap_angle, TorusPoint};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unit {
    #[default]
    Radians,
    Degrees,
}

impl FromStr for Unit {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rad" | "radian" | "radians" => Ok(Unit::Radians),
            "deg" | "degree" | "degrees" => Ok(Unit::Degrees),
            other => Err(CliError::Usage(format!("unknown unit '{other}' (expected rad or deg)"))),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Radians => "rad",
            Unit::Degrees => "deg",
        })
    }
}

/// Angles wrapped to `[-pi, pi)` radians, with optional per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub angles: Vec<TorusPoint>,
    /// Unit of the source file; `angles` are always radians.
    pub unit: Unit,
    pub labels: Option<Vec<String>>,
    pub column_names: Vec<String>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.column_names.len()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Subsets by label, ordered by label.
    pub fn groups(&self) -> Vec<(String, Vec<TorusPoint>)> {
        let Some(labels) = &self.labels else {
            return vec![];
        };
        let mut keys: Vec<&String> = labels.iter().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let pts = self.angles.iter().zip(labels).filter(|(_, l)| *l == k).map(|(p, _)| p.clone()).collect();
                (k.clone(), pts)
            })
            .collect()
    }
}

fn is_numeric(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

fn resolve(token: &str, header: Option<&StringRecord>) -> Result<usize, CliError> {
    if let Ok(i) = token.trim().parse::<usize>() {
        return Ok(i);
    }
    header
        .and_then(|h| h.iter().position(|f| f == token.trim()))
        .ok_or_else(|| CliError::Usage(format!("no column named '{token}'")))
}

/// Read angles from a CSV file.
///
/// `columns` and `group_by` are 0-based indices or header names. By default
/// every column except the group column is an angle. The first row is a
/// header when all of its selected fields are non-numeric (or when columns are
/// selected by name). Lines starting with `#` are comments.
pub fn ingest_csv(path: &Path, unit: Unit, columns: Option<&[String]>, group_by: Option<&str>) -> Result<Dataset, CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    // one record per physical line, so errors can name the line
    let mut rows = vec![];
    for (i, l) in raw.lines().enumerate() {
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            continue;
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(l.as_bytes());
        let mut rec = StringRecord::new();
        reader
            .read_record(&mut rec)
            .map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        rows.push((i + 1, rec));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{} is empty", path.display())));
    }

    let by_name = columns.into_iter().flatten().map(String::as_str).chain(group_by).any(|t| t.trim().parse::<usize>().is_err());
    let first = &rows[0].1;
    let provisional_group = match group_by {
        Some(g) if !by_name => Some(resolve(g, None)?),
        _ => None,
    };
    let has_header = by_name || {
        let selected: Vec<usize> = match columns {
            Some(c) => c.iter().map(|t| resolve(t, None)).collect::<Result<_, _>>()?,
            None => (0..first.len()).filter(|i| Some(*i) != provisional_group).collect(),
        };
        !selected.is_empty() && selected.iter().all(|&i| first.get(i).is_some_and(|f| !is_numeric(f)))
    };
    let header = has_header.then(|| first.clone());
    let group = group_by.map(|g| resolve(g, header.as_ref())).transpose()?;
    let selected: Vec<usize> = match columns {
        Some(c) => c.iter().map(|t| resolve(t, header.as_ref())).collect::<Result<_, _>>()?,
        None => (0..first.len()).filter(|i| Some(*i) != group).collect(),
    };
    if selected.is_empty() {
        return Err(CliError::Usage("no angle columns selected".into()));
    }
    let column_names = selected
        .iter()
        .enumerate()
        .map(|(k, &i)| header.as_ref().and_then(|h| h.get(i)).map_or_else(|| format!("x{}", k + 1), str::to_string))
        .collect();

    let body = if has_header { &rows[1..] } else { &rows[..] };
    let mut angles = Vec::with_capacity(body.len());
    let mut labels = group.map(|_| Vec::with_capacity(body.len()));
    for (line, rec) in body {
        let mut x = Vec::with_capacity(selected.len());
        for &i in &selected {
            let field = rec.get(i).ok_or_else(|| CliError::Data(format!("line {line}: missing column {i}")))?;
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::Data(format!("line {line}: non-numeric value '{field}' in column {i}")))?;
            let v = match unit {
                Unit::Radians => v,
                Unit::Degrees => v.to_radians(),
            };
            x.push(wrap_angle(v));
        }
        angles.push(TorusPoint::new(x));
        if let (Some(labels), Some(g)) = (labels.as_mut(), group) {
            let l = rec.get(g).ok_or_else(|| CliError::Data(format!("line {line}: missing group column {g}")))?;
            labels.push(l.to_string());
        }
    }
    if angles.is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    Ok(Dataset { angles, unit, labels, column_names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::io::Write;

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn wraps_radians() {
        let f = file("0,0\n3.2,-3.2\n");
        let d = ingest_csv(f.path(), Unit::Radians, None, None).unwrap();
        assert_eq!(d.angles[0].as_slice(), &[0.0, 0.0]);
        assert!((d.angles[1][0] - (3.2 - 2.0 * PI)).abs() < 1e-15);
        assert!((d.angles[1][1] - (-3.2 + 2.0 * PI)).abs() < 1e-15);
        assert!((d.angles[1][0] + 3.0832).abs() < 1e-4);
    }

    #[test]
    fn degrees_map_pi_to_minus_pi() {
        let f = file("180,90\n");
        let d = ingest_csv(f.path(), Unit::Degrees, None, None).unwrap();
        assert_eq!(d.angles[0][0], -PI);
        assert!((d.angles[0][1] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_row_names_line() {
        let f = file("1.0,abc\n");
        let e = ingest_csv(f.path(), Unit::Radians, None, None).unwrap_err();
        assert!(matches!(e, CliError::Data(_)));
        assert!(e.to_string().contains("line 1"), "{e}");
        let f = file("phi,psi\n1,2\n# note\n3,x\n");
        let e = ingest_csv(f.path(), Unit::Radians, None, None).unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
    }

    #[test]
    fn header_columns_and_groups() {
        let f = file("aa,phi,psi\nSER,-1.0,2.0\nALA,0.5,0.25\nSER,1.5,-0.5\n");
        let d = ingest_csv(f.path(), Unit::Radians, Some(&["psi".into(), "phi".into()]), Some("aa")).unwrap();
        assert_eq!(d.column_names, vec!["psi", "phi"]);
        assert_eq!(d.angles[0].as_slice(), &[2.0, -1.0]);
        let g = d.groups();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].0, "ALA");
        assert_eq!(g[1].1.len(), 2);
        // by index, header detected from the non-numeric angle fields
        let d = ingest_csv(f.path(), Unit::Radians, None, Some("0")).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.len(), 3);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(ingest_csv(file("").path(), Unit::Radians, None, None), Err(CliError::Data(_))));
        assert!(matches!(ingest_csv(file("# only\n").path(), Unit::Radians, None, None), Err(CliError::Data(_))));
        assert!(matches!(ingest_csv(file("a,b\n").path(), Unit::Radians, None, None), Err(CliError::Data(_))));
        assert!(ingest_csv(Path::new("/nonexistent/file.csv"), Unit::Radians, None, None).is_err());
    }
}
