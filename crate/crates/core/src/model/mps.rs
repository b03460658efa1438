//! Free-format MPS reader and writer.
//!
//! Supported sections: `NAME`, `OBJSENSE`, `ROWS`, `COLUMNS` (with
//! `INTORG`/`INTEND` markers), `RHS`, `BOUNDS`, `ENDATA`. `RANGES` is rejected.
//! Fixed-format files parse as long as names contain no spaces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MipModel, ModelBuilder, ModelError, ObjSense, RowSense, INF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("line {line}: malformed section: {msg}")]
    MalformedSection { line: usize, msg: String },
    #[error("line {line}: unknown row or column `{name}`")]
    UnknownRowOrColumn { line: usize, name: String },
    #[error("line {line}: duplicate entry `{name}`")]
    DuplicateEntry { line: usize, name: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

enum RowKind {
    Objective,
    Free,
    Constraint(RowSense),
}

fn malformed(line: usize, msg: impl Into<String>) -> MpsError {
    MpsError::MalformedSection {
        line,
        msg: msg.into(),
    }
}

fn number(line: usize, token: &str) -> Result<f64, MpsError> {
    let v: f64 = token
        .parse()
        .map_err(|_| malformed(line, format!("invalid number `{token}`")))?;
    if v.is_nan() {
        return Err(malformed(line, "NaN value"));
    }
    // MPS files commonly spell infinity as 1e30 or larger.
    Ok(if v >= 1e30 {
        INF
    } else if v <= -1e30 {
        -INF
    } else {
        v
    })
}

struct Parser {
    builder: ModelBuilder,
    objective_row: Option<String>,
    rows: BTreeMap<String, (usize, RowKind)>,
    row_order: Vec<String>,
    row_coeffs: Vec<Vec<(usize, f64)>>,
    row_rhs: Vec<f64>,
    columns: BTreeMap<String, usize>,
    seen_entries: std::collections::BTreeSet<(usize, String)>,
    lower_set: Vec<bool>,
    in_integer_block: bool,
}

/// Parses an MPS document into a normalized [`MipModel`].
pub fn parse_mps(text: &str) -> Result<MipModel, MpsError> {
    let mut p = Parser {
        builder: ModelBuilder::new(""),
        objective_row: None,
        rows: BTreeMap::new(),
        row_order: Vec::new(),
        row_coeffs: Vec::new(),
        row_rhs: Vec::new(),
        columns: BTreeMap::new(),
        seen_entries: Default::default(),
        lower_set: Vec::new(),
        in_integer_block: false,
    };
    let mut section = Section::Start;
    let mut rhs_seen = std::collections::BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            let next = match tokens[0] {
                "NAME" => Section::Name,
                "OBJSENSE" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                "RANGES" => {
                    return Err(malformed(line, "RANGES section is not supported"));
                }
                other => return Err(malformed(line, format!("unknown section `{other}`"))),
            };
            if next <= section {
                return Err(malformed(line, format!("section `{}` out of order", tokens[0])));
            }
            section = next;
            match section {
                Section::Name => {
                    let name = tokens.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                    p.builder = ModelBuilder::new(name);
                }
                Section::ObjSense if tokens.len() > 1 => {
                    p.set_sense(line, tokens[1])?;
                }
                Section::End => break,
                _ => {}
            }
            continue;
        }

        match section {
            Section::ObjSense => p.set_sense(line, tokens[0])?,
            Section::Rows => p.parse_row(line, &tokens)?,
            Section::Columns => p.parse_column(line, &tokens)?,
            Section::Rhs => {
                // The set name is optional in free format.
                let pairs = if tokens.len() % 2 == 1 { &tokens[1..] } else { &tokens[..] };
                for pair in pairs.chunks(2) {
                    let value = number(line, pair[1])?;
                    if !rhs_seen.insert(pair[0].to_string()) {
                        return Err(MpsError::DuplicateEntry {
                            line,
                            name: pair[0].to_string(),
                        });
                    }
                    p.set_rhs(line, pair[0], value)?;
                }
            }
            Section::Bounds => p.parse_bound(line, &tokens)?,
            _ => return Err(malformed(line, "data line outside of a section")),
        }
    }
    if section != Section::End {
        return Err(malformed(text.lines().count(), "missing ENDATA"));
    }
    p.finish()
}

impl Parser {
    fn set_sense(&mut self, line: usize, token: &str) -> Result<(), MpsError> {
        match token {
            "MAX" | "MAXIMIZE" => self.builder.set_sense(ObjSense::Max),
            "MIN" | "MINIMIZE" => self.builder.set_sense(ObjSense::Min),
            other => return Err(malformed(line, format!("unknown objective sense `{other}`"))),
        }
        Ok(())
    }

    fn parse_row(&mut self, line: usize, tokens: &[&str]) -> Result<(), MpsError> {
        if tokens.len() != 2 {
            return Err(malformed(line, "ROWS entries need a type and a name"));
        }
        let kind = match tokens[0] {
            "N" if self.objective_row.is_none() => {
                self.objective_row = Some(tokens[1].to_string());
                self.builder.set_objective_name(tokens[1]);
                RowKind::Objective
            }
            "N" => RowKind::Free,
            "L" => RowKind::Constraint(RowSense::Le),
            "G" => RowKind::Constraint(RowSense::Ge),
            "E" => RowKind::Constraint(RowSense::Eq),
            other => return Err(malformed(line, format!("unknown row type `{other}`"))),
        };
        if self.rows.contains_key(tokens[1]) {
            return Err(MpsError::DuplicateEntry {
                line,
                name: tokens[1].to_string(),
            });
        }
        let slot = if let RowKind::Constraint(_) = kind {
            self.row_order.push(tokens[1].to_string());
            self.row_coeffs.push(Vec::new());
            self.row_rhs.push(0.0);
            self.row_order.len() - 1
        } else {
            usize::MAX
        };
        self.rows.insert(tokens[1].to_string(), (slot, kind));
        Ok(())
    }

    fn parse_column(&mut self, line: usize, tokens: &[&str]) -> Result<(), MpsError> {
        if tokens.len() >= 3 && tokens[1].trim_matches('\'') == "MARKER" {
            match tokens[2].trim_matches('\'') {
                "INTORG" => self.in_integer_block = true,
                "INTEND" => self.in_integer_block = false,
                other => return Err(malformed(line, format!("unknown marker `{other}`"))),
            }
            return Ok(());
        }
        if tokens.len() != 3 && tokens.len() != 5 {
            return Err(malformed(line, "COLUMNS entries need 1 or 2 (row, value) pairs"));
        }
        let col = match self.columns.get(tokens[0]) {
            Some(&j) => j,
            None => {
                let j = self.builder.add_named_var(tokens[0], 0.0, INF, 0.0, self.in_integer_block);
                self.columns.insert(tokens[0].to_string(), j);
                self.lower_set.push(false);
                j
            }
        };
        for pair in tokens[1..].chunks(2) {
            let value = number(line, pair[1])?;
            let Some((slot, kind)) = self.rows.get(pair[0]) else {
                return Err(MpsError::UnknownRowOrColumn {
                    line,
                    name: pair[0].to_string(),
                });
            };
            if !self.seen_entries.insert((col, pair[0].to_string())) {
                return Err(MpsError::DuplicateEntry {
                    line,
                    name: format!("{}/{}", tokens[0], pair[0]),
                });
            }
            match kind {
                RowKind::Objective => self.builder.set_objective(col, value),
                RowKind::Free => {}
                RowKind::Constraint(_) => self.row_coeffs[*slot].push((col, value)),
            }
        }
        Ok(())
    }

    fn set_rhs(&mut self, line: usize, row: &str, value: f64) -> Result<(), MpsError> {
        match self.rows.get(row) {
            // The objective RHS is the negated constant term.
            Some((_, RowKind::Objective)) => self.builder.set_offset(-value),
            Some((_, RowKind::Free)) => {}
            Some((slot, RowKind::Constraint(_))) => self.row_rhs[*slot] = value,
            None => {
                return Err(MpsError::UnknownRowOrColumn {
                    line,
                    name: row.to_string(),
                })
            }
        }
        Ok(())
    }

    fn parse_bound(&mut self, line: usize, tokens: &[&str]) -> Result<(), MpsError> {
        let kind = tokens[0];
        let needs_value = !matches!(kind, "FR" | "MI" | "PL" | "BV");
        let (col_name, value) = match (needs_value, tokens.len()) {
            (true, 4) => (tokens[2], Some(number(line, tokens[3])?)),
            (true, 3) => (tokens[1], Some(number(line, tokens[2])?)),
            (false, 3) => (tokens[2], None),
            (false, 2) => (tokens[1], None),
            // BV entries sometimes carry a redundant value.
            (false, 4) if kind == "BV" => (tokens[2], None),
            _ => return Err(malformed(line, format!("malformed {kind} bound"))),
        };
        let Some(&j) = self.columns.get(col_name) else {
            return Err(MpsError::UnknownRowOrColumn {
                line,
                name: col_name.to_string(),
            });
        };
        let (mut lo, mut up) = self.bounds_of(j);
        match (kind, value) {
            ("UP", Some(v)) => {
                up = v;
                if v < 0.0 && !self.lower_set[j] && lo == 0.0 {
                    lo = -INF;
                }
            }
            ("LO", Some(v)) => {
                lo = v;
                self.lower_set[j] = true;
            }
            ("FX", Some(v)) => {
                lo = v;
                up = v;
                self.lower_set[j] = true;
            }
            ("LI", Some(v)) => {
                lo = v;
                self.lower_set[j] = true;
                self.builder.set_integer(j, true);
            }
            ("UI", Some(v)) => {
                up = v;
                self.builder.set_integer(j, true);
            }
            ("FR", None) => {
                lo = -INF;
                up = INF;
                self.lower_set[j] = true;
            }
            ("MI", None) => {
                lo = -INF;
                self.lower_set[j] = true;
            }
            ("PL", None) => up = INF,
            ("BV", None) => {
                lo = 0.0;
                up = 1.0;
                self.lower_set[j] = true;
                self.builder.set_integer(j, true);
            }
            _ => return Err(malformed(line, format!("unknown bound type `{kind}`"))),
        }
        self.builder.set_var_bounds(j, lo, up);
        Ok(())
    }

    fn bounds_of(&self, j: usize) -> (f64, f64) {
        let v = &self.builder.vars[j];
        (v.lower, v.upper)
    }

    fn finish(mut self) -> Result<MipModel, MpsError> {
        for (i, name) in self.row_order.iter().enumerate() {
            let RowKind::Constraint(sense) = self.rows[name].1 else {
                unreachable!()
            };
            self.builder
                .add_named_row(name.clone(), &self.row_coeffs[i], sense, self.row_rhs[i]);
        }
        Ok(self.builder.build()?)
    }
}

fn fmt_num(v: f64) -> String {
    if v == INF {
        "1e30".to_string()
    } else if v == -INF {
        "-1e30".to_string()
    } else {
        format!("{v:?}")
    }
}

/// Serializes a normalized model. Rows are written in `<=` form, so the
/// output re-parses to an identical model.
pub fn write_mps(model: &MipModel) -> String {
    let sign = model.objective_sense().sign();
    let obj_name = model.objective_name();
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", model.name());
    if model.objective_sense() == ObjSense::Max {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N  {obj_name}");
    for name in model.row_names() {
        let _ = writeln!(out, " L  {name}");
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for j in 0..model.num_vars() {
        if model.is_integer(j) != in_int {
            let tag = if in_int { "INTEND" } else { "INTORG" };
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' '{tag}'");
            marker += 1;
            in_int = !in_int;
        }
        let name = &model.col_names()[j];
        let _ = writeln!(out, "    {name} {obj_name} {}", fmt_num(sign * model.objective()[j]));
        for &(i, v) in model.column(j) {
            let _ = writeln!(out, "    {name} {} {}", model.row_names()[i], fmt_num(v));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    if model.objective_offset() != 0.0 {
        let _ = writeln!(
            out,
            "    RHS {obj_name} {}",
            fmt_num(-sign * model.objective_offset())
        );
    }
    for (i, name) in model.row_names().iter().enumerate() {
        let _ = writeln!(out, "    RHS {name} {}", fmt_num(model.rhs()[i]));
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..model.num_vars() {
        let name = &model.col_names()[j];
        let (lo, up) = (model.lower()[j], model.upper()[j]);
        if lo == -INF && up == INF {
            let _ = writeln!(out, " FR BND {name}");
            continue;
        }
        if lo == -INF {
            let _ = writeln!(out, " MI BND {name}");
        } else {
            let _ = writeln!(out, " LO BND {name} {}", fmt_num(lo));
        }
        if up != INF {
            let _ = writeln!(out, " UP BND {name} {}", fmt_num(up));
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const KNAPSACK: &str = "\
NAME knap
ROWS
 N  obj
 L  c1
COLUMNS
    MARKER 'MARKER' 'INTORG'
    x obj -3 c1 4
    y obj -2 c1 3
    MARKER 'MARKER' 'INTEND'
RHS
    RHS c1 10
ENDATA
";

    #[test]
    fn parses_knapsack_fixture() {
        let m = parse_mps(KNAPSACK).unwrap();
        assert_eq!(m.num_vars(), 2);
        assert_eq!(m.num_cons(), 1);
        assert_eq!(m.integer_set(), &[0, 1]);
        assert_eq!(m.objective_sense(), ObjSense::Min);
        assert_eq!(m.lower(), &[0.0, 0.0]);
        assert_eq!(m.upper(), &[INF, INF]);
        assert_eq!(m.rhs(), &[10.0]);
    }

    #[test]
    fn unknown_row_is_reported() {
        let text = KNAPSACK.replace("y obj -2 c1 3", "y obj -2 zz 3");
        assert!(matches!(
            parse_mps(&text),
            Err(MpsError::UnknownRowOrColumn { name, .. }) if name == "zz"
        ));
    }

    #[test]
    fn duplicate_entry_is_reported() {
        let text = KNAPSACK.replace("y obj -2 c1 3", "y obj -2 c1 3\n    y c1 1");
        assert!(matches!(parse_mps(&text), Err(MpsError::DuplicateEntry { .. })));
    }

    #[test]
    fn ranges_are_rejected() {
        let text = KNAPSACK.replace("BOUNDS", "").replace("ENDATA", "RANGES\n    R c1 4\nENDATA");
        assert!(matches!(parse_mps(&text), Err(MpsError::MalformedSection { .. })));
    }

    #[test]
    fn bounds_and_sense() {
        let text = "\
NAME b
OBJSENSE
    MAX
ROWS
 N  obj
 G  g
 E  e
COLUMNS
    a obj 1 g 1
    b obj 1 e 1
    c obj 1 e 1
RHS
    RHS g 1 e 2
    RHS obj -4
BOUNDS
 BV BND a
 UP BND b -1
 FR BND c
ENDATA
";
        let m = parse_mps(text).unwrap();
        assert_eq!(m.objective_sense(), ObjSense::Max);
        assert_eq!(m.objective(), &[-1.0, -1.0, -1.0]);
        assert_eq!(m.integer_set(), &[0]);
        assert_eq!((m.lower()[0], m.upper()[0]), (0.0, 1.0));
        assert_eq!((m.lower()[1], m.upper()[1]), (-INF, -1.0));
        assert_eq!((m.lower()[2], m.upper()[2]), (-INF, INF));
        // objective constant 4 in MAX sense
        assert_eq!(m.to_original_sense(m.internal_objective(&[0.0, 0.0, 0.0])), 4.0);
        assert_eq!(m.num_cons(), 3);
        assert_eq!(parse_mps(&write_mps(&m)).unwrap(), m);
    }

    #[test]
    fn sections_out_of_order() {
        let text = "NAME x\nCOLUMNS\nROWS\nENDATA\n";
        assert!(matches!(parse_mps(text), Err(MpsError::MalformedSection { .. })));
    }
}
