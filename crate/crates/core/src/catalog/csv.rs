//! Minimal CSV: UTF-8, comma-separated, first row is the header. No quoting
//! or escaping; in-scope workloads never need either. A field that parses
//! whole as a decimal integer loads as an integer, anything else as a string.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{CatalogError, Relation, Schema, Value};

/// Loads one relation. The relation name is the caller's choice (the CLI
/// uses the file stem). `dedup` drops rows whose values match an earlier row.
pub fn load_csv(path: &Path, name: &str, dedup: bool) -> Result<Relation, CatalogError> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CatalogError::EmptyFile(display.clone()))?;
    let attrs: Vec<&str> = header.split(',').map(str::trim).collect();
    let schema = Schema::new(attrs.clone())?;
    let mut rel = Relation::new(name, schema);
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != attrs.len() {
            return Err(CatalogError::MalformedRow {
                path: display,
                line: i + 1,
                detail: format!("expected {} fields, got {}", attrs.len(), fields.len()),
            });
        }
        let values = fields.iter().map(|f| Value::from_field(f.trim())).collect();
        rel.push_row(values, dedup)?;
    }
    Ok(rel)
}

pub fn write_csv(path: &Path, rel: &Relation) -> Result<(), CatalogError> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{}", rel.schema().attrs().join(","))?;
    for t in rel.tuples() {
        let row: Vec<String> = t.values.iter().map(Value::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_ints_and_strings_by_field_shape() {
        let f = write_tmp("x,y\n1,a\n-2,07\n");
        let rel = load_csv(f.path(), "r", false).unwrap();
        assert_eq!(rel.schema().attrs(), &["x", "y"]);
        assert_eq!(rel.tuples()[0].values, vec![Value::Int(1), Value::Str("a".into())]);
        // leading zeros still parse as one decimal literal
        assert_eq!(rel.tuples()[1].values, vec![Value::Int(-2), Value::Int(7)]);
    }

    #[test]
    fn duplicate_rows_load_per_dedup_flag() {
        let f = write_tmp("x\n5\n5\n");
        assert_eq!(load_csv(f.path(), "r", false).unwrap().len(), 2);
        assert_eq!(load_csv(f.path(), "r", true).unwrap().len(), 1);
    }

    #[test]
    fn arity_mismatch_names_the_line() {
        let f = write_tmp("x,y\n1,2\n3\n");
        match load_csv(f.path(), "r", false) {
            Err(CatalogError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a malformed-row error, got {:?}", other),
        }
    }

    #[test]
    fn duplicate_header_attr_rejected() {
        let f = write_tmp("x,x\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), "r", false),
            Err(CatalogError::DuplicateAttr(_))
        ));
    }

    #[test]
    fn header_only_gives_empty_relation_and_round_trip_preserves() {
        let f = write_tmp("x,y\n");
        let rel = load_csv(f.path(), "r", false).unwrap();
        assert!(rel.is_empty());

        let g = write_tmp("a,b\n1,s\n2,t\n");
        let rel = load_csv(g.path(), "g", false).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(out.path(), &rel).unwrap();
        let back = load_csv(out.path(), "g", false).unwrap();
        assert_eq!(back.tuples(), rel.tuples());
        assert_eq!(back.schema(), rel.schema());
    }
}
