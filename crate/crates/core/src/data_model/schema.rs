use alloc::string::{String, ToString};
use alloc::vec::Vec;
use thiserror::Error;

use super::tabular::{Cell, ColumnKind, ColumnSpec};
use super::text::token_count;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("column `{column}`: cannot read {value:?} as {kind}")]
pub struct CellParseError {
    pub column: String,
    pub kind: &'static str,
    pub value: String,
}

/// Reads one raw field under a column spec. The empty field is `Missing`.
///
/// Category membership is not checked here; see `Validate`.
pub fn parse_cell(raw: &str, spec: &ColumnSpec) -> Result<Cell, CellParseError> {
    if raw.is_empty() {
        return Ok(Cell::Missing);
    }
    match spec.kind {
        ColumnKind::Binary | ColumnKind::Numerical => match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Cell::Num(v)),
            _ => Err(CellParseError { column: spec.name.clone(), kind: spec.kind.as_str(), value: raw.to_string() }),
        },
        ColumnKind::Categorical | ColumnKind::Text => Ok(Cell::Str(raw.to_string())),
    }
}

/// Infers column kinds from raw string cells (row-major).
///
/// A column is binary when every non-missing cell is `0` or `1`, numerical
/// when every non-missing cell parses as a finite decimal, text when cells
/// average more than three tokens, and categorical otherwise, with
/// categories in order of first appearance.
pub fn infer_schema(header: &[String], rows: &[Vec<String>]) -> Vec<ColumnSpec> {
    header
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let cells: Vec<&str> =
                rows.iter().filter_map(|r| r.get(j)).map(String::as_str).filter(|c| !c.is_empty()).collect();
            if cells.iter().all(|c| *c == "0" || *c == "1") {
                return ColumnSpec::binary(name.clone());
            }
            if cells.iter().all(|c| c.trim().parse::<f64>().map(f64::is_finite).unwrap_or(false)) {
                return ColumnSpec::numerical(name.clone());
            }
            let tokens: usize = cells.iter().map(|c| token_count(c)).sum();
            if tokens as f64 / cells.len() as f64 > 3.0 {
                return ColumnSpec::text(name.clone());
            }
            let mut categories: Vec<String> = Vec::new();
            for c in &cells {
                if !categories.iter().any(|k| k == c) {
                    categories.push((*c).to_string());
                }
            }
            ColumnSpec::categorical(name.clone(), categories)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn inference_rules() {
        let header = s(&["age", "sex", "site", "note", "empty"]);
        let rows = vec![
            s(&["54.5", "1", "boston", "prior chemotherapy with taxanes", ""]),
            s(&["61", "0", "lyon", "no prior therapy reported here", ""]),
            s(&["", "", "boston", "", ""]),
        ];
        let schema = infer_schema(&header, &rows);
        let kinds: Vec<ColumnKind> = schema.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            [ColumnKind::Numerical, ColumnKind::Binary, ColumnKind::Categorical, ColumnKind::Text, ColumnKind::Binary]
        );
        assert_eq!(schema[2].categories, ["boston", "lyon"]);
    }

    #[test]
    fn parse_rejects_non_numeric() {
        let spec = ColumnSpec::numerical("age");
        assert_eq!(parse_cell("", &spec), Ok(Cell::Missing));
        assert_eq!(parse_cell("3.5", &spec), Ok(Cell::Num(3.5)));
        assert!(parse_cell("old", &spec).is_err());
        assert!(parse_cell("NaN", &spec).is_err());
    }
}
