use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads `(item_id, price)` pairs from a CSV with `id` and `price` columns.
pub fn load_prices(path: &Path) -> Result<Vec<(u64, f64)>> {
    read_prices(File::open(path)?, &path.display().to_string())
}

pub fn read_prices<R: Read>(reader: R, label: &str) -> Result<Vec<(u64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema { path: label.to_string(), msg: format!("missing column {name:?}") })
    };
    let (id_col, price_col) = (column("id")?, column("price")?);

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::Parse { path: label.to_string(), line, msg };
        let field = |col: usize| record.get(col).ok_or_else(|| err("row is missing a field".into()));
        let id: u64 = field(id_col)?.parse().map_err(|_| err(format!("invalid id {:?}", &record[id_col])))?;
        let price: f64 =
            field(price_col)?.parse().map_err(|_| err(format!("invalid price {:?}", &record[price_col])))?;
        if !(price.is_finite() && price >= 0.0) {
            return Err(err(format!("price {price} must be finite and non-negative")));
        }
        if !seen.insert(id) {
            return Err(err(format!("duplicate id {id}")));
        }
        out.push((id, price));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Vec<(u64, f64)>> {
        read_prices(text.as_bytes(), "mem")
    }

    #[test]
    fn parses_rows() {
        assert_eq!(read("id,price\n1,9.99\n").unwrap(), vec![(1, 9.99)]);
        assert_eq!(read("price, id\n2.5, 7\n").unwrap(), vec![(7, 2.5)]);
    }

    #[test]
    fn duplicate_id_is_rejected_with_line() {
        match read("id,price\n1,1.0\n2,2.0\n1,3.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_price_column_is_schema_error() {
        assert!(matches!(read("id,cost\n1,2\n"), Err(Error::Schema { .. })));
    }

    #[test]
    fn negative_and_garbage_rejected() {
        assert!(matches!(read("id,price\n1,-2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read("id,price\n1,abc\n"), Err(Error::Parse { line: 2, .. })));
    }
}
