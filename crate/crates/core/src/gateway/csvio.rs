//! Numeric CSV tables: a header row of column names, then numeric rows.

use std::io::Read;

use crate::kb::NumericTable;

use super::GatewayError;

pub fn read_table<R: Read>(reader: R) -> Result<NumericTable, GatewayError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| GatewayError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err(GatewayError::Csv("header row with column names expected".into()));
    }
    let mut table = NumericTable::new(header);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| GatewayError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row =
            rec.iter()
                .enumerate()
                .map(|(i, c)| {
                    c.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                        GatewayError::Csv(format!("line {line}, column {}: {c:?} is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
        table
            .push_row(row)
            .map_err(|e| GatewayError::Csv(format!("line {line}: {e}")))?;
    }
    Ok(table)
}

pub fn read_table_str(text: &str) -> Result<NumericTable, GatewayError> {
    read_table(text.as_bytes())
}

pub fn write_table(table: &NumericTable) -> Result<String, GatewayError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)
        .map_err(|e| GatewayError::Csv(e.to_string()))?;
    for r in &table.rows {
        w.write_record(r.iter().map(|x| x.to_string()))
            .map_err(|e| GatewayError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| GatewayError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| GatewayError::Csv(e.to_string()))
}
