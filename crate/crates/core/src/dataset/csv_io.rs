use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{FeatureColumns, FeatureSchema, FeatureTable, LabelNormalizer, RowOrigin};
use crate::error::{Error, Result};

/// Ingestion diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Rows removed because a feature or timestamp was non-finite or unparseable,
    /// or the label was empty.
    pub rows_dropped: usize,
}

/// Loads a flow-feature CSV. See [`read_flow_csv`].
pub fn load_flow_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    labels: &LabelNormalizer,
) -> Result<(FeatureTable, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_flow_csv(file, &path.display().to_string(), schema, labels)
}

/// Loads several flow-feature CSVs concurrently and stacks them in the given
/// order. Rows are then stably sorted by timestamp if the files have one.
pub fn load_flow_csvs<P: AsRef<Path> + Sync>(
    paths: &[P],
    schema: &FeatureSchema,
    labels: &LabelNormalizer,
) -> Result<(FeatureTable, LoadReport)> {
    let loaded = paths
        .par_iter()
        .map(|p| load_flow_csv(p, schema, labels))
        .collect::<Result<Vec<_>>>()?;
    let mut report = LoadReport::default();
    for (_, r) in &loaded {
        report.rows_read += r.rows_read;
        report.rows_dropped += r.rows_dropped;
    }
    let tables: Vec<FeatureTable> = loaded.into_iter().map(|(t, _)| t).collect();
    let mut table = FeatureTable::concat(&tables)?;
    table.sort_by_timestamp();
    Ok((table, report))
}

fn parse_finite(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses comma-separated flow records with a header row. Lines starting with
/// `#` are skipped. If the schema names a timestamp column the rows are stably
/// sorted by it; otherwise file order is kept.
///
/// With [`FeatureColumns::AllOthers`] and no explicit timestamp, a column
/// called `timestamp` is taken as the timestamp.
pub fn read_flow_csv<R: Read>(
    reader: R,
    source: &str,
    schema: &FeatureSchema,
    labels: &LabelNormalizer,
) -> Result<(FeatureTable, LoadReport)> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Data(format!("{source}: file is empty")));
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{source}: missing column `{name}`")))
    };

    let label_at = position(&schema.label)?;
    let timestamp = match (&schema.timestamp, &schema.features) {
        (Some(name), _) => Some((name.clone(), position(name)?)),
        (None, FeatureColumns::AllOthers) => header
            .iter()
            .position(|h| h == "timestamp")
            .map(|i| ("timestamp".to_string(), i)),
        (None, FeatureColumns::Named(_)) => None,
    };
    let feature_names: Vec<String> = match &schema.features {
        FeatureColumns::Named(names) => names.clone(),
        FeatureColumns::AllOthers => header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_at && timestamp.as_ref().map(|t| t.1) != Some(i))
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(Error::Schema(format!("{source}: no feature columns")));
    }
    let feature_at = feature_names
        .iter()
        .map(|n| position(n))
        .collect::<Result<Vec<_>>>()?;

    let mut report = LoadReport::default();
    let mut columns = vec![Vec::new(); feature_names.len()];
    let mut raw_labels = Vec::new();
    let mut times = Vec::new();
    let mut provenance = Vec::new();
    let mut values = vec![0.0; feature_names.len()];
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        report.rows_read += 1;
        let parsed = feature_at
            .iter()
            .zip(values.iter_mut())
            .all(|(&i, slot)| match parse_finite(&record[i]) {
                Some(v) => {
                    *slot = v;
                    true
                }
                None => false,
            });
        let time = match &timestamp {
            Some((_, i)) => parse_finite(&record[*i]),
            None => Some(0.0),
        };
        let label = labels.normalize(&record[label_at]);
        match (parsed, time, label) {
            (true, Some(t), Some(l)) => {
                for (column, &v) in columns.iter_mut().zip(&values) {
                    column.push(v);
                }
                times.push(t);
                raw_labels.push(l);
                provenance.push(RowOrigin { source: 0, row });
            }
            _ => report.rows_dropped += 1,
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::Data(format!(
            "{source}: no usable rows ({} read, {} dropped)",
            report.rows_read, report.rows_dropped
        )));
    }

    let mut table = FeatureTable::new(feature_names, columns, &raw_labels)?
        .with_label_name(schema.label.clone())
        .with_provenance(vec![source.to_string()], provenance);
    if let Some((name, _)) = timestamp {
        table = table.with_timestamps(name, times)?;
        table.sort_by_timestamp();
    }
    Ok((table, report))
}

/// Writes a table in the same CSV dialect it is read from: timestamp column
/// (if any), feature columns, label column. `comment` is emitted first as a
/// `# `-prefixed line.
pub fn write_flow_csv<W: Write>(
    table: &FeatureTable,
    mut writer: W,
    comment: Option<&str>,
) -> Result<()> {
    if let Some(comment) = comment {
        writeln!(writer, "# {comment}")?;
    }
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::with_capacity(table.n_features() + 2);
    header.extend(table.timestamp_name());
    header.extend(table.feature_names().iter().map(String::as_str));
    header.push(table.label_name());
    csv.write_record(&header)?;

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..table.n_rows() {
        record.clear();
        if let Some(ts) = table.timestamps() {
            record.push(ts[i].to_string());
        }
        record.extend(table.columns().iter().map(|c| c[i].to_string()));
        record.push(table.label_of(i).to_string());
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, schema: &FeatureSchema) -> Result<(FeatureTable, LoadReport)> {
        read_flow_csv(
            text.as_bytes(),
            "test.csv",
            schema,
            &LabelNormalizer::default(),
        )
    }

    fn ab_schema() -> FeatureSchema {
        FeatureSchema::new(vec!["a".into(), "b".into()], "class1", None).unwrap()
    }

    #[test]
    fn drops_non_finite_rows() {
        let text = "a,b,class1\n1,2,VPN\n3,Infinity,Non-VPN\n5,6,non-vpn\n7,x,VPN\n";
        let (table, report) = load(text, &ab_schema()).unwrap();
        assert_eq!(report.rows_read, 4);
        assert_eq!(report.rows_dropped, 2);
        assert_eq!(table.n_rows(), 2);
        assert_eq!(table.column(1), &[2.0, 6.0]);
        assert_eq!(table.provenance()[1].row, 2);
        assert_eq!(table.label_of(1), "NonVPN");
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = load("a,class1\n1,VPN\n", &ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn empty_input_is_data_error() {
        assert!(matches!(load("", &ab_schema()), Err(Error::Data(_))));
        assert!(matches!(
            load("a,b,class1\n", &ab_schema()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn sorts_by_timestamp_and_skips_comments() {
        let text =
            "# dsrr: w=4,a=1,mode=replace\ntimestamp,a,class1\n3,30,VPN\n1,10,NonVPN\n2,20,VPN\n";
        let (table, _) = load(text, &FeatureSchema::auto("class1", None)).unwrap();
        assert_eq!(table.feature_names(), &["a".to_string()]);
        assert_eq!(table.column(0), &[10.0, 20.0, 30.0]);
        assert_eq!(table.timestamps().unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn write_then_read_is_identity() {
        let text = "timestamp,a,b,class1\n1,0.1,2e-7,VPN\n2,-3.5,1e300,NonVPN\n";
        let schema = FeatureSchema::auto("class1", None);
        let (table, _) = load(text, &schema).unwrap();
        let mut out = Vec::new();
        write_flow_csv(&table, &mut out, Some("dsrr: w=40,a=1,mode=replace")).unwrap();
        let written = String::from_utf8(out).unwrap();
        assert!(written.starts_with("# dsrr: w=40,a=1,mode=replace\ntimestamp,a,b,class1\n"));
        let (again, _) = load(&written, &schema).unwrap();
        assert_eq!(again.columns(), table.columns());
        assert_eq!(again.labels(), table.labels());
    }
}
