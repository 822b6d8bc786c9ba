use rayon::prelude::*;

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::rescaled_range::{dsrr_transform, DsrrConfig, PartialBlock, TransformMode};

fn transformed_name(name: &str) -> String {
    format!("dsrr_{name}")
}

/// Applies the DSRR transform to every feature column, in row order.
///
/// In replace mode the columns keep their names; in augment mode the
/// transformed columns are appended as `dsrr_<name>`. The returned partial
/// block is shared by all columns.
pub fn transform_table(
    table: &FeatureTable,
    config: &DsrrConfig,
) -> Result<(FeatureTable, Option<PartialBlock>)> {
    config.validate()?;
    let outputs = table
        .columns()
        .par_iter()
        .map(|c| dsrr_transform(c, config))
        .collect::<Result<Vec<_>>>()?;
    let partial = outputs.first().and_then(|o| o.partial_block);
    let transformed: Vec<Vec<f64>> = outputs.into_iter().map(|o| o.values).collect();

    let (names, columns) = match config.mode {
        TransformMode::Replace => (table.feature_names().to_vec(), transformed),
        TransformMode::Augment => {
            let mut names = table.feature_names().to_vec();
            names.extend(table.feature_names().iter().map(|n| transformed_name(n)));
            let mut columns = table.columns().to_vec();
            columns.extend(transformed);
            (names, columns)
        }
    };
    Ok((table.with_columns(names, columns), partial))
}

/// Transforms each index subset as its own series (rows in the given order)
/// and assembles the results into one table. Every row must appear in exactly
/// one part. Returns the partial block of each part.
pub fn transform_parts(
    table: &FeatureTable,
    parts: &[&[usize]],
    config: &DsrrConfig,
) -> Result<(FeatureTable, Vec<Option<PartialBlock>>)> {
    let covered: usize = parts.iter().map(|p| p.len()).sum();
    if covered != table.n_rows() {
        return Err(Error::Parameter(format!(
            "parts cover {covered} rows, table has {}",
            table.n_rows()
        )));
    }
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut partials = Vec::with_capacity(parts.len());
    for indices in parts {
        let (done, partial) = transform_table(&table.select_rows(indices), config)?;
        partials.push(partial);
        if columns.is_empty() {
            names = done.feature_names().to_vec();
            columns = vec![vec![0.0; table.n_rows()]; done.n_features()];
        }
        for (column, values) in columns.iter_mut().zip(done.columns()) {
            for (&row, &v) in indices.iter().zip(values) {
                column[row] = v;
            }
        }
    }
    Ok((table.with_columns(names, columns), partials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FeatureTable {
        FeatureTable::new(
            vec!["x".into()],
            vec![vec![1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0]],
            &["a", "a", "a", "a", "b", "b", "b", "b"],
        )
        .unwrap()
    }

    #[test]
    fn replace_and_augment() {
        let config = DsrrConfig::new(4, 1).unwrap();
        let (t, partial) = transform_table(&table(), &config).unwrap();
        assert!(partial.is_none());
        assert_eq!(t.feature_names(), &["x".to_string()]);
        assert_eq!(&t.column(0)[4..], &[0.0; 4]);

        let config = DsrrConfig {
            mode: TransformMode::Augment,
            ..config
        };
        let (t, _) = transform_table(&table(), &config).unwrap();
        assert_eq!(t.feature_names(), &["x".to_string(), "dsrr_x".to_string()]);
        assert_eq!(t.column(0), table().column(0));
    }

    #[test]
    fn subset_transform_writes_back() {
        let config = DsrrConfig::new(2, 1).unwrap();
        let (t, _) = transform_parts(&table(), &[&[0, 2, 4, 6], &[1, 3, 5, 7]], &config).unwrap();
        // subset series [1, 3, 10, 10] → blocks [1,3] and [10,10]
        // and [2, 4, 10, 10] → [2,4] and [10,10]
        assert_eq!(t.column(0), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(transform_parts(&table(), &[&[0, 1]], &config).is_err());
    }
}
