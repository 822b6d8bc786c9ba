use rand::seq::SliceRandom;

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

/// Per-class shuffled split. Each class contributes `round(count × fraction)`
/// rows to the training part. Both returned index lists are ascending, so each
/// part keeps the original relative row order.
pub fn stratified_split_indices(
    labels: &[usize],
    n_classes: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class
            .get_mut(l)
            .ok_or_else(|| Error::Split(format!("class code {l} out of range")))?
            .push(i);
    }

    let mut rng = rng_from_seed(seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::with_capacity(labels.len());
    for (class, mut rows) in by_class.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Split(format!(
                "class {class} has {} row(s); stratified splitting needs at least 2",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        let n_train = (rows.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified train/test split of a table; see [`stratified_split_indices`].
pub fn stratified_split(
    table: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    let (train, test) =
        stratified_split_indices(table.labels(), table.classes().len(), train_fraction, seed)?;
    Ok((table.select_rows(&train), table.select_rows(&test)))
}
