use super::table::ObservationTable;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Draws two disjoint index sets of sizes `n_train` and `n_test` from
/// `0..n` without replacement. Each set is returned in ascending order.
pub fn split_indices(n: usize, n_train: usize, n_test: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let wanted = n_train.checked_add(n_test).ok_or_else(|| Error::InvalidInput("split sizes overflow".into()))?;
    if wanted > n {
        return Err(Error::InvalidInput(format!(
            "split needs {n_train} + {n_test} = {wanted} rows but only {n} are available"
        )));
    }
    let mut rng = StreamRng::new(seed, 0);
    let mut idx: Vec<usize> = (0..n).collect();
    // partial Fisher-Yates: the first `wanted` slots become a uniform sample
    for i in 0..wanted {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..wanted].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    table: &ObservationTable,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(ObservationTable, ObservationTable)> {
    let (train, test) = split_indices(table.len(), n_train, n_test, seed)?;
    Ok((table.select(&train), table.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn disjoint_subsets_of_requested_size() {
        let (a, b) = split_indices(10, 5, 2, 7).unwrap();
        assert_eq!((a.len(), b.len()), (5, 2));
        let union: HashSet<_> = a.iter().chain(&b).collect();
        assert_eq!(union.len(), 7);
        assert!(union.iter().all(|&&i| i < 10));
    }

    #[test]
    fn deterministic_for_seed() {
        assert_eq!(split_indices(1000, 300, 100, 7).unwrap(), split_indices(1000, 300, 100, 7).unwrap());
        assert_ne!(split_indices(1000, 300, 100, 7).unwrap(), split_indices(1000, 300, 100, 8).unwrap());
    }

    #[test]
    fn oversized_request_rejected() {
        assert!(split_indices(10, 8, 5, 1).is_err());
        assert!(split_indices(10, usize::MAX, 5, 1).is_err());
    }

    #[test]
    fn whole_table_can_be_used() {
        let (a, b) = split_indices(6, 4, 2, 3).unwrap();
        let mut all: Vec<_> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn roughly_uniform_inclusion() {
        let mut hits = vec![0usize; 20];
        for seed in 0..2000 {
            for i in split_indices(20, 5, 0, seed).unwrap().0 {
                hits[i] += 1;
            }
        }
        // expected 500 each; binomial sd ≈ 19
        assert!(hits.iter().all(|&h| (400..600).contains(&h)), "{hits:?}");
    }
}
