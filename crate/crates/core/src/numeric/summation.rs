/// Pairwise (tree) summation with a fixed split order.
///
/// The result depends only on the order of `values`, never on how the
/// slice was produced, which keeps reductions reproducible across thread
/// counts.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_small() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.5, 2.5]), 4.0);
    }

    #[test]
    fn counts_are_exact() {
        let ones = vec![1.0; 100_003];
        assert_eq!(pairwise_sum(&ones), 100_003.0);
    }

    #[test]
    fn better_than_naive_on_many_small_terms() {
        let v = vec![0.1; 1_000_000];
        let err = (pairwise_sum(&v) - 100_000.0).abs();
        assert!(err < 1e-8, "err = {err}");
    }
}
