use super::DriftError;

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical CDFs. The gap is tracked in integer counts, so D is exact up to a
/// single rounding.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, DriftError> {
    if a.is_empty() || b.is_empty() {
        return Err(DriftError::EmptySample);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    // max |i/n - j/m| scaled by n*m
    let mut d: u128 = 0;
    while i < x.len() && j < y.len() {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as u128 * m as u128).abs_diff(j as u128 * n as u128));
    }
    Ok(d as f64 / (n as u128 * m as u128) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0 / 3.0);
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(DriftError::EmptySample)));
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone_invariant(
            a in proptest::collection::vec(-5.0f64..5.0, 1..30),
            b in proptest::collection::vec(-5.0f64..5.0, 1..30),
        ) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            let f = |v: &f64| v.exp() * 3.0 + 1.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert!((d - ks_statistic(&ta, &tb).unwrap()).abs() < 1e-12);
        }
    }
}
