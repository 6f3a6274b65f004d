use statrs::distribution::{ContinuousCDF, Normal};

/// One-sided Wilcoxon signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs with non-zero difference.
    pub n: usize,
    pub exact: bool,
}

/// Tests whether `x - y` tends to be positive. Zero differences are dropped
/// and tied magnitudes share their average rank. The exact null
/// distribution is used for up to 50 pairs without ties, the normal
/// approximation with tie correction otherwise.
pub fn wilcoxon_greater(x: &[f64], y: &[f64]) -> Wilcoxon {
    assert_eq!(x.len(), y.len(), "paired samples must have equal length");
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Wilcoxon {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
        };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    if tie_term == 0.0 && n <= 50 {
        // counts[s] = number of sign patterns with rank sum s
        let max = n * (n + 1) / 2;
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for r in 1..=n {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w_int = w.round() as usize;
        let tail: f64 = counts[w_int..].iter().sum();
        return Wilcoxon {
            statistic: w,
            p_value: (tail / total).min(1.0),
            n,
            exact: true,
        };
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 { (w - mean) / var.sqrt() } else { 0.0 };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Wilcoxon {
        statistic: w,
        p_value: 1.0 - normal.cdf(z),
        n,
        exact: false,
    }
}

/// Tests whether `x - y` tends to be negative.
pub fn wilcoxon_less(x: &[f64], y: &[f64]) -> Wilcoxon {
    wilcoxon_greater(y, x)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from scipy.stats.wilcoxon(x, y, alternative="greater")
    #[test]
    fn exact_small_sample() {
        let x = [1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30];
        let y = [0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29];
        let r = wilcoxon_greater(&x, &y);
        assert!(r.exact);
        assert_eq!(r.statistic, 40.0);
        assert!((r.p_value - 0.01953125).abs() < 1e-12, "{}", r.p_value);
    }

    #[test]
    fn normal_approximation_with_ties() {
        let x = [3.0, 5.0, 2.0, 6.0, 4.0, 7.0, 5.0, 8.0, 1.0, 6.0, 4.0, 9.0];
        let y = [1.0, 2.0, 3.0, 3.0, 2.0, 4.0, 5.0, 2.0, 2.0, 3.0, 1.0, 4.0];
        let r = wilcoxon_greater(&x, &y);
        assert!(!r.exact);
        assert_eq!(r.n, 11);
        assert_eq!(r.statistic, 63.0);
        // scipy: method="approx", correction=False
        assert!((r.p_value - 0.0035004709947243163).abs() < 1e-12, "{}", r.p_value);
    }

    #[test]
    fn degenerate_and_symmetric() {
        assert_eq!(wilcoxon_greater(&[1.0, 2.0], &[1.0, 2.0]).p_value, 1.0);
        let a = [0.1, 0.4, 0.35, 0.2, 0.9];
        let b = [0.3, 0.1, 0.5, 0.25, 0.2];
        let g = wilcoxon_greater(&a, &b);
        let l = wilcoxon_less(&a, &b);
        // exact tails overlap by P(W = w)
        assert!(g.p_value + l.p_value >= 1.0);
    }

    #[test]
    fn summary_stats() {
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-12);
    }
}
