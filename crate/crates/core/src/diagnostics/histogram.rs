/// Linear-interpolation quantile of unsorted data (`p ∈ [0, 1]`).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// `2·IQR·n^(−1/3)`, falling back to a range-based width for flat data.
pub fn freedman_diaconis_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 1.0;
    }
    let iqr = quantile(values, 0.75) - quantile(values, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    if width > 0.0 {
        return width;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if hi > lo {
        (hi - lo) / (n as f64).sqrt()
    } else {
        1.0
    }
}

/// Fixed-width histogram whose bin edges are integer multiples of the width,
/// so histograms built with the same width are directly comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub start: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[f64], bin_width: Option<f64>) -> Self {
        let width = bin_width
            .filter(|w| *w > 0.0)
            .unwrap_or_else(|| freedman_diaconis_width(values));
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Self {
                start: 0.0,
                bin_width: width,
                counts: Vec::new(),
            };
        }
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = (lo / width).floor();
        let nbins = ((hi / width).floor() - first) as usize + 1;
        let mut counts = vec![0u64; nbins];
        for v in finite {
            let k = (((v / width).floor() - first) as usize).min(nbins - 1);
            counts[k] += 1;
        }
        Self {
            start: first * width,
            bin_width: width,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lower edge, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (self.start + k as f64 * self.bin_width, c))
    }
}
