use super::sv::Field;

/// Normalized 1D Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Mirror `i` into `0..n` with the edge sample repeated (period `2n`).
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

fn convolve_line(src: &[f64], dst: &mut [f64], kernel: &[f64]) {
    let n = src.len();
    let r = (kernel.len() / 2) as i64;
    for (i, d) in dst.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, w) in kernel.iter().enumerate() {
            acc += w * src[reflect(i as i64 + k as i64 - r, n)];
        }
        *d = acc;
    }
}

/// Separable Gaussian blur with mirrored edges. The operator is doubly
/// stochastic, so it keeps constants fixed and preserves total mass.
pub fn smooth(field: &Field, sigma: f64) -> Field {
    assert!(sigma > 0.0, "sigma must be positive");
    let (w, h) = (field.width(), field.height());
    let kernel = gaussian_kernel(sigma);
    let mut rows = Field::zeros(w, h);
    for y in 0..h {
        let src = &field.data()[y * w..(y + 1) * w];
        convolve_line(src, &mut rows.data_mut()[y * w..(y + 1) * w], &kernel);
    }
    let mut out = Field::zeros(w, h);
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = rows.data()[y * w + x];
        }
        convolve_line(&col, &mut col_out, &kernel);
        for y in 0..h {
            out.data_mut()[y * w + x] = col_out[y];
        }
    }
    out
}
