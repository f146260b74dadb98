//! Composite trapezoidal quadrature on uniform samples.

use alloc::vec::Vec;

/// `h * (f_0/2 + f_1 + ... + f_{n-2} + f_{n-1}/2)`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (0.5 * (values[0] + values[n - 1]) + interior)
        }
    }
}

/// Running integral from the first sample: `y_0 = initial`,
/// `y_{k+1} = y_k + h (f_k + f_{k+1}) / 2`.
pub fn cumulative_forward(values: &[f64], h: f64, initial: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    if values.is_empty() {
        return out;
    }
    let mut acc = initial;
    out.push(acc);
    for pair in values.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Running integral anchored at the last sample: `y_{n-1} = terminal`,
/// `y_k = y_{k+1} - h (f_k + f_{k+1}) / 2`.
pub fn cumulative_backward(values: &[f64], h: f64, terminal: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = alloc::vec![0.0; n];
    if n == 0 {
        return out;
    }
    let mut acc = terminal;
    out[n - 1] = acc;
    for k in (0..n - 1).rev() {
        acc -= 0.5 * h * (values[k] + values[k + 1]);
        out[k] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_integrand_is_exact() {
        // f(x) = 2x on [0, 1], h = 0.25
        let f: Vec<f64> = (0..5).map(|k| 2.0 * k as f64 * 0.25).collect();
        assert!((trapezoid(&f, 0.25) - 1.0).abs() < 1e-15);
        let fw = cumulative_forward(&f, 0.25, 0.0);
        for (k, y) in fw.iter().enumerate() {
            let x = k as f64 * 0.25;
            assert!((y - x * x).abs() < 1e-15);
        }
        let bw = cumulative_backward(&f, 0.25, 0.0);
        for (k, y) in bw.iter().enumerate() {
            let x = k as f64 * 0.25;
            assert!((y - (x * x - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_lengths() {
        assert_eq!(trapezoid(&[], 1.0), 0.0);
        assert_eq!(trapezoid(&[3.0], 1.0), 0.0);
        assert!(cumulative_forward(&[], 1.0, 0.0).is_empty());
        assert_eq!(cumulative_backward(&[7.0], 1.0, 2.0), alloc::vec![2.0]);
    }
}
