//! Scalar-generic signal primitives: Savitzky-Golay smoothing, finite-difference
//! speeds and robust location/spread statistics.

use num_traits::Float;

/// Why a Savitzky-Golay kernel cannot be built.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SavGolError {
    #[error("window length {0} must be odd")]
    EvenWindow(usize),
    #[error("window length {window} must be at least polynomial order + 2 ({order} + 2)")]
    WindowTooShort { window: usize, order: usize },
    #[error("normal equations are singular")]
    Singular,
}

fn cast<T: Float>(v: f64) -> T {
    T::from(v).expect("scalar type must represent small f64 constants")
}

/// Solve the dense system `a * x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n`.
fn solve_dense<T: Float>(mut a: Vec<T>, mut b: Vec<T>, n: usize) -> Option<Vec<T>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i * n + col]
                .abs()
                .partial_cmp(&a[j * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot * n + col].abs() <= T::epsilon() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] = a[row * n + k] - f * v;
            }
            let v = b[col];
            b[row] = b[row] - f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Kernel weights that evaluate the least-squares polynomial of `order`, fitted
/// over a window of `window` equally spaced samples, at offset `at` from the
/// window centre (`-h..=h`, `h = window / 2`).
pub fn savgol_weights<T: Float>(window: usize, order: usize, at: isize) -> Result<Vec<T>, SavGolError> {
    if window % 2 == 0 {
        return Err(SavGolError::EvenWindow(window));
    }
    if window < order + 2 {
        return Err(SavGolError::WindowTooShort { window, order });
    }
    let half = (window / 2) as isize;
    let terms = order + 1;
    // positions scaled to [-1, 1] keep the normal matrix well conditioned
    let scale = if half == 0 { 1.0 } else { half as f64 };
    let z: Vec<T> = (-half..=half).map(|i| cast::<T>(i as f64 / scale)).collect();
    let powers = |v: T| -> Vec<T> {
        let mut p = Vec::with_capacity(terms);
        let mut acc = T::one();
        for _ in 0..terms {
            p.push(acc);
            acc = acc * v;
        }
        p
    };
    let rows: Vec<Vec<T>> = z.iter().map(|&v| powers(v)).collect();
    let mut normal = vec![T::zero(); terms * terms];
    for r in &rows {
        for i in 0..terms {
            for j in 0..terms {
                normal[i * terms + j] = normal[i * terms + j] + r[i] * r[j];
            }
        }
    }
    let target = powers(cast::<T>(at as f64 / scale));
    let y = solve_dense(normal, target, terms).ok_or(SavGolError::Singular)?;
    Ok(rows
        .iter()
        .map(|r| r.iter().zip(&y).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
        .collect())
}

/// Savitzky-Golay smoothing of one contiguous run. Edge samples are evaluated
/// from the polynomial fitted to the first (last) full window, so polynomials of
/// degree `<= order` pass through unchanged everywhere. Runs shorter than the
/// window are returned as-is.
pub fn savgol_smooth<T: Float>(values: &[T], window: usize, order: usize) -> Result<Vec<T>, SavGolError> {
    let n = values.len();
    let centre = savgol_weights::<T>(window, order, 0)?;
    if n < window {
        return Ok(values.to_vec());
    }
    let half = window / 2;
    let dot = |w: &[T], start: usize| {
        w.iter()
            .zip(&values[start..start + window])
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < half {
            let w = savgol_weights::<T>(window, order, i as isize - half as isize)?;
            dot(&w, 0)
        } else if i + half >= n {
            let start = n - window;
            let w = savgol_weights::<T>(window, order, (i - start) as isize - half as isize)?;
            dot(&w, start)
        } else {
            dot(&centre, i - half)
        };
        out.push(v);
    }
    Ok(out)
}

/// Per-sample speed of a contiguous run of 2-D positions at times `t` (seconds).
/// Central differences on interior samples, one-sided at the two run edges.
pub fn run_speeds<T: Float>(t: &[T], x: &[T], y: &[T]) -> Vec<T> {
    let n = t.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let dt = t[b] - t[a];
            ((x[b] - x[a]) / dt).hypot((y[b] - y[a]) / dt)
        })
        .collect()
}

/// Median of the finite entries, `None` when there are none.
pub fn median<T: Float>(values: &[T]) -> Option<T> {
    let mut v: Vec<T> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / (T::one() + T::one())
    })
}

/// Unscaled median absolute deviation about the median.
pub fn mad<T: Float>(values: &[T]) -> Option<T> {
    let m = median(values)?;
    let dev: Vec<T> = values
        .iter()
        .filter(|x| x.is_finite())
        .map(|&x| (x - m).abs())
        .collect();
    median(&dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classic_seven_point_quadratic_kernel() {
        // (-2, 3, 6, 7, 6, 3, -2) / 21
        let w = savgol_weights::<f64>(7, 2, 0).unwrap();
        let expect = [-2.0, 3.0, 6.0, 7.0, 6.0, 3.0, -2.0].map(|v| v / 21.0);
        for (a, b) in w.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_windows() {
        assert_eq!(savgol_weights::<f64>(6, 2, 0), Err(SavGolError::EvenWindow(6)));
        assert_eq!(
            savgol_weights::<f64>(3, 2, 0),
            Err(SavGolError::WindowTooShort { window: 3, order: 2 })
        );
    }

    #[test]
    fn constant_and_ramp_pass_through() {
        let c = vec![42.5_f64; 20];
        for (a, b) in savgol_smooth(&c, 7, 2).unwrap().iter().zip(&c) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
        let ramp: Vec<f64> = (0..20).map(|i| 3.0 + 1.5 * i as f64).collect();
        for (a, b) in savgol_smooth(&ramp, 7, 2).unwrap().iter().zip(&ramp) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_precision_smoothing() {
        let ramp: Vec<f32> = (0..12).map(|i| i as f32).collect();
        let s = savgol_smooth(&ramp, 5, 1).unwrap();
        for (a, b) in s.iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn short_runs_are_untouched() {
        let v = [1.0, 9.0, 2.0];
        assert_eq!(savgol_smooth(&v, 7, 2).unwrap(), v.to_vec());
    }

    #[test]
    fn speeds_on_constant_velocity() {
        let t: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        let x: Vec<f64> = (0..5).map(|i| 10.0 * i as f64).collect();
        let y = vec![7.0; 5];
        for s in run_speeds(&t, &x, &y) {
            assert_relative_eq!(s, 100.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn robust_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median::<f64>(&[]), None);
        // |x - 2| = 1, 1, 0, 2, 98 -> median 1
        assert_eq!(mad(&[1.0, 3.0, 2.0, 4.0, 100.0]), Some(1.0));
    }
}
