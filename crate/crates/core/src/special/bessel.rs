//! Bessel functions of the first kind, integer order.
//!
//! All orders `0..=n_max` are produced at once by Miller's backward
//! recurrence `J_{n-1} = (2n/x) J_n - J_{n+1}`, started far above the
//! turning point and normalised with `J_0 + 2 sum_k J_{2k} = 1`. For small
//! arguments the leading series term seeds the orders the recurrence cannot
//! resolve.

/// `J_n(x)` for `n = 0..=n_max`.
pub fn bessel_j_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    if ax < 1e-8 {
        // J_n(x) ~ (x/2)^n / n!
        let mut term = 1.0;
        for (n, v) in out.iter_mut().enumerate() {
            if n > 0 {
                term *= 0.5 * ax / n as f64;
            }
            *v = term;
        }
    } else {
        let top = start_order(n_max, ax);
        let tox = 2.0 / ax;
        let mut j_next = 0.0;
        let mut j_cur = 1e-300;
        let mut norm = 0.0;
        for n in (1..=top).rev() {
            let j_prev = n as f64 * tox * j_cur - j_next;
            j_next = j_cur;
            j_cur = j_prev;
            // j_cur now holds J_{n-1}
            if n - 1 <= n_max {
                out[n - 1] = j_cur;
            }
            if (n - 1) % 2 == 0 && n - 1 > 0 {
                norm += 2.0 * j_cur;
            }
            if j_cur.abs() > 1e250 {
                j_cur *= 1e-250;
                j_next *= 1e-250;
                norm *= 1e-250;
                for v in out.iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        norm += j_cur;
        for v in out.iter_mut() {
            *v /= norm;
        }
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

fn start_order(n_max: usize, ax: f64) -> usize {
    let base = (n_max as f64).max(ax);
    let m = base + 30.0 + 8.0 * ax.cbrt() + (n_max as f64 * 40.0).sqrt();
    let m = m.ceil() as usize;
    m + (m % 2)
}

/// `J_n(x)` for a single integer order (negative orders use `J_{-n} = (-1)^n J_n`).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_all(k, x)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}

pub fn j0(x: f64) -> f64 {
    bessel_j_all(0, x)[0]
}

pub fn j1(x: f64) -> f64 {
    bessel_j_all(1, x)[1]
}
