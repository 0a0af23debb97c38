//! Inner loops shared by the coordinate solvers.
//!
//! Spins are `+-1`, so a coordinate step moves every affected margin by
//! `+-delta`. Besides the margin `r` we cache `e = exp(r)` and
//! `q = 1 / (1 + e)`; a step multiplies `e` by `exp(+-delta)` instead of
//! calling `exp` per observation. `refresh` recomputes `e` from `r` exactly
//! and is called once per full sweep to stop rounding drift.

// Cached exponentials are kept inside this range; outliers are recomputed.
const E_MIN: f64 = 1e-290;
const E_MAX: f64 = 1e290;
const R_CLAMP: f64 = 660.0;

#[inline]
fn exact(r: f64) -> f64 {
    r.clamp(-R_CLAMP, R_CLAMP).exp()
}

/// `e = exp(r)`, `q = 1 / (1 + e)`.
pub(crate) fn refresh(r: &[f64], e: &mut [f64], q: &mut [f64]) {
    for ((rt, et), qt) in r.iter().zip(e.iter_mut()).zip(q.iter_mut()) {
        *et = exact(*rt);
        *qt = 1.0 / (1.0 + *et);
    }
}

/// `r += delta * a * b` for `+-1` vectors `a`, `b`, keeping `e` and `q` in step.
#[inline]
pub(crate) fn pair_shift(r: &mut [f64], e: &mut [f64], q: &mut [f64], a: &[f64], b: &[f64], delta: f64) {
    let n = r.len();
    let (e, q, a, b) = (&mut e[..n], &mut q[..n], &a[..n], &b[..n]);
    let (up, down) = (delta.exp(), (-delta).exp());
    let mut escaped = false;
    for t in 0..n {
        let s = a[t] * b[t];
        r[t] += delta * s;
        let v = e[t] * if s > 0.0 { up } else { down };
        escaped |= !(v > E_MIN && v < E_MAX);
        e[t] = v;
        q[t] = 1.0 / (1.0 + v);
    }
    if escaped {
        for t in 0..n {
            if !(e[t] > E_MIN && e[t] < E_MAX) {
                e[t] = exact(r[t]);
                q[t] = 1.0 / (1.0 + e[t]);
            }
        }
    }
}

/// `sum_t a_t * b_t * c_t` with a fixed four-way split of the accumulation.
#[inline]
pub(crate) fn pair_dot(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let n = a.len();
    let (b, c) = (&b[..n], &c[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        for l in 0..4 {
            let t = 4 * i + l;
            acc[l] += a[t] * b[t] * c[t];
        }
    }
    let mut tail = 0.0;
    for t in 4 * chunks..n {
        tail += a[t] * b[t] * c[t];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn shifts_track_exact_values(
            r0 in proptest::collection::vec(-30.0f64..30.0, 1..20),
            deltas in proptest::collection::vec(-3.0f64..3.0, 1..200),
        ) {
            let n = r0.len();
            let a: Vec<f64> = (0..n).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let b: Vec<f64> = (0..n).map(|t| if t % 3 == 0 { -1.0 } else { 1.0 }).collect();
            let mut r = r0.clone();
            let (mut e, mut q) = (vec![0.0; n], vec![0.0; n]);
            refresh(&r, &mut e, &mut q);
            for d in &deltas {
                pair_shift(&mut r, &mut e, &mut q, &a, &b, *d);
            }
            for t in 0..n {
                let exact_q = 1.0 / (1.0 + r[t].exp());
                prop_assert!((q[t] - exact_q).abs() <= 1e-12);
            }
        }

        #[test]
        fn dot_matches_naive(v in proptest::collection::vec(-10.0f64..10.0, 0..40)) {
            let w: Vec<f64> = v.iter().map(|a| a * 0.5 - 1.0).collect();
            let u: Vec<f64> = v.iter().map(|a| a.sin()).collect();
            let naive: f64 = (0..v.len()).map(|t| v[t] * w[t] * u[t]).sum();
            prop_assert!((pair_dot(&v, &w, &u) - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
        }
    }

    #[test]
    fn extreme_margins_recover() {
        let (a, b) = (vec![1.0; 3], vec![1.0, -1.0, 1.0]);
        let mut r = vec![600.0, -600.0, 0.0];
        let (mut e, mut q) = (vec![0.0; 3], vec![0.0; 3]);
        refresh(&r, &mut e, &mut q);
        for _ in 0..10 {
            pair_shift(&mut r, &mut e, &mut q, &a, &b, 30.0);
        }
        for _ in 0..10 {
            pair_shift(&mut r, &mut e, &mut q, &a, &b, -30.0);
        }
        for t in 0..3 {
            assert!(e[t].is_finite() && e[t] > 0.0);
        }
        assert!((q[2] - 0.5).abs() < 1e-12);
    }
}
