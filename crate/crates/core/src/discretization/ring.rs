//! Angular derivatives on one periodic ring of `N` equispaced samples.
//!
//! The ring values are replaced by their trigonometric interpolant truncated to
//! modes `|m| ≤ cap` (`cap < N/2`), which is then differentiated exactly.
//! Both operators are circulant, so only one kernel row is stored.

use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct RingOps {
    cap: usize,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl RingOps {
    pub fn new(n: usize, cap: usize) -> Self {
        assert!(2 * cap < n, "mode cap {cap} must stay below the Nyquist mode of {n} samples");
        let scale = 2.0 / n as f64;
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for (i, (a, b)) in d1.iter_mut().zip(d2.iter_mut()).enumerate() {
            let theta = 2.0 * PI * i as f64 / n as f64;
            for m in 1..=cap {
                let mf = m as f64;
                let (s, c) = (mf * theta).sin_cos();
                *a -= scale * mf * s;
                *b -= scale * mf * mf * c;
            }
        }
        RingOps { cap, d1, d2 }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn first(&self, v: &[f64], out: &mut [f64]) {
        apply(&self.d1, v, out);
    }

    pub fn second(&self, v: &[f64], out: &mut [f64]) {
        apply(&self.d2, v, out);
    }
}

fn apply(kernel: &[f64], v: &[f64], out: &mut [f64]) {
    let n = kernel.len();
    debug_assert!(v.len() == n && out.len() == n);
    for (l, o) in out.iter_mut().enumerate() {
        // out[l] = Σ_k kernel[(l − k) mod n] v[k]
        let (head, tail) = kernel.split_at(l + 1);
        let mut acc = 0.0;
        for (kv, kw) in v[..=l].iter().zip(head.iter().rev()) {
            acc += kv * kw;
        }
        for (kv, kw) in v[l + 1..].iter().zip(tail.iter().rev()) {
            acc += kv * kw;
        }
        *o = acc;
    }
}
