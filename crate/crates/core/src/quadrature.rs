//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};
use crate::scalar::{CompensatedSum, Real};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-12), rel_tol: T::lit(1e-12), max_subdivisions: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// One G7K15 panel: (kronrod estimate, |kronrod - gauss|).
fn panel<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

struct Interval<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Interval<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T: Real> Eq for Interval<T> {}
impl<T: Real> PartialOrd for Interval<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Interval<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until
/// `error <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return domain("integration limits must be finite");
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let (v, e) = panel(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value: v, error: e });
    let mut evaluations = 15;
    let mut splits = 0;
    loop {
        let (value, error) = totals(&heap);
        if !value.is_finite() {
            return Err(Error::Divergent("integrand produced a non-finite value".into()));
        }
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, evaluations });
        }
        if splits >= cfg.max_subdivisions {
            return Err(Error::Divergent(format!("no convergence after {splits} subdivisions, error {error}")));
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = (worst.a + worst.b) / T::lit(2.0);
        if m <= worst.a || m >= worst.b {
            // interval exhausted at machine resolution; accept it as is
            let (value, error) = totals(&heap);
            return Ok(QuadResult { value: value + worst.value, error: error + worst.error, evaluations });
        }
        for (lo, hi) in [(worst.a, m), (m, worst.b)] {
            let (v, e) = panel(&f, lo, hi);
            heap.push(Interval { a: lo, b: hi, value: v, error: e });
        }
        evaluations += 30;
        splits += 1;
    }
}

fn totals<T: Real>(heap: &BinaryHeap<Interval<T>>) -> (T, T) {
    let mut v = CompensatedSum::new();
    let mut e = CompensatedSum::new();
    for iv in heap.iter() {
        v.add(iv.value);
        e.add(iv.error);
    }
    (v.value(), e.value())
}
