//! Adaptive Gauss–Kronrod integration shared by the spectral and dynamical modules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: scalars, complex numbers and fixed-size arrays of either.
pub trait QuadValue: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    /// Max-abs norm used for error control.
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

impl<T: QuadValue, const K: usize> QuadValue for [T; K] {
    fn zero() -> Self {
        [T::zero(); K]
    }
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.iter_mut().zip(o) {
            *a = a.add(b);
        }
        self
    }
    fn sub(mut self, o: Self) -> Self {
        for (a, b) in self.iter_mut().zip(o) {
            *a = a.sub(b);
        }
        self
    }
    fn scale(mut self, s: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scale(s);
        }
        self
    }
    fn norm(self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Error targets for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-9,
            rel: 1e-8,
            max_subdivisions: 200_000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

impl<T: QuadValue> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            error: 0.0,
            evaluations: 0,
        }
    }

    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value.add(other.value),
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_289_229_190,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// One 21-point Kronrod panel with a QUADPACK-style error estimate.
fn gk21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Panel<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [T::zero(); 21];
    fv[10] = f(c);
    for k in 0..10 {
        let dx = h * XGK[k];
        fv[k] = f(c - dx);
        fv[20 - k] = f(c + dx);
    }
    let mut resk = fv[10].scale(WGK[10]);
    let mut resg = T::zero();
    let mut resabs = fv[10].norm() * WGK[10];
    for k in 0..10 {
        let pair = fv[k].add(fv[20 - k]);
        resk = resk.add(pair.scale(WGK[k]));
        resabs += WGK[k] * (fv[k].norm() + fv[20 - k].norm());
        if k % 2 == 1 {
            resg = resg.add(pair.scale(WG[k / 2]));
        }
    }
    let mean = resk.scale(0.5);
    let mut resasc = WGK[10] * fv[10].sub(mean).norm();
    for k in 0..10 {
        resasc += WGK[k] * (fv[k].sub(mean).norm() + fv[20 - k].sub(mean).norm());
    }
    let ah = h.abs();
    resasc *= ah;
    resabs *= ah;
    let mut err = resk.sub(resg).norm() * ah;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel {
        a,
        b,
        value: resk.scale(h),
        error: err,
    }
}

#[derive(PartialEq)]
struct HeapKey(f64, usize);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Globally adaptive integration over the partition given by `points`.
///
/// `points` must be ascending; each consecutive pair becomes an initial panel.
pub fn integrate<T, F>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if points.len() < 2 {
        return Ok(Estimate::exact(T::zero()));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("integration breakpoints must be finite and ascending".into()));
    }
    let mut panels: Vec<Panel<T>> = Vec::with_capacity(points.len() * 2);
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    let mut evals = 0usize;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let p = gk21(&f, w[0], w[1]);
        evals += 21;
        total_err += p.error;
        heap.push(HeapKey(p.error, panels.len()));
        panels.push(p);
    }
    let sum_values = |panels: &[Panel<T>]| panels.iter().fold(T::zero(), |s, p| s.add(p.value));
    let mut total = sum_values(&panels);
    let mut frozen_err = 0.0;
    let mut splits = 0usize;
    loop {
        let target = tol.abs.max(tol.rel * total.norm());
        if total_err <= target {
            break;
        }
        let Some(HeapKey(_, idx)) = heap.pop() else {
            break;
        };
        let p = panels[idx];
        let mid = 0.5 * (p.a + p.b);
        let width_floor = 64.0 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(f64::MIN_POSITIVE);
        if p.b - p.a <= width_floor || mid <= p.a || mid >= p.b {
            frozen_err += p.error;
            continue;
        }
        if splits >= tol.max_subdivisions {
            return Err(Error::QuadratureFailure {
                best: total.norm(),
                error: total_err,
                detail: format!("subdivision limit {} reached", tol.max_subdivisions),
            });
        }
        splits += 1;
        let left = gk21(&f, p.a, mid);
        let right = gk21(&f, mid, p.b);
        evals += 42;
        total = total.sub(p.value).add(left.value).add(right.value);
        total_err += left.error + right.error - p.error;
        panels[idx] = left;
        heap.push(HeapKey(left.error, idx));
        heap.push(HeapKey(right.error, panels.len()));
        panels.push(right);
        if splits % 512 == 0 {
            total = sum_values(&panels);
            total_err = panels.iter().map(|p| p.error).sum();
        }
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = sum_values(&panels);
    let error: f64 = panels.iter().map(|p| p.error).sum();
    let target = tol.abs.max(tol.rel * value.norm());
    if frozen_err > target {
        return Err(Error::QuadratureFailure {
            best: value.norm(),
            error,
            detail: "panels reached machine resolution".into(),
        });
    }
    Ok(Estimate {
        value,
        error,
        evaluations: evals,
    })
}

/// ∫ over [start, ∞) of `f`, mapped to (0, 1] by x = start/u.
pub fn integrate_to_infinity<T, F>(f: F, start: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(start > 0.0) {
        return Err(Error::Domain("semi-infinite integration needs a positive start".into()));
    }
    let g = |u: f64| f(start / u).scale(start / (u * u));
    let breaks = [0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0];
    integrate(g, &breaks, tol)
}

/// Ascending breakpoints covering [a, b]: the given interior points plus uniform
/// panels no wider than `max_width`.
pub fn partition(a: f64, b: f64, interior: &[f64], max_width: Option<f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    let scale = a.abs().max(b.abs()).max(1e-300);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * scale);
    let Some(w) = max_width.filter(|w| w.is_finite() && *w > 0.0) else {
        return pts;
    };
    let mut out = Vec::with_capacity(pts.len());
    for pair in pts.windows(2) {
        let n = ((pair[1] - pair[0]) / w).ceil().max(1.0) as usize;
        let step = (pair[1] - pair[0]) / n as f64;
        for k in 0..n {
            out.push(pair[0] + k as f64 * step);
        }
    }
    out.push(b);
    out
}

/// Asymptotic value of ∫ over [w, ∞) of g(x)·e^{−ixt} from repeated integration by parts.
///
/// Accurate when g is smooth and slowly varying on the scale 1/t beyond `w`.
pub fn fourier_tail<const K: usize, G>(g: &G, t: f64, w: f64) -> [Complex64; K]
where
    G: Fn(f64) -> [f64; K],
{
    let h = 0.01 * w;
    let g0 = g(w);
    let gp = g(w + h);
    let gm = g(w - h);
    let it = Complex64::new(0.0, t);
    let phase = Complex64::from_polar(1.0, -w * t);
    let mut out = [Complex64::new(0.0, 0.0); K];
    for k in 0..K {
        let d1 = (gp[k] - gm[k]) / (2.0 * h);
        let d2 = (gp[k] - 2.0 * g0[k] + gm[k]) / (h * h);
        out[k] = phase * (g0[k] / it + d1 / (it * it) + d2 / (it * it * it));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let g = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_panel_is_exact_for_high_degree_polynomials() {
        let p = gk21(&|x: f64| x.powi(30), -1.0, 1.0);
        assert!((p.value - 2.0 / 31.0).abs() < 1e-14);
        let p = gk21(&|x: f64| x.powi(18), 0.0, 1.0);
        assert!((p.value - 1.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], Tolerance::new(1e-12, 1e-12)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn complex_and_array_values() {
        let est = integrate(
            |x: f64| [Complex64::from_polar(1.0, -3.0 * x), Complex64::new(x, 0.0)],
            &[0.0, 2.0],
            Tolerance::default(),
        )
        .unwrap();
        let exact = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -6.0)) / Complex64::new(0.0, 3.0);
        assert!((est.value[0] - exact).norm() < 1e-12);
        assert!((est.value[1].re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite_lorentzian_tail() {
        let est = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), 1.0, Tolerance::new(1e-13, 1e-12)).unwrap();
        assert!((est.value - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }

    #[test]
    fn subdivision_limit_reports_best_estimate() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-15,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| (50.0 * x).sin() / x.sqrt(), &[0.0, 10.0], tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }

    #[test]
    fn partition_respects_width_and_interior_points() {
        let p = partition(0.0, 10.0, &[2.5, 2.5, 11.0], Some(1.0));
        assert_eq!(p.first(), Some(&0.0));
        assert_eq!(p.last(), Some(&10.0));
        assert!(p.windows(2).all(|w| w[1] - w[0] <= 1.0 + 1e-12 && w[1] > w[0]));
        assert!(p.contains(&2.5));
    }

    #[test]
    fn asymptotic_tail_of_power_law() {
        // ∫_W^∞ e^{-ixt}/x² dx against a long adaptive reference.
        let t = 3.0;
        let w = 40.0;
        let tail = fourier_tail(&|x: f64| [1.0 / (x * x)], t, w)[0];
        let finite = integrate(
            |x: f64| Complex64::from_polar(1.0 / (x * x), -x * t),
            &partition(w, 4000.0, &[], Some(1.0)),
            Tolerance::new(1e-14, 1e-13),
        )
        .unwrap()
        .value;
        let rest = fourier_tail(&|x: f64| [1.0 / (x * x)], t, 4000.0)[0];
        assert!((tail - (finite + rest)).norm() < 1e-8);
    }
}
