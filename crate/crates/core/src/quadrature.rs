//! Globally adaptive Gauss–Kronrod (7/15) quadrature for integrands with
//! integrable endpoint singularities.
//!
//! The interval is first cut into dyadic panels that shrink geometrically
//! towards the singular endpoint, then the panel with the largest error
//! estimate is bisected until the summed estimate meets the tolerance.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Target absolute error.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Hard cap on bisection depth below a starting panel.
pub const MAX_REFINEMENT_LEVELS: u32 = 60;
const DYADIC_PANELS: u32 = 60;
const MAX_INTERVALS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub tolerance: f64,
    pub max_levels: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_levels: MAX_REFINEMENT_LEVELS,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One G7K15 application on `[a, b]`; endpoints are never evaluated.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = rescale_error(
        (res_k - res_g) * half,
        res_abs * half.abs(),
        res_asc * half.abs(),
    );
    (res_k * half, err)
}

/// Adaptive integration over the given starting panels.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    panels: &[(f64, f64)],
    settings: QuadSettings,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for &(a, b) in panels {
        let (value, error) = gk15(&f, a, b);
        evaluations += 15;
        heap.push(Segment {
            a,
            b,
            value,
            error,
            depth: 0,
        });
    }
    let mut run_value: f64 = heap.iter().map(|s: &Segment| s.value).sum();
    let mut run_error: f64 = heap.iter().map(|s: &Segment| s.error).sum();

    loop {
        let value = run_value + frozen_value;
        let error = run_error + frozen_error;
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NumericalAccuracy {
                estimate: value,
                error_bound: f64::INFINITY,
            });
        }
        if error <= settings.tolerance {
            // Re-sum to shed drift from the running totals.
            let value = heap.iter().map(|s| s.value).sum::<f64>() + frozen_value;
            let error = heap.iter().map(|s| s.error).sum::<f64>() + frozen_error;
            return Ok(QuadResult {
                value,
                abs_error: error,
                evaluations,
            });
        }
        if frozen_error > settings.tolerance || heap.len() >= MAX_INTERVALS {
            return Err(Error::NumericalAccuracy {
                estimate: value,
                error_bound: error,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::NumericalAccuracy {
                estimate: value,
                error_bound: error,
            });
        };
        run_value -= worst.value;
        run_error -= worst.error;
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= settings.max_levels || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            evaluations += 15;
            run_value += value;
            run_error += error;
            heap.push(Segment {
                a,
                b,
                value,
                error,
                depth: worst.depth + 1,
            });
        }
    }
}

/// Integral of `f` over `(0, h]` where `f` may be singular at 0.
pub fn integrate_left_singular<F: Fn(f64) -> f64>(
    f: F,
    h: f64,
    settings: QuadSettings,
) -> Result<QuadResult> {
    let mut panels = Vec::with_capacity(DYADIC_PANELS as usize + 1);
    let mut right = h;
    for _ in 0..DYADIC_PANELS {
        let left = 0.5 * right;
        panels.push((left, right));
        right = left;
    }
    panels.push((0.0, right));
    integrate_panels(f, &panels, settings)
}

/// Integral over the open unit interval of an integrand that may be
/// singular at both ends. The upper half is passed to `g` in the mirrored
/// coordinate `t = 1 - u`, so callers can evaluate it without rounding
/// `1 - t` near `u = 1`: the result is `int_0^{1/2} lower(t) dt + int_0^{1/2} upper(t) dt`.
pub fn integrate_unit_split<F, G>(lower: F, upper: G, settings: QuadSettings) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let half = QuadSettings {
        tolerance: 0.5 * settings.tolerance,
        ..settings
    };
    let a = integrate_left_singular(lower, 0.5, half)?;
    let b = integrate_left_singular(upper, 0.5, half)?;
    Ok(QuadResult {
        value: a.value + b.value,
        abs_error: a.abs_error + b.abs_error,
        evaluations: a.evaluations + b.evaluations,
    })
}
