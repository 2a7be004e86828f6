//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets the tolerance. Semi-infinite ranges are truncated by
//! integrating successive segments of doubling length until a segment
//! contributes less than `tail_cutoff`.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
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
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Segment contribution below which a semi-infinite integral stops.
    pub tail_cutoff: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_subdivisions: 4000,
            tail_cutoff: 1e-16,
        }
    }
}

impl QuadratureOptions {
    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Segment {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lower,
        upper,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lower, upper]`, splitting first at any `breakpoints`
/// strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<Integral> {
    if !(lower.is_finite() && upper.is_finite()) {
        return Err(Error::domain("bounds", upper - lower, "bounds must be finite"));
    }
    if lower == upper {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            subintervals: 0,
        });
    }
    if upper < lower {
        let mut flipped = integrate(f, upper, lower, breakpoints, opts)?;
        flipped.value = -flipped.value;
        return Ok(flipped);
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lower && *b < upper)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lower);
    edges.extend(cuts);
    edges.push(upper);
    for w in edges.windows(2) {
        heap.push(kronrod(&f, w[0], w[1]));
    }
    let mut evaluations = 15 * heap.len();

    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        let tolerance = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tolerance {
            return Ok(Integral {
                value,
                abs_error: error,
                evaluations,
                subintervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lower + worst.upper);
        let exhausted = heap.len() + 2 > opts.max_subdivisions
            || mid <= worst.lower
            || mid >= worst.upper;
        if exhausted {
            heap.push(worst);
            return Err(Error::Quadrature {
                lower,
                upper,
                abs_error: error,
                tolerance,
                subintervals: heap.len(),
            });
        }
        heap.push(kronrod(&f, worst.lower, mid));
        heap.push(kronrod(&f, mid, worst.upper));
        evaluations += 30;
    }
}

/// Integrates `f` over `[lower, inf)`.
///
/// The first segment runs to just past the largest breakpoint; later
/// segments double in length until one contributes less than
/// `opts.tail_cutoff` in absolute value.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<Integral> {
    let last = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lower)
        .fold(lower, f64::max);
    let mut width = (last - lower).max(1.0);
    let mut upper = last + width;
    let mut total = integrate(&f, lower, upper, breakpoints, opts)?;
    for _ in 0..200 {
        let seg = integrate(&f, upper, upper + width, &[], opts)?;
        total.value += seg.value;
        total.abs_error += seg.abs_error;
        total.evaluations += seg.evaluations;
        total.subintervals += seg.subintervals;
        upper += width;
        width *= 2.0;
        if seg.value.abs() < opts.tail_cutoff || !upper.is_finite() {
            return Ok(total);
        }
    }
    Err(Error::Quadrature {
        lower,
        upper,
        abs_error: total.abs_error,
        tolerance: opts.tail_cutoff,
        subintervals: total.subintervals,
    })
}
