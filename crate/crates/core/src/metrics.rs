//! Numerical kernel: alignment-level aggregation, least-squares trend
//! fitting, min-max normalization, and Cohen's kappa.
//!
//! Everything here is pure; callers feed it rating tables collected by the
//! evaluation run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratings one evaluated case received across turns; `scores[k-1]` is the
/// judge rating at turn k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub case_id: String,
    pub scores: Vec<i64>,
}

impl CaseScores {
    pub fn new(case_id: impl Into<String>, scores: Vec<i64>) -> Self {
        Self {
            case_id: case_id.into(),
            scores,
        }
    }
}

/// Per-turn alignment levels AL(k), k = 1..=K.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentCurve {
    pub values: Vec<f64>,
    pub case_count: usize,
}

impl AlignmentCurve {
    pub fn new(values: Vec<f64>, case_count: usize) -> Self {
        Self { values, case_count }
    }

    pub fn turns(&self) -> usize {
        self.values.len()
    }

    /// Mean alignment level across turns (the report's "Average" column).
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Least-squares line over (k, AL(k)); the slope is the improvement rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RegressionFit {
    pub fn predict(&self, k: usize) -> f64 {
        self.slope * k as f64 + self.intercept
    }
}

fn check_rating(case_id: &str, value: i64) -> Result<()> {
    if (1..=5).contains(&value) {
        Ok(())
    } else {
        let _ = case_id;
        Err(Error::RatingOutOfRange { value })
    }
}

/// Mean rating across cases at turn `k` (1-based).
pub fn alignment_level(cases: &[CaseScores], k: usize) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("cases"));
    }
    let mut sum = 0.0;
    for case in cases {
        let score = *case
            .scores
            .get(k.wrapping_sub(1))
            .filter(|_| k >= 1)
            .ok_or_else(|| Error::MissingScore {
                case_id: case.case_id.clone(),
                turn: k,
            })?;
        check_rating(&case.case_id, score)?;
        sum += score as f64;
    }
    Ok(sum / cases.len() as f64)
}

/// AL(k) for every k = 1..=turns.
pub fn alignment_curve(cases: &[CaseScores], turns: usize) -> Result<AlignmentCurve> {
    let values = (1..=turns)
        .map(|k| alignment_level(cases, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignmentCurve::new(values, cases.len()))
}

/// Ordinary least squares over the points (k, AL(k)), k = 1..=K.
///
/// `r_squared` is 1 - SS_res/SS_tot, defined as 0 for a constant series and
/// clamped to [0, 1] against rounding.
pub fn fit_ir(curve: &AlignmentCurve) -> Result<RegressionFit> {
    let n = curve.values.len();
    if n < 2 {
        return Err(Error::DegenerateAbscissa);
    }
    let nf = n as f64;
    let x_mean = (n + 1) as f64 / 2.0;
    let y_mean = curve.values.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (i, y) in curve.values.iter().enumerate() {
        let dx = (i + 1) as f64 - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        let ss_res: f64 = curve
            .values
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let fitted = slope * ((i + 1) as f64) + intercept;
                (y - fitted) * (y - fitted)
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Global min-max scaling: N-AL(k) = (AL(k) - min)/(max - min) over the full
/// series. A constant series maps to all zeros.
pub fn normalize_al(curve: &AlignmentCurve) -> AlignmentCurve {
    let min = curve.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = curve
        .values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let values = if curve.values.is_empty() || range == 0.0 {
        vec![0.0; curve.values.len()]
    } else {
        curve.values.iter().map(|v| (v - min) / range).collect()
    };
    AlignmentCurve::new(values, curve.case_count)
}

/// Prefix-window variant: scales AL(k) by the min/max over turns 1..=k, with
/// N-AL(1) defined as 0. Kept for comparison with the global scaling above.
pub fn normalize_al_prefix(curve: &AlignmentCurve) -> AlignmentCurve {
    let mut values = Vec::with_capacity(curve.values.len());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &v) in curve.values.iter().enumerate() {
        min = min.min(v);
        max = max.max(v);
        let range = max - min;
        if i == 0 || range == 0.0 {
            values.push(0.0);
        } else {
            values.push((v - min) / range);
        }
    }
    AlignmentCurve::new(values, curve.case_count)
}

/// Cohen's kappa over two raters' integer ratings (categories 1..=5), with
/// marginal-product chance agreement.
pub fn cohen_kappa(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("ratings"));
    }
    for &value in a.iter().chain(b) {
        check_rating("", value)?;
    }
    let n = a.len() as f64;
    let mut agree = 0usize;
    let mut count_a = [0usize; 5];
    let mut count_b = [0usize; 5];
    for (&x, &y) in a.iter().zip(b) {
        if x == y {
            agree += 1;
        }
        count_a[(x - 1) as usize] += 1;
        count_b[(y - 1) as usize] += 1;
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = count_a
        .iter()
        .zip(&count_b)
        .map(|(&ca, &cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if 1.0 - p_e < 1e-12 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RISING_SERIES: [f64; 10] = [2.87, 2.94, 2.88, 3.10, 3.65, 4.13, 4.50, 4.65, 4.63, 4.70];
    const FLAT_SERIES: [f64; 10] = [3.38, 3.35, 3.40, 3.48, 3.45, 3.48, 3.41, 3.45, 3.35, 3.46];

    fn curve(values: &[f64]) -> AlignmentCurve {
        AlignmentCurve::new(values.to_vec(), 100)
    }

    #[test]
    fn alignment_level_is_the_mean_over_cases() {
        let cases = vec![
            CaseScores::new("a", vec![5, 3]),
            CaseScores::new("b", vec![5, 4]),
        ];
        assert_eq!(alignment_level(&cases, 1).unwrap(), 5.0);
        assert_eq!(alignment_level(&cases, 2).unwrap(), 3.5);
    }

    #[test]
    fn missing_turn_is_reported_with_case_and_turn() {
        let cases = vec![CaseScores::new("short", vec![4])];
        let err = alignment_level(&cases, 2).unwrap_err();
        match err {
            Error::MissingScore { case_id, turn } => {
                assert_eq!(case_id, "short");
                assert_eq!(turn, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_range_rating_is_rejected() {
        let cases = vec![CaseScores::new("bad", vec![6])];
        assert!(matches!(
            alignment_level(&cases, 1),
            Err(Error::RatingOutOfRange { value: 6 })
        ));
    }

    #[test]
    fn reference_curve_mean_reaches_the_reported_average() {
        assert!((curve(&RISING_SERIES).mean() - 3.81).abs() <= 0.005 + 1e-12);
        assert!((curve(&FLAT_SERIES).mean() - 3.42).abs() <= 0.005 + 1e-12);
    }

    #[test]
    fn perfect_line_fits_exactly() {
        let values: Vec<f64> = (1..=5).map(|k| 2.0 * k as f64 + 1.0).collect();
        let fit = fit_ir(&curve(&values)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_curves_reproduce_reported_slopes() {
        let rising = fit_ir(&curve(&RISING_SERIES)).unwrap();
        assert!((rising.slope - 0.254).abs() <= 0.002);
        assert!((rising.r_squared - 0.917).abs() <= 0.005);
        let flat = fit_ir(&curve(&FLAT_SERIES)).unwrap();
        assert!((flat.slope - 0.005).abs() <= 0.002);
    }

    #[test]
    fn single_point_cannot_be_fitted() {
        assert!(matches!(
            fit_ir(&curve(&[3.0])),
            Err(Error::DegenerateAbscissa)
        ));
    }

    #[test]
    fn constant_series_has_zero_r_squared() {
        let fit = fit_ir(&curve(&[4.0, 4.0, 4.0])).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn slope_shifts_and_scales_like_the_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let values: Vec<f64> = (0..8).map(|_| rng.random_range(1.0..5.0)).collect();
            let base = fit_ir(&curve(&values)).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + 0.7).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * 2.5).collect();
            let shift_fit = fit_ir(&curve(&shifted)).unwrap();
            let scale_fit = fit_ir(&curve(&scaled)).unwrap();
            assert!((shift_fit.slope - base.slope).abs() < 1e-9);
            assert!((scale_fit.slope - 2.5 * base.slope).abs() < 1e-9);
            assert!((shift_fit.r_squared - base.r_squared).abs() < 1e-9);
            assert!((scale_fit.r_squared - base.r_squared).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_is_global_min_max() {
        let n = normalize_al(&curve(&[2.0, 4.0, 3.0]));
        assert_eq!(n.values, vec![0.0, 1.0, 0.5]);
        assert_eq!(n.case_count, 100);
        let flat = normalize_al(&curve(&[3.3, 3.3, 3.3]));
        assert_eq!(flat.values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalized_output_spans_the_unit_interval() {
        let n = normalize_al(&curve(&RISING_SERIES));
        let min = n.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = n.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
        assert!(n.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn prefix_variant_differs_from_global_scaling() {
        let series = curve(&[3.0, 2.0, 4.0]);
        assert_eq!(normalize_al(&series).values, vec![0.5, 0.0, 1.0]);
        assert_eq!(normalize_al_prefix(&series).values, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalized_slope_is_the_raw_slope_over_the_range() {
        for series in [&RISING_SERIES[..], &FLAT_SERIES[..]] {
            let raw = fit_ir(&curve(series)).unwrap();
            let normalized = fit_ir(&normalize_al(&curve(series))).unwrap();
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((normalized.slope - raw.slope / (max - min)).abs() < 1e-9);
            assert!((normalized.r_squared - raw.r_squared).abs() < 1e-9);
        }
        let rising_n = fit_ir(&normalize_al(&curve(&RISING_SERIES))).unwrap();
        assert!((rising_n.slope - 0.138).abs() <= 0.002);
        let flat_n = fit_ir(&normalize_al(&curve(&FLAT_SERIES))).unwrap();
        assert!((flat_n.slope - 0.037).abs() <= 0.002);
    }

    #[test]
    fn kappa_rewards_agreement_beyond_chance() {
        assert_eq!(cohen_kappa(&[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]).unwrap(), 1.0);
        let k = cohen_kappa(&[1, 1, 2, 2], &[1, 2, 2, 2]).unwrap();
        assert!((k - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kappa_is_symmetric() {
        let a = [1, 3, 3, 5, 2, 4, 4, 1];
        let b = [1, 3, 2, 5, 2, 4, 5, 2];
        assert!((cohen_kappa(&a, &b).unwrap() - cohen_kappa(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kappa_validates_lengths_and_categories() {
        assert!(matches!(
            cohen_kappa(&[1, 2], &[1]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(matches!(
            cohen_kappa(&[0], &[1]),
            Err(Error::RatingOutOfRange { value: 0 })
        ));
    }

    #[test]
    fn degenerate_identical_raters_return_one() {
        assert_eq!(cohen_kappa(&[3, 3, 3], &[3, 3, 3]).unwrap(), 1.0);
    }
}
