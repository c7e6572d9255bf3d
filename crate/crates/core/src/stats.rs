//! Significance testing over repeated training runs: Shapiro-Wilk for
//! normality, then a one-tailed paired t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;

const CF_TOLERANCE: f64 = 1e-12;
const CF_MAX_ITER: usize = 10_000;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOLERANCE {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    student_t_sf(-t, df)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance (n − 1 denominator).
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Which sample the alternative hypothesis says is larger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AGreater,
    BGreater,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::AGreater => Direction::BGreater,
            Direction::BGreater => Direction::AGreater,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub df: u32,
    pub p_one_tailed: f64,
    pub reject_null: bool,
    pub direction: Direction,
    pub means: (f64, f64),
    pub variances: (f64, f64),
}

/// One-tailed paired t-test on the differences `a − b`.
pub fn paired_t_one_tailed(a: &[f64], b: &[f64], direction: Direction) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Domain(
            "a paired t-test needs at least two pairs".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let sd = sample_variance(&d).sqrt();
    if sd == 0.0 {
        return Err(Error::Degenerate(
            "differences have zero variance; the t statistic is undefined".into(),
        ));
    }
    let t = mean(&d) / (sd / n.sqrt());
    let df = d.len() - 1;
    let p = match direction {
        Direction::AGreater => student_t_sf(t, df as f64),
        Direction::BGreater => student_t_cdf(t, df as f64),
    }
    .clamp(0.0, 1.0);
    Ok(TTestResult {
        t_stat: t,
        df: df as u32,
        p_one_tailed: p,
        reject_null: p < ALPHA,
        direction,
        means: (mean(a), mean(b)),
        variances: (sample_variance(a), sample_variance(b)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SWTestResult {
    pub w_stat: f64,
    pub p_value: f64,
}

impl SWTestResult {
    /// Normality is rejected only when `p < α`.
    pub fn normal_at(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Shapiro-Wilk W and its p-value by Royston's approximation (AS R94),
/// valid for 3 ≤ n ≤ 5000.
pub fn shapiro_wilk(x: &[f64]) -> Result<SWTestResult> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::Domain(format!(
            "Shapiro-Wilk needs 3..=5000 values, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return Err(Error::Degenerate("all observations are identical".into()));
    }

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let an = n as f64;
    let half = n / 2;

    // Coefficients for the lower half, as positive magnitudes a[0..half].
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let m: Vec<f64> = (1..=half)
            .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }

    // W as the squared correlation between the ordered sample and the
    // antisymmetric coefficient vector, on range-scaled data.
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -a[i],
            std::cmp::Ordering::Greater => a[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };
    let scaled: Vec<f64> = sorted.iter().map(|v| v / range).collect();
    let sa = (0..n).map(coef).sum::<f64>() / an;
    let sx = scaled.iter().sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, &xi) in scaled.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p = if n == 3 {
        const PI6: f64 = 6.0 / std::f64::consts::PI;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0)
    } else {
        let y = w1.ln();
        let xx = an.ln();
        let (y, m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(SWTestResult {
                    w_stat: w,
                    p_value: 1e-99,
                });
            }
            (-(gamma - y).ln(), poly(&C3, an), poly(&C4, an).exp())
        } else {
            (y, poly(&C5, xx), poly(&C6, xx).exp())
        };
        std_normal.sf((y - m) / s)
    };
    Ok(SWTestResult {
        w_stat: w,
        p_value: p.clamp(0.0, 1.0),
    })
}

/// One row of a run-comparison significance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub ebcle_mean: f64,
    pub ebcle_variance: f64,
    pub baseline_mean: f64,
    pub baseline_variance: f64,
    pub test: TTestResult,
}

/// Tests whether the deeper baseline is more accurate than the shallow
/// variant (alternative: baseline greater).
pub fn table3_row(ebcle_runs: &[f64], baseline_runs: &[f64]) -> Result<Table3Row> {
    if ebcle_runs.len() < 3 || baseline_runs.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least three runs each, got {} and {}",
            ebcle_runs.len(),
            baseline_runs.len()
        )));
    }
    let test = paired_t_one_tailed(ebcle_runs, baseline_runs, Direction::BGreater)?;
    Ok(Table3Row {
        ebcle_mean: test.means.0,
        ebcle_variance: test.variances.0,
        baseline_mean: test.means.1,
        baseline_variance: test.variances.1,
        test,
    })
}
