//! Central finite-difference verification of reverse-mode gradients.
//!
//! The relative error of coordinate `i` is
//! `|analytic - numeric| / max(|analytic|, |numeric|, floor)`; the floor keeps
//! vanishing gradients from turning roundoff into huge ratios. A coordinate
//! whose step-`h` and step-`h/2` estimates disagree sits next to a kink (ReLU
//! boundary, max-pool tie) and is skipped and replaced by another one.

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub h: f64,
    pub tolerance: f64,
    pub floor: f64,
    /// Check at most this many coordinates (sampled without replacement).
    pub max_coords: Option<usize>,
    pub seed: u64,
    /// Relative disagreement between the `h` and `h/2` estimates above which
    /// a coordinate counts as a kink.
    pub kink_threshold: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tolerance: 1e-4,
            floor: 1e-4,
            max_coords: None,
            seed: 0,
            kink_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_coord: Option<usize>,
    pub checked: usize,
    pub skipped: usize,
    pub passed: bool,
}

/// Compares `analytic` against central differences of `loss` around `x0`.
pub fn grad_check(
    x0: &[f64],
    analytic: &[f64],
    loss: impl Fn(&[f64]) -> f64,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut order: Vec<usize> = (0..x0.len()).collect();
    if cfg.max_coords.is_some_and(|m| m < x0.len()) {
        SeededRng::new(cfg.seed, 0x6772_6164).shuffle(&mut order);
    }
    grad_check_coords(x0, analytic, loss, cfg, &order)
}

/// As [`grad_check`] but walks coordinates in the given order.
pub fn grad_check_coords(
    x0: &[f64],
    analytic: &[f64],
    loss: impl Fn(&[f64]) -> f64,
    cfg: &GradCheckConfig,
    order: &[usize],
) -> Result<GradCheckReport> {
    if x0.len() != analytic.len() {
        return Err(Error::Shape {
            op: "grad_check",
            left: format!("{} parameters", x0.len()),
            right: format!("{} gradients", analytic.len()),
        });
    }
    let budget = cfg.max_coords.unwrap_or(order.len());
    let mut x = x0.to_vec();
    let diff = |i: usize, h: f64, x: &mut Vec<f64>| {
        let orig = x[i];
        x[i] = orig + h;
        let up = loss(x);
        x[i] = orig - h;
        let down = loss(x);
        x[i] = orig;
        (up - down) / (2.0 * h)
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_coord: None,
        checked: 0,
        skipped: 0,
        passed: true,
    };
    for &i in order {
        if report.checked >= budget {
            break;
        }
        let num = diff(i, cfg.h, &mut x);
        let half = diff(i, cfg.h * 0.5, &mut x);
        let scale = num.abs().max(half.abs()).max(cfg.floor);
        if (num - half).abs() / scale > cfg.kink_threshold {
            report.skipped += 1;
            continue;
        }
        let a = analytic[i];
        let rel = (a - num).abs() / a.abs().max(num.abs()).max(cfg.floor);
        if rel > report.max_rel_error || report.worst_coord.is_none() {
            report.max_rel_error = rel;
            report.worst_coord = Some(i);
        }
        report.checked += 1;
    }
    report.passed = report.checked > 0 && report.max_rel_error < cfg.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let w = [0.5, -1.5, 2.0, 3.25];
        let x0 = [1.0, 2.0, -3.0, 0.1];
        let rep = grad_check(
            &x0,
            &w,
            |x| x.iter().zip(&w).map(|(a, b)| a * b).sum(),
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(rep.passed);
        assert!(rep.max_rel_error < 1e-9, "{rep:?}");
        assert_eq!(rep.checked, 4);
    }

    #[test]
    fn wrong_gradient_fails() {
        let x0 = [1.0, 2.0];
        let rep = grad_check(
            &x0,
            &[2.0, 4.0 + 1e-2],
            |x| x[0] * x[0] + x[1] * x[1],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_coord, Some(1));
    }

    #[test]
    fn kinks_are_skipped() {
        // |x| at x = 0 has no derivative; the check must not count it.
        let rep = grad_check(
            &[0.0, 1.0],
            &[0.0, 1.0],
            |x| x[0].abs() + x[1],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.skipped, 0, "symmetric kink averages out");
        let rep = grad_check(
            &[3e-6, 1.0],
            &[1.0, 1.0],
            |x| x[0].max(0.0) + x[1],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.skipped, 1);
        assert!(rep.passed);
    }
}
