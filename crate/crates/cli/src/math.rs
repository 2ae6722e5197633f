//! Numeric checks of the belief-update closed forms on a fixed grid.

use concat_core::analysis::efficiency;
use concat_core::{benefit_challenger, correction_threshold, exact_euc, taylor_benefit};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

/// Grid point `i` in 1..=99, as `i / 100`.
fn g(i: usize) -> f64 {
    i as f64 / 100.0
}

fn euc(c: f64, s: f64) -> f64 {
    exact_euc(c, s).expect("grid is inside (0, 1)")
}

/// Sign of the exact update agrees with the side of the threshold.
pub fn sign_check() -> Check {
    const TOL: f64 = 1e-12;
    let mut bad = Vec::new();
    for i in 1..100 {
        for j in 1..100 {
            let (c, s) = (g(i), g(j));
            let v = euc(c, s);
            let gap = s - correction_threshold(c);
            let ok = if gap.abs() <= TOL || v.abs() <= TOL {
                v.abs() <= 1e-9 && gap.abs() <= 1e-9
            } else {
                (v > 0.0) == (gap > 0.0)
            };
            if !ok {
                bad.push((c, s));
            }
        }
    }
    Check::new(
        "sign matches threshold side",
        bad.is_empty(),
        format!("{} of 9801 grid points disagree {:?}", bad.len(), bad.first()),
    )
}

/// Nondecreasing in the signal, nonincreasing in own confidence.
pub fn monotone_check() -> Check {
    let mut bad = 0usize;
    for i in 1..100 {
        for j in 1..99 {
            if euc(g(i), g(j + 1)) < euc(g(i), g(j)) {
                bad += 1;
            }
            if euc(g(j + 1), g(i)) > euc(g(j), g(i)) {
                bad += 1;
            }
        }
    }
    Check::new("monotone on every row and column", bad == 0, format!("{bad} violations"))
}

pub fn zero_check() -> Check {
    let worst = (5..=95)
        .map(|i| euc(g(i), correction_threshold(g(i))).abs())
        .fold(0.0, f64::max);
    Check::new("zero at the threshold", worst <= 1e-9, format!("max |value| = {worst:.3e}"))
}

pub fn threshold_identities() -> Check {
    let mid = correction_threshold(0.5);
    let worst = (1..100)
        .map(|i| (correction_threshold(g(i)) + correction_threshold(1.0 - g(i)) - 1.0).abs())
        .fold(0.0, f64::max);
    let increasing = (1..99).all(|i| correction_threshold(g(i + 1)) > correction_threshold(g(i)));
    Check::new(
        "threshold(0.5) = 0.5, symmetric, increasing",
        mid == 0.5 && worst <= 1e-12 && increasing,
        format!("threshold(0.5) = {mid}, max symmetry error {worst:.3e}, increasing {increasing}"),
    )
}

pub fn taylor_check() -> Check {
    let mut worst: f64 = 0.0;
    for i in 20..=80 {
        for j in 45..=55 {
            worst = worst.max((euc(g(i), g(j)) - taylor_benefit(g(i), g(j))).abs());
        }
    }
    Check::new("linearization within 0.02", worst <= 0.02, format!("max error {worst:.5}"))
}

pub fn worked_values() -> Check {
    let a = benefit_challenger(0.5, 0.5, 0.2);
    let b = benefit_challenger(0.9, 0.1, 0.2);
    Check::new(
        "challenger benefit worked values",
        (a - 0.5).abs() <= 1e-12 && (b + 0.084).abs() <= 1e-12,
        format!("(0.5, 0.5) -> {a}, (0.9, 0.1) -> {b}"),
    )
}

pub fn efficiency_values() -> Check {
    let a = efficiency(86.02, 30.17).unwrap_or(f64::NAN);
    let b = efficiency(64.97, 41.73).unwrap_or(f64::NAN);
    Check::new(
        "efficiency arithmetic",
        (a - 2.85).abs() <= 0.005 && (b - 1.56).abs() <= 0.005,
        format!("86.02/30.17 = {a:.4}, 64.97/41.73 = {b:.4}"),
    )
}

pub fn math_checks() -> Vec<Check> {
    vec![
        sign_check(),
        monotone_check(),
        zero_check(),
        threshold_identities(),
        taylor_check(),
        worked_values(),
        efficiency_values(),
    ]
}
