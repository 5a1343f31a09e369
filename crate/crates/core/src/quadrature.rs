//! Composite Simpson quadrature.

use crate::error::{Result, TunnelError};

fn check_panels(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(TunnelError::invalid(format!("Simpson needs an even panel count >= 2, got {n}")));
    }
    Ok(())
}

/// Composite Simpson rule with `n` (even) panels on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<f64> {
    check_panels(n)?;
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    Ok(h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even))
}

/// Simpson rule after the substitution `x = a + (b − a)(1 − cos θ)/2`.
///
/// Integrands that behave like `√(x − a)` or `√(b − x)` at the ends become
/// smooth in θ, so the rule keeps its fourth-order convergence.
pub fn simpson_sqrt_endpoints<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<f64> {
    check_panels(n)?;
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    simpson(
        |t: f64| {
            let x = a + half * (1.0 - t.cos());
            f(x) * half * t.sin()
        },
        0.0,
        std::f64::consts::PI,
        n,
    )
}
