//! Double-double helpers for formulas with heavy cancellation.

pub use twofloat::TwoFloat as Dd;

pub fn lift(xs: &[f64]) -> Vec<Dd> {
    xs.iter().map(|&x| Dd::from(x)).collect()
}

pub fn round(x: Dd) -> f64 {
    x.hi() + x.lo()
}

pub fn round_all(xs: &[Dd]) -> Vec<f64> {
    xs.iter().map(|&x| round(x)).collect()
}

/// Double-double quotient by long division.
///
/// `TwoFloat`'s own `Dd / Dd` computes the reciprocal residual without a
/// fused multiply-add, which leaves the result with only `f64` accuracy.
/// Each step here takes an `f64` partial quotient and subtracts its exact
/// product from the running remainder.
pub fn div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::from(q1) + (Dd::from(q2) + q3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_the_low_word() {
        let third = div(Dd::from(1.0), Dd::from(3.0));
        assert!(third.lo() != 0.0);
        let back = third * 3.0 - Dd::from(1.0);
        assert!(round(back).abs() < 1e-30);
        let t = Dd::from(1.7e-3);
        let x = div(Dd::from(12.0), t * t * t);
        assert!(round(x * (t * t * t) - Dd::from(12.0)).abs() < 1e-20);
    }
}
