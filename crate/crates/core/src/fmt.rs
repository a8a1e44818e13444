//! Float formatting shared by every text writer.

/// Formats `x` with 17 significant digits, which is enough for any `f64` to
/// parse back to the identical bit pattern.
///
/// Positional notation is used for decimal exponents in `[-5, 17)`, otherwise
/// scientific notation, like C's `%.17g` without trailing-zero trimming.
pub fn g17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shapes() {
        assert_eq!(g17(0.5), "0.50000000000000000");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(1.0), "1.0000000000000000");
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(1e-9), "1.0000000000000001e-9");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let back: f64 = g17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
