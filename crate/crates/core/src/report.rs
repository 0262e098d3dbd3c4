//! Fixed numeric formatting shared by every text output.

/// Six significant digits in scientific notation, e.g. `1.65434e4`.
pub fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Integral values print as integers, anything else as [`sig6`].
pub fn axis_value(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        sig6(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(sig6(16543.365), "1.65434e4");
        assert_eq!(sig6(1.24e-7), "1.24000e-7");
        assert_eq!(sig6(0.0), "0.00000e0");
        assert_eq!(axis_value(16.0), "16");
        assert_eq!(axis_value(0.5), "5.00000e-1");
    }
}
