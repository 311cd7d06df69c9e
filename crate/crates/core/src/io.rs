//! Plain-text output helpers shared by the exporters.

/// Fixed 12-significant-digit formatting used in every CSV file.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 {
        "0.00000000000e0".to_string()
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt12(-2.5), "-2.50000000000e0");
        assert_eq!(fmt12(0.0), "0.00000000000e0");
        assert_eq!(fmt12(-0.0), "0.00000000000e0");
        assert_eq!(fmt12(f64::NAN), "nan");
    }
}
