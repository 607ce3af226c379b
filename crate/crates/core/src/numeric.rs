//! Small numeric kernels: compensated summation, power differences and
//! bit-stable decimal formatting.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().collect::<CompensatedSum>().value()
}

/// `hi^k - lo^k` for `0 <= lo <= hi`, evaluated as
/// `(hi - lo) * sum_{i<k} hi^i lo^(k-1-i)` so that close arguments do not cancel.
pub fn pow_diff(hi: f64, lo: f64, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut geometric = 1.0;
    let mut hi_pow = 1.0;
    for _ in 1..k {
        hi_pow *= hi;
        geometric = hi_pow + lo * geometric;
    }
    (hi - lo) * geometric
}

/// `sum_{i<k} hi^i lo^(k-1-i)`, i.e. `(hi^k - lo^k) / (hi - lo)` without the division.
pub fn geometric_kernel(hi: f64, lo: f64, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut geometric = 1.0;
    let mut hi_pow = 1.0;
    for _ in 1..k {
        hi_pow *= hi;
        geometric = hi_pow + lo * geometric;
    }
    geometric
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent form outside `[1e-4, 1e17)`. Every finite `f64` round-trips.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_fraction_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", mantissa, sign, exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_fraction_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_fraction_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let terms = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(terms), 4e-16);
    }

    #[test]
    fn pow_diff_matches_direct_difference() {
        assert_eq!(pow_diff(0.5, 0.25, 2), 0.1875);
        assert_eq!(pow_diff(1.0, 0.0, 7), 1.0);
        assert_eq!(pow_diff(0.3, 0.3, 4), 0.0);
        assert!((pow_diff(0.9, 0.2, 5) - (0.9f64.powi(5) - 0.2f64.powi(5))).abs() < 1e-16);
    }

    #[test]
    fn g17_matches_c_printf() {
        // Expected strings produced by printf("%.17g").
        assert_eq!(format_g17(3.125), "3.125");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456789.0), "123456789");
        assert_eq!(format_g17(0.0001), "0.0001");
        assert_eq!(format_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_g17(0.0), "0");
    }

    proptest! {
        #[test]
        fn g17_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_g17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
