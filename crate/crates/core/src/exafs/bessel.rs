/// Modified Bessel function of the first kind, order zero, by its power
/// series Σ ((x/2)^m / m!)². Summation stops once a term falls below
/// 1e-16 of the partial sum.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * m);
        sum += term;
        if term < 1e-16 * sum || !term.is_finite() {
            return sum;
        }
    }
}
