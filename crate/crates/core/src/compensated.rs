//! Error-free transformations for compensated complex arithmetic.

use num_complex::Complex64;

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `x + y = s + e` with `s` the rounded sum.
#[inline]
pub fn csum(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let (sr, er) = two_sum(x.re, y.re);
    let (si, ei) = two_sum(x.im, y.im);
    (Complex64::new(sr, si), Complex64::new(er, ei))
}

/// `x·y = p + e`; the error term is itself rounded but carries the
/// leading bits lost by the product.
#[inline]
pub fn cprod(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let (p1, e1) = two_prod(x.re, y.re);
    let (p2, e2) = two_prod(-x.im, y.im);
    let (p3, e3) = two_prod(x.re, y.im);
    let (p4, e4) = two_prod(x.im, y.re);
    let (sr, fr) = two_sum(p1, p2);
    let (si, fi) = two_sum(p3, p4);
    (
        Complex64::new(sr, si),
        Complex64::new(e1 + e2 + fr, e3 + e4 + fi),
    )
}

/// Dot product `Σ x_i y_i` evaluated as if in twice the working precision.
pub fn dot<'a, I>(pairs: I) -> Complex64
where
    I: IntoIterator<Item = (&'a Complex64, &'a Complex64)>,
{
    let mut s = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for (x, y) in pairs {
        let (p, ep) = cprod(*x, *y);
        let (t, es) = csum(s, p);
        s = t;
        comp += ep + es;
    }
    s + comp
}

/// Compensated Horner evaluation of `Σ coeffs[k] z^k` (ascending order).
pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut iter = coeffs.iter().rev();
    let Some(&lead) = iter.next() else {
        return Complex64::new(0.0, 0.0);
    };
    let mut s = lead;
    let mut comp = Complex64::new(0.0, 0.0);
    for &a in iter {
        let (p, ep) = cprod(s, z);
        let (t, es) = csum(p, a);
        s = t;
        comp = comp * z + (ep + es);
    }
    s + comp
}
