//! Double-double arithmetic (an unevaluated sum `hi + lo`), for expressions
//! whose terms cancel almost completely.

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[cfg(test)]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, y.hi);
        quick_two_sum(s, e + self.lo + y.lo)
    }

    #[inline]
    pub fn mul(self, y: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, y.hi);
        quick_two_sum(p, e + self.hi * y.lo + self.lo * y.hi)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        quick_two_sum(p, e + self.lo * b)
    }

    /// `self + a * b` with the product formed exactly.
    #[inline]
    pub fn add_prod(self, a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        self.add(Dd { hi: p, lo: e })
    }
}

/// `x^T y` accumulated in double-double.
pub(crate) fn dot_dd(x: &[f64], y: &[f64]) -> Dd {
    x.iter().zip(y).fold(Dd::default(), |acc, (a, b)| acc.add_prod(*a, *b))
}
