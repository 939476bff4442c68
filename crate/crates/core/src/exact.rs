//! Error-free floating point accumulation.
//!
//! An [`Expansion`] holds a sum of doubles as a list of non-overlapping
//! partials (Shewchuk), so sums and products of `f64` inputs are represented
//! exactly and rounded once at the end.

#[derive(Debug, Clone, Default)]
pub(crate) struct Expansion {
    partials: Vec<f64>,
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Expansion {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, value: f64) {
        let mut x = value;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Adds the exact product `a * b`.
    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let (p, e) = two_product(a, b);
        self.add(p);
        if e != 0.0 {
            self.add(e);
        }
    }

    pub(crate) fn add_expansion(&mut self, other: &Expansion) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// `self * scalar`, exact.
    pub(crate) fn scaled(&self, scalar: f64) -> Expansion {
        let mut out = Expansion::new();
        for &p in &self.partials {
            out.add_product(p, scalar);
        }
        out
    }

    /// `self * other`, exact.
    pub(crate) fn product(&self, other: &Expansion) -> Expansion {
        let mut out = Expansion::new();
        for &a in &self.partials {
            for &b in &other.partials {
                out.add_product(a, b);
            }
        }
        out
    }

    pub(crate) fn negated(&self) -> Expansion {
        Expansion {
            partials: self.partials.iter().map(|p| -p).collect(),
        }
    }

    /// The exact sum rounded to nearest, ties to even.
    pub(crate) fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_is_exact() {
        let mut e = Expansion::new();
        e.add(1e100);
        e.add(1.0);
        e.add(-1e100);
        assert_eq!(e.value(), 1.0);
    }

    #[test]
    fn products_are_exact() {
        let a = 1.0 + f64::EPSILON;
        let mut e = Expansion::new();
        e.add_product(a, a);
        e.add(-1.0);
        e.add(-2.0 * f64::EPSILON);
        assert_eq!(e.value(), f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn rounding_of_many_small_terms() {
        let mut e = Expansion::new();
        for _ in 0..10 {
            e.add(0.1);
        }
        assert_eq!(e.value(), 1.0);
    }
}
