use crate::model::Complex;

/// Determinant of the row-major `n x n` matrix in `a`, by LU with partial
/// pivoting. `a` is overwritten.
pub fn det_in_place(a: &mut [Complex], n: usize) -> Complex {
    debug_assert_eq!(a.len(), n * n);
    let mut det = Complex::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return Complex::new(0.0, 0.0);
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        let inv = d.inv();
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor.re == 0.0 && factor.im == 0.0 {
                continue;
            }
            for j in col + 1..n {
                let v = a[col * n + j];
                a[row * n + j] -= factor * v;
            }
        }
    }
    det
}

pub fn det(a: &[Complex], n: usize) -> Complex {
    let mut work = a.to_vec();
    det_in_place(&mut work, n)
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: Complex) {
        neumaier(&mut self.re, &mut self.re_c, v.re);
        neumaier(&mut self.im, &mut self.im_c, v.im);
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(Complex::new(other.re, other.im));
        self.add(Complex::new(other.re_c, other.im_c));
    }

    pub fn value(&self) -> Complex {
        Complex::new(self.re + self.re_c, self.im + self.im_c)
    }
}
