//! Small numeric kernels shared across modules.

const LANES: usize = 8;

/// Dot product with eight fixed accumulator lanes. The reduction order is
/// fixed, so results are bit-identical for any caller and thread count.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let split = a.len() - a.len() % LANES;
    for (ca, cb) in a[..split]
        .chunks_exact(LANES)
        .zip(b[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    reduce(acc) + tail
}

/// Squared Euclidean distance, same lane layout as [`dot`].
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let split = a.len() - a.len() % LANES;
    for (ca, cb) in a[..split]
        .chunks_exact(LANES)
        .zip(b[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            let d = ca[l] - cb[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        let d = x - y;
        tail += d * d;
    }
    reduce(acc) + tail
}

#[inline]
fn reduce(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
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
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Population moments computed on data shifted by its first element.
///
/// The shift makes a constant sample produce exactly zero variance, which
/// the concentration checks rely on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Divisor-n variance.
    pub variance: f64,
    /// Divisor-n third central moment.
    pub third: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        let &shift = values.first()?;
        let n = values.len() as f64;
        let shifted_mean = values
            .iter()
            .map(|x| x - shift)
            .collect::<CompensatedSum>()
            .value()
            / n;
        let mut m2 = CompensatedSum::default();
        let mut m3 = CompensatedSum::default();
        for x in values {
            let d = (x - shift) - shifted_mean;
            let d2 = d * d;
            m2.add(d2);
            m3.add(d2 * d);
        }
        Some(Self {
            n: values.len(),
            mean: shift + shifted_mean,
            variance: m2.value() / n,
            third: m3.value() / n,
        })
    }
}
