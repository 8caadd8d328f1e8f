//! Complex FFT: iterative radix-2 for power-of-two lengths, Bluestein's
//! chirp-z reduction for everything else.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self { re: 0.0, im: 0.0 }
    }

    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn conj(self) -> Complex {
        Complex::new(self.re, -self.im)
    }

    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

/// Reusable transform plan for one length.
pub struct FftPlan {
    n: usize,
    // Radix-2 machinery (n a power of two).
    twiddles: Vec<Complex>,
    // Bluestein machinery (general n): inner power-of-two plan plus the
    // precomputed chirp and its padded forward transform.
    bluestein: Option<Box<Bluestein>>,
}

struct Bluestein {
    inner: FftPlan,
    chirp: Vec<Complex>,
    chirp_fft: Vec<Complex>,
    m: usize,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "fft length must be positive");
        if n.is_power_of_two() {
            let mut twiddles = Vec::with_capacity(n / 2);
            for k in 0..n / 2 {
                let angle = -2.0 * PI * k as f64 / n as f64;
                twiddles.push(Complex::new(angle.cos(), angle.sin()));
            }
            Self { n, twiddles, bluestein: None }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let inner = FftPlan::new(m);
            // chirp[k] = exp(-i pi k^2 / n); k^2 taken mod 2n keeps the
            // angle argument small for large k.
            let mut chirp = Vec::with_capacity(n);
            for k in 0..n {
                let e = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
                let angle = -PI * e / n as f64;
                chirp.push(Complex::new(angle.cos(), angle.sin()));
            }
            let mut b = vec![Complex::zero(); m];
            b[0] = chirp[0].conj();
            for k in 1..n {
                b[k] = chirp[k].conj();
                b[m - k] = chirp[k].conj();
            }
            inner.forward_in_place(&mut b);
            Self {
                n,
                twiddles: Vec::new(),
                bluestein: Some(Box::new(Bluestein { inner, chirp, chirp_fft: b, m })),
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward DFT of `input` (length must equal the plan length).
    pub fn forward(&self, input: &[Complex]) -> Vec<Complex> {
        assert_eq!(input.len(), self.n, "input length mismatch");
        match &self.bluestein {
            None => {
                let mut buf = input.to_vec();
                self.forward_in_place(&mut buf);
                buf
            }
            Some(bl) => {
                let mut a = vec![Complex::zero(); bl.m];
                for k in 0..self.n {
                    a[k] = input[k].mul(bl.chirp[k]);
                }
                bl.inner.forward_in_place(&mut a);
                for (ak, bk) in a.iter_mut().zip(&bl.chirp_fft) {
                    *ak = ak.mul(*bk);
                }
                // Inverse via conjugation.
                for v in a.iter_mut() {
                    *v = v.conj();
                }
                bl.inner.forward_in_place(&mut a);
                let scale = 1.0 / bl.m as f64;
                let mut out = Vec::with_capacity(self.n);
                for k in 0..self.n {
                    let v = Complex::new(a[k].re * scale, -a[k].im * scale);
                    out.push(v.mul(bl.chirp[k]));
                }
                out
            }
        }
    }

    /// In-place radix-2 transform; plan length must be a power of two.
    fn forward_in_place(&self, buf: &mut [Complex]) {
        let n = self.n;
        debug_assert!(n.is_power_of_two());
        if n <= 1 {
            return;
        }
        // Bit-reversal permutation.
        let shift = usize::BITS - n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half].mul(w);
                    buf[start + k] = a.add(b);
                    buf[start + k + half] = a.sub(b);
                }
            }
            len <<= 1;
        }
    }
}

/// One-shot forward DFT of a real signal.
pub fn fft_real(input: &[f64]) -> Vec<Complex> {
    let plan = FftPlan::new(input.len());
    let buf: Vec<Complex> = input.iter().map(|&x| Complex::new(x, 0.0)).collect();
    plan.forward(&buf)
}

/// Brute-force O(n^2) DFT; the independent reference for FFT tests.
pub fn dft_reference(input: &[Complex]) -> Vec<Complex> {
    let n = input.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex::zero();
        for (j, x) in input.iter().enumerate() {
            let angle = -2.0 * PI * (k as f64) * (j as f64) / n as f64;
            acc = acc.add(x.mul(Complex::new(angle.cos(), angle.sin())));
        }
        out.push(acc);
    }
    out
}
