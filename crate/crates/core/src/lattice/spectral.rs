use super::{Field, Torus};
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(m: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
        })
        .clone()
}

/// Unitary multidimensional FFT on a torus.
///
/// Both directions carry `1/√(mⁿ)`. Plans are shared; scratch space is allocated
/// per call, so one `Spectral` may be used from several threads.
#[derive(Clone)]
pub struct Spectral {
    torus: Torus,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(torus: Torus) -> Self {
        let (forward, inverse) = plans(torus.points_per_axis());
        Self { torus, forward, inverse }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn forward(&self, f: &Field) -> Field {
        self.transform(f, true)
    }

    pub fn inverse(&self, f: &Field) -> Field {
        self.transform(f, false)
    }

    /// Applies `û(ξ) ↦ out` with `symbol(ξ, û(ξ), out)` at every frequency.
    pub fn multiplier(&self, u: &Field, out_fiber: usize, mut symbol: impl FnMut(&[f64], &[C64], &mut [C64])) -> Field {
        let hat = self.forward(u);
        let mut out = Field::zeros(self.torus, out_fiber);
        let dim = self.torus.dim();
        for p in 0..self.torus.num_points() {
            let xi = self.torus.frequency(p);
            symbol(&xi[..dim], hat.at(p), out.at_mut(p));
        }
        self.inverse(&out)
    }

    fn transform(&self, f: &Field, forward: bool) -> Field {
        let fft = if forward { &self.forward } else { &self.inverse };
        let m = self.torus.points_per_axis();
        let dim = self.torus.dim();
        let total = self.torus.num_points();
        let fiber = f.fiber();
        let norm = 1.0 / (total as f64).sqrt();
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut buf = vec![C64::new(0.0, 0.0); total];
        let mut line = vec![C64::new(0.0, 0.0); m];
        let mut out = Field::zeros(self.torus, fiber);
        for c in 0..fiber {
            for (p, b) in buf.iter_mut().enumerate() {
                *b = f.data()[p * fiber + c];
            }
            // Last axis is contiguous: one batched call.
            fft.process_with_scratch(&mut buf, &mut scratch);
            for axis in 0..dim.saturating_sub(1) {
                let stride = m.pow((dim - 1 - axis) as u32);
                let block = stride * m;
                for outer in (0..total).step_by(block) {
                    for inner in 0..stride {
                        let base = outer + inner;
                        for (k, l) in line.iter_mut().enumerate() {
                            *l = buf[base + k * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (k, l) in line.iter().enumerate() {
                            buf[base + k * stride] = *l;
                        }
                    }
                }
            }
            let data = out.data_mut();
            for (p, b) in buf.iter().enumerate() {
                data[p * fiber + c] = b * norm;
            }
        }
        out
    }
}

/// Unitary forward FFT.
pub fn forward_transform(f: &Field) -> Field {
    Spectral::new(*f.torus()).forward(f)
}

/// Unitary inverse FFT.
pub fn inverse_transform(f: &Field) -> Field {
    Spectral::new(*f.torus()).inverse(f)
}
