//! Seeded random instances for the commands and verification suites.

use qfock::fock::FockTensor;
use qfock::wickalg::WickElement;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

/// The generator used everywhere; ChaCha output is platform independent.
pub type SeededRng = ChaCha8Rng;

/// A vector with coordinates uniform in `[-1, 1)`.
pub fn vector(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A dense tensor with coefficients uniform in `[-1, 1)`.
pub fn tensor(rng: &mut SeededRng, d: usize, degree: usize) -> FockTensor {
    let coeffs = (0..d.pow(degree as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FockTensor::from_coeffs(d, degree, coeffs).expect("coefficient count matches d^degree")
}

/// A Wick element whose chaos components up to `max_chaos` are each present
/// with probability ¾.
pub fn element(rng: &mut SeededRng, d: usize, max_chaos: usize) -> WickElement {
    let mut a = WickElement::zero(d);
    for k in 0..=max_chaos {
        if rng.gen_bool(0.75) {
            a.add_tensor(1.0, &tensor(rng, d, k))
                .expect("tensor dimension matches the element");
        }
    }
    a
}
