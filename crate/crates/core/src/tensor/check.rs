use alloc::vec::Vec;

use rand::seq::index::sample;

use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Compares reverse-mode gradients with central differences.
///
/// `build` records a scalar loss on a fresh tape given one variable per
/// entry of `params`. At most `max_coords` coordinates are probed (all of
/// them when there are fewer, otherwise a sample drawn from `seed`). The
/// return value is the largest `|g_ad - g_fd| / max(1, |g_ad|, |g_fd|)`.
pub fn finite_diff_check<F>(
    params: &[Matrix],
    eps: f64,
    max_coords: usize,
    seed: u64,
    mut build: F,
) -> Result<f64>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut eval = |values: &[Matrix], want_grad: bool| -> Result<(f64, Vec<Matrix>)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.param(v.clone())).collect();
        let loss = build(&mut tape, &vars)?;
        let value = tape.value(loss)[(0, 0)];
        if !want_grad {
            return Ok((value, Vec::new()));
        }
        let grads = tape.backward(loss)?;
        let g = vars
            .iter()
            .zip(values)
            .map(|(&v, m)| grads.get_or_zeros(v, m))
            .collect();
        Ok((value, g))
    };

    let (_, analytic) = eval(params, true)?;
    let coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, m)| (0..m.len()).map(move |k| (p, k)))
        .collect();
    let chosen: Vec<usize> = if coords.len() <= max_coords {
        (0..coords.len()).collect()
    } else {
        let mut r = rng::seeded(seed);
        let mut picked = sample(&mut r, coords.len(), max_coords).into_vec();
        picked.sort_unstable();
        picked
    };

    let mut worst: f64 = 0.0;
    let mut probe = params.to_vec();
    for c in chosen {
        let (p, k) = coords[c];
        let original = probe[p].data()[k];
        probe[p].data_mut()[k] = original + eps;
        let (plus, _) = eval(&probe, false)?;
        probe[p].data_mut()[k] = original - eps;
        let (minus, _) = eval(&probe, false)?;
        probe[p].data_mut()[k] = original;
        let fd = (plus - minus) / (2.0 * eps);
        let ad = analytic[p].data()[k];
        if !fd.is_finite() || !ad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        let denom = 1.0f64.max(libm::fabs(ad)).max(libm::fabs(fd));
        worst = worst.max(libm::fabs(ad - fd) / denom);
    }
    Ok(worst)
}
