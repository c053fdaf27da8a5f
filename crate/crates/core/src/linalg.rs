//! Dense solves of restricted hitting-time systems `(I - T|_F) h = 1`.

use nalgebra::{DMatrix, DVector};

use crate::credal::CredalModel;
use crate::error::{Error, Result};

/// Solves `(I - P|_region) h = 1`, where `P` picks vertex `choice(x)` in
/// row `x`. Mass leaving `region` is dropped, which is exact when it lands
/// on a zero-valued target.
///
/// Every hitting time outside the target is at least one, so a solution
/// below that (or a non-finite one) means the system was singular.
pub(crate) fn solve_restricted<M, C>(model: &M, region: &[usize], choice: C) -> Result<Vec<f64>>
where
    M: CredalModel + ?Sized,
    C: Fn(usize) -> usize,
{
    let k = region.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut local = vec![usize::MAX; model.num_states()];
    for (i, &x) in region.iter().enumerate() {
        local[x] = i;
    }
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut buf = Vec::new();
    for (i, &x) in region.iter().enumerate() {
        model.vertex_masses(x, choice(x), &mut buf);
        for &(d, p) in &buf {
            let j = local[d];
            if j != usize::MAX {
                a[(i, j)] -= p;
            }
        }
    }
    let b = DVector::<f64>::from_element(k, 1.0);
    let h = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular(format!("{k}x{k} system has a zero pivot")))?;
    if let Some((i, v)) = h
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 1.0 - 1e-9)
    {
        return Err(Error::Singular(format!(
            "solution {v} at state `{}`",
            model.state_label(region[i])
        )));
    }
    Ok(h.iter().copied().collect())
}
