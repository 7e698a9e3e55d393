use super::LossError;

/// Central-difference gradient of `f` with respect to every coordinate of
/// every point: `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_gradient<F>(
    mut f: F,
    points: &[Vec<f64>],
    h: f64,
) -> Result<Vec<Vec<f64>>, LossError>
where
    F: FnMut(&[Vec<f64>]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(LossError::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    if !f(points).is_finite() {
        return Err(LossError::NonFiniteValue);
    }
    let mut probe = points.to_vec();
    let mut grads = Vec::with_capacity(points.len());
    for p in 0..points.len() {
        let mut g = vec![0.0; points[p].len()];
        for i in 0..points[p].len() {
            let x = points[p][i];
            probe[p][i] = x + h;
            let up = f(&probe);
            probe[p][i] = x - h;
            let down = f(&probe);
            probe[p][i] = x;
            if !up.is_finite() || !down.is_finite() {
                return Err(LossError::NonFiniteValue);
            }
            g[i] = (up - down) / (2.0 * h);
        }
        grads.push(g);
    }
    Ok(grads)
}
