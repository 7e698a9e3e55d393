use super::{squared_distance, LossError};

fn check_margin(margin: f64) -> Result<(), LossError> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(LossError::InvalidParameter(format!(
            "margin must be non-negative, got {margin}"
        )));
    }
    Ok(())
}

/// Contrastive loss of one pair: `D^2` for a same-class pair,
/// `max(0, m - D^2)` otherwise.
pub fn contrastive_loss(
    x_p: &[f64],
    x_n: &[f64],
    same_class: bool,
    margin: f64,
) -> Result<f64, LossError> {
    check_margin(margin)?;
    let d2 = squared_distance(x_p, x_n)?;
    Ok(if same_class {
        d2
    } else {
        (margin - d2).max(0.0)
    })
}

/// Triplet loss `max(0, D^2(a, p) - D^2(a, n) + m)`.
pub fn triplet_loss(
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
) -> Result<f64, LossError> {
    check_margin(margin)?;
    let pos = squared_distance(anchor, positive)?;
    let neg = squared_distance(anchor, negative)?;
    Ok((pos - neg + margin).max(0.0))
}
