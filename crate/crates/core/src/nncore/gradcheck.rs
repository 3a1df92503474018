use super::{LossSpec, NetError, Trainable};

/// Largest relative disagreement between analytic gradients and central
/// finite differences of the summed loss over `samples`.
///
/// The relative error of one coordinate is `|a - n| / max(|a|, |n|, 1e-6)`,
/// so coordinates whose true gradient is essentially zero are compared on an
/// absolute scale.
pub fn gradient_check<M: Trainable>(
    model: &M,
    samples: &[M::Sample],
    loss: &LossSpec,
    eps: f64,
) -> Result<f64, NetError> {
    let total = |m: &M| -> Result<f64, NetError> {
        let mut scratch = m.zero_grads();
        samples.iter().map(|s| m.accumulate(s, loss, &mut scratch)).sum()
    };
    let mut analytic = model.zero_grads();
    for s in samples {
        model.accumulate(s, loss, &mut analytic)?;
    }
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (bi, block) in analytic.blocks.iter().enumerate() {
        for (pi, &a) in block.iter().enumerate() {
            let orig = probe.parameters()[bi][pi];
            probe.parameters_mut()[bi][pi] = orig + eps;
            let up = total(&probe)?;
            probe.parameters_mut()[bi][pi] = orig - eps;
            let down = total(&probe)?;
            probe.parameters_mut()[bi][pi] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
