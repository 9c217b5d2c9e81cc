/// Generalized advantage estimation over one env's consecutive steps.
///
/// `next_values[t]` is V(s_{t+1}); it is ignored where `dones[t]`. The
/// sequence is cut into segments of `horizon` steps and the recursion
/// restarts at each cut, so every segment bootstraps from its successor
/// state's value. Returns (advantages, returns = advantages + values).
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
    horizon: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && dones.len() == n, "GAE inputs must align");
    let horizon = horizon.max(1);
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let segment_end = (t + 1) % horizon == 0 || t + 1 == n;
        if segment_end || dones[t] {
            acc = 0.0;
        }
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_values[t] * not_done - values[t];
        acc = delta + gamma * lambda * not_done * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Zero mean, unit variance; a near-constant batch is only centered.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x -= mean;
        if std > 1e-8 {
            *x /= std;
        }
    }
}
