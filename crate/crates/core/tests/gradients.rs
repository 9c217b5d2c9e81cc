mod common;

use common::gradcheck::{check, fixture, policy, policy_grad, LossTerm, ALL_TERMS};
use mirrormode::neural::{Layers, BRANCH_RANGES};

#[test]
fn every_loss_term_matches_finite_differences() {
    for term in ALL_TERMS {
        for seed in 0..4 {
            let err = check(term, seed);
            assert!(err <= 1e-4, "{term:?} seed {seed}: rel err {err:e}");
        }
    }
}

#[test]
fn masked_logits_get_zero_gradient() {
    let f = fixture(11);
    let net = policy(11);
    let pass = net.forward(f.obs.view(), &f.masks);
    // Gradient w.r.t. a masked logit is zero for every row, so only rows with
    // the column admitted contribute to its bias gradient.
    for term in [LossTerm::PpoPolicy, LossTerm::Entropy, LossTerm::BcCe] {
        let g = policy_grad(&net, &f, term);
        for r in BRANCH_RANGES {
            for j in r {
                if f.masks.iter().all(|m| !m[j]) {
                    assert_eq!(g.pi.b[j], 0.0, "{term:?} column {j}");
                    assert!(g.pi.w.column(j).iter().all(|&v| v == 0.0));
                }
            }
        }
    }
    assert!(pass.probs.iter().all(|p| p.is_finite()));
}

#[test]
fn zero_weighted_loss_has_zero_gradient() {
    let f = fixture(2);
    let net = policy(2);
    let pass = net.forward(f.obs.view(), &f.masks);
    let mut g = net.zeros_like();
    net.bc_backward(&pass, &f.actions, 0.0, &mut g);
    assert!(g.layers().iter().all(|(_, l)| l.w.iter().chain(l.b.iter()).all(|&v| v == 0.0)));
}
