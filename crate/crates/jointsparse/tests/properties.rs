//! Property-based checks of the algebraic invariants the solver relies on.

use proptest::prelude::*;

use jointsparse::core::{channel_norm, ChannelNorm};
use jointsparse::proximity::{project_ball, shrink};

fn any_q() -> impl Strategy<Value = ChannelNorm> {
    prop_oneof![
        Just(ChannelNorm::One),
        Just(ChannelNorm::Two),
        Just(ChannelNorm::Inf),
    ]
}

fn any_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn norm_is_absolutely_homogeneous(x in any_vec(), s in -5.0..5.0f64, q in any_q()) {
        let scaled: Vec<f64> = x.iter().map(|a| a * s).collect();
        let lhs = channel_norm(&scaled, q);
        let rhs = s.abs() * channel_norm(&x, q);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn norm_satisfies_triangle_inequality(
        x in any_vec(),
        y in any_vec(),
        q in any_q(),
    ) {
        let n = x.len().min(y.len());
        let sum: Vec<f64> = x[..n].iter().zip(&y[..n]).map(|(a, b)| a + b).collect();
        let lhs = channel_norm(&sum, q);
        let rhs = channel_norm(&x[..n], q) + channel_norm(&y[..n], q);
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn holder_pairing_bound(x in any_vec(), y in any_vec(), q in any_q()) {
        let n = x.len().min(y.len());
        let pairing: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| a * b).sum();
        let bound = channel_norm(&x[..n], q) * channel_norm(&y[..n], q.dual());
        prop_assert!(pairing.abs() <= bound + 1e-10);
    }

    #[test]
    fn moreau_decomposition_is_exact(
        x in any_vec(),
        v in 0.0..5.0f64,
        q in any_q(),
    ) {
        let s = shrink(&x, v, q);
        let p = project_ball(&x, v / 2.0, q.dual());
        for ((a, b), c) in s.iter().zip(&p).zip(&x) {
            prop_assert!((a + b - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn shrink_is_nonexpansive(
        x in any_vec(),
        y in any_vec(),
        v in 0.0..5.0f64,
        q in any_q(),
    ) {
        let n = x.len().min(y.len());
        let sx = shrink(&x[..n], v, q);
        let sy = shrink(&y[..n], v, q);
        let d_out: f64 = sx.iter().zip(&sy).map(|(a, b)| (a - b) * (a - b)).sum();
        let d_in: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!(d_out.sqrt() <= d_in.sqrt() + 1e-12);
    }

    #[test]
    fn projection_lands_in_ball_and_fixes_interior(
        x in any_vec(),
        r in 0.0..5.0f64,
        q in any_q(),
    ) {
        let p = project_ball(&x, r, q);
        prop_assert!(channel_norm(&p, q) <= r + 1e-10);
        if channel_norm(&x, q) <= r {
            for (a, b) in p.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
