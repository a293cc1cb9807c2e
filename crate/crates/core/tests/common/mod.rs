#![allow(dead_code)]

use mintime::adjoint::{reconstruct, simulate, ControlSequence, Reconstruction};
use mintime::geom::Vec2;
use mintime::reachset::{unsampled_sets, FlowSource, ReachFlow};

/// Discrete PMP checks for one reconstructed control.
pub struct PmpCheck {
    /// Nodes where `η B̄ û` differs from the maximum over the box corners.
    pub max_violations: usize,
    /// `|⟨ζ, y_end⟩ - δ*(ζ, R_h)|` against the discrete set without re-sampling.
    pub support_gap: f64,
}

pub fn pmp_check(flow: &ReachFlow, ring: usize, k: usize) -> (Reconstruction, PmpCheck) {
    let FlowSource::Linear { problem, .. } = &flow.source else { panic!("linear flow expected") };
    let r = reconstruct(flow, ring, k).unwrap();
    let corners: Vec<Vec2> = if problem.control_dim == 1 {
        vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)]
    } else {
        vec![Vec2::new(1.0, 1.0), Vec2::new(1.0, -1.0), Vec2::new(-1.0, 1.0), Vec2::new(-1.0, -1.0)]
    };
    let mut max_violations = 0;
    for (kk, row) in r.path.eta.iter().enumerate() {
        for (j, eta) in row.iter().enumerate() {
            let c = problem.bbar.at(r.path.node_time(kk, j)).transpose() * eta;
            let best = corners.iter().map(|v| c.dot(v)).fold(f64::NEG_INFINITY, f64::max);
            if c.dot(&r.controls.values[kk][j]) != best {
                max_violations += 1;
            }
        }
    }
    let sets = unsampled_sets(flow, ring).unwrap();
    let support = sets[ring].support_value(&r.zeta);
    let support_gap = (r.zeta.dot(&r.trajectory.endpoint()) - support).abs();
    (r, PmpCheck { max_violations, support_gap })
}

/// Largest `⟨ζ, y_end⟩` over all ±1 values at the fine nodes that carry
/// nonzero quadrature weight, by enumeration; the remaining nodes are zero.
pub fn brute_force_best(flow: &ReachFlow, ring: usize, zeta: &Vec2, weighted: &[(usize, usize)]) -> f64 {
    let n = flow.n;
    let mut best = f64::NEG_INFINITY;
    assert!(weighted.len() <= 16);
    for mask in 0u32..(1 << weighted.len()) {
        let mut u = ControlSequence::constant(1, flow.t0, flow.h, n, ring, Vec2::zeros());
        for (bit, &(k, j)) in weighted.iter().enumerate() {
            u.values[k][j] = Vec2::new(if mask >> bit & 1 == 1 { 1.0 } else { -1.0 }, 0.0);
        }
        let y = simulate(flow, &u).unwrap().endpoint();
        best = best.max(zeta.dot(&y));
    }
    best
}
