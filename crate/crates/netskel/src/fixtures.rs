//! Reference network models used across the test suites and shipped as
//! sample model files. Each constructor documents the structural feature it
//! exercises; gains are chosen so the interesting cancellations are exact.

use crate::model::{Ldim, NoiseChannel};

/// Three-node chain with a direct shortcut: `y1 -> y2 -> y3` plus
/// `y1 -> y3`. With `shortcut = -a * b` the shortcut exactly masks the
/// indirect path, zeroing the (1,3) spectral entry.
pub fn triangle_chain(a: f64, b: f64, shortcut: f64) -> Ldim {
    Ldim::builder(3)
        .gain(0, 1, a)
        .gain(1, 2, b)
        .gain(0, 2, shortcut)
        .build()
        .expect("static triangle is well posed")
}

/// Collider model observationally equivalent to
/// `triangle_chain(a, b, -a*b)`: `y1 -> y2 <- y3` with rescaled gains and
/// noise variances chosen to reproduce the same output spectrum.
pub fn equivalent_collider(a: f64, b: f64) -> Ldim {
    let s = b * b + 1.0;
    Ldim::builder(3)
        .gain(0, 1, a)
        .gain(2, 1, b / s)
        .noise(1, NoiseChannel::white(1.0 / s))
        .noise(2, NoiseChannel::white(s))
        .build()
        .expect("static collider is well posed")
}

/// Four-node diamond `y4 -> y1 -> y2 -> y3 <- y4` (a feedforward graph whose
/// moral graph gains the coparent edge {2,4} and contains two triangles).
/// Gains are listed edge by edge.
pub fn diamond(g41: f64, g12: f64, g23: f64, g43: f64) -> Ldim {
    Ldim::builder(4)
        .gain(3, 0, g41)
        .gain(0, 1, g12)
        .gain(1, 2, g23)
        .gain(3, 2, g43)
        .build()
        .expect("static diamond is well posed")
}

/// The diamond with unit gains: generic coefficients, exact recovery.
pub fn diamond_unit() -> Ldim {
    diamond(1.0, 1.0, 1.0, 1.0)
}

/// The diamond with an adversarial direct gain: the path `4 -> 1 -> 2 -> 3`
/// has gain 8, exactly cancelled by `g43 = -8`, so `y3` decorrelates from
/// `y4` and a true edge becomes removable (flagged, sparser output).
pub fn diamond_masked() -> Ldim {
    diamond(2.0, 2.0, 2.0, -8.0)
}

/// Five-node branched graph: `y4 -> y1 -> y2 -> y3`, `y4 -> y3`,
/// `y2 -> y5`, `y4 -> y5`. The gain from `y2` to `y5` is the free knob:
/// at `branch_gain = 3` the full-conditioning estimate of `y2` has a zero
/// `y4` component, so the pair {2,4} drops out of the moral bound and the
/// bound collapses to the exact (triangle-free) skeleton.
pub fn branched_five(branch_gain: f64) -> Ldim {
    Ldim::builder(5)
        .gain(3, 0, 1.0)
        .gain(0, 1, 2.0)
        .gain(1, 2, 3.0)
        .gain(3, 2, -6.0)
        .gain(1, 4, branch_gain)
        .gain(3, 4, 6.0)
        .build()
        .expect("static branched graph is well posed")
}

/// Five-node network with a directed feedback cycle of length four,
/// `y1 -> y2 -> y3 -> y4 -> y1` (one edge delayed so the loop is well
/// posed), plus an exogenous `y5 -> y1`. The moral graph marries the
/// coparents {4,5}, creating the unique triangle {1,4,5}.
///
/// `feedback_gain` scales the `y4 -> y1` edge and hence the loop gain
/// (`2 * feedback_gain` per revolution): values below 0.5 in magnitude give
/// a stable loop; `feedback_gain = 3` makes the loop explosive (pole at 6),
/// which keeps the spectrum on the unit circle well defined but has no
/// causal stationary realization — simulation diverges.
pub fn delayed_cycle_five(feedback_gain: f64) -> Ldim {
    Ldim::builder(5)
        .gain(3, 0, feedback_gain)
        .gain(4, 0, 4.0)
        .gain(0, 1, 1.0)
        .delayed_gain(1, 2, 1.0)
        .gain(2, 3, 2.0)
        .build()
        .expect("delayed cycle is well posed")
}

/// Two independent sources `y1, y2` feeding two sinks `y3, y4` with gains
/// arranged antisymmetrically (`-a, b` into `y3`; `a, b` into `y4`). The
/// coparent products cancel, so the pair {1,2} is absent from the
/// full-conditioning bound even though {1,2} is a moral-graph edge: the
/// bound is a strict lower bound of the moral graph.
pub fn coparent_square(a: f64, b: f64) -> Ldim {
    Ldim::builder(4)
        .gain(0, 2, -a)
        .gain(1, 2, b)
        .gain(0, 3, a)
        .gain(1, 3, b)
        .build()
        .expect("static square is well posed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::FrequencyGrid;
    use approx::assert_relative_eq;

    #[test]
    fn masked_triangle_and_collider_share_a_spectrum() {
        let grid = FrequencyGrid::new(32).unwrap();
        for (a, b) in [(1.0, 1.0), (2.0, 3.0)] {
            let s1 = triangle_chain(a, b, -a * b).psd(&grid).unwrap();
            let s2 = equivalent_collider(a, b).psd(&grid).unwrap();
            for k in 0..grid.size() {
                let d = (s1.at(k) - s2.at(k)).norm();
                assert!(d < 1e-10, "spectra differ by {d} at frequency {k}");
            }
            // Closed form: [[1, a, 0], [a, a^2+1, b], [0, b, b^2+1]].
            let m = s1.at(0);
            assert_relative_eq!(m[(0, 1)].re, a, epsilon = 1e-12);
            assert_relative_eq!(m[(1, 1)].re, a * a + 1.0, epsilon = 1e-12);
            assert_relative_eq!(m[(1, 2)].re, b, epsilon = 1e-12);
            assert_relative_eq!(m[(2, 2)].re, b * b + 1.0, epsilon = 1e-12);
            assert!(m[(0, 2)].norm() < 1e-12);
        }
    }

    #[test]
    fn structural_shapes_are_as_documented() {
        let d = diamond_unit().causal_graph();
        assert_eq!(d.edges().count(), 4);
        assert!(d.has_edge(3, 0) && d.has_edge(0, 1) && d.has_edge(1, 2) && d.has_edge(3, 2));

        let b = branched_five(3.0).causal_graph();
        assert_eq!(b.edges().count(), 6);
        assert!(b.skeleton().is_triangle_free());

        let c = delayed_cycle_five(0.3);
        assert!(c.validate_utf().is_utf());
        // The length-four feedback loop is present.
        assert!(c.causal_graph().topological_order().is_err());

        let sq = coparent_square(1.0, 1.0).causal_graph();
        assert_eq!(sq.moral_graph().edge_count(), 5);
        assert_eq!(sq.skeleton().edge_count(), 4);
    }

    #[test]
    fn masked_diamond_decorrelates_the_masked_pair() {
        let grid = FrequencyGrid::new(64).unwrap();
        let r = diamond_masked().psd(&grid).unwrap().covariances(8).unwrap();
        // Path gain 2*2*2 = 8 exactly cancels the direct gain -8.
        assert_relative_eq!(r.entry(0, 2, 3), 0.0, epsilon = 1e-12);
        // In the unit diamond the same pair stays correlated: node 2 hears
        // the source twice, through the chain and through the direct edge.
        let ru = diamond_unit().psd(&grid).unwrap().covariances(8).unwrap();
        assert_relative_eq!(ru.entry(0, 2, 3), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn unstable_cycle_diverges_but_keeps_a_valid_spectrum() {
        let m = delayed_cycle_five(3.0);
        assert!(m.psd(&FrequencyGrid::new(64).unwrap()).is_ok());
        assert!(matches!(
            m.simulate(5_000, 7),
            Err(crate::error::Error::DivergenceDetected { .. })
        ));
        // The stable variant simulates fine.
        assert!(delayed_cycle_five(0.3).simulate(5_000, 7).is_ok());
    }
}
