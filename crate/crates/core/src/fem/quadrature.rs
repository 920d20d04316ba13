//! Symmetric Gauss rules on the reference triangle and Gauss-Legendre rules
//! on the reference edge.
//!
//! Triangle weights are normalized to sum to one, so the physical integral
//! of `f` over a triangle of area `A` is `A * sum_q w_q f(x_q)`. All rules
//! have strictly positive weights, and the graded rules keep their points
//! strictly interior (the classical 4-point degree-3 rule has a negative
//! centroid weight, so degree 3 requests are served by the degree-4 rule);
//! the midedge rule is the one deliberate exception, see its doc.

/// Quadrature rule in barycentric coordinates; weights sum to 1.
pub struct TriRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    pub degree: usize,
}

/// Rule on `[0, 1]`; weights sum to 1, so an edge integral is
/// `length * sum_q w_q f(s_q)`.
pub struct EdgeRule {
    pub points: &'static [f64],
    pub weights: &'static [f64],
}

const CENTROID: [[f64; 3]; 1] = [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
const W1: [f64; 1] = [1.0];

const P2_PTS: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];
const P2_W: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

// Degree 4, six points (two symmetric orbits), all weights positive.
const A4A: f64 = 0.445948490915965;
const A4B: f64 = 0.091576213509771;
const W4A: f64 = 0.223381589678011;
const W4B: f64 = 0.109951743655322;
const P4_PTS: [[f64; 3]; 6] = [
    [1.0 - 2.0 * A4A, A4A, A4A],
    [A4A, 1.0 - 2.0 * A4A, A4A],
    [A4A, A4A, 1.0 - 2.0 * A4A],
    [1.0 - 2.0 * A4B, A4B, A4B],
    [A4B, 1.0 - 2.0 * A4B, A4B],
    [A4B, A4B, 1.0 - 2.0 * A4B],
];
const P4_W: [f64; 6] = [W4A, W4A, W4A, W4B, W4B, W4B];

// Degree 5, seven points (centroid plus two orbits).
const A5A: f64 = 0.470142064105115;
const A5B: f64 = 0.101286507323456;
const W5A: f64 = 0.132394152788506;
const W5B: f64 = 0.125939180544827;
const P5_PTS: [[f64; 3]; 7] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [1.0 - 2.0 * A5A, A5A, A5A],
    [A5A, 1.0 - 2.0 * A5A, A5A],
    [A5A, A5A, 1.0 - 2.0 * A5A],
    [1.0 - 2.0 * A5B, A5B, A5B],
    [A5B, 1.0 - 2.0 * A5B, A5B],
    [A5B, A5B, 1.0 - 2.0 * A5B],
];
const P5_W: [f64; 7] = [0.225, W5A, W5A, W5A, W5B, W5B, W5B];

// Degree 6, twelve points (two 3-orbits and one 6-orbit).
const A6A: f64 = 0.249286745170910;
const A6B: f64 = 0.063089014491502;
const A6C: f64 = 0.310352451033785;
const B6C: f64 = 0.053145049844816;
const W6A: f64 = 0.116786275726379;
const W6B: f64 = 0.050844906370207;
const W6C: f64 = 0.082851075618374;
const P6_PTS: [[f64; 3]; 12] = [
    [1.0 - 2.0 * A6A, A6A, A6A],
    [A6A, 1.0 - 2.0 * A6A, A6A],
    [A6A, A6A, 1.0 - 2.0 * A6A],
    [1.0 - 2.0 * A6B, A6B, A6B],
    [A6B, 1.0 - 2.0 * A6B, A6B],
    [A6B, A6B, 1.0 - 2.0 * A6B],
    [1.0 - A6C - B6C, A6C, B6C],
    [1.0 - A6C - B6C, B6C, A6C],
    [A6C, 1.0 - A6C - B6C, B6C],
    [B6C, 1.0 - A6C - B6C, A6C],
    [A6C, B6C, 1.0 - A6C - B6C],
    [B6C, A6C, 1.0 - A6C - B6C],
];
const P6_W: [f64; 12] = [
    W6A, W6A, W6A, W6B, W6B, W6B, W6C, W6C, W6C, W6C, W6C, W6C,
];

const MID_PTS: [[f64; 3]; 3] = [
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];
const MID_W: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Degree-2 rule at the three edge midpoints. Every quadratic vertex
/// function vanishes at all three points and each midedge function is 1 at
/// exactly one of them, so a load assembled with this rule from a
/// nonnegative density has no negative entries; the interior rules lose
/// that property because vertex functions dip negative over part of the
/// triangle. Reserved for source terms feeding sign-sensitive fields.
pub fn midedge_rule() -> &'static TriRule {
    &TriRule { points: &MID_PTS, weights: &MID_W, degree: 2 }
}

/// Rule integrating polynomials up to `degree` exactly (1 through 6).
pub fn tri_rule(degree: usize) -> &'static TriRule {
    match degree {
        0 | 1 => &TriRule { points: &CENTROID, weights: &W1, degree: 1 },
        2 => &TriRule { points: &P2_PTS, weights: &P2_W, degree: 2 },
        3 | 4 => &TriRule { points: &P4_PTS, weights: &P4_W, degree: 4 },
        5 => &TriRule { points: &P5_PTS, weights: &P5_W, degree: 5 },
        6 => &TriRule { points: &P6_PTS, weights: &P6_W, degree: 6 },
        d => panic!("no triangle rule of degree {d} (supported: 1..=6)"),
    }
}

// 4-point Gauss-Legendre on [0,1]: degree 7.
const GL4_X: [f64; 4] = [
    0.069431844202974,
    0.330009478207572,
    0.669990521792428,
    0.930568155797026,
];
const GL4_W: [f64; 4] = [
    0.173927422568727,
    0.326072577431273,
    0.326072577431273,
    0.173927422568727,
];

pub fn edge_rule() -> &'static EdgeRule {
    &EdgeRule { points: &GL4_X, weights: &GL4_W }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact integral of a barycentric monomial over the reference triangle,
    /// divided by the triangle area: `2 * a! b! c! / (a + b + c + 2)!`.
    fn exact_bary_monomial(a: u32, b: u32, c: u32) -> f64 {
        let fact = |n: u32| (1..=n as u64).product::<u64>() as f64;
        2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
    }

    #[test]
    fn weights_positive_and_sum_to_one() {
        for d in 1..=6 {
            let rule = tri_rule(d);
            assert!(rule.weights.iter().all(|&w| w > 0.0), "degree {d}");
            let s: f64 = rule.weights.iter().sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-14);
            for p in rule.points {
                assert!(p.iter().all(|&l| l > 0.0 && l < 1.0), "degree {d}: interior");
                assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rules_integrate_monomials_to_declared_degree() {
        for d in 1..=6usize {
            let rule = tri_rule(d);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let c = d as u32 - a - b;
                    let num: f64 = rule
                        .points
                        .iter()
                        .zip(rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    assert_relative_eq!(
                        num,
                        exact_bary_monomial(a, b, c),
                        epsilon = 1e-14,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn midedge_rule_is_degree_two_and_annihilates_vertex_functions() {
        let rule = midedge_rule();
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        for a in 0..=2u32 {
            for b in 0..=(2 - a) {
                let c = 2 - a - b;
                let num: f64 = rule
                    .points
                    .iter()
                    .zip(rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                    .sum();
                assert_relative_eq!(num, exact_bary_monomial(a, b, c), epsilon = 1e-14);
            }
        }
        for p in rule.points {
            for v in 0..3 {
                let vertex_shape = p[v] * (2.0 * p[v] - 1.0);
                assert_eq!(vertex_shape, 0.0, "vertex function at a midedge point");
            }
        }
    }

    /// Integral of the first coordinate over the unit reference triangle.
    #[test]
    fn linear_coordinate_integrates_to_one_sixth() {
        let rule = tri_rule(2);
        // x = lambda_1 on the triangle (0,0),(1,0),(0,1); area 1/2.
        let s: f64 = rule
            .points
            .iter()
            .zip(rule.weights)
            .map(|(p, w)| w * p[1])
            .sum();
        assert_relative_eq!(0.5 * s, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn edge_rule_integrates_degree_seven() {
        let rule = edge_rule();
        for d in 0..=7 {
            let num: f64 = rule
                .points
                .iter()
                .zip(rule.weights)
                .map(|(x, w)| w * x.powi(d))
                .sum();
            assert_relative_eq!(num, 1.0 / (d as f64 + 1.0), epsilon = 1e-14);
        }
    }
}
