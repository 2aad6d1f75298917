//! Reference instances shipped with the crate (`data/*.pop`).

use crate::io::{parse_pop, PopInstance};

pub const ROBINSON: &str = include_str!("../data/robinson.pop");
pub const LEMNISCATE: &str = include_str!("../data/lemniscate.pop");
pub const SIMPLEX_CUBIC: &str = include_str!("../data/simplex_cubic.pop");
pub const MOTZKIN_BALL: &str = include_str!("../data/motzkin_ball.pop");
pub const DEGENERATE_POINT: &str = include_str!("../data/degenerate_point.pop");
pub const SHIFTED_MOTZKIN: &str = include_str!("../data/shifted_motzkin.pop");
pub const MOTZKIN_PLUS_QUADRATIC: &str = include_str!("../data/motzkin_plus_quadratic.pop");

fn load(text: &str) -> PopInstance {
    parse_pop(text).expect("bundled instance parses")
}

/// Robinson form on the unit sphere; 20 global minimizers, value 0.
pub fn robinson() -> PopInstance {
    load(ROBINSON)
}

pub fn lemniscate() -> PopInstance {
    load(LEMNISCATE)
}

pub fn simplex_cubic() -> PopInstance {
    load(SIMPLEX_CUBIC)
}

/// The `eps = 0.01` member of the perturbed family.
pub fn motzkin_ball() -> PopInstance {
    load(MOTZKIN_BALL)
}

/// `min x  s.t.  -x^2 >= 0`.
pub fn degenerate_point() -> PopInstance {
    load(DEGENERATE_POINT)
}

pub fn shifted_motzkin() -> PopInstance {
    load(SHIFTED_MOTZKIN)
}

pub fn motzkin_plus_quadratic() -> PopInstance {
    load(MOTZKIN_PLUS_QUADRATIC)
}

/// The 20 global minimizers of the Robinson instance.
pub fn robinson_minimizers() -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    let a = 1.0 / 3f64.sqrt();
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            for s3 in [-1.0, 1.0] {
                pts.push(vec![s1 * a, s2 * a, s3 * a]);
            }
        }
    }
    let b = 1.0 / 2f64.sqrt();
    for zero in 0..3 {
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                let mut p = vec![0.0; 3];
                let others: Vec<usize> = (0..3).filter(|&i| i != zero).collect();
                p[others[0]] = s1 * b;
                p[others[1]] = s2 * b;
                pts.push(p);
            }
        }
    }
    pts
}
