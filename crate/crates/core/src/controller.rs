//! High-level `(r, θ)` to primitive translation: turn first, then move.

use crate::error::ControllerError;
use crate::world::{step_primitive, OccupancyGrid, Pose, Primitive, FORWARD_STEP};

/// Slack for ceilings so that values like `π/3 → 60.000000000001°` or
/// `0.05·5 = 0.25000000000000006` don't gain a spurious extra primitive.
const CEIL_SLACK: f64 = 1e-9;

fn ceil_count(x: f64) -> usize {
    (x - CEIL_SLACK).ceil().max(0.0) as usize
}

pub fn turn_count(theta: f64) -> usize {
    if theta == 0.0 {
        0
    } else {
        ceil_count(theta.to_degrees().abs() / 30.0)
    }
}

pub fn forward_count(r: f64) -> usize {
    ceil_count(r / FORWARD_STEP)
}

pub fn translate(r: f64, theta: f64) -> Result<Vec<Primitive>, ControllerError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ControllerError::NegativeRadius(r));
    }
    if !theta.is_finite() {
        return Err(ControllerError::NonFiniteAngle(theta));
    }
    let turn = if theta > 0.0 { Primitive::TurnLeft } else { Primitive::TurnRight };
    let mut seq = vec![turn; turn_count(theta)];
    seq.extend(std::iter::repeat_n(Primitive::MoveForward, forward_count(r)));
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Execution {
    pub pose: Pose,
    pub collided: bool,
    pub primitives_used: usize,
    /// Metres actually travelled by forward primitives.
    pub distance: f64,
}

/// Runs the translated sequence, stopping at the first collision or when
/// `budget` primitives have been spent.
pub fn execute(
    grid: &OccupancyGrid,
    pose: &Pose,
    r: f64,
    theta: f64,
    budget: usize,
) -> Result<Execution, ControllerError> {
    let seq = translate(r, theta)?;
    let mut out = Execution { pose: *pose, collided: false, primitives_used: 0, distance: 0.0 };
    for prim in seq {
        if out.primitives_used >= budget {
            break;
        }
        let (next, collided) = step_primitive(grid, &out.pose, prim);
        out.primitives_used += 1;
        if collided {
            out.collided = true;
            break;
        }
        if prim == Primitive::MoveForward {
            out.distance += FORWARD_STEP;
        }
        out.pose = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{from_ascii, open_room, Cell};
    use std::f64::consts::PI;
    use Primitive::*;

    #[test]
    fn translation_examples() {
        assert_eq!(translate(0.5, PI / 3.0).unwrap(), vec![TurnLeft, TurnLeft, MoveForward, MoveForward]);
        assert_eq!(translate(0.3, -0.4).unwrap(), vec![TurnRight, MoveForward, MoveForward]);
        assert_eq!(translate(0.0, 0.0).unwrap(), vec![]);
        assert_eq!(translate(0.0, PI).unwrap(), vec![TurnLeft; 6]);
        assert_eq!(translate(-0.1, 0.0), Err(ControllerError::NegativeRadius(-0.1)));
    }

    #[test]
    fn open_space_execution() {
        let g = open_room(12, 12);
        let p = Pose::at_cell(&g, Cell::new(3, 5), 0.0);
        let e = execute(&g, &p, 0.5, 0.0, 500).unwrap();
        assert!(!e.collided);
        assert_eq!(e.primitives_used, 2);
        assert!((e.pose.x - p.x - 0.5).abs() < 1e-15);
        assert_eq!(e.distance, 0.5);
    }

    #[test]
    fn partial_execution_on_collision() {
        // Wall face 0.125 m ahead: the first move is already blocked.
        let g = from_ascii(&["######", "#.#.G#", "######"], "x");
        let p = Pose::at_cell(&g, Cell::new(1, 1), 0.0);
        let e = execute(&g, &p, 0.5, 0.0, 500).unwrap();
        assert!(e.collided);
        assert_eq!(e.primitives_used, 1);
        assert_eq!(e.pose, p);
        // Wall face 0.375 m ahead: one move succeeds, the second is blocked.
        let g = from_ascii(&["#######", "#..#.G#", "#######"], "x");
        let p = Pose::at_cell(&g, Cell::new(1, 1), 0.0);
        let e = execute(&g, &p, 0.5, 0.0, 500).unwrap();
        assert!(e.collided);
        assert_eq!(e.primitives_used, 2);
        assert_eq!(e.distance, 0.25);
    }

    #[test]
    fn budget_cuts_sequence() {
        let g = open_room(20, 20);
        let p = Pose::at_cell(&g, Cell::new(5, 5), 0.0);
        let e = execute(&g, &p, 1.0, PI / 2.0, 4).unwrap();
        assert_eq!(e.primitives_used, 4);
        assert_eq!(e.distance, 0.25);
    }

    #[test]
    fn quantization_bounds() {
        for deg in -180..=180 {
            let theta = (deg as f64).to_radians();
            let turned = turn_count(theta) as f64 * 30.0;
            let err = turned - (deg as f64).abs();
            assert!((0.0..30.0).contains(&err), "deg {deg}");
        }
        for cm in 0..=200 {
            let r = cm as f64 / 100.0;
            let commanded = forward_count(r) as f64 * 0.25;
            assert!(commanded >= r - 1e-9 && commanded - r < 0.25);
        }
    }
}
