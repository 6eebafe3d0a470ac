//! Planar robot world: a unicycle robot in a segment arena with a simulated
//! laser scanner. Kinematics use the closed-form arc solution, rays are
//! intersected exactly, and ranges map affinely onto bounded proximity values.

use crate::core::{clamp_frame, validate_frame, ContinuousFrame, SimClock};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoboError {
    #[error("{path}:{line}: {message}")]
    BadArena { path: String, line: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("robot collided at tick {tick} (x={x:.3}, y={y:.3})")]
    CollisionHalt { tick: i64, x: f64, y: f64 },
    #[error("bad robot parameter: {what}")]
    BadParams { what: String },
    #[error(transparent)]
    Signal(#[from] crate::core::SignalError),
}

/// Wall segment between two points (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

/// Axis-aligned workspace bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub segments: Vec<Segment>,
    pub bounds: Bounds,
}

impl Arena {
    /// Build an arena; without explicit bounds the segment bounding box is
    /// used (or a practically unbounded floor when there are no segments).
    pub fn new(segments: Vec<Segment>, bounds: Option<Bounds>) -> Self {
        let bounds = bounds.unwrap_or_else(|| {
            if segments.is_empty() {
                Bounds { min_x: -1e9, min_y: -1e9, max_x: 1e9, max_y: 1e9 }
            } else {
                let mut b = Bounds {
                    min_x: f64::INFINITY,
                    min_y: f64::INFINITY,
                    max_x: f64::NEG_INFINITY,
                    max_y: f64::NEG_INFINITY,
                };
                for s in &segments {
                    b.min_x = b.min_x.min(s.x1.min(s.x2));
                    b.min_y = b.min_y.min(s.y1.min(s.y2));
                    b.max_x = b.max_x.max(s.x1.max(s.x2));
                    b.max_y = b.max_y.max(s.y1.max(s.y2));
                }
                b
            }
        });
        Arena { segments, bounds }
    }

    /// Unbounded empty floor (useful for load benchmarks).
    pub fn open_floor() -> Self {
        Arena::new(Vec::new(), None)
    }

    /// Parse the plain-text arena format: one `x1 y1 x2 y2` segment per line,
    /// `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, RoboError> {
        let mut segments = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(RoboError::BadArena {
                    path: origin.to_string(),
                    line: idx + 1,
                    message: format!("expected 4 numbers, found {}", fields.len()),
                });
            }
            let mut vals = [0.0f64; 4];
            for (i, f) in fields.iter().enumerate() {
                vals[i] = f.parse().map_err(|_| RoboError::BadArena {
                    path: origin.to_string(),
                    line: idx + 1,
                    message: format!("not a number: {f:?}"),
                })?;
            }
            segments.push(Segment { x1: vals[0], y1: vals[1], x2: vals[2], y2: vals[3] });
        }
        Ok(Arena::new(segments, None))
    }

    pub fn from_file(path: &Path) -> Result<Self, RoboError> {
        let text = std::fs::read_to_string(path).map_err(|source| RoboError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Arena::parse(&text, &path.display().to_string())
    }
}

/// Robot pose and current twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, normalised to (-pi, pi].
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
}

impl RobotState {
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        RobotState { x, y, heading: wrap_angle(heading), v: 0.0, omega: 0.0 }
    }
}

/// Velocity command: forward speed (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistCommand {
    pub linear: f64,
    pub angular: f64,
}

/// Laser scanner geometry. Beams sweep the field of view from the right edge
/// (`heading - fov/2`, beam 0) to the left edge (`heading + fov/2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserScan {
    pub n_beams: usize,
    /// Field of view in radians.
    pub fov: f64,
    /// Maximum range in meters; misses report this value.
    pub max_range: f64,
    /// Nominal update rate (Hz); with one global tick length the effective
    /// rate is 1 / delta_t, so this is informational.
    pub update_rate: f64,
}

impl Default for LaserScan {
    fn default() -> Self {
        LaserScan { n_beams: 100, fov: std::f64::consts::PI, max_range: 5.0, update_rate: 20.0 }
    }
}

#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    // Normalise to (-pi, pi].
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Numerically stable sin(u)/u.
#[inline]
fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0 + u.powi(4) / 120.0
    } else {
        u.sin() / u
    }
}

/// Advance a unicycle pose by `dt` under a constant twist, using the exact
/// arc solution (`x' = v cos h`, `y' = v sin h`, `h' = omega`):
/// the displacement is `v dt sinc(theta/2)` along the chord direction
/// `h + theta/2` with `theta = omega dt`.
pub fn apply_twist(state: &mut RobotState, twist: TwistCommand, dt: f64) {
    let theta = twist.angular * dt;
    let chord = twist.linear * dt * sinc(theta * 0.5);
    let mid = state.heading + theta * 0.5;
    state.x += chord * mid.cos();
    state.y += chord * mid.sin();
    state.heading = wrap_angle(state.heading + theta);
    state.v = twist.linear;
    state.omega = twist.angular;
}

/// Distance along a ray from `(ox, oy)` in direction `angle` to the nearest
/// segment, capped at `max_range`.
pub fn raycast(arena: &Arena, ox: f64, oy: f64, angle: f64, max_range: f64) -> f64 {
    let dx = angle.cos();
    let dy = angle.sin();
    let mut best = max_range;
    for s in &arena.segments {
        let ex = s.x2 - s.x1;
        let ey = s.y2 - s.y1;
        let denom = dx * ey - dy * ex;
        if denom.abs() < 1e-15 {
            continue; // parallel (colinear overlap treated as a miss)
        }
        let rx = s.x1 - ox;
        let ry = s.y1 - oy;
        let t = (rx * ey - ry * ex) / denom;
        let u = (rx * dy - ry * dx) / denom;
        if t >= 0.0 && (0.0..=1.0).contains(&u) && t < best {
            best = t;
        }
    }
    best
}

/// Full scan: ranges for every beam at the given pose.
pub fn scan_ranges(arena: &Arena, state: &RobotState, scan: &LaserScan) -> Vec<f64> {
    let n = scan.n_beams;
    (0..n)
        .map(|i| {
            let offset = if n == 1 {
                0.0
            } else {
                -scan.fov / 2.0 + scan.fov * i as f64 / (n - 1) as f64
            };
            raycast(arena, state.x, state.y, state.heading + offset, scan.max_range)
        })
        .collect()
}

/// Map ranges onto proximity values: `1 - 2 * range / max_range`, so contact
/// reads +1 and a clear beam reads -1.
pub fn scan_to_frame(ranges: &[f64], max_range: f64, tick_index: i64) -> ContinuousFrame {
    let mut frame = ContinuousFrame {
        tick_index,
        values: ranges.iter().map(|r| 1.0 - 2.0 * r / max_range).collect(),
    };
    clamp_frame(&mut frame).expect("ranges are finite");
    frame
}

fn point_segment_distance(px: f64, py: f64, s: &Segment) -> f64 {
    let ex = s.x2 - s.x1;
    let ey = s.y2 - s.y1;
    let len2 = ex * ex + ey * ey;
    let t = if len2 <= 0.0 {
        0.0
    } else {
        (((px - s.x1) * ex + (py - s.y1) * ey) / len2).clamp(0.0, 1.0)
    };
    let cx = s.x1 + t * ex;
    let cy = s.y1 + t * ey;
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// True when the robot disc overlaps any segment or pokes outside the bounds.
pub fn collision_check(arena: &Arena, state: &RobotState, radius: f64) -> bool {
    if state.x - radius < arena.bounds.min_x
        || state.x + radius > arena.bounds.max_x
        || state.y - radius < arena.bounds.min_y
        || state.y + radius > arena.bounds.max_y
    {
        return true;
    }
    arena
        .segments
        .iter()
        .any(|s| point_segment_distance(state.x, state.y, s) < radius)
}

/// One row of the pose trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRow {
    pub tick: i64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
    pub collided: bool,
}

pub const POSE_TRACE_HEADER: &str = "tick,x,y,heading,v,omega,collided";

pub fn pose_trace_csv(rows: &[PoseRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(POSE_TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.tick,
            r.x,
            r.y,
            r.heading,
            r.v,
            r.omega,
            u8::from(r.collided)
        );
    }
    out
}

/// Robot world parameters.
#[derive(Debug, Clone)]
pub struct RobotConfig {
    pub radius: f64,
    /// Forward speed at a motor command of +-1 (m/s).
    pub v_max: f64,
    /// Yaw rate at a motor command of +-1 (rad/s).
    pub omega_max: f64,
    pub scan: LaserScan,
    /// Physics substep (s).
    pub substep: f64,
    pub stop_on_collision: bool,
    pub start: RobotState,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            radius: 0.15,
            v_max: 0.5,
            omega_max: 2.0,
            scan: LaserScan::default(),
            substep: 0.001,
            stop_on_collision: false,
            start: RobotState::at(0.0, 0.0, 0.0),
        }
    }
}

/// The robot world: arena, robot, scanner and accumulated diagnostics.
#[derive(Debug, Clone)]
pub struct RobotWorld {
    pub arena: Arena,
    pub config: RobotConfig,
    pub state: RobotState,
    pub path_length: f64,
    /// Ticks during which the disc overlapped something.
    pub collision_ticks: u64,
    trace: Vec<PoseRow>,
    record_trace: bool,
}

impl RobotWorld {
    pub fn new(arena: Arena, config: RobotConfig) -> Result<Self, RoboError> {
        if !(config.radius > 0.0 && config.v_max >= 0.0 && config.omega_max >= 0.0) {
            return Err(RoboError::BadParams {
                what: format!(
                    "radius {}, v_max {}, omega_max {}",
                    config.radius, config.v_max, config.omega_max
                ),
            });
        }
        if !(config.substep > 0.0) {
            return Err(RoboError::BadParams { what: format!("substep {}", config.substep) });
        }
        if config.scan.n_beams == 0 || config.scan.max_range <= 0.0 {
            return Err(RoboError::BadParams {
                what: format!(
                    "n_beams {}, max_range {}",
                    config.scan.n_beams, config.scan.max_range
                ),
            });
        }
        let state = config.start;
        Ok(RobotWorld {
            arena,
            config,
            state,
            path_length: 0.0,
            collision_ticks: 0,
            trace: Vec::new(),
            record_trace: false,
        })
    }

    pub fn set_record_trace(&mut self, on: bool) {
        self.record_trace = on;
    }

    pub fn trace(&self) -> &[PoseRow] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<PoseRow> {
        std::mem::take(&mut self.trace)
    }

    /// Consume one motor frame (bounded `[linear, angular]` commands),
    /// advance the world by one tick in fixed substeps, and return the scan
    /// as a proximity frame for the current tick.
    pub fn step_tick(
        &mut self,
        motor: &ContinuousFrame,
        clock: &SimClock,
    ) -> Result<ContinuousFrame, RoboError> {
        validate_frame(motor, 2)?;
        let twist = TwistCommand {
            linear: motor.values[0] * self.config.v_max,
            angular: motor.values[1] * self.config.omega_max,
        };
        let steps_f = clock.delta_t / self.config.substep;
        let steps = steps_f.round().max(1.0);
        let dt = clock.delta_t / steps;
        let mut collided_this_tick = false;
        for _ in 0..steps as usize {
            apply_twist(&mut self.state, twist, dt);
            self.path_length += twist.linear.abs() * dt;
            if collision_check(&self.arena, &self.state, self.config.radius) {
                collided_this_tick = true;
                if self.config.stop_on_collision {
                    self.collision_ticks += 1;
                    if self.record_trace {
                        self.push_trace(clock.tick_index, true);
                    }
                    return Err(RoboError::CollisionHalt {
                        tick: clock.tick_index,
                        x: self.state.x,
                        y: self.state.y,
                    });
                }
            }
        }
        if collided_this_tick {
            self.collision_ticks += 1;
        }
        if self.record_trace {
            self.push_trace(clock.tick_index, collided_this_tick);
        }
        let ranges = scan_ranges(&self.arena, &self.state, &self.config.scan);
        Ok(scan_to_frame(&ranges, self.config.scan.max_range, clock.tick_index))
    }

    fn push_trace(&mut self, tick: i64, collided: bool) {
        self.trace.push(PoseRow {
            tick,
            x: self.state.x,
            y: self.state.y,
            heading: self.state.heading,
            v: self.state.v,
            omega: self.state.omega,
            collided,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight_motion_without_rotation() {
        let mut s = RobotState::at(1.0, 2.0, FRAC_PI_2);
        apply_twist(&mut s, TwistCommand { linear: 2.0, angular: 0.0 }, 0.5);
        assert!((s.x - 1.0).abs() < 1e-15);
        assert!((s.y - 3.0).abs() < 1e-15);
        assert_eq!(s.heading, FRAC_PI_2);
    }

    #[test]
    fn quarter_arc_matches_hand_solution() {
        // v = 1, omega = 1, dt = pi/2 from the origin: quarter circle of
        // radius 1, ending at (1, 1) facing +y.
        let mut s = RobotState::at(0.0, 0.0, 0.0);
        apply_twist(&mut s, TwistCommand { linear: 1.0, angular: 1.0 }, FRAC_PI_2);
        assert!((s.x - 1.0).abs() < 1e-12, "x {}", s.x);
        assert!((s.y - 1.0).abs() < 1e-12, "y {}", s.y);
        assert!((s.heading - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn split_step_equals_whole_step() {
        // Closed-form integration: two half steps land exactly where one full
        // step does, for any twist.
        let cases = [
            (0.7, 1.3),
            (0.5, 0.0),
            (0.0, 2.0),
            (-0.4, 1e-6),
            (0.9, -1e-9),
            (1.0, 3.0),
        ];
        for &(v, w) in &cases {
            let twist = TwistCommand { linear: v, angular: w };
            let mut whole = RobotState::at(0.3, -0.7, 0.45);
            apply_twist(&mut whole, twist, 0.02);
            let mut split = RobotState::at(0.3, -0.7, 0.45);
            apply_twist(&mut split, twist, 0.01);
            apply_twist(&mut split, twist, 0.01);
            assert!((whole.x - split.x).abs() < 1e-12, "x for ({v}, {w})");
            assert!((whole.y - split.y).abs() < 1e-12, "y for ({v}, {w})");
            assert!((whole.heading - split.heading).abs() < 1e-12, "h for ({v}, {w})");
        }
    }

    #[test]
    fn pure_rotation_keeps_position() {
        let mut s = RobotState::at(0.1, 0.2, 0.0);
        apply_twist(&mut s, TwistCommand { linear: 0.0, angular: 3.0 }, 1.0);
        assert_eq!((s.x, s.y), (0.1, 0.2));
        assert!((s.heading - 3.0).abs() < 1e-15);
    }

    #[test]
    fn heading_wraps_into_half_open_interval() {
        let mut s = RobotState::at(0.0, 0.0, 3.0);
        apply_twist(&mut s, TwistCommand { linear: 0.0, angular: 1.0 }, 1.0);
        assert!(s.heading > -PI && s.heading <= PI);
        assert!((s.heading - (4.0 - std::f64::consts::TAU)).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_ray_hits_wall_at_distance() {
        let arena = Arena::new(
            vec![Segment { x1: 2.0, y1: -5.0, x2: 2.0, y2: 5.0 }],
            None,
        );
        let r = raycast(&arena, 0.0, 0.0, 0.0, 10.0);
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oblique_ray_range_scales_with_secant() {
        // A wall at x = 2 seen at angle a is 2 / cos(a) away.
        let arena = Arena::new(
            vec![Segment { x1: 2.0, y1: -50.0, x2: 2.0, y2: 50.0 }],
            None,
        );
        for &a in &[0.1, 0.5, 1.0, -0.9] {
            let r = raycast(&arena, 0.0, 0.0, a, 100.0);
            assert!((r - 2.0 / a.cos()).abs() < 1e-9, "angle {a}");
        }
    }

    #[test]
    fn miss_reports_max_range() {
        let arena = Arena::new(
            vec![Segment { x1: 2.0, y1: 1.0, x2: 2.0, y2: 5.0 }],
            None,
        );
        // Ray along +x passes below the segment.
        assert_eq!(raycast(&arena, 0.0, 0.0, 0.0, 7.5), 7.5);
        // Behind the origin is a miss too.
        assert_eq!(raycast(&arena, 0.0, 0.0, PI, 7.5), 7.5);
    }

    #[test]
    fn nearest_of_overlapping_segments_wins() {
        let arena = Arena::new(
            vec![
                Segment { x1: 3.0, y1: -1.0, x2: 3.0, y2: 1.0 },
                Segment { x1: 1.5, y1: -1.0, x2: 1.5, y2: 1.0 },
            ],
            None,
        );
        assert!((raycast(&arena, 0.0, 0.0, 0.0, 10.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn scan_is_mirror_symmetric() {
        // Arena symmetric about the x axis, robot on the axis facing +x:
        // beam i must equal beam n-1-i.
        let arena = Arena::new(
            vec![
                Segment { x1: 1.0, y1: 0.5, x2: 3.0, y2: 2.0 },
                Segment { x1: 1.0, y1: -0.5, x2: 3.0, y2: -2.0 },
            ],
            None,
        );
        let state = RobotState::at(0.0, 0.0, 0.0);
        let scan = LaserScan { n_beams: 21, ..LaserScan::default() };
        let ranges = scan_ranges(&arena, &state, &scan);
        for i in 0..scan.n_beams {
            let j = scan.n_beams - 1 - i;
            assert!(
                (ranges[i] - ranges[j]).abs() < 1e-9,
                "beam {i} {} vs beam {j} {}",
                ranges[i],
                ranges[j]
            );
        }
    }

    #[test]
    fn proximity_mapping_is_affine_and_invertible() {
        let max_range = 5.0;
        let ranges = vec![0.0, 1.25, 2.5, 5.0];
        let frame = scan_to_frame(&ranges, max_range, 7);
        assert_eq!(frame.values, vec![1.0, 0.5, 0.0, -1.0]);
        assert_eq!(frame.tick_index, 7);
        // Invert and recover the ranges.
        for (v, r) in frame.values.iter().zip(&ranges) {
            let back = (1.0 - v) * max_range / 2.0;
            assert!((back - r).abs() < 1e-12);
        }
    }

    #[test]
    fn collision_against_sampled_segment_oracle() {
        // Compare the analytic disc-segment test against dense sampling along
        // the segment, skipping cases within sampling resolution of the
        // boundary.
        let mut s = 0x2545F4914F6CDD1Du64;
        let mut rand = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let radius = 0.3;
        let mut checked = 0;
        for _ in 0..10_000 {
            let seg = Segment {
                x1: rand() * 4.0 - 2.0,
                y1: rand() * 4.0 - 2.0,
                x2: rand() * 4.0 - 2.0,
                y2: rand() * 4.0 - 2.0,
            };
            let px = rand() * 4.0 - 2.0;
            let py = rand() * 4.0 - 2.0;
            let exact = point_segment_distance(px, py, &seg);
            if (exact - radius).abs() < 0.01 {
                continue; // boundary band: sampling cannot resolve it
            }
            let samples = 1000;
            let mut sampled_hit = false;
            for k in 0..=samples {
                let t = k as f64 / samples as f64;
                let cx = seg.x1 + t * (seg.x2 - seg.x1);
                let cy = seg.y1 + t * (seg.y2 - seg.y1);
                if ((px - cx).powi(2) + (py - cy).powi(2)).sqrt() < radius {
                    sampled_hit = true;
                    break;
                }
            }
            let arena = Arena::new(vec![seg], Some(Bounds {
                min_x: -100.0,
                min_y: -100.0,
                max_x: 100.0,
                max_y: 100.0,
            }));
            let state = RobotState::at(px, py, 0.0);
            assert_eq!(
                collision_check(&arena, &state, radius),
                sampled_hit,
                "disc ({px}, {py}) vs {seg:?}"
            );
            checked += 1;
        }
        assert!(checked > 9000, "too many boundary skips: {checked}");
    }

    #[test]
    fn leaving_bounds_is_a_collision() {
        let arena = Arena::new(
            Vec::new(),
            Some(Bounds { min_x: -1.0, min_y: -1.0, max_x: 1.0, max_y: 1.0 }),
        );
        let inside = RobotState::at(0.0, 0.0, 0.0);
        assert!(!collision_check(&arena, &inside, 0.2));
        let near_edge = RobotState::at(0.85, 0.0, 0.0);
        assert!(collision_check(&arena, &near_edge, 0.2));
    }

    #[test]
    fn arena_parser_reads_segments_and_comments() {
        let text = "# walls\n0 0 1 0\n1 0 1 1  # east\n\n";
        let arena = Arena::parse(text, "inline").unwrap();
        assert_eq!(arena.segments.len(), 2);
        assert_eq!(arena.segments[1], Segment { x1: 1.0, y1: 0.0, x2: 1.0, y2: 1.0 });
        assert_eq!(arena.bounds, Bounds { min_x: 0.0, min_y: 0.0, max_x: 1.0, max_y: 1.0 });
    }

    #[test]
    fn arena_parser_reports_line_numbers() {
        let err = Arena::parse("0 0 1 0\n0 0 oops 1\n", "inline").unwrap_err();
        match err {
            RoboError::BadArena { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn world_steps_and_scans() {
        let arena = Arena::new(
            vec![Segment { x1: 2.0, y1: -5.0, x2: 2.0, y2: 5.0 }],
            Some(Bounds { min_x: -10.0, min_y: -10.0, max_x: 10.0, max_y: 10.0 }),
        );
        let config = RobotConfig {
            scan: LaserScan { n_beams: 3, ..LaserScan::default() },
            ..RobotConfig::default()
        };
        let mut world = RobotWorld::new(arena, config).unwrap();
        world.set_record_trace(true);
        let clock = SimClock { delta_t: 0.05, tick_index: 0 };
        let motor = ContinuousFrame { tick_index: -1, values: vec![1.0, 0.0] };
        let frame = world.step_tick(&motor, &clock).unwrap();
        assert_eq!(frame.width(), 3);
        // Forward beam (index 1): wall at 2 m minus the distance travelled.
        let travelled = 0.5 * 0.05;
        let expected = 1.0 - 2.0 * (2.0 - travelled) / 5.0;
        assert!((frame.values[1] - expected).abs() < 1e-9);
        assert_eq!(world.trace().len(), 1);
        assert!((world.path_length - travelled).abs() < 1e-12);
    }

    #[test]
    fn collision_halt_fires_when_configured() {
        let arena = Arena::new(
            vec![Segment { x1: 0.3, y1: -1.0, x2: 0.3, y2: 1.0 }],
            Some(Bounds { min_x: -10.0, min_y: -10.0, max_x: 10.0, max_y: 10.0 }),
        );
        let config = RobotConfig { stop_on_collision: true, ..RobotConfig::default() };
        let mut world = RobotWorld::new(arena, config).unwrap();
        let motor = ContinuousFrame { tick_index: -1, values: vec![1.0, 0.0] };
        let mut halted = None;
        for k in 0..100 {
            let clock = SimClock { delta_t: 0.05, tick_index: k };
            match world.step_tick(&motor, &clock) {
                Ok(_) => {}
                Err(RoboError::CollisionHalt { tick, .. }) => {
                    halted = Some(tick);
                    break;
                }
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        // Wall at 0.3 m, radius 0.15 m, 0.5 m/s: contact after ~0.3 s.
        let tick = halted.expect("expected a collision halt");
        assert!((5..=7).contains(&tick), "halted at tick {tick}");
    }

    #[test]
    fn pose_trace_csv_format() {
        let rows = vec![PoseRow {
            tick: 0,
            x: 1.5,
            y: -2.0,
            heading: 0.25,
            v: 0.5,
            omega: 0.0,
            collided: false,
        }];
        let csv = pose_trace_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "tick,x,y,heading,v,omega,collided");
        assert_eq!(lines.next().unwrap(), "0,1.5,-2,0.25,0.5,0,0");
    }
}
