//! A 2D continuous field of states and the finite-resolution conscious
//! pulse that drifts over it.
//!
//! The field discretizes a continuous scene on a grid: the x axis is
//! time-like, the y axis spans the space of states at one moment, and each
//! point carries an abstract state vector (a single hue scalar for the
//! red-to-green scene). Continuity is a checkable bound: neighboring
//! points may differ by at most `continuity_bound` in the infinity norm.
//! Classical motion of the pulse never involves branching or a stochastic
//! choice; the quantum side of a scene lives in the component graph.

use libm::exp;
use thiserror::Error;

/// One grid point of a [`PulseField`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPoint {
    /// Grid column (time-like axis).
    pub x: usize,
    /// Grid row (space-of-states axis).
    pub y: usize,
    /// Abstract scene coordinates; uniform length across a field.
    pub state_vector: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("pulse width must be positive")]
    NonPositiveWidth,
    #[error("center ({0}, {1}) lies outside the field")]
    OutOfField(f64, f64),
    #[error("column {column} out of bounds for width {width}")]
    ColumnOutOfBounds { column: usize, width: usize },
    #[error("state vectors must share one length")]
    MixedStateVectorLength,
    #[error("field must contain at least one point")]
    EmptyField,
}

/// W x H grid of field points with a continuity bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseField {
    width: usize,
    height: usize,
    /// Row-major: index `y * width + x`.
    points: Vec<FieldPoint>,
    continuity_bound: f64,
    /// Detector-stage label of a post-branch region, if this field is one
    /// of the two successors produced by [`PulseField::branch`].
    branch_label: Option<String>,
}

impl PulseField {
    /// Build a field from a per-point state function.
    pub fn from_fn(
        width: usize,
        height: usize,
        continuity_bound: f64,
        state: impl Fn(usize, usize) -> Vec<f64>,
    ) -> Result<Self, FieldError> {
        if width == 0 || height == 0 {
            return Err(FieldError::EmptyField);
        }
        let mut points = Vec::with_capacity(width * height);
        let mut dim = None;
        for y in 0..height {
            for x in 0..width {
                let v = state(x, y);
                match dim {
                    None => dim = Some(v.len()),
                    Some(d) if d != v.len() => return Err(FieldError::MixedStateVectorLength),
                    _ => {}
                }
                points.push(FieldPoint {
                    x,
                    y,
                    state_vector: v,
                });
            }
        }
        Ok(Self {
            width,
            height,
            points,
            continuity_bound,
            branch_label: None,
        })
    }

    /// The red-to-green scene: a single hue scalar ramping linearly along
    /// x, constant along y. Every horizontal neighbor differs by exactly
    /// the continuity bound `2 / width`.
    pub fn hue_ramp(width: usize, height: usize) -> Self {
        let step = 2.0 / width as f64;
        Self::from_fn(width, height, step, |x, _| vec![x as f64 * step])
            .expect("ramp construction cannot fail for positive dimensions")
    }

    /// A featureless scene: every point carries the same value.
    pub fn uniform(
        width: usize,
        height: usize,
        value: f64,
        continuity_bound: f64,
    ) -> Result<Self, FieldError> {
        Self::from_fn(width, height, continuity_bound, |_, _| vec![value])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn continuity_bound(&self) -> f64 {
        self.continuity_bound
    }

    pub fn branch_label(&self) -> Option<&str> {
        self.branch_label.as_deref()
    }

    pub fn point(&self, x: usize, y: usize) -> Option<&FieldPoint> {
        if x < self.width && y < self.height {
            self.points.get(y * self.width + x)
        } else {
            None
        }
    }

    pub fn points(&self) -> &[FieldPoint] {
        &self.points
    }

    fn in_bounds(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// List every 4-neighbor pair whose state vectors differ by more than
    /// the continuity bound (infinity norm). Empty iff the field is
    /// continuous in the discretized sense.
    pub fn continuity_check(&self) -> Vec<((usize, usize), (usize, usize))> {
        let mut violations = Vec::new();
        let diff_exceeds = |a: &FieldPoint, b: &FieldPoint| {
            a.state_vector
                .iter()
                .zip(&b.state_vector)
                .any(|(u, v)| (u - v).abs() > self.continuity_bound)
        };
        for y in 0..self.height {
            for x in 0..self.width {
                let p = self.point(x, y).unwrap();
                if x + 1 < self.width {
                    let q = self.point(x + 1, y).unwrap();
                    if diff_exceeds(p, q) {
                        violations.push(((x, y), (x + 1, y)));
                    }
                }
                if y + 1 < self.height {
                    let q = self.point(x, y + 1).unwrap();
                    if diff_exceeds(p, q) {
                        violations.push(((x, y), (x, y + 1)));
                    }
                }
            }
        }
        violations
    }

    /// Split the scene at `column` into the two post-observation ready
    /// regions. The left successor covers columns `0..=column` and carries
    /// `left_label`; the right successor covers `column..width`
    /// (re-indexed from zero) and carries `right_label`. Both share the
    /// branch column itself. Rendering aid only: the dynamics of a branch
    /// live in the component graph.
    pub fn branch(
        &self,
        column: usize,
        left_label: &str,
        right_label: &str,
    ) -> Result<(PulseField, PulseField), FieldError> {
        if column >= self.width {
            return Err(FieldError::ColumnOutOfBounds {
                column,
                width: self.width,
            });
        }
        let slice = |x0: usize, x1: usize, label: &str| {
            let width = x1 - x0;
            let mut points = Vec::with_capacity(width * self.height);
            for y in 0..self.height {
                for x in x0..x1 {
                    let src = &self.points[y * self.width + x];
                    points.push(FieldPoint {
                        x: x - x0,
                        y,
                        state_vector: src.state_vector.clone(),
                    });
                }
            }
            PulseField {
                width,
                height: self.height,
                points,
                continuity_bound: self.continuity_bound,
                branch_label: Some(label.to_string()),
            }
        };
        let left = slice(0, column + 1, left_label);
        let right = slice(column, self.width, right_label);
        Ok((left, right))
    }

    /// Plain-text grid dump for external plotting: one row per line, state
    /// vector components comma-separated across the row.
    pub fn export_grid(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width)
                .flat_map(|x| {
                    self.points[y * self.width + x]
                        .state_vector
                        .iter()
                        .map(|v| format!("{v}"))
                        .collect::<Vec<_>>()
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Finite-resolution window of experienced states, drifting over a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsciousPulse {
    center: (f64, f64),
    width: f64,
    /// `(t, center)` samples; the last entry is the current position.
    trajectory: Vec<(f64, (f64, f64))>,
}

impl ConsciousPulse {
    /// Place a pulse of resolution width `sigma` at `center` (grid units).
    pub fn new(field: &PulseField, center: (f64, f64), sigma: f64) -> Result<Self, FieldError> {
        if sigma <= 0.0 {
            return Err(FieldError::NonPositiveWidth);
        }
        if !field.in_bounds(center.0, center.1) {
            return Err(FieldError::OutOfField(center.0, center.1));
        }
        Ok(Self {
            center,
            width: sigma,
            trajectory: vec![(0.0, center)],
        })
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.width
    }

    pub fn time(&self) -> f64 {
        self.trajectory.last().map(|&(t, _)| t).unwrap_or(0.0)
    }

    pub fn trajectory(&self) -> &[(f64, (f64, f64))] {
        &self.trajectory
    }

    /// Advance the center by `velocity * dt` and record the sample.
    /// Classical motion: no status machinery, no trigger.
    pub fn drift(
        &mut self,
        field: &PulseField,
        velocity: (f64, f64),
        dt: f64,
    ) -> Result<(), FieldError> {
        let next = (
            self.center.0 + velocity.0 * dt,
            self.center.1 + velocity.1 * dt,
        );
        if !field.in_bounds(next.0, next.1) {
            return Err(FieldError::OutOfField(next.0, next.1));
        }
        self.center = next;
        let t = self.time() + dt;
        self.trajectory.push((t, next));
        Ok(())
    }

    /// Grid points within radius `3 sigma` of the center, with Gaussian
    /// weights `exp(-d^2 / (2 sigma^2))` normalized to sum 1. In the
    /// delta limit (no point inside the radius) the nearest point carries
    /// the full weight.
    pub fn window<'f>(&self, field: &'f PulseField) -> Vec<(&'f FieldPoint, f64)> {
        let (cx, cy) = self.center;
        let radius = 3.0 * self.width;
        let r2 = radius * radius;

        let x_lo = ((cx - radius).ceil().max(0.0)) as usize;
        let x_hi = ((cx + radius).floor().min((field.width - 1) as f64)) as usize;
        let y_lo = ((cy - radius).ceil().max(0.0)) as usize;
        let y_hi = ((cy + radius).floor().min((field.height - 1) as f64)) as usize;

        let mut picks: Vec<(&FieldPoint, f64)> = Vec::new();
        let mut total = 0.0;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let d2 = dx * dx + dy * dy;
                if d2 <= r2 {
                    let w = exp(-d2 / (2.0 * self.width * self.width));
                    picks.push((field.point(x, y).unwrap(), w));
                    total += w;
                }
            }
        }

        if picks.is_empty() || total <= 0.0 {
            let nearest = field
                .points()
                .iter()
                .min_by(|a, b| {
                    let da = (a.x as f64 - cx).powi(2) + (a.y as f64 - cy).powi(2);
                    let db = (b.x as f64 - cx).powi(2) + (b.y as f64 - cy).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .expect("field is never empty");
            return vec![(nearest, 1.0)];
        }
        for (_, w) in &mut picks {
            *w /= total;
        }
        picks
    }
}
