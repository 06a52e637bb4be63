use crate::error::{Error, Result};

/// 8-bit sRGB triple.
pub type Rgb = [u8; 3];

/// Colour of undefined cells.
pub const NULL_GRAY: Rgb = [128, 128, 128];

/// Piecewise-linear colormap over `[vmin, vmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorMap {
    control_points: Vec<(f64, [f64; 3])>,
    vmin: f64,
    vmax: f64,
    null_color: Rgb,
}

impl ColorMap {
    /// Control-point positions must increase strictly from 0 to 1; channels lie in [0, 1].
    pub fn new(control_points: Vec<(f64, [f64; 3])>, vmin: f64, vmax: f64, null_color: Rgb) -> Result<Self> {
        if control_points.len() < 2 {
            return Err(Error::InvalidParameter("colormap needs at least two control points".into()));
        }
        if control_points.first().unwrap().0 != 0.0 || control_points.last().unwrap().0 != 1.0 {
            return Err(Error::InvalidParameter("colormap positions must start at 0 and end at 1".into()));
        }
        if control_points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("colormap positions must increase strictly".into()));
        }
        if control_points.iter().flat_map(|p| p.1).any(|c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidParameter("colormap channels must lie in [0, 1]".into()));
        }
        if vmin.partial_cmp(&vmax) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidParameter(format!("colormap domain [{vmin}, {vmax}] is empty")));
        }
        Ok(ColorMap { control_points, vmin, vmax, null_color })
    }

    /// Blue, white, red over [-1, 1].
    pub fn correlation() -> Self {
        Self::blue_white_red(1.0)
    }

    /// Blue, white, red over `[-bound, bound]`, for signed differences.
    pub fn signed(bound: f64) -> Self {
        Self::blue_white_red(positive_or_one(bound))
    }

    fn blue_white_red(bound: f64) -> Self {
        let points = vec![(0.0, [0.0, 0.0, 1.0]), (0.5, [1.0, 1.0, 1.0]), (1.0, [1.0, 0.0, 0.0])];
        Self::new(points, -bound, bound, NULL_GRAY).expect("valid built-in map")
    }

    /// White to dark green over `[0, vmax]`, for absolute differences.
    pub fn difference(vmax: f64) -> Self {
        let points = vec![(0.0, [1.0, 1.0, 1.0]), (1.0, [0.0, 0.5, 0.0])];
        Self::new(points, 0.0, positive_or_one(vmax), NULL_GRAY).expect("valid built-in map")
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.vmin, self.vmax)
    }

    pub fn null_color(&self) -> Rgb {
        self.null_color
    }

    pub fn control_points(&self) -> &[(f64, [f64; 3])] {
        &self.control_points
    }

    /// Colour of `v`; `None` is the null sentinel.
    pub fn map(&self, v: Option<f64>) -> Rgb {
        let Some(v) = v else { return self.null_color };
        let t = ((v - self.vmin) / (self.vmax - self.vmin)).clamp(0.0, 1.0);
        let seg = self
            .control_points
            .windows(2)
            .find(|w| t <= w[1].0)
            .unwrap_or_else(|| &self.control_points[self.control_points.len() - 2..]);
        let (p0, c0) = seg[0];
        let (p1, c1) = seg[1];
        let local = (t - p0) / (p1 - p0);
        let mut out = [0u8; 3];
        for k in 0..3 {
            let c = c0[k] + (c1[k] - c0[k]) * local;
            out[k] = to_byte(c);
        }
        out
    }
}

/// Round half up onto 0..=255.
fn to_byte(c: f64) -> u8 {
    (c * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn positive_or_one(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        v
    } else {
        1.0
    }
}

pub fn map_color(v: Option<f64>, cmap: &ColorMap) -> Rgb {
    cmap.map(v)
}

pub fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}
