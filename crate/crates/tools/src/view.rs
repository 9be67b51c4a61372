use serde::{Deserialize, Serialize};

use pcrecon_core::{Point3, Ray, Vec3};

use crate::error::{Error, Result};

pub const SYNTHETIC_DISTANCE: f64 = 2.0;

/// Pinhole camera. Pixel coordinates run right and down from the top-left
/// corner of the viewport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewPose {
    pub eye: Point3,
    pub forward: Vec3,
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub viewport: [u32; 2],
}

impl ViewPose {
    /// Normalizes `forward` and makes `up` orthogonal to it.
    pub fn new(eye: Point3, forward: Vec3, up: Vec3, fov_y: f64, viewport: [u32; 2]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidView(m.to_string());
        if !(eye.is_finite() && forward.is_finite() && up.is_finite()) {
            return Err(bad("non-finite pose"));
        }
        if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
            return Err(bad("field of view must be in (0, pi)"));
        }
        if viewport[0] == 0 || viewport[1] == 0 {
            return Err(bad("empty viewport"));
        }
        let forward = forward.try_normalize().ok_or_else(|| bad("zero forward"))?;
        let up = (up - forward * forward.dot(up))
            .try_normalize()
            .ok_or_else(|| bad("up is parallel to forward"))?;
        Ok(Self {
            eye,
            forward,
            up,
            fov_y,
            viewport,
        })
    }

    /// Default camera for headless use: `SYNTHETIC_DISTANCE` from `target`
    /// along (1, 1, 1), 60 degree field of view, 1280 x 720.
    pub fn synthetic(target: Point3) -> Result<Self> {
        let eye = target + Vec3::splat(1.0).normalize() * SYNTHETIC_DISTANCE;
        Self::look_at(eye, target, Vec3::Z, 60f64.to_radians(), [1280, 720])
    }

    pub fn look_at(eye: Point3, target: Point3, up: Vec3, fov_y: f64, viewport: [u32; 2]) -> Result<Self> {
        Self::new(eye, target - eye, up, fov_y, viewport)
    }

    pub fn right(&self) -> Vec3 {
        self.forward.cross(self.up)
    }

    pub fn aspect(&self) -> f64 {
        self.viewport[0] as f64 / self.viewport[1] as f64
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.viewport[1] as f64 / (0.5 * self.fov_y).tan()
    }

    /// Distance of `p` in front of the eye along the view axis.
    pub fn depth(&self, p: Point3) -> f64 {
        (p - self.eye).dot(self.forward)
    }

    pub fn project(&self, p: Point3) -> Option<[f64; 2]> {
        let d = p - self.eye;
        let z = d.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        let f = self.focal_px() / z;
        Some([
            0.5 * self.viewport[0] as f64 + f * d.dot(self.right()),
            0.5 * self.viewport[1] as f64 - f * d.dot(self.up),
        ])
    }

    /// Ray from the eye through a pixel position.
    pub fn ray(&self, px: [f64; 2]) -> Ray {
        let f = self.focal_px();
        let x = (px[0] - 0.5 * self.viewport[0] as f64) / f;
        let y = (0.5 * self.viewport[1] as f64 - px[1]) / f;
        Ray::new(self.eye, self.forward + self.right() * x + self.up * y)
    }

    /// World-space width of the viewport at the given depth.
    pub fn world_width_at(&self, depth: f64) -> f64 {
        2.0 * depth * (0.5 * self.fov_y).tan() * self.aspect()
    }

    /// World-space size of one pixel at the given depth.
    pub fn pixel_size_at(&self, depth: f64) -> f64 {
        depth / self.focal_px()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_inverts_ray() {
        let v = ViewPose::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.3, -1.0, 0.1), Vec3::Z, 1.0, [640, 480]).unwrap();
        let px = [100.0, 400.0];
        let p = v.ray(px).at(7.0);
        let q = v.project(p).unwrap();
        assert!((q[0] - px[0]).abs() < 1e-9 && (q[1] - px[1]).abs() < 1e-9);
        assert!(v.forward.dot(v.up).abs() < 1e-12);
    }
}
