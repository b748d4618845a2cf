//! Schematic frame rendering: agents rasterized as discs over a
//! parameterized background, with Gaussian image degradation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::labeling::{project_point, AgentSnapshot, CameraModel, Projected, ProjectionKind};
use glam::DVec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackgroundStyle {
    Flat,
    Grid,
    Checker,
}

impl std::str::FromStr for BackgroundStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(BackgroundStyle::Flat),
            "grid" => Ok(BackgroundStyle::Grid),
            "checker" => Ok(BackgroundStyle::Checker),
            _ => Err(format!("unknown background style {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub background: BackgroundStyle,
    /// Base luminance in [0, 1]; the light-condition axis.
    pub base_luminance: f64,
    pub agent_shade: f64,
    /// Gaussian noise standard deviation in gray levels.
    pub noise_std: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            background: BackgroundStyle::Flat,
            base_luminance: 0.6,
            agent_shade: 0.15,
            noise_std: 0.0,
        }
    }
}

/// Row-major 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }
}

const TILE: u32 = 32;

fn shade_to_u8(level: f64) -> u8 {
    (level.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn background_pixel(style: BackgroundStyle, lum: f64, x: u32, y: u32) -> u8 {
    match style {
        BackgroundStyle::Flat => shade_to_u8(lum),
        BackgroundStyle::Grid => {
            if x % TILE == 0 || y % TILE == 0 {
                shade_to_u8(lum * 0.7)
            } else {
                shade_to_u8(lum)
            }
        }
        BackgroundStyle::Checker => {
            if (x / TILE + y / TILE) % 2 == 0 {
                shade_to_u8(lum)
            } else {
                shade_to_u8(lum * 0.75)
            }
        }
    }
}

/// Draws the frame: background first, then visible agents back-to-front as
/// filled discs at their projected head points.
pub fn rasterize(agents: &[AgentSnapshot], cam: &CameraModel, settings: &RenderSettings) -> Frame {
    let (w, h) = (cam.image_width, cam.image_height);
    let mut pixels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            pixels.push(background_pixel(
                settings.background,
                settings.base_luminance,
                x,
                y,
            ));
        }
    }
    let mut frame = Frame {
        width: w,
        height: h,
        pixels,
    };

    // Projected disc per agent: center, pixel radius, depth.
    let mut discs: Vec<(f64, f64, f64, f64)> = agents
        .iter()
        .filter_map(|a| {
            let head = DVec3::new(a.position.x, a.position.y, crate::labeling::HEAD_HEIGHT);
            match project_point(head, cam) {
                Projected::Point { u, v, depth } => {
                    let r_px = match cam.projection {
                        ProjectionKind::Perspective => cam.focal_px * a.radius / depth,
                        ProjectionKind::Orthographic => cam.ortho_scale * a.radius,
                    };
                    Some((u, v, r_px, depth))
                }
                Projected::Behind => None,
            }
        })
        .collect();
    discs.sort_by(|a, b| b.3.total_cmp(&a.3)); // back to front

    let shade = shade_to_u8(settings.agent_shade);
    for (u, v, r, _) in discs {
        let x0 = ((u - r).floor().max(0.0)) as u32;
        let x1 = ((u + r).ceil().min(w as f64 - 1.0)).max(0.0) as u32;
        let y0 = ((v - r).floor().max(0.0)) as u32;
        let y1 = ((v + r).ceil().min(h as f64 - 1.0)).max(0.0) as u32;
        if u + r < 0.0 || v + r < 0.0 {
            continue;
        }
        for y in y0..=y1.min(h - 1) {
            for x in x0..=x1.min(w - 1) {
                let dx = x as f64 + 0.5 - u;
                let dy = y as f64 + 0.5 - v;
                if dx * dx + dy * dy <= r * r {
                    frame.pixels[(y * w + x) as usize] = shade;
                }
            }
        }
    }
    frame
}

/// Independent zero-mean Gaussian perturbation per pixel, rounded
/// half-to-even and clamped to [0, 255].
pub fn add_gaussian_noise<R: Rng>(frame: &Frame, std: f64, rng: &mut R) -> Frame {
    assert!(std >= 0.0);
    if std == 0.0 {
        return frame.clone();
    }
    let normal = Normal::new(0.0, std).expect("valid std");
    let pixels = frame
        .pixels
        .iter()
        .map(|&p| {
            let v = f64::from(p) + normal.sample(rng);
            v.round_ties_even().clamp(0.0, 255.0) as u8
        })
        .collect();
    Frame {
        width: frame.width,
        height: frame.height,
        pixels,
    }
}

/// Binary portable graymap encoding, maximum gray value 255.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::DVec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam(w: u32, h: u32) -> CameraModel {
        CameraModel {
            position: DVec3::new(-10.0, 0.0, crate::labeling::HEAD_HEIGHT),
            yaw: 0.0,
            pitch: 0.0,
            focal_px: 200.0,
            image_width: w,
            image_height: h,
            projection: ProjectionKind::Perspective,
            ortho_scale: 1.0,
        }
    }

    #[test]
    fn flat_background_constant_fill() {
        let settings = RenderSettings {
            base_luminance: 0.5,
            ..Default::default()
        };
        let frame = rasterize(&[], &cam(64, 64), &settings);
        assert!(frame.pixels.iter().all(|&p| p == 128));
    }

    #[test]
    fn center_agent_covers_center_pixel() {
        let settings = RenderSettings::default();
        let c = cam(200, 200);
        // Head at the optical axis: projects to the image center.
        let agents = [AgentSnapshot {
            id: 0,
            position: DVec2::new(2.0, 0.0),
            radius: 0.4,
        }];
        let frame = rasterize(&agents, &c, &settings);
        assert_eq!(frame.get(100, 100), shade_to_u8(settings.agent_shade));
    }

    #[test]
    fn rasterize_is_deterministic_and_local() {
        let settings = RenderSettings::default();
        let c = cam(128, 128);
        let agents = [
            AgentSnapshot {
                id: 0,
                position: DVec2::new(3.0, 0.5),
                radius: 0.4,
            },
            AgentSnapshot {
                id: 1,
                position: DVec2::new(6.0, -1.0),
                radius: 0.3,
            },
        ];
        let f1 = rasterize(&agents, &c, &settings);
        let f2 = rasterize(&agents, &c, &settings);
        assert_eq!(f1, f2);

        // Pixels outside all discs match the pure background.
        let bg = rasterize(&[], &c, &settings);
        let agent_px = shade_to_u8(settings.agent_shade);
        for (a, b) in f1.pixels.iter().zip(&bg.pixels) {
            if *a != agent_px {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let settings = RenderSettings::default();
        let frame = rasterize(&[], &cam(64, 64), &settings);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(add_gaussian_noise(&frame, 0.0, &mut rng), frame);
    }

    #[test]
    fn noise_statistics() {
        let frame = Frame {
            width: 1000,
            height: 1000,
            pixels: vec![128; 1_000_000],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy = add_gaussian_noise(&frame, 10.0, &mut rng);
        let n = noisy.pixels.len() as f64;
        let mean: f64 = noisy.pixels.iter().map(|&p| f64::from(p)).sum::<f64>() / n;
        let var: f64 = noisy
            .pixels
            .iter()
            .map(|&p| (f64::from(p) - mean).powi(2))
            .sum::<f64>()
            / n;
        assert!((mean - 128.0).abs() < 0.1, "mean {mean}");
        assert!((var.sqrt() - 10.0).abs() < 0.2, "std {}", var.sqrt());
    }

    #[test]
    fn clamping_on_dark_frame() {
        let frame = Frame {
            width: 100,
            height: 100,
            pixels: vec![0; 10_000],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy = add_gaussian_noise(&frame, 10.0, &mut rng);
        let mean: f64 =
            noisy.pixels.iter().map(|&p| f64::from(p)).sum::<f64>() / noisy.pixels.len() as f64;
        assert!(mean > 0.0);
    }

    #[test]
    fn different_seeds_differ() {
        let settings = RenderSettings::default();
        let frame = rasterize(&[], &cam(64, 64), &settings);
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let n1 = add_gaussian_noise(&frame, 10.0, &mut r1);
        let n2 = add_gaussian_noise(&frame, 10.0, &mut r2);
        assert_ne!(n1, n2);
    }

    #[test]
    fn pgm_encoding() {
        let frame = Frame {
            width: 3,
            height: 2,
            pixels: vec![0, 64, 128, 192, 255, 7],
        };
        let bytes = encode_pgm(&frame);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 64, 128, 192, 255, 7]);
    }
}
