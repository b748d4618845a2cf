//! Browser demo: drives the simulator and renderer from a static page.
//!
//! `DemoSim` is plain Rust so it builds and tests on any target; the
//! `#[wasm_bindgen]` wrapper at the bottom only exists on wasm32.

use crowdgen::behavior::BehaviorClass;
use crowdgen::dataset::{default_camera, instantiate, splitmix64, ScenarioSpec};
use crowdgen::labeling::{AgentSnapshot, CameraModel};
use crowdgen::render::{add_gaussian_noise, rasterize, BackgroundStyle, RenderSettings};
use crowdgen::sim::World;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct DemoSim {
    world: World,
    camera: CameraModel,
    settings: RenderSettings,
    dt: f64,
    seed: u64,
    frame_index: u64,
}

impl DemoSim {
    /// Builds a fresh scene in the open environment. `class` is one of the
    /// six behavior class names, lower case.
    pub fn new(class: &str, count: u32, seed: u64) -> Result<DemoSim, String> {
        let behavior_class: BehaviorClass = class.parse().map_err(|_| {
            format!("unknown behavior class: {class}")
        })?;
        let spec = ScenarioSpec {
            background: BackgroundStyle::Checker,
            behavior_class,
            camera: default_camera(),
            density: 0.3,
            environment: "open".to_string(),
            light: 0.6,
            pedestrian_count: count.clamp(1, 60),
            // The demo steps interactively, so the batch duration is moot;
            // validate() just needs it positive.
            duration: 1,
            dt: 0.1,
            seed,
            noise_std: 0.0,
            agent_shade: 0.15,
            class_margin: 0.1,
        };
        spec.validate().map_err(|e| e.to_string())?;
        let world = instantiate(&spec).map_err(|e| e.to_string())?;
        Ok(DemoSim {
            world,
            camera: spec.camera,
            settings: RenderSettings {
                background: spec.background,
                base_luminance: spec.light,
                agent_shade: spec.agent_shade,
                noise_std: 0.0,
            },
            dt: spec.dt,
            seed,
            frame_index: 0,
        })
    }

    pub fn width(&self) -> u32 {
        self.camera.image_width
    }

    pub fn height(&self) -> u32 {
        self.camera.image_height
    }

    pub fn agent_count(&self) -> u32 {
        self.world.agents.len() as u32
    }

    pub fn set_light(&mut self, light: f64) {
        self.settings.base_luminance = light.clamp(0.0, 1.0);
    }

    pub fn set_noise(&mut self, std: f64) {
        self.settings.noise_std = std.clamp(0.0, 64.0);
    }

    /// Advances the simulation by `steps` ticks.
    pub fn step(&mut self, steps: u32) {
        for _ in 0..steps {
            self.world.step(self.dt);
            self.frame_index += 1;
        }
    }

    /// Renders the current state to one grayscale byte per pixel, row
    /// major. Noise is seeded per frame the same way the dataset writer
    /// seeds it, so a paused frame re-renders identically.
    pub fn render(&self) -> Vec<u8> {
        let snaps: Vec<AgentSnapshot> = self
            .world
            .agents
            .iter()
            .map(|a| AgentSnapshot {
                id: a.id,
                position: a.position,
                radius: a.params.radius,
            })
            .collect();
        let frame = rasterize(&snaps, &self.camera, &self.settings);
        if self.settings.noise_std > 0.0 {
            let mut rng =
                ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ self.frame_index));
            add_gaussian_noise(&frame, self.settings.noise_std, &mut rng).pixels
        } else {
            frame.pixels
        }
    }

    /// Agent positions interleaved as [x0, y0, x1, y1, ...] in world
    /// meters, for the overlay readout.
    pub fn positions(&self) -> Vec<f64> {
        self.world
            .agents
            .iter()
            .flat_map(|a| [a.position.x, a.position.y])
            .collect()
    }
}

#[cfg(target_arch = "wasm32")]
mod wasm {
    use super::DemoSim;
    use wasm_bindgen::prelude::*;

    #[wasm_bindgen]
    pub struct Demo {
        inner: DemoSim,
    }

    #[wasm_bindgen]
    impl Demo {
        #[wasm_bindgen(constructor)]
        pub fn new(class: &str, count: u32, seed: u64) -> Result<Demo, JsError> {
            DemoSim::new(class, count, seed)
                .map(|inner| Demo { inner })
                .map_err(|e| JsError::new(&e))
        }

        pub fn width(&self) -> u32 {
            self.inner.width()
        }

        pub fn height(&self) -> u32 {
            self.inner.height()
        }

        pub fn agent_count(&self) -> u32 {
            self.inner.agent_count()
        }

        pub fn set_light(&mut self, light: f64) {
            self.inner.set_light(light);
        }

        pub fn set_noise(&mut self, std: f64) {
            self.inner.set_noise(std);
        }

        pub fn step(&mut self, steps: u32) {
            self.inner.step(steps);
        }

        /// Grayscale frame expanded to RGBA for `ImageData`.
        pub fn render_rgba(&self) -> Vec<u8> {
            let gray = self.inner.render();
            let mut rgba = Vec::with_capacity(gray.len() * 4);
            for g in gray {
                rgba.extend_from_slice(&[g, g, g, 255]);
            }
            rgba
        }
    }
}
