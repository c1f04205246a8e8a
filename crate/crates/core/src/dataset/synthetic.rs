//! Synthetic corpus generator. Vehicles are bright bodies (daytime) or
//! headlight pairs (night) on a dark road; background patches are noise
//! textures, smooth gradients or thin-line clutter.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::types::{
    AnnotatedFrame, AnnotationKind, CameraFlags, ClassLabel, ConditionTags, Dataset,
    DetectionZone, ImagePatch, Precipitation, RoadCondition, TimeOfDay,
};
use super::DatasetError;

/// Appearance family of generated vehicle patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Archetype {
    /// Bright rectangle on a dark background.
    BrightBody,
    /// Two small bright spots low in the patch on a very dark background.
    Headlights,
}

impl Archetype {
    fn time_of_day(self) -> TimeOfDay {
        match self {
            Archetype::BrightBody => TimeOfDay::Day,
            Archetype::Headlights => TimeOfDay::Night,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_pos: usize,
    pub n_neg: usize,
    pub patch_size: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub n_videos: usize,
    /// Vehicle archetypes, assigned to positives round-robin.
    pub archetypes: Vec<Archetype>,
    pub id_prefix: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_pos: 100,
            n_neg: 100,
            patch_size: 24,
            noise_level: 0.1,
            seed: 0,
            n_videos: 10,
            archetypes: vec![Archetype::BrightBody],
            id_prefix: "f".to_string(),
        }
    }
}

/// One record of the generator's emission log.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub frame_id: String,
    pub label: ClassLabel,
    pub archetype: Option<Archetype>,
    /// Bright body rectangle `(x0, y0, w, h)` for `BrightBody` vehicles.
    pub body: Option<(usize, usize, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub emissions: Vec<Emission>,
}

pub const SYNTHETIC_ZONE: &str = "z0";

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

struct Canvas {
    size: usize,
    px: Vec<f64>,
}

impl Canvas {
    fn new(size: usize, value: f64) -> Self {
        Self {
            size,
            px: vec![value; size * size],
        }
    }

    fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, value: f64) {
        for y in y0..(y0 + h).min(self.size) {
            for x in x0..(x0 + w).min(self.size) {
                self.px[y * self.size + x] = value;
            }
        }
    }

    fn finish(mut self, rng: &mut ChaCha8Rng, noise: f64) -> ImagePatch {
        for p in &mut self.px {
            if noise > 0.0 {
                *p += rng.gen_range(-noise..=noise);
            }
            *p = quantize(*p);
        }
        ImagePatch::new(self.size, self.size, self.px).expect("generator emits valid patches")
    }
}

fn span(rng: &mut ChaCha8Rng, size: usize, lo: f64, hi: f64) -> usize {
    let v = rng.gen_range(lo..=hi) * size as f64;
    (v.round() as usize).clamp(1, size)
}

fn bright_body(
    rng: &mut ChaCha8Rng,
    size: usize,
    noise: f64,
) -> (ImagePatch, (usize, usize, usize, usize)) {
    let bg = rng.gen_range(0.10..=0.25);
    let fg = rng.gen_range(0.75..=0.90);
    let w = span(rng, size, 0.45, 0.65).min(size - 2);
    let h = span(rng, size, 0.35, 0.55).min(size - 2);
    let jitter = ((size as f64) * 0.1).round() as i64;
    let cx = (size as i64 - w as i64) / 2 + rng.gen_range(-jitter..=jitter);
    let cy = (size as i64 - h as i64) / 2 + rng.gen_range(-jitter..=jitter);
    // keep at least one background pixel on every side
    let x0 = cx.clamp(1, (size - w - 1) as i64) as usize;
    let y0 = cy.clamp(1, (size - h - 1) as i64) as usize;
    let mut canvas = Canvas::new(size, bg);
    canvas.fill_rect(x0, y0, w, h, fg);
    (canvas.finish(rng, noise), (x0, y0, w, h))
}

fn headlights(rng: &mut ChaCha8Rng, size: usize, noise: f64) -> ImagePatch {
    let bg = rng.gen_range(0.03..=0.12);
    let fg = rng.gen_range(0.85..=1.0);
    let spot = span(rng, size, 0.12, 0.18).max(1);
    let jitter = ((size as f64) * 0.05).round() as i64;
    let y = ((size as f64 * 0.6) as i64 + rng.gen_range(-jitter..=jitter))
        .clamp(0, (size - spot) as i64) as usize;
    let left = ((size as f64 * 0.25) as i64 + rng.gen_range(-jitter..=jitter))
        .clamp(0, (size - spot) as i64) as usize;
    let right = ((size as f64 * 0.75) as i64 - spot as i64 + rng.gen_range(-jitter..=jitter))
        .clamp(0, (size - spot) as i64) as usize;
    let mut canvas = Canvas::new(size, bg);
    canvas.fill_rect(left, y, spot, spot, fg);
    canvas.fill_rect(right, y, spot, spot, fg);
    canvas.finish(rng, noise)
}

fn background(rng: &mut ChaCha8Rng, size: usize, noise: f64, variant: usize) -> ImagePatch {
    match variant % 3 {
        0 => {
            let base = rng.gen_range(0.25..=0.75);
            let amp = 0.2;
            let mut canvas = Canvas::new(size, base);
            for p in &mut canvas.px {
                *p += rng.gen_range(-amp..=amp);
            }
            canvas.finish(rng, noise)
        }
        1 => {
            let a = rng.gen_range(0.05..=0.5);
            let b = rng.gen_range(0.5..=0.95);
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (dx, dy) = (angle.cos(), angle.sin());
            let half = (size as f64 - 1.0) / 2.0;
            let reach = half * (dx.abs() + dy.abs()).max(1e-9);
            let mut canvas = Canvas::new(size, 0.0);
            for y in 0..size {
                for x in 0..size {
                    let t = ((x as f64 - half) * dx + (y as f64 - half) * dy) / reach;
                    canvas.px[y * size + x] = a + (b - a) * (t + 1.0) / 2.0;
                }
            }
            canvas.finish(rng, noise)
        }
        _ => {
            let base = rng.gen_range(0.2..=0.6);
            let mut canvas = Canvas::new(size, base);
            let lines = rng.gen_range(1..=3);
            for _ in 0..lines {
                let value = rng.gen_range(0.0..=1.0);
                let at = rng.gen_range(0..size);
                if rng.gen_bool(0.5) {
                    canvas.fill_rect(0, at, size, 1, value);
                } else {
                    canvas.fill_rect(at, 0, 1, size, value);
                }
            }
            canvas.finish(rng, noise)
        }
    }
}

fn video_tags(video: usize) -> ConditionTags {
    ConditionTags {
        time_of_day: if video.is_multiple_of(2) {
            TimeOfDay::Day
        } else {
            TimeOfDay::Night
        },
        precipitation: [Precipitation::None, Precipitation::LightRain, Precipitation::Snow]
            [video % 3],
        road: [RoadCondition::Clean, RoadCondition::Wet, RoadCondition::SnowCovered][video % 3],
        camera: CameraFlags {
            glare: video % 4 == 3,
            ..CameraFlags::default()
        },
    }
}

pub fn synthetic_zone() -> DetectionZone {
    DetectionZone::new(
        SYNTHETIC_ZONE,
        vec![(0.0, 0.0), (100.0, 0.0), (100.0, 60.0), (0.0, 60.0)],
        (0, 1),
        (2, 3),
    )
    .expect("static zone is valid")
}

/// Generates `n_pos` vehicle patches followed by `n_neg` background patches.
/// Deterministic for a fixed configuration; intensities are quantized to 8 bits
/// so a saved and reloaded corpus compares equal.
pub fn generate_synthetic_corpus(cfg: &SyntheticConfig) -> Result<SyntheticCorpus, DatasetError> {
    if cfg.patch_size < 4 {
        return Err(DatasetError::InvalidArgument(format!(
            "patch_size must be at least 4, got {}",
            cfg.patch_size
        )));
    }
    if !(0.0..=0.5).contains(&cfg.noise_level) {
        return Err(DatasetError::InvalidArgument(format!(
            "noise_level must be in [0, 0.5], got {}",
            cfg.noise_level
        )));
    }
    if cfg.archetypes.is_empty() || cfg.n_videos == 0 {
        return Err(DatasetError::InvalidArgument(
            "need at least one archetype and one video".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = cfg.patch_size;
    let total = cfg.n_pos + cfg.n_neg;
    let mut frames = Vec::with_capacity(total);
    let mut emissions = Vec::with_capacity(total);

    for i in 0..total {
        let frame_id = format!("{}{:05}", cfg.id_prefix, i);
        let video = i % cfg.n_videos;
        let mut tags = video_tags(video);
        let (patch, label, archetype, body) = if i < cfg.n_pos {
            let archetype = cfg.archetypes[i % cfg.archetypes.len()];
            tags.time_of_day = archetype.time_of_day();
            match archetype {
                Archetype::BrightBody => {
                    let (patch, body) = bright_body(&mut rng, size, cfg.noise_level);
                    (patch, ClassLabel::Vehicle, Some(archetype), Some(body))
                }
                Archetype::Headlights => (
                    headlights(&mut rng, size, cfg.noise_level),
                    ClassLabel::Vehicle,
                    Some(archetype),
                    None,
                ),
            }
        } else {
            (
                background(&mut rng, size, cfg.noise_level, i - cfg.n_pos),
                ClassLabel::NonVehicle,
                None,
                None,
            )
        };
        emissions.push(Emission {
            frame_id: frame_id.clone(),
            label,
            archetype,
            body,
        });
        frames.push(AnnotatedFrame {
            frame_id,
            video_id: format!("{}v{:02}", cfg.id_prefix, video),
            zone_id: SYNTHETIC_ZONE.to_string(),
            patch,
            label,
            annotation_kind: AnnotationKind::Localization,
            tags,
        });
    }

    let zones = if frames.is_empty() {
        BTreeMap::new()
    } else {
        BTreeMap::from([(SYNTHETIC_ZONE.to_string(), synthetic_zone())])
    };
    let dataset = Dataset::new(
        frames,
        zones,
        format!(
            "synthetic corpus seed={} n_pos={} n_neg={} patch_size={} noise_level={}",
            cfg.seed, cfg.n_pos, cfg.n_neg, cfg.patch_size, cfg.noise_level
        ),
    )?;
    Ok(SyntheticCorpus { dataset, emissions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_empty_dataset() {
        let c = generate_synthetic_corpus(&SyntheticConfig {
            n_pos: 0,
            n_neg: 0,
            ..SyntheticConfig::default()
        })
        .unwrap();
        assert!(c.dataset.is_empty());
        assert!(c.emissions.is_empty());
    }

    #[test]
    fn noise_free_vehicle_body_is_brighter_than_surround() {
        let c = generate_synthetic_corpus(&SyntheticConfig {
            n_pos: 1,
            n_neg: 0,
            noise_level: 0.0,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let patch = &c.dataset.frames()[0].patch;
        let (x0, y0, w, h) = c.emissions[0].body.unwrap();
        let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0, 0.0, 0);
        for y in 0..patch.height() {
            for x in 0..patch.width() {
                if x >= x0 && x < x0 + w && y >= y0 && y < y0 + h {
                    inside += patch.get(x, y);
                    n_in += 1;
                } else {
                    outside += patch.get(x, y);
                    n_out += 1;
                }
            }
        }
        assert!(n_out > 0);
        assert!(inside / n_in as f64 > outside / n_out as f64);
    }

    #[test]
    fn generation_is_deterministic_and_logged() {
        let cfg = SyntheticConfig {
            n_pos: 5,
            n_neg: 7,
            archetypes: vec![Archetype::BrightBody, Archetype::Headlights],
            ..SyntheticConfig::default()
        };
        let a = generate_synthetic_corpus(&cfg).unwrap();
        let b = generate_synthetic_corpus(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        for (f, e) in a.dataset.frames().iter().zip(&a.emissions) {
            assert_eq!(f.frame_id, e.frame_id);
            assert_eq!(f.label, e.label);
        }
        assert_eq!(a.emissions[1].archetype, Some(Archetype::Headlights));
        assert_eq!(a.dataset.frames()[1].tags.time_of_day, TimeOfDay::Night);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let small = SyntheticConfig {
            patch_size: 3,
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic_corpus(&small).is_err());
        let noisy = SyntheticConfig {
            noise_level: 0.6,
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic_corpus(&noisy).is_err());
    }
}
