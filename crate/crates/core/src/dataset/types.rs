use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::DatasetError;

/// A grayscale patch with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImagePatch {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, DatasetError> {
        if width == 0 || height == 0 {
            return Err(DatasetError::InvalidPatch(format!(
                "patch dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(DatasetError::InvalidPatch(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(DatasetError::InvalidPatch(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, DatasetError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Binary class label, encoded as `+1` (vehicle) or `-1` (non-vehicle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Vehicle,
    NonVehicle,
}

impl ClassLabel {
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Vehicle => 1.0,
            ClassLabel::NonVehicle => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            ClassLabel::Vehicle
        } else {
            ClassLabel::NonVehicle
        }
    }

    pub fn is_vehicle(self) -> bool {
        self == ClassLabel::Vehicle
    }

    pub fn opposite(self) -> Self {
        match self {
            ClassLabel::Vehicle => ClassLabel::NonVehicle,
            ClassLabel::NonVehicle => ClassLabel::Vehicle,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Vehicle => "+1",
            ClassLabel::NonVehicle => "-1",
        })
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+1" | "1" => Ok(ClassLabel::Vehicle),
            "-1" => Ok(ClassLabel::NonVehicle),
            other => Err(format!("invalid label {other:?}, expected +1 or -1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationKind {
    Localization,
    Boundary,
}

impl AnnotationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::Localization => "localization",
            AnnotationKind::Boundary => "boundary",
        }
    }
}

impl FromStr for AnnotationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "localization" => Ok(AnnotationKind::Localization),
            "boundary" => Ok(AnnotationKind::Boundary),
            other => Err(format!("invalid annotation kind {other:?}")),
        }
    }
}

macro_rules! tag_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
        pub enum $name {
            #[default]
            Unlabeled,
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$name::Unlabeled, $($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $name::Unlabeled => "unlabeled",
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    "unlabeled" => Ok($name::Unlabeled),
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(concat!("invalid ", stringify!($name), " {:?}"), other)),
                }
            }
        }
    };
}

tag_enum!(TimeOfDay {
    Day => "day",
    Night => "night",
    Dusk => "dusk",
    Dawn => "dawn",
});

tag_enum!(Precipitation {
    None => "none",
    LightRain => "light-rain",
    Rain => "rain",
    LightSnow => "light-snow",
    Snow => "snow",
    HeavySnow => "heavy-snow",
});

tag_enum!(RoadCondition {
    Clean => "clean",
    SomeSnow => "some-snow",
    SnowCovered => "snow-covered",
    Wet => "wet",
});

/// Optional camera artefacts present in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CameraFlags {
    pub glare: bool,
    pub reflections: bool,
    pub shadows: bool,
}

impl CameraFlags {
    fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.glare {
            out.push("glare");
        }
        if self.reflections {
            out.push("reflections");
        }
        if self.shadows {
            out.push("shadows");
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        !(self.glare || self.reflections || self.shadows)
    }
}

/// Per-frame acquisition conditions. Every field always holds exactly one value;
/// missing information is the explicit `Unlabeled` variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ConditionTags {
    pub time_of_day: TimeOfDay,
    pub precipitation: Precipitation,
    pub road: RoadCondition,
    pub camera: CameraFlags,
}

impl ConditionTags {
    /// Fills every unlabeled field from `defaults` (video-level tags).
    pub fn inherit(self, defaults: &ConditionTags) -> ConditionTags {
        ConditionTags {
            time_of_day: if self.time_of_day == TimeOfDay::Unlabeled {
                defaults.time_of_day
            } else {
                self.time_of_day
            },
            precipitation: if self.precipitation == Precipitation::Unlabeled {
                defaults.precipitation
            } else {
                self.precipitation
            },
            road: if self.road == RoadCondition::Unlabeled {
                defaults.road
            } else {
                self.road
            },
            camera: if self.camera.is_empty() {
                defaults.camera
            } else {
                self.camera
            },
        }
    }

    /// `(category, value)` pairs used for per-condition breakdowns.
    pub fn categories(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("time_of_day", self.time_of_day.as_str().to_string()),
            ("precipitation", self.precipitation.as_str().to_string()),
            ("road", self.road.as_str().to_string()),
        ];
        if self.camera.is_empty() {
            out.push(("camera", "none".to_string()));
        } else {
            for name in self.camera.names() {
                out.push(("camera", name.to_string()));
            }
        }
        out
    }

    /// Looks up a field by its manifest key. Used by query filters.
    pub fn value_of(&self, key: &str) -> Option<String> {
        match key {
            "time_of_day" => Some(self.time_of_day.as_str().to_string()),
            "precipitation" => Some(self.precipitation.as_str().to_string()),
            "road" => Some(self.road.as_str().to_string()),
            "camera" => Some(self.camera_field()),
            _ => None,
        }
    }

    fn camera_field(&self) -> String {
        let names = self.camera.names();
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("+")
        }
    }
}

impl fmt::Display for ConditionTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "time_of_day={},precipitation={},road={},camera={}",
            self.time_of_day.as_str(),
            self.precipitation.as_str(),
            self.road.as_str(),
            self.camera_field()
        )
    }
}

impl FromStr for ConditionTags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tags = ConditionTags::default();
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(tags);
        }
        for pair in s.split(',') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| format!("tag {pair:?} is not key=value"))?;
            match key {
                "time_of_day" => tags.time_of_day = value.parse()?,
                "precipitation" => tags.precipitation = value.parse()?,
                "road" => tags.road = value.parse()?,
                "camera" => {
                    tags.camera = CameraFlags::default();
                    if value != "none" {
                        for flag in value.split('+') {
                            match flag {
                                "glare" => tags.camera.glare = true,
                                "reflections" => tags.camera.reflections = true,
                                "shadows" => tags.camera.shadows = true,
                                other => return Err(format!("invalid camera flag {other:?}")),
                            }
                        }
                    }
                }
                other => return Err(format!("unknown tag key {other:?}")),
            }
        }
        Ok(tags)
    }
}

/// One annotated still frame: a patch, its ground truth and its conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFrame {
    pub frame_id: String,
    pub video_id: String,
    pub zone_id: String,
    pub patch: ImagePatch,
    pub label: ClassLabel,
    pub annotation_kind: AnnotationKind,
    pub tags: ConditionTags,
}

/// A presence detection zone drawn over the roadway.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionZone {
    pub zone_id: String,
    pub polygon: Vec<(f64, f64)>,
    pub entry_edge: (usize, usize),
    pub exit_edge: (usize, usize),
}

impl DetectionZone {
    pub fn new(
        zone_id: impl Into<String>,
        polygon: Vec<(f64, f64)>,
        entry_edge: (usize, usize),
        exit_edge: (usize, usize),
    ) -> Result<Self, DatasetError> {
        let zone = Self {
            zone_id: zone_id.into(),
            polygon,
            entry_edge,
            exit_edge,
        };
        zone.validate()?;
        Ok(zone)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |msg: String| DatasetError::InvalidZone {
            zone_id: self.zone_id.clone(),
            message: msg,
        };
        let n = self.polygon.len();
        if n < 3 {
            return Err(invalid(format!("polygon needs at least 3 vertices, got {n}")));
        }
        for &(i, j) in [&self.entry_edge, &self.exit_edge] {
            if i >= n || j >= n || i == j {
                return Err(invalid(format!("edge ({i},{j}) is not a valid vertex pair")));
            }
        }
        let norm = |(i, j): (usize, usize)| if i < j { (i, j) } else { (j, i) };
        if norm(self.entry_edge) == norm(self.exit_edge) {
            return Err(invalid("entry and exit edges coincide".to_string()));
        }
        if !is_simple_polygon(&self.polygon) {
            return Err(invalid("polygon is self-intersecting".to_string()));
        }
        Ok(())
    }
}

fn orientation(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// O(n²) check that no two non-adjacent edges touch.
pub fn is_simple_polygon(vertices: &[(f64, f64)]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
            let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// A validated collection of annotated frames and the zones they reference.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    frames: Vec<AnnotatedFrame>,
    zones: BTreeMap<String, DetectionZone>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        frames: Vec<AnnotatedFrame>,
        zones: BTreeMap<String, DetectionZone>,
        provenance: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::with_capacity(frames.len());
        for frame in &frames {
            if !seen.insert(frame.frame_id.as_str()) {
                return Err(DatasetError::DuplicateFrame(frame.frame_id.clone()));
            }
            if !zones.contains_key(&frame.zone_id) {
                return Err(DatasetError::DanglingZone(frame.zone_id.clone()));
            }
        }
        for zone in zones.values() {
            zone.validate()?;
        }
        Ok(Self {
            frames,
            zones,
            provenance: provenance.into(),
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn frames(&self) -> &[AnnotatedFrame] {
        &self.frames
    }

    pub fn zones(&self) -> &BTreeMap<String, DetectionZone> {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, frame_id: &str) -> Option<&AnnotatedFrame> {
        self.frames.iter().find(|f| f.frame_id == frame_id)
    }

    pub fn count_label(&self, label: ClassLabel) -> usize {
        self.frames.iter().filter(|f| f.label == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count_label(ClassLabel::Vehicle) > 0 && self.count_label(ClassLabel::NonVehicle) > 0
    }

    /// Builds a dataset over a subset of frames, keeping the zone table and provenance.
    pub fn with_frames(&self, frames: Vec<AnnotatedFrame>) -> Result<Self, DatasetError> {
        Dataset::new(frames, self.zones.clone(), self.provenance.clone())
    }

    pub fn into_parts(self) -> (Vec<AnnotatedFrame>, BTreeMap<String, DetectionZone>, String) {
        (self.frames, self.zones, self.provenance)
    }
}
