//! Domain types, evaluation configuration, and the JSONL interchange formats
//! consumed by every other module.
//!
//! Scenes are immutable after construction (loading validates every
//! invariant); all downstream transforms return new values.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Agent category. Only `Car`, `Truck` and `Bus` are ever scored; any other
/// label is carried as `Other` so scenes remain loadable without being scored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AgentClass {
    Car,
    Truck,
    Bus,
    Other(String),
}

impl AgentClass {
    pub fn name(&self) -> &str {
        match self {
            AgentClass::Car => "car",
            AgentClass::Truck => "truck",
            AgentClass::Bus => "bus",
            AgentClass::Other(label) => label,
        }
    }

    pub fn parse(label: &str) -> AgentClass {
        match label {
            "car" => AgentClass::Car,
            "truck" => AgentClass::Truck,
            "bus" => AgentClass::Bus,
            other => AgentClass::Other(other.to_string()),
        }
    }
}

impl std::fmt::Display for AgentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for AgentClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AgentClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        Ok(AgentClass::parse(&label))
    }
}

/// A 2D position in the global metric frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One position sample of a track; `frame` indexes the scene timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn distance(&self, other: &Waypoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ego vehicle pose for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPose {
    pub x: f64,
    pub y: f64,
    pub heading_rad: f64,
}

impl EgoPose {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A ground-truth agent track with contiguous waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GtTrack {
    pub gt_id: u64,
    pub class: AgentClass,
    pub waypoints: Vec<Waypoint>,
}

impl GtTrack {
    pub fn start_frame(&self) -> usize {
        self.waypoints.first().map_or(0, |w| w.frame)
    }

    pub fn end_frame(&self) -> usize {
        self.waypoints.last().map_or(0, |w| w.frame)
    }

    /// Waypoint at `frame`, if covered. O(1) thanks to contiguity.
    pub fn waypoint_at(&self, frame: usize) -> Option<&Waypoint> {
        let start = self.start_frame();
        if frame < start {
            return None;
        }
        self.waypoints.get(frame - start)
    }

    pub fn covers(&self, first: usize, last: usize) -> bool {
        !self.waypoints.is_empty() && self.start_frame() <= first && self.end_frame() >= last
    }
}

/// A perception hypothesis: a tracked agent with its past trajectory ending
/// at the scene reference frame. Identities carry no ground-truth linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct PredTrack {
    pub track_id: u64,
    pub class: AgentClass,
    pub confidence: f64,
    pub waypoints: Vec<Waypoint>,
}

impl PredTrack {
    pub fn start_frame(&self) -> usize {
        self.waypoints.first().map_or(0, |w| w.frame)
    }

    pub fn end_frame(&self) -> usize {
        self.waypoints.last().map_or(0, |w| w.frame)
    }

    pub fn waypoint_at(&self, frame: usize) -> Option<&Waypoint> {
        let start = self.start_frame();
        if frame < start {
            return None;
        }
        self.waypoints.get(frame - start)
    }
}

/// The k future modes forecast for one predicted track. Mode positions are
/// at future frames 1..=H relative to the reference frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub track_id: u64,
    pub modes: Vec<Vec<Point>>,
    pub mode_probs: Option<Vec<f64>>,
}

impl ForecastSet {
    /// Checks equal mode lengths and probability normalization.
    pub fn validate(&self, scene_id: &str) -> Result<()> {
        if let Some(first) = self.modes.first() {
            let len = first.len();
            if self.modes.iter().any(|m| m.len() != len) {
                return Err(Error::invariant(
                    scene_id,
                    "modes",
                    format!("track {} has modes of unequal length", self.track_id),
                ));
            }
        }
        if let Some(probs) = &self.mode_probs {
            if probs.len() != self.modes.len() {
                return Err(Error::invariant(
                    scene_id,
                    "mode_probs",
                    format!("track {}: {} probs for {} modes", self.track_id, probs.len(), self.modes.len()),
                ));
            }
            if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::invariant(
                    scene_id,
                    "mode_probs",
                    format!("track {} has a negative or non-finite mode probability", self.track_id),
                ));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invariant(
                    scene_id,
                    "mode_probs",
                    format!("track {} mode probabilities sum to {sum}, expected 1", self.track_id),
                ));
            }
        }
        Ok(())
    }
}

/// A prediction plus its optional forecast, as carried by one line of a
/// predictions file.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub track: PredTrack,
    pub forecast: Option<ForecastSet>,
}

/// Timeline of ego poses and ground-truth agent tracks at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub frame_rate_hz: f64,
    pub num_frames: usize,
    pub reference_frame: usize,
    pub ego_poses: Vec<EgoPose>,
    pub gt_tracks: Vec<GtTrack>,
}

impl Scene {
    pub fn ego_at_reference(&self) -> EgoPose {
        self.ego_poses[self.reference_frame]
    }

    pub fn gt_track(&self, gt_id: u64) -> Option<&GtTrack> {
        self.gt_tracks.iter().find(|t| t.gt_id == gt_id)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.scene_id;
        if self.num_frames == 0 {
            return Err(Error::invariant(id, "num_frames", "scene has zero frames"));
        }
        if self.reference_frame >= self.num_frames {
            return Err(Error::invariant(
                id,
                "reference_frame",
                format!("{} not in [0, {})", self.reference_frame, self.num_frames),
            ));
        }
        if self.ego_poses.len() != self.num_frames {
            return Err(Error::invariant(
                id,
                "ego_poses",
                format!(
                    "ego pose count mismatch: {} poses for {} frames",
                    self.ego_poses.len(),
                    self.num_frames
                ),
            ));
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(Error::invariant(id, "frame_rate_hz", "must be finite and positive"));
        }
        let mut seen = HashSet::new();
        for track in &self.gt_tracks {
            if !seen.insert(track.gt_id) {
                return Err(Error::invariant(
                    id,
                    "gt_tracks",
                    format!("duplicate gt_id {}", track.gt_id),
                ));
            }
            validate_waypoints(id, "gt_tracks", &track.waypoints, self.num_frames)?;
            if track.waypoints.is_empty() {
                return Err(Error::invariant(
                    id,
                    "gt_tracks",
                    format!("gt_id {} has no waypoints", track.gt_id),
                ));
            }
        }
        Ok(())
    }

    /// Validates a prediction against this scene's timeline.
    pub fn validate_prediction(&self, pred: &Prediction) -> Result<()> {
        let id = &self.scene_id;
        let track = &pred.track;
        if !(0.0..=1.0).contains(&track.confidence) || !track.confidence.is_finite() {
            return Err(Error::invariant(
                id,
                "confidence",
                format!("track {}: confidence {} not in [0, 1]", track.track_id, track.confidence),
            ));
        }
        validate_waypoints(id, "pred_tracks", &track.waypoints, self.num_frames)?;
        if track.waypoints.is_empty() {
            return Err(Error::invariant(
                id,
                "pred_tracks",
                format!("track {} has no waypoints", track.track_id),
            ));
        }
        if track.end_frame() != self.reference_frame {
            return Err(Error::invariant(
                id,
                "pred_tracks",
                format!(
                    "track {} ends at frame {}, expected the reference frame {}",
                    track.track_id,
                    track.end_frame(),
                    self.reference_frame
                ),
            ));
        }
        if let Some(forecast) = &pred.forecast {
            forecast.validate(id)?;
        }
        Ok(())
    }
}

fn validate_waypoints(
    scene_id: &str,
    field: &str,
    waypoints: &[Waypoint],
    num_frames: usize,
) -> Result<()> {
    for pair in waypoints.windows(2) {
        if pair[1].frame != pair[0].frame + 1 {
            return Err(Error::invariant(
                scene_id,
                field,
                format!("waypoint frames jump from {} to {}", pair[0].frame, pair[1].frame),
            ));
        }
    }
    for w in waypoints {
        if w.frame >= num_frames {
            return Err(Error::invariant(
                scene_id,
                field,
                format!("waypoint frame {} outside [0, {})", w.frame, num_frames),
            ));
        }
        if !(w.x.is_finite() && w.y.is_finite()) {
            return Err(Error::invariant(
                scene_id,
                field,
                format!("non-finite coordinate at frame {}", w.frame),
            ));
        }
    }
    Ok(())
}

/// Which test decides that a forecast mode hit the ground truth, for the
/// miss-rate metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissCriterion {
    /// A mode hits iff its final-frame distance to the ground truth is
    /// within the radius (default).
    Fde,
    /// A mode hits iff every frame is within the radius.
    MaxPointwise,
}

/// Evaluation parameters shared by matching, metrics and perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub match_threshold_m: f64,
    pub fde_threshold_m: f64,
    pub k: usize,
    pub miss_radius_m: f64,
    pub horizon_frames: usize,
    pub history_frames: usize,
    pub moving_displacement_m: f64,
    pub distance_bins_m: Vec<f64>,
    pub classes: Vec<AgentClass>,
    pub miss_criterion: MissCriterion,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            match_threshold_m: 2.0,
            fde_threshold_m: 4.0,
            k: 5,
            miss_radius_m: 4.0,
            horizon_frames: 12,
            history_frames: 4,
            moving_displacement_m: 2.0,
            distance_bins_m: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            classes: vec![AgentClass::Car, AgentClass::Truck, AgentClass::Bus],
            miss_criterion: MissCriterion::Fde,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("match_threshold_m", self.match_threshold_m),
            ("fde_threshold_m", self.fde_threshold_m),
            ("miss_radius_m", self.miss_radius_m),
            ("moving_displacement_m", self.moving_displacement_m),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {value}")));
            }
        }
        if self.k == 0 || self.horizon_frames == 0 {
            return Err(Error::Validation("k and horizon_frames must be at least 1".into()));
        }
        if self.distance_bins_m.len() < 2 {
            return Err(Error::Validation("distance_bins_m needs at least two edges".into()));
        }
        if self.distance_bins_m.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("distance_bins_m edges must be strictly increasing".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Validation("classes must not be empty".into()));
        }
        Ok(())
    }

    pub fn scores_class(&self, class: &AgentClass) -> bool {
        self.classes.contains(class)
    }

    /// First frame of the association / history window for a scene,
    /// clamped at the start of the timeline.
    pub fn window_start(&self, scene: &Scene) -> usize {
        scene.reference_frame.saturating_sub(self.history_frames)
    }
}

/// Ground-truth agents eligible for forecast evaluation: class is scored,
/// the track covers the full horizon past the reference frame, and the
/// agent moves at least `moving_displacement_m` over that horizon.
///
/// Returned ids are sorted ascending.
pub fn eligible_gt_agents(scene: &Scene, cfg: &EvalConfig) -> Vec<u64> {
    let t0 = scene.reference_frame;
    let end = t0 + cfg.horizon_frames;
    let mut ids: Vec<u64> = scene
        .gt_tracks
        .iter()
        .filter(|track| cfg.scores_class(&track.class))
        .filter(|track| track.covers(t0, end))
        .filter(|track| {
            let start = track.waypoint_at(t0).expect("covered");
            let finish = track.waypoint_at(end).expect("covered");
            start.distance(finish) >= cfg.moving_displacement_m
        })
        .map(|track| track.gt_id)
        .collect();
    ids.sort_unstable();
    ids
}

// ---------------------------------------------------------------------------
// Wire records (JSONL, LF line endings, full round-trip float precision)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TrackRecord {
    gt_id: u64,
    class: AgentClass,
    start_frame: usize,
    xy: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SceneRecord {
    scene_id: String,
    frame_rate_hz: f64,
    num_frames: usize,
    reference_frame: usize,
    ego_poses: Vec<[f64; 3]>,
    gt_tracks: Vec<TrackRecord>,
}

#[derive(Serialize, Deserialize)]
struct PredRecord {
    scene_id: String,
    track_id: u64,
    class: AgentClass,
    confidence: f64,
    start_frame: usize,
    xy: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode_probs: Option<Vec<f64>>,
}

/// A forecast-only record, used when forecasts ship separately from tracks.
#[derive(Serialize, Deserialize)]
struct ForecastRecord {
    scene_id: String,
    track_id: u64,
    modes: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode_probs: Option<Vec<f64>>,
}

fn waypoints_from_xy(start_frame: usize, xy: &[[f64; 2]]) -> Vec<Waypoint> {
    xy.iter()
        .enumerate()
        .map(|(i, p)| Waypoint { frame: start_frame + i, x: p[0], y: p[1] })
        .collect()
}

fn xy_from_waypoints(waypoints: &[Waypoint]) -> Vec<[f64; 2]> {
    waypoints.iter().map(|w| [w.x, w.y]).collect()
}

impl From<&Scene> for SceneRecord {
    fn from(scene: &Scene) -> Self {
        SceneRecord {
            scene_id: scene.scene_id.clone(),
            frame_rate_hz: scene.frame_rate_hz,
            num_frames: scene.num_frames,
            reference_frame: scene.reference_frame,
            ego_poses: scene.ego_poses.iter().map(|p| [p.x, p.y, p.heading_rad]).collect(),
            gt_tracks: scene
                .gt_tracks
                .iter()
                .map(|t| TrackRecord {
                    gt_id: t.gt_id,
                    class: t.class.clone(),
                    start_frame: t.start_frame(),
                    xy: xy_from_waypoints(&t.waypoints),
                })
                .collect(),
        }
    }
}

impl SceneRecord {
    fn into_scene(self) -> Scene {
        Scene {
            scene_id: self.scene_id,
            frame_rate_hz: self.frame_rate_hz,
            num_frames: self.num_frames,
            reference_frame: self.reference_frame,
            ego_poses: self
                .ego_poses
                .iter()
                .map(|p| EgoPose { x: p[0], y: p[1], heading_rad: p[2] })
                .collect(),
            gt_tracks: self
                .gt_tracks
                .into_iter()
                .map(|t| GtTrack {
                    gt_id: t.gt_id,
                    class: t.class,
                    waypoints: waypoints_from_xy(t.start_frame, &t.xy),
                })
                .collect(),
        }
    }
}

fn parse_line<T: serde::de::DeserializeOwned>(line: &str, line_no: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })
}

/// Loads and validates scenes from a `*.scenes.jsonl` stream.
pub fn load_scenes<R: BufRead>(reader: R) -> Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SceneRecord = parse_line(&line, idx + 1)?;
        let scene = record.into_scene();
        scene.validate()?;
        scenes.push(scene);
    }
    Ok(scenes)
}

/// Serializes scenes in the canonical one-object-per-line form.
pub fn write_scenes<W: Write>(mut writer: W, scenes: &[Scene]) -> Result<()> {
    for scene in scenes {
        let record = SceneRecord::from(scene);
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads prediction records from a `*.preds.jsonl` stream, preserving input
/// order. Invariants that need the owning scene are checked by
/// [`Scene::validate_prediction`].
pub fn load_predictions<R: BufRead>(reader: R) -> Result<Vec<(String, Prediction)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredRecord = parse_line(&line, idx + 1)?;
        let track = PredTrack {
            track_id: record.track_id,
            class: record.class,
            confidence: record.confidence,
            waypoints: waypoints_from_xy(record.start_frame, &record.xy),
        };
        let forecast = record.modes.map(|modes| ForecastSet {
            track_id: record.track_id,
            modes: modes
                .into_iter()
                .map(|m| m.iter().map(|p| Point::new(p[0], p[1])).collect())
                .collect(),
            mode_probs: record.mode_probs,
        });
        out.push((record.scene_id, Prediction { track, forecast }));
    }
    Ok(out)
}

/// Serializes predictions (tracks plus inline forecasts) per scene.
pub fn write_predictions<W: Write>(
    mut writer: W,
    entries: &[(String, Prediction)],
) -> Result<()> {
    for (scene_id, pred) in entries {
        let record = PredRecord {
            scene_id: scene_id.clone(),
            track_id: pred.track.track_id,
            class: pred.track.class.clone(),
            confidence: pred.track.confidence,
            start_frame: pred.track.start_frame(),
            xy: xy_from_waypoints(&pred.track.waypoints),
            modes: pred.forecast.as_ref().map(|f| {
                f.modes
                    .iter()
                    .map(|m| m.iter().map(|p| [p.x, p.y]).collect())
                    .collect()
            }),
            mode_probs: pred.forecast.as_ref().and_then(|f| f.mode_probs.clone()),
        };
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads forecast-only records `{scene_id, track_id, modes, mode_probs?}`.
pub fn load_forecasts<R: BufRead>(reader: R) -> Result<Vec<(String, ForecastSet)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ForecastRecord = parse_line(&line, idx + 1)?;
        out.push((
            record.scene_id,
            ForecastSet {
                track_id: record.track_id,
                modes: record
                    .modes
                    .into_iter()
                    .map(|m| m.iter().map(|p| Point::new(p[0], p[1])).collect())
                    .collect(),
                mode_probs: record.mode_probs,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_track(gt_id: u64, class: AgentClass, start: usize, n: usize, speed: f64) -> GtTrack {
        let waypoints = (0..n)
            .map(|i| Waypoint { frame: start + i, x: speed * (start + i) as f64 / 2.0, y: 0.0 })
            .collect();
        GtTrack { gt_id, class, waypoints }
    }

    fn scene_with(tracks: Vec<GtTrack>) -> Scene {
        let num_frames = 17;
        Scene {
            scene_id: "s0".into(),
            frame_rate_hz: 2.0,
            num_frames,
            reference_frame: 4,
            ego_poses: vec![EgoPose { x: 0.0, y: 0.0, heading_rad: 0.0 }; num_frames],
            gt_tracks: tracks,
        }
    }

    #[test]
    fn loads_scene_with_no_tracks() {
        let line = r#"{"scene_id":"empty","frame_rate_hz":2.0,"num_frames":17,"reference_frame":4,"ego_poses":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]],"gt_tracks":[]}"#;
        let scenes = load_scenes(line.as_bytes()).unwrap();
        assert_eq!(scenes.len(), 1);
        assert_eq!(scenes[0].num_frames, 17);
        assert!(scenes[0].gt_tracks.is_empty());
    }

    #[test]
    fn rejects_ego_pose_count_mismatch() {
        let line = r#"{"scene_id":"bad","frame_rate_hz":2.0,"num_frames":3,"reference_frame":0,"ego_poses":[[0,0,0]],"gt_tracks":[]}"#;
        let err = load_scenes(line.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("ego pose count mismatch"), "{err}");
    }

    #[test]
    fn reports_parse_error_line_number() {
        let data = "{\"scene_id\":\"a\",\"frame_rate_hz\":2.0,\"num_frames\":1,\"reference_frame\":0,\"ego_poses\":[[0,0,0]],\"gt_tracks\":[]}\nnot json\n";
        let err = load_scenes(data.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn scene_roundtrip_is_byte_identical() {
        let scene = scene_with(vec![
            straight_track(1, AgentClass::Car, 0, 17, 4.4),
            straight_track(2, AgentClass::Bus, 2, 15, 3.3),
            straight_track(7, AgentClass::Other("trailer".into()), 0, 17, 0.0),
        ]);
        let mut first = Vec::new();
        write_scenes(&mut first, &[scene]).unwrap();
        let loaded = load_scenes(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_scenes(&mut second, &loaded).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn prediction_roundtrip_preserves_structure() {
        let pred = Prediction {
            track: PredTrack {
                track_id: 11,
                class: AgentClass::Truck,
                confidence: 0.75,
                waypoints: vec![
                    Waypoint { frame: 2, x: 1.25, y: -3.5 },
                    Waypoint { frame: 3, x: 1.5, y: -3.25 },
                    Waypoint { frame: 4, x: 1.75, y: -3.0 },
                ],
            },
            forecast: Some(ForecastSet {
                track_id: 11,
                modes: vec![vec![Point::new(2.0, -2.75); 3], vec![Point::new(2.5, -2.5); 3]],
                mode_probs: Some(vec![0.5, 0.5]),
            }),
        };
        let mut buf = Vec::new();
        write_predictions(&mut buf, &[("s0".to_string(), pred.clone())]).unwrap();
        let loaded = load_predictions(buf.as_slice()).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].0, "s0");
        assert_eq!(loaded[0].1.track, pred.track);
        assert_eq!(loaded[0].1.forecast, pred.forecast);
    }

    #[test]
    fn prediction_must_end_at_reference_frame() {
        let scene = scene_with(vec![]);
        let pred = Prediction {
            track: PredTrack {
                track_id: 1,
                class: AgentClass::Car,
                confidence: 1.0,
                waypoints: vec![Waypoint { frame: 2, x: 0.0, y: 0.0 }],
            },
            forecast: None,
        };
        let err = scene.validate_prediction(&pred).unwrap_err();
        assert!(err.to_string().contains("reference frame"));
    }

    #[test]
    fn mode_probs_must_normalize() {
        let scene = scene_with(vec![]);
        let pred = Prediction {
            track: PredTrack {
                track_id: 1,
                class: AgentClass::Car,
                confidence: 1.0,
                waypoints: vec![Waypoint { frame: 4, x: 0.0, y: 0.0 }],
            },
            forecast: Some(ForecastSet {
                track_id: 1,
                modes: vec![vec![Point::new(0.0, 0.0)], vec![Point::new(1.0, 1.0)]],
                mode_probs: Some(vec![0.9, 0.2]),
            }),
        };
        assert!(scene.validate_prediction(&pred).is_err());
    }

    #[test]
    fn stationary_agent_is_not_eligible() {
        let cfg = EvalConfig::default();
        let scene = scene_with(vec![straight_track(1, AgentClass::Car, 0, 17, 0.0)]);
        assert!(eligible_gt_agents(&scene, &cfg).is_empty());
    }

    #[test]
    fn short_future_is_not_eligible() {
        let cfg = EvalConfig::default();
        // Ends one frame before reference + horizon.
        let scene = scene_with(vec![straight_track(1, AgentClass::Car, 0, 16, 4.0)]);
        assert!(eligible_gt_agents(&scene, &cfg).is_empty());
    }

    #[test]
    fn moving_full_track_is_eligible() {
        let cfg = EvalConfig::default();
        // 2 m/s over 6 s: displacement 12 m >= 2 m.
        let scene = scene_with(vec![straight_track(1, AgentClass::Car, 0, 17, 2.0)]);
        assert_eq!(eligible_gt_agents(&scene, &cfg), vec![1]);
    }

    #[test]
    fn unscored_class_is_not_eligible() {
        let cfg = EvalConfig::default();
        let scene = scene_with(vec![straight_track(1, AgentClass::Other("pedestrian".into()), 0, 17, 2.0)]);
        assert!(eligible_gt_agents(&scene, &cfg).is_empty());
    }

    #[test]
    fn eligibility_is_monotone_in_displacement_threshold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(41);
        for _ in 0..200 {
            let tracks: Vec<GtTrack> = (0..rng.random_range(1..8u64))
                .map(|id| {
                    let speed = rng.random_range(0.0..3.0);
                    straight_track(id, AgentClass::Car, 0, 17, speed)
                })
                .collect();
            let scene = scene_with(tracks);
            let mut cfg = EvalConfig::default();
            let mut previous = usize::MAX;
            for threshold in [0.5, 1.0, 2.0, 4.0, 8.0] {
                cfg.moving_displacement_m = threshold;
                let count = eligible_gt_agents(&scene, &cfg).len();
                assert!(count <= previous, "raising the threshold added agents");
                previous = count;
            }
        }
    }
}
