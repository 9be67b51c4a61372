//! A modeling session: the grown segments, their features and the document,
//! driven by explicit commands.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use pcrecon_core::features::{synthesize_with, FeatureConfig, FeatureSet};
use pcrecon_core::grow::{grow, CancelToken, GrowParams, GrowProgress, GrowResult, GrowState, Segment};
use pcrecon_core::octree::Octree;
use pcrecon_core::{Point3, Vec3};

use crate::direction::find_direction;
use crate::document::{Delta, Op, ReconstructionDocument};
use crate::error::{Error, Result};
use crate::params::{estimate_params, estimate_spacing, ParamConfig};
use crate::pick::pick_raw;
use crate::report::GrowReport;
use crate::polygon::{ExtrudeStop, Translation};
use crate::snap::{snap_cursor, SnapKind, SnapResult, DEFAULT_SNAP_RADIUS_PX};
use crate::view::ViewPose;

/// Explicit values that replace estimated growing parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    pub plane_threshold: Option<f64>,
    pub density: Option<f64>,
    pub seed_radius: Option<f64>,
    pub search_radius: Option<f64>,
    pub adaptive: Option<bool>,
    pub otsu_prune: Option<bool>,
    pub rng_seed: Option<u64>,
}

impl ParamOverrides {
    pub fn apply(&self, p: &mut GrowParams) {
        if let Some(v) = self.plane_threshold {
            p.plane_threshold = v;
        }
        if let Some(v) = self.density {
            p.density = v;
        }
        if let Some(v) = self.seed_radius {
            p.seed_radius = v;
        }
        if let Some(v) = self.search_radius {
            p.search_radius = v;
        }
        if let Some(v) = self.adaptive {
            p.adaptive = v;
        }
        if let Some(v) = self.otsu_prune {
            p.otsu_prune = v;
        }
        if let Some(v) = self.rng_seed {
            p.rng_seed = v;
        }
    }
}

/// A point named by what it snaps to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SnapRef {
    Corner(u32),
    /// Edge index and fraction from start to end.
    Edge(u32, f64),
    Point(Point3),
    /// Pixel position under the current view.
    Cursor([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DirRef {
    Vector(Vec3),
    /// Normal of a segment, toward the viewer.
    Normal(u32),
    Edge(u32),
    /// Direction found at a snap with a pointer movement in pixels.
    Find(SnapRef, [f64; 2]),
}

pub struct Session {
    tree: Arc<Octree>,
    pub view: ViewPose,
    pub config: ParamConfig,
    pub snap_radius_px: f64,
    pub segments: Vec<Segment>,
    pub features: FeatureSet,
    pub document: ReconstructionDocument,
    feature_config: FeatureConfig,
}

impl Session {
    pub fn new(tree: Arc<Octree>, view: ViewPose) -> Self {
        Self {
            tree,
            view,
            config: ParamConfig::default(),
            snap_radius_px: DEFAULT_SNAP_RADIUS_PX,
            segments: Vec::new(),
            features: FeatureSet::default(),
            document: ReconstructionDocument::new(),
            feature_config: FeatureConfig::new(0.0),
        }
    }

    pub fn tree(&self) -> &Arc<Octree> {
        &self.tree
    }

    /// Parameters a seed at `p0` would grow with under the current view.
    /// The point spacing is measured at the start level of the overridden
    /// density.
    pub fn grow_params(&self, p0: Point3, overrides: &ParamOverrides) -> Result<GrowParams> {
        let mut p = estimate_params(&self.view, p0, 1.0, &self.config)?;
        overrides.apply(&mut p);
        if overrides.search_radius.is_none() {
            let spacing = estimate_spacing(&self.tree, &p)?
                .ok_or(pcrecon_core::Error::TooFewSeedPoints { needed: 2, have: 0 })?;
            p.search_radius = self.config.spacing_factor * spacing;
        }
        p.validate()?;
        Ok(p)
    }

    /// Adds the segments of a finished grow and recomputes the features.
    /// Segment ids are renumbered to stay unique within the session.
    pub fn absorb(&mut self, result: &GrowResult, params: &GrowParams) -> &[Segment] {
        let base = self.segments.len() as u32;
        let start = self.segments.len();
        for s in &result.segments {
            let mut s = s.clone();
            s.id += base;
            self.segments.push(s);
        }
        self.feature_config = FeatureConfig::for_grow(params);
        let generation = self.features.generation + 1;
        self.features = synthesize_with(&self.segments, &self.feature_config);
        self.features.generation = generation;
        &self.segments[start..]
    }

    pub fn grow(
        &mut self,
        seed: Point3,
        overrides: &ParamOverrides,
        cancel: &CancelToken,
        callback: Option<&mut dyn FnMut(&GrowProgress)>,
    ) -> Result<(GrowParams, GrowResult)> {
        let p = self.grow_params(seed, overrides)?;
        let res = grow(GrowState::new(&self.tree, p)?, cancel, callback)?;
        self.absorb(&res, &p);
        Ok((p, res))
    }

    /// [`Session::grow`], summarized.
    pub fn grow_report(
        &mut self,
        seed: Point3,
        overrides: &ParamOverrides,
        cancel: &CancelToken,
        callback: Option<&mut dyn FnMut(&GrowProgress)>,
    ) -> Result<GrowReport> {
        let p = self.grow_params(seed, overrides)?;
        let res = grow(GrowState::new(&self.tree, p)?, cancel, callback)?;
        let start = self.segments.len();
        self.absorb(&res, &p);
        Ok(GrowReport::new(p, &res, &self.segments[start..], &self.features))
    }

    /// Snap at a pixel position under the current view.
    pub fn pick(&self, cursor: [f64; 2]) -> Result<Option<SnapResult>> {
        let raw = pick_raw(&self.tree, &self.view, cursor, self.snap_radius_px)?;
        Ok(snap_cursor(
            &self.view,
            cursor,
            &self.features,
            &self.segments,
            raw,
            self.snap_radius_px,
        ))
    }

    pub fn resolve_snap(&self, r: &SnapRef) -> Result<SnapResult> {
        let missing = |kind, id: u32| Error::UnknownId { kind, id: id as u64 };
        match *r {
            SnapRef::Corner(i) => {
                let c = self.features.corners.get(i as usize).ok_or(missing("corner", i))?;
                Ok(SnapResult {
                    kind: SnapKind::Corner,
                    position: c.position,
                    feature: Some(i),
                    screen_distance: 0.0,
                })
            }
            SnapRef::Edge(i, t) => {
                let e = self.features.edges.get(i as usize).ok_or(missing("edge", i))?;
                Ok(SnapResult {
                    kind: SnapKind::Edge,
                    position: e.start.lerp(e.end, t),
                    feature: Some(i),
                    screen_distance: 0.0,
                })
            }
            SnapRef::Point(p) => Ok(SnapResult {
                kind: SnapKind::RawPoint,
                position: p,
                feature: None,
                screen_distance: 0.0,
            }),
            SnapRef::Cursor(px) => self.pick(px)?.ok_or(Error::NoHit),
        }
    }

    pub fn resolve_dir(&self, d: &DirRef) -> Result<Vec3> {
        match *d {
            DirRef::Vector(v) => v.try_normalize().ok_or(Error::NoHit),
            DirRef::Normal(id) => {
                let s = self
                    .segments
                    .iter()
                    .find(|s| s.id == id)
                    .ok_or(Error::UnknownId { kind: "segment", id: id as u64 })?;
                Ok(s.plane.normal_toward(self.view.eye))
            }
            DirRef::Edge(i) => Ok(self
                .features
                .edges
                .get(i as usize)
                .ok_or(Error::UnknownId { kind: "edge", id: i as u64 })?
                .line
                .direction),
            DirRef::Find(snap, gesture) => {
                let s = self.resolve_snap(&snap)?;
                find_direction(&self.view, &s, &self.features, &self.segments, gesture)
            }
        }
    }

    pub fn construct(&mut self, vertices: &[SnapRef]) -> Result<Delta> {
        let pts = vertices
            .iter()
            .map(|v| self.resolve_snap(v).map(|s| s.position))
            .collect::<Result<Vec<_>>>()?;
        self.document.apply(Op::Construct {
            vertices: pts,
            plane: None,
        })
    }

    pub fn translate(&mut self, polygon: u32, t: &TranslateBy, copy: bool) -> Result<Delta> {
        let translation = match t {
            TranslateBy::Snap { from, to, along } => Translation::Snap {
                anchor: self.resolve_snap(from)?.position,
                target: self.resolve_snap(to)?.position,
                constraint: along.as_ref().map(|d| self.resolve_dir(d)).transpose()?,
            },
            TranslateBy::Direction { dir, distance } => Translation::Direction {
                direction: self.resolve_dir(dir)?,
                distance: *distance,
            },
        };
        let op = if copy {
            Op::Copy { polygon, translation }
        } else {
            Op::Move { polygon, translation }
        };
        self.document.apply(op)
    }

    pub fn extrude(&mut self, polygon: u32, dir: &DirRef, stop: &StopRef) -> Result<Delta> {
        let direction = self.resolve_dir(dir)?;
        let stop = match stop {
            StopRef::Length(l) => ExtrudeStop::Length(*l),
            StopRef::Target(s) => ExtrudeStop::Target(self.resolve_snap(s)?.position),
        };
        self.document.apply(Op::Extrude {
            polygon,
            direction,
            stop,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TranslateBy {
    Snap {
        from: SnapRef,
        to: SnapRef,
        along: Option<DirRef>,
    },
    Direction { dir: DirRef, distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRef {
    Length(f64),
    Target(SnapRef),
}
