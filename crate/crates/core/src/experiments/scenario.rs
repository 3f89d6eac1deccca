//! Scenario description (TOML) and its translation into a [`World`].

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::contact_surface::ContactGeometry;
use crate::discrete_contact::{combine_friction, DissipationModel};
use crate::error::{Error, Result};
use crate::mesh::{io, MassProperties, RigidPose, Vec3};
use crate::multibody::{MultibodySystem, RigidBody, SystemState};
use crate::pressure_field::{self, PressureMesh, RigidGeometry};
use crate::stepper::{SolverConfig, World};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    /// s
    pub duration: f64,
    /// Record every `record_stride` steps.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    /// Default relaxation time (s) of every pair.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    #[serde(default)]
    pub experiment: Option<DiskExperiment>,
    /// Directory used to resolve relative mesh paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_stride() -> usize {
    1
}
fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}
fn default_tau() -> f64 {
    DissipationModel::default().tau
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub name: String,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub fixed: bool,
    /// kg; required for free bodies.
    pub mass: Option<f64>,
    /// Principal moments (kg·m²) about the body axes; derived from the
    /// geometry when omitted.
    pub inertia: Option<[f64; 3]>,
    #[serde(default)]
    pub friction: f64,
    #[serde(default)]
    pub position: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_quaternion")]
    pub orientation: [f64; 4],
    #[serde(default)]
    pub velocity: [f64; 3],
    /// World frame, rad/s.
    #[serde(default)]
    pub angular_velocity: [f64; 3],
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    #[default]
    None,
    Box {
        half_sizes: [f64; 3],
        modulus: f64,
        resolution: f64,
    },
    Cylinder {
        radius: f64,
        height: f64,
        modulus: f64,
        resolution: f64,
    },
    Slab {
        thickness: f64,
        extent: f64,
        modulus: f64,
        resolution: f64,
    },
    RigidBox {
        half_sizes: [f64; 3],
    },
    RigidPlane {
        half_extent: f64,
    },
    /// Tet mesh file with a pressure column.
    TetMesh {
        path: PathBuf,
    },
    /// Rigid OBJ surface.
    Obj {
        path: PathBuf,
    },
}

impl GeometrySpec {
    pub fn resolution_mut(&mut self) -> Option<&mut f64> {
        match self {
            Self::Box { resolution, .. }
            | Self::Cylinder { resolution, .. }
            | Self::Slab { resolution, .. } => Some(resolution),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub a: String,
    pub b: String,
    pub friction: Option<f64>,
    pub tau: Option<f64>,
    /// Set to false to disable contact between the two bodies.
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

/// Spinning-disk measurement settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskExperiment {
    pub body: String,
    /// m
    pub radius: f64,
    /// rad/s; the measurement window ends once the spin drops below it.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_cutoff() -> f64 {
    0.5
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_toml(&std::fs::read_to_string(path)?)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config("duration must be > 0".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Config("tau must be >= 0".into()));
        }
        self.solver.validate()?;
        for (i, b) in self.bodies.iter().enumerate() {
            if self.bodies[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::Config(format!("duplicate body name '{}'", b.name)));
            }
            if !b.fixed && b.mass.is_none() {
                return Err(Error::Config(format!("free body '{}' needs a mass", b.name)));
            }
        }
        for p in &self.pairs {
            self.body_index(&p.a)?;
            self.body_index(&p.b)?;
        }
        if let Some(e) = &self.experiment {
            self.body_index(&e.body)?;
            if !(e.radius > 0.0) {
                return Err(Error::Config("experiment radius must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn body_index(&self, name: &str) -> Result<usize> {
        self.bodies
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| Error::Config(format!("unknown body '{name}'")))
    }

    /// Number of whole steps covering the duration.
    pub fn step_count(&self) -> usize {
        (self.duration / self.solver.dt + 1e-9).floor() as usize
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Build the world and initial state.
    pub fn build(&self) -> Result<(World, SystemState)> {
        self.validate()?;
        let mut bodies = Vec::with_capacity(self.bodies.len());
        let mut velocities = Vec::with_capacity(self.bodies.len());
        for spec in &self.bodies {
            bodies.push(self.build_body(spec)?);
            velocities.push((Vec3::from(spec.angular_velocity), Vec3::from(spec.velocity)));
        }
        let system = MultibodySystem::new(bodies)?;
        let state = system.initial_state(&velocities);
        let gravity = Vec3::from(self.gravity);
        let mut world = World::new(system, gravity, DissipationModel::new(self.tau));
        for p in &self.pairs {
            let (a, b) = (self.body_index(&p.a)?, self.body_index(&p.b)?);
            let (lo, hi) = (a.min(b), a.max(b));
            let pos = world.pairs.iter().position(|q| q.body_a == lo && q.body_b == hi);
            let Some(pos) = pos else {
                if p.enabled {
                    return Err(Error::Config(format!(
                        "bodies '{}' and '{}' cannot touch",
                        p.a, p.b
                    )));
                }
                continue;
            };
            if !p.enabled {
                world.pairs.remove(pos);
                continue;
            }
            let pair = &mut world.pairs[pos];
            if let Some(mu) = p.friction {
                if !(mu >= 0.0) {
                    return Err(Error::Config("pair friction must be >= 0".into()));
                }
                pair.friction = mu;
            }
            if let Some(tau) = p.tau {
                if !(tau >= 0.0) {
                    return Err(Error::Config("pair tau must be >= 0".into()));
                }
                pair.dissipation = DissipationModel::new(tau);
            }
        }
        Ok((world, state))
    }

    fn build_body(&self, spec: &BodySpec) -> Result<RigidBody> {
        let [w, x, y, z] = spec.orientation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if !(q.norm() > 0.0) {
            return Err(Error::Config(format!("body '{}': zero orientation", spec.name)));
        }
        let pose = RigidPose::from_parts(
            Translation3::from(Vec3::from(spec.position)),
            UnitQuaternion::from_quaternion(q),
        );
        let (geometry, derived_inertia) = self.build_geometry(spec)?;
        let mut body = if spec.fixed {
            RigidBody::anchored(spec.name.clone(), pose)
        } else {
            let mass = spec.mass.expect("validated");
            let inertia = match (spec.inertia, derived_inertia) {
                (Some(d), _) => Matrix3::from_diagonal(&Vec3::from(d)),
                (None, Some(unit)) => unit * mass,
                (None, None) => {
                    return Err(Error::Config(format!(
                        "body '{}': inertia required for this geometry",
                        spec.name
                    )))
                }
            };
            RigidBody::free(spec.name.clone(), mass, inertia).with_pose(pose)
        };
        body.friction = spec.friction;
        if let Some(g) = geometry {
            body = body.with_geometry(g);
        }
        Ok(body)
    }

    /// Geometry and inertia per unit mass about the body origin, when known.
    fn build_geometry(&self, spec: &BodySpec) -> Result<(Option<ContactGeometry>, Option<Matrix3<f64>>)> {
        let compliant = |mesh: PressureMesh| -> Result<_> {
            let props = mesh.mesh().mass_properties(1.0);
            let unit = unit_inertia(&props);
            Ok((Some(ContactGeometry::compliant(mesh)?), Some(unit)))
        };
        match &spec.geometry {
            GeometrySpec::None => Ok((None, None)),
            GeometrySpec::Box {
                half_sizes,
                modulus,
                resolution,
            } => compliant(pressure_field::make_box(Vec3::from(*half_sizes), *modulus, *resolution)?),
            GeometrySpec::Cylinder {
                radius,
                height,
                modulus,
                resolution,
            } => compliant(pressure_field::make_cylinder(*radius, *height, *modulus, *resolution)?),
            GeometrySpec::Slab {
                thickness,
                extent,
                modulus,
                resolution,
            } => compliant(pressure_field::make_half_space_slab(
                *thickness,
                *extent,
                *modulus,
                *resolution,
            )?),
            GeometrySpec::TetMesh { path } => {
                let (mesh, field) = io::read_tet_mesh(self.resolve(path))?;
                let field = field.ok_or_else(|| {
                    Error::Config(format!("{}: mesh has no pressure column", path.display()))
                })?;
                compliant(PressureMesh::from_field(mesh, field)?)
            }
            GeometrySpec::RigidBox { half_sizes } => {
                let h = Vec3::from(*half_sizes);
                let unit = Matrix3::from_diagonal(&Vec3::new(
                    h.y * h.y + h.z * h.z,
                    h.x * h.x + h.z * h.z,
                    h.x * h.x + h.y * h.y,
                )) / 3.0;
                Ok((Some(ContactGeometry::rigid(RigidGeometry::make_box(h)?)?), Some(unit)))
            }
            GeometrySpec::RigidPlane { half_extent } => Ok((
                Some(ContactGeometry::rigid(RigidGeometry::make_plane(*half_extent)?)?),
                None,
            )),
            GeometrySpec::Obj { path } => {
                let surface = io::read_obj(self.resolve(path))?;
                Ok((Some(ContactGeometry::rigid(RigidGeometry::new(surface))?), None))
            }
        }
    }

    /// Index of the disk body and the measurement settings.
    pub fn disk(&self) -> Result<(usize, &DiskExperiment)> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no [experiment] table".into()))?;
        Ok((self.body_index(&e.body)?, e))
    }

    /// Overwrite the resolution of every compliant primitive.
    pub fn set_resolution(&mut self, resolution: f64) {
        for b in &mut self.bodies {
            if let Some(r) = b.geometry.resolution_mut() {
                *r = resolution;
            }
        }
    }

    /// Combined friction of two bodies after pair overrides.
    pub fn pair_friction(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.body_index(a)?, self.body_index(b)?);
        let over = self
            .pairs
            .iter()
            .find(|p| {
                let (x, y) = (self.body_index(&p.a).ok(), self.body_index(&p.b).ok());
                (x, y) == (Some(ia), Some(ib)) || (x, y) == (Some(ib), Some(ia))
            })
            .and_then(|p| p.friction);
        Ok(over.unwrap_or_else(|| combine_friction(self.bodies[ia].friction, self.bodies[ib].friction)))
    }
}

/// Inertia per unit mass about the origin. The body origin is the center of
/// mass, so meshes must be centered; primitives always are.
fn unit_inertia(props: &MassProperties) -> Matrix3<f64> {
    let vol = props.mass;
    let c = props.centroid;
    let about_centroid = props.inertia / vol;
    // Parallel-axis shift from centroid to origin.
    let shift = Matrix3::identity() * c.norm_squared() - c * c.transpose();
    about_centroid + shift
}
