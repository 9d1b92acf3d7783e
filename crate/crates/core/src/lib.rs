pub mod calib;
pub mod compete;
pub mod cones1d;
pub mod cones2d;
pub mod error;
pub mod evolve;
pub mod geom;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod spherenet;

pub use error::{Error, Result};

/// `f64` instantiations of the generic core.
pub type Vec3 = geom::Vector3<f64>;
pub type Mesh = geom::TriMesh<f64>;
pub type Energy = geom::SlidingEnergy<f64>;
pub type Cone = cones2d::ConeSpec<f64>;
pub type Clip = cones2d::ClipRegion<f64>;
pub type Profile1D = cones1d::Cone1D<f64>;
pub type Rays = cones1d::BranchCone<f64>;
pub type Net = spherenet::HemisphereNet<f64>;
pub type Calib = calib::Calibration<f64>;
pub type EvolveConfig = evolve::EvolveConfig<f64>;
pub type EvolveTrace = evolve::EvolveTrace<f64>;
