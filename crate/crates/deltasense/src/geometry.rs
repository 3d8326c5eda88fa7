//! Rectangular deployment geometry: the coverage area, fixed device
//! positions, per-device wall distances, and seeded deployment generation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::rng::rng_from_seed;

/// Rectangular coverage area, `length` x `height` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "H")]
    pub height: f64,
}

impl Area {
    pub fn new(length: f64, height: f64) -> Result<Self> {
        if !(length.is_finite() && height.is_finite() && length > 0.0 && height > 0.0) {
            return Err(ModelError::invalid(format!(
                "area sides must be finite and positive, got {length} x {height}"
            )));
        }
        Ok(Area { length, height })
    }

    /// Surface measure in square meters.
    pub fn measure(&self) -> f64 {
        self.length * self.height
    }

    /// Length of the diagonal; no two points in the area are farther apart.
    pub fn diagonal(&self) -> f64 {
        self.length.hypot(self.height)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.length).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

/// A fixed sensor with a known position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Location where an event is triggered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventPoint {
    pub x: f64,
    pub y: f64,
}

impl EventPoint {
    pub fn distance_to(&self, device: &Device) -> f64 {
        (self.x - device.x).hypot(self.y - device.y)
    }
}

/// Worst-case squared wall offsets and the nearest-wall distance for one
/// device. `u`/`v` bound the squared event distance along each axis; `r_wall`
/// is the radius of the largest disk around the device that stays inside the
/// area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceGeometry {
    pub u: f64,
    pub v: f64,
    pub r_wall: f64,
}

impl DeviceGeometry {
    pub fn new(device: &Device, area: &Area) -> Self {
        let dx = device.x.max(area.length - device.x);
        let dy = device.y.max(area.height - device.y);
        let r_wall = device
            .x
            .min(area.length - device.x)
            .min(device.y)
            .min(area.height - device.y);
        DeviceGeometry {
            u: dx * dx,
            v: dy * dy,
            r_wall,
        }
    }
}

/// The spatial ground truth every computation reads: an area plus an ordered
/// list of devices with dense ids `0..N-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeploymentWire", into = "DeploymentWire")]
pub struct Deployment {
    area: Area,
    devices: Vec<Device>,
}

/// Wire form: `{"L":…, "H":…, "devices":[{"x":…, "y":…}, …]}`.
#[derive(Serialize, Deserialize)]
struct DeploymentWire {
    #[serde(flatten)]
    area: Area,
    devices: Vec<Coords>,
}

#[derive(Serialize, Deserialize)]
struct Coords {
    x: f64,
    y: f64,
}

impl TryFrom<DeploymentWire> for Deployment {
    type Error = ModelError;

    fn try_from(wire: DeploymentWire) -> Result<Self> {
        let devices = wire
            .devices
            .iter()
            .enumerate()
            .map(|(id, c)| Device { id, x: c.x, y: c.y })
            .collect();
        Deployment::new(wire.area, devices)
    }
}

impl From<Deployment> for DeploymentWire {
    fn from(dep: Deployment) -> Self {
        DeploymentWire {
            area: dep.area,
            devices: dep
                .devices
                .iter()
                .map(|d| Coords { x: d.x, y: d.y })
                .collect(),
        }
    }
}

impl Deployment {
    pub fn new(area: Area, devices: Vec<Device>) -> Result<Self> {
        if devices.is_empty() {
            return Err(ModelError::invalid("a deployment needs at least one device"));
        }
        for (i, d) in devices.iter().enumerate() {
            if d.id != i {
                return Err(ModelError::invalid(format!(
                    "device ids must be dense and ordered: expected {i}, got {}",
                    d.id
                )));
            }
            if !area.contains(d.x, d.y) {
                return Err(ModelError::invalid(format!(
                    "device {i} at ({}, {}) lies outside the {} x {} area",
                    d.x, d.y, area.length, area.height
                )));
            }
        }
        Ok(Deployment { area, devices })
    }

    pub fn area(&self) -> &Area {
        &self.area
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn geometry(&self, id: usize) -> DeviceGeometry {
        DeviceGeometry::new(&self.devices[id], &self.area)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("deployment serializes infallibly")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ModelError::Serialization(e.to_string()))
    }
}

/// Draw `n` device positions i.i.d. uniform over the area.
///
/// Bitwise reproducible: the same `(area, n, seed)` always yields the same
/// deployment.
pub fn generate_deployment(area: Area, n: usize, seed: u64) -> Result<Deployment> {
    if n == 0 {
        return Err(ModelError::invalid("cannot generate a deployment of 0 devices"));
    }
    let mut rng = rng_from_seed(seed);
    let devices = (0..n)
        .map(|id| {
            let x = rng.random_range(0.0..area.length);
            let y = rng.random_range(0.0..area.height);
            Device { id, x, y }
        })
        .collect();
    Deployment::new(area, devices)
}

/// Draw one event epicenter uniform over the area.
pub fn sample_event_point<R: Rng>(area: &Area, rng: &mut R) -> EventPoint {
    EventPoint {
        x: rng.random_range(0.0..area.length),
        y: rng.random_range(0.0..area.height),
    }
}
