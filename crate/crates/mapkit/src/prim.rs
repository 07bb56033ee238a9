use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use annulus_core::{LiftPoint, Mat2};
use serde_json::Value;

use crate::{MapError, Result};

/// An invertible building block acting on the universal cover.
pub trait Primitive: Send + Sync + fmt::Debug {
    /// Registry tag used for serialisation.
    fn tag(&self) -> &'static str;

    fn apply(&self, p: LiftPoint) -> LiftPoint;

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint;

    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        fd_jacobian(|q| self.apply(q), p, 1e-6)
    }

    /// Whether [`Primitive::jacobian`] is analytic rather than a finite difference.
    fn closed_form(&self) -> bool {
        false
    }

    fn area_preserving(&self) -> bool {
        false
    }

    /// Parameters for the registry factory; `None` if the primitive is not serialisable.
    fn params(&self) -> Option<Value> {
        None
    }

    fn isotopic_to_identity(&self) -> bool {
        true
    }

    /// Pure rotation amount, used to fold rotation chains exactly.
    fn as_rotation(&self) -> Option<&crate::Rotation> {
        None
    }
}

/// Central-difference Jacobian.
pub fn fd_jacobian<F: Fn(LiftPoint) -> LiftPoint>(f: F, p: LiftPoint, h: f64) -> Mat2 {
    let xp = f(LiftPoint::new(p.x + h, p.y));
    let xm = f(LiftPoint::new(p.x - h, p.y));
    let yp = f(LiftPoint::new(p.x, p.y + h));
    let ym = f(LiftPoint::new(p.x, p.y - h));
    let s = 0.5 / h;
    [[(xp.x - xm.x) * s, (yp.x - ym.x) * s], [(xp.y - xm.y) * s, (yp.y - ym.y) * s]]
}

type Factory = fn(&Value) -> Result<Arc<dyn Primitive>>;

/// Name-to-constructor table for deserialising primitives.
pub struct PrimitiveRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for PrimitiveRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("rotation", crate::rotation::from_params);
        r.register("twist", crate::twist::from_params);
        r.register("hamiltonian_bump", crate::bump::from_params);
        r.register("grid_map", crate::grid::from_params);
        r
    }
}

impl PrimitiveRegistry {
    pub fn register(&mut self, tag: &str, f: Factory) {
        self.factories.insert(tag.to_string(), f);
    }

    pub fn tags(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, tag: &str, params: &Value) -> Result<Arc<dyn Primitive>> {
        let f = self.factories.get(tag).ok_or_else(|| MapError::UnknownPrimitive(tag.to_string()))?;
        f(params)
    }
}

pub(crate) fn get_f64(tag: &str, v: &Value, key: &str) -> Result<f64> {
    v.get(key).and_then(Value::as_f64).ok_or_else(|| MapError::BadParams { tag: tag.into(), msg: format!("missing number `{key}`") })
}

pub(crate) fn bad(tag: &str, msg: impl Into<String>) -> MapError {
    MapError::BadParams { tag: tag.into(), msg: msg.into() }
}
