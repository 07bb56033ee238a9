use std::fmt;
use std::sync::Arc;

use annulus_core::{mat, LiftMap, LiftPoint, Mat2, Point};
use cf_arith::{BigInt, BigRational};
use serde_json::{json, Value};

use crate::prim::{Primitive, PrimitiveRegistry};
use crate::rotation::Rotation;
use crate::{MapError, Result};

enum Node {
    Identity,
    Prim(Arc<dyn Primitive>),
    /// `outer ∘ inner`.
    Compose(AnnulusMap, AnnulusMap),
    Inverse(AnnulusMap),
    /// `base^n` evaluated through a balanced tree.
    Iterate {
        base: AnnulusMap,
        n: i64,
        tree: AnnulusMap,
    },
}

/// An annulus diffeomorphism with a distinguished lift `T^offset ∘ node`.
#[derive(Clone)]
pub struct AnnulusMap {
    node: Arc<Node>,
    offset: i64,
}

impl fmt::Debug for AnnulusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_json() {
            Ok(v) => write!(f, "AnnulusMap({v})"),
            Err(_) => write!(f, "AnnulusMap(<{} primitives>, offset {})", self.primitive_count(), self.offset),
        }
    }
}

impl AnnulusMap {
    fn from_node(node: Node, offset: i64) -> Self {
        Self { node: Arc::new(node), offset }
    }

    pub fn identity() -> Self {
        Self::from_node(Node::Identity, 0)
    }

    /// Deck transformation `T^k`.
    pub fn deck(k: i64) -> Self {
        Self::from_node(Node::Identity, k)
    }

    /// `R_t` with lift `x ↦ x + t`.
    pub fn rotation(t: f64) -> Self {
        let (r, k) = Rotation::new(t);
        Self::primitive(Arc::new(r)).shifted(k)
    }

    /// `R_t` for an exact rational `t`, lift `x ↦ x + t`.
    pub fn rotation_exact(t: &BigRational) -> Self {
        let (r, k) = Rotation::exact(t);
        Self::primitive(Arc::new(r)).shifted(k)
    }

    pub fn primitive(p: Arc<dyn Primitive>) -> Self {
        Self::from_node(Node::Prim(p), 0)
    }

    pub fn from_prim<P: Primitive + 'static>(p: P) -> Self {
        Self::primitive(Arc::new(p))
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `T^k ∘ self`.
    pub fn shifted(&self, k: i64) -> Self {
        Self { node: self.node.clone(), offset: self.offset + k }
    }

    /// Same map with lift offset replaced.
    pub fn with_offset(&self, k: i64) -> Self {
        Self { node: self.node.clone(), offset: k }
    }

    fn stripped(&self) -> Self {
        self.with_offset(0)
    }

    pub fn as_rotation(&self) -> Option<&Rotation> {
        match &*self.node {
            Node::Prim(p) => p.as_rotation(),
            _ => None,
        }
    }

    /// Lift translation amount if the map is a rigid rotation or a deck shift.
    pub fn translation(&self) -> Option<f64> {
        if self.is_identity_node() {
            return Some(self.offset as f64);
        }
        self.as_rotation().map(|r| r.amount() + self.offset as f64)
    }

    /// Exact lift translation, when the rotation amount is exact.
    pub fn translation_exact(&self) -> Option<BigRational> {
        let off = BigRational::from_integer(BigInt::from(self.offset));
        if self.is_identity_node() {
            return Some(off);
        }
        self.as_rotation().and_then(|r| r.exact_amount()).map(|t| t + off)
    }

    pub fn is_identity_node(&self) -> bool {
        matches!(&*self.node, Node::Identity)
    }

    pub fn inverse(&self) -> Self {
        match &*self.node {
            Node::Identity => Self::deck(-self.offset),
            Node::Inverse(m) => m.shifted(-self.offset),
            Node::Prim(p) if p.as_rotation().is_some() => {
                let r = p.as_rotation().unwrap();
                let (neg, k) = r.times(-1);
                Self::primitive(Arc::new(neg)).shifted(k - self.offset)
            }
            _ => Self::from_node(Node::Inverse(self.stripped()), -self.offset),
        }
    }

    pub fn apply(&self, p: LiftPoint) -> LiftPoint {
        self.run(p, false)
    }

    pub fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        self.run(p, true)
    }

    pub fn eval(&self, p: Point) -> Point {
        self.apply(p.lift()).project()
    }

    fn run(&self, mut p: LiftPoint, inverse: bool) -> LiftPoint {
        let mut stack: Vec<(&AnnulusMap, bool)> = Vec::with_capacity(16);
        stack.push((self, inverse));
        while let Some((m, inv)) = stack.pop() {
            // Deck shifts commute with every node, so the offset can be applied first.
            p = p.deck(if inv { -m.offset } else { m.offset });
            match &*m.node {
                Node::Identity => {}
                Node::Prim(q) => p = if inv { q.apply_inverse(p) } else { q.apply(p) },
                Node::Compose(o, i) => {
                    if inv {
                        stack.push((i, true));
                        stack.push((o, true));
                    } else {
                        stack.push((o, false));
                        stack.push((i, false));
                    }
                }
                Node::Inverse(x) => stack.push((x, !inv)),
                Node::Iterate { tree, .. } => stack.push((tree, inv)),
            }
        }
        p
    }

    /// Chain-rule Jacobian of the lift at `p`, together with the image point.
    pub fn apply_with_jacobian(&self, mut p: LiftPoint) -> (LiftPoint, Mat2) {
        let mut jac = mat::IDENTITY;
        let mut stack: Vec<(&AnnulusMap, bool)> = Vec::with_capacity(16);
        stack.push((self, false));
        while let Some((m, inv)) = stack.pop() {
            p = p.deck(if inv { -m.offset } else { m.offset });
            match &*m.node {
                Node::Identity => {}
                Node::Prim(q) => {
                    if inv {
                        let z = q.apply_inverse(p);
                        jac = mat::mul(&mat::inv(&q.jacobian(z)), &jac);
                        p = z;
                    } else {
                        jac = mat::mul(&q.jacobian(p), &jac);
                        p = q.apply(p);
                    }
                }
                Node::Compose(o, i) => {
                    if inv {
                        stack.push((i, true));
                        stack.push((o, true));
                    } else {
                        stack.push((o, false));
                        stack.push((i, false));
                    }
                }
                Node::Inverse(x) => stack.push((x, !inv)),
                Node::Iterate { tree, .. } => stack.push((tree, inv)),
            }
        }
        (p, jac)
    }

    pub fn jacobian(&self, p: LiftPoint) -> Mat2 {
        self.apply_with_jacobian(p).1
    }

    fn fold<T, F: Fn(&dyn Primitive) -> T + Copy, G: Fn(T, T) -> T + Copy>(&self, leaf: F, join: G, unit: T) -> T
    where
        T: Copy,
    {
        match &*self.node {
            Node::Identity => unit,
            Node::Prim(p) => leaf(p.as_ref()),
            Node::Compose(o, i) => join(o.fold(leaf, join, unit), i.fold(leaf, join, unit)),
            Node::Inverse(m) => m.fold(leaf, join, unit),
            Node::Iterate { base, .. } => base.fold(leaf, join, unit),
        }
    }

    /// Whether every primitive has an analytic Jacobian.
    pub fn closed_form(&self) -> bool {
        self.fold(|p| p.closed_form(), |a, b| a && b, true)
    }

    /// Whether every primitive preserves area exactly.
    pub fn area_preserving(&self) -> bool {
        self.fold(|p| p.area_preserving(), |a, b| a && b, true)
    }

    pub fn isotopic_to_identity(&self) -> bool {
        self.fold(|p| p.isotopic_to_identity(), |a, b| a && b, true)
    }

    /// Primitive count of the expanded expression (iterates count `|n|` copies).
    pub fn primitive_count(&self) -> u64 {
        match &*self.node {
            Node::Identity => 0,
            Node::Prim(_) => 1,
            Node::Compose(o, i) => o.primitive_count() + i.primitive_count(),
            Node::Inverse(m) => m.primitive_count(),
            Node::Iterate { base, n, .. } => base.primitive_count() * n.unsigned_abs(),
        }
    }

    /// Nesting depth of the evaluation tree.
    pub fn depth(&self) -> usize {
        match &*self.node {
            Node::Identity | Node::Prim(_) => 1,
            Node::Compose(o, i) => 1 + o.depth().max(i.depth()),
            Node::Inverse(m) => 1 + m.depth(),
            Node::Iterate { tree, .. } => 1 + tree.depth(),
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut v = match &*self.node {
            Node::Identity => json!({ "op": "identity" }),
            Node::Prim(p) => {
                let params = p.params().ok_or_else(|| MapError::NotSerialisable(p.tag().to_string()))?;
                json!({ "op": "primitive", "tag": p.tag(), "params": params })
            }
            Node::Compose(o, i) => json!({ "op": "compose", "outer": o.to_json()?, "inner": i.to_json()? }),
            Node::Inverse(m) => json!({ "op": "inverse", "of": m.to_json()? }),
            Node::Iterate { base, n, .. } => json!({ "op": "iterate", "of": base.to_json()?, "n": n }),
        };
        if self.offset != 0 {
            v["offset"] = json!(self.offset);
        }
        Ok(v)
    }

    pub fn from_json(v: &Value, reg: &PrimitiveRegistry) -> Result<Self> {
        let op = v.get("op").and_then(Value::as_str).ok_or_else(|| MapError::Malformed("missing `op`".into()))?;
        let offset = match v.get("offset") {
            None => 0,
            Some(o) => o.as_i64().ok_or_else(|| MapError::Malformed("`offset` must be an integer".into()))?,
        };
        let child = |k: &str| -> Result<AnnulusMap> {
            AnnulusMap::from_json(v.get(k).ok_or_else(|| MapError::Malformed(format!("`{op}` needs `{k}`")))?, reg)
        };
        let m = match op {
            "identity" => AnnulusMap::identity(),
            "primitive" => {
                let tag = v.get("tag").and_then(Value::as_str).ok_or_else(|| MapError::Malformed("missing `tag`".into()))?;
                AnnulusMap::primitive(reg.build(tag, v.get("params").unwrap_or(&Value::Null))?)
            }
            "compose" => compose(&child("outer")?, &child("inner")?),
            "inverse" => child("of")?.inverse(),
            "iterate" => {
                let n = v.get("n").and_then(Value::as_i64).ok_or_else(|| MapError::Malformed("`iterate` needs integer `n`".into()))?;
                iterate(&child("of")?, n)
            }
            other => return Err(MapError::Malformed(format!("unknown op `{other}`"))),
        };
        Ok(m.shifted(offset))
    }
}

impl LiftMap for AnnulusMap {
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        AnnulusMap::apply(self, p)
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        AnnulusMap::apply_inverse(self, p)
    }
    fn jacobian(&self, p: LiftPoint) -> Option<Mat2> {
        self.closed_form().then(|| AnnulusMap::jacobian(self, p))
    }
    fn inverse_jacobian(&self, p: LiftPoint) -> Option<Mat2> {
        self.closed_form().then(|| AnnulusMap::jacobian(&self.inverse(), p))
    }
}

/// `f ∘ g`; lift offsets add.
pub fn compose(f: &AnnulusMap, g: &AnnulusMap) -> AnnulusMap {
    let k = f.offset + g.offset;
    if f.is_identity_node() {
        return g.with_offset(k);
    }
    if g.is_identity_node() {
        return f.with_offset(k);
    }
    if let (Some(a), Some(b)) = (f.as_rotation(), g.as_rotation()) {
        let (r, carry) = a.plus(b);
        return AnnulusMap::primitive(Arc::new(r)).shifted(k + carry);
    }
    AnnulusMap::from_node(Node::Compose(f.stripped(), g.stripped()), k)
}

/// `f^n` as a balanced tree of depth `O(log |n|)`.
pub fn iterate(f: &AnnulusMap, n: i64) -> AnnulusMap {
    if n == 0 {
        return AnnulusMap::identity();
    }
    if n < 0 {
        return iterate(&f.inverse(), -n);
    }
    if f.is_identity_node() {
        return AnnulusMap::deck(f.offset * n);
    }
    if let Some(r) = f.as_rotation() {
        let (rn, carry) = r.times(n);
        return AnnulusMap::primitive(Arc::new(rn)).shifted(carry + f.offset * n);
    }
    if n == 1 {
        return f.clone();
    }
    let base = f.stripped();
    let tree = balanced(&base, n as u64);
    AnnulusMap::from_node(Node::Iterate { base, n, tree }, f.offset * n)
}

fn balanced(f: &AnnulusMap, n: u64) -> AnnulusMap {
    if n == 1 {
        return f.clone();
    }
    let half = balanced(f, n / 2);
    let sq = AnnulusMap::from_node(Node::Compose(half.clone(), half), 0);
    if n % 2 == 1 {
        AnnulusMap::from_node(Node::Compose(f.clone(), sq), 0)
    } else {
        sq
    }
}

/// `f^n` as a left fold `f ∘ (f ∘ (… ∘ f))`, kept for cross-checks.
pub fn iterate_naive(f: &AnnulusMap, n: i64) -> AnnulusMap {
    let step = if n < 0 { f.inverse() } else { f.clone() };
    let mut acc = AnnulusMap::identity();
    for _ in 0..n.unsigned_abs() {
        acc = AnnulusMap::from_node(Node::Compose(step.stripped(), acc.stripped()), acc.offset + step.offset);
    }
    acc
}

/// `det Df(p)` from the chain-rule Jacobian.
pub fn jacobian_det(f: &AnnulusMap, p: Point) -> f64 {
    mat::det(&f.jacobian(p.lift()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{HamiltonianBump, Twist};

    fn bump() -> AnnulusMap {
        AnnulusMap::from_prim(HamiltonianBump::new(0.4, 0.5, 0.15, 0.6, 1).unwrap())
    }

    #[test]
    fn rotations_fold() {
        let f = compose(&AnnulusMap::rotation(0.3), &AnnulusMap::rotation(0.9));
        assert!(f.as_rotation().is_some());
        let p = LiftPoint::new(0.1, 0.2);
        assert!((f.apply(p).x - 1.3).abs() < 1e-15);
        let q = BigRational::new(2.into(), 5.into());
        let r5 = iterate(&AnnulusMap::rotation_exact(&q), 5);
        assert_eq!(r5.apply(p), LiftPoint::new(2.1, 0.2));
    }

    #[test]
    fn twists_add() {
        let t1 = AnnulusMap::from_prim(Twist::new(vec![0.1, 0.2]));
        let t2 = AnnulusMap::from_prim(Twist::new(vec![0.0, 0.0, 0.3]));
        let f = compose(&t1, &t2);
        let p = LiftPoint::new(0.25, 0.5);
        assert!((f.apply(p).x - (0.25 + 0.1 + 0.1 + 0.075)).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_offsets() {
        let f = compose(&bump(), &AnnulusMap::rotation(1.25)).shifted(2);
        let p = LiftPoint::new(0.37, 0.48);
        assert!(f.inverse().apply(f.apply(p)).dist(p) < 1e-14);
        assert!(f.apply_inverse(f.apply(p)).dist(p) < 1e-14);
        assert_eq!(f.inverse().inverse().offset(), f.offset());
        assert_eq!(AnnulusMap::deck(3).inverse().offset(), -3);
    }

    #[test]
    fn balanced_matches_naive() {
        let f = compose(&bump(), &AnnulusMap::rotation(0.318));
        let p = LiftPoint::new(0.27, 0.53);
        for n in [1, 2, 7, 64, 100] {
            let a = iterate(&f, n);
            let b = iterate_naive(&f, n);
            assert!(a.apply(p).dist(b.apply(p)) < 1e-12, "n = {n}");
            assert!(a.depth() <= 3 + 2 * (64 - (n as u64).leading_zeros() as usize));
        }
        let back = iterate(&f, -5);
        assert!(back.apply(iterate(&f, 5).apply(p)).dist(p) < 1e-13);
        assert_eq!(iterate(&f, 0).apply(p), p);
    }

    #[test]
    fn jacobian_chain_rule() {
        let f = compose(&bump(), &compose(&AnnulusMap::from_prim(Twist::linear(0.2)), &bump().inverse()));
        let p = LiftPoint::new(0.41, 0.47);
        let j = f.jacobian(p);
        let fd = crate::fd_jacobian(|z| f.apply(z), p, 1e-6);
        assert!(mat::max_abs(&mat::sub(&j, &fd)) < 1e-7);
        assert!((mat::det(&j) - 1.0).abs() < 1e-12);
        assert_eq!(jacobian_det(&AnnulusMap::identity(), Point::new(0.3, 0.3)), 1.0);
    }

    #[test]
    fn json_roundtrip() {
        let q = BigRational::new(3.into(), 11.into());
        let f = compose(&iterate(&bump(), 3), &AnnulusMap::rotation_exact(&q)).shifted(-1);
        let v = f.to_json().unwrap();
        let g = AnnulusMap::from_json(&v, &PrimitiveRegistry::default()).unwrap();
        let p = LiftPoint::new(0.123, 0.456);
        assert_eq!(f.apply(p), g.apply(p));
        assert_eq!(g.to_json().unwrap(), v);
        let bad = json!({ "op": "primitive", "tag": "nope", "params": {} });
        assert!(matches!(AnnulusMap::from_json(&bad, &PrimitiveRegistry::default()), Err(MapError::UnknownPrimitive(_))));
    }
}
