use super::{RigidPose, SurfaceMesh, TetMesh, Vec3};
use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold(Self::new(first, first), |b, p| b.including(p)))
    }

    pub fn including(&self, p: &Vec3) -> Self {
        Self::new(self.min.inf(p), self.max.sup(p))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn inflated(&self, margin: f64) -> Self {
        Self::new(self.min.add_scalar(-margin), self.max.add_scalar(margin))
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.contains_point(&other.min) && self.contains_point(&other.max)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    /// Smallest axis-aligned box containing this box after a rigid transform.
    pub fn transformed(&self, pose: &RigidPose) -> Self {
        let center = pose * nalgebra::Point3::from(self.center());
        let rot = pose.rotation.to_rotation_matrix();
        let half = rot.matrix().abs() * self.half_extents();
        Self::new(center.coords - half, center.coords + half)
    }
}

/// Meshes whose elements can be boxed.
pub trait ElementBounds {
    fn element_count(&self) -> usize;
    fn element_aabb(&self, element: usize) -> Aabb;
}

impl ElementBounds for TetMesh {
    fn element_count(&self) -> usize {
        self.num_tets()
    }

    fn element_aabb(&self, element: usize) -> Aabb {
        let v = self.tet_vertices(element);
        Aabb::from_points(v.iter()).expect("four vertices")
    }
}

impl ElementBounds for SurfaceMesh {
    fn element_count(&self) -> usize {
        self.num_triangles()
    }

    fn element_aabb(&self, element: usize) -> Aabb {
        let v = self.triangle_vertices(element);
        Aabb::from_points(v.iter()).expect("three vertices")
    }
}

#[derive(Clone, Debug)]
pub enum BvhNode {
    Leaf { bounds: Aabb, element: usize },
    Internal { bounds: Aabb, left: usize, right: usize },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Internal { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy of axis-aligned boxes in the mesh's body frame.
/// Node 0 is the root.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    leaf_count: usize,
}

impl Bvh {
    pub fn build<M: ElementBounds + ?Sized>(mesh: &M) -> Result<Self> {
        let n = mesh.element_count();
        if n == 0 {
            return Err(Error::EmptyGeometry);
        }
        let boxes: Vec<Aabb> = (0..n).map(|e| mesh.element_aabb(e)).collect();
        let mut items: Vec<(usize, Vec3)> = boxes.iter().map(|b| b.center()).enumerate().collect();
        let mut nodes = Vec::with_capacity(2 * n - 1);
        build_node(&boxes, &mut items, &mut nodes);
        Ok(Self {
            nodes,
            leaf_count: n,
        })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn root(&self) -> &BvhNode {
        &self.nodes[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }
}

fn build_node(boxes: &[Aabb], items: &mut [(usize, Vec3)], nodes: &mut Vec<BvhNode>) -> usize {
    let index = nodes.len();
    if let [(element, _)] = items {
        nodes.push(BvhNode::Leaf {
            bounds: boxes[*element],
            element: *element,
        });
        return index;
    }
    let bounds = items
        .iter()
        .map(|(e, _)| boxes[*e])
        .reduce(|a, b| a.union(&b))
        .expect("non-empty");
    let spread = Aabb::from_points(items.iter().map(|(_, c)| c)).expect("non-empty");
    let axis = (spread.max - spread.min).imax();
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| {
        a.1[axis].total_cmp(&b.1[axis]).then(a.0.cmp(&b.0))
    });
    // Placeholder, patched once both children exist.
    nodes.push(BvhNode::Leaf { bounds, element: 0 });
    let (lo, hi) = items.split_at_mut(mid);
    let left = build_node(boxes, lo, nodes);
    let right = build_node(boxes, hi, nodes);
    nodes[index] = BvhNode::Internal {
        bounds,
        left,
        right,
    };
    index
}

/// Element pairs whose boxes overlap once both hierarchies are posed in the
/// world. The result is a superset of the truly intersecting pairs, sorted,
/// without duplicates.
pub fn candidate_pairs(
    bvh_a: &Bvh,
    pose_a: &RigidPose,
    bvh_b: &Bvh,
    pose_b: &RigidPose,
) -> Vec<(usize, usize)> {
    // Work in A's frame so only B's boxes get inflated by rotation.
    let b_in_a = pose_a.inverse() * pose_b;
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((ia, ib)) = stack.pop() {
        let na = &bvh_a.nodes[ia];
        let nb = &bvh_b.nodes[ib];
        if !na.bounds().intersects(&nb.bounds().transformed(&b_in_a)) {
            continue;
        }
        match (na, nb) {
            (BvhNode::Leaf { element: ea, .. }, BvhNode::Leaf { element: eb, .. }) => {
                out.push((*ea, *eb));
            }
            (BvhNode::Leaf { .. }, BvhNode::Internal { left, right, .. }) => {
                stack.push((ia, *left));
                stack.push((ia, *right));
            }
            (BvhNode::Internal { left, right, .. }, BvhNode::Leaf { .. }) => {
                stack.push((*left, ib));
                stack.push((*right, ib));
            }
            (
                BvhNode::Internal {
                    bounds: ba,
                    left: la,
                    right: ra,
                },
                BvhNode::Internal {
                    bounds: bb,
                    left: lb,
                    right: rb,
                },
            ) => {
                if ba.diagonal() >= bb.diagonal() {
                    stack.push((*la, ib));
                    stack.push((*ra, ib));
                } else {
                    stack.push((ia, *lb));
                    stack.push((ia, *rb));
                }
            }
        }
    }
    out.sort_unstable();
    out
}
