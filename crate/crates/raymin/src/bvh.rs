//! Software emulation of the RT core: a bounding-box hierarchy over
//! triangles, closest-hit traversal, and the ray/triangle test.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Triangle;
use crate::math::{Aabb, Real, Vec3};

/// Parametric ray. Every query this engine launches travels along +X;
/// the intersection routine stays general regardless.
#[derive(Debug, Clone, Copy)]
pub struct Ray<T: Real> {
    pub origin: Vec3<T>,
    pub dir: Vec3<T>,
    pub t_min: T,
    pub t_max: T,
}

impl<T: Real> Ray<T> {
    /// Ray from `origin` along +X over `[0, inf)`.
    pub fn axis_x(origin: Vec3<T>) -> Self {
        Ray {
            origin,
            dir: Vec3::new(T::ONE, T::ZERO, T::ZERO),
            t_min: T::ZERO,
            t_max: T::INFINITY,
        }
    }
}

/// Closest-hit record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<T: Real> {
    /// Distance from the ray origin to the hit plane (the payload).
    pub t: T,
    /// Element index, or block index for block-minimum triangles.
    pub primitive_id: u32,
    /// Position in the scene's triangle array; last tie-break key so
    /// traversal order can never influence the result.
    pub triangle_index: u32,
}

/// Möller–Trumbore intersection with the edge rule the scene geometry
/// requires: the two leg edges through `v0` (where one barycentric
/// coordinate is exactly zero) do not count as hits, the hypotenuse
/// does. Rays exactly on a leg are the queries whose range excludes the
/// element — both sides of that comparison come out of the same lattice
/// arithmetic, so the zero is exact, not an epsilon call. The
/// hypotenuse lies outside the valid query lattice entirely.
///
/// For triangles perpendicular to the travel axis the returned `t` is
/// the exact plane offset rather than the generic triple-product
/// quotient; they agree algebraically and the exact form keeps
/// `theta + t` within 1 ulp of the stored value.
pub fn intersect_ray_triangle<T: Real>(ray: &Ray<T>, tri: &Triangle<T>) -> Option<T> {
    let e1 = tri.v1 - tri.v0;
    let e2 = tri.v2 - tri.v0;
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det == T::ZERO {
        return None; // degenerate triangle or parallel ray
    }
    let inv = T::ONE / det;
    let s = ray.origin - tri.v0;
    let u = s.dot(p) * inv; // weight of v1; exactly 0 on the v0-v2 leg
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv; // weight of v2; exactly 0 on the v0-v1 leg
    if !(u > T::ZERO) || !(v > T::ZERO) || !(u + v <= T::ONE) {
        return None;
    }
    let t = if e1.x == T::ZERO && e2.x == T::ZERO && ray.dir.y == T::ZERO && ray.dir.z == T::ZERO
    {
        (tri.v0.x - ray.origin.x) / ray.dir.x
    } else {
        e2.dot(q) * inv
    };
    if t >= ray.t_min && t <= ray.t_max {
        Some(t)
    } else {
        None
    }
}

#[inline]
fn better<T: Real>(t: T, primitive_id: u32, triangle_index: u32, best: &Option<Hit<T>>) -> bool {
    match best {
        None => true,
        Some(b) => {
            t < b.t
                || (t == b.t
                    && (primitive_id < b.primitive_id
                        || (primitive_id == b.primitive_id && triangle_index < b.triangle_index)))
        }
    }
}

/// Reference closest hit: scan every triangle, keep the minimal
/// `(t, primitive_id, triangle_index)`. The traversal below must match
/// this bitwise.
pub fn closest_hit_linear<T: Real>(triangles: &[Triangle<T>], ray: &Ray<T>) -> Option<Hit<T>> {
    let mut best: Option<Hit<T>> = None;
    for (ti, tri) in triangles.iter().enumerate() {
        if let Some(t) = intersect_ray_triangle(ray, tri) {
            if better(t, tri.primitive_id, ti as u32, &best) {
                best = Some(Hit {
                    t,
                    primitive_id: tri.primitive_id,
                    triangle_index: ti as u32,
                });
            }
        }
    }
    best
}

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub enum NodeKind {
    Internal { left: u32, right: u32 },
    Leaf { start: u32, len: u32 },
}

#[derive(Debug, Clone)]
pub struct BvhNode<T: Real> {
    pub aabb: Aabb<T>,
    pub kind: NodeKind,
}

/// Binary BVH built by median split on the longest centroid axis,
/// leaves of at most [`LEAF_SIZE`] triangles. The build is
/// single-threaded and fully deterministic: splits order by
/// `(centroid, triangle index)` and leaf runs are sorted by index.
#[derive(Debug, Clone)]
pub struct Bvh<T: Real> {
    nodes: Vec<BvhNode<T>>,
    /// Triangle indices permuted so each leaf is a contiguous run.
    order: Vec<u32>,
}

struct BuildItem<T: Real> {
    aabb: Aabb<T>,
    centroid: Vec3<T>,
    index: u32,
}

pub fn build_bvh<T: Real>(triangles: &[Triangle<T>]) -> Result<Bvh<T>> {
    Bvh::build(triangles)
}

impl<T: Real> Bvh<T> {
    pub fn build(triangles: &[Triangle<T>]) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Config(
                "cannot build an acceleration structure over zero triangles".into(),
            ));
        }
        let mut items: Vec<BuildItem<T>> = triangles
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut aabb = Aabb::empty();
                aabb.grow_point(t.v0);
                aabb.grow_point(t.v1);
                aabb.grow_point(t.v2);
                BuildItem {
                    aabb,
                    centroid: Vec3::new(
                        aabb.min.x + aabb.max.x,
                        aabb.min.y + aabb.max.y,
                        aabb.min.z + aabb.max.z,
                    ),
                    index: i as u32,
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len().div_ceil(LEAF_SIZE));
        Self::build_node(&mut nodes, &mut items, 0);
        let order: Vec<u32> = items.iter().map(|it| it.index).collect();
        let mut bvh = Bvh { nodes, order };
        bvh.canonicalize_leaves();
        Ok(bvh)
    }

    fn build_node(nodes: &mut Vec<BvhNode<T>>, items: &mut [BuildItem<T>], base: usize) -> u32 {
        let mut aabb = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for it in items.iter() {
            aabb.grow(&it.aabb);
            cbounds.grow_point(it.centroid);
        }
        let me = nodes.len() as u32;
        nodes.push(BvhNode {
            aabb,
            kind: NodeKind::Leaf { start: 0, len: 0 },
        });
        if items.len() <= LEAF_SIZE {
            nodes[me as usize].kind = NodeKind::Leaf {
                start: base as u32,
                len: items.len() as u32,
            };
            return me;
        }
        let axis = cbounds.longest_axis();
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| {
            a.centroid
                .axis(axis)
                .partial_cmp(&b.centroid.axis(axis))
                .unwrap_or(Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        let (left_items, right_items) = items.split_at_mut(mid);
        let left = Self::build_node(nodes, left_items, base);
        let right = Self::build_node(nodes, right_items, base + mid);
        nodes[me as usize].kind = NodeKind::Internal { left, right };
        me
    }

    fn canonicalize_leaves(&mut self) {
        for node in &self.nodes {
            if let NodeKind::Leaf { start, len } = node.kind {
                self.order[start as usize..(start + len) as usize].sort_unstable();
            }
        }
    }

    #[inline]
    pub fn nodes(&self) -> &[BvhNode<T>] {
        &self.nodes
    }

    /// Closest hit over the triangle set this BVH was built for.
    ///
    /// Children are visited near-first by box entry distance; a subtree
    /// is pruned only when its entry distance strictly exceeds the
    /// current best `t`, so equal-`t` ties are still found and resolved
    /// to the smallest primitive id.
    pub fn closest_hit(&self, triangles: &[Triangle<T>], ray: &Ray<T>) -> Option<Hit<T>> {
        self.traverse(triangles, ray, &mut |_| {})
    }

    /// Same traversal, reporting every visited node (for the pruning
    /// soundness checks).
    pub fn closest_hit_traced(
        &self,
        triangles: &[Triangle<T>],
        ray: &Ray<T>,
        visited: &mut Vec<u32>,
    ) -> Option<Hit<T>> {
        self.traverse(triangles, ray, &mut |n| visited.push(n))
    }

    fn traverse<F: FnMut(u32)>(
        &self,
        triangles: &[Triangle<T>],
        ray: &Ray<T>,
        on_visit: &mut F,
    ) -> Option<Hit<T>> {
        let mut best: Option<Hit<T>> = None;
        // Depth is bounded by the median split (~log2 n levels, one
        // pending sibling per level); 96 covers the 2^29 primitive cap
        // with slack, without a heap allocation per ray.
        let mut stack = TraversalStack::new();
        if let Some(entry) = entry_t(&self.nodes[0].aabb, ray) {
            stack.push((0, entry));
        }
        while let Some((idx, entry)) = stack.pop() {
            if let Some(b) = &best {
                if entry > b.t {
                    continue;
                }
            }
            on_visit(idx);
            match self.nodes[idx as usize].kind {
                NodeKind::Leaf { start, len } => {
                    for &ti in &self.order[start as usize..(start + len) as usize] {
                        let tri = &triangles[ti as usize];
                        if let Some(t) = intersect_ray_triangle(ray, tri) {
                            if better(t, tri.primitive_id, ti, &best) {
                                best = Some(Hit {
                                    t,
                                    primitive_id: tri.primitive_id,
                                    triangle_index: ti,
                                });
                            }
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    let el = entry_t(&self.nodes[left as usize].aabb, ray);
                    let er = entry_t(&self.nodes[right as usize].aabb, ray);
                    // push the farther child first so the nearer pops first
                    match (el, er) {
                        (Some(a), Some(b)) => {
                            if a <= b {
                                stack.push((right, b));
                                stack.push((left, a));
                            } else {
                                stack.push((left, a));
                                stack.push((right, b));
                            }
                        }
                        (Some(a), None) => stack.push((left, a)),
                        (None, Some(b)) => stack.push((right, b)),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    /// Longest root-to-leaf path, in nodes.
    pub fn max_depth(&self) -> usize {
        fn depth<T: Real>(bvh: &Bvh<T>, idx: u32) -> usize {
            match bvh.nodes[idx as usize].kind {
                NodeKind::Leaf { .. } => 1,
                NodeKind::Internal { left, right } => {
                    1 + depth(bvh, left).max(depth(bvh, right))
                }
            }
        }
        depth(self, 0)
    }

    /// Structural invariants: children contained in parents, leaves
    /// partition the triangle set, leaf boxes contain their triangles.
    pub fn validate(&self, triangles: &[Triangle<T>]) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.order.len()];
        if self.order.len() != triangles.len() {
            return Err("order length mismatch".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Internal { left, right } => {
                    for child in [left, right] {
                        let c = &self.nodes[child as usize];
                        if !node.aabb.contains(&c.aabb) {
                            return Err(format!("node {i}: child {child} escapes parent box"));
                        }
                    }
                }
                NodeKind::Leaf { start, len } => {
                    for &ti in &self.order[start as usize..(start + len) as usize] {
                        if seen[ti as usize] {
                            return Err(format!("triangle {ti} in two leaves"));
                        }
                        seen[ti as usize] = true;
                        let t = &triangles[ti as usize];
                        let mut b = Aabb::empty();
                        b.grow_point(t.v0);
                        b.grow_point(t.v1);
                        b.grow_point(t.v2);
                        if !node.aabb.contains(&b) {
                            return Err(format!("leaf {i} does not contain triangle {ti}"));
                        }
                    }
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err("leaves do not cover all triangles".into())
        }
    }
}

struct TraversalStack<T: Real> {
    items: [(u32, T); 96],
    top: usize,
}

impl<T: Real> TraversalStack<T> {
    #[inline]
    fn new() -> Self {
        TraversalStack {
            items: [(0, T::ZERO); 96],
            top: 0,
        }
    }

    #[inline]
    fn push(&mut self, item: (u32, T)) {
        self.items[self.top] = item;
        self.top += 1;
    }

    #[inline]
    fn pop(&mut self) -> Option<(u32, T)> {
        if self.top == 0 {
            None
        } else {
            self.top -= 1;
            Some(self.items[self.top])
        }
    }
}

/// Entry distance of the ray into the box, `None` when it misses.
/// Zero-direction axes test containment directly (inclusive bounds);
/// the test is conservative, the triangle test decides actual hits.
fn entry_t<T: Real>(aabb: &Aabb<T>, ray: &Ray<T>) -> Option<T> {
    let mut tmin = ray.t_min;
    let mut tmax = ray.t_max;
    for axis in 0..3 {
        let o = ray.origin.axis(axis);
        let d = ray.dir.axis(axis);
        if d == T::ZERO {
            if o < aabb.min.axis(axis) || o > aabb.max.axis(axis) {
                return None;
            }
            continue;
        }
        let inv = T::ONE / d;
        let mut t0 = (aabb.min.axis(axis) - o) * inv;
        let mut t1 = (aabb.max.axis(axis) - o) * inv;
        if inv < T::ZERO {
            std::mem::swap(&mut t0, &mut t1);
        }
        tmin = tmin.max2(t0);
        tmax = tmax.min2(t1);
        if tmin > tmax {
            return None;
        }
    }
    Some(tmin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::InputArray;
    use crate::geometry::{gen_triangle, lattice};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn arr(values: &[f32]) -> InputArray {
        InputArray::from_f32(values.to_vec()).unwrap()
    }

    fn tri(v0: (f32, f32, f32), v1: (f32, f32, f32), v2: (f32, f32, f32)) -> Triangle<f32> {
        Triangle {
            v0: Vec3::new(v0.0, v0.1, v0.2),
            v1: Vec3::new(v1.0, v1.1, v1.2),
            v2: Vec3::new(v2.0, v2.1, v2.2),
            primitive_id: 0,
        }
    }

    #[test]
    fn interior_query_hits_with_plane_distance() {
        // Triangle for i=2 of [5,3,1,9,6,2] (x = 1, theta = 0); the query
        // (2,2) origin is strictly interior, t is the plane offset 1 - theta.
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let t2 = gen_triangle::<f32>(&a, 2);
        let origin = Vec3::new(
            a.theta(),
            lattice::<f32>(2, 6, 0),
            lattice::<f32>(2, 6, 0),
        );
        let t = intersect_ray_triangle(&Ray::axis_x(origin), &t2).unwrap();
        assert_eq!(t, 1.0 - a.theta());
    }

    #[test]
    fn leg_edges_miss_corner_included() {
        // (theta, 0.5, 1/6) is exactly the v0 corner of triangle i=2: the
        // meeting point of the two exclusive legs. It must miss -- this is
        // the border that keeps neighbor queries out.
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let t2 = gen_triangle::<f32>(&a, 2);
        let corner = Vec3::new(a.theta(), 0.5, (1.0f64 / 6.0) as f32);
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(corner), &t2), None);

        // On the vertical leg (L = 0.5): the query (3, r) pattern.
        let on_leg = Vec3::new(a.theta(), 0.5, 0.8);
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(on_leg), &t2), None);
        // On the horizontal leg (R = 1/6): the query (l, 1) pattern.
        let on_leg = Vec3::new(a.theta(), 0.2, (1.0f64 / 6.0) as f32);
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(on_leg), &t2), None);
    }

    #[test]
    fn hypotenuse_is_inclusive() {
        // Dyadic triangle so the boundary point computes u + v == 1 exactly.
        let t = tri((1.0, 0.0, 0.0), (1.0, 0.0, 2.0), (1.0, -2.0, 0.0));
        let mid = Vec3::new(0.0, -1.0, 1.0);
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(mid), &t), Some(1.0));
        // Just beyond the hypotenuse: miss.
        let out = Vec3::new(0.0, -1.0, 1.25);
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(out), &t), None);
    }

    #[test]
    fn origin_outside_misses() {
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let t2 = gen_triangle::<f32>(&a, 2);
        let outside = Vec3::new(a.theta(), 0.9, 0.9); // l > i
        assert_eq!(intersect_ray_triangle(&Ray::axis_x(outside), &t2), None);
    }

    #[test]
    fn degenerate_triangle_never_hits() {
        let t = tri((1.0, 0.5, 0.5), (1.0, 0.5, 0.5), (1.0, -1.0, 0.5));
        let ray = Ray::axis_x(Vec3::new(0.0, 0.25, 0.5));
        assert_eq!(intersect_ray_triangle(&ray, &t), None);
    }

    #[test]
    fn t_range_is_respected() {
        let t = tri((1.0, 0.0, 0.0), (1.0, 0.0, 2.0), (1.0, -2.0, 0.0));
        let mut ray = Ray::axis_x(Vec3::new(0.0, -0.5, 0.5));
        ray.t_max = 0.5;
        assert_eq!(intersect_ray_triangle(&ray, &t), None);
        ray.t_max = 1.0;
        assert_eq!(intersect_ray_triangle(&ray, &t), Some(1.0));
        // behind the origin
        let behind = Ray::axis_x(Vec3::new(2.0, -0.5, 0.5));
        assert_eq!(intersect_ray_triangle(&behind, &t), None);
    }

    #[test]
    fn single_triangle_leaf_box() {
        let a = arr(&[3.0]);
        let t = gen_triangle::<f32>(&a, 0);
        let bvh = Bvh::build(std::slice::from_ref(&t)).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        let root = &bvh.nodes()[0];
        assert_eq!(root.aabb.min, Vec3::new(3.0, -1.0, -1.0));
        assert_eq!(root.aabb.max, Vec3::new(3.0, 1.0, 2.0));
    }

    #[test]
    fn root_box_spans_value_extent() {
        let a = arr(&[5.0, 3.0, 1.0, 9.0, 6.0, 2.0]);
        let tris: Vec<Triangle<f32>> = (0..6).map(|i| gen_triangle(&a, i)).collect();
        let bvh = Bvh::build(&tris).unwrap();
        assert_eq!(bvh.nodes()[0].aabb.min.x, 1.0);
        assert_eq!(bvh.nodes()[0].aabb.max.x, 9.0);
    }

    #[test]
    fn empty_build_is_an_error() {
        assert!(Bvh::build(&[] as &[Triangle<f32>]).is_err());
    }

    #[test]
    fn depth_bound_and_validity_on_random_scenes() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xb4);
        for _ in 0..40 {
            let n = rng.random_range(1..=512usize);
            let values: Vec<f32> = (0..n).map(|_| rng.random::<f32>()).collect();
            let a = arr(&values);
            let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&a, i)).collect();
            let bvh = Bvh::build(&tris).unwrap();
            bvh.validate(&tris).unwrap();
            let bound = 2 * (n.max(2)).ilog2() as usize + 2;
            assert!(
                bvh.max_depth() <= bound,
                "depth {} over bound {bound} at n={n}",
                bvh.max_depth()
            );
        }
    }

    #[test]
    fn tie_resolves_to_smallest_primitive() {
        let a = arr(&[1.0, 1.0]);
        let tris: Vec<Triangle<f32>> = (0..2).map(|i| gen_triangle(&a, i)).collect();
        let bvh = Bvh::build(&tris).unwrap();
        let origin = Vec3::new(
            a.theta(),
            lattice::<f32>(0, 2, 0),
            lattice::<f32>(1, 2, 0),
        );
        let hit = bvh.closest_hit(&tris, &Ray::axis_x(origin)).unwrap();
        assert_eq!(hit.primitive_id, 0);
        assert_eq!(
            closest_hit_linear(&tris, &Ray::axis_x(origin)).unwrap(),
            hit
        );
    }

    #[test]
    fn traversal_matches_linear_scan_bitwise() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed);
        for _ in 0..30 {
            let n = rng.random_range(1..=128usize);
            let mut values: Vec<f32> = (0..n).map(|_| rng.random::<f32>()).collect();
            for _ in 0..n / 8 {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                values[i] = values[j];
            }
            let a = arr(&values);
            let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&a, i)).collect();
            let bvh = Bvh::build(&tris).unwrap();
            for _ in 0..400 {
                let (y, z) = if rng.random::<bool>() {
                    // on-lattice query points, ties and edges included
                    let l = rng.random_range(0..n) as i64;
                    let r = rng.random_range(0..n) as i64;
                    (lattice::<f32>(l, n, 0), lattice::<f32>(r, n, 0))
                } else {
                    (rng.random::<f32>() * 3.0 - 1.5, rng.random::<f32>() * 3.5 - 1.5)
                };
                let ray = Ray::axis_x(Vec3::new(a.theta(), y, z));
                let fast = bvh.closest_hit(&tris, &ray);
                let slow = closest_hit_linear(&tris, &ray);
                match (fast, slow) {
                    (None, None) => {}
                    (Some(f), Some(s)) => {
                        assert_eq!(f.t.to_bits(), s.t.to_bits());
                        assert_eq!(f.primitive_id, s.primitive_id);
                        assert_eq!(f.triangle_index, s.triangle_index);
                    }
                    other => panic!("hit disagreement: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn pruning_never_skips_a_contending_leaf() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0xacc);
        for _ in 0..20 {
            let n = rng.random_range(8..=256usize);
            let values: Vec<f32> = (0..n).map(|_| rng.random::<f32>()).collect();
            let a = arr(&values);
            let tris: Vec<Triangle<f32>> = (0..n).map(|i| gen_triangle(&a, i)).collect();
            let bvh = Bvh::build(&tris).unwrap();
            for _ in 0..200 {
                let l = rng.random_range(0..n) as i64;
                let r = rng.random_range(l as usize..n) as i64;
                let ray = Ray::axis_x(Vec3::new(
                    a.theta(),
                    lattice::<f32>(l, n, 0),
                    lattice::<f32>(r, n, 0),
                ));
                let mut visited = Vec::new();
                let best = bvh.closest_hit_traced(&tris, &ray, &mut visited);
                let Some(best) = best else { continue };
                // Every unvisited leaf must be ignorable: box missed or
                // entered strictly beyond the final best t.
                for (i, node) in bvh.nodes().iter().enumerate() {
                    if matches!(node.kind, NodeKind::Leaf { .. })
                        && !visited.contains(&(i as u32))
                    {
                        match entry_t(&node.aabb, &ray) {
                            None => {}
                            Some(e) => assert!(
                                e > best.t,
                                "skipped leaf {i} with entry {e} <= best {}",
                                best.t
                            ),
                        }
                    }
                }
            }
        }
    }
}
