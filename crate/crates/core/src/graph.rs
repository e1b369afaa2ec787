//! Interference graphs: lattice, torus, and random geometric topologies.
//!
//! Nodes are wireless links; an edge means the two links cannot transmit at
//! the same time. Grid links carry integer coordinates `(i, j)` with
//! `i, j in 0..=n` and a parity (`i + j` even or odd); random geometric links
//! carry real positions in a rectangle and interfere iff their distance is
//! below the calibrated range `r`.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

pub type LinkId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GraphKind {
    Lattice,
    Torus,
    RandomGeometric,
    /// Explicit edge list; used for small oracle graphs in tests.
    Custom,
}

#[derive(Clone, Debug)]
pub struct InterferenceGraph {
    kind: GraphKind,
    /// Grid order `n` for lattice/torus (side length is `n + 1`).
    order: Option<usize>,
    adjacency: Vec<Vec<LinkId>>,
    coords: Vec<(f64, f64)>,
    parity: Option<Vec<Parity>>,
    /// Interference range, random-geometric only.
    range: Option<f64>,
}

impl InterferenceGraph {
    /// Lattice interference graph: links at `(i, j)`, edges between links
    /// differing in exactly one coordinate by one. `L = (n + 1)^2`.
    pub fn build_lattice(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config(
                "lattice order must be >= 1 (a single link has no edges; use single_link())",
            ));
        }
        Ok(Self::grid(n, false))
    }

    /// Torus interference graph: the lattice plus wraparound edges so every
    /// link has degree exactly four. Requires `n >= 2`.
    pub fn build_torus(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(
                "torus order must be >= 2 (wraparound would duplicate edges)",
            ));
        }
        Ok(Self::grid(n, true))
    }

    fn grid(n: usize, torus: bool) -> Self {
        let m = n + 1;
        let l = m * m;
        let idx = |i: usize, j: usize| i * m + j;
        let mut adjacency = vec![Vec::with_capacity(4); l];
        let mut coords = Vec::with_capacity(l);
        let mut parity = Vec::with_capacity(l);
        for i in 0..m {
            for j in 0..m {
                coords.push((i as f64, j as f64));
                parity.push(if (i + j) % 2 == 0 { Parity::Even } else { Parity::Odd });
                if i + 1 < m {
                    adjacency[idx(i, j)].push(idx(i + 1, j));
                    adjacency[idx(i + 1, j)].push(idx(i, j));
                }
                if j + 1 < m {
                    adjacency[idx(i, j)].push(idx(i, j + 1));
                    adjacency[idx(i, j + 1)].push(idx(i, j));
                }
            }
        }
        if torus {
            for i in 0..m {
                adjacency[idx(i, 0)].push(idx(i, n));
                adjacency[idx(i, n)].push(idx(i, 0));
            }
            for j in 0..m {
                adjacency[idx(0, j)].push(idx(n, j));
                adjacency[idx(n, j)].push(idx(0, j));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        InterferenceGraph {
            kind: if torus { GraphKind::Torus } else { GraphKind::Lattice },
            order: Some(n),
            adjacency,
            coords,
            parity: Some(parity),
            range: None,
        }
    }

    /// `links` points placed uniformly i.i.d. in a `width x height` rectangle;
    /// the interference range is calibrated by bisection so the realized mean
    /// degree lands within 2% of `target_degree`. No wraparound.
    pub fn build_random_geometric(
        links: usize,
        width: f64,
        height: f64,
        target_degree: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if links == 0 {
            return Err(Error::config("need at least one link"));
        }
        if width <= 0.0 || height <= 0.0 {
            return Err(Error::config("region dimensions must be positive"));
        }
        if target_degree < 0.0 {
            return Err(Error::config("target degree must be nonnegative"));
        }
        if target_degree > (links - 1) as f64 {
            return Err(Error::Calibration(format!(
                "target degree {target_degree} unreachable with {links} links"
            )));
        }
        let coords: Vec<(f64, f64)> = (0..links)
            .map(|_| (rng.random::<f64>() * width, rng.random::<f64>() * height))
            .collect();

        let mean_degree = |r: f64| -> f64 {
            let mut edges = 0usize;
            for a in 0..links {
                for b in (a + 1)..links {
                    if dist2(coords[a], coords[b]) < r * r {
                        edges += 1;
                    }
                }
            }
            2.0 * edges as f64 / links as f64
        };

        let tol = 0.02 * target_degree.max(f64::MIN_POSITIVE);
        let mut r = if target_degree == 0.0 {
            f64::MIN_POSITIVE
        } else {
            let (mut lo, mut hi) = (0.0f64, (width * width + height * height).sqrt() * 1.001);
            let mut found = None;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let d = mean_degree(mid);
                if (d - target_degree).abs() <= tol {
                    found = Some(mid);
                    break;
                }
                if d < target_degree {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            found.ok_or_else(|| {
                Error::Calibration(format!(
                    "no range meets mean degree {target_degree} within 2% for this placement"
                ))
            })?
        };
        if links == 1 {
            r = f64::MIN_POSITIVE;
        }

        let mut adjacency = vec![Vec::new(); links];
        for a in 0..links {
            for b in (a + 1)..links {
                if dist2(coords[a], coords[b]) < r * r {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(InterferenceGraph {
            kind: GraphKind::RandomGeometric,
            order: None,
            adjacency,
            coords,
            parity: None,
            range: Some(r),
        })
    }

    /// One isolated link (no edges).
    pub fn single_link() -> Self {
        InterferenceGraph {
            kind: GraphKind::Custom,
            order: None,
            adjacency: vec![Vec::new()],
            coords: vec![(0.0, 0.0)],
            parity: None,
            range: None,
        }
    }

    /// Graph from an explicit edge list. Edges are deduplicated; self-loops
    /// are rejected.
    pub fn from_edges(links: usize, edges: &[(LinkId, LinkId)]) -> Result<Self> {
        if links == 0 {
            return Err(Error::config("need at least one link"));
        }
        let mut adjacency = vec![Vec::new(); links];
        for &(a, b) in edges {
            if a == b {
                return Err(Error::config(format!("self-loop at link {a}")));
            }
            if a >= links || b >= links {
                return Err(Error::config(format!("edge ({a},{b}) out of range")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(InterferenceGraph {
            kind: GraphKind::Custom,
            order: None,
            adjacency,
            coords: (0..links).map(|i| (i as f64, 0.0)).collect(),
            parity: None,
            range: None,
        })
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Grid order `n` (side length minus one); `None` for non-grid graphs.
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.kind, GraphKind::Lattice | GraphKind::Torus)
    }

    pub fn neighbors(&self, l: LinkId) -> &[LinkId] {
        &self.adjacency[l]
    }

    pub fn degree(&self, l: LinkId) -> usize {
        self.adjacency[l].len()
    }

    pub fn avg_degree(&self) -> f64 {
        let total: usize = self.adjacency.iter().map(Vec::len).sum();
        total as f64 / self.len() as f64
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn coords(&self, l: LinkId) -> (f64, f64) {
        self.coords[l]
    }

    /// Integer grid coordinates of a link; grid topologies only.
    pub fn grid_coords(&self, l: LinkId) -> Option<(usize, usize)> {
        let n = self.order?;
        let m = n + 1;
        Some((l / m, l % m))
    }

    /// Link at grid coordinates `(i, j)`.
    pub fn link_at(&self, i: usize, j: usize) -> Option<LinkId> {
        let n = self.order?;
        let m = n + 1;
        (i < m && j < m).then_some(i * m + j)
    }

    pub fn parity(&self, l: LinkId) -> Option<Parity> {
        self.parity.as_ref().map(|p| p[l])
    }

    pub fn range(&self) -> Option<f64> {
        self.range
    }

    pub fn contains_edge(&self, a: LinkId, b: LinkId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// True iff no two links in `set` interfere.
    pub fn is_independent(&self, set: &[LinkId]) -> bool {
        let mut member = vec![false; self.len()];
        for &l in set {
            member[l] = true;
        }
        set.iter()
            .all(|&l| self.adjacency[l].iter().all(|&nb| !member[nb]))
    }

    /// Edge list CSV: `src,dst` with `src < dst`.
    pub fn write_edges_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["src", "dst"])?;
        for a in 0..self.len() {
            for &b in &self.adjacency[a] {
                if a < b {
                    out.write_record([a.to_string(), b.to_string()])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Coordinates CSV: `link,x,y,parity` (parity empty for non-grid graphs).
    pub fn write_coords_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["link", "x", "y", "parity"])?;
        for l in 0..self.len() {
            let (x, y) = self.coords[l];
            let parity = match self.parity(l) {
                Some(Parity::Even) => "even",
                Some(Parity::Odd) => "odd",
                None => "",
            };
            out.write_record([l.to_string(), x.to_string(), y.to_string(), parity.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Uniform-throughput capacity and maximum-schedule statistics.
    ///
    /// Exact by exhaustive search for `L <= 25`. The lattice has
    /// `mu_max = 0.5` for every order (alternate the two parity classes); so
    /// does an even-sided torus (the parity classes remain valid schedules).
    /// An odd-sided torus beyond the exhaustive cap gets the large-`L` limit
    /// 0.5 flagged as asymptotic. Random geometric graphs get a greedy
    /// estimate of the maximum active fraction `r_L`, flagged as a bound.
    pub fn max_uniform_throughput(&self) -> TopologyStats {
        let l = self.len();
        let avg_degree = self.avg_degree();
        match self.kind {
            GraphKind::Lattice => {
                let max_schedule = if l <= EXACT_MIS_CAP {
                    self.max_independent_set_exact()
                } else {
                    // independence number of the (n+1)x(n+1) grid graph
                    l.div_ceil(2)
                };
                TopologyStats {
                    mu_max: 0.5,
                    mu_basis: Basis::Exact,
                    r_l: max_schedule as f64 / l as f64,
                    r_l_basis: Basis::Exact,
                    max_schedule_size: max_schedule,
                    avg_degree,
                }
            }
            GraphKind::Torus => {
                let side_even = self.order.map(|n| (n + 1) % 2 == 0).unwrap_or(false);
                if l <= EXACT_MIS_CAP {
                    let alpha = self.max_independent_set_exact();
                    // vertex-transitive: time-sharing translates of a maximum
                    // schedule serves every link alpha/L of the time
                    TopologyStats {
                        mu_max: alpha as f64 / l as f64,
                        mu_basis: Basis::Exact,
                        r_l: alpha as f64 / l as f64,
                        r_l_basis: Basis::Exact,
                        max_schedule_size: alpha,
                        avg_degree,
                    }
                } else if side_even {
                    TopologyStats {
                        mu_max: 0.5,
                        mu_basis: Basis::Exact,
                        r_l: 0.5,
                        r_l_basis: Basis::Exact,
                        max_schedule_size: l / 2,
                        avg_degree,
                    }
                } else {
                    TopologyStats {
                        mu_max: 0.5,
                        mu_basis: Basis::Asymptotic,
                        r_l: 0.5,
                        r_l_basis: Basis::Asymptotic,
                        max_schedule_size: l / 2,
                        avg_degree,
                    }
                }
            }
            GraphKind::RandomGeometric | GraphKind::Custom => {
                if l <= EXACT_MIS_CAP {
                    let alpha = self.max_independent_set_exact();
                    TopologyStats {
                        mu_max: alpha as f64 / l as f64,
                        mu_basis: Basis::Bound,
                        r_l: alpha as f64 / l as f64,
                        r_l_basis: Basis::Exact,
                        max_schedule_size: alpha,
                        avg_degree,
                    }
                } else {
                    let (mean, best) = self.greedy_schedule_estimate(32);
                    TopologyStats {
                        mu_max: best as f64 / l as f64,
                        mu_basis: Basis::Bound,
                        r_l: mean / l as f64,
                        r_l_basis: Basis::Bound,
                        max_schedule_size: best,
                        avg_degree,
                    }
                }
            }
        }
    }

    /// Exact maximum independent set size, branch and bound. `L <= 64`.
    pub fn max_independent_set_exact(&self) -> usize {
        assert!(self.len() <= 64, "exhaustive search limited to 64 links");
        let masks: Vec<u64> = (0..self.len())
            .map(|v| {
                self.adjacency[v]
                    .iter()
                    .fold(1u64 << v, |m, &nb| m | (1u64 << nb))
            })
            .collect();
        let all = if self.len() == 64 { !0u64 } else { (1u64 << self.len()) - 1 };
        let mut best = 0usize;
        mis_branch(&masks, all, 0, &mut best);
        best
    }

    /// Greedy maximal schedules over `orders` randomized link orders,
    /// with a fixed internal seed. Returns (mean size, best size).
    pub fn greedy_schedule_estimate(&self, orders: usize) -> (f64, usize) {
        use rand::seq::SliceRandom;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6565_6479);
        let mut total = 0usize;
        let mut best = 0usize;
        let mut perm: Vec<LinkId> = (0..self.len()).collect();
        for _ in 0..orders {
            perm.shuffle(&mut rng);
            let mut blocked = vec![false; self.len()];
            let mut size = 0usize;
            for &v in &perm {
                if !blocked[v] {
                    size += 1;
                    blocked[v] = true;
                    for &nb in &self.adjacency[v] {
                        blocked[nb] = true;
                    }
                }
            }
            total += size;
            best = best.max(size);
        }
        (total as f64 / orders as f64, best)
    }
}

const EXACT_MIS_CAP: usize = 25;

fn mis_branch(masks: &[u64], remaining: u64, size: usize, best: &mut usize) {
    if remaining == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + remaining.count_ones() as usize <= *best {
        return;
    }
    let v = remaining.trailing_zeros() as usize;
    // include v
    mis_branch(masks, remaining & !masks[v], size + 1, best);
    // exclude v
    mis_branch(masks, remaining & !(1u64 << v), size, best);
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// How a reported throughput or schedule figure was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    Exact,
    /// Large-`L` limit used in place of an exact finite-size value.
    Asymptotic,
    /// Greedy lower bound / estimate.
    Bound,
}

/// Throughput statistics of a topology.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TopologyStats {
    /// Maximum uniform throughput: largest fraction of time every link can
    /// be served simultaneously by any policy.
    pub mu_max: f64,
    pub mu_basis: Basis,
    /// Maximum fraction of links simultaneously active (`alpha / L`), or a
    /// greedy estimate of it.
    pub r_l: f64,
    pub r_l_basis: Basis,
    pub max_schedule_size: usize,
    pub avg_degree: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn assert_symmetric_irreflexive(g: &InterferenceGraph) {
        for a in 0..g.len() {
            assert!(!g.contains_edge(a, a));
            for &b in g.neighbors(a) {
                assert!(g.contains_edge(b, a), "asymmetric edge {a}-{b}");
            }
        }
    }

    #[test]
    fn lattice_n1_edges() {
        let g = InterferenceGraph::build_lattice(1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.edge_count(), 4);
        let e = |i, j, i2, j2| {
            g.contains_edge(g.link_at(i, j).unwrap(), g.link_at(i2, j2).unwrap())
        };
        assert!(e(0, 0, 0, 1));
        assert!(e(0, 0, 1, 0));
        assert!(e(0, 1, 1, 1));
        assert!(e(1, 0, 1, 1));
        assert!(!e(0, 0, 1, 1));
        assert_symmetric_irreflexive(&g);
    }

    #[test]
    fn lattice_n9_size() {
        let g = InterferenceGraph::build_lattice(9).unwrap();
        assert_eq!(g.len(), 100);
    }

    #[test]
    fn lattice_rejects_n0() {
        assert!(InterferenceGraph::build_lattice(0).is_err());
    }

    #[test]
    fn parity_assignment() {
        let g = InterferenceGraph::build_lattice(3).unwrap();
        assert_eq!(g.parity(g.link_at(0, 0).unwrap()), Some(Parity::Even));
        assert_eq!(g.parity(g.link_at(0, 1).unwrap()), Some(Parity::Odd));
    }

    #[test]
    fn torus_n2_degrees_and_edges() {
        let g = InterferenceGraph::build_torus(2).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.edge_count(), 18);
        for l in 0..g.len() {
            assert_eq!(g.degree(l), 4);
        }
        assert_symmetric_irreflexive(&g);
    }

    #[test]
    fn torus_n19_size() {
        let g = InterferenceGraph::build_torus(19).unwrap();
        assert_eq!(g.len(), 400);
        for l in 0..g.len() {
            assert_eq!(g.degree(l), 4);
        }
    }

    #[test]
    fn torus_rejects_small_orders() {
        assert!(InterferenceGraph::build_torus(0).is_err());
        assert!(InterferenceGraph::build_torus(1).is_err());
    }

    #[test]
    fn torus_3x3_throughput_one_third() {
        let g = InterferenceGraph::build_torus(2).unwrap();
        let stats = g.max_uniform_throughput();
        assert_eq!(stats.max_schedule_size, 3);
        assert!((stats.mu_max - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats.mu_basis, Basis::Exact);
    }

    #[test]
    fn torus_4x4_throughput_half() {
        let g = InterferenceGraph::build_torus(3).unwrap();
        let stats = g.max_uniform_throughput();
        assert_eq!(stats.max_schedule_size, 8);
        assert!((stats.mu_max - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lattice_throughput_half() {
        for n in [1, 2, 5, 9] {
            let g = InterferenceGraph::build_lattice(n).unwrap();
            let stats = g.max_uniform_throughput();
            assert!((stats.mu_max - 0.5).abs() < 1e-12, "n={n}");
            assert_eq!(stats.mu_basis, Basis::Exact);
        }
    }

    #[test]
    fn checkerboard_classes_are_valid_schedules() {
        for n in [1, 4, 17, 50] {
            let g = InterferenceGraph::build_lattice(n).unwrap();
            let evens: Vec<LinkId> =
                (0..g.len()).filter(|&l| g.parity(l) == Some(Parity::Even)).collect();
            let odds: Vec<LinkId> =
                (0..g.len()).filter(|&l| g.parity(l) == Some(Parity::Odd)).collect();
            assert!(g.is_independent(&evens), "even class conflicts at n={n}");
            assert!(g.is_independent(&odds), "odd class conflicts at n={n}");
        }
    }

    #[test]
    fn rgg_mean_degree_calibrated() {
        let streams = crate::rng::RngStreams::new(7);
        let mut rng = streams.stream(crate::rng::StreamId::Topology);
        let g =
            InterferenceGraph::build_random_geometric(100, 10.0, 10.0, 6.0, &mut rng).unwrap();
        let d = g.avg_degree();
        assert!((5.88..=6.12).contains(&d), "mean degree {d}");
        assert_symmetric_irreflexive(&g);
    }

    #[test]
    fn rgg_single_link_no_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = InterferenceGraph::build_random_geometric(1, 5.0, 3.0, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn rgg_edges_match_distance_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = InterferenceGraph::build_random_geometric(60, 8.0, 8.0, 5.0, &mut rng).unwrap();
        let r2 = g.range().unwrap().powi(2);
        for a in 0..g.len() {
            for b in (a + 1)..g.len() {
                let within = dist2(g.coords(a), g.coords(b)) < r2;
                assert_eq!(g.contains_edge(a, b), within, "edge rule violated for {a},{b}");
            }
        }
    }

    #[test]
    fn rgg_unreachable_degree_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            InterferenceGraph::build_random_geometric(4, 5.0, 5.0, 6.0, &mut rng),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn two_links_edge_rule() {
        // distance-1 pair: r > d gives one edge, r < d gives none; exercised
        // through from_edges as the direct construction
        let g = InterferenceGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        let g2 = InterferenceGraph::from_edges(2, &[]).unwrap();
        assert_eq!(g2.edge_count(), 0);
    }

    #[test]
    fn mis_matches_bruteforce_enumeration() {
        // independent 2^L check on a small torus
        let g = InterferenceGraph::build_torus(2).unwrap();
        let l = g.len();
        let mut best = 0;
        'subset: for mask in 0u32..(1 << l) {
            let set: Vec<LinkId> = (0..l).filter(|&v| mask & (1 << v) != 0).collect();
            for &a in &set {
                for &b in &set {
                    if a < b && g.contains_edge(a, b) {
                        continue 'subset;
                    }
                }
            }
            best = best.max(set.len());
        }
        assert_eq!(best, g.max_independent_set_exact());
    }
}
