//! Road networks, the linkage-network transform, and the propagation
//! matrix `A' = alpha*A + I`.
//!
//! A road network is the usual directed graph of intersections and road
//! segments. The linkage network is its line graph: every segment becomes a
//! node, and a directed edge (a "linkage") runs from segment `i` to segment
//! `j` exactly when traffic leaving `i` can enter `j`, i.e. the termination
//! intersection of `i` is the initiation intersection of `j`. All graph
//! types here are immutable after construction and safe to share across
//! threads.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{GrnnError, Result};

/// An intersection with geographic coordinates. Coordinates are carried for
/// provenance and export only; prediction never reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub lng: f64,
    pub lat: f64,
}

/// A directed road segment between two intersections.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub init_vertex: String,
    pub term_vertex: String,
}

/// A directed road network: intersections and the segments joining them.
///
/// `(u -> v)` and `(v -> u)` are distinct segments; parallel segments with
/// distinct ids are allowed.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    vertices: Vec<Vertex>,
    segments: Vec<Segment>,
    vertex_index: HashMap<String, usize>,
}

impl RoadNetwork {
    /// Builds a validated road network. Every segment endpoint must name an
    /// existing vertex and all ids must be unique.
    pub fn new(vertices: Vec<Vertex>, segments: Vec<Segment>) -> Result<Self> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (k, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.id.clone(), k).is_some() {
                return Err(GrnnError::Validation(format!(
                    "duplicate vertex id {:?}",
                    v.id
                )));
            }
        }
        let mut seen = HashMap::with_capacity(segments.len());
        for (k, s) in segments.iter().enumerate() {
            if seen.insert(s.id.clone(), k).is_some() {
                return Err(GrnnError::Validation(format!(
                    "duplicate segment id {:?}",
                    s.id
                )));
            }
            for (role, vid) in [("init", &s.init_vertex), ("term", &s.term_vertex)] {
                if !vertex_index.contains_key(vid) {
                    return Err(GrnnError::Validation(format!(
                        "segment {:?} references missing {} vertex {:?}",
                        s.id, role, vid
                    )));
                }
            }
        }
        Ok(Self {
            vertices,
            segments,
            vertex_index,
        })
    }

    /// Parses the delimited node/edge files. Node header is
    /// `vertex_id,lng,lat`; edge header is `segment_id,init_vertex,term_vertex`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_csv(nodes_text: &str, edges_text: &str) -> Result<Self> {
        let node_rows = parse_rows(nodes_text, "vertex_id,lng,lat")?;
        let mut vertices = Vec::with_capacity(node_rows.len());
        for (lineno, fields) in node_rows {
            let lng: f64 = fields[1].parse().map_err(|_| {
                GrnnError::Parse(format!("node file line {lineno}: bad lng {:?}", fields[1]))
            })?;
            let lat: f64 = fields[2].parse().map_err(|_| {
                GrnnError::Parse(format!("node file line {lineno}: bad lat {:?}", fields[2]))
            })?;
            vertices.push(Vertex {
                id: fields[0].clone(),
                lng,
                lat,
            });
        }
        let edge_rows = parse_rows(edges_text, "segment_id,init_vertex,term_vertex")?;
        let segments = edge_rows
            .into_iter()
            .map(|(_, f)| Segment {
                id: f[0].clone(),
                init_vertex: f[1].clone(),
                term_vertex: f[2].clone(),
            })
            .collect();
        Self::new(vertices, segments)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Sum over intersections of indegree*outdegree. This equals the number
    /// of linkages the transform must produce.
    pub fn degree_products_sum(&self) -> usize {
        let mut indeg = vec![0usize; self.vertices.len()];
        let mut outdeg = vec![0usize; self.vertices.len()];
        for s in &self.segments {
            outdeg[self.vertex_index[&s.init_vertex]] += 1;
            indeg[self.vertex_index[&s.term_vertex]] += 1;
        }
        indeg.iter().zip(&outdeg).map(|(i, o)| i * o).sum()
    }
}

fn parse_rows(text: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let want: Vec<&str> = header.split(',').collect();
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if !header_seen {
            if fields != want {
                return Err(GrnnError::Parse(format!(
                    "expected header {header:?}, got {line:?}"
                )));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != want.len() {
            return Err(GrnnError::Parse(format!(
                "line {}: expected {} fields, got {}",
                idx + 1,
                want.len(),
                fields.len()
            )));
        }
        rows.push((idx + 1, fields));
    }
    if !header_seen {
        return Err(GrnnError::Parse(format!("missing header {header:?}")));
    }
    Ok(rows)
}

/// The line graph of a road network: one node per segment, one directed
/// edge per linkage. Node order is the input segment order.
#[derive(Debug, Clone)]
pub struct LinkageNetwork {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    adjacency: Array2<u8>,
}

impl LinkageNetwork {
    /// Transforms a road network into its linkage network.
    /// `A[i][j] = 1` iff `term(segment i) == init(segment j)`; this includes
    /// `i == j` for loop segments.
    pub fn from_road_network(net: &RoadNetwork) -> Result<Self> {
        let n = net.segment_count();
        if n == 0 {
            return Err(GrnnError::Validation(
                "cannot build a linkage network from an empty edge set".into(),
            ));
        }
        let mut by_init: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, s) in net.segments().iter().enumerate() {
            by_init.entry(s.init_vertex.as_str()).or_default().push(j);
        }
        let mut adjacency = Array2::<u8>::zeros((n, n));
        for (i, s) in net.segments().iter().enumerate() {
            if let Some(succ) = by_init.get(s.term_vertex.as_str()) {
                for &j in succ {
                    adjacency[[i, j]] = 1;
                }
            }
        }
        let nodes: Vec<String> = net.segments().iter().map(|s| s.id.clone()).collect();
        let node_index = nodes
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), k))
            .collect();
        Ok(Self {
            nodes,
            node_index,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, segment_id: &str) -> Option<usize> {
        self.node_index.get(segment_id).copied()
    }

    pub fn adjacency(&self) -> &Array2<u8> {
        &self.adjacency
    }

    /// Number of linkages (1-entries of A).
    pub fn nnz(&self) -> usize {
        self.adjacency.iter().filter(|&&v| v != 0).count()
    }

    /// Row indices of the segments that feed into node `j`.
    pub fn upstream(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.adjacency[[i, j]] != 0).collect()
    }

    /// Directed pairs `from_segment,to_segment`, one linkage per line, in
    /// row-major adjacency order.
    pub fn export_pairs(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            for j in 0..n {
                if self.adjacency[[i, j]] != 0 {
                    out.push_str(&self.nodes[i]);
                    out.push(',');
                    out.push_str(&self.nodes[j]);
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// `A' = alpha*A + I`. Each propagation step mixes a node's state with its
/// upstream neighbours' states, decayed by `alpha`. Carries dense values
/// plus column/row sparse access built once at construction.
#[derive(Debug, Clone)]
pub struct PropagationMatrix {
    values: Array2<f64>,
    alpha: f64,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl PropagationMatrix {
    pub fn new(link: &LinkageNetwork, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(GrnnError::Parameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        let n = link.n();
        let mut values = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut v = alpha * f64::from(link.adjacency()[[i, j]]);
                if i == j {
                    v += 1.0;
                }
                values[[i, j]] = v;
            }
        }
        let mut cols = vec![Vec::new(); n];
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let v = values[[i, j]];
                if v != 0.0 {
                    cols[j].push((i, v));
                    rows[i].push((j, v));
                }
            }
        }
        Ok(Self {
            values,
            alpha,
            cols,
            rows,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn sparse_view(&self) -> SparseView<'_> {
        SparseView { cols: &self.cols }
    }

    /// `h * A'` for `h` of shape (d, n), computed column-by-column over the
    /// nonzeros only.
    pub fn mul_right(&self, h: &Array2<f64>) -> Array2<f64> {
        let (d, n) = h.dim();
        assert_eq!(n, self.n(), "state width must match node count");
        let mut out = Array2::<f64>::zeros((d, n));
        for j in 0..n {
            for &(i, v) in &self.cols[j] {
                for k in 0..d {
                    out[[k, j]] += v * h[[k, i]];
                }
            }
        }
        out
    }

    /// `g * A'^T` for `g` of shape (d, n); the adjoint of [`Self::mul_right`].
    pub fn mul_right_transpose(&self, g: &Array2<f64>) -> Array2<f64> {
        let (d, n) = g.dim();
        assert_eq!(n, self.n(), "state width must match node count");
        let mut out = Array2::<f64>::zeros((d, n));
        for i in 0..n {
            for &(j, v) in &self.rows[i] {
                for k in 0..d {
                    out[[k, i]] += v * g[[k, j]];
                }
            }
        }
        out
    }
}

/// Column access into the nonzeros of `A'`.
pub struct SparseView<'a> {
    cols: &'a [Vec<(usize, f64)>],
}

impl<'a> SparseView<'a> {
    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Nonzeros of column `j` as `(row, value)`, ascending by row.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.cols[j].iter().copied()
    }
}

/// Deterministic graph builders used by the simulator, the benchmark
/// harness and tests.
pub mod generators {
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::{RoadNetwork, Segment, Vertex};

    fn vertex(id: String, k: usize) -> Vertex {
        // synthetic coordinates; spacing only matters for export readability
        Vertex {
            id,
            lng: 0.01 * k as f64,
            lat: 0.02 * k as f64,
        }
    }

    /// Open chain `v0 -> v1 -> ... -> vn` with `n` segments.
    pub fn chain_road_network(n: usize) -> RoadNetwork {
        assert!(n >= 1);
        let vertices = (0..=n).map(|k| vertex(format!("v{k}"), k)).collect();
        let segments = (0..n)
            .map(|k| Segment {
                id: format!("s{}", k + 1),
                init_vertex: format!("v{k}"),
                term_vertex: format!("v{}", k + 1),
            })
            .collect();
        RoadNetwork::new(vertices, segments).expect("chain network is valid")
    }

    /// Directed ring over `n` vertices with `n` segments; every linkage
    /// node has exactly one upstream neighbour.
    pub fn ring_road_network(n: usize) -> RoadNetwork {
        assert!(n >= 1);
        let vertices = (0..n).map(|k| vertex(format!("v{k}"), k)).collect();
        let segments = (0..n)
            .map(|k| Segment {
                id: format!("s{}", k + 1),
                init_vertex: format!("v{k}"),
                term_vertex: format!("v{}", (k + 1) % n),
            })
            .collect();
        RoadNetwork::new(vertices, segments).expect("ring network is valid")
    }

    /// Lattice of one-way streets pointing right and down.
    pub fn grid_road_network(rows: usize, cols: usize) -> RoadNetwork {
        assert!(rows >= 1 && cols >= 1);
        let mut vertices = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                vertices.push(vertex(format!("v{r}_{c}"), r * cols + c));
            }
        }
        let mut segments = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    segments.push(Segment {
                        id: format!("r{r}_{c}"),
                        init_vertex: format!("v{r}_{c}"),
                        term_vertex: format!("v{r}_{}", c + 1),
                    });
                }
                if r + 1 < rows {
                    segments.push(Segment {
                        id: format!("d{r}_{c}"),
                        init_vertex: format!("v{r}_{c}"),
                        term_vertex: format!("v{}_{c}", r + 1),
                    });
                }
            }
        }
        RoadNetwork::new(vertices, segments).expect("grid network is valid")
    }

    /// Random road network with exactly `n_segments` segments over
    /// `n_vertices` intersections. Self-loops and parallel segments are
    /// possible by construction.
    pub fn random_road_network(seed: u64, n_vertices: usize, n_segments: usize) -> RoadNetwork {
        assert!(n_vertices >= 1 && n_segments >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vertices = (0..n_vertices).map(|k| vertex(format!("v{k}"), k)).collect();
        let segments = (0..n_segments)
            .map(|k| Segment {
                id: format!("s{}", k + 1),
                init_vertex: format!("v{}", rng.gen_range(0..n_vertices)),
                term_vertex: format!("v{}", rng.gen_range(0..n_vertices)),
            })
            .collect();
        RoadNetwork::new(vertices, segments).expect("generated network is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(verts: &[&str], segs: &[(&str, &str, &str)]) -> RoadNetwork {
        let vertices = verts
            .iter()
            .map(|id| Vertex {
                id: id.to_string(),
                lng: 0.0,
                lat: 0.0,
            })
            .collect();
        let segments = segs
            .iter()
            .map(|(id, a, b)| Segment {
                id: id.to_string(),
                init_vertex: a.to_string(),
                term_vertex: b.to_string(),
            })
            .collect();
        RoadNetwork::new(vertices, segments).unwrap()
    }

    #[test]
    fn minimal_network_loads() {
        let nodes = "vertex_id,lng,lat\nA,0.0,0.0\nB,1.0,0.0\n";
        let edges = "segment_id,init_vertex,term_vertex\n1,A,B\n";
        let rn = RoadNetwork::from_csv(nodes, edges).unwrap();
        assert_eq!(rn.vertex_count(), 2);
        assert_eq!(rn.segment_count(), 1);
    }

    #[test]
    fn dangling_vertex_is_rejected_naming_segment() {
        let nodes = "vertex_id,lng,lat\nA,0.0,0.0\n";
        let edges = "segment_id,init_vertex,term_vertex\n1,A,Z\n";
        let err = RoadNetwork::from_csv(nodes, edges).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"1\"") && msg.contains("\"Z\""), "{msg}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let nodes = "vertex_id,lng,lat\nA,0.0,0.0\nA,1.0,0.0\n";
        let edges = "segment_id,init_vertex,term_vertex\n";
        assert!(matches!(
            RoadNetwork::from_csv(nodes, edges),
            Err(GrnnError::Validation(_))
        ));
        let nodes = "vertex_id,lng,lat\nA,0.0,0.0\nB,1.0,0.0\n";
        let edges = "segment_id,init_vertex,term_vertex\n1,A,B\n1,B,A\n";
        assert!(matches!(
            RoadNetwork::from_csv(nodes, edges),
            Err(GrnnError::Validation(_))
        ));
    }

    #[test]
    fn bad_header_is_a_parse_error() {
        let nodes = "id,x,y\nA,0.0,0.0\n";
        let edges = "segment_id,init_vertex,term_vertex\n";
        assert!(matches!(
            RoadNetwork::from_csv(nodes, edges),
            Err(GrnnError::Parse(_))
        ));
    }

    /// Four intersections around a central one, six one-way segments.
    fn crossroad_example() -> RoadNetwork {
        net(
            &["A", "B", "C", "D"],
            &[
                ("1", "A", "C"),
                ("2", "C", "A"),
                ("3", "B", "C"),
                ("4", "C", "B"),
                ("5", "C", "D"),
                ("6", "D", "C"),
            ],
        )
    }

    #[test]
    fn crossroad_subgraph_counts() {
        let rn = crossroad_example();
        assert_eq!(rn.vertex_count(), 4);
        assert_eq!(rn.segment_count(), 6);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        assert_eq!(link.n(), 6);
        assert_eq!(link.nnz(), rn.degree_products_sum());
        assert_eq!(link.nnz(), 12);
    }

    #[test]
    fn chain_linkage_adjacency() {
        let rn = net(&["u", "v", "w"], &[("e1", "u", "v"), ("e2", "v", "w")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        let mut want = Array2::<u8>::zeros((2, 2));
        want[[0, 1]] = 1;
        assert_eq!(link.adjacency(), &want);
    }

    #[test]
    fn u_turn_pair_links_both_ways() {
        let rn = net(&["u", "v"], &[("e1", "u", "v"), ("e2", "v", "u")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        assert_eq!(link.adjacency()[[0, 1]], 1);
        assert_eq!(link.adjacency()[[1, 0]], 1);
        assert_eq!(link.nnz(), 2);
    }

    #[test]
    fn self_loop_segment_links_to_itself() {
        let rn = net(&["u"], &[("e1", "u", "u")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        assert_eq!(link.adjacency()[[0, 0]], 1);
        let pm = PropagationMatrix::new(&link, 0.5).unwrap();
        assert_eq!(pm.values()[[0, 0]], 1.5);
    }

    #[test]
    fn empty_edge_set_is_rejected() {
        let rn = net(&["u"], &[]);
        assert!(matches!(
            LinkageNetwork::from_road_network(&rn),
            Err(GrnnError::Validation(_))
        ));
    }

    /// Brute-force all-pairs check of term(i) == init(j).
    fn brute_force_adjacency(rn: &RoadNetwork) -> Array2<u8> {
        let n = rn.segment_count();
        let mut a = Array2::<u8>::zeros((n, n));
        for (i, si) in rn.segments().iter().enumerate() {
            for (j, sj) in rn.segments().iter().enumerate() {
                if si.term_vertex == sj.init_vertex {
                    a[[i, j]] = 1;
                }
            }
        }
        a
    }

    #[test]
    fn transform_matches_brute_force_on_random_networks() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD00D);
            let nv = rng.gen_range(1..=10);
            let ns = rng.gen_range(1..=50);
            let rn = random_road_network(seed, nv, ns);
            let link = LinkageNetwork::from_road_network(&rn).unwrap();
            assert_eq!(link.adjacency(), &brute_force_adjacency(&rn), "seed {seed}");
            assert_eq!(link.nnz(), rn.degree_products_sum(), "seed {seed}");
        }
    }

    #[test]
    fn transform_is_order_stable() {
        let rn = crossroad_example();
        let a = LinkageNetwork::from_road_network(&rn).unwrap();
        let b = LinkageNetwork::from_road_network(&rn).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.adjacency(), b.adjacency());
        assert_eq!(a.nodes()[0], "1");
        assert_eq!(a.export_pairs(), b.export_pairs());
    }

    #[test]
    fn propagation_matrix_identity_at_alpha_zero() {
        let rn = crossroad_example();
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        let pm = PropagationMatrix::new(&link, 0.0).unwrap();
        assert_eq!(pm.values(), &Array2::<f64>::eye(6));
        let sv = pm.sparse_view();
        for j in 0..sv.n() {
            let col: Vec<_> = sv.col(j).collect();
            assert_eq!(col, vec![(j, 1.0)]);
        }
    }

    #[test]
    fn propagation_matrix_alpha_one_chain() {
        let rn = net(&["u", "v", "w"], &[("e1", "u", "v"), ("e2", "v", "w")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        let pm = PropagationMatrix::new(&link, 1.0).unwrap();
        let want = Array2::from_shape_vec((2, 2), vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(pm.values(), &want);
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let rn = net(&["u", "v"], &[("e1", "u", "v")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        assert!(matches!(
            PropagationMatrix::new(&link, -0.1),
            Err(GrnnError::Parameter(_))
        ));
    }

    #[test]
    fn sparse_chain_column_entries() {
        let rn = net(&["u", "v", "w"], &[("e1", "u", "v"), ("e2", "v", "w")]);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        let pm = PropagationMatrix::new(&link, 0.5).unwrap();
        let col: Vec<_> = pm.sparse_view().col(1).collect();
        assert_eq!(col, vec![(0, 0.5), (1, 1.0)]);
    }

    #[test]
    fn propagation_values_match_elementwise_oracle() {
        let rn = random_road_network(7, 5, 10);
        let link = LinkageNetwork::from_road_network(&rn).unwrap();
        let alpha = 0.5;
        let pm = PropagationMatrix::new(&link, alpha).unwrap();
        for i in 0..link.n() {
            for j in 0..link.n() {
                let want = alpha * f64::from(link.adjacency()[[i, j]])
                    + if i == j { 1.0 } else { 0.0 };
                assert_eq!(pm.values()[[i, j]], want);
            }
        }
    }

    proptest! {
        /// nnz(A) equals the sum over intersections of indeg*outdeg.
        #[test]
        fn linkage_count_identity(seed in 0u64..1000, nv in 1usize..12, ns in 1usize..100) {
            let rn = random_road_network(seed, nv, ns);
            let link = LinkageNetwork::from_road_network(&rn).unwrap();
            prop_assert_eq!(link.nnz(), rn.degree_products_sum());
        }

        /// (A' - I) / alpha recovers A exactly for alpha > 0.
        #[test]
        fn propagation_matrix_reconstructs_adjacency(
            seed in 0u64..500, nv in 1usize..8, ns in 1usize..40,
            alpha_num in 1u32..8,
        ) {
            let alpha = f64::from(alpha_num) * 0.25;
            let rn = random_road_network(seed, nv, ns);
            let link = LinkageNetwork::from_road_network(&rn).unwrap();
            let pm = PropagationMatrix::new(&link, alpha).unwrap();
            for i in 0..link.n() {
                for j in 0..link.n() {
                    let mut v = pm.values()[[i, j]];
                    if i == j { v -= 1.0; }
                    prop_assert_eq!(v / alpha, f64::from(link.adjacency()[[i, j]]));
                }
            }
        }

        /// Dense and sparse H*A' products agree entrywise.
        #[test]
        fn sparse_dense_product_equivalence(seed in 0u64..300, nv in 1usize..8, ns in 1usize..50) {
            let rn = random_road_network(seed, nv, ns);
            let link = LinkageNetwork::from_road_network(&rn).unwrap();
            let pm = PropagationMatrix::new(&link, 0.5).unwrap();
            let d = 4;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBEEF);
            let h = Array2::from_shape_fn((d, link.n()), |_| rng.gen_range(-1.0..1.0));
            let dense = h.dot(pm.values());
            let sparse = pm.mul_right(&h);
            for (a, b) in dense.iter().zip(sparse.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let g = Array2::from_shape_fn((d, link.n()), |_| rng.gen_range(-1.0..1.0));
            let dense_t = g.dot(&pm.values().t());
            let sparse_t = pm.mul_right_transpose(&g);
            for (a, b) in dense_t.iter().zip(sparse_t.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
