//! W-random graphs and finite-graph homomorphism densities.
//!
//! Latents and edges are drawn from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)`; repetition `r` of a Monte Carlo check uses stream `r`
//! of the same key, so repetition 0 reproduces [`sample_graph`]. Within a
//! stream the `n` latents are drawn first, then one uniform per pair `i < j`
//! in row-major order.
//!
//! Densities use labeled-homomorphism normalization: `hom(K, G) / n^|V(K)|`.
//! Binomial-normalized densities are recovered by multiplying with
//! `n^|V(K)| / (n)_|V(K)|` for triangles and edges, whose homomorphisms from a
//! loopless graph are exactly the injective ones.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipodal::{BipodalGraphon, OddCycle};
use crate::grid::{grid_densities, GridGraphon};
use crate::{Error, Result};

/// Name of the generator, recorded in reports.
pub const PRNG: &str = "ChaCha8";

/// Largest cycle length `graph_densities` accepts.
pub const MAX_CYCLE: u32 = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Bipodal(BipodalGraphon),
    Grid(GridGraphon),
}

impl Source {
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        match self {
            Source::Bipodal(g) => g.value_at(x, y),
            Source::Grid(g) => g.value_at(x, y),
        }
    }

    /// Exact edge and triangle densities of the graphon.
    pub fn densities(&self) -> (f64, f64) {
        let k3 = OddCycle::new(3).expect("3 is a valid cycle length");
        match self {
            Source::Bipodal(g) => (g.edge_density(), g.cycle_density(k3)),
            Source::Grid(g) => grid_densities(g, k3),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Source::Bipodal(g) => format!("bipodal a={:.17e} b={:.17e} c={:.17e} d={:.17e}", g.a(), g.b(), g.c(), g.d()),
            Source::Grid(g) => format!("grid n={}", g.n()),
        }
    }
}

impl From<BipodalGraphon> for Source {
    fn from(g: BipodalGraphon) -> Self {
        Source::Bipodal(g)
    }
}

impl From<GridGraphon> for Source {
    fn from(g: GridGraphon) -> Self {
        Source::Grid(g)
    }
}

/// Simple graph stored as one bitset row per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledGraph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    seed: u64,
    source: String,
}

impl SampledGraph {
    /// Empty graph on `n` vertices.
    pub fn empty(n: usize, seed: u64, source: impl Into<String>) -> Self {
        let words = n.div_ceil(64);
        SampledGraph { n, words, bits: vec![0; n * words], seed, source: source.into() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SampledGraph::empty(n, 0, "edge list");
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::domain(format!("loop at vertex {u}")));
            }
            g.set(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> u64 {
        self.row(i).iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn edge_count(&self) -> u64 {
        (0..self.n).map(|i| self.degree(i)).sum::<u64>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    /// Triangles, each counted once.
    pub fn triangle_count(&self) -> u64 {
        let closed: u64 = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let ri = self.row(i);
                (i + 1..self.n)
                    .filter(|&j| self.has_edge(i, j))
                    .map(|j| ri.iter().zip(self.row(j)).map(|(x, y)| (x & y).count_ones() as u64).sum::<u64>())
                    .sum::<u64>()
            })
            .sum();
        closed / 3
    }

    /// `trace(A^k)`, the number of closed walks of length `k`.
    pub fn closed_walks(&self, k: u32) -> f64 {
        if k == 0 {
            return self.n as f64;
        }
        let n = self.n;
        let m = (k / 2) as usize;
        // p holds A^m, q holds A^(k - m); trace(A^k) = sum_ij p_ij q_ij.
        let mut p: Vec<f64> = (0..n * n).map(|x| if x / n == x % n { 1.0 } else { 0.0 }).collect();
        for _ in 0..m {
            p = self.left_multiply(&p);
        }
        let mut q = p.clone();
        for _ in m..(k as usize - m) {
            q = self.left_multiply(&q);
        }
        p.iter().zip(&q).map(|(x, y)| x * y).sum()
    }

    fn left_multiply(&self, m: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in (0..n).filter(|&j| self.has_edge(i, j)) {
                for (o, x) in row.iter_mut().zip(&m[j * n..(j + 1) * n]) {
                    *o += x;
                }
            }
        });
        out
    }

    /// Writes `# n=<n> seed=<seed>` followed by one `u v` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n={} seed={}", self.n, self.seed)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty edge list".into()))??;
        let field = |key: &str| -> Result<u64> {
            header
                .trim_start_matches('#')
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::Format(format!("header lacks {key}")))?
                .parse()
                .map_err(|e| Error::Format(format!("bad {key}: {e}")))
        };
        let n = field("n")? as usize;
        let seed = field("seed")?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                (None, _, _) => {}
                _ => return Err(Error::Format(format!("bad edge line {line:?}"))),
            }
        }
        let mut g = SampledGraph::from_edges(n, &edges)?;
        g.seed = seed;
        Ok(g)
    }
}

fn stream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn sample_stream(source: &Source, n: usize, seed: u64, rep: u64) -> Result<SampledGraph> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 vertices, got {n}")));
    }
    let mut rng = stream(seed, rep);
    let latents: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let mut g = SampledGraph::empty(n, seed, source.describe());
    for i in 0..n {
        for j in i + 1..n {
            let p = source.value_at(latents[i], latents[j]);
            if rng.random::<f64>() < p {
                g.set(i, j);
            }
        }
    }
    Ok(g)
}

/// Draws a W-random graph on `n` vertices.
pub fn sample_graph(source: &Source, n: usize, seed: u64) -> Result<SampledGraph> {
    sample_stream(source, n, seed, 0)
}

/// Homomorphism density of the edge (`k = 2`) or the `k`-cycle (odd `k <= 9`).
pub fn graph_densities(g: &SampledGraph, k: u32) -> Result<f64> {
    let n = g.n() as f64;
    match k {
        2 => Ok(2.0 * g.edge_count() as f64 / (n * n)),
        3 => Ok(6.0 * g.triangle_count() as f64 / (n * n * n)),
        k if k >= 5 && k % 2 == 1 && k <= MAX_CYCLE => Ok(g.closed_walks(k) / n.powi(k as i32)),
        k => Err(Error::domain(format!("density of K_2 or odd cycles up to {MAX_CYCLE} only, got k={k}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityStat {
    pub mean: f64,
    pub stdev: f64,
    /// Graphon density.
    pub exact: f64,
    /// Expected finite-graph density, `exact * (n)_v / n^v`.
    pub expected: f64,
    /// `(mean - expected) / (stdev / sqrt(reps))`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub prng: String,
    pub source: String,
    pub edge: DensityStat,
    pub triangle: DensityStat,
}

fn stat(samples: &[f64], exact: f64, expected: f64) -> DensityStat {
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };
    let stdev = var.sqrt();
    let diff = mean - expected;
    let z = if stdev > 0.0 {
        diff / (stdev / r.sqrt())
    } else if diff.abs() <= 1e-12 * expected.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    DensityStat { mean, stdev, exact, expected, z }
}

/// Samples `reps` graphs and compares edge and triangle densities with the
/// graphon's.
pub fn mc_check(source: &Source, n: usize, reps: usize, seed: u64) -> Result<McReport> {
    if reps == 0 {
        return Err(Error::domain("reps must be at least 1"));
    }
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let g = sample_stream(source, n, seed, rep)?;
            Ok((graph_densities(&g, 2)?, graph_densities(&g, 3)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (edges, triangles): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let (eps, tau) = source.densities();
    let nf = n as f64;
    let f2 = (nf - 1.0) / nf;
    let f3 = f2 * (nf - 2.0) / nf;
    Ok(McReport {
        n,
        reps,
        seed,
        prng: PRNG.to_string(),
        source: source.describe(),
        edge: stat(&edges, eps, eps * f2),
        triangle: stat(&triangles, tau, tau * f3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(p: f64) -> Source {
        BipodalGraphon::constant(p).unwrap().into()
    }

    #[test]
    fn trivial_graphons() {
        let full = sample_graph(&constant(1.0), 20, 3).unwrap();
        assert_eq!(full.edge_count(), 190);
        let empty = sample_graph(&constant(0.0), 20, 3).unwrap();
        assert_eq!(empty.edge_count(), 0);
        assert_eq!(graph_densities(&empty, 3).unwrap(), 0.0);
        assert!(sample_graph(&constant(0.5), 1, 0).is_err());
    }

    #[test]
    fn complete_k4() {
        let edges: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
        let g = SampledGraph::from_edges(4, &edges).unwrap();
        assert_eq!(graph_densities(&g, 2).unwrap(), 0.75);
        assert_eq!(graph_densities(&g, 3).unwrap(), 0.375);
        assert_eq!(g.triangle_count(), 4);
    }

    #[test]
    fn unsupported_lengths() {
        let g = SampledGraph::empty(5, 0, "");
        for k in [0, 1, 4, 6, 11] {
            assert!(graph_densities(&g, k).is_err(), "k={k}");
        }
        assert!(SampledGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(SampledGraph::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn five_cycle_walks() {
        // C_5 has 10 closed 5-walks: one per start vertex and direction.
        let g = SampledGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(g.closed_walks(5), 10.0);
        assert_eq!(g.closed_walks(3), 0.0);
    }

    #[test]
    fn half_graphon_edge_density() {
        let r = mc_check(&constant(0.5), 2000, 1, 11).unwrap();
        let pairs: f64 = 2000.0 * 1999.0 / 2.0;
        let sigma = (0.25 / pairs).sqrt() * 1999.0 / 2000.0;
        let z = (r.edge.mean - r.edge.expected) / sigma;
        assert!(z.abs() <= 3.0, "z={z}");
    }

    #[test]
    fn half_graphon_triangles() {
        let r = mc_check(&constant(0.5), 1000, 12, 1).unwrap();
        assert!(r.triangle.z.abs() <= 3.0, "{r:?}");
        assert_eq!(r.triangle.exact, 0.125);
    }

    #[test]
    fn replay_is_deterministic() {
        let src: Source = BipodalGraphon::new(0.2, 0.8, 0.3, 0.6).unwrap().into();
        assert_eq!(mc_check(&src, 120, 3, 9).unwrap(), mc_check(&src, 120, 3, 9).unwrap());
        assert_eq!(sample_graph(&src, 80, 4).unwrap(), sample_graph(&src, 80, 4).unwrap());
        assert_ne!(sample_graph(&src, 80, 4).unwrap(), sample_graph(&src, 80, 5).unwrap());
    }

    #[test]
    fn first_repetition_matches_single_sample() {
        let src = constant(0.4);
        let g = sample_graph(&src, 60, 21).unwrap();
        let r = mc_check(&src, 60, 1, 21).unwrap();
        assert_eq!(r.edge.mean, graph_densities(&g, 2).unwrap());
    }

    #[test]
    fn grid_source() {
        let grid = GridGraphon::constant(30, 0.3).unwrap();
        let r = mc_check(&grid.into(), 300, 4, 2).unwrap();
        assert!((r.edge.exact - 0.3).abs() < 1e-14);
        assert!(r.edge.z.abs() < 5.0);
    }

    #[test]
    fn edge_list_round_trip() {
        let src: Source = BipodalGraphon::new(0.1, 0.9, 0.4, 0.5).unwrap().into();
        let g = sample_graph(&src, 50, 77).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n=50 seed=77\n"));
        assert_eq!(text.lines().count() as u64, g.edge_count() + 1);
        let back = SampledGraph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back.n(), 50);
        assert_eq!(back.seed(), 77);
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn samples_are_simple(n in 2usize..130, seed in any::<u64>(), a in 0.0f64..1.0, c in 0.05f64..0.5) {
            let src: Source = BipodalGraphon::new(a, 1.0 - a, c, 0.5).unwrap().into();
            let g = sample_graph(&src, n, seed).unwrap();
            for i in 0..n {
                prop_assert!(!g.has_edge(i, i));
                for j in 0..n {
                    prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
                }
            }
        }

        #[test]
        fn triangles_match_trace(n in 3usize..50, seed in any::<u64>(), p in 0.05f64..0.95) {
            let g = sample_graph(&constant(p), n, seed).unwrap();
            let nf = n as f64;
            let by_count = graph_densities(&g, 3).unwrap();
            let by_trace = g.closed_walks(3) / (nf * nf * nf);
            prop_assert!((by_count - by_trace).abs() <= 1e-15);
        }
    }
}
