//! Target coupling graphs mapped onto chain indices.
//!
//! Couplings are in rad/s with J > 0 antiferromagnetic. 2D lattices are laid
//! onto the chain row-major; duplicate edges produced by wraparound on
//! two-cell periodic directions are merged by summing their weights.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::io;

pub const SIGN_CONVENTION: &str = "J > 0 antiferromagnetic";

#[derive(Debug, Clone, PartialEq)]
pub struct TargetGraph {
    pub name: String,
    pub j_target: CouplingMatrix,
    /// Per-ion 2D coordinates for plotting.
    pub embedding: Option<Vec<[f64; 2]>>,
    /// How lattice sites map onto chain indices.
    pub index_map: String,
}

/// Sidecar metadata written next to a graph CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub name: String,
    pub n: usize,
    pub index_map: String,
    pub sign_convention: String,
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<[f64; 2]>>,
}

impl TargetGraph {
    pub fn n(&self) -> usize {
        self.j_target.n()
    }

    /// Edges (i, j, J_ij) with i < j and J_ij ≠ 0.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.j_target.get(i, j);
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Number of distinct neighbors of site i.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n()).filter(|&j| j != i && self.j_target.get(i, j) != 0.0).count()
    }

    /// Same pattern with the largest |J| scaled to one.
    pub fn unit_pattern(&self) -> TargetGraph {
        let m = self.j_target.max_abs();
        let j = if m > 0.0 { self.j_target.scaled(1.0 / m) } else { self.j_target.clone() };
        TargetGraph { j_target: j, ..self.clone() }
    }

    pub fn metadata(&self) -> GraphMetadata {
        GraphMetadata {
            name: self.name.clone(),
            n: self.n(),
            index_map: self.index_map.clone(),
            sign_convention: SIGN_CONVENTION.into(),
            units: "Hz".into(),
            embedding: self.embedding.clone(),
        }
    }

    /// Writes `<path>` (N×N matrix in Hz) and `<path>.meta.toml`.
    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_matrix_hz(path, self.j_target.as_matrix())?;
        let meta = toml::to_string(&self.metadata())
            .map_err(|e| Error::Graph(format!("serializing metadata: {e}")))?;
        std::fs::write(sidecar_path(path), meta)?;
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    s.into()
}

fn add_edge(j: &mut DMatrix<f64>, a: usize, b: usize, w: f64) {
    if a != b {
        j[(a, b)] += w;
        j[(b, a)] += w;
    }
}

fn build(name: String, j: DMatrix<f64>, embedding: Option<Vec<[f64; 2]>>, index_map: &str) -> TargetGraph {
    TargetGraph {
        name,
        j_target: CouplingMatrix::from_matrix(j).expect("generator builds square matrices"),
        embedding,
        index_map: index_map.into(),
    }
}

/// Periodic square lattice; site (r, c) is ion `r·cols + c`.
pub fn square_lattice_pbc(rows: usize, cols: usize, j0: f64) -> Result<TargetGraph> {
    if rows < 2 || cols < 2 {
        return Err(Error::Graph(format!("square lattice needs rows, cols >= 2, got {rows}x{cols}")));
    }
    let n = rows * cols;
    let idx = |r: usize, c: usize| (r % rows) * cols + (c % cols);
    let mut j = DMatrix::zeros(n, n);
    let mut emb = Vec::with_capacity(n);
    for r in 0..rows {
        for c in 0..cols {
            add_edge(&mut j, idx(r, c), idx(r, c + 1), j0);
            add_edge(&mut j, idx(r, c), idx(r + 1, c), j0);
            emb.push([c as f64, r as f64]);
        }
    }
    Ok(build(format!("square_{rows}x{cols}_pbc"), j, Some(emb), "row-major: ion = row*cols + col"))
}

/// Periodic Kagome lattice: a three-site basis (A, B, C) forming one
/// up-triangle per cell of a triangular Bravais lattice. Site `s` of cell
/// (x, y) is ion `3·(y·cells_x + x) + s`.
pub fn kagome_pbc(cells_x: usize, cells_y: usize, j0: f64) -> Result<TargetGraph> {
    if cells_x < 2 || cells_y < 2 {
        return Err(Error::Graph(format!(
            "kagome lattice needs at least 2x2 cells, got {cells_x}x{cells_y}"
        )));
    }
    let n = 3 * cells_x * cells_y;
    let (cx, cy) = (cells_x as isize, cells_y as isize);
    let idx = |x: isize, y: isize, s: usize| -> usize {
        let (x, y) = (x.rem_euclid(cx) as usize, y.rem_euclid(cy) as usize);
        3 * (y * cells_x + x) + s
    };
    // Bravais vectors for unit nearest-neighbor distance.
    let a1 = [2.0, 0.0];
    let a2 = [1.0, 3f64.sqrt()];
    let mut j = DMatrix::zeros(n, n);
    let mut emb = vec![[0.0; 2]; n];
    for y in 0..cy {
        for x in 0..cx {
            let (a, b, c) = (idx(x, y, 0), idx(x, y, 1), idx(x, y, 2));
            // Up triangle inside the cell.
            add_edge(&mut j, a, b, j0);
            add_edge(&mut j, b, c, j0);
            add_edge(&mut j, c, a, j0);
            // Down triangle: B(x,y), A(x+1,y), C(x+1,y-1).
            let a_next = idx(x + 1, y, 0);
            let c_next = idx(x + 1, y - 1, 2);
            add_edge(&mut j, b, a_next, j0);
            add_edge(&mut j, a_next, c_next, j0);
            add_edge(&mut j, c_next, b, j0);

            let origin = [
                x as f64 * a1[0] + y as f64 * a2[0],
                x as f64 * a1[1] + y as f64 * a2[1],
            ];
            emb[a] = origin;
            emb[b] = [origin[0] + 0.5 * a1[0], origin[1] + 0.5 * a1[1]];
            emb[c] = [origin[0] + 0.5 * a2[0], origin[1] + 0.5 * a2[1]];
        }
    }
    Ok(build(
        format!("kagome_{cells_x}x{cells_y}_pbc"),
        j,
        Some(emb),
        "row-major cells: ion = 3*(y*cells_x + x) + sublattice",
    ))
}

/// Nearest-neighbor chain, optionally closed into a ring.
pub fn chain_nn(n: usize, j0: f64, periodic: bool) -> Result<TargetGraph> {
    if n < 2 {
        return Err(Error::Graph(format!("chain needs at least 2 sites, got {n}")));
    }
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        add_edge(&mut j, i, i + 1, j0);
    }
    if periodic {
        add_edge(&mut j, n - 1, 0, j0);
    }
    let emb = (0..n).map(|i| [i as f64, 0.0]).collect();
    let name = if periodic { format!("ring_{n}") } else { format!("chain_{n}") };
    Ok(build(name, j, Some(emb), "identity"))
}

/// All-to-all coupling j0.
pub fn uniform_full(n: usize, j0: f64) -> Result<TargetGraph> {
    if n < 2 {
        return Err(Error::Graph(format!("uniform graph needs at least 2 sites, got {n}")));
    }
    let mut j = DMatrix::from_element(n, n, j0);
    j.fill_diagonal(0.0);
    Ok(build(format!("uniform_{n}"), j, None, "identity"))
}

/// Symmetry tolerance for matrices read from disk, relative to max(1, max|J|) in Hz.
pub const FILE_SYMMETRY_TOL: f64 = 1e-9;

/// Loads an N×N CSV matrix in Hz, plus `<path>.meta.toml` if present.
pub fn from_file(path: &Path) -> Result<TargetGraph> {
    let hz = io::read_matrix(path)?;
    let n = hz.nrows();
    let scale = hz.amax().max(1.0);
    for i in 0..n {
        if hz[(i, i)] != 0.0 {
            return Err(Error::Graph(format!(
                "{}: nonzero diagonal entry {} at ion {i}",
                path.display(),
                hz[(i, i)]
            )));
        }
        for j in (i + 1)..n {
            let d = (hz[(i, j)] - hz[(j, i)]).abs();
            if d > FILE_SYMMETRY_TOL * scale {
                return Err(Error::Graph(format!(
                    "{}: asymmetric entries ({i},{j}) differ by {d:e} Hz",
                    path.display()
                )));
            }
        }
    }
    let j = CouplingMatrix::from_matrix(hz * std::f64::consts::TAU)?;

    let meta_path = sidecar_path(path);
    let meta: Option<GraphMetadata> = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path)?;
        Some(toml::from_str(&text).map_err(|e| Error::Parse {
            path: meta_path.clone(),
            message: e.to_string(),
        })?)
    } else {
        None
    };
    if let Some(m) = &meta {
        if m.n != n {
            return Err(Error::Graph(format!(
                "{}: metadata declares {} ions, matrix has {n}",
                meta_path.display(),
                m.n
            )));
        }
    }
    let name = meta
        .as_ref()
        .map(|m| m.name.clone())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "file".into());
    Ok(TargetGraph {
        name,
        j_target: j,
        embedding: meta.as_ref().and_then(|m| m.embedding.clone()),
        index_map: meta.map(|m| m.index_map).unwrap_or_else(|| "identity".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Exhaustive triangle enumeration on the adjacency matrix.
    fn triangles(g: &TargetGraph) -> Vec<[usize; 3]> {
        let n = g.n();
        let adj = |a: usize, b: usize| g.j_target.get(a, b) != 0.0;
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    if adj(a, b) && adj(b, c) && adj(a, c) {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }

    fn assert_symmetric_zero_diag(g: &TargetGraph) {
        let m = g.j_target.as_matrix();
        assert_eq!(m, &m.transpose());
        assert!(m.diagonal().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn square_5x5() {
        let g = square_lattice_pbc(5, 5, 1.0).unwrap();
        assert_eq!(g.n(), 25);
        assert_eq!(g.edges().len(), 50);
        assert!(g.edges().iter().all(|e| e.2 == 1.0));
        assert!((0..25).all(|i| g.degree(i) == 4));
        assert!(g.j_target.get(0, 1) != 0.0);
        assert!(g.j_target.get(0, 5) != 0.0);
        assert!(g.j_target.get(0, 20) != 0.0);
        assert!(g.j_target.get(0, 4) != 0.0);
        assert_symmetric_zero_diag(&g);
    }

    #[test]
    fn square_2x2_merges_wraparound_duplicates() {
        let g = square_lattice_pbc(2, 2, 1.0).unwrap();
        for i in 0..4 {
            assert_eq!(g.degree(i), 2);
            let row_sum: f64 = (0..4).map(|j| g.j_target.get(i, j)).sum();
            assert_eq!(row_sum, 4.0);
        }
        assert_eq!(g.j_target.get(0, 1), 2.0);
        assert_eq!(g.j_target.get(0, 3), 0.0);
    }

    #[test]
    fn square_embedding_matches_adjacency() {
        let g = square_lattice_pbc(4, 5, 1.0).unwrap();
        let emb = g.embedding.as_ref().unwrap();
        for (a, b, _) in g.edges() {
            let dx = (emb[a][0] - emb[b][0]).abs();
            let dy = (emb[a][1] - emb[b][1]).abs();
            // Lattice neighbors or their periodic images.
            let ok = (dx == 1.0 && dy == 0.0) || (dx == 0.0 && dy == 1.0) || (dx == 4.0 && dy == 0.0) || (dx == 0.0 && dy == 3.0);
            assert!(ok, "edge {a}-{b}");
        }
    }

    #[test]
    fn kagome_4x3() {
        let g = kagome_pbc(4, 3, 2.5).unwrap();
        assert_eq!(g.n(), 36);
        assert_eq!(g.edges().len(), 72);
        assert!((0..36).all(|i| g.degree(i) == 4));
        assert!(g.edges().iter().all(|e| e.2 == 2.5));
        assert_symmetric_zero_diag(&g);

        let tris = triangles(&g);
        assert_eq!(tris.len(), 2 * 4 * 3);
        let mut seen = BTreeSet::new();
        for t in &tris {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
                assert!(seen.insert((a, b)), "edge {a}-{b} in two triangles");
            }
        }
        assert_eq!(seen.len(), 72);
    }

    #[test]
    fn kagome_embedding_is_unit_distance_away_from_seams() {
        let g = kagome_pbc(4, 4, 1.0).unwrap();
        let emb = g.embedding.as_ref().unwrap();
        let mut unit = 0;
        for (a, b, _) in g.edges() {
            let d = ((emb[a][0] - emb[b][0]).powi(2) + (emb[a][1] - emb[b][1]).powi(2)).sqrt();
            if (d - 1.0).abs() < 1e-12 {
                unit += 1;
            }
        }
        // Only wraparound bonds are longer than one lattice spacing.
        assert!(unit >= g.edges().len() / 2);
        for t in triangles(&g) {
            let d = |p: usize, q: usize| {
                ((emb[p][0] - emb[q][0]).powi(2) + (emb[p][1] - emb[q][1]).powi(2)).sqrt()
            };
            let sides = [d(t[0], t[1]), d(t[1], t[2]), d(t[0], t[2])];
            if sides.iter().all(|s| (s - 1.0).abs() < 1e-12) {
                continue;
            }
            assert!(sides.iter().any(|s| *s > 1.5));
        }
    }

    #[test]
    fn chains() {
        let g = chain_nn(3, 1.0, false).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 1.0), (1, 2, 1.0)]);
        let g = chain_nn(2, 1.0, false).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 1.0)]);
        let g = chain_nn(5, 1.0, true).unwrap();
        assert!((0..5).all(|i| g.degree(i) == 2));
        assert!(chain_nn(1, 1.0, false).is_err());
    }

    #[test]
    fn uniform() {
        let g = uniform_full(3, 1.5).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert_eq!(uniform_full(2, 1.0).unwrap().j_target, chain_nn(2, 1.0, false).unwrap().j_target);
        // J + j0 I = j0 · 1 1ᵀ has rank one.
        let mut m = uniform_full(6, 2.0).unwrap().j_target.as_matrix().clone();
        m.fill_diagonal(2.0);
        assert_eq!(m.rank(1e-12), 1);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("square.csv");
        let g = square_lattice_pbc(5, 5, std::f64::consts::TAU * 27.6).unwrap();
        g.write(&path).unwrap();
        let back = from_file(&path).unwrap();
        assert_eq!(back.n(), 25);
        assert_eq!(back.name, g.name);
        assert_eq!(back.embedding, g.embedding);
        let diff = (back.j_target.as_matrix() - g.j_target.as_matrix()).amax();
        assert!(diff <= 1e-15 * g.j_target.max_abs());
    }

    #[test]
    fn file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let asym = dir.path().join("asym.csv");
        std::fs::write(&asym, "0,1\n2,0\n").unwrap();
        assert!(matches!(from_file(&asym), Err(Error::Graph(_))));

        let diag = dir.path().join("diag.csv");
        std::fs::write(&diag, "1,1\n1,0\n").unwrap();
        assert!(matches!(from_file(&diag), Err(Error::Graph(_))));

        let rows = dir.path().join("rows.csv");
        std::fs::write(&rows, "0,1,1\n1,0,1\n").unwrap();
        assert!(from_file(&rows).is_err());

        let junk = dir.path().join("junk.csv");
        std::fs::write(&junk, "0,x\n1,0\n").unwrap();
        assert!(matches!(from_file(&junk), Err(Error::Parse { .. })));
    }
}
