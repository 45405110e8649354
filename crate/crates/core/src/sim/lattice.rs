use std::collections::HashMap;

use super::params::MaterialParams;
use super::SimError;
use crate::decoder::{Cell, Coord, Morphology};

/// Edge-spring stiffness is `E * voxel_size / EDGE_COMPLIANCE`. For a cube
/// whose 28 corner pairs are all springs, with diagonals at
/// `DIAGONAL_RATIO` of the edge stiffness, uniaxial tension gives an
/// effective modulus of `6.3304 * k / L`.
pub const EDGE_COMPLIANCE: f64 = 6.330434782608695;
pub const DIAGONAL_RATIO: f64 = 0.6;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    pub rest_length: f64,
    pub stiffness: f64,
    /// Voxel indices (into `Lattice::voxels`) that contributed this spring.
    pub owners: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVoxel {
    pub coord: Coord,
    pub contractile: bool,
    /// Node indices of the eight corners, bit 0 = +x, bit 1 = +y, bit 2 = +z.
    pub corners: [usize; 8],
}

/// Mass-spring discretisation of a morphology at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub positions: Vec<Vec3>,
    pub masses: Vec<f64>,
    pub anchored: Vec<bool>,
    pub springs: Vec<Spring>,
    pub voxels: Vec<LatticeVoxel>,
    pub voxel_size: f64,
}

impl Lattice {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn spring_count(&self) -> usize {
        self.springs.len()
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_stiffness(&self) -> f64 {
        self.springs.iter().map(|s| s.stiffness).fold(0.0, f64::max)
    }

    /// Largest stable explicit step, `0.5 * sqrt(m_min / k_max)`.
    pub fn stable_dt(&self) -> f64 {
        0.5 * (self.min_mass() / self.max_stiffness()).sqrt()
    }

    pub fn voxel_center(&self, positions: &[Vec3], voxel: usize) -> Vec3 {
        let mut c = [0.0; 3];
        for &n in &self.voxels[voxel].corners {
            for d in 0..3 {
                c[d] += positions[n][d];
            }
        }
        c.map(|v| v / 8.0)
    }
}

fn distance(p: &Vec3, q: &Vec3) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn corner_offset(bit: usize) -> (usize, usize, usize) {
    (bit & 1, (bit >> 1) & 1, (bit >> 2) & 1)
}

pub fn build_lattice(morph: &Morphology, mat: &MaterialParams) -> Result<Lattice, SimError> {
    let dims = morph.dims();
    if morph.voxel_count() == 0 {
        return Err(SimError::EmptyMorphology);
    }
    let l = mat.voxel_size;
    let k_edge = mat.youngs_modulus * l / EDGE_COMPLIANCE;
    let corner_mass = mat.voxel_mass() / 8.0;

    let (cx, cy) = (dims.nx + 1, dims.ny + 1);
    let mut node_of_corner: Vec<Option<usize>> = vec![None; cx * cy * (dims.nz + 1)];
    let mut positions = Vec::new();
    let mut masses = Vec::new();
    let mut anchored = Vec::new();
    let mut voxels = Vec::new();
    let mut springs: Vec<Spring> = Vec::new();
    let mut spring_of_pair: HashMap<(usize, usize), usize> = HashMap::new();

    for idx in 0..dims.len() {
        let cell = morph.grid.cells[idx];
        if !cell.is_present() {
            continue;
        }
        let (i, j, k) = dims.coord(idx);
        let mut corners = [0usize; 8];
        for (bit, slot) in corners.iter_mut().enumerate() {
            let (di, dj, dk) = corner_offset(bit);
            let (ci, cj, ck) = (i + di, j + dj, k + dk);
            let key = ci + cx * (cj + cy * ck);
            let node = *node_of_corner[key].get_or_insert_with(|| {
                positions.push([ci as f64 * l, cj as f64 * l, ck as f64 * l]);
                masses.push(0.0);
                anchored.push(ci == 0);
                positions.len() - 1
            });
            masses[node] += corner_mass;
            *slot = node;
        }
        let voxel = voxels.len();
        voxels.push(LatticeVoxel { coord: (i, j, k), contractile: cell == Cell::Contractile, corners });

        for p in 0..8usize {
            for q in (p + 1)..8 {
                let hamming = (p ^ q).count_ones();
                let stiffness = if hamming == 1 { k_edge } else { DIAGONAL_RATIO * k_edge };
                let (a, b) = (corners[p], corners[q]);
                let pair = (a.min(b), a.max(b));
                match spring_of_pair.get(&pair) {
                    Some(&s) => {
                        springs[s].stiffness += stiffness;
                        springs[s].owners.push(voxel);
                    }
                    None => {
                        spring_of_pair.insert(pair, springs.len());
                        springs.push(Spring {
                            a: pair.0,
                            b: pair.1,
                            rest_length: distance(&positions[pair.0], &positions[pair.1]),
                            stiffness,
                            owners: vec![voxel],
                        });
                    }
                }
            }
        }
    }
    Ok(Lattice { positions, masses, anchored, springs, voxels, voxel_size: l })
}
