use std::f64::consts::TAU;
use std::io;

use super::lattice::{build_lattice, Lattice, Spring, Vec3};
use super::params::{ActuationParams, DisplacementMode, SimParams};
use super::SimError;
use crate::decoder::{ControllerMap, Morphology};

/// Coordinates farther than this many voxel lengths from the origin count
/// as a numerical blowup.
pub const BLOWUP_VOXELS: f64 = 1e3;

/// Rest length of `spring` at time `t`: contractile owners scale it by the
/// mean of their sinusoids, passive-only springs keep `L0`.
pub fn rest_length_at(
    lattice: &Lattice,
    spring: &Spring,
    t: f64,
    act: &ActuationParams,
    ctrl: &ControllerMap,
) -> f64 {
    let (sum, count) = spring
        .owners
        .iter()
        .map(|&v| &lattice.voxels[v])
        .filter(|v| v.contractile)
        .map(|v| (TAU * act.frequency * t + ctrl.phase(v.coord).unwrap_or(0.0)).sin())
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if count == 0 {
        spring.rest_length
    } else {
        spring.rest_length * (1.0 + act.linear_amplitude() * sum / count as f64)
    }
}

/// Checks that `ctrl` assigns a phase to exactly the contractile voxels.
pub fn check_domain(morph: &Morphology, ctrl: &ControllerMap) -> Result<(), SimError> {
    let contractile = morph.contractile_cells();
    let missing = contractile.iter().filter(|c| ctrl.phase(**c).is_none()).count();
    let extra = ctrl.len() + missing - contractile.len();
    if missing > 0 || extra > 0 {
        return Err(SimError::DomainMismatch { missing, extra });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Link {
    a: u32,
    b: u32,
    stiffness: f64,
}

#[derive(Debug, Clone, Copy)]
struct ActuatedLink {
    spring: u32,
    owners_start: u32,
    owners_end: u32,
    rest_length: f64,
}

/// Explicit mass-spring integrator for one body and controller.
#[derive(Debug, Clone)]
pub struct Simulator {
    lattice: Lattice,
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
    forces: Vec<Vec3>,
    inv_mass: Vec<f64>,
    links: Vec<Link>,
    rest: Vec<f64>,
    actuated: Vec<ActuatedLink>,
    // contractile-voxel slots, indexed through `ActuatedLink::owners_*`
    owner_phase: Vec<usize>,
    phases: Vec<f64>,
    sines: Vec<f64>,
    free_end: Vec<usize>,
    omega: f64,
    amplitude: f64,
    dt: f64,
    damping: f64,
    gravity: Vec3,
    limit: f64,
    step_index: usize,
    actuation_enabled: bool,
}

impl Simulator {
    pub fn new(morph: &Morphology, ctrl: &ControllerMap, params: &SimParams) -> Result<Self, SimError> {
        params.validate()?;
        if morph.voxel_count() == 0 {
            return Err(SimError::EmptyMorphology);
        }
        check_domain(morph, ctrl)?;
        let lattice = build_lattice(morph, &params.material)?;
        let bound = lattice.stable_dt();
        if params.sim.dt > bound {
            return Err(SimError::UnstableTimeStep { dt: params.sim.dt, bound });
        }

        let mut contractile_slot = vec![usize::MAX; lattice.voxels.len()];
        let mut phases = Vec::new();
        for (v, voxel) in lattice.voxels.iter().enumerate() {
            if voxel.contractile {
                contractile_slot[v] = phases.len();
                phases.push(ctrl.phase(voxel.coord).expect("domain checked"));
            }
        }
        let mut actuated = Vec::new();
        let mut owner_phase = Vec::new();
        for (i, s) in lattice.springs.iter().enumerate() {
            let start = owner_phase.len();
            owner_phase.extend(
                s.owners
                    .iter()
                    .map(|&v| contractile_slot[v])
                    .filter(|&slot| slot != usize::MAX),
            );
            if owner_phase.len() > start {
                actuated.push(ActuatedLink {
                    spring: i as u32,
                    owners_start: start as u32,
                    owners_end: owner_phase.len() as u32,
                    rest_length: s.rest_length,
                });
            }
        }
        let links = lattice
            .springs
            .iter()
            .map(|s| Link { a: s.a as u32, b: s.b as u32, stiffness: s.stiffness })
            .collect();

        let free_end = morph
            .free_end_cells
            .iter()
            .map(|c| {
                lattice
                    .voxels
                    .iter()
                    .position(|v| v.coord == *c)
                    .expect("free-end voxel is present")
            })
            .collect();

        let n = lattice.node_count();
        Ok(Simulator {
            positions: lattice.positions.clone(),
            velocities: vec![[0.0; 3]; n],
            forces: vec![[0.0; 3]; n],
            inv_mass: lattice.masses.iter().map(|m| 1.0 / m).collect(),
            links,
            rest: lattice.springs.iter().map(|s| s.rest_length).collect(),
            actuated,
            owner_phase,
            sines: vec![0.0; phases.len()],
            phases,
            free_end,
            omega: TAU * params.actuation.frequency,
            amplitude: params.actuation.linear_amplitude(),
            dt: params.sim.dt,
            damping: params.sim.damping,
            gravity: params.sim.gravity,
            limit: BLOWUP_VOXELS * params.material.voxel_size,
            step_index: 0,
            actuation_enabled: true,
            lattice,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.velocities
    }

    /// Direct velocity access for perturbation experiments. Anchored nodes
    /// are re-zeroed on the next step.
    pub fn velocities_mut(&mut self) -> &mut [Vec3] {
        &mut self.velocities
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step_index
    }

    /// With actuation off every spring relaxes to its construction length.
    pub fn set_actuation(&mut self, enabled: bool) {
        self.actuation_enabled = enabled;
        if !enabled {
            for (r, s) in self.rest.iter_mut().zip(&self.lattice.springs) {
                *r = s.rest_length;
            }
        }
    }

    fn update_rest_lengths(&mut self, t: f64) {
        if !self.actuation_enabled || self.phases.is_empty() {
            return;
        }
        for (s, &phi) in self.sines.iter_mut().zip(&self.phases) {
            *s = (self.omega * t + phi).sin();
        }
        for link in &self.actuated {
            let owners = &self.owner_phase[link.owners_start as usize..link.owners_end as usize];
            let mean = owners.iter().map(|&o| self.sines[o]).sum::<f64>() / owners.len() as f64;
            self.rest[link.spring as usize] = link.rest_length * (1.0 + self.amplitude * mean);
        }
    }

    fn accumulate_forces(&mut self) {
        for f in self.forces.iter_mut() {
            *f = [0.0; 3];
        }
        let forces = &mut self.forces;
        let positions = &self.positions;
        for (link, &rest) in self.links.iter().zip(&self.rest) {
            let (a, b) = (link.a as usize, link.b as usize);
            let (pa, pb) = (positions[a], positions[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if len == 0.0 {
                continue;
            }
            let scale = link.stiffness * (len - rest) / len;
            let f = [scale * d[0], scale * d[1], scale * d[2]];
            let fa = &mut forces[a];
            fa[0] += f[0];
            fa[1] += f[1];
            fa[2] += f[2];
            let fb = &mut forces[b];
            fb[0] -= f[0];
            fb[1] -= f[1];
            fb[2] -= f[2];
        }
    }

    /// Advances one step from `time()` to `time() + dt`.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.time();
        self.update_rest_lengths(t);
        self.accumulate_forces();
        let keep = 1.0 - self.damping * self.dt;
        for n in 0..self.positions.len() {
            if self.lattice.anchored[n] {
                self.velocities[n] = [0.0; 3];
                continue;
            }
            for axis in 0..3 {
                let v = &mut self.velocities[n][axis];
                *v += self.dt * (self.forces[n][axis] * self.inv_mass[n] + self.gravity[axis]);
                *v *= keep;
                let p = &mut self.positions[n][axis];
                *p += self.dt * *v;
                if !(p.abs() <= self.limit) {
                    self.step_index += 1;
                    return Err(SimError::NumericalBlowup { step: self.step_index });
                }
            }
        }
        self.step_index += 1;
        Ok(())
    }

    /// Mean of the free-end voxel centres.
    pub fn free_end_centroid(&self) -> Vec3 {
        let mut c = [0.0; 3];
        for &v in &self.free_end {
            let center = self.lattice.voxel_center(&self.positions, v);
            for axis in 0..3 {
                c[axis] += center[axis];
            }
        }
        c.map(|x| x / self.free_end.len() as f64)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.lattice.masses)
            .zip(&self.lattice.anchored)
            .filter(|(_, &anchored)| !anchored)
            .map(|((v, m), _)| 0.5 * m * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .sum()
    }

    /// Elastic energy relative to the current rest lengths.
    pub fn potential_energy(&self) -> f64 {
        self.lattice
            .springs
            .iter()
            .zip(&self.rest)
            .map(|(s, &rest)| {
                let (pa, pb) = (self.positions[s.a], self.positions[s.b]);
                let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2) + (pb[2] - pa[2]).powi(2)).sqrt();
                0.5 * s.stiffness * (len - rest).powi(2)
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub position: Vec3,
}

/// Free-end centroid over time, first sample at t = 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn initial(&self) -> Option<&TraceSample> {
        self.samples.first()
    }

    pub fn final_sample(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "z"])?;
        for s in &self.samples {
            w.write_record([s.t, s.position[0], s.position[1], s.position[2]].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn yz_distance(a: &Vec3, b: &Vec3) -> f64 {
    (b[1] - a[1]).hypot(b[2] - a[2])
}

/// Planar distance between the first and last free-end positions.
pub fn displacement_yz(trace: &Trace) -> f64 {
    match (trace.initial(), trace.final_sample()) {
        (Some(a), Some(b)) => yz_distance(&a.position, &b.position),
        _ => 0.0,
    }
}

/// Largest planar distance of any sample from the first.
pub fn max_displacement_yz(trace: &Trace) -> f64 {
    let Some(first) = trace.initial() else { return 0.0 };
    trace
        .samples
        .iter()
        .map(|s| yz_distance(&first.position, &s.position))
        .fold(0.0, f64::max)
}

pub fn displacement(trace: &Trace, mode: DisplacementMode) -> f64 {
    match mode {
        DisplacementMode::Final => displacement_yz(trace),
        DisplacementMode::MaxOverTrace => max_displacement_yz(trace),
    }
}

pub fn simulate(morph: &Morphology, ctrl: &ControllerMap, params: &SimParams) -> Result<Trace, SimError> {
    let mut sim = Simulator::new(morph, ctrl, params)?;
    let every = params.sim.record_every;
    let mut samples = Vec::with_capacity(params.sim.sample_count());
    samples.push(TraceSample { t: 0.0, position: sim.free_end_centroid() });
    for n in 1..=params.sim.steps() {
        sim.step()?;
        if n % every == 0 {
            samples.push(TraceSample { t: sim.time(), position: sim.free_end_centroid() });
        }
    }
    Ok(Trace { samples })
}

/// Simulates and reduces the trace with the configured displacement mode.
pub fn simulate_displacement(
    morph: &Morphology,
    ctrl: &ControllerMap,
    params: &SimParams,
) -> Result<f64, SimError> {
    let trace = simulate(morph, ctrl, params)?;
    Ok(displacement(&trace, params.sim.displacement_mode))
}
