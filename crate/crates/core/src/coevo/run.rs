use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::CoevoConfig;
use super::evaluate::{evaluate_population, select_collaborators, FitnessRecord, Role, SimCounter};
use super::CoevoError;
use crate::cppn::Genome;
use crate::decoder::{CONTROLLER_INPUTS, CONTROLLER_OUTPUTS, SAM_INPUTS, SAM_OUTPUTS};
use crate::neat::{reproduce, speciate, EvolutionConfig, Population};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationState {
    /// Genomes awaiting their next evaluation.
    pub population: Population,
    /// The most recent evaluated generation, fitness set; collaborators are
    /// drawn from here while this population is frozen.
    pub evaluated: Vec<Genome>,
    pub generations_evolved: usize,
}

impl PopulationState {
    fn fitness(&self) -> Vec<f64> {
        self.evaluated.iter().map(|g| g.fitness.unwrap_or(0.0)).collect()
    }

    /// The `n` fittest genomes of the last evaluation.
    pub fn collaborators(&self, n: usize) -> Vec<Genome> {
        select_collaborators(&self.fitness(), n)
            .into_iter()
            .map(|i| self.evaluated[i].clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenLogRow {
    pub generation: usize,
    pub evolving_population: Role,
    pub best_aptitude: f64,
    pub mean_aptitude: f64,
    pub species_count_sam: usize,
    pub species_count_ctrl: usize,
    pub champion_aptitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Champion {
    pub sam: Genome,
    pub controller: Genome,
    pub aptitude: f64,
    pub deltas: Vec<f64>,
    /// Generation of the evaluation that found it; bootstrap counts as 0.
    pub generation: usize,
}

/// Complete coevolution state; serialises to the checkpoint file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunState {
    pub version: u32,
    pub config: CoevoConfig,
    pub sam: PopulationState,
    pub ctrl: PopulationState,
    /// Next generation to run.
    pub generation: usize,
    pub log: Vec<GenLogRow>,
    pub champion: Option<Champion>,
    pub last_records: Vec<FitnessRecord>,
    pub simulations: u64,
    rng: ChaCha8Rng,
}

fn apply_fitness(genomes: &mut [Genome], records: &[FitnessRecord]) {
    for (g, r) in genomes.iter_mut().zip(records) {
        g.fitness = Some(r.aptitude);
    }
}

fn update_champion(
    champion: &mut Option<Champion>,
    sams: &[Genome],
    controllers: &[Genome],
    records: &[FitnessRecord],
    generation: usize,
) {
    for r in records {
        if champion.as_ref().is_none_or(|c| r.aptitude > c.aptitude) {
            let mut sam = sams[r.id].clone();
            sam.fitness = Some(r.aptitude);
            let mut controller = controllers[r.best_collaborator].clone();
            controller.fitness = None;
            *champion = Some(Champion {
                sam,
                controller,
                aptitude: r.aptitude,
                deltas: r.deltas.clone(),
                generation,
            });
        }
    }
}

impl RunState {
    /// Creates both populations and runs the bootstrap evaluation: SAMs
    /// against `n` random controllers, then controllers against the `n`
    /// fittest SAMs.
    pub fn initialize(config: &CoevoConfig) -> Result<RunState, CoevoError> {
        config.validate()?;
        let config = config.resolved();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let sam_pop = Population::new(SAM_INPUTS, SAM_OUTPUTS, &config.sam_evo, &mut rng);
        let ctrl_pop = Population::new(CONTROLLER_INPUTS, CONTROLLER_OUTPUTS, &config.ctrl_evo, &mut rng);
        let n = config.n_collaborators;
        let counter = SimCounter::default();

        let random: Vec<Genome> = sample(&mut rng, ctrl_pop.genomes.len(), n)
            .into_iter()
            .map(|i| ctrl_pop.genomes[i].clone())
            .collect();
        let mut sam_evaluated = sam_pop.genomes.clone();
        let sam_records = evaluate_population(&sam_evaluated, &random, Role::Sam, &config, &counter);
        apply_fitness(&mut sam_evaluated, &sam_records);
        let mut champion = None;
        update_champion(&mut champion, &sam_evaluated, &random, &sam_records, 0);

        let sam = PopulationState { population: sam_pop, evaluated: sam_evaluated, generations_evolved: 0 };
        let top_sams = sam.collaborators(n);
        let mut ctrl_evaluated = ctrl_pop.genomes.clone();
        let ctrl_records = evaluate_population(&ctrl_evaluated, &top_sams, Role::Controller, &config, &counter);
        apply_fitness(&mut ctrl_evaluated, &ctrl_records);
        let ctrl = PopulationState { population: ctrl_pop, evaluated: ctrl_evaluated, generations_evolved: 0 };

        Ok(RunState {
            version: CHECKPOINT_VERSION,
            config,
            sam,
            ctrl,
            generation: 0,
            log: Vec::new(),
            champion,
            last_records: ctrl_records,
            simulations: counter.calls(),
            rng,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }

    pub fn evolving_role(&self) -> Role {
        if self.generation % 2 == 0 {
            Role::Sam
        } else {
            Role::Controller
        }
    }

    /// Evaluate, speciate and reproduce the population whose turn it is.
    pub fn advance(&mut self) -> Result<&GenLogRow, CoevoError> {
        let role = self.evolving_role();
        let n = self.config.n_collaborators;
        let counter = SimCounter::default();
        let (evolving, frozen, evo_cfg): (&mut PopulationState, &PopulationState, &EvolutionConfig) = match role {
            Role::Sam => (&mut self.sam, &self.ctrl, &self.config.sam_evo),
            Role::Controller => (&mut self.ctrl, &self.sam, &self.config.ctrl_evo),
        };
        let collaborators = frozen.collaborators(n);
        let records =
            evaluate_population(&evolving.population.genomes, &collaborators, role, &self.config, &counter);
        apply_fitness(&mut evolving.population.genomes, &records);
        evolving.evaluated = evolving.population.genomes.clone();
        if role == Role::Sam {
            update_champion(&mut self.champion, &evolving.evaluated, &collaborators, &records, self.generation);
        }
        speciate(&mut evolving.population, evo_cfg)?;
        reproduce(&mut evolving.population, evo_cfg, &mut self.rng)?;
        evolving.generations_evolved += 1;

        let best = records.iter().map(|r| r.aptitude).fold(f64::NEG_INFINITY, f64::max);
        let mean = records.iter().map(|r| r.aptitude).sum::<f64>() / records.len() as f64;
        self.log.push(GenLogRow {
            generation: self.generation,
            evolving_population: role,
            best_aptitude: best,
            mean_aptitude: mean,
            species_count_sam: self.sam.population.species.len(),
            species_count_ctrl: self.ctrl.population.species.len(),
            champion_aptitude: self.champion.as_ref().map_or(0.0, |c| c.aptitude),
        });
        self.last_records = records;
        self.simulations += counter.calls();
        self.generation += 1;
        Ok(self.log.last().expect("just pushed"))
    }

    /// Runs the remaining generations, calling `after` once per generation.
    pub fn run_with<E: From<CoevoError>>(
        &mut self,
        mut after: impl FnMut(&RunState) -> Result<(), E>,
    ) -> Result<(), E> {
        while !self.is_finished() {
            self.advance()?;
            after(self)?;
        }
        Ok(())
    }

    pub fn to_checkpoint_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_checkpoint_json(s: &str) -> Result<RunState, CoevoError> {
        let state: RunState =
            serde_json::from_str(s).map_err(|e| CoevoError::CorruptCheckpoint(e.to_string()))?;
        if state.version != CHECKPOINT_VERSION {
            return Err(CoevoError::CorruptCheckpoint(format!(
                "unsupported checkpoint version {}",
                state.version
            )));
        }
        if state.log.len() != state.generation {
            return Err(CoevoError::CorruptCheckpoint("log length does not match generation".into()));
        }
        Ok(state)
    }
}

/// Runs a full coevolution from scratch.
pub fn coevolve(config: &CoevoConfig) -> Result<RunState, CoevoError> {
    let mut state = RunState::initialize(config)?;
    state.run_with(|_| Ok::<(), CoevoError>(()))?;
    Ok(state)
}
