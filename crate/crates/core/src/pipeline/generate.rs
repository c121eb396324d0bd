use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::{apply_cutout, synthesize_background_sample, synthesize_image, Cutout, IntensityVolume};
use crate::error::{Error, Result};
use crate::manifest::{write_manifest, SampleClass, SampleManifestEntry};
use crate::nifti::write_volume;
use crate::patchqc::{extract_patches, qc_patch, ExtractParams, PatchSpec, QCReport, RejectionCounts};
use crate::pipeline::config::DatasetConfig;
use crate::raster::rasterize_tree;
use crate::rng::{derive_seed, rng_from_seed, substream, Stream};
use crate::treegen::grow_tree;
use crate::volume::{Dims, MaskVolume};

const ROLE_TREE: u64 = 0;
const ROLE_SAMPLE: u64 = 1;

const LANE_GROW: u64 = 0;
const LANE_EXTRACT: u64 = 1;
const LANE_PATCH: u64 = 1 << 32;
const LANE_APPEARANCE: u64 = 0;
const LANE_CUTOUT: u64 = 1;

/// Largest number of trees grown concurrently for one class.
const MAX_BATCH: usize = 8;

/// `class << 56 | role << 48 | counter`.
pub fn sample_index(class: SampleClass, role: u64, counter: u64) -> u64 {
    (class.code() << 56) | (role << 48) | (counter & ((1 << 48) - 1))
}

pub fn tree_seed(master: u64, stream: Stream, class: SampleClass, tree: u64) -> u64 {
    derive_seed(master, stream, sample_index(class, ROLE_TREE, tree))
}

pub fn background_seed(master: u64, stream: Stream, counter: u64) -> u64 {
    derive_seed(master, stream, sample_index(SampleClass::Background, ROLE_SAMPLE, counter))
}

pub fn patch_seed(tree_seed: u64, k: u64) -> u64 {
    substream(tree_seed, LANE_PATCH | k)
}

pub fn sample_id(stream: Stream, class: SampleClass, i: usize) -> String {
    format!("{}_{}_{:06}", stream.name(), class.name(), i)
}

/// One rendered (image, label) pair.
#[derive(Clone, Debug)]
pub struct Sample {
    pub class: SampleClass,
    pub seed: u64,
    pub image: IntensityVolume,
    pub label: MaskVolume,
    pub qc: QCReport,
    pub cutout: Option<Cutout>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub grow: f64,
    pub rasterize: f64,
    pub extract: f64,
    pub synthesize: f64,
    pub write: f64,
}

impl StageSeconds {
    fn add(&mut self, o: &Self) {
        self.grow += o.grow;
        self.rasterize += o.rasterize;
        self.extract += o.extract;
        self.synthesize += o.synthesize;
        self.write += o.write;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub trees_grown: usize,
    /// Trees that yielded no accepted patch.
    pub trees_discarded: usize,
    pub patches_attempted: usize,
    pub patches_accepted: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub trees_grown: usize,
    pub trees_discarded: usize,
    /// Keyed `"<stream>/<class>"`.
    pub classes: BTreeMap<String, ClassStats>,
    pub rejections: RejectionCounts,
    /// Per-stage time summed over workers.
    pub stage_seconds: StageSeconds,
    pub wall_seconds: f64,
}

/// A grown, rasterized tree and the patches accepted from it.
struct Harvest {
    seed: u64,
    mask: Arc<MaskVolume>,
    accepted: Vec<(PatchSpec, QCReport)>,
    attempts: usize,
    rejections: RejectionCounts,
    times: StageSeconds,
}

fn harvest_tree(config: &DatasetConfig, class: SampleClass, seed: u64, cap: usize) -> Result<Harvest> {
    let mut times = StageSeconds::default();
    let params = config.growth_for(class);
    let t = Instant::now();
    let tree = grow_tree(&params, substream(seed, LANE_GROW))?;
    times.grow = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let raster = rasterize_tree(&tree, Dims(params.domain_dims))?;
    times.rasterize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let extract = ExtractParams {
        max_accepted: cap,
        ..config.patches
    };
    let mut rng = rng_from_seed(substream(seed, LANE_EXTRACT));
    let ex = extract_patches(&raster.mask, &extract, &mut rng)?;
    times.extract = t.elapsed().as_secs_f64();
    Ok(Harvest {
        seed,
        mask: Arc::new(raster.mask),
        accepted: ex.accepted,
        attempts: ex.attempts,
        rejections: ex.rejections,
        times,
    })
}

/// Renders a vessel sample from an accepted label patch.
pub fn render_vessel_sample(
    config: &DatasetConfig,
    class: SampleClass,
    label: MaskVolume,
    qc: QCReport,
    seed: u64,
) -> Result<Sample> {
    let appearance = config.appearance_for(class);
    let image = synthesize_image(&label, &appearance, &mut rng_from_seed(substream(seed, LANE_APPEARANCE)))?;
    let cutout = match &config.cutout {
        Some(c) => Some(apply_cutout(&image, c, &mut rng_from_seed(substream(seed, LANE_CUTOUT)))?),
        None => None,
    };
    Ok(Sample {
        class,
        seed,
        image,
        label,
        qc,
        cutout,
    })
}

pub fn render_background_sample(config: &DatasetConfig, seed: u64) -> Result<Sample> {
    let size = Dims::cube(config.patches.patch_size);
    let (image, label) = synthesize_background_sample(
        size,
        &config.appearance,
        &mut rng_from_seed(substream(seed, LANE_APPEARANCE)),
    )?;
    let qc = qc_patch(&label, config.patches.occ_threshold);
    let cutout = match &config.cutout {
        Some(c) => Some(apply_cutout(&image, c, &mut rng_from_seed(substream(seed, LANE_CUTOUT)))?),
        None => None,
    };
    Ok(Sample {
        class: SampleClass::Background,
        seed,
        image,
        label,
        qc,
        cutout,
    })
}

/// One sample for a class and index, as served over the network: vessel
/// classes try fresh trees until one yields an accepted patch.
pub fn generate_single(config: &DatasetConfig, class: SampleClass, index: u64) -> Result<Sample> {
    let base = substream(derive_seed(config.master_seed, Stream::Train, index), class.code() << 32);
    if !class.has_vessels() {
        return render_background_sample(config, base);
    }
    let tries = config.tree_budget_factor.max(1) as u64;
    for attempt in 0..tries {
        let seed = substream(base, LANE_PATCH | attempt);
        let h = harvest_tree(config, class, seed, 1)?;
        if let Some((spec, qc)) = h.accepted.into_iter().next() {
            let label = h.mask.crop(spec.origin, spec.size)?;
            return render_vessel_sample(config, class, label, qc, patch_seed(seed, 0));
        }
    }
    Err(Error::Generation(format!(
        "no {class} patch passed QC within {tries} trees for index {index}"
    )))
}

/// A selected patch awaiting rendering.
struct Job {
    id: String,
    seed: u64,
    source: Option<(Arc<MaskVolume>, PatchSpec, QCReport)>,
}

struct Layout {
    root: PathBuf,
}

impl Layout {
    fn rel_image(id: &str) -> String {
        format!("images/{id}.nii.gz")
    }

    fn rel_label(id: &str) -> String {
        format!("labels/{id}.nii.gz")
    }

    fn rel_cutout(id: &str) -> (String, String) {
        (format!("cutout/{id}_image.nii.gz"), format!("cutout/{id}_mask.nii.gz"))
    }

    fn create(root: &Path, with_cutout: bool) -> Result<Self> {
        let mut dirs = vec!["images", "labels"];
        if with_cutout {
            dirs.push("cutout");
        }
        for d in dirs {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(Self { root: root.into() })
    }
}

fn render_and_write(
    config: &DatasetConfig,
    class: SampleClass,
    job: &Job,
    layout: &Layout,
    hash: &str,
) -> Result<(SampleManifestEntry, StageSeconds)> {
    let mut times = StageSeconds::default();
    let t = Instant::now();
    let sample = match &job.source {
        Some((mask, spec, qc)) => {
            let label = mask.crop(spec.origin, spec.size)?;
            render_vessel_sample(config, class, label, qc.clone(), job.seed)?
        }
        None => render_background_sample(config, job.seed)?,
    };
    times.synthesize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let image_path = Layout::rel_image(&job.id);
    let label_path = Layout::rel_label(&job.id);
    write_volume(&sample.image, layout.root.join(&image_path))?;
    write_volume(&sample.label, layout.root.join(&label_path))?;
    let (mut cutout_image_path, mut cutout_mask_path) = (None, None);
    if let Some(c) = &sample.cutout {
        let (ci, cm) = Layout::rel_cutout(&job.id);
        write_volume(&c.image, layout.root.join(&ci))?;
        write_volume(&c.mask, layout.root.join(&cm))?;
        cutout_image_path = Some(ci);
        cutout_mask_path = Some(cm);
    }
    times.write = t.elapsed().as_secs_f64();
    Ok((
        SampleManifestEntry {
            sample_id: job.id.clone(),
            class,
            seed: job.seed,
            image_path,
            label_path,
            qc: sample.qc,
            params_hash: hash.to_string(),
            cutout_image_path,
            cutout_mask_path,
        },
        times,
    ))
}

/// Grows trees for a vessel class until `need` patches are selected.
fn select_vessel_jobs(
    config: &DatasetConfig,
    stream: Stream,
    class: SampleClass,
    need: usize,
    stats: &mut GenerationStats,
    cs: &mut ClassStats,
) -> Result<Vec<Job>> {
    let budget = need * config.tree_budget_factor;
    let mut jobs = Vec::with_capacity(need);
    let mut rejections = RejectionCounts::default();
    let mut next = 0usize;
    let mut batch = 1usize;
    while jobs.len() < need && next < budget {
        let n = batch.min(budget - next);
        let cap = config.patches.max_accepted.min(need - jobs.len());
        let harvests: Vec<Result<Harvest>> = (next..next + n)
            .into_par_iter()
            .map(|t| {
                let seed = tree_seed(config.master_seed, stream, class, t as u64);
                harvest_tree(config, class, seed, cap)
            })
            .collect();
        for h in harvests {
            let h = h?;
            cs.trees_grown += 1;
            cs.patches_attempted += h.attempts;
            cs.patches_accepted += h.accepted.len();
            if h.accepted.is_empty() {
                cs.trees_discarded += 1;
            }
            rejections.add(&h.rejections);
            stats.stage_seconds.add(&h.times);
            for (k, (spec, qc)) in h.accepted.into_iter().enumerate() {
                if jobs.len() == need {
                    break;
                }
                jobs.push(Job {
                    id: sample_id(stream, class, jobs.len()),
                    seed: patch_seed(h.seed, k as u64),
                    source: Some((Arc::clone(&h.mask), spec, qc)),
                });
            }
        }
        next += n;
        batch = (batch * 2).min(MAX_BATCH);
    }
    stats.rejections.add(&rejections);
    if jobs.len() < need {
        return Err(Error::Generation(format!(
            "{}/{class}: {} of {need} samples after {} trees (budget {budget}); rejections {}",
            stream.name(),
            jobs.len(),
            cs.trees_grown,
            serde_json::to_string(&rejections)?
        )));
    }
    Ok(jobs)
}

/// Runs the full chain and writes `manifest.jsonl` plus the volume files
/// under the output directory. Output bytes depend only on the config
/// minus `out_dir` and `workers`.
pub fn generate_dataset(config: &DatasetConfig) -> Result<(PathBuf, GenerationStats)> {
    config.validate()?;
    let root = config
        .out_dir
        .clone()
        .ok_or_else(|| Error::param("out_dir", "an output directory is required"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Generation(format!("thread pool: {e}")))?;
    pool.install(|| generate_in_pool(config, &root))
}

fn generate_in_pool(config: &DatasetConfig, root: &Path) -> Result<(PathBuf, GenerationStats)> {
    let start = Instant::now();
    let layout = Layout::create(root, config.cutout.is_some())?;
    let hash = config.params_hash()?;
    let mut stats = GenerationStats::default();
    let mut entries = Vec::new();
    for stream in [Stream::Train, Stream::Val] {
        let counts = config.counts(stream);
        for class in SampleClass::ALL {
            let need = counts.get(class);
            let mut cs = ClassStats::default();
            let jobs = if class.has_vessels() {
                select_vessel_jobs(config, stream, class, need, &mut stats, &mut cs)?
            } else {
                (0..need)
                    .map(|i| Job {
                        id: sample_id(stream, class, i),
                        seed: background_seed(config.master_seed, stream, i as u64),
                        source: None,
                    })
                    .collect()
            };
            let written: Vec<Result<(SampleManifestEntry, StageSeconds)>> = jobs
                .par_iter()
                .map(|job| render_and_write(config, class, job, &layout, &hash))
                .collect();
            for w in written {
                let (entry, times) = w?;
                stats.stage_seconds.add(&times);
                entries.push(entry);
            }
            cs.samples = need;
            stats.trees_grown += cs.trees_grown;
            stats.trees_discarded += cs.trees_discarded;
            stats.classes.insert(format!("{}/{}", stream.name(), class.name()), cs);
        }
    }
    let manifest = root.join("manifest.jsonl");
    write_manifest(&entries, &manifest)?;
    stats.wall_seconds = start.elapsed().as_secs_f64();
    Ok((manifest, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_index_layout() {
        assert_eq!(sample_index(SampleClass::LowTort, 0, 5), 5);
        assert_eq!(sample_index(SampleClass::Skull, 1, 0), (2 << 56) | (1 << 48));
    }

    #[test]
    fn ids_sort_by_counter() {
        let a = sample_id(Stream::Train, SampleClass::HighTort, 9);
        let b = sample_id(Stream::Train, SampleClass::HighTort, 10);
        assert_eq!(a, "train_high_tort_000009");
        assert!(a < b);
    }
}
