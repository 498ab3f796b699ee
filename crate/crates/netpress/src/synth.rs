//! Synthetic sequence-classification data shaped like one-hot encoded
//! categorical positions (a few of which actually matter), with a margin
//! filter and label noise.
//!
//! A sparse random teacher scores each sequence; samples are kept only
//! when the teacher's best class beats the runner-up by a margin, then a
//! fixed fraction of labels is flipped to a random other class. Because
//! only a handful of positions are informative, trained models concentrate
//! weight mass there, which is what makes them prunable and robust to
//! coarse quantization.

use rand::distributions::Distribution;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    /// Categorical positions per sequence; each becomes `letters` one-hot
    /// features, so the feature count is positions * letters.
    pub positions: usize,
    pub letters: usize,
    pub n_classes: usize,
    /// How many positions the teacher actually reads.
    pub n_informative: usize,
    pub weight_scale: f64,
    /// Required teacher-score gap between the top two classes.
    pub margin: f64,
    /// Fraction of labels flipped to a uniformly random other class.
    pub flip: f64,
    pub m_train: usize,
    pub m_val: usize,
    pub m_test: usize,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.positions == 0
            || self.letters < 2
            || self.n_classes < 2
            || self.n_informative == 0
            || self.n_informative > self.positions
            || !(0.0..=1.0).contains(&self.flip)
            || self.m_train == 0
            || self.m_val == 0
            || self.m_test == 0
        {
            return Err(Error::BadConfig("invalid synthetic data configuration".into()));
        }
        Ok(())
    }
}

/// Draw one candidate sequence into `letters_buf` and return the
/// teacher's argmax class when its score clears the runner-up by the
/// margin, else None.
fn margin_winner(
    rng: &mut impl Rng,
    teacher: &[f64],
    config: &SynthConfig,
    n_feat: usize,
    letters_buf: &mut [usize],
    scores: &mut [f64],
) -> Option<usize> {
    for slot in letters_buf.iter_mut() {
        *slot = rng.gen_range(0..config.letters);
    }
    for (k, s) in scores.iter_mut().enumerate() {
        *s = letters_buf
            .iter()
            .enumerate()
            .map(|(p, &l)| teacher[k * n_feat + p * config.letters + l])
            .sum();
    }
    let mut top = 0usize;
    for k in 1..config.n_classes {
        if scores[k] > scores[top] {
            top = k;
        }
    }
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    (scores[top] - runner_up >= config.margin).then_some(top)
}

// Viability probe: a candidate teacher must give every class at least
// this many margin wins in PROBE_DRAWS attempts, otherwise quota fill
// for the starved class would crawl or stall.
const PROBE_DRAWS: usize = 4096;
const MIN_CLASS_WINS: usize = 16;
const MAX_TEACHER_ATTEMPTS: usize = 64;
const MAX_DRY_DRAWS: usize = 200_000;

/// Generate (train, val, test) with contiguous split boundaries. Fully
/// determined by the config, including its seed.
pub fn generate<T: Scalar>(config: &SynthConfig) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
    config.validate()?;
    let n_feat = config.positions * config.letters;
    let total = config.m_train + config.m_val + config.m_test;

    let mut teacher_rng = rng_for(config.seed, "synth.teacher");
    let mut data_rng = rng_for(config.seed, "synth.data");
    let mut teacher = vec![0.0f64; config.n_classes * n_feat];
    let mut letters_buf = vec![0usize; config.positions];
    let mut scores = vec![0.0f64; config.n_classes];

    // sparse teacher: n_informative positions carry normal weights.
    // Redrawn until the probe sees every class win at the margin; a
    // lopsided teacher leaves some class with a sliver of sequence
    // space and rejection sampling for it never finishes.
    let mut viable = false;
    for _ in 0..MAX_TEACHER_ATTEMPTS {
        teacher.iter_mut().for_each(|w| *w = 0.0);
        let informative = sample(&mut teacher_rng, config.positions, config.n_informative);
        for p in informative.iter() {
            for k in 0..config.n_classes {
                for l in 0..config.letters {
                    let draw: f64 = StandardNormal.sample(&mut teacher_rng);
                    teacher[k * n_feat + p * config.letters + l] = draw * config.weight_scale;
                }
            }
        }
        let mut wins = vec![0usize; config.n_classes];
        for _ in 0..PROBE_DRAWS {
            if let Some(top) =
                margin_winner(&mut data_rng, &teacher, config, n_feat, &mut letters_buf, &mut scores)
            {
                wins[top] += 1;
            }
        }
        if wins.iter().all(|&w| w >= MIN_CLASS_WINS) {
            viable = true;
            break;
        }
    }
    if !viable {
        return Err(Error::BadConfig(
            "margin filter starves at least one class; lower the margin".into(),
        ));
    }

    // class quotas keep the benchmark balanced regardless of how the
    // teacher carves up sequence space
    let mut quota = vec![total / config.n_classes; config.n_classes];
    for k in 0..total % config.n_classes {
        quota[k] += 1;
    }

    let mut features = Matrix::<T>::zeros(total, n_feat);
    let mut labels = Vec::with_capacity(total);
    let mut filled = 0usize;
    let mut dry_draws = 0usize;
    while filled < total {
        match margin_winner(&mut data_rng, &teacher, config, n_feat, &mut letters_buf, &mut scores)
        {
            Some(top) if quota[top] > 0 => {
                quota[top] -= 1;
                let row = features.row_mut(filled);
                for (p, &l) in letters_buf.iter().enumerate() {
                    row[p * config.letters + l] = T::one();
                }
                labels.push(top);
                filled += 1;
                dry_draws = 0;
            }
            _ => {
                dry_draws += 1;
                if dry_draws > MAX_DRY_DRAWS {
                    return Err(Error::BadConfig(
                        "margin filter rejected everything; lower the margin".into(),
                    ));
                }
            }
        }
    }

    // flip floor(flip * total) labels to a random other class
    let mut flip_rng = rng_for(config.seed, "synth.flip");
    let n_flip = (config.flip * total as f64).floor() as usize;
    if n_flip > 0 {
        for i in sample(&mut flip_rng, total, n_flip).iter() {
            let bump = flip_rng.gen_range(1..config.n_classes);
            labels[i] = (labels[i] + bump) % config.n_classes;
        }
    }

    // the quota fill makes sample order informative; shuffle before
    // carving contiguous splits so each split sees the same mixture
    let mut order: Vec<usize> = (0..total).collect();
    {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng_for(config.seed, "synth.shuffle"));
    }

    let label_map: Vec<f64> = (0..config.n_classes).map(|k| k as f64).collect();
    let carve = |lo: usize, hi: usize| -> Result<Dataset<T>> {
        let mut feats = Matrix::zeros(hi - lo, n_feat);
        let mut split_labels = Vec::with_capacity(hi - lo);
        for (out, &src) in order[lo..hi].iter().enumerate() {
            feats.row_mut(out).copy_from_slice(features.row(src));
            split_labels.push(labels[src]);
        }
        Dataset::from_parts(feats, split_labels, label_map.clone())
    };
    let b1 = config.m_train;
    let b2 = b1 + config.m_val;
    Ok((carve(0, b1)?, carve(b1, b2)?, carve(b2, total)?))
}

/// The frozen benchmark fixture: 180 one-hot features from 60 positions,
/// 3 classes, 1400/600/1186 split, 3 informative positions, margin 2.0,
/// 4.5% label noise.
pub fn dna_scale_fixture<T: Scalar>(seed: u64) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
    generate(&SynthConfig {
        positions: 60,
        letters: 3,
        n_classes: 3,
        n_informative: 3,
        weight_scale: 2.0,
        margin: 2.0,
        flip: 0.045,
        m_train: 1400,
        m_val: 600,
        m_test: 1186,
        seed,
    })
}

/// A small configuration for fast end-to-end tests.
pub fn mini_config(seed: u64) -> SynthConfig {
    SynthConfig {
        positions: 8,
        letters: 3,
        n_classes: 3,
        n_informative: 2,
        weight_scale: 2.0,
        margin: 1.0,
        flip: 0.02,
        m_train: 120,
        m_val: 60,
        m_test: 60,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let (train, val, test) = dna_scale_fixture::<f64>(42).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (1400, 600, 1186));
        assert_eq!(train.n_features(), 180);
        assert_eq!(train.n_classes(), 3);
        assert_eq!(val.n_features(), 180);
        assert_eq!(test.n_classes(), 3);
    }

    #[test]
    fn rows_are_one_hot_blocks() {
        let cfg = mini_config(7);
        let (train, _, _) = generate::<f64>(&cfg).unwrap();
        for i in 0..train.len() {
            let row = train.row(i);
            for p in 0..cfg.positions {
                let block = &row[p * cfg.letters..(p + 1) * cfg.letters];
                let ones = block.iter().filter(|&&v| v == 1.0).count();
                let zeros = block.iter().filter(|&&v| v == 0.0).count();
                assert_eq!((ones, zeros), (1, cfg.letters - 1), "sample {i} position {p}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate::<f64>(&mini_config(3)).unwrap();
        let b = generate::<f64>(&mini_config(3)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        let c = generate::<f64>(&mini_config(4)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn flip_changes_exactly_the_configured_count() {
        let clean_cfg = SynthConfig { flip: 0.0, ..mini_config(11) };
        let noisy_cfg = SynthConfig { flip: 0.05, ..mini_config(11) };
        let clean = generate::<f64>(&clean_cfg).unwrap();
        let noisy = generate::<f64>(&noisy_cfg).unwrap();
        let total = clean_cfg.m_train + clean_cfg.m_val + clean_cfg.m_test;
        let expected = (0.05 * total as f64).floor() as usize;
        let count_diffs = |a: &Dataset<f64>, b: &Dataset<f64>| {
            a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count()
        };
        let diffs =
            count_diffs(&clean.0, &noisy.0) + count_diffs(&clean.1, &noisy.1) + count_diffs(&clean.2, &noisy.2);
        assert_eq!(diffs, expected);
        // features untouched by label noise
        assert_eq!(clean.0.features(), noisy.0.features());
    }

    #[test]
    fn classes_are_balanced_in_every_split() {
        let (train, val, test) = dna_scale_fixture::<f64>(42).unwrap();
        for (name, ds) in [("train", &train), ("val", &val), ("test", &test)] {
            let mut counts = [0usize; 3];
            for &l in ds.labels() {
                counts[l] += 1;
            }
            for (k, &c) in counts.iter().enumerate() {
                assert!(c > ds.len() / 5, "{name}: class {k} has only {c} of {}", ds.len());
            }
        }
    }

    #[test]
    fn impossible_margin_errors_out() {
        let cfg = SynthConfig { margin: 1e9, ..mini_config(5) };
        assert!(matches!(generate::<f64>(&cfg), Err(Error::BadConfig(_))));
    }

    #[test]
    fn config_validation() {
        assert!(generate::<f64>(&SynthConfig { n_informative: 0, ..mini_config(1) }).is_err());
        assert!(generate::<f64>(&SynthConfig { n_informative: 99, ..mini_config(1) }).is_err());
        assert!(generate::<f64>(&SynthConfig { flip: 1.5, ..mini_config(1) }).is_err());
        assert!(generate::<f64>(&SynthConfig { n_classes: 1, ..mini_config(1) }).is_err());
    }
}
