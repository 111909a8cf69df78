//! The `arel` command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use arel_core::harness::{self, CorpusSpec, Generator};
use arel_core::metrics::{metric_attack, AlbumScores, AttackConfig, CiderStats, Metric, MetricReport, MetricScores};
use arel_core::numerics::Activation;
use arel_core::objectives::{self, EntropyMode, TrainConfig, TrainMode};
use arel_core::policy::{Album, Policy, PolicyDims, RawAlbum, Story, STORY_LEN};
use arel_core::reward::{RewardDims, RewardModel};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checkpoint::Checkpoint;
use crate::dataset::{read_dataset, write_dataset};
use crate::reports::{histogram_csv, metric_csv, reward_csv, LogFile};
use crate::vocab_file::{read_vocab, write_vocab};

#[derive(Parser, Debug)]
#[command(name = "arel", version, about = "Adversarial reward learning for multi-sentence story generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus as train/val/test files.
    GenData(GenData),
    /// Build a vocabulary from a dataset's references.
    BuildVocab(BuildVocab),
    /// Train a policy (and reward model) and write a checkpoint.
    Train(Train),
    /// Decode a split and write metric and histogram reports.
    Eval(Eval),
    /// Decode stories with beam search.
    Sample(Sample),
    /// Hill-climb one universal hypothesis against a metric.
    Attack(Attack),
    /// Learned rewards of references versus generated stories.
    RewardReport(RewardReportCmd),
    /// Ratio of occurrences of two token sets in the references.
    Stats(Stats),
}

#[derive(Args, Debug)]
pub struct GenData {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub train: usize,
    #[arg(long, default_value_t = 200)]
    pub val: usize,
    #[arg(long, default_value_t = 200)]
    pub test: usize,
    #[arg(long, default_value_t = 8)]
    pub topics: usize,
    #[arg(long, default_value_t = 64)]
    pub d_img: usize,
    #[arg(long, default_value_t = 5)]
    pub refs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
}

#[derive(Args, Debug)]
pub struct BuildVocab {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep tokens seen more than this many times.
    #[arg(long, default_value_t = 3)]
    pub min_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    XeSs,
    Arel,
    Gan1,
    Gan2,
    MetricRl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DimsArg {
    /// Small layers for single-core runs.
    Desk,
    /// 256/256/512/256 policy, 128/128 reward.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Softsign,
    Tanh,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Softsign => Activation::Softsign,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EntropyArg {
    WholeStory,
    PerToken,
}

#[derive(Args, Debug)]
pub struct Train {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Training split.
    #[arg(long)]
    pub data: PathBuf,
    /// Vocabulary; required unless --init-from is given.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Start from this checkpoint's models and vocabulary.
    #[arg(long)]
    pub init_from: Option<PathBuf>,
    /// Output checkpoint directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (one key=value line per episode).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write wall_ms=0 in the log.
    #[arg(long)]
    pub no_wall_clock: bool,
    /// Target for --mode metric-rl.
    #[arg(long)]
    pub metric: Option<String>,
    /// Reward squashing; re-initializes a loaded reward model if it differs.
    #[arg(long, value_enum)]
    pub activation: Option<ActivationArg>,
    #[arg(long, default_value_t = 50)]
    pub alt_period: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub lr: f64,
    /// Reward-model learning rate (defaults to --lr).
    #[arg(long)]
    pub reward_lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Episodes for the RL modes.
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    /// Epochs for xe-ss.
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub entropy_weight: f64,
    #[arg(long, value_enum, default_value_t = EntropyArg::WholeStory)]
    pub entropy_mode: EntropyArg,
    /// Credit each sentence with its own partial reward.
    #[arg(long)]
    pub partial_rewards: bool,
    #[arg(long, default_value_t = 0.95)]
    pub baseline_decay: f64,
    /// Final scheduled-sampling probability.
    #[arg(long, default_value_t = 0.25)]
    pub ss_max: f64,
    #[arg(long, value_enum, default_value_t = DimsArg::Desk)]
    pub dims: DimsArg,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DecodeArgs {
    #[arg(long, default_value_t = 3)]
    pub beam: usize,
    /// Minimum words per sentence before the end marker may be emitted.
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    /// Maximum tokens for the whole story, split evenly over 5 sentences.
    #[arg(long, default_value_t = 110)]
    pub max_len: usize,
}

impl DecodeArgs {
    fn sub_max(&self) -> usize {
        self.max_len / STORY_LEN
    }
}

#[derive(Args, Debug)]
pub struct Eval {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Receives metrics.csv, hist_bleu3.csv, hist_cider.csv and stories.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

#[derive(Args, Debug)]
pub struct Sample {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Decode at most this many albums.
    #[arg(long)]
    pub limit: Option<usize>,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

#[derive(Args, Debug)]
pub struct Attack {
    /// Albums whose references are attacked.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub metric: String,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Longest hypothesis considered.
    #[arg(long, default_value_t = 60)]
    pub max_len: usize,
    /// Attack only the first N albums.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Beam,
    Sample,
}

#[derive(Args, Debug)]
pub struct RewardReportCmd {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Beam)]
    pub generator: GeneratorArg,
    /// Generate with a freshly initialized policy of the same shape.
    #[arg(long)]
    pub untrained_policy: bool,
    /// Seeds sampling and the untrained policy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub decode: DecodeArgs,
}

#[derive(Args, Debug)]
pub struct Stats {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated tokens.
    #[arg(long)]
    pub set_a: String,
    /// Comma-separated tokens.
    #[arg(long)]
    pub set_b: String,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::BuildVocab(a) => build_vocab(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Sample(a) => sample(&a),
        Command::Attack(a) => attack(&a),
        Command::RewardReport(a) => reward_report(&a),
        Command::Stats(a) => stats(&a),
    }
}

fn gen_data(a: &GenData) -> Result<()> {
    let spec = CorpusSpec {
        n_albums: a.train + a.val + a.test,
        n_topics: a.topics,
        d_img: a.d_img,
        refs_per_album: a.refs,
        noise_scale: a.noise,
        seed: a.seed,
        ..CorpusSpec::default()
    };
    let corpus = harness::generate_corpus(&spec)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let (train, rest) = corpus.split_at(a.train);
    let (val, test) = rest.split_at(a.val);
    for (name, part) in [("train.tsv", train), ("val.tsv", val), ("test.tsv", test)] {
        if !part.is_empty() {
            write_dataset(&a.out_dir.join(name), part)?;
        }
    }
    println!("wrote {} / {} / {} albums to {}", train.len(), val.len(), test.len(), a.out_dir.display());
    Ok(())
}

fn build_vocab(a: &BuildVocab) -> Result<()> {
    let corpus = read_dataset(&a.data)?;
    let vocab = harness::build_vocab(&corpus, a.min_count)?;
    write_vocab(&a.out, &vocab)?;
    println!("vocabulary of {} tokens written to {}", vocab.len(), a.out.display());
    Ok(())
}

fn encode_all(raw: &[RawAlbum], cp: &Checkpoint) -> Result<Vec<Album>> {
    let max_sub_len = cp.policy.dims().max_sub_len;
    let albums = raw
        .iter()
        .map(|r| Album::encode(r, &cp.vocab, max_sub_len))
        .collect::<arel_core::Result<Vec<_>>>()?;
    let d = cp.policy.dims().d_img;
    ensure!(
        albums.iter().all(|a| a.d_img() == d),
        "features have {} dimensions, the models expect {d}",
        albums[0].d_img()
    );
    Ok(albums)
}

fn train(a: &Train) -> Result<()> {
    let raw = read_dataset(&a.data)?;
    let d_img = raw[0].features[0].len();
    let mut cp = match (&a.init_from, &a.vocab) {
        (Some(dir), _) => Checkpoint::load(dir)?,
        (None, Some(path)) => {
            let vocab = read_vocab(path)?;
            let (pdims, rdims) = match a.dims {
                DimsArg::Desk => (PolicyDims::desk(vocab.len(), d_img), RewardDims::desk(vocab.len(), d_img)),
                DimsArg::Full => (PolicyDims::full(vocab.len(), d_img), RewardDims::full(vocab.len(), d_img)),
            };
            let rdims = RewardDims {
                activation: a.activation.map(Into::into).unwrap_or_default(),
                ..rdims
            };
            Checkpoint {
                policy: Policy::new(pdims, a.seed)?,
                reward: RewardModel::new(rdims, a.seed.wrapping_add(1))?,
                vocab,
            }
        }
        (None, None) => bail!("train needs --vocab or --init-from"),
    };
    if let Some(act) = a.activation.map(Activation::from) {
        if cp.reward.dims().activation != act {
            let dims = RewardDims {
                activation: act,
                ..*cp.reward.dims()
            };
            cp.reward = RewardModel::new(dims, a.seed.wrapping_add(1))?;
        }
    }
    let metric = a.metric.as_deref().map(Metric::parse).transpose()?;
    let mode = match a.mode {
        ModeArg::XeSs => TrainMode::XeSs,
        ModeArg::Arel => TrainMode::Arel,
        ModeArg::Gan1 => TrainMode::Gan1,
        ModeArg::Gan2 => TrainMode::Gan2,
        ModeArg::MetricRl => TrainMode::parse("metric-rl", metric)?,
    };
    let config = TrainConfig {
        mode,
        alternation_period: a.alt_period,
        lr: a.lr,
        reward_lr: a.reward_lr,
        batch_size: a.batch_size,
        baseline_decay: a.baseline_decay,
        entropy_weight: a.entropy_weight,
        entropy_mode: match a.entropy_mode {
            EntropyArg::WholeStory => EntropyMode::WholeStory,
            EntropyArg::PerToken => EntropyMode::PerTokenMean,
        },
        partial_rewards: a.partial_rewards,
        episodes: a.episodes,
        epochs: a.epochs,
        ss_max: a.ss_max,
        seed: a.seed,
    };
    let albums = encode_all(&raw, &cp)?;
    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("log"));
    let mut log = LogFile::create(&log_path, !a.no_wall_clock)?;
    objectives::train(&mut cp.policy, &mut cp.reward, &albums, &config, &mut log)?;
    log.finish()?;
    cp.save(&a.out)?;
    println!("{} finished; checkpoint in {}, log in {}", mode.name(), a.out.display(), log_path.display());
    Ok(())
}

fn decode(policy: &Policy, album: &Album, d: &DecodeArgs) -> Result<Story> {
    Ok(policy.beam_search(&album.features, d.beam, d.min_len, d.sub_max())?)
}

fn story_words(story: &Story, cp: &Checkpoint) -> Vec<String> {
    cp.vocab.decode(&story.flat_words()).into_iter().map(str::to_string).collect()
}

fn raw_reference_words(album: &RawAlbum) -> Vec<Vec<String>> {
    album.references.iter().map(|r| r.iter().flatten().cloned().collect()).collect()
}

fn eval(a: &Eval) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let raw = read_dataset(&a.data)?;
    let albums = encode_all(&raw, &cp)?;
    let refs: Vec<Vec<Vec<String>>> = raw.iter().map(raw_reference_words).collect();
    let stats = CiderStats::new(&refs);
    let mut rows = Vec::with_capacity(albums.len());
    let mut stories = String::new();
    for ((album, r), refs) in albums.iter().zip(&raw).zip(&refs) {
        let story = decode(&cp.policy, album, &a.decode)?;
        stories.push_str(&format!("{}\t{}\n", album.id, story.render(&cp.vocab)));
        rows.push(AlbumScores {
            album_id: r.id.clone(),
            scores: MetricScores::compute(&story_words(&story, &cp), refs, &stats),
        });
    }
    let report = MetricReport::build(rows)?;
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("metrics.csv"), metric_csv(&report))?;
    fs::write(a.out_dir.join("hist_bleu3.csv"), histogram_csv(&report.bleu3_hist))?;
    fs::write(a.out_dir.join("hist_cider.csv"), histogram_csv(&report.cider_hist))?;
    fs::write(a.out_dir.join("stories.tsv"), stories)?;
    let m = report.mean.as_row();
    println!(
        "B1 {:.2} B2 {:.2} B3 {:.2} B4 {:.2} M {:.2} R {:.2} C {:.2}",
        100.0 * m[0],
        100.0 * m[1],
        100.0 * m[2],
        100.0 * m[3],
        100.0 * m[4],
        100.0 * m[5],
        100.0 * m[6]
    );
    Ok(())
}

fn sample(a: &Sample) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let raw = read_dataset(&a.data)?;
    let albums = encode_all(&raw, &cp)?;
    let mut out = String::new();
    for album in albums.iter().take(a.limit.unwrap_or(usize::MAX)) {
        let story = decode(&cp.policy, album, &a.decode)?;
        out.push_str(&format!("{}\t{}\n", album.id, story.render(&cp.vocab)));
    }
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn attack(a: &Attack) -> Result<()> {
    let raw = read_dataset(&a.data)?;
    let raw = &raw[..a.limit.unwrap_or(usize::MAX).min(raw.len())];
    let targets: Vec<Vec<Vec<String>>> = raw.iter().map(raw_reference_words).collect();
    let stats = CiderStats::new(&targets);
    let mut tokens: Vec<String> = targets.iter().flatten().flatten().cloned().collect();
    tokens.sort_unstable();
    tokens.dedup();
    let config = AttackConfig {
        metric: Metric::parse(&a.metric)?,
        budget: a.budget,
        seed: a.seed,
        max_len: a.max_len,
    };
    let result = metric_attack(&config, &targets, &stats, &tokens, &[]);
    let s = &result.scores;
    let text = format!(
        "hypothesis={}\ntarget={}\ntarget_score={:.6}\nbleu1={:.6}\nbleu2={:.6}\nbleu3={:.6}\nbleu4={:.6}\nmeteor_lite={:.6}\nrouge_l={:.6}\ncider={:.6}\n",
        result.hypothesis.join(" "),
        config.metric.name(),
        result.target_score,
        s.bleu[0],
        s.bleu[1],
        s.bleu[2],
        s.bleu[3],
        s.meteor,
        s.rouge_l,
        s.cider
    );
    fs::write(&a.out, &text).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{text}");
    Ok(())
}

fn reward_report(a: &RewardReportCmd) -> Result<()> {
    let cp = Checkpoint::load(&a.checkpoint)?;
    let raw = read_dataset(&a.data)?;
    let albums = encode_all(&raw, &cp)?;
    let fresh;
    let policy = if a.untrained_policy {
        fresh = Policy::new(*cp.policy.dims(), a.seed)?;
        &fresh
    } else {
        &cp.policy
    };
    let generator = match a.generator {
        GeneratorArg::Beam => Generator::Beam {
            beam: a.decode.beam,
            min_len: a.decode.min_len,
            max_len: a.decode.sub_max(),
        },
        GeneratorArg::Sample => Generator::Sample { seed: a.seed },
    };
    let report = harness::reward_report(policy, &cp.reward, &albums, generator)?;
    write_text(&a.out, &reward_csv(&report))?;
    println!(
        "mean reference {:.4}  mean generated {:.4}  gap {:.4}",
        report.mean_reference,
        report.mean_generated,
        report.gap()
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn stats(a: &Stats) -> Result<()> {
    let raw = read_dataset(&a.data)?;
    let split = |s: &str| s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect::<Vec<_>>();
    let ratio = harness::corpus_ratio(&raw, &split(&a.set_a), &split(&a.set_b))?;
    if ratio.is_infinite() {
        println!("ratio=inf");
    } else {
        println!("ratio={ratio:.6}");
    }
    Ok(())
}
